#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ckm/environment.hpp"
#include "ckm/io.hpp"
#include "ckm/propagation.hpp"
#include "ckm/sampling.hpp"

namespace ckm {

struct DatasetConfig {
    EnvConfig env{};
    ChannelParams channel{};
    int n_train = 700;
    int n_val = 100;
    int n_test = 200;
    std::uint64_t master_seed = 0;
    double p_bs = 40.0;
    double noise_power = 1e-14;
    std::vector<double> in_powers{40.0, 10.0, 10.0};  // P_IN, one entry per IN
    double in_height_m = 1.5;
    int in_min_separation_px = 10;
    bool fading = true;
    double norm_percentile = 0.001;  // lower/upper clipping fraction for norm_bounds
    int workers = 1;

    int total() const { return n_train + n_val + n_test; }
    void validate() const;
};

struct SceneEntry {
    std::string id;
    std::string split;  // train | val | test
    std::uint64_t seed = 0;
    Point3 gbs;
    json files;   // role -> relative path
    json hashes;  // role -> fnv1a64 hex
};

struct DatasetManifest {
    DatasetConfig config;
    NormBounds norm_bounds;
    std::vector<SceneEntry> scenes;
    std::string dataset_hash;

    json to_json() const;
    static DatasetManifest from_json(const json& j);
    std::size_t count(std::string_view split) const;
};

inline constexpr const char* kSceneFiles[] = {"env", "r", "rbs", "rin", "sinr", "ins"};

std::string scene_id(int index);
std::uint64_t scene_seed(std::uint64_t master, int index);
std::string split_of(const DatasetConfig& cfg, int index);

/// One scene: environment, GBS, INs with separation floor on free pixels.
Scene make_scene(const DatasetConfig& cfg, int index);

/// Writes scenes/<id>/ files and manifest.json (last, atomically). Complete
/// scenes from a previous run are kept.
DatasetManifest generate_dataset(const DatasetConfig& cfg, const std::filesystem::path& out_dir);

DatasetManifest load_manifest(const std::filesystem::path& dataset_dir);

struct LoadedScene {
    Scene scene;
    SceneMaps truth;
    std::vector<Pixel> in_pixels;
};

LoadedScene load_scene(const std::filesystem::path& dataset_dir, const DatasetManifest& manifest,
                       const SceneEntry& entry);

/// Rows of ins.csv.
std::string ins_csv(const Scene& scene);
std::vector<Interferer> parse_ins_csv(std::string_view text);

/// Interpolated percentile of the values (sorted in place).
double percentile(std::vector<float>& values, double p);

}  // namespace ckm
