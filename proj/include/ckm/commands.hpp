#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ckm/dataset.hpp"
#include "ckm/interpolate.hpp"
#include "ckm/postprocess.hpp"
#include "ckm/sampling.hpp"

namespace ckm {

enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitIo = 3, kExitNumerical = 4 };

struct GenDatasetSpec {
    std::filesystem::path out;
    DatasetConfig config{};
};

struct ReconstructSpec {
    std::filesystem::path dataset;
    std::filesystem::path out;
    std::string split = "test";  // train | val | test | all
    int limit = 0;               // 0 = every scene of the split
    double rate = 0.2;
    std::uint64_t seed = 0;
    int workers = 1;
    ReconstructorConfig recon{};
    EstimateMode estimate = EstimateMode::robust;
    bool save_extraction = false;
};

struct LocalizeSpec {
    ReconstructSpec base{};
    std::optional<std::filesystem::path> estimates;  // <id>.map normalized maps
    bool ground_truth = false;                        // CFAR on the true ISS maps
    CfarConfig cfar{};
};

struct EvaluateSpec {
    ReconstructSpec base{};
    std::vector<double> rates{0.05, 0.10, 0.20, 0.30, 0.50};
    std::vector<Method> methods{Method::knn, Method::idw, Method::rbf, Method::kriging};
    std::optional<std::filesystem::path> estimates;  // <id>.map (normalized) or <id>/rin.map (watts)
    CfarConfig cfar{};
};

struct RenderSpec {
    std::filesystem::path input;
    std::filesystem::path out;  // .pgm
    std::optional<std::filesystem::path> dataset;
    std::optional<NormBounds> range_db;
    std::optional<std::filesystem::path> color_out;  // .ppm
    std::optional<std::filesystem::path> ins_csv;
    std::optional<std::filesystem::path> detections_csv;
    std::string scene;  // filters detections_csv rows
};

int cmd_gen_dataset(const GenDatasetSpec& spec);
int cmd_reconstruct(const ReconstructSpec& spec);
int cmd_localize(const LocalizeSpec& spec);
int cmd_evaluate(const EvaluateSpec& spec);
int cmd_render(const RenderSpec& spec);

/// Runs `fn`, mapping exceptions to exit codes with a one-line diagnostic on stderr.
int guarded(const std::function<int()>& fn);

/// Scenes of a split in id order, truncated to `limit` when positive.
std::vector<SceneEntry> select_scenes(const DatasetManifest& m, const std::string& split, int limit);

}  // namespace ckm
