#include "ckm/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <sstream>

#include "ckm/rng.hpp"

namespace ckm {

namespace fs = std::filesystem;

void DatasetConfig::validate() const {
    env.validate();
    channel.validate();
    if (n_train < 1 || n_val < 0 || n_test < 0) throw std::invalid_argument("DatasetConfig: need n_train >= 1");
    if (!(p_bs > 0.0) || !(noise_power > 0.0)) throw std::invalid_argument("DatasetConfig: powers must be positive");
    for (double p : in_powers)
        if (!(p > 0.0)) throw std::invalid_argument("DatasetConfig: IN powers must be positive");
    if (!(in_height_m >= 0.0) || in_height_m > env.max_height_m)
        throw std::invalid_argument("DatasetConfig: IN height outside [0, H]");
    if (in_min_separation_px < 0) throw std::invalid_argument("DatasetConfig: negative IN separation");
    if (!(norm_percentile >= 0.0 && norm_percentile < 0.5))
        throw std::invalid_argument("DatasetConfig: norm percentile must be in [0, 0.5)");
    if (workers < 1) throw std::invalid_argument("DatasetConfig: workers must be >= 1");
}

std::string scene_id(int index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d", index);
    return buf;
}

std::uint64_t scene_seed(std::uint64_t master, int index) {
    return derive_seed(master, 0x7363656e65 /* "scene" */, static_cast<std::uint64_t>(index));
}

std::string split_of(const DatasetConfig& cfg, int index) {
    if (index < cfg.n_train) return "train";
    if (index < cfg.n_train + cfg.n_val) return "val";
    return "test";
}

Scene make_scene(const DatasetConfig& cfg, int index) {
    Scene s;
    s.id = scene_id(index);
    s.seed = scene_seed(cfg.master_seed, index);
    EnvConfig ec = cfg.env;
    ec.seed = derive_seed(s.seed, 0x656e76 /* "env" */);
    s.env = generate_environment(ec);
    s.q_bs = default_gbs_position(s.env);
    s.p_bs = cfg.p_bs;
    s.params = cfg.channel;
    s.noise_power = cfg.noise_power;

    const GridShape shape = s.env.shape();
    std::vector<Pixel> free;
    for (int x = 0; x < shape.rows; ++x)
        for (int y = 0; y < shape.cols; ++y)
            if (s.env.height(x, y) <= 0.0f) free.push_back({x, y});
    if (free.empty() && !cfg.in_powers.empty()) throw std::runtime_error("make_scene: no building-free pixel for INs");

    Rng rng(derive_seed(s.seed, 0x696e73 /* "ins" */));
    std::vector<Pixel> placed;
    const double sep2 = static_cast<double>(cfg.in_min_separation_px) * cfg.in_min_separation_px;
    for (double p : cfg.in_powers) {
        bool ok = false;
        for (int attempt = 0; attempt < 100000 && !ok; ++attempt) {
            const Pixel c = free[rng.index(free.size())];
            ok = std::all_of(placed.begin(), placed.end(), [&](const Pixel& o) {
                const double dx = c.x - o.x, dy = c.y - o.y;
                return dx * dx + dy * dy >= sep2;
            });
            if (ok) {
                placed.push_back(c);
                s.ins.push_back({s.env.pixel_center(c, cfg.in_height_m), p});
            }
        }
        if (!ok) throw std::runtime_error("make_scene: cannot place INs with the requested separation");
    }
    return s;
}

std::string ins_csv(const Scene& scene) {
    std::string out = "m,x_px,y_px,x_m,y_m,z_m,p_w\n";
    const double res = scene.env.config().resolution_m;
    char buf[256];
    for (std::size_t m = 0; m < scene.ins.size(); ++m) {
        const auto& in = scene.ins[m];
        std::snprintf(buf, sizeof buf, "%zu,%d,%d,%.17g,%.17g,%.17g,%.17g\n", m,
                      static_cast<int>(std::floor(in.position.x / res)),
                      static_cast<int>(std::floor(in.position.y / res)), in.position.x, in.position.y, in.position.z,
                      in.power_w);
        out += buf;
    }
    return out;
}

std::vector<Interferer> parse_ins_csv(std::string_view text) {
    std::istringstream is{std::string(text)};
    std::string line;
    if (!std::getline(is, line) || line.rfind("m,x_px,y_px", 0) != 0) throw IoError("ins.csv: missing header");
    std::vector<Interferer> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::size_t m;
        int xp, yp;
        double x, y, z, p;
        if (std::sscanf(line.c_str(), "%zu,%d,%d,%lf,%lf,%lf,%lf", &m, &xp, &yp, &x, &y, &z, &p) != 7)
            throw IoError("ins.csv: malformed row '" + line + "'");
        out.push_back({{x, y, z}, p});
    }
    return out;
}

double percentile(std::vector<float>& v, double p) {
    if (v.empty()) throw std::invalid_argument("percentile: no values");
    const double rank = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const auto hi = std::min(v.size() - 1, lo + 1);
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(lo), v.end());
    const double a = v[lo];
    if (hi == lo) return a;
    const double b = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(lo) + 1, v.end());
    return a + (rank - static_cast<double>(lo)) * (b - a);
}

namespace {

fs::path scene_dir(const fs::path& root, const std::string& id) { return root / "scenes" / id; }

std::string file_name(const std::string& role) {
    if (role == "env") return "env.env";
    if (role == "ins") return "ins.csv";
    return role + ".map";
}

bool scene_complete(const fs::path& dir, const Scene& expected) {
    for (const char* role : kSceneFiles)
        if (!fs::exists(dir / file_name(role))) return false;
    try {
        const auto h = decode_map(read_file(dir / "rin.map")).header;
        return h.value("scene_id", "") == expected.id && h.value("seed", std::uint64_t{0}) == expected.seed;
    } catch (const std::exception&) {
        return false;
    }
}

void write_scene(const fs::path& dir, const Scene& scene, const SceneMaps& maps) {
    fs::create_directories(dir);
    write_environment(dir / "env.env", scene.env);
    write_map(dir / "r.map", maps.total);
    write_map(dir / "rbs.map", maps.dss);
    write_map(dir / "rin.map", maps.iss);
    write_map(dir / "sinr.map", maps.sinr);
    write_file(dir / "ins.csv", ins_csv(scene));
}

json config_json(const DatasetConfig& c) {
    return {{"env", env_config_to_json(c.env)},
            {"channel", channel_to_json(c.channel)},
            {"p_bs", c.p_bs},
            {"noise_power", c.noise_power},
            {"in_count", c.in_powers.size()},
            {"in_powers", c.in_powers},
            {"in_height_m", c.in_height_m},
            {"in_min_separation_px", c.in_min_separation_px},
            {"fading", c.fading},
            {"norm_percentile", c.norm_percentile}};
}

std::string manifest_hash(json j) {
    j.erase("dataset_hash");
    return hex64(fnv1a64(j.dump()));
}

}  // namespace

json DatasetManifest::to_json() const {
    json j;
    j["format"] = "ckm-dataset";
    j["version"] = kFormatVersion;
    j["master_seed"] = config.master_seed;
    j["splits"] = {{"train", config.n_train}, {"val", config.n_val}, {"test", config.n_test}};
    j["config"] = config_json(config);
    j["norm_bounds"] = {{"r_min_db", norm_bounds.r_min_db}, {"r_max_db", norm_bounds.r_max_db}};
    json arr = json::array();
    for (const auto& s : scenes)
        arr.push_back({{"id", s.id},
                       {"split", s.split},
                       {"seed", s.seed},
                       {"gbs_m", {s.gbs.x, s.gbs.y, s.gbs.z}},
                       {"files", s.files},
                       {"hashes", s.hashes}});
    j["scenes"] = arr;
    j["dataset_hash"] = dataset_hash.empty() ? manifest_hash(j) : dataset_hash;
    return j;
}

DatasetManifest DatasetManifest::from_json(const json& j) {
    try {
        if (j.value("format", "") != "ckm-dataset") throw IoError("manifest: not a ckm dataset manifest");
        if (j.value("version", 0) != kFormatVersion) throw IoError("manifest: unsupported version");
        DatasetManifest m;
        auto& c = m.config;
        c.master_seed = j.at("master_seed").get<std::uint64_t>();
        c.n_train = j.at("splits").at("train").get<int>();
        c.n_val = j.at("splits").at("val").get<int>();
        c.n_test = j.at("splits").at("test").get<int>();
        const json& cj = j.at("config");
        c.env = env_config_from_json(cj.at("env"));
        c.channel = channel_from_json(cj.at("channel"));
        c.p_bs = cj.at("p_bs").get<double>();
        c.noise_power = cj.at("noise_power").get<double>();
        c.in_powers = cj.at("in_powers").get<std::vector<double>>();
        c.in_height_m = cj.at("in_height_m").get<double>();
        c.in_min_separation_px = cj.at("in_min_separation_px").get<int>();
        c.fading = cj.at("fading").get<bool>();
        c.norm_percentile = cj.at("norm_percentile").get<double>();
        m.norm_bounds = {j.at("norm_bounds").at("r_min_db").get<double>(),
                         j.at("norm_bounds").at("r_max_db").get<double>()};
        for (const auto& s : j.at("scenes")) {
            SceneEntry e;
            e.id = s.at("id").get<std::string>();
            e.split = s.at("split").get<std::string>();
            e.seed = s.at("seed").get<std::uint64_t>();
            const auto g = s.at("gbs_m");
            e.gbs = {g.at(0).get<double>(), g.at(1).get<double>(), g.at(2).get<double>()};
            e.files = s.at("files");
            e.hashes = s.at("hashes");
            m.scenes.push_back(std::move(e));
        }
        m.dataset_hash = j.at("dataset_hash").get<std::string>();
        if (static_cast<int>(m.scenes.size()) != c.total())
            throw IoError("manifest: scene list does not match the split counts");
        return m;
    } catch (const json::exception& e) {
        throw IoError(std::string("manifest: ") + e.what());
    }
}

std::size_t DatasetManifest::count(std::string_view split) const {
    return static_cast<std::size_t>(
        std::count_if(scenes.begin(), scenes.end(), [&](const SceneEntry& s) { return s.split == split; }));
}

DatasetManifest generate_dataset(const DatasetConfig& cfg, const fs::path& out) {
    cfg.validate();
    const int n = cfg.total();
    std::error_code ec;
    fs::create_directories(out / "scenes", ec);
    if (ec) throw IoError("cannot create " + (out / "scenes").string() + ": " + ec.message());

    std::vector<SceneEntry> entries(n);
    std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(cfg.workers)
    for (int i = 0; i < n; ++i) {
        try {
            const Scene scene = make_scene(cfg, i);
            const fs::path dir = scene_dir(out, scene.id);
            if (!scene_complete(dir, scene)) write_scene(dir, scene, build_scene_maps(scene, cfg.fading));
            SceneEntry& e = entries[i];
            e.id = scene.id;
            e.split = split_of(cfg, i);
            e.seed = scene.seed;
            e.gbs = scene.q_bs;
            e.files = json::object();
            e.hashes = json::object();
            for (const char* role : kSceneFiles) {
                const std::string rel = "scenes/" + scene.id + "/" + file_name(role);
                e.files[role] = rel;
                e.hashes[role] = hex64(fnv1a64(read_file(out / rel)));
            }
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    // Bounds from the training split only, read back at stored precision.
    std::vector<float> db;
    db.reserve(static_cast<std::size_t>(cfg.n_train) * cfg.env.grid().size());
    for (int i = 0; i < cfg.n_train; ++i) {
        const auto rin = read_map(out / entries[i].files["rin"].get<std::string>()).map;
        for (double v : rin.data()) db.push_back(static_cast<float>(to_db(v)));
    }
    DatasetManifest m;
    m.config = cfg;
    m.config.workers = 1;
    std::vector<float> copy = db;
    m.norm_bounds.r_min_db = percentile(db, cfg.norm_percentile);
    m.norm_bounds.r_max_db = percentile(copy, 1.0 - cfg.norm_percentile);
    if (!(m.norm_bounds.r_max_db > m.norm_bounds.r_min_db)) m.norm_bounds.r_max_db = m.norm_bounds.r_min_db + 1.0;
    m.scenes = std::move(entries);
    const json j = m.to_json();
    m.dataset_hash = j.at("dataset_hash").get<std::string>();
    write_file(out / "manifest.json", j.dump(2) + "\n");
    return m;
}

DatasetManifest load_manifest(const fs::path& dir) {
    const fs::path p = dir / "manifest.json";
    if (!fs::exists(p)) throw IoError(p.string() + ": manifest not found (incomplete or missing dataset)");
    json j;
    try {
        j = json::parse(read_file(p));
    } catch (const json::exception& e) {
        throw IoError(p.string() + ": " + e.what());
    }
    return DatasetManifest::from_json(j);
}

LoadedScene load_scene(const fs::path& dir, const DatasetManifest& m, const SceneEntry& e) {
    auto path = [&](const char* role) { return dir / e.files.at(role).get<std::string>(); };
    LoadedScene out;
    Scene& s = out.scene;
    s.id = e.id;
    s.seed = e.seed;
    s.env = read_environment(path("env"));
    s.q_bs = e.gbs;
    s.p_bs = m.config.p_bs;
    s.params = m.config.channel;
    s.noise_power = m.config.noise_power;
    s.ins = parse_ins_csv(read_file(path("ins")));
    out.truth.total = read_map(path("r")).map;
    out.truth.dss = read_map(path("rbs")).map;
    out.truth.iss = read_map(path("rin")).map;
    out.truth.sinr = read_map(path("sinr")).map;
    const double res = s.env.config().resolution_m;
    for (const auto& in : s.ins)
        out.in_pixels.push_back({static_cast<int>(std::floor(in.position.x / res)),
                                 static_cast<int>(std::floor(in.position.y / res))});
    return out;
}

}  // namespace ckm
