#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include "ckm/commands.hpp"
#include "ckm/dataset.hpp"
#include "ckm/io.hpp"
#include "support.hpp"

using namespace ckm;
namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(CKM_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

/// Small 64×64 dataset shared by the CLI tests.
const fs::path& dataset() {
    static const fs::path dir = [] {
        const fs::path d = test::scratch("cli_ds");
        const int code = run("gen-dataset --out " + d.string() +
                             " --seed 3 --train 2 --val 1 --test 2 --length-m 256 --width-m 256");
        if (code != 0) throw std::runtime_error("gen-dataset failed with " + std::to_string(code));
        return d;
    }();
    return dir;
}

std::string tree_digest(const fs::path& root) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::uint64_t h = fnv1a64("");
    for (const auto& f : files) h = fnv1a64(read_file(f), fnv1a64(fs::relative(f, root).string(), h));
    return hex64(h);
}

std::vector<std::vector<std::string>> csv_rows(const fs::path& p) {
    std::istringstream is(read_file(p));
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(is, line)) {
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string c;
        while (std::getline(ls, c, ',')) cells.push_back(c);
        rows.push_back(cells);
    }
    return rows;
}

}  // namespace

TEST_CASE("gen-dataset writes the manifest and scene files", "[cli]") {
    const DatasetManifest m = load_manifest(dataset());
    CHECK(m.scenes.size() == 5);
    CHECK(m.count("test") == 2);
    for (const auto& s : m.scenes)
        for (const char* role : kSceneFiles) CHECK(fs::exists(dataset() / s.files[role].get<std::string>()));
    CHECK(read_map(dataset() / "scenes/0000/rin.map").map.shape() == GridShape{64, 64});
}

TEST_CASE("reconstruct writes one normalized map per test scene", "[cli]") {
    const fs::path out = test::scratch("cli_rec");
    REQUIRE(run("reconstruct --dataset " + dataset().string() + " --out " + out.string() +
                " --method rbf --rate 0.2 --save-extraction") == 0);
    for (const char* id : {"0003", "0004"}) {
        const auto d = read_map(out / (std::string(id) + ".map"));
        CHECK(d.map.shape() == GridShape{64, 64});
        CHECK(d.map.kind() == MapKind::normalized);
        CHECK(d.header["method"] == "rbf");
        CHECK(d.header["rate"] == 0.2);
        CHECK(d.map.meta().scene_id == id);
        CHECK_NOTHROW(d.map.validate());
        CHECK(fs::exists(out / "extraction" / id / "neg_mask.map"));
        const auto mask = read_mask(out / "extraction" / id / "sample_mask.map").mask;
        CHECK(mask.count() == 819);
    }
    CHECK(csv_rows(out / "channel_estimates.csv").size() == 3);
    fs::remove_all(out);
}

TEST_CASE("commands do not modify their inputs and repeat identically", "[cli]") {
    const std::string before = tree_digest(dataset());
    const fs::path a = test::scratch("cli_idem_a"), b = test::scratch("cli_idem_b");
    for (const fs::path& out : {a, b})
        REQUIRE(run("localize --dataset " + dataset().string() + " --out " + out.string() + " --method idw --seed 5") == 0);
    CHECK(read_file(a / "localization.csv") == read_file(b / "localization.csv"));
    CHECK(tree_digest(dataset()) == before);
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("evaluate against the ground truth scores zero", "[cli]") {
    const fs::path out = test::scratch("cli_eval_gt");
    REQUIRE(run("evaluate --dataset " + dataset().string() + " --out " + out.string() + " --estimates " +
                (dataset() / "scenes").string()) == 0);
    int nmse_rows = 0;
    for (const auto& r : csv_rows(out / "eval.csv")) {
        if (r.size() != 4 || r[2].find("nmse") == std::string::npos) continue;
        CHECK(r[1] == "external");
        CHECK(std::stod(r[3]) == 0.0);
        ++nmse_rows;
    }
    CHECK(nmse_rows == 2);
    fs::remove_all(out);
}

TEST_CASE("evaluate sweeps rates and methods", "[cli]") {
    const fs::path out = test::scratch("cli_eval");
    REQUIRE(run("evaluate --dataset " + dataset().string() + " --out " + out.string() +
                " --rates 0.1,0.3 --methods knn,idw") == 0);
    const auto rows = csv_rows(out / "eval.csv");
    CHECK(rows.size() == 1 + 2 * 2 * 5);
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(std::isfinite(std::stod(rows[i][3])));
    const json j = json::parse(read_file(out / "eval.json"));
    CHECK(j["results"].size() == 4);
    fs::remove_all(out);
}

TEST_CASE("render maps dB values to gray levels", "[cli]") {
    const fs::path out = test::scratch("cli_render");
    const fs::path map = dataset() / "scenes/0000/rin.map";
    REQUIRE(run("render --input " + map.string() + " --out " + (out / "rin.pgm").string() + " --dataset " +
                dataset().string() + " --color " + (out / "rin.ppm").string() + " --ins " +
                (dataset() / "scenes/0000/ins.csv").string()) == 0);
    const std::string pgm = read_file(out / "rin.pgm");
    const std::string head = "P5\n64 64\n255\n";
    REQUIRE(pgm.substr(0, head.size()) == head);
    REQUIRE(pgm.size() == head.size() + 64 * 64);
    const GridMap m = read_map(map).map;
    const NormBounds b = load_manifest(dataset()).norm_bounds;
    for (auto [x, y] : {std::pair{0, 0}, std::pair{10, 50}, std::pair{63, 63}, std::pair{32, 7}}) {
        const double v = std::clamp((to_db(m(x, y)) - b.r_min_db) / (b.r_max_db - b.r_min_db), 0.0, 1.0);
        CHECK(static_cast<unsigned char>(pgm[head.size() + static_cast<std::size_t>(x) * 64 + y]) ==
              std::lround(255.0 * v));
    }
    CHECK(read_file(out / "rin.ppm").substr(0, 3) == "P6\n");
    const json legend = json::parse(read_file(out / "rin.legend.json"));
    CHECK(legend["true_in_count"] == 3);
    fs::remove_all(out);
}

TEST_CASE("exit codes distinguish usage, I/O and numerical failures", "[cli]") {
    const fs::path out = test::scratch("cli_codes");
    CHECK(run("--help") == 0);
    CHECK(run("") == 2);
    CHECK(run("reconstruct --dataset " + dataset().string()) == 2);
    CHECK(run("reconstruct --dataset " + dataset().string() + " --out " + out.string() + " --rate 1.5") == 2);
    CHECK(run("reconstruct --dataset " + dataset().string() + " --out " + out.string() + " --method spline") == 2);
    CHECK(run("localize --dataset " + dataset().string() + " --out " + out.string() + " --ground-truth --method knn") == 2);
    CHECK(run("reconstruct --dataset " + (out / "nope").string() + " --out " + out.string()) == 3);
    CHECK(run("localize --dataset " + dataset().string() + " --out " + out.string() + " --estimates " +
              (out / "missing").string()) == 3);
    CHECK(run("render --input " + (out / "none.map").string() + " --out " + (out / "x.pgm").string()) == 3);

    CHECK(guarded([]() -> int { throw IoError("x"); }) == kExitIo);
    CHECK(guarded([]() -> int { throw std::invalid_argument("x"); }) == kExitUsage);
    CHECK(guarded([]() -> int { throw std::runtime_error("x"); }) == kExitNumerical);
    CHECK(guarded([]() -> int { throw IllConditionedError("rcond estimate 1e-20", 1e-20); }) == kExitNumerical);
    CHECK(guarded([] { return kExitOk; }) == kExitOk);
    fs::remove_all(out);
}

TEST_CASE("scene selection by split and limit", "[cli]") {
    const DatasetManifest m = load_manifest(dataset());
    CHECK(select_scenes(m, "train", 0).size() == 2);
    CHECK(select_scenes(m, "all", 0).size() == 5);
    CHECK(select_scenes(m, "test", 1).front().id == "0003");
    CHECK_THROWS_AS(select_scenes(m, "holdout", 0), std::invalid_argument);
}
