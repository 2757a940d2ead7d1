#include <catch_amalgamated.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <set>

#include "ckm/dataset.hpp"
#include "ckm/io.hpp"
#include "support.hpp"

using namespace ckm;
namespace fs = std::filesystem;

namespace {

DatasetConfig mini_config() {
    DatasetConfig c;
    c.n_train = 2;
    c.n_val = 1;
    c.n_test = 1;
    c.master_seed = 17;
    return c;
}

}  // namespace

TEST_CASE("map container round trip", "[io]") {
    GridMap m(GridShape{5, 7}, MapKind::rss_watts, 0.0, MapMeta{42, "0007"});
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = 1e-12 * static_cast<double>(i * i + 1);
    const auto d = decode_map(encode_map(m, {{"method", "idw"}}));
    CHECK(d.map.shape() == m.shape());
    CHECK(d.map.kind() == MapKind::rss_watts);
    CHECK(d.map.meta().seed == 42);
    CHECK(d.map.meta().scene_id == "0007");
    CHECK(d.header["method"] == "idw");
    CHECK(d.header["units"] == "W");
    CHECK(d.header["format"] == "ckm-grid");
    for (std::size_t i = 0; i < m.size(); ++i) REQUIRE(d.map[i] == static_cast<double>(static_cast<float>(m[i])));
}

TEST_CASE("payload is little-endian float32", "[io]") {
    const std::string bytes = encode_map(GridMap(GridShape{1, 1}, MapKind::normalized, 1.0));
    REQUIRE(bytes.substr(0, 8) == "CKMGRID1");
    const std::string tail = bytes.substr(bytes.size() - 4);
    CHECK(tail == std::string("\x00\x00\x80\x3f", 4));
    const auto len = static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[8])) |
                     static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[9])) << 8;
    CHECK(bytes.size() == 8 + 4 + len + 4);
}

TEST_CASE("mask and environment round trips", "[io]") {
    BinaryMask mask(GridShape{4, 6});
    mask.set(1, 2, true);
    mask.set(3, 5, true);
    const auto dm = decode_mask(encode_mask(mask, MapMeta{3, "m"}));
    CHECK(dm.mask == mask);
    CHECK(dm.header["kind"] == "mask");

    EnvConfig c;
    c.seed = 12;
    const Environment env = generate_environment(c);
    const Environment back = decode_environment(encode_environment(env));
    CHECK(back.heights() == env.heights());
    CHECK(back.footprints() == env.footprints());
    CHECK(back.config().seed == 12);
    CHECK(back.ratio_converged() == env.ratio_converged());
}

TEST_CASE("corrupt containers are rejected", "[io]") {
    const std::string good = encode_map(GridMap(GridShape{3, 3}, MapKind::rss_watts, 1.0));
    CHECK_THROWS_AS(decode_map("XXXXXXXX" + good.substr(8)), IoError);
    CHECK_THROWS_AS(decode_map(good.substr(0, good.size() - 1)), IoError);
    CHECK_THROWS_AS(decode_map(good.substr(0, 20)), IoError);
    CHECK_THROWS_AS(decode_map(""), IoError);
    CHECK_THROWS_AS(decode_mask(good), IoError);
    std::string bad_header = good;
    bad_header[12] = '[';
    CHECK_THROWS_AS(decode_map(bad_header), IoError);
    std::string bad_mask = encode_mask(BinaryMask(GridShape{2, 2}), {});
    bad_mask.back() = 2;
    CHECK_THROWS_AS(decode_mask(bad_mask), IoError);
    CHECK_THROWS_AS(read_map("/nonexistent/ckm/x.map"), IoError);
}

TEST_CASE("atomic writes create parent directories", "[io]") {
    const fs::path dir = test::scratch("io_write");
    write_file(dir / "a" / "b" / "c.bin", "hello");
    CHECK(read_file(dir / "a" / "b" / "c.bin") == "hello");
    write_file(dir / "a" / "b" / "c.bin", "again");
    CHECK(read_file(dir / "a" / "b" / "c.bin") == "again");
    for (const auto& e : fs::directory_iterator(dir / "a" / "b")) CHECK(e.path().filename() == "c.bin");
    fs::remove_all(dir);
}

TEST_CASE("configuration JSON round trips", "[io]") {
    EnvConfig c;
    c.built_ratio = 0.3;
    c.seed = 99;
    const EnvConfig back = env_config_from_json(env_config_to_json(c));
    CHECK(back.built_ratio == 0.3);
    CHECK(back.seed == 99);
    ChannelParams p;
    p.alpha_nlos = -31.5;
    CHECK(channel_from_json(channel_to_json(p)).alpha_nlos == -31.5);
    CHECK(hex64(fnv1a64("")) == "cbf29ce484222325");
    CHECK(hex64(fnv1a64("a")) == "af63dc4c8601ec8c");
}

TEST_CASE("interferer CSV round trip", "[dataset]") {
    Scene s = test::flat_scene(128);
    s.ins = {{{12.2, 40.1, 1.5}, 40.0}, {{100.0 / 3.0, 2.0, 1.5}, 10.0}};
    const std::string csv = ins_csv(s);
    CHECK(csv.rfind("m,x_px,y_px,x_m,y_m,z_m,p_w\n", 0) == 0);
    CHECK(csv.find("\n0,3,10,") != std::string::npos);
    const auto back = parse_ins_csv(csv);
    REQUIRE(back.size() == 2);
    CHECK(back[1].position.x == 100.0 / 3.0);
    CHECK(back[0].power_w == 40.0);
    CHECK_THROWS_AS(parse_ins_csv("x,y\n"), IoError);
    CHECK_THROWS_AS(parse_ins_csv("m,x_px,y_px,x_m,y_m,z_m,p_w\n0,1,2\n"), IoError);
}

TEST_CASE("scene ids, seeds and splits", "[dataset]") {
    const DatasetConfig c;
    CHECK(scene_id(7) == "0007");
    CHECK(scene_id(999) == "0999");
    CHECK(split_of(c, 0) == "train");
    CHECK(split_of(c, 699) == "train");
    CHECK(split_of(c, 700) == "val");
    CHECK(split_of(c, 800) == "test");
    CHECK(c.total() == 1000);
    CHECK(scene_seed(1, 2) == scene_seed(1, 2));
    CHECK(scene_seed(1, 2) != scene_seed(1, 3));
}

TEST_CASE("generated scenes place separated interferers on free ground", "[dataset]") {
    DatasetConfig c;
    c.master_seed = 4;
    for (int i = 0; i < 10; ++i) {
        const Scene s = make_scene(c, i);
        REQUIRE(s.ins.size() == 3);
        CHECK_NOTHROW(s.validate());
        for (std::size_t a = 0; a < 3; ++a) {
            CHECK(s.ins[a].position.z == 1.5);
            for (std::size_t b = a + 1; b < 3; ++b)
                CHECK(std::hypot(s.ins[a].position.x - s.ins[b].position.x, s.ins[a].position.y - s.ins[b].position.y) >=
                      40.0);
        }
    }
    CHECK(make_scene(c, 3).ins[0].position == make_scene(c, 3).ins[0].position);
}

TEST_CASE("percentile interpolates", "[dataset]") {
    std::vector<float> v{4, 1, 3, 2, 5};
    CHECK(percentile(v, 0.0) == 1.0);
    v = {4, 1, 3, 2, 5};
    CHECK(percentile(v, 1.0) == 5.0);
    v = {4, 1, 3, 2, 5};
    CHECK(percentile(v, 0.375) == 2.5);
    std::vector<float> empty;
    CHECK_THROWS_AS(percentile(empty, 0.5), std::invalid_argument);
}

TEST_CASE("mini dataset generation is deterministic and resumable", "[dataset]") {
    const fs::path a = test::scratch("ds_a"), b = test::scratch("ds_b");
    const auto t0 = std::chrono::steady_clock::now();
    const DatasetManifest ma = generate_dataset(mini_config(), a);
    CHECK(std::chrono::steady_clock::now() - t0 < std::chrono::seconds(10));
    const DatasetManifest mb = generate_dataset(mini_config(), b);
    CHECK(ma.dataset_hash == mb.dataset_hash);
    CHECK(read_file(a / "manifest.json") == read_file(b / "manifest.json"));
    CHECK(read_file(a / "scenes/0002/rin.map") == read_file(b / "scenes/0002/rin.map"));

    CHECK(ma.count("train") == 2);
    CHECK(ma.count("val") == 1);
    CHECK(ma.count("test") == 1);
    std::set<std::string> ids;
    for (const auto& s : ma.scenes) ids.insert(s.id);
    CHECK(ids.size() == 4);

    fs::remove(a / "scenes/0001/sinr.map");
    const DatasetManifest again = generate_dataset(mini_config(), a);
    CHECK(again.dataset_hash == ma.dataset_hash);
    CHECK(fs::exists(a / "scenes/0001/sinr.map"));

    const DatasetManifest loaded = load_manifest(a);
    CHECK(loaded.dataset_hash == ma.dataset_hash);
    CHECK(loaded.norm_bounds.r_min_db == ma.norm_bounds.r_min_db);
    CHECK(loaded.scenes[3].split == "test");
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("normalization bounds come from the training split", "[dataset]") {
    const fs::path dir = test::scratch("ds_bounds");
    const DatasetManifest m = generate_dataset(mini_config(), dir);
    std::vector<float> db;
    for (const auto& s : m.scenes) {
        if (s.split != "train") continue;
        const auto rin = read_map(dir / s.files["rin"].get<std::string>()).map;
        for (double v : rin.data()) db.push_back(static_cast<float>(to_db(v)));
    }
    std::vector<float> copy = db;
    CHECK(m.norm_bounds.r_min_db == percentile(db, 0.001));
    CHECK(m.norm_bounds.r_max_db == percentile(copy, 0.999));

    const LoadedScene ls = load_scene(dir, m, m.scenes[2]);
    CHECK(ls.scene.id == "0002");
    CHECK(ls.in_pixels.size() == 3);
    CHECK(ls.truth.iss.shape() == GridShape{128, 128});
    for (std::size_t i = 0; i < ls.truth.total.size(); ++i)
        REQUIRE(std::abs(ls.truth.total[i] - (ls.truth.dss[i] + ls.truth.iss[i])) <= 1e-6 * ls.truth.total[i]);
    CHECK(ls.scene.q_bs == m.scenes[2].gbs);
    fs::remove_all(dir);
}

TEST_CASE("missing manifest is an I/O error", "[dataset]") {
    const fs::path dir = test::scratch("ds_missing");
    CHECK_THROWS_AS(load_manifest(dir), IoError);
    write_file(dir / "manifest.json", "{not json");
    CHECK_THROWS_AS(load_manifest(dir), IoError);
    fs::remove_all(dir);
}
