#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "ckm/dataset.hpp"
#include "ckm/interpolate.hpp"
#include "ckm/pipeline.hpp"
#include "support.hpp"

using namespace ckm;
using Catch::Approx;

namespace {

/// Distinct random pixels with uniform values in [0, 1].
std::vector<Sample> random_samples(std::mt19937_64& g, GridShape shape, int n) {
    std::vector<std::size_t> idx(shape.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), g);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Sample> s;
    for (int i = 0; i < n; ++i)
        s.push_back({static_cast<double>(idx[i] / shape.cols), static_cast<double>(idx[i] % shape.cols), u(g)});
    return s;
}

double at(const std::vector<double>& v, GridShape shape, const Sample& s) {
    return v[shape.index(static_cast<int>(s.x), static_cast<int>(s.y))];
}

ReconstructorConfig method_cfg(Method m) {
    ReconstructorConfig c;
    c.method = m;
    return c;
}

}  // namespace

TEST_CASE("every method reproduces a constant field", "[interp]") {
    const GridShape shape{24, 24};
    std::mt19937_64 g(1);
    auto s = random_samples(g, shape, 30);
    for (auto& p : s) p.value = 0.375;
    for (Method m : {Method::knn, Method::idw, Method::rbf, Method::kriging}) {
        const GridMap out = reconstruct(s, shape, method_cfg(m));
        INFO(to_string(m));
        for (std::size_t i = 0; i < out.size(); ++i) REQUIRE(out[i] == Approx(0.375).margin(1e-9));
    }
}

TEST_CASE("one-nearest-neighbor of a single sample is that value everywhere", "[interp]") {
    const std::vector<Sample> s{{3.0, 5.0, 0.8}};
    const auto v = predict_knn(s, GridShape{10, 12}, 1);
    for (double x : v) REQUIRE(x == 0.8);
}

TEST_CASE("IDW on bilinear corners", "[interp]") {
    const GridShape shape{8, 8};
    auto f = [](double x, double y) { return 0.1 + 0.05 * x + 0.02 * y + 0.01 * x * y; };
    const std::vector<Sample> s{{0, 0, f(0, 0)}, {0, 7, f(0, 7)}, {7, 0, f(7, 0)}, {7, 7, f(7, 7)}};
    const auto v = predict_idw(s, shape, 2.0);
    for (const auto& p : s) CHECK(at(v, shape, p) == p.value);
    // Pixel (3, 4): brute-force weights 1/d².
    double num = 0, den = 0;
    for (const auto& p : s) {
        const double w = 1.0 / ((p.x - 3) * (p.x - 3) + (p.y - 4) * (p.y - 4));
        num += w * p.value;
        den += w;
    }
    CHECK(v[shape.index(3, 4)] == Approx(num / den).epsilon(1e-14));
    CHECK(v[shape.index(3, 4)] >= f(0, 0));
    CHECK(v[shape.index(3, 4)] <= f(7, 7));
}

TEST_CASE("exact methods reproduce samples over random instances", "[interp]") {
    std::mt19937_64 g(2024);
    VariogramParams vg;
    vg.nugget = 0.0;
    vg.sill = 1.0;
    vg.range = 12.0;
    for (int trial = 0; trial < 200; ++trial) {
        const GridShape shape{16 + trial % 17, 16 + trial % 13};
        const auto s = random_samples(g, shape, 5 + trial % 40);
        const auto k1 = predict_knn(s, shape, 1);
        const auto rbf = predict_rbf(s, shape, RbfKernel::gaussian, 0.0, 0.0);
        const auto kr = predict_kriging(s, shape, vg, 0.0);
        for (const auto& p : s) {
            REQUIRE(at(k1, shape, p) == p.value);
            REQUIRE(std::abs(at(rbf, shape, p) - p.value) <= 1e-6);
            REQUIRE(std::abs(at(kr, shape, p) - p.value) <= 1e-6);
        }
    }
}

TEST_CASE("KNN and IDW stay within the sample range", "[interp]") {
    std::mt19937_64 g(77);
    for (int trial = 0; trial < 200; ++trial) {
        const GridShape shape{20, 20 + trial % 9};
        const auto s = random_samples(g, shape, 3 + trial % 50);
        const auto [lo, hi] = std::minmax_element(s.begin(), s.end(), [](auto& a, auto& b) { return a.value < b.value; });
        const double k = 1 + trial % std::min<int>(7, static_cast<int>(s.size()));
        for (const auto& v : {predict_knn(s, shape, static_cast<int>(k)), predict_idw(s, shape, 1.0 + trial % 4)})
            for (double x : v) {
                REQUIRE(x >= lo->value);
                REQUIRE(x <= hi->value);
            }
    }
}

TEST_CASE("reconstruction does not depend on sample order", "[interp]") {
    std::mt19937_64 g(5);
    const GridShape shape{32, 32};
    auto s = random_samples(g, shape, 60);
    for (Method m : {Method::knn, Method::idw, Method::rbf, Method::kriging}) {
        const GridMap a = reconstruct(s, shape, method_cfg(m));
        auto t = s;
        std::shuffle(t.begin(), t.end(), g);
        const GridMap b = reconstruct(t, shape, method_cfg(m));
        INFO(to_string(m));
        for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a[i] == b[i]);
    }
}

TEST_CASE("reconstruction output is clamped and keeps metadata", "[interp]") {
    const GridShape shape{16, 16};
    GridMap pre(shape, MapKind::normalized, 0.0, MapMeta{9, "x"});
    BinaryMask mask(shape);
    std::mt19937_64 g(3);
    for (const auto& p : random_samples(g, shape, 40)) {
        pre(static_cast<int>(p.x), static_cast<int>(p.y)) = p.value;
        mask.set(static_cast<int>(p.x), static_cast<int>(p.y), true);
    }
    ReconstructorConfig c = method_cfg(Method::rbf);
    c.rbf_kernel = RbfKernel::thin_plate;
    const GridMap out = reconstruct(pre, mask, c);
    CHECK(out.kind() == MapKind::normalized);
    CHECK(out.meta().scene_id == "x");
    CHECK_NOTHROW(out.validate());
}

TEST_CASE("reconstruction preconditions", "[interp]") {
    const GridShape shape{16, 16};
    const std::vector<Sample> two{{1, 1, 0.1}, {2, 2, 0.2}};
    CHECK_THROWS_AS(predict_knn(two, shape, 3), std::invalid_argument);
    CHECK_THROWS_AS(predict_rbf(two, shape, RbfKernel::gaussian, 0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(predict_idw({}, shape, 2.0), std::invalid_argument);
    std::vector<Sample> line;
    for (int i = 0; i < 12; ++i) line.push_back({static_cast<double>(i), static_cast<double>(i), 0.05 * i});
    CHECK_THROWS_AS(predict_rbf(line, shape, RbfKernel::thin_plate, 0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(reconstruct(line, shape, method_cfg(Method::kriging)), std::invalid_argument);
    ReconstructorConfig bad;
    bad.knn_k = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = {};
    bad.idw_power = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = {};
    bad.regularization = -1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    CHECK_THROWS_AS(method_from_string("spline"), std::invalid_argument);
    CHECK(method_from_string("kriging") == Method::kriging);
    CHECK(rbf_kernel_from_string(to_string(RbfKernel::multiquadric)) == RbfKernel::multiquadric);
}

TEST_CASE("an unrescuable system reports its condition estimate", "[interp]") {
    std::mt19937_64 g(8);
    const auto s = random_samples(g, GridShape{16, 16}, 30);
    VariogramParams vg;
    vg.sill = 1e-200;
    vg.range = 5.0;
    try {
        predict_kriging(s, GridShape{16, 16}, vg, 0.0);
        FAIL("expected IllConditionedError");
    } catch (const IllConditionedError& e) {
        CHECK(std::string(e.what()).find("rcond estimate") != std::string::npos);
        CHECK(e.rcond() < 1e-13);
    }
}

TEST_CASE("convergence with sampling rate on a single-interferer scene", "[interp]") {
    DatasetConfig cfg;
    cfg.in_powers = {40.0};
    cfg.fading = false;
    cfg.master_seed = 3;
    double lo = 0.0, hi = 0.0;
    for (int i = 0; i < 10; ++i) {
        LoadedScene ls;
        ls.scene = make_scene(cfg, i);
        ls.scene.params.sigma2_shadow = ls.scene.params.sigma2_fade = 0.0;
        ls.truth = build_scene_maps(ls.scene, false);
        std::vector<float> db;
        for (double v : ls.truth.iss.data()) db.push_back(static_cast<float>(to_db(v)));
        const NormBounds b{percentile(db, 0.001), percentile(db, 0.999)};
        PipelineOptions opt;
        opt.recon = method_cfg(Method::knn);
        opt.estimate = EstimateMode::oracle;
        opt.seed = static_cast<std::uint64_t>(i);
        opt.rate = 0.05;
        lo += run_pipeline(ls, b, opt).iss_nmse_db;
        opt.rate = 0.5;
        hi += run_pipeline(ls, b, opt).iss_nmse_db;
    }
    CHECK(hi <= lo);
}

TEST_CASE("degenerate variogram for constant values", "[variogram]") {
    std::mt19937_64 g(1);
    auto s = random_samples(g, GridShape{32, 32}, 20);
    for (auto& p : s) p.value = 4.0;
    const auto v = fit_variogram(s, VariogramModel::exponential, 45.0);
    CHECK(v.degenerate);
    CHECK(v.nugget == 0.0);
    CHECK(v.sill <= 1e-9);
    CHECK(v.range == 45.0);
}

TEST_CASE("variogram of white noise has unit sill", "[variogram]") {
    std::vector<double> sills;
    for (int seed = 0; seed < 20; ++seed) {
        std::mt19937_64 g(static_cast<std::uint64_t>(seed));
        std::normal_distribution<double> n01;
        auto s = random_samples(g, GridShape{128, 128}, 300);
        for (auto& p : s) p.value = n01(g);
        for (VariogramModel m : {VariogramModel::exponential, VariogramModel::spherical}) {
            const auto v = fit_variogram(s, m, std::hypot(128.0, 128.0));
            REQUIRE(v.nugget >= 0.0);
            REQUIRE(v.sill >= v.nugget);
            REQUIRE(v.range > 0.0);
            if (m == VariogramModel::exponential) sills.push_back(v.sill);
        }
    }
    std::sort(sills.begin(), sills.end());
    const double med = 0.5 * (sills[9] + sills[10]);
    CHECK(med == Approx(1.0).epsilon(0.30));
}

TEST_CASE("variogram preconditions", "[variogram]") {
    const std::vector<Sample> two{{0, 0, 1.0}, {1, 1, 2.0}};
    CHECK_THROWS_AS(fit_variogram(two, VariogramModel::exponential, 10.0), std::invalid_argument);
    std::vector<Sample> same_spot(12, Sample{3, 3, 1.0});
    same_spot[0].value = 2.0;
    CHECK_THROWS_AS(fit_variogram(same_spot, VariogramModel::spherical, 10.0), std::invalid_argument);
}

TEST_CASE("variogram model shapes", "[variogram]") {
    VariogramParams v;
    v.nugget = 0.2;
    v.sill = 1.2;
    v.range = 10.0;
    CHECK(v.gamma(0.0) == 0.0);
    CHECK(v.covariance(0.0) == 1.2);
    v.model = VariogramModel::spherical;
    CHECK(v.gamma(10.0) == Approx(1.2));
    CHECK(v.gamma(50.0) == Approx(1.2));
    CHECK(v.gamma(5.0) < 1.2);
}
