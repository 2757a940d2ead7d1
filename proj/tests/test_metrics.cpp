#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "ckm/metrics.hpp"

using namespace ckm;
using Catch::Approx;

namespace {

GridMap random_power(std::uint64_t seed, GridShape shape = {16, 16}) {
    std::mt19937_64 g(seed);
    std::uniform_real_distribution<double> u(-140.0, -40.0);
    GridMap m(shape, MapKind::rss_watts);
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = std::pow(10.0, u(g) / 10.0);
    return m;
}

using Sets = std::vector<std::vector<Coord2>>;

}  // namespace

TEST_CASE("dB error of a map against itself is zero", "[metrics]") {
    const GridMap m = random_power(1);
    CHECK(nmse_db(m, m) == 0.0);
    GridMap g(GridShape{3, 3}, MapKind::gain_db, -70.0);
    CHECK(nmse_db(g, g) == 0.0);
}

TEST_CASE("uniform one dB error scores one", "[metrics]") {
    const GridMap t = random_power(2);
    GridMap e = t;
    for (std::size_t i = 0; i < e.size(); ++i) e[i] *= std::pow(10.0, 0.1);
    CHECK(nmse_db(e, t) == Approx(1.0).margin(1e-12));
    GridMap gt(GridShape{4, 4}, MapKind::gain_db, -80.0), ge(GridShape{4, 4}, MapKind::gain_db, -79.0);
    CHECK(nmse_db(ge, gt) == 1.0);
}

TEST_CASE("checkerboard three dB error scores nine", "[metrics]") {
    GridMap t(GridShape{8, 8}, MapKind::gain_db, -90.0), e = t;
    for (int x = 0; x < 8; ++x)
        for (int y = 0; y < 8; ++y) e(x, y) += (x + y) % 2 ? 3.0 : -3.0;
    CHECK(nmse_db(e, t) == 9.0);
}

TEST_CASE("dB error is symmetric and scale invariant", "[metrics]") {
    const GridMap a = random_power(3), b = random_power(4);
    CHECK(nmse_db(a, b) == Approx(nmse_db(b, a)).epsilon(1e-14));
    GridMap a2 = a, b2 = b;
    for (std::size_t i = 0; i < a.size(); ++i) {
        a2[i] *= 7.0;
        b2[i] *= 7.0;
    }
    CHECK(nmse_db(a2, b2) == Approx(nmse_db(a, b)).epsilon(1e-9));
}

TEST_CASE("dB error floors zero power", "[metrics]") {
    GridMap t(GridShape{2, 2}, MapKind::rss_watts, 1e-20), e(GridShape{2, 2}, MapKind::rss_watts, 0.0);
    CHECK(nmse_db(e, t) == 0.0);
}

TEST_CASE("dB error preconditions", "[metrics]") {
    const GridMap a(GridShape{2, 2}, MapKind::rss_watts, 1.0), b(GridShape{2, 3}, MapKind::rss_watts, 1.0);
    CHECK_THROWS_AS(nmse_db(a, b), std::invalid_argument);
    CHECK_THROWS_AS(nmse_db(a, GridMap(GridShape{2, 2}, MapKind::sinr_linear, 1.0)), std::invalid_argument);
    const GridMap n(GridShape{2, 2}, MapKind::normalized, 0.5);
    CHECK_THROWS_AS(nmse_db(n, n), std::invalid_argument);
    GridMap neg = a;
    neg[0] = -1.0;
    CHECK_THROWS_AS(nmse_db(neg, a), std::invalid_argument);
}

TEST_CASE("localization error hand cases", "[metrics]") {
    CHECK(localization_error(Sets{{{10, 10}}}, Sets{{{10, 10}}}).mean_error_px == 0.0);
    CHECK(localization_error(Sets{{{10, 10}}}, Sets{{{13, 14}}}).mean_error_px == 5.0);
    // Distances 2 and 4 from their nearest truths.
    CHECK(localization_error(Sets{{{0, 2}, {20, 24}}}, Sets{{{0, 0}, {20, 20}}}).mean_error_px == 3.0);
}

TEST_CASE("localization error over scenes with misses", "[metrics]") {
    LocalizationResult hit, miss;
    hit.detections.push_back({{13, 14}, 1.0});
    const auto s = localization_error(std::vector<LocalizationResult>{hit, miss}, std::vector<std::vector<Pixel>>{{{10, 10}}, {{5, 5}}});
    CHECK(s.mean_error_px == 5.0);
    CHECK(s.scored == 1);
    CHECK(s.missed == 1);
    CHECK_THROWS_AS(localization_error(Sets{{{1, 1}}}, Sets{{}}), std::invalid_argument);
    CHECK_THROWS_AS(localization_error(Sets{{{1, 1}}}, Sets{}), std::invalid_argument);
}

TEST_CASE("localization error scales with coordinates", "[metrics]") {
    std::mt19937_64 g(9);
    std::uniform_real_distribution<double> u(0.0, 128.0);
    std::vector<std::vector<Coord2>> d(5), t(5), d3(5), t3(5);
    for (int k = 0; k < 5; ++k) {
        for (int i = 0; i < 3; ++i) {
            d[k].push_back({u(g), u(g)});
            t[k].push_back({u(g), u(g)});
            d3[k].push_back({3 * d[k].back().x, 3 * d[k].back().y});
            t3[k].push_back({3 * t[k].back().x, 3 * t[k].back().y});
        }
    }
    CHECK(localization_error(d3, t3).mean_error_px == Approx(3.0 * localization_error(d, t).mean_error_px));
}
