#include "ckm/environment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <tuple>

#include "ckm/rng.hpp"

namespace ckm {

namespace {

bool is_multiple(double value, double step) {
    const double q = value / step;
    return std::abs(q - std::round(q)) < 1e-9;
}

std::vector<float> rasterize(GridShape shape, const std::vector<Footprint>& footprints) {
    std::vector<float> h(shape.size(), 0.0f);
    for (const auto& f : footprints) {
        const int x1 = std::min(shape.rows, f.x0 + f.w);
        const int y1 = std::min(shape.cols, f.y0 + f.h);
        for (int x = std::max(0, f.x0); x < x1; ++x) {
            for (int y = std::max(0, f.y0); y < y1; ++y) {
                float& cell = h[shape.index(x, y)];
                cell = std::max(cell, f.height_m);
            }
        }
    }
    return h;
}

double ratio_of(const std::vector<float>& h) {
    if (h.empty()) return 0.0;
    const auto built = std::count_if(h.begin(), h.end(), [](float v) { return v > 0.0f; });
    return static_cast<double>(built) / static_cast<double>(h.size());
}

}  // namespace

GridShape EnvConfig::grid() const {
    return {static_cast<int>(std::lround(length_m / resolution_m)),
            static_cast<int>(std::lround(width_m / resolution_m))};
}

void EnvConfig::validate() const {
    if (length_m <= 0 || width_m <= 0 || max_height_m <= 0)
        throw std::invalid_argument("EnvConfig: L, W, H must be positive");
    if (!(resolution_m > 0.0)) throw std::invalid_argument("EnvConfig: resolution must be positive");
    if (!is_multiple(length_m, resolution_m) || !is_multiple(width_m, resolution_m))
        throw std::invalid_argument("EnvConfig: L and W must be multiples of the resolution");
    if (built_ratio < 0.0 || built_ratio > 1.0) throw std::invalid_argument("EnvConfig: built ratio outside [0,1]");
    if (buildings_per_km2 < 0.0) throw std::invalid_argument("EnvConfig: negative building density");
    if (!(rayleigh_mean_height_m > 0.0)) throw std::invalid_argument("EnvConfig: Rayleigh mean must be positive");
    if (!(uav_altitude_m > 0.0) || uav_altitude_m > max_height_m)
        throw std::invalid_argument("EnvConfig: UAV altitude must satisfy 0 < H0 <= H");
    if (!(gbs_height_m > 0.0)) throw std::invalid_argument("EnvConfig: GBS height must be positive");
    if (min_side_px < 0.0 || max_side_px < 0.0 || (max_side_px > 0.0 && max_side_px < min_side_px))
        throw std::invalid_argument("EnvConfig: invalid footprint side bounds");
}

std::pair<double, double> EnvConfig::side_bounds_px() const {
    if (min_side_px > 0.0 && max_side_px > 0.0) return {min_side_px, max_side_px};
    const double area_m2 = static_cast<double>(length_m) * width_m;
    const double expected = buildings_per_km2 * area_m2 / 1e6;
    if (expected <= 0.0 || built_ratio <= 0.0) return {1.0, 1.0};
    // Mean footprint area s² covers a after independent overlap: 1 - exp(-n s²/A) = a.
    const double a = std::min(built_ratio, 0.95);
    const double side_m = std::sqrt(-std::log1p(-a) * area_m2 / expected);
    const double s = side_m / resolution_m;
    return {std::max(1.0, 0.5 * s), std::max(1.0, 1.5 * s)};
}

Environment::Environment(EnvConfig cfg, std::vector<Footprint> footprints)
    : cfg_(cfg), shape_(cfg.grid()), footprints_(std::move(footprints)) {
    cfg_.validate();
    for (auto& f : footprints_) f.height_m = std::clamp(f.height_m, 0.0f, static_cast<float>(cfg_.max_height_m));
    heights_ = rasterize(shape_, footprints_);
}

Environment::Environment(EnvConfig cfg, std::vector<Footprint> footprints, std::vector<float> heights)
    : cfg_(cfg), shape_(cfg.grid()), footprints_(std::move(footprints)), heights_(std::move(heights)) {
    cfg_.validate();
    if (heights_.size() != shape_.size()) throw std::invalid_argument("Environment: height field size mismatch");
}

double Environment::built_ratio() const { return ratio_of(heights_); }

Point3 Environment::pixel_center(Pixel p, double z) const {
    return {(p.x + 0.5) * cfg_.resolution_m, (p.y + 0.5) * cfg_.resolution_m, z};
}

Environment generate_environment(const EnvConfig& cfg) {
    cfg.validate();
    const GridShape shape = cfg.grid();
    const double a = cfg.built_ratio;
    const double expected = cfg.buildings_per_km2 * static_cast<double>(cfg.length_m) * cfg.width_m / 1e6;

    if (a == 0.0 && expected == 0.0) return Environment(cfg, {});
    if (a == 0.0 || expected == 0.0)
        throw InfeasibleConfigError("built ratio and building density are jointly unsatisfiable", 0.0);

    const auto [lo, hi] = cfg.side_bounds_px();
    const int max_w = shape.rows;
    const int max_h = shape.cols;
    Rng rng(derive_seed(cfg.seed, 0x656e76 /* "env" */));

    std::vector<Footprint> best;
    double best_err = std::numeric_limits<double>::infinity();
    double best_ratio = 0.0;
    for (int attempt = 0; attempt < std::max(1, cfg.max_attempts); ++attempt) {
        const double whole = std::floor(expected);
        const auto count = static_cast<int>(whole) + (rng.bernoulli(expected - whole) ? 1 : 0);
        std::vector<Footprint> fps;
        fps.reserve(count);
        for (int i = 0; i < count; ++i) {
            Footprint f;
            f.w = std::clamp(static_cast<int>(std::lround(rng.uniform(lo, hi))), 1, max_w);
            f.h = std::clamp(static_cast<int>(std::lround(rng.uniform(lo, hi))), 1, max_h);
            f.x0 = static_cast<int>(rng.integer(0, max_w - f.w));
            f.y0 = static_cast<int>(rng.integer(0, max_h - f.h));
            const double ht = std::min<double>(cfg.max_height_m, rng.rayleigh(cfg.rayleigh_mean_height_m));
            f.height_m = static_cast<float>(ht);
            fps.push_back(f);
        }
        const double ratio = ratio_of(rasterize(shape, fps));
        const double err = std::abs(ratio - a);
        if (err < best_err) {
            best_err = err;
            best_ratio = ratio;
            best = std::move(fps);
        }
        if (err <= cfg.ratio_tolerance * a) {
            Environment env(cfg, std::move(best));
            env.set_ratio_converged(true);
            return env;
        }
    }
    if (cfg.strict_ratio)
        throw InfeasibleConfigError("built ratio not reached within the attempt budget (best " +
                                        std::to_string(best_ratio) + ")",
                                    best_ratio);
    Environment env(cfg, std::move(best));
    env.set_ratio_converged(false);
    return env;
}

bool segment_clear(const Environment& env, const Point3& a0, const Point3& b0) {
    // Canonical endpoint order makes the test exactly symmetric.
    const bool swap = std::tie(a0.x, a0.y, a0.z) > std::tie(b0.x, b0.y, b0.z);
    const Point3& a = swap ? b0 : a0;
    const Point3& b = swap ? a0 : b0;

    const double res = env.config().resolution_m;
    const GridShape shape = env.shape();
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    const double dz = b.z - a.z;
    const double horiz = std::hypot(dx, dy);
    const int n = std::max(1, static_cast<int>(std::ceil(horiz / (0.5 * res))));

    auto blocked_at = [&](double t) {
        const double x = a.x + t * dx;
        const double y = a.y + t * dy;
        const int px = static_cast<int>(std::floor(x / res));
        const int py = static_cast<int>(std::floor(y / res));
        if (!shape.contains(px, py)) return false;
        return a.z + t * dz < env.height(px, py);
    };

    if (blocked_at(0.0) || blocked_at(1.0)) return false;
    const double inv = 1.0 / n;
    for (int k = 0; k < n; ++k) {
        if (blocked_at((k + 0.5) * inv)) return false;
    }
    return true;
}

bool is_los(const Environment& env, Pixel p, const Point3& tx) {
    return segment_clear(env, tx, env.pixel_center(p, env.config().uav_altitude_m));
}

BinaryMask los_map(const Environment& env, const Point3& tx) {
    const GridShape shape = env.shape();
    BinaryMask out(shape);
    const double h0 = env.config().uav_altitude_m;
#pragma omp parallel for schedule(dynamic, 4)
    for (int x = 0; x < shape.rows; ++x) {
        for (int y = 0; y < shape.cols; ++y) {
            out.set(shape.index(x, y), segment_clear(env, tx, env.pixel_center({x, y}, h0)));
        }
    }
    return out;
}

}  // namespace ckm
