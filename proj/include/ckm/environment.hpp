#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ckm/grid.hpp"

namespace ckm {

/// Urban scene dimensions and ITU statistical building parameters.
struct EnvConfig {
    int length_m = 512;            // L
    int width_m = 512;             // W
    int max_height_m = 120;        // H
    double resolution_m = 4.0;     // Δκ, meters per pixel
    double built_ratio = 0.25;     // a
    double buildings_per_km2 = 144.0;  // b
    double rayleigh_mean_height_m = 40.0;  // λ
    double uav_altitude_m = 120.0;     // H0
    double gbs_height_m = 25.0;        // antenna height above the local surface
    std::uint64_t seed = 0;

    /// Footprint side bounds in pixels; zero selects the ITU-derived default.
    double min_side_px = 0.0;
    double max_side_px = 0.0;
    double ratio_tolerance = 0.10;  // relative tolerance on a
    int max_attempts = 2000;
    bool strict_ratio = false;

    GridShape grid() const;
    /// Throws std::invalid_argument when the invariants do not hold.
    void validate() const;
    /// Resolved footprint side bounds (pixels).
    std::pair<double, double> side_bounds_px() const;
};

/// Axis-aligned building footprint in pixel units, [x0, x0+w) × [y0, y0+h).
struct Footprint {
    int x0 = 0;
    int y0 = 0;
    int w = 0;
    int h = 0;
    float height_m = 0.0f;
    friend bool operator==(const Footprint&, const Footprint&) = default;
};

/// Blockage set D: footprints plus the rasterized height field (max over overlaps).
class Environment {
public:
    Environment() = default;
    Environment(EnvConfig cfg, std::vector<Footprint> footprints);
    /// Reconstructs from a stored height field (footprints kept as metadata).
    Environment(EnvConfig cfg, std::vector<Footprint> footprints, std::vector<float> heights);

    const EnvConfig& config() const { return cfg_; }
    GridShape shape() const { return shape_; }
    const std::vector<Footprint>& footprints() const { return footprints_; }
    const std::vector<float>& heights() const { return heights_; }
    float height(int x, int y) const { return heights_[shape_.index(x, y)]; }

    /// Fraction of pixels with height > 0.
    double built_ratio() const;
    bool ratio_converged() const { return ratio_converged_; }
    void set_ratio_converged(bool v) { ratio_converged_ = v; }

    /// Center of pixel p at altitude z.
    Point3 pixel_center(Pixel p, double z) const;

private:
    EnvConfig cfg_{};
    GridShape shape_{};
    std::vector<Footprint> footprints_;
    std::vector<float> heights_;
    bool ratio_converged_ = true;
};

class InfeasibleConfigError : public std::runtime_error {
public:
    InfeasibleConfigError(const std::string& what, double best_ratio)
        : std::runtime_error(what), best_ratio_(best_ratio) {}
    double best_ratio() const { return best_ratio_; }

private:
    double best_ratio_;
};

/// Random building layout: count with expectation b·(L·W/1e6), Rayleigh heights
/// clamped to [0, H], layouts redrawn until the built ratio is within tolerance of a.
Environment generate_environment(const EnvConfig& cfg);

/// True when the segment from `tx` to the center of `p` at the UAV altitude
/// crosses no building volume.
bool is_los(const Environment& env, Pixel p, const Point3& tx);

/// General segment test between two points.
bool segment_clear(const Environment& env, const Point3& a, const Point3& b);

/// LoS indicator for every pixel at altitude H0 (OpenMP).
BinaryMask los_map(const Environment& env, const Point3& tx);

}  // namespace ckm
