#pragma once

#include <cstdint>
#include <vector>

#include "ckm/environment.hpp"
#include "ckm/grid.hpp"

namespace ckm {

/// Channel parameters Φ, dB domain. Index 0 is LoS, 1 is NLoS.
struct ChannelParams {
    double alpha_los = -22.0;
    double beta_los = -28.0;
    double alpha_nlos = -28.0;
    double beta_nlos = -24.0;
    double sigma2_shadow = 1.0;  // dB²
    double sigma2_fade = 1.0;    // dB²

    double alpha(bool los) const { return los ? alpha_los : alpha_nlos; }
    double beta(bool los) const { return los ? beta_los : beta_nlos; }
    void validate() const;
};

struct Interferer {
    Point3 position;  // meters
    double power_w = 0.0;
};

struct Scene {
    Environment env;
    Point3 q_bs;
    double p_bs = 40.0;
    std::vector<Interferer> ins;
    ChannelParams params;
    double noise_power = 1e-14;  // σ_z², watts
    std::uint64_t seed = 0;
    std::string id;

    /// Throws std::invalid_argument when powers, noise or IN positions are invalid.
    void validate() const;
};

/// Ground-truth maps R_BS, R_IN, R = R_BS + R_IN, Γ = R_BS / (R_IN + σ_z²).
struct SceneMaps {
    GridMap dss;
    GridMap iss;
    GridMap total;
    GridMap sinr;
};

/// Link identifiers keying the fading stream: 0 is the GBS, m + 1 the m-th IN.
inline constexpr std::uint64_t kBsLink = 0;
inline std::uint64_t in_link(std::size_t m) { return m + 1; }

/// GBS at the center pixel, gbs_height_m above the roof (or ground) there.
Point3 default_gbs_position(const Environment& env);

/// Path-loss gain β_k + α_k·log10(d) for a known LoS state; d in meters.
double pathloss_db(const ChannelParams& params, bool los, double distance_m);

/// Gain in dB between `tx` and pixel `q` at the UAV altitude, including the
/// shadowing/fading draw keyed on (scene seed, link, pixel) when requested.
/// Throws std::domain_error at zero distance.
double channel_gain_db(const Scene& scene, const Point3& tx, Pixel q, bool realize_fading,
                       std::uint64_t link = kBsLink);

/// Full gain map for one transmitter (OpenMP over pixels).
GridMap gain_map_db(const Scene& scene, const Point3& tx, bool realize_fading, std::uint64_t link);

SceneMaps build_scene_maps(const Scene& scene, bool realize_fading);

}  // namespace ckm
