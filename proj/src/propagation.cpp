#include "ckm/propagation.hpp"

#include <cmath>
#include <stdexcept>

#include "ckm/rng.hpp"

namespace ckm {

void ChannelParams::validate() const {
    if (!(sigma2_shadow >= 0.0) || !(sigma2_fade >= 0.0))
        throw std::invalid_argument("ChannelParams: variances must be non-negative");
}

void Scene::validate() const {
    params.validate();
    if (!(p_bs > 0.0)) throw std::invalid_argument("Scene: GBS power must be positive");
    if (!(noise_power > 0.0)) throw std::invalid_argument("Scene: noise power must be positive");
    const auto& cfg = env.config();
    const double res = cfg.resolution_m;
    for (const auto& in : ins) {
        if (!(in.power_w > 0.0)) throw std::invalid_argument("Scene: IN power must be positive");
        const auto& p = in.position;
        if (p.x < 0.0 || p.y < 0.0 || p.x >= cfg.length_m || p.y >= cfg.width_m)
            throw std::invalid_argument("Scene: IN outside the scene");
        const int px = static_cast<int>(std::floor(p.x / res));
        const int py = static_cast<int>(std::floor(p.y / res));
        if (p.z < env.height(px, py)) throw std::invalid_argument("Scene: IN inside a building");
    }
}

Point3 default_gbs_position(const Environment& env) {
    const GridShape shape = env.shape();
    const Pixel c{shape.rows / 2, shape.cols / 2};
    return env.pixel_center(c, env.height(c.x, c.y) + env.config().gbs_height_m);
}

double pathloss_db(const ChannelParams& params, bool los, double distance_m) {
    if (!(distance_m > 0.0)) throw std::domain_error("pathloss_db: zero distance");
    return params.beta(los) + params.alpha(los) * std::log10(distance_m);
}

namespace {

double gain_at(const Scene& scene, const Point3& tx, Pixel q, bool realize_fading, std::uint64_t link, double sigma) {
    const Point3 rx = scene.env.pixel_center(q, scene.env.config().uav_altitude_m);
    const double d = std::sqrt((rx.x - tx.x) * (rx.x - tx.x) + (rx.y - tx.y) * (rx.y - tx.y) +
                               (rx.z - tx.z) * (rx.z - tx.z));
    if (!(d > 0.0)) throw std::domain_error("channel_gain_db: transmitter coincides with receiver");
    const bool los = segment_clear(scene.env, tx, rx);
    double g = pathloss_db(scene.params, los, d);
    if (realize_fading && sigma > 0.0) {
        g += sigma * counter_normal(scene.seed, link, scene.env.shape().index(q.x, q.y));
    }
    return g;
}

}  // namespace

double channel_gain_db(const Scene& scene, const Point3& tx, Pixel q, bool realize_fading, std::uint64_t link) {
    const double sigma = std::sqrt(scene.params.sigma2_shadow + scene.params.sigma2_fade);
    return gain_at(scene, tx, q, realize_fading, link, sigma);
}

GridMap gain_map_db(const Scene& scene, const Point3& tx, bool realize_fading, std::uint64_t link) {
    const GridShape shape = scene.env.shape();
    GridMap out(shape, MapKind::gain_db, 0.0, {scene.seed, scene.id});
    const double sigma = std::sqrt(scene.params.sigma2_shadow + scene.params.sigma2_fade);
#pragma omp parallel for schedule(dynamic, 4)
    for (int x = 0; x < shape.rows; ++x) {
        for (int y = 0; y < shape.cols; ++y) {
            out(x, y) = gain_at(scene, tx, {x, y}, realize_fading, link, sigma);
        }
    }
    return out;
}

SceneMaps build_scene_maps(const Scene& scene, bool realize_fading) {
    scene.validate();
    const GridShape shape = scene.env.shape();
    const MapMeta meta{scene.seed, scene.id};
    SceneMaps maps{GridMap(shape, MapKind::rss_watts, 0.0, meta), GridMap(shape, MapKind::rss_watts, 0.0, meta),
                   GridMap(shape, MapKind::rss_watts, 0.0, meta), GridMap(shape, MapKind::sinr_linear, 0.0, meta)};

    const GridMap g_bs = gain_map_db(scene, scene.q_bs, realize_fading, kBsLink);
    for (std::size_t i = 0; i < shape.size(); ++i) maps.dss[i] = scene.p_bs * std::pow(10.0, g_bs[i] / 10.0);

    // Each IN contributes through its own link gain G(q, q_IN^m).
    for (std::size_t m = 0; m < scene.ins.size(); ++m) {
        const GridMap g_in = gain_map_db(scene, scene.ins[m].position, realize_fading, in_link(m));
        const double p = scene.ins[m].power_w;
        for (std::size_t i = 0; i < shape.size(); ++i) maps.iss[i] += p * std::pow(10.0, g_in[i] / 10.0);
    }

    for (std::size_t i = 0; i < shape.size(); ++i) {
        maps.total[i] = maps.dss[i] + maps.iss[i];
        maps.sinr[i] = maps.dss[i] / (maps.iss[i] + scene.noise_power);
    }
    return maps;
}

}  // namespace ckm
