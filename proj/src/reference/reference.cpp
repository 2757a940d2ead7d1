#include "ckm/reference.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace ckm::reference {

BinaryMask los_map(const Environment& env, const Point3& tx) {
    const GridShape shape = env.shape();
    BinaryMask out(shape);
    for (int x = 0; x < shape.rows; ++x)
        for (int y = 0; y < shape.cols; ++y) out.set(x, y, is_los(env, {x, y}, tx));
    return out;
}

SceneMaps build_scene_maps(const Scene& scene, bool realize_fading) {
    scene.validate();
    const GridShape shape = scene.env.shape();
    const MapMeta meta{scene.seed, scene.id};
    SceneMaps maps{GridMap(shape, MapKind::rss_watts, 0.0, meta), GridMap(shape, MapKind::rss_watts, 0.0, meta),
                   GridMap(shape, MapKind::rss_watts, 0.0, meta), GridMap(shape, MapKind::sinr_linear, 0.0, meta)};
    for (int x = 0; x < shape.rows; ++x) {
        for (int y = 0; y < shape.cols; ++y) {
            const std::size_t i = shape.index(x, y);
            maps.dss[i] = scene.p_bs * std::pow(10.0, channel_gain_db(scene, scene.q_bs, {x, y}, realize_fading, kBsLink) / 10.0);
        }
    }
    for (std::size_t m = 0; m < scene.ins.size(); ++m) {
        for (int x = 0; x < shape.rows; ++x) {
            for (int y = 0; y < shape.cols; ++y) {
                const double g = channel_gain_db(scene, scene.ins[m].position, {x, y}, realize_fading, in_link(m));
                maps.iss[shape.index(x, y)] += scene.ins[m].power_w * std::pow(10.0, g / 10.0);
            }
        }
    }
    for (std::size_t i = 0; i < shape.size(); ++i) {
        maps.total[i] = maps.dss[i] + maps.iss[i];
        maps.sinr[i] = maps.dss[i] / (maps.iss[i] + scene.noise_power);
    }
    return maps;
}

namespace {

std::vector<Sample> sorted(std::span<const Sample> in) {
    std::vector<Sample> s(in.begin(), in.end());
    std::sort(s.begin(), s.end(),
              [](const Sample& a, const Sample& b) { return std::tie(a.x, a.y, a.value) < std::tie(b.x, b.y, b.value); });
    return s;
}

}  // namespace

std::vector<double> predict_knn(std::span<const Sample> in, GridShape shape, int k) {
    if (k < 1 || static_cast<int>(in.size()) < k) throw std::invalid_argument("knn: fewer samples than k");
    const auto s = sorted(in);
    std::vector<double> out(shape.size());
    std::vector<std::pair<double, int>> d(s.size());
    for (int x = 0; x < shape.rows; ++x) {
        for (int y = 0; y < shape.cols; ++y) {
            for (std::size_t i = 0; i < s.size(); ++i)
                d[i] = {(s[i].x - x) * (s[i].x - x) + (s[i].y - y) * (s[i].y - y), static_cast<int>(i)};
            std::partial_sort(d.begin(), d.begin() + k, d.end());
            double sum = 0.0;
            for (int j = 0; j < k; ++j) sum += s[d[j].second].value;
            out[shape.index(x, y)] = sum / k;
        }
    }
    return out;
}

std::vector<double> predict_idw(std::span<const Sample> in, GridShape shape, double power) {
    if (in.empty()) throw std::invalid_argument("idw: no samples");
    const auto s = sorted(in);
    std::vector<double> out(shape.size());
    for (int x = 0; x < shape.rows; ++x) {
        for (int y = 0; y < shape.cols; ++y) {
            double num = 0.0, den = 0.0, hit = 0.0;
            int hits = 0;
            for (const auto& p : s) {
                const double d2 = (p.x - x) * (p.x - x) + (p.y - y) * (p.y - y);
                if (d2 == 0.0) {
                    hit += p.value;
                    ++hits;
                } else {
                    const double w = std::pow(d2, -0.5 * power);
                    num += w * p.value;
                    den += w;
                }
            }
            out[shape.index(x, y)] = hits > 0 ? hit / hits : num / den;
        }
    }
    return out;
}

LocalizationResult localize_ins(const GridMap& map_db, const CfarConfig& cfg) {
    cfg.validate();
    const GridShape shape = map_db.shape();
    const int r = cfg.guard + cfg.train;
    if (shape.rows < 2 * r + 1 || shape.cols < 2 * r + 1)
        throw std::invalid_argument("localize_ins: grid smaller than the CFAR window");
    std::vector<double> lin(map_db.size());
    for (std::size_t i = 0; i < lin.size(); ++i) lin[i] = std::pow(10.0, map_db[i] / 10.0);
    BinaryMask hits(shape);
    std::vector<double> thr_db(lin.size());
    for (int x = 0; x < shape.rows; ++x) {
        for (int y = 0; y < shape.cols; ++y) {
            double sum = 0.0;
            std::size_t n = 0;
            for (int i = x - r; i <= x + r; ++i) {
                for (int j = y - r; j <= y + r; ++j) {
                    if (!shape.contains(i, j)) continue;
                    if (std::abs(i - x) <= cfg.guard && std::abs(j - y) <= cfg.guard) continue;
                    sum += lin[shape.index(i, j)];
                    ++n;
                }
            }
            const double thr = cfar_alpha(n, cfg.pfa) * (sum / static_cast<double>(n));
            const std::size_t k = shape.index(x, y);
            hits.set(k, lin[k] > thr);
            thr_db[k] = 10.0 * std::log10(thr);
        }
    }
    return cluster_detections(hits, map_db, thr_db);
}

}  // namespace ckm::reference
