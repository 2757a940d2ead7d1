#include "ckm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ckm {

namespace {

double as_db(MapKind kind, double v) {
    if (kind == MapKind::gain_db) return v;
    if (!(v >= 0.0)) throw std::invalid_argument("nmse_db: negative power value");
    return to_db(v);
}

}  // namespace

double nmse_db(const GridMap& estimate, const GridMap& truth) {
    if (estimate.shape() != truth.shape()) throw std::invalid_argument("nmse_db: dimension mismatch");
    if (estimate.kind() != truth.kind()) throw std::invalid_argument("nmse_db: map kind mismatch");
    const MapKind kind = truth.kind();
    if (kind == MapKind::normalized || kind == MapKind::signed_watts)
        throw std::invalid_argument("nmse_db: map kind has no dB form");
    if (truth.size() == 0) throw std::invalid_argument("nmse_db: empty map");
    double sum = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double d = as_db(kind, estimate[i]) - as_db(kind, truth[i]);
        sum += d * d;
    }
    return sum / static_cast<double>(truth.size());
}

LocalizationScore localization_error(const std::vector<std::vector<Coord2>>& detections,
                                     const std::vector<std::vector<Coord2>>& truths) {
    if (detections.size() != truths.size()) throw std::invalid_argument("localization_error: scene count mismatch");
    LocalizationScore s;
    double total = 0.0;
    for (std::size_t k = 0; k < detections.size(); ++k) {
        if (truths[k].empty()) throw std::invalid_argument("localization_error: empty truth set");
        if (detections[k].empty()) {
            ++s.missed;
            continue;
        }
        double scene = 0.0;
        for (const auto& d : detections[k]) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& t : truths[k]) best = std::min(best, std::hypot(d.x - t.x, d.y - t.y));
            scene += best;
        }
        total += scene / static_cast<double>(detections[k].size());
        ++s.scored;
    }
    s.mean_error_px = s.scored > 0 ? total / static_cast<double>(s.scored) : 0.0;
    return s;
}

LocalizationScore localization_error(const std::vector<LocalizationResult>& detections,
                                     const std::vector<std::vector<Pixel>>& truths) {
    std::vector<std::vector<Coord2>> d(detections.size()), t(truths.size());
    for (std::size_t k = 0; k < detections.size(); ++k)
        for (const auto& det : detections[k].detections) d[k].push_back({double(det.coord.x), double(det.coord.y)});
    for (std::size_t k = 0; k < truths.size(); ++k)
        for (const auto& p : truths[k]) t[k].push_back({double(p.x), double(p.y)});
    return localization_error(d, t);
}

}  // namespace ckm
