#include "ckm/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ckm {

DenormFit fit_denormalization(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("fit_denormalization: length mismatch");
    const std::size_t n = xs.size();
    if (n < 2) throw RankDeficientError("fit_denormalization: fewer than two non-negative samples; use manifest bounds");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (!(sxx / static_cast<double>(n) >= 1e-12))
        throw RankDeficientError("fit_denormalization: reconstructed values are constant at the samples; use manifest bounds");

    // (AᵀA)⁻¹Aᵀr̂ for A = [x, 1], written in centered form.
    const double delta = sxy / sxx;
    DenormFit f;
    f.r_min_hat = my - delta * mx;
    f.r_max_hat = f.r_min_hat + delta;
    f.n_points = n;
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ys[i] - (delta * xs[i] + f.r_min_hat);
        sse += r * r;
    }
    f.residual_rms = std::sqrt(sse / static_cast<double>(n));
    return f;
}

DenormFit fit_denormalization(const GridMap& recon, const ExtractionResult& ex) {
    if (recon.shape() != ex.sample_mask.shape()) throw std::invalid_argument("fit_denormalization: shape mismatch");
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < recon.size(); ++i) {
        if (!ex.sample_mask[i] || ex.neg_mask[i]) continue;
        xs.push_back(recon[i]);
        ys.push_back(to_db(ex.magnitude[i]));
    }
    return fit_denormalization(xs, ys);
}

GridMap denormalize_map(const GridMap& recon, const DenormFit& fit) {
    GridMap out(recon.shape(), MapKind::rss_watts, 0.0, recon.meta());
    const double delta = fit.r_max_hat - fit.r_min_hat;
    for (std::size_t i = 0; i < recon.size(); ++i)
        out[i] = std::pow(10.0, (delta * recon[i] + fit.r_min_hat) / 10.0);
    return out;
}

GridMap sinr_from_iss(const GridMap& iss, const GridMap& dss_hat, double noise_power) {
    if (iss.shape() != dss_hat.shape()) throw std::invalid_argument("estimate_sinr_map: shape mismatch");
    if (!(noise_power > 0.0)) throw std::invalid_argument("estimate_sinr_map: noise power must be positive");
    GridMap out(iss.shape(), MapKind::sinr_linear, 0.0, dss_hat.meta());
    for (std::size_t i = 0; i < iss.size(); ++i) out[i] = dss_hat[i] / (iss[i] + noise_power);
    return out;
}

GridMap estimate_sinr_map(const GridMap& recon, const DenormFit& fit, const GridMap& dss_hat, double noise_power) {
    return sinr_from_iss(denormalize_map(recon, fit), dss_hat, noise_power);
}

void CfarConfig::validate() const {
    if (guard < 0) throw std::invalid_argument("CFAR: guard must be >= 0");
    if (train < 1) throw std::invalid_argument("CFAR: train must be >= 1");
    if (!(pfa > 0.0 && pfa < 1.0)) throw std::invalid_argument("CFAR: pfa must be in (0, 1)");
}

double cfar_alpha(std::size_t n, double pfa) {
    const double nn = static_cast<double>(n);
    return nn * (std::pow(pfa, -1.0 / nn) - 1.0);
}

namespace {

void check_window(GridShape shape, const CfarConfig& cfg) {
    cfg.validate();
    const int w = 2 * (cfg.guard + cfg.train) + 1;
    if (shape.rows < w || shape.cols < w) throw std::invalid_argument("localize_ins: grid smaller than the CFAR window");
}

/// Linear-domain thresholds α(N)·mean(ring) per cell.
std::vector<double> thresholds(const std::vector<double>& lin, GridShape shape, const CfarConfig& cfg) {
    const int r = cfg.guard + cfg.train;
    std::vector<double> thr(lin.size());
#pragma omp parallel for schedule(static)
    for (int x = 0; x < shape.rows; ++x) {
        for (int y = 0; y < shape.cols; ++y) {
            double sum = 0.0;
            std::size_t n = 0;
            for (int i = std::max(0, x - r); i <= std::min(shape.rows - 1, x + r); ++i) {
                for (int j = std::max(0, y - r); j <= std::min(shape.cols - 1, y + r); ++j) {
                    if (std::abs(i - x) <= cfg.guard && std::abs(j - y) <= cfg.guard) continue;
                    sum += lin[shape.index(i, j)];
                    ++n;
                }
            }
            thr[shape.index(x, y)] = cfar_alpha(n, cfg.pfa) * (sum / static_cast<double>(n));
        }
    }
    return thr;
}

std::vector<double> to_linear(const GridMap& db) {
    std::vector<double> lin(db.size());
    for (std::size_t i = 0; i < db.size(); ++i) lin[i] = std::pow(10.0, db[i] / 10.0);
    return lin;
}

}  // namespace

BinaryMask cfar_detect(const GridMap& map_db, const CfarConfig& cfg) {
    check_window(map_db.shape(), cfg);
    const auto lin = to_linear(map_db);
    const auto thr = thresholds(lin, map_db.shape(), cfg);
    BinaryMask hits(map_db.shape());
    for (std::size_t i = 0; i < lin.size(); ++i) hits.set(i, lin[i] > thr[i]);
    return hits;
}

LocalizationResult cluster_detections(const BinaryMask& hits, const GridMap& value_db,
                                      const std::vector<double>& threshold_db) {
    const GridShape shape = hits.shape();
    std::vector<char> seen(shape.size(), 0);
    std::vector<Pixel> stack;
    LocalizationResult out;
    for (int x = 0; x < shape.rows; ++x) {
        for (int y = 0; y < shape.cols; ++y) {
            const std::size_t start = shape.index(x, y);
            if (!hits[start] || seen[start]) continue;
            seen[start] = 1;
            stack.assign(1, {x, y});
            Pixel peak{x, y};
            while (!stack.empty()) {
                const Pixel p = stack.back();
                stack.pop_back();
                const double v = value_db(p.x, p.y);
                const double best = value_db(peak.x, peak.y);
                if (v > best || (v == best && p < peak)) peak = p;
                for (int dx = -1; dx <= 1; ++dx) {
                    for (int dy = -1; dy <= 1; ++dy) {
                        const int nx = p.x + dx, ny = p.y + dy;
                        if (!shape.contains(nx, ny)) continue;
                        const std::size_t k = shape.index(nx, ny);
                        if (hits[k] && !seen[k]) {
                            seen[k] = 1;
                            stack.push_back({nx, ny});
                        }
                    }
                }
            }
            const std::size_t k = shape.index(peak.x, peak.y);
            out.detections.push_back({peak, value_db[k] - threshold_db[k]});
        }
    }
    std::stable_sort(out.detections.begin(), out.detections.end(), [&](const Detection& a, const Detection& b) {
        return value_db(a.coord.x, a.coord.y) > value_db(b.coord.x, b.coord.y);
    });
    return out;
}

LocalizationResult localize_ins(const GridMap& map_db, const CfarConfig& cfg) {
    check_window(map_db.shape(), cfg);
    const auto lin = to_linear(map_db);
    const auto thr = thresholds(lin, map_db.shape(), cfg);
    BinaryMask hits(map_db.shape());
    std::vector<double> thr_db(thr.size());
    for (std::size_t i = 0; i < lin.size(); ++i) {
        hits.set(i, lin[i] > thr[i]);
        thr_db[i] = 10.0 * std::log10(thr[i]);
    }
    return cluster_detections(hits, map_db, thr_db);
}

}  // namespace ckm
