#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ckm/interpolate.hpp"

namespace ckm {

namespace {

constexpr int kLagBins = 15;
constexpr int kRangeCandidates = 80;

struct LagBin {
    double h = 0.0;
    double gamma = 0.0;
    double weight = 0.0;
};

double model_shape(VariogramModel model, double h, double range) {
    if (model == VariogramModel::exponential) return -std::expm1(-3.0 * h / range);
    if (h >= range) return 1.0;
    const double r = h / range;
    return 1.5 * r - 0.5 * r * r * r;
}

/// Weighted NNLS for γ = c0 + c1·f over the two coefficients.
void fit_two(const std::vector<LagBin>& bins, const std::vector<double>& f, double& c0, double& c1, double& sse) {
    double sw = 0, sf = 0, sff = 0, sg = 0, sfg = 0;
    for (std::size_t i = 0; i < bins.size(); ++i) {
        const double w = bins[i].weight;
        sw += w;
        sf += w * f[i];
        sff += w * f[i] * f[i];
        sg += w * bins[i].gamma;
        sfg += w * f[i] * bins[i].gamma;
    }
    auto eval = [&](double a, double b) {
        double s = 0;
        for (std::size_t i = 0; i < bins.size(); ++i) {
            const double r = bins[i].gamma - a - b * f[i];
            s += bins[i].weight * r * r;
        }
        return s;
    };
    const double det = sw * sff - sf * sf;
    double best_a = 0, best_b = 0, best = std::numeric_limits<double>::infinity();
    if (det > 1e-14 * sw * sff) {
        const double a = (sff * sg - sf * sfg) / det;
        const double b = (sw * sfg - sf * sg) / det;
        if (a >= 0.0 && b >= 0.0) {
            best_a = a;
            best_b = b;
            best = eval(a, b);
        }
    }
    if (!std::isfinite(best)) {
        // Boundary solutions: nugget only, or partial sill only.
        const double a = std::max(0.0, sg / sw);
        const double sa = eval(a, 0.0);
        const double b = sff > 0.0 ? std::max(0.0, sfg / sff) : 0.0;
        const double sb = eval(0.0, b);
        if (sa <= sb) {
            best_a = a;
            best_b = 0.0;
            best = sa;
        } else {
            best_a = 0.0;
            best_b = b;
            best = sb;
        }
    }
    c0 = best_a;
    c1 = best_b;
    sse = best;
}

}  // namespace

VariogramParams fit_variogram(std::span<const Sample> s, VariogramModel model, double grid_diagonal) {
    if (s.size() < 10) throw std::invalid_argument("fit_variogram: needs at least 10 samples");
    const std::size_t n = s.size();

    double vmin = s[0].value, vmax = s[0].value, max_d2 = 0.0, min_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        vmin = std::min(vmin, s[i].value);
        vmax = std::max(vmax, s[i].value);
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d2 = (s[i].x - s[j].x) * (s[i].x - s[j].x) + (s[i].y - s[j].y) * (s[i].y - s[j].y);
            max_d2 = std::max(max_d2, d2);
            if (d2 > 0.0) min_d2 = std::min(min_d2, d2);
        }
    }
    if (!(max_d2 > 0.0) || !(min_d2 < max_d2))
        throw std::invalid_argument("fit_variogram: needs at least two distinct pairwise distances");
    if (vmax - vmin <= 1e-12 * std::max(1.0, std::abs(vmax))) {
        VariogramParams v;
        v.model = model;
        v.nugget = 0.0;
        v.sill = 1e-12;
        v.range = grid_diagonal > 0.0 ? grid_diagonal : std::sqrt(max_d2);
        v.degenerate = true;
        return v;
    }

    const double max_lag = 0.5 * std::sqrt(max_d2);
    const double width = max_lag / kLagBins;
    std::vector<double> sum_h(kLagBins, 0.0), sum_g(kLagBins, 0.0), count(kLagBins, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double h = std::hypot(s[i].x - s[j].x, s[i].y - s[j].y);
            if (h <= 0.0 || h > max_lag) continue;
            const int b = std::min(kLagBins - 1, static_cast<int>(h / width));
            const double dv = s[i].value - s[j].value;
            sum_h[b] += h;
            sum_g[b] += 0.5 * dv * dv;
            count[b] += 1.0;
        }
    }
    std::vector<LagBin> bins;
    for (int b = 0; b < kLagBins; ++b)
        if (count[b] > 0.0) bins.push_back({sum_h[b] / count[b], sum_g[b] / count[b], count[b]});
    if (bins.size() < 2) throw std::invalid_argument("fit_variogram: too few populated lag bins");

    const double r_lo = std::max(1e-3, 0.5 * bins.front().h);
    const double r_hi = std::max(r_lo * 2.0, 2.0 * max_lag);
    VariogramParams best;
    best.model = model;
    double best_sse = std::numeric_limits<double>::infinity();
    std::vector<double> f(bins.size());
    for (int c = 0; c < kRangeCandidates; ++c) {
        const double range = r_lo * std::pow(r_hi / r_lo, static_cast<double>(c) / (kRangeCandidates - 1));
        for (std::size_t i = 0; i < bins.size(); ++i) f[i] = model_shape(model, bins[i].h, range);
        double c0 = 0, c1 = 0, sse = 0;
        fit_two(bins, f, c0, c1, sse);
        if (sse < best_sse) {
            best_sse = sse;
            best.nugget = c0;
            best.sill = c0 + c1;
            best.range = range;
        }
    }
    if (!(best.sill > 0.0)) {
        best.sill = 1e-12;
        best.degenerate = true;
    }
    return best;
}

}  // namespace ckm
