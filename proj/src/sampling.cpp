#include "ckm/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "ckm/rng.hpp"

namespace ckm {

SampleSet draw_samples(const GridMap& total, double rate, std::uint64_t seed) {
    if (!(rate > 0.0) || rate > 1.0) throw std::invalid_argument("draw_samples: rate must be in (0, 1]");
    const GridShape shape = total.shape();
    const std::size_t n = shape.size();
    const auto k = static_cast<std::size_t>(std::floor(rate * static_cast<double>(n) + 1e-9));
    if (k < 1) throw std::invalid_argument("draw_samples: rate selects fewer than one pixel");

    // Partial Fisher-Yates over pixel indices.
    std::vector<std::uint32_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0u);
    Rng rng(derive_seed(seed, 0x73616d70 /* "samp" */));
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + rng.index(n - i);
        std::swap(idx[i], idx[j]);
    }

    SampleSet s{BinaryMask(shape), GridMap(shape, MapKind::rss_watts, 0.0, total.meta()), rate};
    for (std::size_t i = 0; i < k; ++i) {
        s.mask.set(idx[i], true);
        s.values[idx[i]] = total[idx[i]];
    }
    return s;
}

SampleSet draw_samples(const SceneMaps& maps, double rate, std::uint64_t seed) {
    return draw_samples(maps.total, rate, seed);
}

ChannelParams EstimatedParams::as_channel() const {
    ChannelParams p;
    p.alpha_los = alpha_hat_los;
    p.beta_los = beta_hat_los;
    p.alpha_nlos = alpha_hat_nlos;
    p.beta_nlos = beta_hat_nlos;
    p.sigma2_shadow = 0.0;
    p.sigma2_fade = 0.0;
    return p;
}

namespace {

struct Observation {
    double log_d;
    double gain_db;
};

struct LineFit {
    double alpha = 0.0;
    double beta = 0.0;
};

LineFit fit_line(const std::vector<Observation>& obs, const std::vector<std::size_t>& active) {
    const double n = static_cast<double>(active.size());
    double mx = 0.0, my = 0.0;
    for (auto i : active) {
        mx += obs[i].log_d;
        my += obs[i].gain_db;
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (auto i : active) {
        const double dx = obs[i].log_d - mx;
        sxx += dx * dx;
        sxy += dx * (obs[i].gain_db - my);
    }
    if (!(sxx > 1e-14 * n)) throw SingularFitError("estimate_pathloss: singular normal equations (samples equidistant)");
    LineFit f;
    f.alpha = sxy / sxx;
    f.beta = my - f.alpha * mx;
    return f;
}

struct ClassFit {
    LineFit line;
    double sse = 0.0;
    std::size_t used = 0;
};

ClassFit fit_class(const std::vector<Observation>& obs, const EstimateOptions& opt) {
    std::vector<std::size_t> active(obs.size());
    std::iota(active.begin(), active.end(), std::size_t{0});
    LineFit line = fit_line(obs, active);

    if (opt.mode == EstimateMode::robust) {
        for (int round = 0; round < opt.trim_rounds; ++round) {
            std::vector<std::pair<double, std::size_t>> positive;
            for (auto i : active) {
                const double r = obs[i].gain_db - (line.beta + line.alpha * obs[i].log_d);
                if (r > 0.0) positive.emplace_back(r, i);
            }
            auto drop = static_cast<std::size_t>(std::floor(opt.trim_fraction * static_cast<double>(active.size())));
            drop = std::min({drop, positive.size(), active.size() - 2});
            if (drop == 0) break;
            std::partial_sort(positive.begin(), positive.begin() + static_cast<std::ptrdiff_t>(drop), positive.end(),
                              [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
            std::vector<char> removed(obs.size(), 0);
            for (std::size_t j = 0; j < drop; ++j) removed[positive[j].second] = 1;
            std::vector<std::size_t> kept;
            kept.reserve(active.size() - drop);
            for (auto i : active)
                if (!removed[i]) kept.push_back(i);
            try {
                line = fit_line(obs, kept);
            } catch (const SingularFitError&) {
                break;
            }
            active = std::move(kept);
        }
    }

    ClassFit out{line, 0.0, active.size()};
    for (auto i : active) {
        const double r = obs[i].gain_db - (line.beta + line.alpha * obs[i].log_d);
        out.sse += r * r;
    }
    return out;
}

}  // namespace

EstimatedParams estimate_pathloss(const SampleSet& samples, const Environment& env, const Point3& q_bs, double p_bs,
                                  const EstimateOptions& options) {
    if (!(p_bs > 0.0)) throw std::invalid_argument("estimate_pathloss: GBS power must be positive");
    if (options.mode == EstimateMode::oracle && options.dss == nullptr)
        throw std::invalid_argument("estimate_pathloss: oracle mode needs the interference-free DSS map");
    const GridShape shape = samples.mask.shape();
    if (shape != env.shape()) throw std::invalid_argument("estimate_pathloss: grid mismatch");

    const double h0 = env.config().uav_altitude_m;
    const double p_db = 10.0 * std::log10(p_bs);
    std::vector<Observation> los_obs, nlos_obs;
    for (int x = 0; x < shape.rows; ++x) {
        for (int y = 0; y < shape.cols; ++y) {
            const std::size_t i = shape.index(x, y);
            if (!samples.mask[i]) continue;
            const Point3 rx = env.pixel_center({x, y}, h0);
            const double d = std::sqrt((rx.x - q_bs.x) * (rx.x - q_bs.x) + (rx.y - q_bs.y) * (rx.y - q_bs.y) +
                                       (rx.z - q_bs.z) * (rx.z - q_bs.z));
            if (!(d > 0.0)) continue;
            const double measured = options.mode == EstimateMode::oracle ? (*options.dss)[i] : samples.values[i];
            if (!(measured > 0.0)) continue;
            const Observation o{std::log10(d), 10.0 * std::log10(measured) - p_db};
            (segment_clear(env, q_bs, rx) ? los_obs : nlos_obs).push_back(o);
        }
    }

    EstimatedParams est;
    est.n_los = los_obs.size();
    est.n_nlos = nlos_obs.size();
    double sse = 0.0;
    std::size_t used = 0;
    if (los_obs.size() >= 2) {
        const ClassFit f = fit_class(los_obs, options);
        est.alpha_hat_los = f.line.alpha;
        est.beta_hat_los = f.line.beta;
        sse += f.sse;
        used += f.used;
    } else {
        est.alpha_hat_los = options.priors.alpha_los;
        est.beta_hat_los = options.priors.beta_los;
        est.los_fallback = true;
    }
    if (nlos_obs.size() >= 2) {
        const ClassFit f = fit_class(nlos_obs, options);
        est.alpha_hat_nlos = f.line.alpha;
        est.beta_hat_nlos = f.line.beta;
        sse += f.sse;
        used += f.used;
    } else {
        est.alpha_hat_nlos = options.priors.alpha_nlos;
        est.beta_hat_nlos = options.priors.beta_nlos;
        est.nlos_fallback = true;
    }
    est.residual_rms = used > 0 ? std::sqrt(sse / static_cast<double>(used)) : 0.0;
    return est;
}

void NormBounds::validate() const {
    if (!std::isfinite(r_min_db) || !std::isfinite(r_max_db) || !(r_min_db < r_max_db))
        throw std::invalid_argument("NormBounds: require finite r_min < r_max");
}

double normalize_db(double db, const NormBounds& b) {
    return std::clamp((db - b.r_min_db) / (b.r_max_db - b.r_min_db), 0.0, 1.0);
}

double denormalize_db(double value, const NormBounds& b) { return (b.r_max_db - b.r_min_db) * value + b.r_min_db; }

GridMap estimate_dss_map(const Environment& env, const Point3& q_bs, double p_bs, const EstimatedParams& est) {
    Scene s;
    s.env = env;
    s.q_bs = q_bs;
    s.p_bs = p_bs;
    s.params = est.as_channel();
    const GridMap g = gain_map_db(s, q_bs, false, kBsLink);
    GridMap out(env.shape(), MapKind::rss_watts);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = p_bs * std::pow(10.0, g[i] / 10.0);
    return out;
}

ExtractionResult extract_iss(const SampleSet& samples, const EstimatedParams& est, const Environment& env,
                             const Point3& q_bs, double p_bs, const std::optional<NormBounds>& bounds) {
    if (!bounds) throw std::invalid_argument("extract_iss: normalization bounds missing from the manifest");
    bounds->validate();
    for (double v : {est.alpha_hat_los, est.beta_hat_los, est.alpha_hat_nlos, est.beta_hat_nlos})
        if (!std::isfinite(v)) throw std::invalid_argument("extract_iss: non-finite channel estimate");

    const GridShape shape = samples.mask.shape();
    const MapMeta meta = samples.values.meta();
    ExtractionResult r{GridMap(shape, MapKind::signed_watts, 0.0, meta),
                       BinaryMask(shape),
                       GridMap(shape, MapKind::rss_watts, 0.0, meta),
                       GridMap(shape, MapKind::normalized, 0.0, meta),
                       *bounds,
                       samples.mask,
                       estimate_dss_map(env, q_bs, p_bs, est)};
    r.dss_hat.meta() = meta;

    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (!samples.mask[i]) continue;
        const double v = samples.values[i] - r.dss_hat[i];
        r.iss_sparse[i] = v;
        r.neg_mask.set(i, v < 0.0);
        const double mag = std::max(std::abs(v), kPowerFloorWatts);
        r.magnitude[i] = mag;
        r.preprocessed[i] = normalize_db(10.0 * std::log10(mag), *bounds);
    }
    return r;
}

}  // namespace ckm
