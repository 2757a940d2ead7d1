#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>

#include "ckm/environment.hpp"
#include "ckm/grid.hpp"
#include "ckm/propagation.hpp"

namespace ckm {

/// Measurement indicator S and sampled total RSS R^S = S ⊙ R.
struct SampleSet {
    BinaryMask mask;
    GridMap values;
    double rate = 0.0;
};

/// Uniform sampling without replacement of floor(rate·b_L·b_W) pixels.
SampleSet draw_samples(const GridMap& total, double rate, std::uint64_t seed);
SampleSet draw_samples(const SceneMaps& maps, double rate, std::uint64_t seed);

/// Φ̂ = {α̂_k, β̂_k, 0, 0}.
struct EstimatedParams {
    double alpha_hat_los = 0.0;
    double beta_hat_los = 0.0;
    double alpha_hat_nlos = 0.0;
    double beta_hat_nlos = 0.0;
    double residual_rms = 0.0;  // dB
    bool los_fallback = false;   // prior used, too few LoS samples
    bool nlos_fallback = false;
    std::size_t n_los = 0;
    std::size_t n_nlos = 0;

    /// Channel parameters with the shadowing/fading variances zeroed.
    ChannelParams as_channel() const;
};

enum class EstimateMode { oracle, robust };

struct EstimateOptions {
    EstimateMode mode = EstimateMode::robust;
    /// Used for a LoS class with fewer than two samples.
    ChannelParams priors{};
    double trim_fraction = 0.2;
    int trim_rounds = 5;
    /// Interference-free DSS map; required by oracle mode only.
    const GridMap* dss = nullptr;
};

class SingularFitError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// LS fit of measured dB power minus 10·log10(p_bs) against [log10 d, 1] per
/// LoS class. Robust mode trims the largest positive residuals since
/// interference only adds power.
EstimatedParams estimate_pathloss(const SampleSet& samples, const Environment& env, const Point3& q_bs,
                                  double p_bs, const EstimateOptions& options = {});

struct NormBounds {
    double r_min_db = 0.0;
    double r_max_db = 0.0;
    void validate() const;
};

/// Min-max map of a dB value to [0, 1] (clamped) and its inverse.
double normalize_db(double db, const NormBounds& bounds);
double denormalize_db(double value, const NormBounds& bounds);

struct ExtractionResult {
    GridMap iss_sparse;    // R̂^S_IN, signed watts
    BinaryMask neg_mask;   // B
    GridMap magnitude;     // R̂^{S,+}_IN clamped at the power floor, sampled points only
    GridMap preprocessed;  // R̄^S_IN = N(L(R̂^{S,+}_IN)), 0 where unsampled
    NormBounds bounds;
    BinaryMask sample_mask;  // S
    GridMap dss_hat;         // R̂_BS over the whole grid
};

/// Full estimated DSS map p_bs·Ĝ(q, q_BS) from Φ̂.
GridMap estimate_dss_map(const Environment& env, const Point3& q_bs, double p_bs, const EstimatedParams& est);

/// Throws std::invalid_argument when `bounds` is empty.
ExtractionResult extract_iss(const SampleSet& samples, const EstimatedParams& est, const Environment& env,
                             const Point3& q_bs, double p_bs, const std::optional<NormBounds>& bounds);

}  // namespace ckm
