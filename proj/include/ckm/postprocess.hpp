#pragma once

#include <stdexcept>
#include <vector>

#include "ckm/grid.hpp"
#include "ckm/sampling.hpp"

namespace ckm {

/// LS estimate of the normalization bounds from non-negative sampled pixels.
struct DenormFit {
    double r_max_hat = 0.0;  // dB
    double r_min_hat = 0.0;  // dB
    std::size_t n_points = 0;
    double residual_rms = 0.0;  // dB
};

class RankDeficientError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Closed-form [r_max − r_min; r_min] = (AᵀA)⁻¹Aᵀr̂⁺ with A = [r̄⁺, 1] over
/// positions with S = 1 and B = 0. Throws RankDeficientError when r̄⁺ is constant.
DenormFit fit_denormalization(const GridMap& recon, const ExtractionResult& extraction);

/// Same solve on raw vectors (r̄⁺ normalized, r̂⁺ in dB).
DenormFit fit_denormalization(const std::vector<double>& normalized, const std::vector<double>& measured_db);

/// R̂_IN = 10^((Δ·recon + r̂_min)/10) in watts.
GridMap denormalize_map(const GridMap& recon, const DenormFit& fit);

/// Γ̂ = dss_hat / (R̂_IN + σ_z²).
GridMap estimate_sinr_map(const GridMap& recon, const DenormFit& fit, const GridMap& dss_hat, double noise_power);
GridMap sinr_from_iss(const GridMap& iss_watts, const GridMap& dss_hat, double noise_power);

struct CfarConfig {
    int guard = 2;
    int train = 4;
    double pfa = 1e-3;
    void validate() const;
};

struct Detection {
    Pixel coord;
    double score_db = 0.0;  // peak level above its threshold
};

struct LocalizationResult {
    std::vector<Detection> detections;
    std::size_t m_hat() const { return detections.size(); }
};

/// Per-cell CA-CFAR threshold multiplier for n training cells.
double cfar_alpha(std::size_t n_train, double pfa);

/// Cell-averaging 2D-CFAR on a dB map; the test runs on linear power with
/// edge-truncated training rings. Detections are 8-connected clusters, each
/// reported at its peak pixel, ordered by peak.
LocalizationResult localize_ins(const GridMap& iss_map_db, const CfarConfig& cfg = {});

/// Binary detection map before clustering.
BinaryMask cfar_detect(const GridMap& iss_map_db, const CfarConfig& cfg);

/// Clusters a detection mask; reports peaks of `value_db` and their score over `threshold_db`.
LocalizationResult cluster_detections(const BinaryMask& hits, const GridMap& value_db,
                                      const std::vector<double>& threshold_db);

}  // namespace ckm
