#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ckm/grid.hpp"

namespace ckm {

enum class Method { knn, idw, rbf, kriging };
enum class RbfKernel { gaussian, thin_plate, multiquadric };
enum class VariogramModel { exponential, spherical };

std::string_view to_string(Method m);
std::string_view to_string(RbfKernel k);
std::string_view to_string(VariogramModel v);
Method method_from_string(std::string_view s);
RbfKernel rbf_kernel_from_string(std::string_view s);
VariogramModel variogram_from_string(std::string_view s);

struct VariogramParams {
    VariogramModel model = VariogramModel::exponential;
    double nugget = 0.0;
    double sill = 1.0;
    double range = 10.0;  // practical range, pixels
    bool degenerate = false;

    /// Semivariance γ(h); γ(0) = 0.
    double gamma(double h) const;
    /// Covariance sill − γ(h), with C(0) = sill.
    double covariance(double h) const;
};

struct ReconstructorConfig {
    Method method = Method::idw;
    int knn_k = 5;
    double idw_power = 2.0;
    RbfKernel rbf_kernel = RbfKernel::gaussian;
    double rbf_shape = 0.0;  // pixels; <= 0 selects 2 × median nearest-neighbor spacing
    VariogramModel variogram = VariogramModel::exponential;
    bool variogram_auto = true;
    VariogramParams variogram_params{};  // used when variogram_auto is false
    double regularization = 1e-8;

    void validate() const;
};

/// A measurement at pixel coordinates (x, y).
struct Sample {
    double x = 0.0;
    double y = 0.0;
    double value = 0.0;
};

class IllConditionedError : public std::runtime_error {
public:
    IllConditionedError(const std::string& what, double rcond) : std::runtime_error(what), rcond_(rcond) {}
    double rcond() const { return rcond_; }

private:
    double rcond_;
};

std::vector<Sample> collect_samples(const GridMap& values, const BinaryMask& mask);

/// Full normalized map from the sampled entries of `preprocessed`, clamped to [0, 1].
GridMap reconstruct(const GridMap& preprocessed, const BinaryMask& mask, const ReconstructorConfig& cfg);
GridMap reconstruct(std::span<const Sample> samples, GridShape shape, const ReconstructorConfig& cfg);

/// Unclamped predictions at pixel centers, one per method (OpenMP over pixels).
std::vector<double> predict_knn(std::span<const Sample> samples, GridShape shape, int k);
std::vector<double> predict_idw(std::span<const Sample> samples, GridShape shape, double power);
std::vector<double> predict_rbf(std::span<const Sample> samples, GridShape shape, RbfKernel kernel, double shape_px,
                                double regularization);
std::vector<double> predict_kriging(std::span<const Sample> samples, GridShape shape, const VariogramParams& vg,
                                    double regularization);

/// Median distance from each sample to its nearest other sample.
double median_nn_spacing(std::span<const Sample> samples);

/// Empirical semivariance in at most 15 lag bins with an LS model fit.
/// Degenerate (constant) inputs return (0, ε, diagonal) flagged.
VariogramParams fit_variogram(std::span<const Sample> samples, VariogramModel model, double grid_diagonal);

}  // namespace ckm
