#include "ckm/interpolate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <tuple>

#include <Eigen/Dense>

namespace ckm {

std::string_view to_string(Method m) {
    switch (m) {
        case Method::knn: return "knn";
        case Method::idw: return "idw";
        case Method::rbf: return "rbf";
        case Method::kriging: return "kriging";
    }
    return "unknown";
}

std::string_view to_string(RbfKernel k) {
    switch (k) {
        case RbfKernel::gaussian: return "gaussian";
        case RbfKernel::thin_plate: return "thin_plate";
        case RbfKernel::multiquadric: return "multiquadric";
    }
    return "unknown";
}

std::string_view to_string(VariogramModel v) {
    return v == VariogramModel::exponential ? "exponential" : "spherical";
}

Method method_from_string(std::string_view s) {
    for (auto m : {Method::knn, Method::idw, Method::rbf, Method::kriging})
        if (to_string(m) == s) return m;
    throw std::invalid_argument("unknown method '" + std::string(s) + "'");
}

RbfKernel rbf_kernel_from_string(std::string_view s) {
    for (auto k : {RbfKernel::gaussian, RbfKernel::thin_plate, RbfKernel::multiquadric})
        if (to_string(k) == s) return k;
    throw std::invalid_argument("unknown RBF kernel '" + std::string(s) + "'");
}

VariogramModel variogram_from_string(std::string_view s) {
    for (auto v : {VariogramModel::exponential, VariogramModel::spherical})
        if (to_string(v) == s) return v;
    throw std::invalid_argument("unknown variogram model '" + std::string(s) + "'");
}

double VariogramParams::gamma(double h) const {
    if (h <= 0.0) return 0.0;
    const double partial = sill - nugget;
    double f = 1.0;
    if (model == VariogramModel::exponential) {
        f = -std::expm1(-3.0 * h / range);
    } else if (h < range) {
        const double r = h / range;
        f = 1.5 * r - 0.5 * r * r * r;
    }
    return nugget + partial * f;
}

double VariogramParams::covariance(double h) const { return sill - gamma(h); }

void ReconstructorConfig::validate() const {
    if (knn_k < 1) throw std::invalid_argument("ReconstructorConfig: knn_k must be >= 1");
    if (!(idw_power > 0.0)) throw std::invalid_argument("ReconstructorConfig: idw_power must be positive");
    if (!(regularization >= 0.0)) throw std::invalid_argument("ReconstructorConfig: regularization must be >= 0");
    if (!variogram_auto) {
        const auto& v = variogram_params;
        if (v.nugget < 0.0 || v.sill < v.nugget || !(v.range > 0.0))
            throw std::invalid_argument("ReconstructorConfig: variogram needs nugget >= 0, sill >= nugget, range > 0");
    }
}

std::vector<Sample> collect_samples(const GridMap& values, const BinaryMask& mask) {
    if (values.shape() != mask.shape()) throw std::invalid_argument("collect_samples: shape mismatch");
    std::vector<Sample> out;
    out.reserve(mask.count());
    const GridShape shape = mask.shape();
    for (int x = 0; x < shape.rows; ++x)
        for (int y = 0; y < shape.cols; ++y)
            if (mask(x, y)) out.push_back({static_cast<double>(x), static_cast<double>(y), values(x, y)});
    return out;
}

namespace {

std::vector<Sample> canonical(std::span<const Sample> samples) {
    std::vector<Sample> s(samples.begin(), samples.end());
    std::sort(s.begin(), s.end(), [](const Sample& a, const Sample& b) {
        return std::tie(a.x, a.y, a.value) < std::tie(b.x, b.y, b.value);
    });
    return s;
}

double sq(double v) { return v * v; }

bool collinear(std::span<const Sample> s) {
    if (s.size() < 3) return true;
    double mx = 0, my = 0;
    for (const auto& p : s) {
        mx += p.x;
        my += p.y;
    }
    mx /= s.size();
    my /= s.size();
    double sxx = 0, syy = 0, sxy = 0;
    for (const auto& p : s) {
        sxx += sq(p.x - mx);
        syy += sq(p.y - my);
        sxy += (p.x - mx) * (p.y - my);
    }
    return sxx * syy - sxy * sxy <= 1e-12 * std::max(1.0, sq(sxx + syy));
}

/// Uniform bucket grid for exact k-nearest queries.
class BucketGrid {
public:
    BucketGrid(std::span<const Sample> s, GridShape shape, int k) : samples_(s) {
        min_x_ = 0.0;
        min_y_ = 0.0;
        double max_x = shape.rows - 1.0, max_y = shape.cols - 1.0;
        for (const auto& p : s) {
            min_x_ = std::min(min_x_, p.x);
            min_y_ = std::min(min_y_, p.y);
            max_x = std::max(max_x, p.x);
            max_y = std::max(max_y, p.y);
        }
        const double area = std::max(1.0, (max_x - min_x_ + 1.0) * (max_y - min_y_ + 1.0));
        cell_ = std::max(1.0, std::sqrt(area * k / static_cast<double>(s.size())));
        nx_ = static_cast<int>(std::floor((max_x - min_x_) / cell_)) + 1;
        ny_ = static_cast<int>(std::floor((max_y - min_y_) / cell_)) + 1;
        start_.assign(static_cast<std::size_t>(nx_) * ny_ + 1, 0);
        std::vector<int> bucket(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            bucket[i] = bucket_of(s[i].x, s[i].y);
            ++start_[bucket[i] + 1];
        }
        std::partial_sum(start_.begin(), start_.end(), start_.begin());
        items_.resize(s.size());
        std::vector<int> fill(start_.begin(), start_.end() - 1);
        for (std::size_t i = 0; i < s.size(); ++i) items_[fill[bucket[i]]++] = static_cast<int>(i);
    }

    /// Indices of the k nearest samples ordered by (distance², index).
    std::vector<std::pair<double, int>> nearest(double qx, double qy, int k) const {
        auto cmp = [](const std::pair<double, int>& a, const std::pair<double, int>& b) { return a < b; };
        std::priority_queue<std::pair<double, int>, std::vector<std::pair<double, int>>, decltype(cmp)> heap(cmp);
        const int bx = clamp_x(static_cast<int>(std::floor((qx - min_x_) / cell_)));
        const int by = clamp_y(static_cast<int>(std::floor((qy - min_y_) / cell_)));
        const int max_ring = std::max(nx_, ny_);
        for (int r = 0; r <= max_ring; ++r) {
            for (int ix = bx - r; ix <= bx + r; ++ix) {
                if (ix < 0 || ix >= nx_) continue;
                const bool edge_x = (ix == bx - r || ix == bx + r);
                for (int iy = by - r; iy <= by + r; ++iy) {
                    if (iy < 0 || iy >= ny_) continue;
                    if (!edge_x && iy != by - r && iy != by + r) continue;
                    const int b = ix * ny_ + iy;
                    for (int j = start_[b]; j < start_[b + 1]; ++j) {
                        const int idx = items_[j];
                        const double d2 = sq(samples_[idx].x - qx) + sq(samples_[idx].y - qy);
                        const std::pair<double, int> cand{d2, idx};
                        if (static_cast<int>(heap.size()) < k) {
                            heap.push(cand);
                        } else if (cand < heap.top()) {
                            heap.pop();
                            heap.push(cand);
                        }
                    }
                }
            }
            // Buckets in ring r+1 lie at least r·cell away from the query.
            if (static_cast<int>(heap.size()) == k && heap.top().first < sq(r * cell_)) break;
        }
        std::vector<std::pair<double, int>> out;
        out.reserve(heap.size());
        while (!heap.empty()) {
            out.push_back(heap.top());
            heap.pop();
        }
        std::reverse(out.begin(), out.end());
        return out;
    }

private:
    int bucket_of(double x, double y) const {
        const int ix = clamp_x(static_cast<int>(std::floor((x - min_x_) / cell_)));
        const int iy = clamp_y(static_cast<int>(std::floor((y - min_y_) / cell_)));
        return ix * ny_ + iy;
    }
    int clamp_x(int v) const { return std::clamp(v, 0, nx_ - 1); }
    int clamp_y(int v) const { return std::clamp(v, 0, ny_ - 1); }

    std::span<const Sample> samples_;
    double min_x_ = 0.0, min_y_ = 0.0, cell_ = 1.0;
    int nx_ = 1, ny_ = 1;
    std::vector<int> start_;
    std::vector<int> items_;
};

constexpr double kMinRcond = 1e-13;

/// Solves [K + λI  P; Pᵀ 0][w; c] = [z; 0], escalating λ while the LU is ill-conditioned.
Eigen::VectorXd solve_saddle(const Eigen::MatrixXd& kernel, const Eigen::MatrixXd& poly, const Eigen::VectorXd& z,
                             double regularization, double diag_scale) {
    const Eigen::Index n = kernel.rows();
    const Eigen::Index m = poly.cols();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + m, n + m);
    a.topLeftCorner(n, n) = kernel;
    a.topRightCorner(n, m) = poly;
    a.bottomLeftCorner(m, n) = poly.transpose();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + m);
    rhs.head(n) = z;

    double ridge = regularization;
    double rcond = 0.0;
    for (int attempt = 0; attempt < 8; ++attempt) {
        Eigen::MatrixXd sys = a;
        if (ridge > 0.0) sys.topLeftCorner(n, n).diagonal().array() += ridge * diag_scale;
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(sys);
        rcond = lu.rcond();
        if (std::isfinite(rcond) && rcond >= kMinRcond) {
            Eigen::VectorXd sol = lu.solve(rhs);
            if (sol.allFinite()) return sol;
        }
        ridge = ridge <= 0.0 ? 1e-12 : ridge * 100.0;
        if (ridge > 1e-3) break;
    }
    throw IllConditionedError("interpolation system is ill-conditioned (rcond estimate " + std::to_string(rcond) +
                                  ") beyond regularization rescue",
                              rcond);
}

double rbf_phi(RbfKernel kernel, double r, double shape) {
    const double q = r / shape;
    switch (kernel) {
        case RbfKernel::gaussian: return std::exp(-q * q);
        case RbfKernel::multiquadric: return std::sqrt(1.0 + q * q);
        case RbfKernel::thin_plate: return q > 0.0 ? q * q * std::log(q) : 0.0;
    }
    return 0.0;
}

}  // namespace

std::vector<double> predict_knn(std::span<const Sample> input, GridShape shape, int k) {
    if (k < 1) throw std::invalid_argument("knn: k must be >= 1");
    if (static_cast<int>(input.size()) < k) throw std::invalid_argument("knn: fewer samples than k");
    const std::vector<Sample> s = canonical(input);
    const BucketGrid grid(s, shape, k);
    std::vector<double> out(shape.size());
#pragma omp parallel for schedule(static)
    for (int x = 0; x < shape.rows; ++x) {
        for (int y = 0; y < shape.cols; ++y) {
            const auto nn = grid.nearest(x, y, k);
            double sum = 0.0;
            for (const auto& [d2, idx] : nn) sum += s[idx].value;
            out[shape.index(x, y)] = sum / static_cast<double>(nn.size());
        }
    }
    return out;
}

std::vector<double> predict_idw(std::span<const Sample> input, GridShape shape, double power) {
    if (input.empty()) throw std::invalid_argument("idw: no samples");
    if (!(power > 0.0)) throw std::invalid_argument("idw: power must be positive");
    const std::vector<Sample> s = canonical(input);
    std::vector<double> out(shape.size());
    const double half_p = 0.5 * power;
    const bool square_power = power == 2.0;
#pragma omp parallel for schedule(static)
    for (int x = 0; x < shape.rows; ++x) {
        for (int y = 0; y < shape.cols; ++y) {
            double num = 0.0, den = 0.0, hit_sum = 0.0;
            int hits = 0;
            for (const auto& p : s) {
                const double d2 = sq(p.x - x) + sq(p.y - y);
                if (d2 == 0.0) {
                    hit_sum += p.value;
                    ++hits;
                    continue;
                }
                const double w = square_power ? 1.0 / d2 : std::pow(d2, -half_p);
                num += w * p.value;
                den += w;
            }
            out[shape.index(x, y)] = hits > 0 ? hit_sum / hits : num / den;
        }
    }
    return out;
}

double median_nn_spacing(std::span<const Sample> s) {
    if (s.size() < 2) return 1.0;
    std::vector<double> nn(s.size(), std::numeric_limits<double>::infinity());
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < s.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (i == j) continue;
            best = std::min(best, sq(s[i].x - s[j].x) + sq(s[i].y - s[j].y));
        }
        nn[i] = std::sqrt(best);
    }
    const auto mid = nn.begin() + static_cast<std::ptrdiff_t>(nn.size() / 2);
    std::nth_element(nn.begin(), mid, nn.end());
    return *mid > 0.0 ? *mid : 1.0;
}

std::vector<double> predict_rbf(std::span<const Sample> input, GridShape shape, RbfKernel kernel, double shape_px,
                                double regularization) {
    if (input.size() < 3) throw std::invalid_argument("rbf: needs at least 3 samples");
    const std::vector<Sample> s = canonical(input);
    if (kernel == RbfKernel::thin_plate && collinear(s))
        throw std::invalid_argument("rbf: thin-plate spline needs non-collinear samples");
    const double eps = shape_px > 0.0 ? shape_px : 2.0 * median_nn_spacing(s);
    const auto n = static_cast<Eigen::Index>(s.size());

    // Polynomial tail in centered, scaled coordinates.
    const double cx = 0.5 * (shape.rows - 1), cy = 0.5 * (shape.cols - 1);
    const double scale = std::max(1.0, 0.5 * std::max(shape.rows, shape.cols));
    const Eigen::Index m = kernel == RbfKernel::thin_plate ? 3 : 1;
    auto poly_row = [&](double x, double y, Eigen::Index j) {
        return j == 0 ? 1.0 : (j == 1 ? (x - cx) / scale : (y - cy) / scale);
    };

    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double v = rbf_phi(kernel, std::sqrt(sq(s[i].x - s[j].x) + sq(s[i].y - s[j].y)), eps);
            k(i, j) = v;
            k(j, i) = v;
        }
    Eigen::MatrixXd p(n, m);
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) p(i, j) = poly_row(s[i].x, s[i].y, j);
        z(i) = s[i].value;
    }
    const Eigen::VectorXd sol = solve_saddle(k, p, z, regularization, 1.0);

    std::vector<double> out(shape.size());
#pragma omp parallel for schedule(static)
    for (int x = 0; x < shape.rows; ++x) {
        for (int y = 0; y < shape.cols; ++y) {
            double v = 0.0;
            for (Eigen::Index i = 0; i < n; ++i)
                v += sol(i) * rbf_phi(kernel, std::sqrt(sq(s[i].x - x) + sq(s[i].y - y)), eps);
            for (Eigen::Index j = 0; j < m; ++j) v += sol(n + j) * poly_row(x, y, j);
            out[shape.index(x, y)] = v;
        }
    }
    return out;
}

std::vector<double> predict_kriging(std::span<const Sample> input, GridShape shape, const VariogramParams& vg,
                                    double regularization) {
    if (input.size() < 3) throw std::invalid_argument("kriging: needs at least 3 samples");
    const std::vector<Sample> s = canonical(input);
    if (vg.degenerate || !(vg.sill > 0.0)) {
        // Zero-sill field: the BLUE is the sample mean.
        double mean = 0.0;
        for (const auto& p : s) mean += p.value;
        return std::vector<double>(shape.size(), mean / static_cast<double>(s.size()));
    }
    const auto n = static_cast<Eigen::Index>(s.size());
    Eigen::MatrixXd c(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double v = vg.covariance(std::sqrt(sq(s[i].x - s[j].x) + sq(s[i].y - s[j].y)));
            c(i, j) = v;
            c(j, i) = v;
        }
    const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(n, 1);
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = s[i].value;
    // Dual form: z(q) = Σ b_i C(|q − x_i|) + μ.
    const Eigen::VectorXd sol = solve_saddle(c, ones, z, regularization, vg.sill);

    std::vector<double> out(shape.size());
#pragma omp parallel for schedule(static)
    for (int x = 0; x < shape.rows; ++x) {
        for (int y = 0; y < shape.cols; ++y) {
            double v = sol(n);
            for (Eigen::Index i = 0; i < n; ++i) v += sol(i) * vg.covariance(std::sqrt(sq(s[i].x - x) + sq(s[i].y - y)));
            out[shape.index(x, y)] = v;
        }
    }
    return out;
}

GridMap reconstruct(std::span<const Sample> samples, GridShape shape, const ReconstructorConfig& cfg) {
    cfg.validate();
    std::vector<double> pred;
    switch (cfg.method) {
        case Method::knn: pred = predict_knn(samples, shape, cfg.knn_k); break;
        case Method::idw: pred = predict_idw(samples, shape, cfg.idw_power); break;
        case Method::rbf:
            pred = predict_rbf(samples, shape, cfg.rbf_kernel, cfg.rbf_shape, cfg.regularization);
            break;
        case Method::kriging: {
            VariogramParams vg = cfg.variogram_params;
            if (cfg.variogram_auto) {
                if (collinear(samples)) throw std::invalid_argument("kriging: auto-fit needs non-collinear samples");
                vg = fit_variogram(canonical(samples), cfg.variogram, std::hypot(shape.rows, shape.cols));
            }
            pred = predict_kriging(samples, shape, vg, cfg.regularization);
            break;
        }
    }
    GridMap out(shape, MapKind::normalized);
    for (std::size_t i = 0; i < pred.size(); ++i) out[i] = std::clamp(pred[i], 0.0, 1.0);
    return out;
}

GridMap reconstruct(const GridMap& preprocessed, const BinaryMask& mask, const ReconstructorConfig& cfg) {
    const auto samples = collect_samples(preprocessed, mask);
    GridMap out = reconstruct(samples, preprocessed.shape(), cfg);
    out.meta() = preprocessed.meta();
    return out;
}

}  // namespace ckm
