#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stjd/array.hpp"

namespace stjd {

inline constexpr double kDefaultMinBandwidth = 1e-3;

// Per-joint Gaussian kernel widths, shared across channels.
class BandwidthVector {
 public:
  BandwidthVector() = default;
  explicit BandwidthVector(std::vector<double> h,
                           double h_min = kDefaultMinBandwidth);
  // Every joint gets the same width.
  static BandwidthVector uniform(std::size_t joints, double h,
                                 double h_min = kDefaultMinBandwidth);

  std::size_t size() const noexcept { return h_.size(); }
  double operator[](std::size_t i) const { return h_[i]; }
  std::span<const double> values() const noexcept { return h_; }
  double h_min() const noexcept { return h_min_; }

 private:
  std::vector<double> h_;
  double h_min_ = kDefaultMinBandwidth;
};

// D(t, r): density at joint r in frame t, shape T x V.
using DensityField = Matrix;

struct DensityChangeField {
  Matrix raw;         // T x V, |D_t - D_{t - delta}|, zero for t < delta
  Matrix normalized;  // T x V, in [0, 1]
};

enum class SoftmaxAxis {
  kGlobal,    // one softmax over all T x V entries
  kPerFrame,  // independent softmax per frame
};

// Density of every joint under the kernel mixture of all joints in the same
// frame, the evaluated joint's own kernel included. X is C x V x T.
DensityField compute_density(const Tensor3& X, const BandwidthVector& h);

// Absolute temporal change of the density. Row t holds |D_t - D_{t-delta}|;
// rows t < delta are zero, so row 0 is always zero.
Matrix density_change(const Tensor3& X, const BandwidthVector& h,
                      std::size_t delta_t = 1);

// Softmax over the entries followed by min-max rescaling to [0, 1]. An input
// whose softmax is constant maps to all zeros.
Matrix normalize_change(const Matrix& raw,
                        SoftmaxAxis axis = SoftmaxAxis::kGlobal);

DensityChangeField compute_density_change(
    const Tensor3& X, const BandwidthVector& h, std::size_t delta_t = 1,
    SoftmaxAxis axis = SoftmaxAxis::kGlobal);

// dD(t, r) / dh_i laid out as T x V(r) x V(i).
Tensor3 density_gradient_bandwidth(const Tensor3& X, const BandwidthVector& h);

// Leave-one-out log-likelihood of the joints under the kernel mixture formed
// by the remaining joints, summed over frames. Requires V >= 2.
double loo_log_likelihood(const Tensor3& X, std::span<const double> h);
// Gradient of loo_log_likelihood with respect to each h_i.
std::vector<double> loo_log_likelihood_gradient(const Tensor3& X,
                                                std::span<const double> h);

// Silverman's rule of thumb 1.06 * sigma * V^(-1/5), sigma being the mean
// per-channel standard deviation over all joints and frames.
double silverman_bandwidth(const Tensor3& X);

struct BandwidthFitOptions {
  double h_min = kDefaultMinBandwidth;
  std::size_t max_iterations = 500;
  // Stop when the largest |d objective / d log h| falls below this.
  double gradient_tolerance = 1e-7;
};

struct BandwidthFit {
  BandwidthVector h;
  double objective = 0.0;
  double initial_objective = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

// Maximizes loo_log_likelihood by limited-memory BFGS in log h with a
// backtracking line search, starting from Silverman's rule; coordinates
// pinned at h_min are held fixed. The returned objective never falls below the initial
// one. Throws TooFewJoints when V < 2.
BandwidthFit fit_bandwidths(const Tensor3& X,
                            const std::optional<BandwidthVector>& h_init = {},
                            const BandwidthFitOptions& options = {});

// First-order decomposition of the signed density change at evaluation joint
// r between frames t and t + delta, expanded around joint k. C must be 1.
struct TaylorDecomposition {
  double exact = 0.0;        // D_{t+delta}(r) - D_t(r)
  double interaction = 0.0;  // kernel change seen from joint k
  double motion = 0.0;       // first-order term in the joint displacements
  double residual = 0.0;     // exact - interaction - motion
};

TaylorDecomposition taylor_decompose(const Tensor3& X, const BandwidthVector& h,
                                     std::size_t t, std::size_t delta_t,
                                     std::size_t expansion_joint,
                                     std::size_t evaluation_joint);

// JSON {"shape":[T,V],"values":[...]} for external plotting.
std::string field_to_json(const Matrix& field);

}  // namespace stjd
