#include "stjd/density.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>

#include "json.hpp"
#include "stjd/error.hpp"

namespace stjd {
namespace {

constexpr double kSqrtTwoPi = 2.5066282746310002;

void check_inputs(const Tensor3& X, std::span<const double> h) {
  if (X.size() == 0) {
    throw Error(ErrorCode::kEmptySequence, "density input is empty");
  }
  if (h.size() != X.dim1()) {
    throw Error(ErrorCode::kShapeMismatch,
                "bandwidth count " + std::to_string(h.size()) +
                    " does not match joint count " + std::to_string(X.dim1()));
  }
  for (double x : X.data()) {
    if (!std::isfinite(x)) {
      throw Error(ErrorCode::kNonFiniteInput, "density input is not finite");
    }
  }
  for (double w : h) {
    if (!std::isfinite(w) || w <= 0.0) {
      throw Error(ErrorCode::kNonFiniteInput,
                  "bandwidths must be finite and positive");
    }
  }
}

// Squared distance between joints a and b in frame t.
double dot_product(const std::vector<double>& a, const std::vector<double>& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

double squared_distance(const Tensor3& X, std::size_t t, std::size_t a,
                        std::size_t b) {
  double d2 = 0.0;
  for (std::size_t c = 0; c < X.dim0(); ++c) {
    const double diff = X(c, a, t) - X(c, b, t);
    d2 += diff * diff;
  }
  return d2;
}

// Product over C channels of the 1-D Gaussian kernel with width h.
double kernel(double d2, double h, std::size_t channels) {
  const double norm = std::pow(h * kSqrtTwoPi, -static_cast<double>(channels));
  return norm * std::exp(-0.5 * d2 / (h * h));
}

// Density of joint r in frame t, summed in ascending i.
double density_at(const Tensor3& X, std::span<const double> h, std::size_t t,
                  std::size_t r) {
  const std::size_t V = X.dim1();
  double sum = 0.0;
  for (std::size_t i = 0; i < V; ++i) {
    sum += kernel(squared_distance(X, t, r, i), h[i], X.dim0());
  }
  return sum / static_cast<double>(V);
}

double gauss_1d(double x, double h) {
  const double z = x / h;
  return std::exp(-0.5 * z * z) / (h * kSqrtTwoPi);
}

double gauss_1d_slope(double x, double h) {
  return -x / (h * h) * gauss_1d(x, h);
}

}  // namespace

BandwidthVector::BandwidthVector(std::vector<double> h, double h_min)
    : h_(std::move(h)), h_min_(h_min) {
  if (!(h_min_ > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "h_min must be positive");
  }
  for (double& w : h_) {
    if (!std::isfinite(w)) {
      throw Error(ErrorCode::kNonFiniteInput, "bandwidth is not finite");
    }
    w = std::max(w, h_min_);
  }
}

BandwidthVector BandwidthVector::uniform(std::size_t joints, double h,
                                         double h_min) {
  return BandwidthVector(std::vector<double>(joints, h), h_min);
}

DensityField compute_density(const Tensor3& X, const BandwidthVector& h) {
  check_inputs(X, h.values());
  const std::size_t V = X.dim1();
  const std::size_t T = X.dim2();
  DensityField D(T, V);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t r = 0; r < V; ++r) D(t, r) = density_at(X, h.values(), t, r);
  }
  return D;
}

Matrix density_change(const Tensor3& X, const BandwidthVector& h,
                      std::size_t delta_t) {
  if (delta_t == 0) {
    throw Error(ErrorCode::kInvalidArgument, "delta_t must be >= 1");
  }
  if (X.dim2() <= delta_t) {
    throw Error(ErrorCode::kSequenceTooShort,
                "sequence has " + std::to_string(X.dim2()) +
                    " frames, needs more than delta_t = " +
                    std::to_string(delta_t));
  }
  const DensityField D = compute_density(X, h);
  Matrix raw(D.rows(), D.cols(), 0.0);
  for (std::size_t t = delta_t; t < D.rows(); ++t) {
    for (std::size_t r = 0; r < D.cols(); ++r) {
      raw(t, r) = std::abs(D(t, r) - D(t - delta_t, r));
    }
  }
  return raw;
}

Matrix normalize_change(const Matrix& raw, SoftmaxAxis axis) {
  Matrix out(raw.rows(), raw.cols(), 0.0);
  if (raw.size() == 0) return out;

  // Softmax then min-max over a block of entries. Both are monotone, so the
  // result is (e^(x - max) - e^(min - max)) / (1 - e^(min - max)) up to the
  // common softmax denominator, which cancels.
  auto normalize_block = [](std::span<const double> in, std::span<double> o) {
    const double hi = *std::max_element(in.begin(), in.end());
    double denom = 0.0;
    for (double x : in) denom += std::exp(x - hi);
    double s_min = std::numeric_limits<double>::infinity();
    double s_max = -s_min;
    for (std::size_t i = 0; i < in.size(); ++i) {
      o[i] = std::exp(in[i] - hi) / denom;
      s_min = std::min(s_min, o[i]);
      s_max = std::max(s_max, o[i]);
    }
    const double span = s_max - s_min;
    for (double& s : o) s = span > 0.0 ? (s - s_min) / span : 0.0;
  };

  if (axis == SoftmaxAxis::kGlobal) {
    normalize_block(raw.data(), out.data());
  } else {
    for (std::size_t t = 0; t < raw.rows(); ++t) {
      normalize_block(raw.row(t), out.row(t));
    }
  }
  return out;
}

DensityChangeField compute_density_change(const Tensor3& X,
                                          const BandwidthVector& h,
                                          std::size_t delta_t,
                                          SoftmaxAxis axis) {
  DensityChangeField field;
  field.raw = density_change(X, h, delta_t);
  field.normalized = normalize_change(field.raw, axis);
  return field;
}

Tensor3 density_gradient_bandwidth(const Tensor3& X, const BandwidthVector& h) {
  check_inputs(X, h.values());
  const std::size_t C = X.dim0();
  const std::size_t V = X.dim1();
  const std::size_t T = X.dim2();
  const double inv_v = 1.0 / static_cast<double>(V);
  Tensor3 grad(T, V, V);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t r = 0; r < V; ++r) {
      for (std::size_t i = 0; i < V; ++i) {
        const double hi = h[i];
        const double d2 = squared_distance(X, t, r, i);
        const double k = kernel(d2, hi, C);
        grad(t, r, i) =
            inv_v * k * (d2 / (hi * hi * hi) - static_cast<double>(C) / hi);
      }
    }
  }
  return grad;
}

namespace {

// Shared pass for the leave-one-out objective and its gradient.
double loo_pass(const Tensor3& X, std::span<const double> h,
                std::vector<double>* gradient) {
  check_inputs(X, h);
  const std::size_t C = X.dim0();
  const std::size_t V = X.dim1();
  const std::size_t T = X.dim2();
  if (V < 2) {
    throw Error(ErrorCode::kTooFewJoints,
                "leave-one-out objective needs at least two joints");
  }
  if (gradient) gradient->assign(V, 0.0);
  const double log_norm = std::log(static_cast<double>(V - 1));
  std::vector<double> inv_h2(V);
  std::vector<double> log_scale(V);
  for (std::size_t i = 0; i < V; ++i) {
    inv_h2[i] = 1.0 / (h[i] * h[i]);
    log_scale[i] = static_cast<double>(C) * std::log(h[i] * kSqrtTwoPi);
  }
  std::vector<double> logk(V);
  std::vector<double> d2(V);
  double total = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t r = 0; r < V; ++r) {
      double peak = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < V; ++i) {
        if (i == r) continue;
        d2[i] = squared_distance(X, t, r, i);
        logk[i] = -0.5 * d2[i] * inv_h2[i] - log_scale[i];
        peak = std::max(peak, logk[i]);
      }
      double acc = 0.0;
      for (std::size_t i = 0; i < V; ++i) {
        if (i == r) continue;
        logk[i] = std::exp(logk[i] - peak);
        acc += logk[i];
      }
      total += peak + std::log(acc) - log_norm;
      if (gradient) {
        for (std::size_t i = 0; i < V; ++i) {
          if (i == r) continue;
          const double w = logk[i] / acc;
          (*gradient)[i] +=
              w * (d2[i] * inv_h2[i] - static_cast<double>(C)) / h[i];
        }
      }
    }
  }
  return total;
}

}  // namespace

double loo_log_likelihood(const Tensor3& X, std::span<const double> h) {
  return loo_pass(X, h, nullptr);
}

std::vector<double> loo_log_likelihood_gradient(const Tensor3& X,
                                                std::span<const double> h) {
  std::vector<double> g;
  loo_pass(X, h, &g);
  return g;
}

double silverman_bandwidth(const Tensor3& X) {
  const std::size_t C = X.dim0();
  const std::size_t n = X.dim1() * X.dim2();
  double sigma = 0.0;
  for (std::size_t c = 0; c < C; ++c) {
    double mean = 0.0;
    for (std::size_t v = 0; v < X.dim1(); ++v) {
      for (std::size_t t = 0; t < X.dim2(); ++t) mean += X(c, v, t);
    }
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t v = 0; v < X.dim1(); ++v) {
      for (std::size_t t = 0; t < X.dim2(); ++t) {
        const double d = X(c, v, t) - mean;
        var += d * d;
      }
    }
    sigma += std::sqrt(var / static_cast<double>(n));
  }
  sigma /= static_cast<double>(C);
  return 1.06 * sigma * std::pow(static_cast<double>(X.dim1()), -0.2);
}

BandwidthFit fit_bandwidths(const Tensor3& X,
                            const std::optional<BandwidthVector>& h_init,
                            const BandwidthFitOptions& options) {
  const std::size_t V = X.dim1();
  if (V < 2) {
    throw Error(ErrorCode::kTooFewJoints,
                "bandwidth fitting needs at least two joints");
  }
  const double log_min = std::log(options.h_min);
  std::vector<double> h;
  if (h_init) {
    if (h_init->size() != V) {
      throw Error(ErrorCode::kShapeMismatch,
                  "initial bandwidth count does not match joint count");
    }
    h.assign(h_init->values().begin(), h_init->values().end());
  } else {
    h.assign(V, silverman_bandwidth(X));
  }
  for (double& w : h) w = std::max(w, options.h_min);

  // Work with the per-entry mean so that step sizes do not depend on T or V.
  const double scale = 1.0 / static_cast<double>(X.dim2() * V);
  std::vector<double> theta(V);
  for (std::size_t i = 0; i < V; ++i) theta[i] = std::log(h[i]);

  auto bandwidths = [&](const std::vector<double>& th) {
    std::vector<double> out(V);
    for (std::size_t i = 0; i < V; ++i) out[i] = std::exp(th[i]);
    return out;
  };

  BandwidthFit fit;
  double objective = loo_log_likelihood(X, h) * scale;
  fit.initial_objective = objective / scale;

  // Limited-memory BFGS on -objective in log h, with bound-pinned
  // coordinates frozen and a backtracking Armijo search.
  constexpr std::size_t kMemory = 8;
  std::deque<std::pair<std::vector<double>, std::vector<double>>> history;
  std::vector<double> grad(V), prev_grad(V), prev_theta(V);
  std::vector<double> direction(V), candidate(V);
  std::vector<double> alpha_buf(kMemory);
  bool have_prev = false;

  for (fit.iterations = 0; fit.iterations < options.max_iterations;
       ++fit.iterations) {
    const auto hg = loo_log_likelihood_gradient(X, h);
    std::vector<bool> pinned(V);
    double grad_norm = 0.0;
    for (std::size_t i = 0; i < V; ++i) {
      grad[i] = hg[i] * h[i] * scale;  // d/d log h
      pinned[i] = theta[i] <= log_min && grad[i] < 0.0;
      if (!pinned[i]) grad_norm = std::max(grad_norm, std::abs(grad[i]));
    }
    if (grad_norm < options.gradient_tolerance) {
      fit.converged = true;
      break;
    }
    if (have_prev) {
      std::vector<double> sv(V), yv(V);
      double sy = 0.0;
      for (std::size_t i = 0; i < V; ++i) {
        sv[i] = theta[i] - prev_theta[i];
        yv[i] = prev_grad[i] - grad[i];
        sy += sv[i] * yv[i];
      }
      if (sy > 1e-12) {
        history.emplace_back(std::move(sv), std::move(yv));
        if (history.size() > kMemory) history.pop_front();
      }
    }

    // Two-loop recursion: direction = H * grad, an ascent direction.
    direction = grad;
    for (std::size_t i = 0; i < V; ++i) {
      if (pinned[i]) direction[i] = 0.0;
    }
    for (std::size_t k = history.size(); k-- > 0;) {
      const auto& [sv, yv] = history[k];
      const double rho = 1.0 / dot_product(sv, yv);
      alpha_buf[k] = rho * dot_product(sv, direction);
      for (std::size_t i = 0; i < V; ++i) direction[i] -= alpha_buf[k] * yv[i];
    }
    if (!history.empty()) {
      const auto& [sv, yv] = history.back();
      const double gamma = dot_product(sv, yv) / dot_product(yv, yv);
      for (double& d : direction) d *= gamma;
    }
    for (std::size_t k = 0; k < history.size(); ++k) {
      const auto& [sv, yv] = history[k];
      const double rho = 1.0 / dot_product(sv, yv);
      const double beta = rho * dot_product(yv, direction);
      for (std::size_t i = 0; i < V; ++i) {
        direction[i] += sv[i] * (alpha_buf[k] - beta);
      }
    }
    for (std::size_t i = 0; i < V; ++i) {
      if (pinned[i]) direction[i] = 0.0;
    }
    if (dot_product(direction, grad) <= 0.0) {
      history.clear();
      direction = grad;
      for (std::size_t i = 0; i < V; ++i) {
        if (pinned[i]) direction[i] = 0.0;
      }
    }

    double step = history.empty() ? std::min(1.0, 1.0 / grad_norm) : 1.0;
    bool accepted = false;
    bool moved = false;
    for (int halving = 0; halving < 60 && !accepted; ++halving) {
      double predicted = 0.0;
      for (std::size_t i = 0; i < V; ++i) {
        candidate[i] = std::max(theta[i] + step * direction[i], log_min);
        predicted += grad[i] * (candidate[i] - theta[i]);
      }
      const auto h_candidate = bandwidths(candidate);
      const bool finite =
          std::all_of(h_candidate.begin(), h_candidate.end(),
                      [](double w) { return std::isfinite(w) && w < 1e12; });
      if (!finite) {
        step *= 0.5;
        continue;
      }
      const double value = loo_log_likelihood(X, h_candidate) * scale;
      if (value >= objective + 1e-4 * predicted && value >= objective) {
        accepted = true;
        moved = candidate != theta;
        prev_theta = theta;
        prev_grad = grad;
        have_prev = true;
        theta = candidate;
        h = h_candidate;
        objective = value;
      } else {
        step *= 0.5;
      }
    }
    if (!accepted || !moved) {
      // No ascent direction left at machine precision.
      fit.converged = true;
      break;
    }
  }

  fit.h = BandwidthVector(h, options.h_min);
  fit.objective = objective / scale;
  return fit;
}

TaylorDecomposition taylor_decompose(const Tensor3& X, const BandwidthVector& h,
                                     std::size_t t, std::size_t delta_t,
                                     std::size_t expansion_joint,
                                     std::size_t evaluation_joint) {
  check_inputs(X, h.values());
  if (X.dim0() != 1) {
    throw Error(ErrorCode::kMultiChannelUnsupported,
                "Taylor decomposition is defined for a single channel");
  }
  const std::size_t V = X.dim1();
  if (delta_t == 0 || t + delta_t >= X.dim2()) {
    throw Error(ErrorCode::kSequenceTooShort,
                "frame t + delta_t must lie inside the sequence");
  }
  if (expansion_joint >= V || evaluation_joint >= V) {
    throw Error(ErrorCode::kIndexOutOfRange, "joint index out of range");
  }
  const std::size_t t1 = t + delta_t;
  const std::size_t k = expansion_joint;
  const std::size_t r = evaluation_joint;
  auto pos = [&](std::size_t v, std::size_t frame) { return X(0, v, frame); };

  const double inv_v = 1.0 / static_cast<double>(V);
  TaylorDecomposition out;
  double interaction = 0.0;
  double motion = 0.0;
  const double dr = pos(r, t1) - pos(r, t);
  const double dk = pos(k, t1) - pos(k, t);
  for (std::size_t i = 0; i < V; ++i) {
    const double hi = h[i];
    const double di = pos(i, t1) - pos(i, t);
    interaction += gauss_1d(pos(k, t1) - pos(i, t1), hi) -
                   gauss_1d(pos(k, t) - pos(i, t), hi);
    motion += gauss_1d_slope(pos(r, t) - pos(i, t), hi) * (dr - di) -
              gauss_1d_slope(pos(k, t) - pos(i, t), hi) * (dk - di);
  }
  out.exact = density_at(X, h.values(), t1, r) - density_at(X, h.values(), t, r);
  out.interaction = interaction * inv_v;
  out.motion = motion * inv_v;
  out.residual = out.exact - out.interaction - out.motion;
  return out;
}

std::string field_to_json(const Matrix& field) {
  nlohmann::json j;
  j["shape"] = {field.rows(), field.cols()};
  j["values"] = field.data();
  return j.dump();
}

}  // namespace stjd
