#include "stjd/encoder.hpp"

#include <cmath>

#include "stjd/error.hpp"

namespace stjd {
namespace {

constexpr double kTinyNorm = 1e-300;

void check_input(const EncoderParams& params, const Tensor3& X) {
  if (X.dim0() != params.in_channels() || X.dim1() != params.joints()) {
    throw Error(ErrorCode::kShapeMismatch,
                "encoder expects " + std::to_string(params.in_channels()) +
                    " channels and " + std::to_string(params.joints()) +
                    " joints");
  }
  if (params.w2.rows() != params.hidden() ||
      params.w2.cols() != params.hidden() ||
      params.adjacency.cols() != params.joints()) {
    throw Error(ErrorCode::kShapeMismatch, "inconsistent encoder parameters");
  }
}

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, double stddev,
                       Rng& rng) {
  Matrix m(rows, cols);
  for (double& x : m.data()) x = stddev * rng.normal();
  return m;
}

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

Matrix normalized_adjacency(const JointLayout& layout) {
  const std::size_t V = layout.joint_count;
  Matrix a(V, V, 0.0);
  for (std::size_t v = 0; v < V; ++v) a(v, v) = 1.0;
  for (const auto& [p, c] : layout.edges) {
    a(p, c) = 1.0;
    a(c, p) = 1.0;
  }
  for (std::size_t v = 0; v < V; ++v) {
    double sum = 0.0;
    for (double x : a.row(v)) sum += x;
    for (double& x : a.row(v)) x /= sum;
  }
  return a;
}

EncoderParams EncoderParams::random(std::size_t in_channels,
                                    std::size_t hidden,
                                    const JointLayout& layout, Rng& rng) {
  EncoderParams p;
  p.w1 = gaussian_matrix(hidden, in_channels,
                         std::sqrt(2.0 / static_cast<double>(in_channels)), rng);
  p.w2 = gaussian_matrix(hidden, hidden,
                         std::sqrt(2.0 / static_cast<double>(hidden)), rng);
  p.adjacency = normalized_adjacency(layout);
  return p;
}

FeatureMap encode(const EncoderParams& params, const Tensor3& X,
                  EncoderTape* tape) {
  check_input(params, X);
  const std::size_t C = X.dim0();
  const std::size_t V = X.dim1();
  const std::size_t T = X.dim2();
  const std::size_t d = params.hidden();

  Tensor3 pre1(d, T, V);
  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t c = 0; c < C; ++c) {
      const double w = params.w1(k, c);
      for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t v = 0; v < V; ++v) pre1(k, t, v) += w * X(c, v, t);
      }
    }
  }

  // Sparse neighbourhood averaging; row v of A lists v's neighbours.
  Tensor3 mixed(d, T, V);
  for (std::size_t v = 0; v < V; ++v) {
    for (std::size_t u = 0; u < V; ++u) {
      const double a = params.adjacency(v, u);
      if (a == 0.0) continue;
      for (std::size_t k = 0; k < d; ++k) {
        for (std::size_t t = 0; t < T; ++t) {
          mixed(k, t, v) += a * std::max(pre1(k, t, u), 0.0);
        }
      }
    }
  }

  Tensor3 pre2(d, T, V);
  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t m = 0; m < d; ++m) {
      const double w = params.w2(k, m);
      if (w == 0.0) continue;
      const double* src = &mixed(m, 0, 0);
      double* dst = &pre2(k, 0, 0);
      for (std::size_t i = 0; i < T * V; ++i) dst[i] += w * src[i];
    }
  }

  FeatureMap out(d, T, V);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.data()[i] = std::max(pre2.data()[i], 0.0);
  }
  if (tape) {
    tape->pre1 = std::move(pre1);
    tape->mixed = std::move(mixed);
    tape->pre2 = std::move(pre2);
  }
  return out;
}

EncoderGradient encode_backward(const EncoderParams& params, const Tensor3& X,
                                const EncoderTape& tape,
                                const FeatureMap& grad_output) {
  const std::size_t C = X.dim0();
  const std::size_t V = X.dim1();
  const std::size_t T = X.dim2();
  const std::size_t d = params.hidden();
  const std::size_t n = T * V;

  // Through the output rectifier.
  Tensor3 g_pre2(d, T, V);
  for (std::size_t i = 0; i < g_pre2.size(); ++i) {
    g_pre2.data()[i] = tape.pre2.data()[i] > 0.0 ? grad_output.data()[i] : 0.0;
  }

  EncoderGradient grad{Matrix(d, C, 0.0), Matrix(d, d, 0.0)};
  Tensor3 g_mixed(d, T, V);
  for (std::size_t k = 0; k < d; ++k) {
    const double* gk = &g_pre2(k, 0, 0);
    for (std::size_t m = 0; m < d; ++m) {
      const double* mm = &tape.mixed(m, 0, 0);
      double* gm = &g_mixed(m, 0, 0);
      const double w = params.w2(k, m);
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += gk[i] * mm[i];
        gm[i] += w * gk[i];
      }
      grad.w2(k, m) = acc;
    }
  }

  // mixed(k,t,v) = sum_u A(v,u) relu(pre1(k,t,u)).
  Tensor3 g_hidden(d, T, V);
  for (std::size_t v = 0; v < V; ++v) {
    for (std::size_t u = 0; u < V; ++u) {
      const double a = params.adjacency(v, u);
      if (a == 0.0) continue;
      for (std::size_t k = 0; k < d; ++k) {
        for (std::size_t t = 0; t < T; ++t) {
          g_hidden(k, t, u) += a * g_mixed(k, t, v);
        }
      }
    }
  }

  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t v = 0; v < V; ++v) {
        if (tape.pre1(k, t, v) <= 0.0) continue;
        const double g = g_hidden(k, t, v);
        for (std::size_t c = 0; c < C; ++c) grad.w1(k, c) += g * X(c, v, t);
      }
    }
  }
  return grad;
}

std::vector<double> gap_pool(const FeatureMap& U) {
  const std::size_t n = U.dim1() * U.dim2();
  std::vector<double> out(U.dim0(), 0.0);
  for (std::size_t k = 0; k < U.dim0(); ++k) {
    const double* p = &U.data()[k * n];
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += p[i];
    out[k] = s / static_cast<double>(n);
  }
  return out;
}

std::vector<double> jafp_pool(const FeatureMap& U, const BinaryMask& mask) {
  if (mask.rows() != U.dim1() || mask.cols() != U.dim2()) {
    throw Error(ErrorCode::kMaskShapeMismatch,
                "pooling mask shape does not match the feature map");
  }
  std::size_t weight = 0;
  for (unsigned char m : mask.data()) weight += m ? 1 : 0;
  if (weight == 0) {
    throw Error(ErrorCode::kEmptyMask, "joint-aware pooling over an empty mask");
  }
  const std::size_t n = U.dim1() * U.dim2();
  std::vector<double> out(U.dim0(), 0.0);
  for (std::size_t k = 0; k < U.dim0(); ++k) {
    const double* p = &U.data()[k * n];
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask.data()[i]) s += p[i];
    }
    out[k] = s / static_cast<double>(weight);
  }
  return out;
}

FeatureMap gap_pool_backward(std::span<const double> grad_pooled, std::size_t T,
                             std::size_t V) {
  FeatureMap g(grad_pooled.size(), T, V);
  const double inv = 1.0 / static_cast<double>(T * V);
  for (std::size_t k = 0; k < grad_pooled.size(); ++k) {
    double* p = &g(k, 0, 0);
    for (std::size_t i = 0; i < T * V; ++i) p[i] = grad_pooled[k] * inv;
  }
  return g;
}

Projector Projector::random(std::size_t hidden, std::size_t out, Rng& rng) {
  return {gaussian_matrix(out, hidden,
                          std::sqrt(1.0 / static_cast<double>(hidden)), rng)};
}

namespace {

std::vector<double> linear(const Matrix& w, std::span<const double> x) {
  if (x.size() != w.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "projector input size mismatch");
  }
  std::vector<double> y(w.rows(), 0.0);
  for (std::size_t i = 0; i < w.rows(); ++i) y[i] = dot(w.row(i), x);
  return y;
}

}  // namespace

std::vector<double> project(const Projector& proj, std::span<const double> x) {
  std::vector<double> y = linear(proj.w, x);
  const double norm = std::sqrt(dot(y, y));
  if (norm < kTinyNorm) {
    std::fill(y.begin(), y.end(), 0.0);
    if (!y.empty()) y[0] = 1.0;
    return y;
  }
  for (double& v : y) v /= norm;
  return y;
}

ProjectorGradient project_backward(const Projector& proj,
                                   std::span<const double> x,
                                   std::span<const double> grad_output) {
  const std::vector<double> y = linear(proj.w, x);
  const double norm = std::sqrt(dot(y, y));
  ProjectorGradient g{Matrix(proj.w.rows(), proj.w.cols(), 0.0),
                      std::vector<double>(x.size(), 0.0)};
  if (norm < kTinyNorm) return g;
  // z = y / |y|  =>  dL/dy = (g - z (z . g)) / |y|.
  std::vector<double> z(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) z[i] = y[i] / norm;
  const double zg = dot(z, grad_output);
  std::vector<double> gy(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    gy[i] = (grad_output[i] - z[i] * zg) / norm;
  }
  for (std::size_t i = 0; i < proj.w.rows(); ++i) {
    for (std::size_t j = 0; j < proj.w.cols(); ++j) {
      g.w(i, j) = gy[i] * x[j];
      g.input[j] += proj.w(i, j) * gy[i];
    }
  }
  return g;
}

}  // namespace stjd
