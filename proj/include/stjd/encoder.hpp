#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "stjd/array.hpp"
#include "stjd/random.hpp"
#include "stjd/skeleton.hpp"

namespace stjd {

// Feature map laid out as d x T x V.
using FeatureMap = Tensor3;

// Row-normalized adjacency with self-loops; undirected over layout edges.
Matrix normalized_adjacency(const JointLayout& layout);

// Reference two-layer graph encoder:
//   U = relu(W2 * mix_A(relu(W1 * x_tv)))
// where mix_A averages each joint's features over its graph neighbourhood.
struct EncoderParams {
  Matrix w1;         // d x C
  Matrix w2;         // d x d
  Matrix adjacency;  // V x V, fixed

  std::size_t in_channels() const noexcept { return w1.cols(); }
  std::size_t hidden() const noexcept { return w1.rows(); }
  std::size_t joints() const noexcept { return adjacency.rows(); }

  // He-style Gaussian initialization.
  static EncoderParams random(std::size_t in_channels, std::size_t hidden,
                              const JointLayout& layout, Rng& rng);
};

// Intermediate activations kept for the backward pass.
struct EncoderTape {
  Tensor3 pre1;   // W1 x, d x T x V
  Tensor3 mixed;  // mix_A(relu(pre1))
  Tensor3 pre2;   // W2 mixed
};

FeatureMap encode(const EncoderParams& params, const Tensor3& X,
                  EncoderTape* tape = nullptr);

struct EncoderGradient {
  Matrix w1;
  Matrix w2;
};

// Backpropagates dL/dU through the encoder. X and tape must come from the
// forward pass that produced U.
EncoderGradient encode_backward(const EncoderParams& params, const Tensor3& X,
                                const EncoderTape& tape,
                                const FeatureMap& grad_output);

// Mean over all (t, v) per channel.
std::vector<double> gap_pool(const FeatureMap& U);
// Mask-weighted mean over (t, v) per channel; mask is T x V. Throws EmptyMask
// when the mask has no nonzero entry.
std::vector<double> jafp_pool(const FeatureMap& U, const BinaryMask& mask);

// dL/dU for the GAP path given dL/dpooled.
FeatureMap gap_pool_backward(std::span<const double> grad_pooled,
                             std::size_t T, std::size_t V);

// Linear projection followed by L2 normalization.
struct Projector {
  Matrix w;  // p x d

  static Projector random(std::size_t hidden, std::size_t out, Rng& rng);
};

// Unit-norm output. A zero pre-normalization vector maps to the first basis
// vector, with zero gradient.
std::vector<double> project(const Projector& proj, std::span<const double> x);

struct ProjectorGradient {
  Matrix w;
  std::vector<double> input;
};

ProjectorGradient project_backward(const Projector& proj,
                                   std::span<const double> x,
                                   std::span<const double> grad_output);

double dot(std::span<const double> a, std::span<const double> b);

}  // namespace stjd
