#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "stjd/encoder.hpp"
#include "stjd/skeleton.hpp"

namespace stjd {

struct LabeledFeature {
  std::vector<double> x;
  int label = 0;
};

struct ProbeOptions {
  double test_fraction = 0.3;
  std::size_t iterations = 1000;
  double learning_rate = 0.5;
  double l2 = 1e-4;
  std::uint64_t seed = 0;
};

struct ProbeResult {
  double accuracy = 0.0;
  double train_accuracy = 0.0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
};

// Shuffles with the seed, holds out test_fraction of the samples, trains a
// multinomial logistic classifier on standardized features by full-batch
// gradient descent, and reports test accuracy. Throws DegenerateSplit when
// the training split has fewer than two classes or the test split is empty.
ProbeResult linear_probe(std::span<const LabeledFeature> samples,
                         const ProbeOptions& options = {});

// As above with an explicit split.
ProbeResult linear_probe(std::span<const LabeledFeature> train,
                         std::span<const LabeledFeature> test,
                         const ProbeOptions& options);

// Frozen-encoder features: GAP of the encoder output.
std::vector<double> extract_features(const EncoderParams& encoder,
                                     const SkeletonSequence& seq);

}  // namespace stjd
