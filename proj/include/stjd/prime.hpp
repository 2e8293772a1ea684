#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "stjd/array.hpp"
#include "stjd/skeleton.hpp"

namespace stjd {

inline constexpr double kDefaultBeta = 0.65;

// Frame-resolved prime joints: mask(t, v) == 1 iff normalized(t, v) >= beta,
// except that an otherwise empty mask gets its argmax entry promoted.
struct PrimeMask {
  BinaryMask mask;  // T x V
  double beta = kDefaultBeta;
  bool fallback_applied = false;

  std::size_t count() const;
};

PrimeMask detect_prime(const Matrix& normalized, double beta = kDefaultBeta);

// Complement of a binary mask.
BinaryMask invert(const BinaryMask& mask);

// Per-joint aggregate: a joint is prime if it is prime in any frame.
std::vector<unsigned char> prime_joints_any_frame(const BinaryMask& mask);

// A joint is part-prime at frame t iff any joint of its part is prime at t.
BinaryMask prime_parts(const BinaryMask& mask, const JointLayout& layout);

inline constexpr double kDefaultMaskRatio = 0.9;
inline constexpr double kDefaultMaskTemperature = 1.0;

struct MaskingPlan {
  // (frame, joint) pairs in draw order.
  std::vector<std::pair<std::size_t, std::size_t>> masked_indices;
  Matrix probabilities;  // T x V, sums to 1
  double ratio = kDefaultMaskRatio;
  std::uint64_t seed = 0;

  BinaryMask as_mask() const;
};

// Number of entries a plan masks: floor(ratio * count), tolerant of the
// representation error in ratio.
std::size_t masked_count(double ratio, std::size_t entries);

// Draws floor(ratio * T * V) distinct entries with probability proportional
// to softmax(normalized / temperature), without replacement.
MaskingPlan sample_mask_plan(const Matrix& normalized,
                             double ratio = kDefaultMaskRatio,
                             double temperature = kDefaultMaskTemperature,
                             std::uint64_t seed = 0);

std::string mask_to_json(const BinaryMask& mask);
std::string plan_to_json(const MaskingPlan& plan);

}  // namespace stjd
