#pragma once

#include <cstddef>
#include <cstdint>

#include "stjd/array.hpp"
#include "stjd/prime.hpp"
#include "stjd/skeleton.hpp"

namespace stjd {

struct AugmentConfig {
  // Off-diagonal shear entries are drawn uniformly from +/- this value.
  double shear_amplitude = 0.3;
  // Temporal crop keeps a fraction drawn uniformly from [crop_min, crop_max].
  double crop_min = 0.8;
  double crop_max = 1.0;
  double noise_sigma = 0.01;
  double flip_probability = 0.5;
  // Region strengths used by transform_t1; scale shear and noise.
  double prime_strength = 0.5;
  double nonprime_strength = 1.0;

  // Throws InvalidConfig on out-of-range values.
  void validate() const;
};

// The random choices that affect frame and joint indexing.
struct AugmentTrace {
  std::size_t frames = 0;
  std::size_t crop_start = 0;
  std::size_t crop_length = 0;
  bool flipped = false;
};

// Shear, additive Gaussian noise, temporal crop-and-resize, then left/right
// flip, in that order. Deterministic given seed.
SkeletonSequence transform_t2(const SkeletonSequence& seq,
                              const AugmentConfig& cfg, std::uint64_t seed,
                              AugmentTrace* trace = nullptr);

// Same random draws as transform_t2, but shear and noise are scaled by
// prime_strength on prime entries and nonprime_strength elsewhere. Crop and
// flip act on the whole skeleton.
SkeletonSequence transform_t1(const SkeletonSequence& seq,
                              const PrimeMask& prime_mask,
                              const AugmentConfig& cfg, std::uint64_t seed,
                              AugmentTrace* trace = nullptr);

// Moves a T x V mask through the crop and flip recorded in trace, so that it
// indexes the augmented sequence. Frames use nearest-neighbour lookup.
BinaryMask warp_mask(const BinaryMask& mask, const AugmentTrace& trace,
                     const JointLayout& layout);

// 3x3 shear with unit diagonal; off-diagonals row-major, skipping the
// diagonal: (0,1) (0,2) (1,0) (1,2) (2,0) (2,1).
struct Shear {
  double off[6] = {0, 0, 0, 0, 0, 0};
  // Applies I + strength * (S - I) to (x, y, z) in place.
  void apply(double& x, double& y, double& z, double strength = 1.0) const;
};

}  // namespace stjd
