#include "stjd/augment.hpp"

#include <algorithm>
#include <cmath>

#include "stjd/error.hpp"
#include "stjd/random.hpp"

namespace stjd {
namespace {

struct Draws {
  Shear shear;
  std::vector<double> noise;  // standard normals, C x V x T order
  std::size_t crop_start = 0;
  std::size_t crop_length = 0;
  bool flip = false;
};

Draws draw(const SkeletonSequence& seq, const AugmentConfig& cfg,
           std::uint64_t seed) {
  Rng rng(seed);
  Draws d;
  for (double& s : d.shear.off) s = cfg.shear_amplitude * rng.uniform(-1.0, 1.0);
  d.noise.resize(seq.values().size());
  for (double& z : d.noise) z = rng.normal();
  const std::size_t T = seq.frames();
  const double ratio = rng.uniform(cfg.crop_min, cfg.crop_max);
  d.crop_length = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::lround(ratio * static_cast<double>(T))), 1,
      T);
  d.crop_start = rng.below(T - d.crop_length + 1);
  d.flip = rng.uniform() < cfg.flip_probability;
  return d;
}

// strength(v, t) selects the per-entry scale of shear and noise.
template <typename Strength>
SkeletonSequence apply(const SkeletonSequence& seq, const AugmentConfig& cfg,
                       std::uint64_t seed, AugmentTrace* trace,
                       Strength strength) {
  cfg.validate();
  const std::size_t C = seq.channels();
  const std::size_t V = seq.joints();
  const std::size_t T = seq.frames();
  const bool shear_on = cfg.shear_amplitude > 0.0;
  const bool flip_on = cfg.flip_probability > 0.0;
  if ((shear_on || flip_on) && C != 3) {
    throw Error(ErrorCode::kUnsupportedChannelCount,
                "shear and flip need 3 coordinate channels, got " +
                    std::to_string(C));
  }
  const Draws d = draw(seq, cfg, seed);

  Tensor3 x = seq.values();
  for (std::size_t v = 0; v < V; ++v) {
    for (std::size_t t = 0; t < T; ++t) {
      const double s = strength(v, t);
      if (shear_on) d.shear.apply(x(0, v, t), x(1, v, t), x(2, v, t), s);
      for (std::size_t c = 0; c < C; ++c) {
        x(c, v, t) += s * cfg.noise_sigma * d.noise[(c * V + v) * T + t];
      }
    }
  }

  Tensor3 cropped(C, V, d.crop_length);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t v = 0; v < V; ++v) {
      for (std::size_t t = 0; t < d.crop_length; ++t) {
        cropped(c, v, t) = x(c, v, d.crop_start + t);
      }
    }
  }
  SkeletonSequence out = resample_sequence(
      SkeletonSequence(std::move(cropped), seq.layout()), T);

  if (d.flip) {
    Tensor3 flipped = out.values();
    for (const auto& [a, b] : seq.layout().mirror_pairs) {
      for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t t = 0; t < T; ++t) {
          std::swap(flipped(c, a, t), flipped(c, b, t));
        }
      }
    }
    // Mirror across the sagittal plane.
    for (std::size_t v = 0; v < V; ++v) {
      for (std::size_t t = 0; t < T; ++t) flipped(0, v, t) = -flipped(0, v, t);
    }
    out = SkeletonSequence(std::move(flipped), seq.layout());
  }

  out.subject_id = seq.subject_id;
  out.action_label = seq.action_label;
  out.person_index = seq.person_index;
  if (trace) {
    trace->frames = T;
    trace->crop_start = d.crop_start;
    trace->crop_length = d.crop_length;
    trace->flipped = d.flip;
  }
  return out;
}

}  // namespace

void AugmentConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::kInvalidConfig, what);
  };
  if (!(shear_amplitude >= 0.0)) fail("shear_amplitude must be >= 0");
  if (!(crop_min > 0.0 && crop_min <= crop_max && crop_max <= 1.0)) {
    fail("crop ratios must satisfy 0 < crop_min <= crop_max <= 1");
  }
  if (!(noise_sigma >= 0.0)) fail("noise_sigma must be >= 0");
  if (!(flip_probability >= 0.0 && flip_probability <= 1.0)) {
    fail("flip_probability must lie in [0, 1]");
  }
  if (!(prime_strength >= 0.0 && prime_strength <= 1.0)) {
    fail("prime_strength must lie in [0, 1]");
  }
  if (!(nonprime_strength >= 0.0 && nonprime_strength <= 1.0)) {
    fail("nonprime_strength must lie in [0, 1]");
  }
}

void Shear::apply(double& x, double& y, double& z, double strength) const {
  const double nx = x + strength * (off[0] * y + off[1] * z);
  const double ny = y + strength * (off[2] * x + off[3] * z);
  const double nz = z + strength * (off[4] * x + off[5] * y);
  x = nx;
  y = ny;
  z = nz;
}

SkeletonSequence transform_t2(const SkeletonSequence& seq,
                              const AugmentConfig& cfg, std::uint64_t seed,
                              AugmentTrace* trace) {
  return apply(seq, cfg, seed, trace,
               [](std::size_t, std::size_t) { return 1.0; });
}

SkeletonSequence transform_t1(const SkeletonSequence& seq,
                              const PrimeMask& prime_mask,
                              const AugmentConfig& cfg, std::uint64_t seed,
                              AugmentTrace* trace) {
  const BinaryMask& m = prime_mask.mask;
  if (m.rows() != seq.frames() || m.cols() != seq.joints()) {
    throw Error(ErrorCode::kMaskShapeMismatch,
                "prime mask shape does not match the sequence");
  }
  return apply(seq, cfg, seed, trace, [&](std::size_t v, std::size_t t) {
    return m(t, v) ? cfg.prime_strength : cfg.nonprime_strength;
  });
}

BinaryMask warp_mask(const BinaryMask& mask, const AugmentTrace& trace,
                     const JointLayout& layout) {
  const std::size_t T = trace.frames;
  if (mask.rows() != T || mask.cols() != layout.joint_count) {
    throw Error(ErrorCode::kMaskShapeMismatch,
                "mask shape does not match the augmentation trace");
  }
  BinaryMask out(T, mask.cols(), 0);
  for (std::size_t k = 0; k < T; ++k) {
    const double pos =
        T == 1 ? 0.0
               : static_cast<double>(k * (trace.crop_length - 1)) /
                     static_cast<double>(T - 1);
    const std::size_t src =
        trace.crop_start + static_cast<std::size_t>(std::lround(pos));
    for (std::size_t v = 0; v < mask.cols(); ++v) out(k, v) = mask(src, v);
  }
  if (trace.flipped) {
    for (const auto& [a, b] : layout.mirror_pairs) {
      for (std::size_t k = 0; k < T; ++k) std::swap(out(k, a), out(k, b));
    }
  }
  return out;
}

}  // namespace stjd
