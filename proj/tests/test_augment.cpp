#include <cmath>
#include <functional>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "stjd/augment.hpp"
#include "stjd/error.hpp"

using namespace stjd;

namespace {

SkeletonSequence random_sequence(std::size_t T, std::uint64_t seed,
                                 std::size_t C = 3) {
  std::mt19937_64 gen(seed);
  const auto layout = C == 3 ? JointLayout::ntu25() : JointLayout::generic(25);
  return SkeletonSequence(oracle::random_tensor(C, 25, T, gen, 0.5), layout);
}

AugmentConfig quiet() {
  AugmentConfig cfg;
  cfg.shear_amplitude = 0.0;
  cfg.noise_sigma = 0.0;
  cfg.crop_min = 1.0;
  cfg.crop_max = 1.0;
  cfg.flip_probability = 0.0;
  return cfg;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::kIoError;
}

}  // namespace

TEST_CASE("shear: hand example") {
  Shear s;
  for (double& o : s.off) o = 0.5;
  double x = 1, y = 2, z = 3;
  s.apply(x, y, z);
  CHECK(x == doctest::Approx(3.5));
  CHECK(y == doctest::Approx(4.0));
  CHECK(z == doctest::Approx(4.5));
  x = 1, y = 2, z = 3;
  s.apply(x, y, z, 0.5);
  CHECK(x == doctest::Approx(2.25));
  CHECK(y == doctest::Approx(3.0));
  CHECK(z == doctest::Approx(3.75));
  x = 1, y = 2, z = 3;
  s.apply(x, y, z, 0.0);
  CHECK(x == 1.0);
  CHECK(y == 2.0);
  CHECK(z == 3.0);
}

TEST_CASE("augment: all-off configuration is the identity") {
  const auto seq = random_sequence(12, 1);
  AugmentTrace trace;
  const auto out = transform_t2(seq, quiet(), 99, &trace);
  CHECK(out.values() == seq.values());
  CHECK(trace.crop_start == 0);
  CHECK(trace.crop_length == 12);
  CHECK(!trace.flipped);
}

TEST_CASE("augment: deterministic given the seed") {
  const auto seq = random_sequence(20, 2);
  const AugmentConfig cfg;
  CHECK(transform_t2(seq, cfg, 5).values() == transform_t2(seq, cfg, 5).values());
  CHECK(transform_t2(seq, cfg, 5).values() != transform_t2(seq, cfg, 6).values());
}

TEST_CASE("augment: output keeps the input shape") {
  for (std::size_t T : {1u, 2u, 7u, 50u}) {
    const auto seq = random_sequence(T, 3 + T);
    const auto out = transform_t2(seq, AugmentConfig{}, T);
    CHECK(out.channels() == 3);
    CHECK(out.joints() == 25);
    CHECK(out.frames() == T);
  }
}

TEST_CASE("augment: shear alone is a per-sequence linear map") {
  auto cfg = quiet();
  cfg.shear_amplitude = 0.3;
  const auto a = random_sequence(8, 4);
  const auto b = random_sequence(8, 5);
  Tensor3 sum = a.values();
  for (std::size_t i = 0; i < sum.size(); ++i) sum.data()[i] += b.values().data()[i];
  const auto oa = transform_t2(a, cfg, 11);
  const auto ob = transform_t2(b, cfg, 11);
  const auto os = transform_t2(SkeletonSequence(sum, a.layout()), cfg, 11);
  for (std::size_t i = 0; i < sum.size(); ++i) {
    REQUIRE(os.values().data()[i] ==
            doctest::Approx(oa.values().data()[i] + ob.values().data()[i]).epsilon(1e-12));
  }
  // Unit vectors recover the matrix; its diagonal is 1 and off-diagonals are bounded.
  Tensor3 basis(3, 25, 3, 0.0);
  for (std::size_t c = 0; c < 3; ++c) basis(c, 0, c) = 1.0;
  const auto m = transform_t2(SkeletonSequence(basis, a.layout()), cfg, 11);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 3; ++c) {
      if (r == c) {
        CHECK(m(r, 0, c) == doctest::Approx(1.0));
      } else {
        CHECK(std::abs(m(r, 0, c)) <= 0.3);
      }
    }
  }
}

TEST_CASE("augment: crop resamples a window of the clip") {
  auto cfg = quiet();
  cfg.crop_min = 0.5;
  cfg.crop_max = 0.5;
  const std::size_t T = 21;
  Tensor3 ramp(3, 25, T);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t v = 0; v < 25; ++v) {
      for (std::size_t t = 0; t < T; ++t) ramp(c, v, t) = static_cast<double>(t) + c + v;
    }
  }
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    AugmentTrace trace;
    const auto out = transform_t2(SkeletonSequence(ramp, JointLayout::ntu25()), cfg, seed, &trace);
    REQUIRE(trace.crop_length == 11);
    REQUIRE(trace.crop_start + trace.crop_length <= T);
    for (std::size_t k = 0; k < T; ++k) {
      const double pos = trace.crop_start + k * (trace.crop_length - 1.0) / (T - 1.0);
      CHECK(out(1, 3, k) == doctest::Approx(pos + 4.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("augment: flip mirrors x and swaps counterparts") {
  auto cfg = quiet();
  cfg.flip_probability = 1.0;
  const auto seq = random_sequence(6, 6);
  AugmentTrace trace;
  const auto out = transform_t2(seq, cfg, 1, &trace);
  CHECK(trace.flipped);
  const auto& layout = seq.layout();
  std::vector<std::size_t> partner(25);
  for (std::size_t v = 0; v < 25; ++v) partner[v] = v;
  for (const auto& [a, b] : layout.mirror_pairs) {
    partner[a] = b;
    partner[b] = a;
  }
  for (std::size_t v = 0; v < 25; ++v) {
    for (std::size_t t = 0; t < 6; ++t) {
      CHECK(out(0, v, t) == -seq(0, partner[v], t));
      CHECK(out(1, v, t) == seq(1, partner[v], t));
      CHECK(out(2, v, t) == seq(2, partner[v], t));
    }
  }
  // Flipping twice restores the clip.
  CHECK(transform_t2(out, cfg, 1).values() == seq.values());
}

TEST_CASE("augment: noise has the configured scale") {
  auto cfg = quiet();
  cfg.noise_sigma = 0.02;
  const auto seq = random_sequence(400, 7);
  const auto out = transform_t2(seq, cfg, 3);
  double s1 = 0.0, s2 = 0.0;
  const auto n = static_cast<double>(seq.values().size());
  for (std::size_t i = 0; i < seq.values().size(); ++i) {
    const double d = out.values().data()[i] - seq.values().data()[i];
    s1 += d;
    s2 += d * d;
  }
  CHECK(std::abs(s1 / n) < 0.001);
  CHECK(std::sqrt(s2 / n) == doctest::Approx(0.02).epsilon(0.02));
}

TEST_CASE("t1: equal region strengths reproduce t2") {
  const auto seq = random_sequence(15, 8);
  AugmentConfig cfg;
  cfg.prime_strength = 1.0;
  cfg.nonprime_strength = 1.0;
  PrimeMask pm;
  pm.mask = BinaryMask(15, 25, 0);
  pm.mask(3, 4) = 1;
  pm.mask(9, 11) = 1;
  CHECK(transform_t1(seq, pm, cfg, 21).values() == transform_t2(seq, cfg, 21).values());
}

TEST_CASE("t1: region strengths scale only their own entries") {
  const auto seq = random_sequence(10, 9);
  auto cfg = quiet();
  cfg.shear_amplitude = 0.3;
  cfg.noise_sigma = 0.05;
  cfg.prime_strength = 0.0;
  cfg.nonprime_strength = 1.0;
  PrimeMask pm;
  pm.mask = BinaryMask(10, 25, 0);
  std::mt19937_64 gen(1);
  std::bernoulli_distribution b(0.3);
  for (auto& x : pm.mask.data()) x = b(gen);
  const auto out = transform_t1(seq, pm, cfg, 4);
  const auto full = transform_t2(seq, cfg, 4);
  for (std::size_t v = 0; v < 25; ++v) {
    for (std::size_t t = 0; t < 10; ++t) {
      for (std::size_t c = 0; c < 3; ++c) {
        if (pm.mask(t, v)) {
          REQUIRE(out(c, v, t) == seq(c, v, t));
        } else {
          REQUIRE(out(c, v, t) == full(c, v, t));
        }
      }
    }
  }
}

TEST_CASE("augment: errors") {
  const auto two = random_sequence(5, 10, 2);
  CHECK(code_of([&] { transform_t2(two, AugmentConfig{}, 0); }) ==
        ErrorCode::kUnsupportedChannelCount);
  auto no_geometry = quiet();
  no_geometry.noise_sigma = 0.01;
  CHECK(transform_t2(two, no_geometry, 0).channels() == 2);

  const auto seq = random_sequence(5, 11);
  PrimeMask pm;
  pm.mask = BinaryMask(4, 25, 0);
  CHECK(code_of([&] { transform_t1(seq, pm, AugmentConfig{}, 0); }) ==
        ErrorCode::kMaskShapeMismatch);

  AugmentConfig bad;
  bad.crop_min = 0.0;
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::kInvalidConfig);
  bad = AugmentConfig{};
  bad.flip_probability = 1.5;
  CHECK(code_of([&] { transform_t2(seq, bad, 0); }) == ErrorCode::kInvalidConfig);
}

TEST_CASE("warp mask") {
  const auto layout = JointLayout::ntu25();
  BinaryMask m(5, 25, 0);
  for (std::size_t t = 0; t < 5; ++t) m(t, t) = 1;
  m(2, ntu::kHandLeft) = 1;

  SUBCASE("identity trace") {
    CHECK(warp_mask(m, AugmentTrace{5, 0, 5, false}, layout) == m);
  }
  SUBCASE("crop uses nearest frames") {
    const auto w = warp_mask(m, AugmentTrace{5, 2, 3, false}, layout);
    const std::size_t src[5] = {2, 3, 3, 4, 4};
    for (std::size_t k = 0; k < 5; ++k) {
      for (std::size_t v = 0; v < 25; ++v) CHECK(w(k, v) == m(src[k], v));
    }
  }
  SUBCASE("flip swaps counterparts") {
    const auto w = warp_mask(m, AugmentTrace{5, 0, 5, true}, layout);
    CHECK(w(2, ntu::kHandRight) == 1);
    CHECK(w(2, ntu::kHandLeft) == 0);
    CHECK(w(0, 0) == 1);
  }
  SUBCASE("matches the trace of a real augmentation") {
    AugmentConfig cfg;
    cfg.flip_probability = 1.0;
    cfg.crop_min = 0.6;
    AugmentTrace trace;
    transform_t2(random_sequence(5, 12), cfg, 8, &trace);
    const auto w = warp_mask(m, trace, layout);
    CHECK(w.rows() == 5);
    CHECK(w(0, ntu::kHandRight) == m(trace.crop_start, ntu::kHandLeft));
  }
  SUBCASE("shape mismatch") {
    CHECK(code_of([&] { warp_mask(BinaryMask(4, 25), AugmentTrace{5, 0, 5, false}, layout); }) ==
          ErrorCode::kMaskShapeMismatch);
  }
}
