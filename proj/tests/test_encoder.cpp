#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "stjd/encoder.hpp"
#include "stjd/error.hpp"

using namespace stjd;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& gen) {
  std::normal_distribution<double> n(0.0, 0.7);
  Matrix m(r, c);
  for (double& x : m.data()) x = n(gen);
  return m;
}

// Loop-by-loop forward pass, output d x T x V.
Tensor3 naive_encode(const EncoderParams& p, const Tensor3& X) {
  const std::size_t C = X.dim0(), V = X.dim1(), T = X.dim2(), d = p.w1.rows();
  Tensor3 h(d, T, V, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t v = 0; v < V; ++v) {
      for (std::size_t k = 0; k < d; ++k) {
        double s = 0.0;
        for (std::size_t c = 0; c < C; ++c) s += p.w1(k, c) * X(c, v, t);
        h(k, t, v) = std::max(0.0, s);
      }
    }
  }
  Tensor3 out(d, T, V, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t v = 0; v < V; ++v) {
      std::vector<double> mixed(d, 0.0);
      for (std::size_t k = 0; k < d; ++k) {
        for (std::size_t u = 0; u < V; ++u) mixed[k] += p.adjacency(v, u) * h(k, t, u);
      }
      for (std::size_t k = 0; k < d; ++k) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += p.w2(k, j) * mixed[j];
        out(k, t, v) = std::max(0.0, s);
      }
    }
  }
  return out;
}

double weighted_sum(const Tensor3& a, const Tensor3& g) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * g.data()[i];
  return s;
}

}  // namespace

TEST_CASE("adjacency: rows sum to one over the closed neighbourhood") {
  const auto layout = JointLayout::ntu25();
  const auto a = normalized_adjacency(layout);
  std::vector<int> degree(25, 1);
  for (const auto& [p, c] : layout.edges) {
    ++degree[p];
    ++degree[c];
  }
  for (std::size_t v = 0; v < 25; ++v) {
    double sum = 0.0;
    for (std::size_t u = 0; u < 25; ++u) {
      sum += a(v, u);
      if (a(v, u) != 0.0) CHECK(a(v, u) == doctest::Approx(1.0 / degree[v]));
      CHECK((a(v, u) != 0.0) == (a(u, v) != 0.0));
    }
    CHECK(sum == doctest::Approx(1.0));
    CHECK(a(v, v) > 0.0);
  }
  const auto chain = normalized_adjacency(JointLayout::generic(3));
  CHECK(chain(0, 0) == doctest::Approx(0.5));
  CHECK(chain(1, 0) == doctest::Approx(1.0 / 3));
  CHECK(chain(0, 2) == 0.0);
}

TEST_CASE("encode: zero weights or zero input give zero features") {
  std::mt19937_64 gen(1);
  Rng rng(1);
  auto p = EncoderParams::random(3, 8, JointLayout::ntu25(), rng);
  const auto X = oracle::random_tensor(3, 25, 4, gen, 1.0);
  auto zero = p;
  zero.w1 = Matrix(8, 3, 0.0);
  for (double x : encode(zero, X).data()) CHECK(x == 0.0);
  for (double x : encode(p, Tensor3(3, 25, 4, 0.0)).data()) CHECK(x == 0.0);
}

TEST_CASE("encode: scalar case") {
  EncoderParams p;
  p.w1 = Matrix(1, 1, 2.0);
  p.w2 = Matrix(1, 1, 3.0);
  p.adjacency = Matrix(1, 1, 1.0);
  CHECK(encode(p, Tensor3(1, 1, 1, 0.5))(0, 0, 0) == doctest::Approx(3.0));
  CHECK(encode(p, Tensor3(1, 1, 1, -0.5))(0, 0, 0) == 0.0);
}

TEST_CASE("encode: matches the loop-by-loop oracle") {
  std::mt19937_64 gen(2);
  Rng rng(2);
  const auto layout = JointLayout::ntu25();
  for (int trial = 0; trial < 5; ++trial) {
    const auto p = EncoderParams::random(3, 6, layout, rng);
    const auto X = oracle::random_tensor(3, 25, 7, gen, 1.0);
    const auto U = encode(p, X);
    const auto ref = naive_encode(p, X);
    REQUIRE(U.dim0() == 6);
    REQUIRE(U.dim1() == 7);
    REQUIRE(U.dim2() == 25);
    for (std::size_t i = 0; i < U.size(); ++i) {
      REQUIRE(U.data()[i] == doctest::Approx(ref.data()[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("encode: shape errors") {
  Rng rng(3);
  const auto p = EncoderParams::random(3, 4, JointLayout::ntu25(), rng);
  CHECK_THROWS_AS(encode(p, Tensor3(2, 25, 3)), Error);
  CHECK_THROWS_AS(encode(p, Tensor3(3, 24, 3)), Error);
}

TEST_CASE("pooling: examples") {
  Tensor3 U(2, 2, 2);
  const double vals[8] = {1, 2, 3, 4, 10, 20, 30, 40};
  std::copy(vals, vals + 8, U.data().begin());
  const auto g = gap_pool(U);
  CHECK(g[0] == doctest::Approx(2.5));
  CHECK(g[1] == doctest::Approx(25.0));

  BinaryMask m(2, 2, 0);
  m(0, 1) = 1;
  m(1, 1) = 1;
  const auto j = jafp_pool(U, m);
  CHECK(j[0] == doctest::Approx(3.0));
  CHECK(j[1] == doctest::Approx(30.0));

  BinaryMask all(2, 2, 1);
  CHECK(jafp_pool(U, all) == gap_pool(U));
  CHECK_THROWS_AS(jafp_pool(U, BinaryMask(2, 2, 0)), Error);
  CHECK_THROWS_AS(jafp_pool(U, BinaryMask(3, 2, 1)), Error);
}

TEST_CASE("pooling: brute-force means") {
  std::mt19937_64 gen(4);
  const auto U = oracle::random_tensor(5, 6, 7, gen, 1.0);
  std::bernoulli_distribution b(0.4);
  BinaryMask m(6, 7);
  for (auto& x : m.data()) x = b(gen);
  m(0, 0) = 1;
  const auto g = gap_pool(U);
  const auto j = jafp_pool(U, m);
  for (std::size_t k = 0; k < 5; ++k) {
    long double s = 0, sm = 0, n = 0;
    for (std::size_t t = 0; t < 6; ++t) {
      for (std::size_t v = 0; v < 7; ++v) {
        s += U(k, t, v);
        if (m(t, v)) {
          sm += U(k, t, v);
          n += 1;
        }
      }
    }
    CHECK(g[k] == doctest::Approx(static_cast<double>(s / 42)).epsilon(1e-13));
    CHECK(j[k] == doctest::Approx(static_cast<double>(sm / n)).epsilon(1e-13));
  }
  const std::vector<double> gp = {1, -2, 3, 0, 5};
  const auto back = gap_pool_backward(gp, 6, 7);
  for (std::size_t k = 0; k < 5; ++k) CHECK(back(k, 3, 4) == doctest::Approx(gp[k] / 42));
}

TEST_CASE("projector: unit norm and zero input") {
  std::mt19937_64 gen(5);
  Rng rng(5);
  const auto proj = Projector::random(6, 4, rng);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(6);
    for (double& v : x) v = n(gen);
    const auto z = project(proj, x);
    REQUIRE(z.size() == 4);
    CHECK(dot(z, z) == doctest::Approx(1.0).epsilon(1e-12));
  }
  const auto z0 = project(proj, std::vector<double>(6, 0.0));
  CHECK(z0 == std::vector<double>{1, 0, 0, 0});
  const auto g0 = project_backward(proj, std::vector<double>(6, 0.0), std::vector<double>{1, 1, 1, 1});
  for (double v : g0.input) CHECK(v == 0.0);
}

TEST_CASE("projector: backward matches finite differences") {
  std::mt19937_64 gen(6);
  Projector proj{random_matrix(4, 5, gen)};
  const std::vector<double> x = {0.3, -0.2, 0.9, 0.1, -0.7};
  const std::vector<double> g = {0.5, -1.0, 0.25, 2.0};
  auto loss = [&](const Projector& p, const std::vector<double>& in) {
    return dot(project(p, in), g);
  };
  const auto grad = project_backward(proj, x, g);
  const double eps = 1e-6;
  for (std::size_t i = 0; i < proj.w.size(); ++i) {
    auto plus = proj, minus = proj;
    plus.w.data()[i] += eps;
    minus.w.data()[i] -= eps;
    const double fd = (loss(plus, x) - loss(minus, x)) / (2 * eps);
    CHECK(grad.w.data()[i] == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto plus = x, minus = x;
    plus[i] += eps;
    minus[i] -= eps;
    const double fd = (loss(proj, plus) - loss(proj, minus)) / (2 * eps);
    CHECK(grad.input[i] == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
  }
}

TEST_CASE("encode: backward matches finite differences") {
  std::mt19937_64 gen(7);
  EncoderParams p;
  p.w1 = random_matrix(4, 3, gen);
  p.w2 = random_matrix(4, 4, gen);
  p.adjacency = normalized_adjacency(JointLayout::generic(5));
  const auto X = oracle::random_tensor(3, 5, 6, gen, 1.0);
  const auto G = oracle::random_tensor(4, 6, 5, gen, 1.0);
  EncoderTape tape;
  const auto U = encode(p, X, &tape);
  const auto grad = encode_backward(p, X, tape, G);
  const double eps = 1e-6;
  auto check = [&](Matrix EncoderParams::*field, const Matrix& analytic) {
    for (std::size_t i = 0; i < (p.*field).size(); ++i) {
      auto plus = p, minus = p;
      (plus.*field).data()[i] += eps;
      (minus.*field).data()[i] -= eps;
      const double fd =
          (weighted_sum(encode(plus, X), G) - weighted_sum(encode(minus, X), G)) / (2 * eps);
      CHECK(std::abs(analytic.data()[i] - fd) < 1e-5 * std::max(1.0, std::abs(fd)));
    }
  };
  check(&EncoderParams::w1, grad.w1);
  check(&EncoderParams::w2, grad.w2);
}
