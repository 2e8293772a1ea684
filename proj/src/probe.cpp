#include "stjd/probe.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "stjd/error.hpp"
#include "stjd/random.hpp"

namespace stjd {

ProbeResult linear_probe(std::span<const LabeledFeature> samples,
                         const ProbeOptions& options) {
  if (!(options.test_fraction > 0.0 && options.test_fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "test_fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(options.seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.below(i)]);
  }
  const auto n_test = static_cast<std::size_t>(
      std::lround(options.test_fraction * static_cast<double>(samples.size())));
  std::vector<LabeledFeature> train;
  std::vector<LabeledFeature> test;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_test ? test : train).push_back(samples[order[i]]);
  }
  return linear_probe(train, test, options);
}

ProbeResult linear_probe(std::span<const LabeledFeature> train,
                         std::span<const LabeledFeature> test,
                         const ProbeOptions& options) {
  std::set<int> train_labels;
  for (const auto& s : train) train_labels.insert(s.label);
  if (train_labels.size() < 2 || test.empty()) {
    throw Error(ErrorCode::kDegenerateSplit,
                "probe needs two training classes and a non-empty test split");
  }
  const std::size_t F = train.front().x.size();
  for (const auto& s : train) {
    if (s.x.size() != F) {
      throw Error(ErrorCode::kShapeMismatch, "feature sizes differ");
    }
  }
  for (const auto& s : test) {
    if (s.x.size() != F) {
      throw Error(ErrorCode::kShapeMismatch, "feature sizes differ");
    }
  }

  // Class index per label; test labels unseen in training can never be hit.
  std::map<int, std::size_t> class_of;
  for (int label : train_labels) class_of.emplace(label, class_of.size());
  const std::size_t K = class_of.size();
  const std::size_t N = train.size();

  std::vector<double> mean(F, 0.0);
  std::vector<double> scale(F, 0.0);
  for (const auto& s : train) {
    for (std::size_t f = 0; f < F; ++f) mean[f] += s.x[f];
  }
  for (double& m : mean) m /= static_cast<double>(N);
  for (const auto& s : train) {
    for (std::size_t f = 0; f < F; ++f) {
      scale[f] += (s.x[f] - mean[f]) * (s.x[f] - mean[f]);
    }
  }
  for (double& v : scale) {
    const double sd = std::sqrt(v / static_cast<double>(N));
    v = sd > 1e-12 ? 1.0 / sd : 0.0;
  }
  auto standardize = [&](const std::vector<double>& x) {
    std::vector<double> z(F);
    for (std::size_t f = 0; f < F; ++f) z[f] = (x[f] - mean[f]) * scale[f];
    return z;
  };
  std::vector<std::vector<double>> xs;
  std::vector<std::size_t> ys;
  for (const auto& s : train) {
    xs.push_back(standardize(s.x));
    ys.push_back(class_of.at(s.label));
  }

  Rng rng(derive_seed(options.seed, 7));
  Matrix w(K, F);
  for (double& v : w.data()) v = 0.01 * rng.normal();
  std::vector<double> b(K, 0.0);

  auto scores = [&](const std::vector<double>& x) {
    std::vector<double> s(K);
    for (std::size_t k = 0; k < K; ++k) s[k] = b[k] + dot(w.row(k), x);
    return s;
  };

  Matrix gw(K, F);
  std::vector<double> gb(K);
  std::vector<double> p(K);
  for (std::size_t it = 0; it < options.iterations; ++it) {
    std::fill(gw.data().begin(), gw.data().end(), 0.0);
    std::fill(gb.begin(), gb.end(), 0.0);
    for (std::size_t n = 0; n < N; ++n) {
      const auto s = scores(xs[n]);
      const double hi = *std::max_element(s.begin(), s.end());
      double total = 0.0;
      for (std::size_t k = 0; k < K; ++k) total += p[k] = std::exp(s[k] - hi);
      for (std::size_t k = 0; k < K; ++k) {
        const double g = p[k] / total - (k == ys[n] ? 1.0 : 0.0);
        gb[k] += g;
        for (std::size_t f = 0; f < F; ++f) gw(k, f) += g * xs[n][f];
      }
    }
    const double inv_n = 1.0 / static_cast<double>(N);
    for (std::size_t k = 0; k < K; ++k) {
      b[k] -= options.learning_rate * gb[k] * inv_n;
      for (std::size_t f = 0; f < F; ++f) {
        w(k, f) -= options.learning_rate *
                   (gw(k, f) * inv_n + options.l2 * w(k, f));
      }
    }
  }

  auto predict = [&](const std::vector<double>& x) {
    const auto s = scores(x);
    return static_cast<std::size_t>(std::max_element(s.begin(), s.end()) -
                                    s.begin());
  };
  auto accuracy = [&](std::span<const LabeledFeature> set) {
    std::size_t hit = 0;
    for (const auto& s : set) {
      auto it = class_of.find(s.label);
      if (it != class_of.end() && predict(standardize(s.x)) == it->second) {
        ++hit;
      }
    }
    return static_cast<double>(hit) / static_cast<double>(set.size());
  };

  ProbeResult result;
  result.accuracy = accuracy(test);
  result.train_accuracy = accuracy(train);
  result.train_size = train.size();
  result.test_size = test.size();
  return result;
}

std::vector<double> extract_features(const EncoderParams& encoder,
                                     const SkeletonSequence& seq) {
  return gap_pool(encode(encoder, seq.values()));
}

}  // namespace stjd
