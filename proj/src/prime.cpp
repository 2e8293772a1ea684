#include "stjd/prime.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"
#include "stjd/error.hpp"
#include "stjd/random.hpp"

namespace stjd {

std::size_t PrimeMask::count() const {
  return static_cast<std::size_t>(
      std::count(mask.data().begin(), mask.data().end(), 1));
}

PrimeMask detect_prime(const Matrix& normalized, double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "beta must lie in [0, 1]");
  }
  PrimeMask out;
  out.beta = beta;
  out.mask = BinaryMask(normalized.rows(), normalized.cols(), 0);
  if (normalized.size() == 0) return out;
  const auto& in = normalized.data();
  auto& m = out.mask.data();
  bool any = false;
  for (std::size_t i = 0; i < in.size(); ++i) {
    m[i] = in[i] >= beta ? 1 : 0;
    any = any || m[i];
  }
  if (!any) {
    const auto best = std::max_element(in.begin(), in.end()) - in.begin();
    m[static_cast<std::size_t>(best)] = 1;
    out.fallback_applied = true;
  }
  return out;
}

BinaryMask invert(const BinaryMask& mask) {
  BinaryMask out(mask.rows(), mask.cols());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    out.data()[i] = mask.data()[i] ? 0 : 1;
  }
  return out;
}

std::vector<unsigned char> prime_joints_any_frame(const BinaryMask& mask) {
  std::vector<unsigned char> joints(mask.cols(), 0);
  for (std::size_t t = 0; t < mask.rows(); ++t) {
    for (std::size_t v = 0; v < mask.cols(); ++v) {
      joints[v] = joints[v] | mask(t, v);
    }
  }
  return joints;
}

BinaryMask prime_parts(const BinaryMask& mask, const JointLayout& layout) {
  if (mask.cols() != layout.joint_count) {
    throw Error(ErrorCode::kMaskShapeMismatch,
                "mask joint count does not match layout");
  }
  const auto owner = layout.part_of_joint();
  const std::size_t parts = layout.part_map.size();
  BinaryMask out(mask.rows(), mask.cols(), 0);
  std::vector<unsigned char> hit(parts);
  for (std::size_t t = 0; t < mask.rows(); ++t) {
    std::fill(hit.begin(), hit.end(), 0);
    for (std::size_t v = 0; v < mask.cols(); ++v) {
      if (mask(t, v)) hit[owner[v]] = 1;
    }
    for (std::size_t v = 0; v < mask.cols(); ++v) out(t, v) = hit[owner[v]];
  }
  return out;
}

BinaryMask MaskingPlan::as_mask() const {
  BinaryMask out(probabilities.rows(), probabilities.cols(), 0);
  for (const auto& [t, v] : masked_indices) out(t, v) = 1;
  return out;
}

std::size_t masked_count(double ratio, std::size_t entries) {
  const double exact = ratio * static_cast<double>(entries);
  const auto n = static_cast<std::size_t>(std::floor(exact + 1e-9));
  return std::min(n, entries);
}

MaskingPlan sample_mask_plan(const Matrix& normalized, double ratio,
                             double temperature, std::uint64_t seed) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "mask ratio must lie in [0, 1]");
  }
  if (!(temperature > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "mask temperature must be positive");
  }
  MaskingPlan plan;
  plan.ratio = ratio;
  plan.seed = seed;
  plan.probabilities = Matrix(normalized.rows(), normalized.cols());
  const std::size_t n = normalized.size();
  if (n == 0) return plan;

  const auto& x = normalized.data();
  auto& p = plan.probabilities.data();
  const double hi = *std::max_element(x.begin(), x.end());
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = std::exp((x[i] - hi) / temperature);
    total += p[i];
  }
  for (double& w : p) w /= total;

  // Exponential-race sampling: the k smallest E_i / w_i with E_i ~ Exp(1)
  // form a weighted draw without replacement.
  Rng rng(seed);
  std::vector<double> keys(n);
  for (std::size_t i = 0; i < n; ++i) {
    keys[i] = -std::log(rng.uniform_open_low()) / p[i];
  }
  const std::size_t k = masked_count(ratio, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + static_cast<long>(k),
                    order.end(), [&](std::size_t a, std::size_t b) {
                      return keys[a] < keys[b] || (keys[a] == keys[b] && a < b);
                    });
  const std::size_t V = normalized.cols();
  plan.masked_indices.reserve(k);
  for (std::size_t j = 0; j < k; ++j) {
    plan.masked_indices.emplace_back(order[j] / V, order[j] % V);
  }
  return plan;
}

std::string mask_to_json(const BinaryMask& mask) {
  nlohmann::json j;
  j["shape"] = {mask.rows(), mask.cols()};
  std::vector<int> values(mask.data().begin(), mask.data().end());
  j["values"] = values;
  return j.dump();
}

std::string plan_to_json(const MaskingPlan& plan) {
  nlohmann::json j;
  j["shape"] = {plan.probabilities.rows(), plan.probabilities.cols()};
  j["ratio"] = plan.ratio;
  j["seed"] = plan.seed;
  j["probabilities"] = plan.probabilities.data();
  auto& idx = j["masked_indices"] = nlohmann::json::array();
  for (const auto& [t, v] : plan.masked_indices) idx.push_back({t, v});
  return j.dump();
}

}  // namespace stjd
