#include "stjd/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stjd/error.hpp"
#include "stjd/random.hpp"

namespace stjd {
namespace {

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kShapeMismatch, "embedding sizes differ");
  }
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

double log_sum_exp(std::span<const double> x) {
  if (x.empty()) return -std::numeric_limits<double>::infinity();
  const double hi = *std::max_element(x.begin(), x.end());
  double s = 0.0;
  for (double v : x) s += std::exp(v - hi);
  return hi + std::log(s);
}

void check_tau(double tau) {
  if (!(tau > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "temperature must be positive");
  }
}

void blend(Matrix& offline, const Matrix& online, double alpha) {
  if (!offline.same_shape(online)) {
    throw Error(ErrorCode::kShapeMismatch,
                "offline parameters do not mirror the online ones");
  }
  for (std::size_t i = 0; i < offline.size(); ++i) {
    offline.data()[i] =
        alpha * offline.data()[i] + (1.0 - alpha) * online.data()[i];
  }
}

void descend(Matrix& param, const Matrix& grad, double lr) {
  for (std::size_t i = 0; i < param.size(); ++i) {
    param.data()[i] -= lr * grad.data()[i];
  }
}

}  // namespace

MemoryBank::MemoryBank(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) {
    throw Error(ErrorCode::kInvalidArgument, "bank capacity must be positive");
  }
}

void MemoryBank::enqueue(EmbeddingVector z) {
  entries_.push_back(std::move(z));
  while (entries_.size() > capacity_) entries_.pop_front();
}

EncoderPair EncoderPair::initialize(std::size_t in_channels, std::size_t hidden,
                                    std::size_t projection,
                                    const JointLayout& layout, double alpha,
                                    std::uint64_t seed) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "alpha must lie in [0, 1]");
  }
  Rng rng(seed);
  EncoderPair pair;
  pair.online = EncoderParams::random(in_channels, hidden, layout, rng);
  pair.online_projector = Projector::random(hidden, projection, rng);
  pair.offline = pair.online;
  pair.key_projector = pair.online_projector;
  pair.nonprime_projector = Projector::random(hidden, projection, rng);
  pair.alpha = alpha;
  return pair;
}

void momentum_update(EncoderPair& pair) {
  if (!pair.offline.adjacency.same_shape(pair.online.adjacency)) {
    throw Error(ErrorCode::kShapeMismatch,
                "offline encoder does not mirror the online encoder");
  }
  blend(pair.offline.w1, pair.online.w1, pair.alpha);
  blend(pair.offline.w2, pair.online.w2, pair.alpha);
  blend(pair.key_projector.w, pair.online_projector.w, pair.alpha);
  blend(pair.nonprime_projector.w, pair.online_projector.w, pair.alpha);
}

double info_nce(std::span<const double> z_q, std::span<const double> z_k,
                const MemoryBank& bank, double tau) {
  check_tau(tau);
  if (bank.empty()) return 0.0;
  std::vector<double> logits;
  logits.reserve(bank.size() + 1);
  logits.push_back(cosine(z_q, z_k) / tau);
  for (const auto& m : bank.entries()) logits.push_back(cosine(z_q, m) / tau);
  return std::max(0.0, log_sum_exp(logits) - logits[0]);
}

std::vector<double> info_nce_gradient(std::span<const double> z_q,
                                      std::span<const double> z_k,
                                      const MemoryBank& bank, double tau) {
  check_tau(tau);
  std::vector<double> g(z_q.size(), 0.0);
  if (bank.empty()) return g;
  std::vector<double> logits;
  logits.reserve(bank.size() + 1);
  logits.push_back(cosine(z_q, z_k) / tau);
  for (const auto& m : bank.entries()) logits.push_back(cosine(z_q, m) / tau);
  const double lse = log_sum_exp(logits);

  // d cos(q, b)/dq for unit q is b/|b| minus a radial part; the radial part
  // is removed by the projector's normalization backward, so only b/|b| is
  // propagated here.
  auto accumulate = [&](std::span<const double> b, double weight) {
    const double nb = norm(b);
    if (nb == 0.0) return;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += weight * b[i] / nb / tau;
  };
  accumulate(z_k, std::exp(logits[0] - lse) - 1.0);
  for (std::size_t j = 0; j < bank.size(); ++j) {
    accumulate(bank[j], std::exp(logits[j + 1] - lse));
  }
  return g;
}

double reversed_loss(std::span<const double> z_k, std::span<const double> z_p,
                     const MemoryBank& bank, double tau) {
  check_tau(tau);
  if (bank.empty()) {
    throw Error(ErrorCode::kEmptyBank,
                "reversed contrastive loss needs at least one negative");
  }
  std::vector<double> negatives;
  negatives.reserve(bank.size());
  for (const auto& m : bank.entries()) negatives.push_back(cosine(z_p, m) / tau);
  std::vector<double> all = negatives;
  all.push_back(cosine(z_p, z_k) / tau);
  return std::max(0.0, log_sum_exp(all) - log_sum_exp(negatives));
}

StjdResult run_stjd(const SkeletonSequence& seq, const StjdOptions& options) {
  const Tensor3& X = seq.values();
  StjdResult out;
  if (options.fit_bandwidths && seq.joints() >= 2) {
    out.fit = fit_bandwidths(X, std::nullopt, options.fit);
    out.h = out.fit->h;
  } else {
    out.h = BandwidthVector::uniform(seq.joints(), silverman_bandwidth(X),
                                     options.fit.h_min);
  }
  out.field = compute_density_change(X, out.h, options.delta_t,
                                     options.softmax_axis);
  return out;
}

PrimeMask compute_prime_mask(const SkeletonSequence& seq,
                             const StjdOptions& options) {
  return detect_prime(run_stjd(seq, options).field.normalized, options.beta);
}

LossEvaluation evaluate_loss(const EncoderPair& pair, const MemoryBank& bank,
                             const Tensor3& query_input,
                             const Tensor3& key_input,
                             const BinaryMask& key_mask, double tau,
                             ReversedLossMode mode) {
  LossEvaluation out;

  EncoderTape tape;
  const FeatureMap u_q = encode(pair.online, query_input, &tape);
  const std::vector<double> pooled_q = gap_pool(u_q);
  out.z_q = project(pair.online_projector, pooled_q);

  const FeatureMap u_k = encode(pair.offline, key_input);
  out.z_k = project(pair.key_projector, jafp_pool(u_k, key_mask));
  const BinaryMask nonprime = invert(key_mask);
  if (std::find(nonprime.data().begin(), nonprime.data().end(), 1) !=
      nonprime.data().end()) {
    out.z_p = project(pair.nonprime_projector, jafp_pool(u_k, nonprime));
  }

  out.loss.l_cl = info_nce(out.z_q, out.z_k, bank, tau);
  if (!out.z_p.empty()) {
    if (mode == ReversedLossMode::kPenalty) {
      out.loss.l_rcl = cosine(out.z_p, out.z_k);
    } else if (!bank.empty()) {
      out.loss.l_rcl = reversed_loss(out.z_k, out.z_p, bank, tau);
    }
  }

  // L_RCL only involves the offline branch, so it contributes no gradient.
  const auto dz = info_nce_gradient(out.z_q, out.z_k, bank, tau);
  auto proj_grad = project_backward(pair.online_projector, pooled_q, dz);
  const FeatureMap du =
      gap_pool_backward(proj_grad.input, u_q.dim1(), u_q.dim2());
  out.gradient.encoder = encode_backward(pair.online, query_input, tape, du);
  out.gradient.projector = std::move(proj_grad.w);
  return out;
}

StepResult pretrain_step(EncoderPair& pair, MemoryBank& bank,
                         const SkeletonSequence& seq,
                         const PrimeMask& prime_mask,
                         const PretrainConfig& cfg, std::uint64_t seed) {
  AugmentTrace key_trace;
  const SkeletonSequence query =
      transform_t1(seq, prime_mask, cfg.augment, derive_seed(seed, 1));
  const SkeletonSequence key =
      transform_t2(seq, cfg.augment, derive_seed(seed, 2), &key_trace);
  BinaryMask key_mask = warp_mask(prime_mask.mask, key_trace, seq.layout());
  if (std::none_of(key_mask.data().begin(), key_mask.data().end(),
                   [](unsigned char m) { return m != 0; })) {
    // The crop removed every prime frame; keep the prime joints over the
    // whole clip instead.
    const auto joints = prime_joints_any_frame(prime_mask.mask);
    BinaryMask spread(prime_mask.mask.rows(), prime_mask.mask.cols());
    for (std::size_t t = 0; t < spread.rows(); ++t) {
      for (std::size_t v = 0; v < spread.cols(); ++v) spread(t, v) = joints[v];
    }
    key_mask = warp_mask(spread, key_trace, seq.layout());
  }

  LossEvaluation eval = evaluate_loss(pair, bank, query.values(), key.values(),
                                      key_mask, cfg.tau, cfg.reversed_mode);
  descend(pair.online.w1, eval.gradient.encoder.w1, cfg.learning_rate);
  descend(pair.online.w2, eval.gradient.encoder.w2, cfg.learning_rate);
  descend(pair.online_projector.w, eval.gradient.projector, cfg.learning_rate);
  momentum_update(pair);
  bank.enqueue(std::move(eval.z_k));

  StepResult result;
  result.loss = eval.loss;
  result.bank_size = bank.size();
  return result;
}

StepResult pretrain_step(EncoderPair& pair, MemoryBank& bank,
                         const SkeletonSequence& seq,
                         const PretrainConfig& cfg, std::uint64_t seed) {
  return pretrain_step(pair, bank, seq, compute_prime_mask(seq, cfg.stjd), cfg,
                       seed);
}

}  // namespace stjd
