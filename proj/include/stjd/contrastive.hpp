#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "stjd/augment.hpp"
#include "stjd/density.hpp"
#include "stjd/encoder.hpp"
#include "stjd/prime.hpp"
#include "stjd/skeleton.hpp"

namespace stjd {

using EmbeddingVector = std::vector<double>;

// Fixed-capacity FIFO of key embeddings used as negatives.
class MemoryBank {
 public:
  explicit MemoryBank(std::size_t capacity = 512);

  // Appends z, evicting the oldest entry when full.
  void enqueue(EmbeddingVector z);

  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  bool empty() const noexcept { return entries_.empty(); }
  const EmbeddingVector& operator[](std::size_t i) const { return entries_[i]; }
  const std::deque<EmbeddingVector>& entries() const noexcept {
    return entries_;
  }

 private:
  std::size_t capacity_;
  std::deque<EmbeddingVector> entries_;
};

// Online encoder f_q with projector g_q, and its momentum copy f_k with the
// offline projectors g_k (prime joints) and g_p (non-prime joints).
struct EncoderPair {
  EncoderParams online;
  Projector online_projector;
  EncoderParams offline;
  Projector key_projector;
  Projector nonprime_projector;
  double alpha = 0.999;

  // The offline encoder and key projector start as copies of the online
  // ones; the non-prime projector starts from its own random draw.
  static EncoderPair initialize(std::size_t in_channels, std::size_t hidden,
                                std::size_t projection,
                                const JointLayout& layout, double alpha,
                                std::uint64_t seed);
};

// offline <- alpha * offline + (1 - alpha) * online, elementwise. Both offline
// projectors track the online projector.
void momentum_update(EncoderPair& pair);

// -log(e^(s+/tau) / (e^(s+/tau) + sum_j e^(s_j/tau))) with s = cosine
// similarity. Zero when the bank is empty.
double info_nce(std::span<const double> z_q, std::span<const double> z_k,
                const MemoryBank& bank, double tau);
// dL/dz_q of info_nce for unit z_q, up to a component along z_q (which the
// projector's normalization backward discards).
std::vector<double> info_nce_gradient(std::span<const double> z_q,
                                      std::span<const double> z_k,
                                      const MemoryBank& bank, double tau);

// -log(sum_j e^(s(z_p,m_j)/tau) / (e^(s(z_p,z_k)/tau) + sum_j
// e^(s(z_p,m_j)/tau))). Minimizing it pushes z_p away from z_k. Throws
// EmptyBank.
double reversed_loss(std::span<const double> z_k, std::span<const double> z_p,
                     const MemoryBank& bank, double tau);

enum class ReversedLossMode {
  kRatio,    // reversed_loss above
  kPenalty,  // plain cosine similarity s(z_p, z_k)
};

struct StjdOptions {
  double beta = kDefaultBeta;
  std::size_t delta_t = 1;
  SoftmaxAxis softmax_axis = SoftmaxAxis::kGlobal;
  // Fit bandwidths per sequence; otherwise use Silverman's rule for all.
  bool fit_bandwidths = true;
  BandwidthFitOptions fit;
};

struct PretrainConfig {
  StjdOptions stjd;
  AugmentConfig augment;
  double tau = 0.2;
  double learning_rate = 0.05;
  ReversedLossMode reversed_mode = ReversedLossMode::kRatio;
};

struct StjdResult {
  BandwidthVector h;
  std::optional<BandwidthFit> fit;  // set when bandwidths were fitted
  DensityChangeField field;
};

// Bandwidths per the options (fitted, or Silverman's rule for every joint),
// then the density change of the raw sequence.
StjdResult run_stjd(const SkeletonSequence& seq, const StjdOptions& options);

// run_stjd thresholded at beta.
PrimeMask compute_prime_mask(const SkeletonSequence& seq,
                             const StjdOptions& options);

struct LossBreakdown {
  double l_cl = 0.0;
  double l_rcl = 0.0;
  double total() const { return l_cl + l_rcl; }
};

struct OnlineGradient {
  EncoderGradient encoder;
  Matrix projector;
};

struct LossEvaluation {
  LossBreakdown loss;
  OnlineGradient gradient;
  EmbeddingVector z_q;
  EmbeddingVector z_k;
  EmbeddingVector z_p;  // empty when the non-prime set is empty
};

// L = L_CL + L_RCL for one query/key pair and its exact gradient with respect
// to the online parameters. The offline branch is held constant.
// key_mask indexes the frames and joints of key_input.
LossEvaluation evaluate_loss(const EncoderPair& pair, const MemoryBank& bank,
                             const Tensor3& query_input,
                             const Tensor3& key_input,
                             const BinaryMask& key_mask, double tau,
                             ReversedLossMode mode = ReversedLossMode::kRatio);

struct StepResult {
  LossBreakdown loss;
  std::size_t bank_size = 0;
};

// One STJD-CL update: augment, encode, loss, gradient step on the online
// parameters, momentum update, then enqueue the key embedding.
StepResult pretrain_step(EncoderPair& pair, MemoryBank& bank,
                         const SkeletonSequence& seq,
                         const PrimeMask& prime_mask,
                         const PretrainConfig& cfg, std::uint64_t seed);

// Same, computing the prime mask from the sequence first.
StepResult pretrain_step(EncoderPair& pair, MemoryBank& bank,
                         const SkeletonSequence& seq,
                         const PretrainConfig& cfg, std::uint64_t seed);

}  // namespace stjd
