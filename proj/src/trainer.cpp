#include "stjd/trainer.hpp"

#include <numeric>

#include "json.hpp"
#include "stjd/error.hpp"
#include "stjd/random.hpp"

namespace stjd {

std::string to_json(const TrainLogRecord& record) {
  nlohmann::json j{{"step", record.step},
                   {"l_cl", record.l_cl},
                   {"l_rcl", record.l_rcl},
                   {"bank_size", record.bank_size}};
  return j.dump();
}

SkeletonSequence prepare_sequence(const SkeletonSequence& seq,
                                  const RunConfig& cfg) {
  SkeletonSequence out = seq;
  if (out.frames() != cfg.frames) out = resample_sequence(out, cfg.frames);
  if (cfg.reference_joint < out.joints()) {
    out = center_sequence(out, cfg.reference_joint);
  }
  return out;
}

PretrainRun pretrain(const std::vector<SkeletonSequence>& sequences,
                     const RunConfig& cfg,
                     const std::function<void(const TrainLogRecord&)>& on_step) {
  if (sequences.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no sequences to pretrain on");
  }
  cfg.validate();
  std::vector<SkeletonSequence> data;
  data.reserve(sequences.size());
  for (const auto& s : sequences) data.push_back(prepare_sequence(s, cfg));

  const PretrainConfig pcfg = cfg.pretrain_config();
  std::vector<PrimeMask> masks;
  masks.reserve(data.size());
  for (const auto& s : data) masks.push_back(compute_prime_mask(s, pcfg.stjd));

  PretrainRun run{EncoderPair::initialize(data.front().channels(), cfg.hidden,
                                          cfg.projection,
                                          data.front().layout(), cfg.alpha,
                                          derive_seed(cfg.seed, 0)),
                  MemoryBank(cfg.bank_capacity), 0};

  std::vector<std::size_t> order(data.size());
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(cfg.seed, 1000 + epoch));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.below(i)]);
    }
    for (std::size_t idx : order) {
      const StepResult r =
          pretrain_step(run.pair, run.bank, data[idx], masks[idx], pcfg,
                        derive_seed(cfg.seed, 1'000'000 + run.steps));
      ++run.steps;
      if (on_step) {
        on_step({run.steps, r.loss.l_cl, r.loss.l_rcl, r.bank_size});
      }
    }
  }
  return run;
}

}  // namespace stjd
