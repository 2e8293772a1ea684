#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "stjd/config.hpp"
#include "stjd/contrastive.hpp"
#include "stjd/skeleton.hpp"

namespace stjd {

struct TrainLogRecord {
  std::size_t step = 0;
  double l_cl = 0.0;
  double l_rcl = 0.0;
  std::size_t bank_size = 0;
};

std::string to_json(const TrainLogRecord& record);

// Resamples to cfg.frames and centers on cfg.reference_joint.
SkeletonSequence prepare_sequence(const SkeletonSequence& seq,
                                  const RunConfig& cfg);

struct PretrainRun {
  EncoderPair pair;
  MemoryBank bank;
  std::size_t steps = 0;
};

// cfg.epochs passes over the prepared sequences in a fresh seeded order each
// epoch. Prime masks are computed once per sequence.
PretrainRun pretrain(const std::vector<SkeletonSequence>& sequences,
                     const RunConfig& cfg,
                     const std::function<void(const TrainLogRecord&)>&
                         on_step = {});

}  // namespace stjd
