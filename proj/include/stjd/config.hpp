#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "stjd/augment.hpp"
#include "stjd/contrastive.hpp"
#include "stjd/probe.hpp"

namespace stjd {

// Every tunable of the pipeline. Loadable from a plain-text "key = value"
// file; each key can also be overridden from the command line.
struct RunConfig {
  StjdOptions stjd;
  double mask_ratio = kDefaultMaskRatio;
  double mask_temperature = kDefaultMaskTemperature;
  AugmentConfig augment;

  std::size_t frames = 50;
  std::size_t reference_joint = 0;

  std::size_t hidden = 16;
  std::size_t projection = 8;
  double alpha = 0.999;
  double tau = 0.2;
  std::size_t bank_capacity = 512;
  double learning_rate = 0.05;
  std::size_t epochs = 20;
  ReversedLossMode reversed_mode = ReversedLossMode::kRatio;
  std::uint64_t seed = 0;

  ProbeOptions probe;

  struct Field {
    std::string key;
    std::string help;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
  };
  static const std::vector<Field>& fields();

  // Throws InvalidConfig for unknown keys or unparsable values.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;

  // Throws InvalidConfig when a value violates its module's preconditions.
  void validate() const;

  PretrainConfig pretrain_config() const;
};

// Reads "key = value" lines ('#' starts a comment) over the defaults and
// validates the result.
RunConfig load_config(const std::filesystem::path& path);
void apply_config_text(RunConfig& cfg, const std::string& text);

}  // namespace stjd
