#include "stjd/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "stjd/error.hpp"

namespace stjd {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw Error(ErrorCode::kInvalidConfig,
              "invalid value '" + value + "' for " + key);
}

double to_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) bad_value(key, value);
  return out;
}

template <typename Int>
Int to_int(const std::string& key, const std::string& value) {
  Int out = 0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) bad_value(key, value);
  return out;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value);
}

std::string show(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

using Field = RunConfig::Field;

Field real(std::string key, std::string help, double RunConfig::*member) {
  return {key, std::move(help),
          [member, key](RunConfig& c, const std::string& v) {
            c.*member = to_double(key, v);
          },
          [member](const RunConfig& c) { return show(c.*member); }};
}

template <typename Getter>
Field real_at(std::string key, std::string help, Getter ref) {
  return {key, std::move(help),
          [ref, key](RunConfig& c, const std::string& v) {
            ref(c) = to_double(key, v);
          },
          [ref](const RunConfig& c) {
            return show(ref(c));
          }};
}

template <typename Getter>
Field count_at(std::string key, std::string help, Getter ref) {
  return {key, std::move(help),
          [ref, key](RunConfig& c, const std::string& v) {
            ref(c) = to_int<std::size_t>(key, v);
          },
          [ref](const RunConfig& c) {
            return std::to_string(ref(c));
          }};
}

}  // namespace

const std::vector<Field>& RunConfig::fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back(real_at("beta", "prime-joint threshold in [0, 1]",
                        [](auto& c) -> auto& { return c.stjd.beta; }));
    f.push_back(count_at("delta_t", "frame offset of the density change",
                         [](auto& c) -> auto& {
                           return c.stjd.delta_t;
                         }));
    f.push_back({"softmax_axis", "global | frame",
                 [](RunConfig& c, const std::string& v) {
                   if (v == "global") {
                     c.stjd.softmax_axis = SoftmaxAxis::kGlobal;
                   } else if (v == "frame") {
                     c.stjd.softmax_axis = SoftmaxAxis::kPerFrame;
                   } else {
                     bad_value("softmax_axis", v);
                   }
                 },
                 [](const RunConfig& c) {
                   return std::string(c.stjd.softmax_axis == SoftmaxAxis::kGlobal
                                          ? "global"
                                          : "frame");
                 }});
    f.push_back({"fit_bandwidths", "fit per-joint bandwidths (true/false)",
                 [](RunConfig& c, const std::string& v) {
                   c.stjd.fit_bandwidths = to_bool("fit_bandwidths", v);
                 },
                 [](const RunConfig& c) {
                   return std::string(c.stjd.fit_bandwidths ? "true" : "false");
                 }});
    f.push_back(real_at("h_min", "smallest kernel bandwidth",
                        [](auto& c) -> auto& { return c.stjd.fit.h_min; }));
    f.push_back(count_at("fit_max_iterations", "bandwidth fit iteration cap",
                         [](auto& c) -> auto& {
                           return c.stjd.fit.max_iterations;
                         }));
    f.push_back(real("mask_ratio", "fraction of entries masked by a plan",
                     &RunConfig::mask_ratio));
    f.push_back(real("mask_temperature", "softmax temperature of mask plans",
                     &RunConfig::mask_temperature));
    f.push_back(real_at("shear_amplitude", "shear off-diagonal range",
                        [](auto& c) -> auto& {
                          return c.augment.shear_amplitude;
                        }));
    f.push_back(real_at("crop_min", "smallest temporal crop fraction",
                        [](auto& c) -> auto& { return c.augment.crop_min; }));
    f.push_back(real_at("crop_max", "largest temporal crop fraction",
                        [](auto& c) -> auto& { return c.augment.crop_max; }));
    f.push_back(real_at("noise_sigma", "additive Gaussian noise (meters)",
                        [](auto& c) -> auto& {
                          return c.augment.noise_sigma;
                        }));
    f.push_back(real_at("flip_probability", "left/right flip probability",
                        [](auto& c) -> auto& {
                          return c.augment.flip_probability;
                        }));
    f.push_back(real_at("prime_strength", "augmentation strength on prime joints",
                        [](auto& c) -> auto& {
                          return c.augment.prime_strength;
                        }));
    f.push_back(real_at("nonprime_strength",
                        "augmentation strength on non-prime joints",
                        [](auto& c) -> auto& {
                          return c.augment.nonprime_strength;
                        }));
    f.push_back(count_at("frames", "frames per sequence after resampling",
                         [](auto& c) -> auto& { return c.frames; }));
    f.push_back(count_at("reference_joint", "joint used for centering",
                         [](auto& c) -> auto& {
                           return c.reference_joint;
                         }));
    f.push_back(count_at("hidden", "encoder width d",
                         [](auto& c) -> auto& { return c.hidden; }));
    f.push_back(count_at("projection", "embedding size p",
                         [](auto& c) -> auto& {
                           return c.projection;
                         }));
    f.push_back(real("alpha", "momentum coefficient", &RunConfig::alpha));
    f.push_back(real("tau", "contrastive temperature", &RunConfig::tau));
    f.push_back(count_at("bank_capacity", "memory bank size",
                         [](auto& c) -> auto& {
                           return c.bank_capacity;
                         }));
    f.push_back(real("learning_rate", "online encoder step size",
                     &RunConfig::learning_rate));
    f.push_back(count_at("epochs", "pretraining epochs",
                         [](auto& c) -> auto& { return c.epochs; }));
    f.push_back({"reversed_loss", "ratio | penalty",
                 [](RunConfig& c, const std::string& v) {
                   if (v == "ratio") {
                     c.reversed_mode = ReversedLossMode::kRatio;
                   } else if (v == "penalty") {
                     c.reversed_mode = ReversedLossMode::kPenalty;
                   } else {
                     bad_value("reversed_loss", v);
                   }
                 },
                 [](const RunConfig& c) {
                   return std::string(c.reversed_mode == ReversedLossMode::kRatio
                                          ? "ratio"
                                          : "penalty");
                 }});
    f.push_back({"seed", "base random seed",
                 [](RunConfig& c, const std::string& v) {
                   c.seed = to_int<std::uint64_t>("seed", v);
                 },
                 [](const RunConfig& c) { return std::to_string(c.seed); }});
    f.push_back(real_at("probe_test_fraction", "held-out fraction for the probe",
                        [](auto& c) -> auto& {
                          return c.probe.test_fraction;
                        }));
    f.push_back(count_at("probe_iterations", "probe gradient steps",
                         [](auto& c) -> auto& {
                           return c.probe.iterations;
                         }));
    f.push_back(real_at("probe_learning_rate", "probe step size",
                        [](auto& c) -> auto& {
                          return c.probe.learning_rate;
                        }));
    f.push_back(real_at("probe_l2", "probe weight decay",
                        [](auto& c) -> auto& { return c.probe.l2; }));
    return f;
  }();
  return table;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  for (const auto& field : fields()) {
    if (field.key == key) {
      field.set(*this, trim(value));
      return;
    }
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown configuration key '" + key + "'");
}

std::string RunConfig::get(const std::string& key) const {
  for (const auto& field : fields()) {
    if (field.key == key) return field.get(*this);
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown configuration key '" + key + "'");
}

void RunConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::kInvalidConfig, what);
  };
  if (!(stjd.beta >= 0.0 && stjd.beta <= 1.0)) fail("beta must lie in [0, 1]");
  if (stjd.delta_t < 1) fail("delta_t must be >= 1");
  if (!(stjd.fit.h_min > 0.0)) fail("h_min must be positive");
  if (!(mask_ratio >= 0.0 && mask_ratio <= 1.0)) {
    fail("mask_ratio must lie in [0, 1]");
  }
  if (!(mask_temperature > 0.0)) fail("mask_temperature must be positive");
  augment.validate();
  if (frames < 2 || frames <= stjd.delta_t) {
    fail("frames must exceed delta_t");
  }
  if (reference_joint >= 25) fail("reference_joint must index an NTU joint");
  if (hidden < 1 || projection < 1) fail("hidden and projection must be >= 1");
  if (!(alpha >= 0.0 && alpha <= 1.0)) fail("alpha must lie in [0, 1]");
  if (!(tau > 0.0)) fail("tau must be positive");
  if (bank_capacity < 1) fail("bank_capacity must be >= 1");
  if (!(learning_rate >= 0.0)) fail("learning_rate must be >= 0");
  if (!(probe.test_fraction > 0.0 && probe.test_fraction < 1.0)) {
    fail("probe_test_fraction must lie in (0, 1)");
  }
  if (!(probe.learning_rate > 0.0) || !(probe.l2 >= 0.0)) {
    fail("probe_learning_rate must be positive and probe_l2 >= 0");
  }
}

PretrainConfig RunConfig::pretrain_config() const {
  PretrainConfig cfg;
  cfg.stjd = stjd;
  cfg.augment = augment;
  cfg.tau = tau;
  cfg.learning_rate = learning_rate;
  cfg.reversed_mode = reversed_mode;
  return cfg;
}

void apply_config_text(RunConfig& cfg, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kInvalidConfig,
                  "line " + std::to_string(line_no) + ": expected key = value");
    }
    cfg.set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  RunConfig cfg;
  apply_config_text(cfg, buffer.str());
  cfg.validate();
  return cfg;
}

}  // namespace stjd
