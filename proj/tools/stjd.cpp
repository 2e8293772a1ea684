#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "stjd/checkpoint.hpp"
#include "stjd/config.hpp"
#include "stjd/contrastive.hpp"
#include "stjd/error.hpp"
#include "stjd/prime.hpp"
#include "stjd/probe.hpp"
#include "stjd/stats.hpp"
#include "stjd/synthetic.hpp"
#include "stjd/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kErrorExit = 2;

struct Common {
  std::string config_path;
  std::map<std::string, std::string> overrides;

  stjd::RunConfig load() const {
    stjd::RunConfig cfg;
    if (!config_path.empty()) cfg = stjd::load_config(config_path);
    for (const auto& [key, value] : overrides) cfg.set(key, value);
    cfg.validate();
    return cfg;
  }
};

void emit(const json& j, const std::string& out_path) {
  if (out_path.empty() || out_path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(out_path);
  if (!out) {
    throw stjd::Error(stjd::ErrorCode::kIoError, "cannot write " + out_path);
  }
  out << j.dump(2) << '\n';
}

stjd::SkeletonSequence load_one(const std::string& path, int person) {
  auto seqs = stjd::read_sequences(path);
  if (person < 0 || static_cast<std::size_t>(person) >= seqs.size()) {
    throw stjd::Error(stjd::ErrorCode::kIndexOutOfRange,
                      path + " holds " + std::to_string(seqs.size()) +
                          " bodies, no body " + std::to_string(person));
  }
  return std::move(seqs[person]);
}

json field_json(const stjd::Matrix& m) {
  return json{{"shape", {m.rows(), m.cols()}}, {"values", m.data()}};
}

json mask_json(const stjd::BinaryMask& m) {
  return json::parse(stjd::mask_to_json(m));
}

std::vector<std::size_t> indices_of(const std::vector<unsigned char>& flags) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (flags[i]) out.push_back(i);
  }
  return out;
}

std::vector<double> parse_sample(const std::string& text) {
  std::string body = text;
  if (fs::exists(text)) {
    std::ifstream in(text);
    body.assign(std::istreambuf_iterator<char>(in), {});
  }
  std::replace(body.begin(), body.end(), ',', ' ');
  std::istringstream in(body);
  std::vector<double> out;
  std::string token;
  while (in >> token) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(token, &used));
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      throw stjd::Error(stjd::ErrorCode::kMalformedNumber,
                        "not a number: '" + token + "'");
    }
  }
  return out;
}

std::vector<stjd::ActionClass> parse_classes(const std::string& list) {
  std::vector<stjd::ActionClass> out;
  if (list.empty() || list == "all") {
    out.assign(std::begin(stjd::kAllActionClasses),
               std::end(stjd::kAllActionClasses));
    return out;
  }
  std::istringstream in(list);
  std::string name;
  while (std::getline(in, name, ',')) {
    out.push_back(stjd::parse_action_class(name));
  }
  return out;
}

int cmd_parse(const std::string& input, int person, const std::string& out) {
  const auto seqs = stjd::read_sequences(input);
  if (person < 0 || static_cast<std::size_t>(person) >= seqs.size()) {
    throw stjd::Error(stjd::ErrorCode::kIndexOutOfRange,
                      "no body " + std::to_string(person));
  }
  if (!out.empty()) stjd::write_sequence(out, seqs[person]);
  json summary;
  summary["bodies"] = seqs.size();
  auto& list = summary["sequences"] = json::array();
  for (const auto& s : seqs) {
    list.push_back({{"channels", s.channels()},
                    {"joints", s.joints()},
                    {"frames", s.frames()},
                    {"layout", s.layout().name}});
  }
  std::cout << summary.dump(2) << '\n';
  return 0;
}

int cmd_stjd(const Common& common, const std::string& input, int person,
             const std::string& out) {
  const auto cfg = common.load();
  const auto seq = load_one(input, person);
  const auto result = stjd::run_stjd(seq, cfg.stjd);
  const auto& field = result.field;

  const std::size_t T = field.raw.rows();
  const std::size_t V = field.raw.cols();
  std::vector<double> raw_max(V, 0.0);
  std::vector<double> norm_max(V, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t v = 0; v < V; ++v) {
      raw_max[v] = std::max(raw_max[v], field.raw(t, v));
      norm_max[v] = std::max(norm_max[v], field.normalized(t, v));
    }
  }
  std::vector<std::size_t> order(V);
  for (std::size_t v = 0; v < V; ++v) order[v] = v;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return norm_max[a] > norm_max[b];
  });
  std::vector<unsigned char> above(V, 0);
  for (std::size_t v = 0; v < V; ++v) above[v] = norm_max[v] >= cfg.stjd.beta;
  const auto prime_before = indices_of(above);

  json j;
  j["input"] = input;
  j["bandwidths"] = std::vector<double>(result.h.values().begin(),
                                        result.h.values().end());
  if (result.fit) {
    j["fit"] = {{"objective", result.fit->objective},
                {"initial_objective", result.fit->initial_objective},
                {"iterations", result.fit->iterations},
                {"converged", result.fit->converged}};
  }
  j["delta_t"] = cfg.stjd.delta_t;
  j["raw"] = field_json(field.raw);
  j["normalized"] = field_json(field.normalized);
  j["joint_max_raw"] = raw_max;
  j["joint_max_normalized"] = norm_max;
  j["summary"] = {
      {"beta", cfg.stjd.beta},
      {"joints_ranked", order},
      {"prime_joints_prefallback", prime_before},
      {"no_prime_joints_prefallback", prime_before.empty()},
  };
  emit(j, out);
  return 0;
}

int cmd_prime(const Common& common, const std::string& input, int person,
              bool parts, const std::string& out) {
  const auto cfg = common.load();
  const auto seq = load_one(input, person);
  const auto mask = stjd::compute_prime_mask(seq, cfg.stjd);
  json j;
  j["beta"] = mask.beta;
  j["fallback_applied"] = mask.fallback_applied;
  j["count"] = mask.count();
  j["mask"] = mask_json(mask.mask);
  j["prime_joints"] = indices_of(stjd::prime_joints_any_frame(mask.mask));
  if (parts) {
    j["prime_parts"] = mask_json(stjd::prime_parts(mask.mask, seq.layout()));
  }
  emit(j, out);
  return 0;
}

int cmd_maskplan(const Common& common, const std::string& input, int person,
                 const std::string& out) {
  const auto cfg = common.load();
  const auto seq = load_one(input, person);
  const auto field = stjd::run_stjd(seq, cfg.stjd).field;
  const auto plan = stjd::sample_mask_plan(field.normalized, cfg.mask_ratio,
                                           cfg.mask_temperature, cfg.seed);
  emit(json::parse(stjd::plan_to_json(plan)), out);
  return 0;
}

int cmd_generate(const Common& common, const std::string& classes,
                 std::size_t count, const std::string& out_dir) {
  const auto cfg = common.load();
  if (count == 0) {
    throw stjd::Error(stjd::ErrorCode::kInvalidArgument, "count must be >= 1");
  }
  stjd::GeneratorOptions options;
  options.frames = cfg.frames;
  const auto samples =
      stjd::generate_dataset(parse_classes(classes), count, cfg.seed, options);
  stjd::write_dataset(out_dir, samples, cfg.seed);
  std::cout << json{{"sequences", samples.size()}, {"output", out_dir}}.dump(2)
            << '\n';
  return 0;
}

std::map<std::string, std::string> hyperparameters(const stjd::RunConfig& cfg) {
  std::map<std::string, std::string> out;
  for (const auto& field : stjd::RunConfig::fields()) {
    out[field.key] = field.get(cfg);
  }
  return out;
}

int cmd_pretrain(const Common& common, const std::string& data_dir,
                 const std::string& out_dir, const std::string& log_path) {
  const auto cfg = common.load();
  const auto entries = stjd::read_dataset(data_dir);
  std::vector<stjd::SkeletonSequence> seqs;
  seqs.reserve(entries.size());
  for (const auto& e : entries) seqs.push_back(e.sequence);

  std::ofstream log_file;
  if (!log_path.empty()) {
    log_file.open(log_path);
    if (!log_file) {
      throw stjd::Error(stjd::ErrorCode::kIoError, "cannot write " + log_path);
    }
  }
  stjd::TrainLogRecord last;
  const auto run = stjd::pretrain(seqs, cfg, [&](const stjd::TrainLogRecord& r) {
    if (log_file) log_file << stjd::to_json(r) << '\n';
    last = r;
  });

  stjd::CheckpointMeta meta;
  meta.step = run.steps;
  meta.layout = seqs.front().layout().name;
  meta.hyperparameters = hyperparameters(cfg);
  stjd::save_checkpoint(out_dir, run.pair, meta);
  std::cout << json{{"steps", run.steps},
                    {"final_l_cl", last.l_cl},
                    {"final_l_rcl", last.l_rcl},
                    {"bank_size", run.bank.size()},
                    {"checkpoint", out_dir}}
                   .dump(2)
            << '\n';
  return 0;
}

int cmd_probe(const Common& common, const std::string& checkpoint,
              const std::string& data_dir, const std::string& out) {
  const auto cfg = common.load();
  const auto entries = stjd::read_dataset(data_dir);
  if (entries.empty()) {
    throw stjd::Error(stjd::ErrorCode::kInvalidArgument, "empty dataset");
  }
  const auto& first = entries.front().sequence;
  stjd::EncoderParams encoder;
  if (checkpoint.empty()) {
    encoder = stjd::EncoderPair::initialize(first.channels(), cfg.hidden,
                                            cfg.projection, first.layout(),
                                            cfg.alpha,
                                            stjd::derive_seed(cfg.seed, 0))
                  .online;
  } else {
    encoder = stjd::load_checkpoint(checkpoint).pair.online;
  }
  if (encoder.in_channels() != first.channels() ||
      encoder.joints() != first.joints()) {
    throw stjd::Error(stjd::ErrorCode::kShapeMismatch,
                      "encoder expects " +
                          std::to_string(encoder.in_channels()) + " channels x " +
                          std::to_string(encoder.joints()) +
                          " joints, dataset has " +
                          std::to_string(first.channels()) + " x " +
                          std::to_string(first.joints()));
  }
  std::vector<stjd::LabeledFeature> features;
  features.reserve(entries.size());
  for (const auto& e : entries) {
    features.push_back({stjd::extract_features(
                            encoder, stjd::prepare_sequence(e.sequence, cfg)),
                        e.label});
  }
  const auto result = stjd::linear_probe(features, cfg.probe);
  emit(json{{"encoder", checkpoint.empty() ? "random" : "pretrained"},
            {"checkpoint", checkpoint},
            {"accuracy", result.accuracy},
            {"train_accuracy", result.train_accuracy},
            {"train_size", result.train_size},
            {"test_size", result.test_size}},
       out);
  return 0;
}

int cmd_ttest(const std::string& a, const std::string& b, double alpha,
              const std::string& out) {
  const auto xa = parse_sample(a);
  const auto xb = parse_sample(b);
  const auto r = stjd::paired_t_test(xa, xb, alpha);
  emit(json{{"t_value", r.t_value},
            {"degrees_of_freedom", r.degrees_of_freedom},
            {"critical_value", r.critical_value},
            {"p_value", r.p_value},
            {"alpha", alpha},
            {"reject", r.reject}},
       out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatio-temporal joint density toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  Common common;
  app.add_option("--config", common.config_path,
                 "key = value configuration file")
      ->check(CLI::ExistingFile);
  for (const auto& field : stjd::RunConfig::fields()) {
    std::string names = "--" + field.key;
    std::string dashed = field.key;
    std::replace(dashed.begin(), dashed.end(), '_', '-');
    if (dashed != field.key) names += ",--" + dashed;
    app.add_option_function<std::string>(
           names,
           [&common, key = field.key](const std::string& v) {
             common.overrides[key] = v;
           },
           field.help)
        ->group("Configuration overrides");
  }

  std::string input;
  std::string out;
  int person = 0;

  auto* parse = app.add_subcommand("parse", "read NTU text or JSON, emit JSON");
  parse->add_option("input", input)->required();
  parse->add_option("-o,--output", out, "canonical JSON for the chosen body");
  parse->add_option("--person", person, "body index");

  auto* stjd_cmd = app.add_subcommand("stjd", "density change field");
  stjd_cmd->add_option("input", input)->required();
  stjd_cmd->add_option("-o,--output", out);
  stjd_cmd->add_option("--person", person);

  bool parts = false;
  auto* prime = app.add_subcommand("prime", "prime-joint mask");
  prime->add_option("input", input)->required();
  prime->add_option("-o,--output", out);
  prime->add_option("--person", person);
  prime->add_flag("--parts", parts, "also emit the prime-parts mask");

  auto* maskplan = app.add_subcommand("maskplan", "density-guided masking plan");
  maskplan->add_option("input", input)->required();
  maskplan->add_option("-o,--output", out);
  maskplan->add_option("--person", person);

  std::string classes = "all";
  std::size_t count = 0;
  auto* generate = app.add_subcommand("generate", "synthetic dataset");
  generate->add_option("--classes", classes,
                       "comma-separated class names, or 'all'");
  generate->add_option("--count", count, "sequences per class")->required();
  generate->add_option("--out", out, "output directory")->required();

  std::string data_dir;
  std::string log_path;
  auto* pretrain = app.add_subcommand("pretrain", "contrastive pretraining");
  pretrain->add_option("--data", data_dir, "dataset directory")->required();
  pretrain->add_option("--out", out, "checkpoint directory")->required();
  pretrain->add_option("--log", log_path, "JSON-lines training log");

  std::string checkpoint;
  auto* probe = app.add_subcommand("probe", "linear probe on frozen features");
  probe->add_option("--checkpoint", checkpoint,
                    "omit to probe a freshly initialized encoder");
  probe->add_option("--data", data_dir, "dataset directory")->required();
  probe->add_option("-o,--output", out);

  std::string sample_a;
  std::string sample_b;
  double alpha = 0.05;
  auto* ttest = app.add_subcommand("ttest", "paired t-test");
  ttest->add_option("-a", sample_a, "numbers or a file of numbers")->required();
  ttest->add_option("-b", sample_b, "numbers or a file of numbers")->required();
  ttest->add_option("--alpha", alpha);
  ttest->add_option("-o,--output", out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kErrorExit;
  }

  try {
    common.load();
    if (*parse) return cmd_parse(input, person, out);
    if (*stjd_cmd) return cmd_stjd(common, input, person, out);
    if (*prime) return cmd_prime(common, input, person, parts, out);
    if (*maskplan) return cmd_maskplan(common, input, person, out);
    if (*generate) return cmd_generate(common, classes, count, out);
    if (*pretrain) return cmd_pretrain(common, data_dir, out, log_path);
    if (*probe) return cmd_probe(common, checkpoint, data_dir, out);
    if (*ttest) return cmd_ttest(sample_a, sample_b, alpha, out);
  } catch (const stjd::Error& e) {
    std::cerr << "error: " << stjd::to_string(e.code()) << ": " << e.what()
              << '\n';
    return kErrorExit;
  } catch (const json::exception& e) {
    std::cerr << "error: FormatError: " << e.what() << '\n';
    return kErrorExit;
  } catch (const std::exception& e) {
    std::cerr << "error: IoError: " << e.what() << '\n';
    return kErrorExit;
  }
  return 0;
}
