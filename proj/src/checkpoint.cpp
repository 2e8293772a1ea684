#include "stjd/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include "json.hpp"
#include "stjd/error.hpp"

namespace stjd {
namespace {

constexpr const char* kFormat = "stjd-checkpoint";
constexpr int kVersion = 1;

void write_f64(const std::filesystem::path& path, const std::vector<double>& v) {
  std::vector<unsigned char> bytes(v.size() * 8);
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v[i], 8);
    for (int b = 0; b < 8; ++b) {
      bytes[i * 8 + b] = static_cast<unsigned char>(bits >> (8 * b));
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

std::vector<double> read_f64(const std::filesystem::path& path,
                             std::size_t expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() != expected * 8) {
    throw Error(ErrorCode::kShapeMismatch,
                path.filename().string() + " holds " +
                    std::to_string(bytes.size()) + " bytes, manifest expects " +
                    std::to_string(expected * 8));
  }
  std::vector<double> v(expected);
  for (std::size_t i = 0; i < expected; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
      bits |= static_cast<std::uint64_t>(bytes[i * 8 + b]) << (8 * b);
    }
    std::memcpy(&v[i], &bits, 8);
  }
  return v;
}


std::vector<std::pair<std::string, Matrix*>> tensors_of(EncoderPair& p) {
  return {{"online_w1", &p.online.w1},
          {"online_w2", &p.online.w2},
          {"online_projector", &p.online_projector.w},
          {"offline_w1", &p.offline.w1},
          {"offline_w2", &p.offline.w2},
          {"key_projector", &p.key_projector.w},
          {"nonprime_projector", &p.nonprime_projector.w},
          {"adjacency", &p.online.adjacency}};
}

}  // namespace

void save_checkpoint(const std::filesystem::path& dir, const EncoderPair& pair,
                     const CheckpointMeta& meta) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + dir.string());
  nlohmann::json manifest;
  manifest["format"] = kFormat;
  manifest["version"] = kVersion;
  manifest["step"] = meta.step;
  manifest["layout"] = meta.layout;
  manifest["alpha"] = pair.alpha;
  manifest["hyperparameters"] = meta.hyperparameters;
  auto& list = manifest["tensors"] = nlohmann::json::array();
  EncoderPair copy = pair;
  for (const auto& [name, tensor] : tensors_of(copy)) {
    const std::string file = name + ".bin";
    write_f64(dir / file, tensor->data());
    list.push_back({{"name", name},
                    {"shape", {tensor->rows(), tensor->cols()}},
                    {"file", file}});
  }
  std::ofstream out(dir / "manifest.json");
  if (!out) throw Error(ErrorCode::kIoError, "cannot write manifest");
  out << manifest.dump(1) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) {
    throw Error(ErrorCode::kIoError, "no manifest.json in " + dir.string());
  }
  Checkpoint ck;
  try {
    nlohmann::json manifest;
    in >> manifest;
    if (manifest.at("format") != kFormat ||
        manifest.at("version").get<int>() != kVersion) {
      throw Error(ErrorCode::kFormatError, "unsupported checkpoint format");
    }
    ck.meta.step = manifest.at("step").get<std::size_t>();
    ck.meta.layout = manifest.value("layout", std::string("ntu25"));
    ck.meta.hyperparameters = manifest.value(
        "hyperparameters", std::map<std::string, std::string>{});
    ck.pair.alpha = manifest.at("alpha").get<double>();

    std::map<std::string, nlohmann::json> by_name;
    for (const auto& t : manifest.at("tensors")) {
      by_name[t.at("name").get<std::string>()] = t;
    }
    for (const auto& [name, tensor] : tensors_of(ck.pair)) {
      auto it = by_name.find(name);
      if (it == by_name.end()) {
        throw Error(ErrorCode::kFormatError, "checkpoint lacks tensor " + name);
      }
      const auto shape = it->second.at("shape").get<std::vector<std::size_t>>();
      if (shape.size() != 2) {
        throw Error(ErrorCode::kShapeMismatch, name + " must be 2-D");
      }
      *tensor = Matrix(shape[0], shape[1]);
      tensor->data() = read_f64(dir / it->second.at("file").get<std::string>(),
                                shape[0] * shape[1]);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormatError,
                std::string("invalid checkpoint manifest: ") + e.what());
  }
  EncoderPair& p = ck.pair;
  p.offline.adjacency = p.online.adjacency;
  const std::size_t d = p.online.w1.rows();
  const std::size_t out = p.online_projector.w.rows();
  const bool consistent =
      p.online.w2.rows() == d && p.online.w2.cols() == d &&
      p.offline.w1.same_shape(p.online.w1) &&
      p.offline.w2.same_shape(p.online.w2) &&
      p.online_projector.w.cols() == d &&
      p.key_projector.w.same_shape(p.online_projector.w) &&
      p.nonprime_projector.w.same_shape(p.online_projector.w) &&
      p.online.adjacency.rows() == p.online.adjacency.cols() && out > 0;
  if (!consistent) {
    throw Error(ErrorCode::kShapeMismatch,
                "checkpoint tensors have inconsistent shapes");
  }
  return ck;
}

}  // namespace stjd
