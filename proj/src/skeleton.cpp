#include "stjd/skeleton.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "stjd/error.hpp"

namespace stjd {
namespace {

using nlohmann::json;

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i])))
      ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i])))
      ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

std::string line_error(std::size_t line_no, const std::string& what) {
  return "line " + std::to_string(line_no) + ": " + what;
}

// Line reader that tracks 1-based line numbers for diagnostics.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  // Next non-empty line, or TruncatedFile.
  std::vector<std::string_view> next(const char* expecting) {
    while (std::getline(in_, line_)) {
      ++line_no_;
      auto tokens = split_ws(line_);
      if (!tokens.empty()) return tokens;
    }
    throw Error(ErrorCode::kTruncatedFile,
                line_error(line_no_ + 1, std::string("unexpected end of file, "
                                                     "expected ") +
                                             expecting));
  }

  bool at_end() {
    while (in_.peek() != std::char_traits<char>::eof()) {
      if (!std::isspace(in_.peek())) return false;
      in_.get();
    }
    return true;
  }

  std::size_t line_no() const { return line_no_; }

  double number(std::string_view token) const {
    double value = 0.0;
    const auto* end = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(token.data(), end, value);
    if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
      throw Error(ErrorCode::kMalformedNumber,
                  line_error(line_no_, "malformed number '" +
                                           std::string(token) + "'"));
    }
    return value;
  }

  long integer(std::string_view token) const {
    long value = 0;
    const auto* end = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(token.data(), end, value);
    if (ec != std::errc() || ptr != end) {
      throw Error(ErrorCode::kMalformedNumber,
                  line_error(line_no_, "malformed integer '" +
                                           std::string(token) + "'"));
    }
    return value;
  }

 private:
  std::istream& in_;
  std::string line_;
  std::size_t line_no_ = 0;
};

JointLayout layout_from_tag(const std::string& tag, std::size_t joints) {
  if (tag == "ntu25") {
    if (joints != ntu::kJointCount) {
      throw Error(ErrorCode::kShapeMismatch,
                  "layout ntu25 requires 25 joints, got " +
                      std::to_string(joints));
    }
    return JointLayout::ntu25();
  }
  if (tag == "generic") return JointLayout::generic(joints);
  throw Error(ErrorCode::kFormatError, "unknown layout '" + tag + "'");
}

}  // namespace

JointLayout JointLayout::ntu25() {
  JointLayout layout;
  layout.name = "ntu25";
  layout.joint_count = ntu::kJointCount;
  layout.names = {"SpineBase",     "SpineMid",     "Neck",
                  "Head",          "ShoulderLeft", "ElbowLeft",
                  "WristLeft",     "HandLeft",     "ShoulderRight",
                  "ElbowRight",    "WristRight",   "HandRight",
                  "HipLeft",       "KneeLeft",     "AnkleLeft",
                  "FootLeft",      "HipRight",     "KneeRight",
                  "AnkleRight",    "FootRight",    "SpineShoulder",
                  "HandTipLeft",   "ThumbLeft",    "HandTipRight",
                  "ThumbRight"};
  layout.edges = {{0, 1},   {1, 20},  {20, 2},  {2, 3},   {20, 4},
                  {4, 5},   {5, 6},   {6, 7},   {7, 21},  {7, 22},
                  {20, 8},  {8, 9},   {9, 10},  {10, 11}, {11, 23},
                  {11, 24}, {0, 12},  {12, 13}, {13, 14}, {14, 15},
                  {0, 16},  {16, 17}, {17, 18}, {18, 19}};
  // Kept in sync with data/ntu25_parts.txt (checked by the unit tests).
  layout.part_map = {{"left_hand", {4, 5, 6, 7, 21, 22}},
                     {"right_hand", {8, 9, 10, 11, 23, 24}},
                     {"left_leg", {12, 13, 14, 15}},
                     {"right_leg", {16, 17, 18, 19}},
                     {"torso", {0, 1, 2, 3, 20}}};
  layout.mirror_pairs = {{4, 8},   {5, 9},   {6, 10},  {7, 11},  {21, 23},
                         {22, 24}, {12, 16}, {13, 17}, {14, 18}, {15, 19}};
  return layout;
}

JointLayout JointLayout::generic(std::size_t joint_count) {
  JointLayout layout;
  layout.name = "generic";
  layout.joint_count = joint_count;
  std::vector<std::size_t> all(joint_count);
  std::iota(all.begin(), all.end(), 0);
  for (std::size_t v = 0; v < joint_count; ++v) {
    layout.names.push_back("joint" + std::to_string(v));
    if (v > 0) layout.edges.emplace_back(v - 1, v);
  }
  layout.part_map = {{"body", all}};
  return layout;
}

std::vector<std::size_t> JointLayout::part_of_joint() const {
  validate_part_map(part_map, joint_count);
  std::vector<std::size_t> owner(joint_count, 0);
  std::size_t p = 0;
  for (const auto& [name, joints] : part_map) {
    for (std::size_t v : joints) owner[v] = p;
    ++p;
  }
  return owner;
}

bool JointLayout::edges_form_tree() const {
  if (joint_count == 0 || edges.size() != joint_count - 1) return false;
  std::vector<std::size_t> parent(joint_count);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& [a, b] : edges) {
    if (a >= joint_count || b >= joint_count) return false;
    const std::size_t ra = find(a);
    const std::size_t rb = find(b);
    if (ra == rb) return false;
    parent[ra] = rb;
  }
  return true;
}

void validate_part_map(const PartMap& parts, std::size_t joint_count) {
  std::vector<int> seen(joint_count, 0);
  for (const auto& [name, joints] : parts) {
    for (std::size_t v : joints) {
      if (v >= joint_count) {
        throw Error(ErrorCode::kPartMapIncomplete,
                    "part '" + name + "' references joint " +
                        std::to_string(v) + " outside [0, " +
                        std::to_string(joint_count) + ")");
      }
      if (seen[v]++ > 0) {
        throw Error(ErrorCode::kPartMapIncomplete,
                    "joint " + std::to_string(v) + " belongs to two parts");
      }
    }
  }
  for (std::size_t v = 0; v < joint_count; ++v) {
    if (seen[v] == 0) {
      throw Error(ErrorCode::kPartMapIncomplete,
                  "joint " + std::to_string(v) + " is not in any part");
    }
  }
}

PartMap load_part_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  PartMap parts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto colon = line.find(':');
    if (split_ws(line).empty()) continue;
    if (colon == std::string::npos) {
      throw Error(ErrorCode::kFormatError,
                  line_error(line_no, "expected 'part: joints...'"));
    }
    auto name_tokens = split_ws(std::string_view(line).substr(0, colon));
    if (name_tokens.size() != 1) {
      throw Error(ErrorCode::kFormatError, line_error(line_no, "bad part name"));
    }
    std::vector<std::size_t> joints;
    for (auto tok : split_ws(std::string_view(line).substr(colon + 1))) {
      std::size_t v = 0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw Error(ErrorCode::kMalformedNumber,
                    line_error(line_no, "bad joint index '" +
                                            std::string(tok) + "'"));
      }
      joints.push_back(v);
    }
    parts[std::string(name_tokens[0])] = std::move(joints);
  }
  return parts;
}

SkeletonSequence::SkeletonSequence(Tensor3 values, JointLayout layout)
    : values_(std::move(values)), layout_(std::move(layout)) {
  if (values_.dim0() == 0 || values_.dim1() == 0 || values_.dim2() == 0) {
    throw Error(ErrorCode::kEmptySequence,
                "skeleton sequence needs C, V, T >= 1");
  }
  if (layout_.joint_count != values_.dim1()) {
    throw Error(ErrorCode::kShapeMismatch,
                "layout has " + std::to_string(layout_.joint_count) +
                    " joints but values have " +
                    std::to_string(values_.dim1()));
  }
  for (double x : values_.data()) {
    if (!std::isfinite(x)) {
      throw Error(ErrorCode::kNonFiniteInput,
                  "skeleton sequence contains a non-finite value");
    }
  }
}

std::vector<SkeletonSequence> parse_ntu_skeleton(std::istream& in) {
  LineReader reader(in);
  const long frame_count = reader.integer(reader.next("frame count")[0]);
  if (frame_count < 0) {
    throw Error(ErrorCode::kMalformedNumber,
                line_error(reader.line_no(), "negative frame count"));
  }

  struct Track {
    std::string body_id;
    std::vector<std::array<double, 3 * ntu::kJointCount>> frames;
  };
  std::vector<Track> tracks;

  for (long f = 0; f < frame_count; ++f) {
    const long bodies = reader.integer(reader.next("body count")[0]);
    if (bodies < 0) {
      throw Error(ErrorCode::kMalformedNumber,
                  line_error(reader.line_no(), "negative body count"));
    }
    for (long b = 0; b < bodies; ++b) {
      const std::string body_id(reader.next("body metadata")[0]);
      const long joint_count = reader.integer(reader.next("joint count")[0]);
      if (joint_count != static_cast<long>(ntu::kJointCount)) {
        throw Error(ErrorCode::kJointCountMismatch,
                    line_error(reader.line_no(),
                               "expected 25 joints, got " +
                                   std::to_string(joint_count)));
      }
      std::array<double, 3 * ntu::kJointCount> frame{};
      for (std::size_t j = 0; j < ntu::kJointCount; ++j) {
        auto fields = reader.next("joint line");
        if (fields.size() < 3) {
          throw Error(ErrorCode::kMalformedNumber,
                      line_error(reader.line_no(),
                                 "joint line needs at least 3 fields"));
        }
        for (std::size_t c = 0; c < 3; ++c) {
          frame[c * ntu::kJointCount + j] = reader.number(fields[c]);
        }
      }
      auto it = std::find_if(tracks.begin(), tracks.end(), [&](const Track& t) {
        return t.body_id == body_id;
      });
      if (it == tracks.end()) {
        tracks.push_back({body_id, {}});
        it = std::prev(tracks.end());
      }
      it->frames.push_back(frame);
    }
  }

  std::vector<SkeletonSequence> out;
  out.reserve(tracks.size());
  for (std::size_t p = 0; p < tracks.size(); ++p) {
    const auto& frames = tracks[p].frames;
    Tensor3 values(3, ntu::kJointCount, frames.size());
    for (std::size_t t = 0; t < frames.size(); ++t) {
      for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t v = 0; v < ntu::kJointCount; ++v) {
          values(c, v, t) = frames[t][c * ntu::kJointCount + v];
        }
      }
    }
    SkeletonSequence seq(std::move(values), JointLayout::ntu25());
    seq.person_index = static_cast<int>(p);
    out.push_back(std::move(seq));
  }
  return out;
}

std::vector<SkeletonSequence> read_ntu_skeleton(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  return parse_ntu_skeleton(in);
}

SkeletonSequence resample_sequence(const SkeletonSequence& seq,
                                   std::size_t target_frames) {
  if (target_frames == 0) {
    throw Error(ErrorCode::kInvalidArgument, "target_frames must be >= 1");
  }
  const std::size_t C = seq.channels();
  const std::size_t V = seq.joints();
  const std::size_t T = seq.frames();
  Tensor3 out(C, V, target_frames);
  for (std::size_t k = 0; k < target_frames; ++k) {
    const double pos =
        target_frames == 1
            ? 0.0
            : static_cast<double>(k * (T - 1)) /
                  static_cast<double>(target_frames - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, T - 1);
    const double frac = pos - static_cast<double>(lo);
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t v = 0; v < V; ++v) {
        const double a = seq(c, v, lo);
        out(c, v, k) = frac == 0.0 ? a : a + frac * (seq(c, v, hi) - a);
      }
    }
  }
  SkeletonSequence result(std::move(out), seq.layout());
  result.subject_id = seq.subject_id;
  result.action_label = seq.action_label;
  result.person_index = seq.person_index;
  return result;
}

SkeletonSequence center_sequence(const SkeletonSequence& seq,
                                 std::size_t reference_joint) {
  if (reference_joint >= seq.joints()) {
    throw Error(ErrorCode::kIndexOutOfRange,
                "reference joint " + std::to_string(reference_joint) +
                    " out of range");
  }
  Tensor3 out = seq.values();
  for (std::size_t c = 0; c < seq.channels(); ++c) {
    const double origin = seq(c, reference_joint, 0);
    for (std::size_t v = 0; v < seq.joints(); ++v) {
      for (std::size_t t = 0; t < seq.frames(); ++t) out(c, v, t) -= origin;
    }
  }
  SkeletonSequence result(std::move(out), seq.layout());
  result.subject_id = seq.subject_id;
  result.action_label = seq.action_label;
  result.person_index = seq.person_index;
  return result;
}

std::string sequence_to_json(const SkeletonSequence& seq) {
  json j;
  j["shape"] = {seq.channels(), seq.joints(), seq.frames()};
  j["layout"] = seq.layout().name;
  j["values"] = seq.values().data();
  j["person_index"] = seq.person_index;
  if (seq.subject_id) j["subject_id"] = *seq.subject_id;
  if (seq.action_label) j["action_label"] = *seq.action_label;
  return j.dump();
}

SkeletonSequence sequence_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
    const auto shape = j.at("shape").get<std::vector<std::size_t>>();
    if (shape.size() != 3) {
      throw Error(ErrorCode::kFormatError, "shape must have three entries");
    }
    auto values = j.at("values").get<std::vector<double>>();
    if (values.size() != shape[0] * shape[1] * shape[2]) {
      throw Error(ErrorCode::kShapeMismatch,
                  "values length does not match shape");
    }
    Tensor3 tensor(shape[0], shape[1], shape[2]);
    tensor.data() = std::move(values);
    SkeletonSequence seq(
        std::move(tensor),
        layout_from_tag(j.value("layout", std::string("generic")), shape[1]));
    seq.person_index = j.value("person_index", 0);
    if (j.contains("subject_id")) seq.subject_id = j["subject_id"].get<int>();
    if (j.contains("action_label")) {
      seq.action_label = j["action_label"].get<int>();
    }
    return seq;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormatError,
                std::string("invalid sequence JSON: ") + e.what());
  }
}

void write_sequence(const std::filesystem::path& path,
                    const SkeletonSequence& seq) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << sequence_to_json(seq) << '\n';
}

SkeletonSequence read_sequence(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return sequence_from_json(buffer.str());
}

std::vector<SkeletonSequence> read_sequences(
    const std::filesystem::path& path) {
  if (path.extension() == ".skeleton") return read_ntu_skeleton(path);
  std::vector<SkeletonSequence> out;
  out.push_back(read_sequence(path));
  return out;
}

}  // namespace stjd
