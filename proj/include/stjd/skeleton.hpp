#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stjd/array.hpp"

namespace stjd {

using PartMap = std::map<std::string, std::vector<std::size_t>>;

struct JointLayout {
  // "ntu25" or "generic"; this is the tag written to the JSON format.
  std::string name;
  std::size_t joint_count = 0;
  std::vector<std::string> names;
  // (parent, child) pairs.
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  PartMap part_map;
  // Left/right counterparts used by the spatial flip.
  std::vector<std::pair<std::size_t, std::size_t>> mirror_pairs;

  // The 25-joint Kinect v2 skeleton used by the NTU RGB+D datasets.
  static JointLayout ntu25();
  // V joints connected as a chain, all in one part named "body".
  static JointLayout generic(std::size_t joint_count);

  // Part index per joint; throws PartMapIncomplete when part_map is not a
  // partition of [0, joint_count).
  std::vector<std::size_t> part_of_joint() const;
  bool edges_form_tree() const;
};

// NTU-25 joint indices (0-based).
namespace ntu {
inline constexpr std::size_t kSpineBase = 0;
inline constexpr std::size_t kSpineMid = 1;
inline constexpr std::size_t kNeck = 2;
inline constexpr std::size_t kHead = 3;
inline constexpr std::size_t kShoulderLeft = 4;
inline constexpr std::size_t kElbowLeft = 5;
inline constexpr std::size_t kWristLeft = 6;
inline constexpr std::size_t kHandLeft = 7;
inline constexpr std::size_t kShoulderRight = 8;
inline constexpr std::size_t kElbowRight = 9;
inline constexpr std::size_t kWristRight = 10;
inline constexpr std::size_t kHandRight = 11;
inline constexpr std::size_t kHipLeft = 12;
inline constexpr std::size_t kKneeLeft = 13;
inline constexpr std::size_t kAnkleLeft = 14;
inline constexpr std::size_t kFootLeft = 15;
inline constexpr std::size_t kHipRight = 16;
inline constexpr std::size_t kKneeRight = 17;
inline constexpr std::size_t kAnkleRight = 18;
inline constexpr std::size_t kFootRight = 19;
inline constexpr std::size_t kSpineShoulder = 20;
inline constexpr std::size_t kHandTipLeft = 21;
inline constexpr std::size_t kThumbLeft = 22;
inline constexpr std::size_t kHandTipRight = 23;
inline constexpr std::size_t kThumbRight = 24;
inline constexpr std::size_t kJointCount = 25;
}  // namespace ntu

// Reads a part map from a plain-text file with one "part: i j k ..." line per
// part. Blank lines and '#' comments are ignored.
PartMap load_part_map(const std::filesystem::path& path);

// Throws PartMapIncomplete unless the sets are disjoint and cover
// [0, joint_count).
void validate_part_map(const PartMap& parts, std::size_t joint_count);

// A single-person skeleton sequence with values laid out as C x V x T.
class SkeletonSequence {
 public:
  SkeletonSequence(Tensor3 values, JointLayout layout);

  std::size_t channels() const noexcept { return values_.dim0(); }
  std::size_t joints() const noexcept { return values_.dim1(); }
  std::size_t frames() const noexcept { return values_.dim2(); }

  const Tensor3& values() const& noexcept { return values_; }
  Tensor3 values() && noexcept { return std::move(values_); }
  const JointLayout& layout() const noexcept { return layout_; }

  double operator()(std::size_t c, std::size_t v, std::size_t t) const {
    return values_(c, v, t);
  }

  std::optional<int> subject_id;
  std::optional<int> action_label;
  int person_index = 0;

 private:
  Tensor3 values_;
  JointLayout layout_;
};

// Parses the NTU RGB+D ".skeleton" text format. One sequence is produced per
// body id, in order of first appearance; each holds the frames in which that
// body was present.
std::vector<SkeletonSequence> parse_ntu_skeleton(std::istream& in);
std::vector<SkeletonSequence> read_ntu_skeleton(
    const std::filesystem::path& path);

// Linear interpolation on the uniform grid k * (T - 1) / (target - 1).
SkeletonSequence resample_sequence(const SkeletonSequence& seq,
                                   std::size_t target_frames);

// Subtracts the reference joint's frame-0 position from every joint in every
// frame.
SkeletonSequence center_sequence(const SkeletonSequence& seq,
                                 std::size_t reference_joint);

std::string sequence_to_json(const SkeletonSequence& seq);
SkeletonSequence sequence_from_json(const std::string& text);
void write_sequence(const std::filesystem::path& path,
                    const SkeletonSequence& seq);
SkeletonSequence read_sequence(const std::filesystem::path& path);

// Dispatches on extension: ".skeleton" is NTU text, anything else JSON.
std::vector<SkeletonSequence> read_sequences(const std::filesystem::path& path);

}  // namespace stjd
