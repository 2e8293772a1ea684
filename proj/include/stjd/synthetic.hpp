#pragma once

#include <cstddef>
#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "stjd/skeleton.hpp"

namespace stjd {

enum class ActionClass { kWaveRightHand, kKickLeftLeg, kBow, kClap };

inline constexpr ActionClass kAllActionClasses[] = {
    ActionClass::kWaveRightHand, ActionClass::kKickLeftLeg, ActionClass::kBow,
    ActionClass::kClap};

std::string_view to_string(ActionClass cls) noexcept;
// Throws UnknownClass.
ActionClass parse_action_class(std::string_view name);

struct GeneratorOptions {
  std::size_t frames = 50;
  // Per-sequence nuisance: rotation about the vertical axis, body scale and
  // per-entry Gaussian jitter (meters).
  double yaw_range_deg = 30.0;
  double pitch_range_deg = 0.0;
  double scale_min = 0.9;
  double scale_max = 1.1;
  double jitter_sigma = 0.0;
  // A static joint interacts with a moving one when it comes within this
  // distance and the separation changes by more than interaction_change.
  double interaction_radius = 0.3;
  double interaction_change = 0.02;
};

struct SyntheticSample {
  SkeletonSequence sequence;
  ActionClass action;
  std::vector<std::size_t> moving_joints;
  std::vector<std::size_t> interacting_joints;

  // moving_joints and interacting_joints, sorted.
  std::vector<std::size_t> prime_joints() const;
};

// NTU-25 rest pose in meters, y up, subject's left on +x.
std::vector<std::array<double, 3>> rest_pose();

// One procedurally generated sequence. Ground-truth joint sets are read off
// the noise-free trajectory before the nuisance transform.
SyntheticSample generate_sample(ActionClass action, std::uint64_t seed,
                                const GeneratorOptions& options = {});

// count sequences per class; sample i of the dataset uses its own derived
// seed, so the output only depends on (classes, count, seed, options).
std::vector<SyntheticSample> generate_dataset(
    const std::vector<ActionClass>& classes, std::size_t count,
    std::uint64_t seed, const GeneratorOptions& options = {});

// Writes seq_NNNNN.json files plus manifest.json.
void write_dataset(const std::filesystem::path& dir,
                   const std::vector<SyntheticSample>& samples,
                   std::uint64_t seed);

struct DatasetEntry {
  SkeletonSequence sequence;
  int label = 0;
  std::string action;
  std::vector<std::size_t> prime_joints;
};

std::vector<DatasetEntry> read_dataset(const std::filesystem::path& dir);

}  // namespace stjd
