#include "stjd/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "json.hpp"
#include "stjd/error.hpp"
#include "stjd/random.hpp"

namespace stjd {
namespace {

using Vec3 = std::array<double, 3>;
using Pose = std::vector<Vec3>;
namespace n = ntu;

Vec3 sub(const Vec3& a, const Vec3& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}
Vec3 add(const Vec3& a, const Vec3& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}
double dist(const Vec3& a, const Vec3& b) {
  const Vec3 d = sub(a, b);
  return std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
}

// Rotation by angle (radians) about a coordinate axis (0 = x, 1 = y, 2 = z).
Vec3 rotate(const Vec3& p, int axis, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  switch (axis) {
    case 0: return {p[0], c * p[1] - s * p[2], s * p[1] + c * p[2]};
    case 1: return {c * p[0] + s * p[2], p[1], -s * p[0] + c * p[2]};
    default: return {c * p[0] - s * p[1], s * p[0] + c * p[1], p[2]};
  }
}

void rotate_about(Pose& pose, std::initializer_list<std::size_t> joints,
                  const Vec3& pivot, int axis, double angle) {
  for (std::size_t j : joints) {
    pose[j] = add(pivot, rotate(sub(pose[j], pivot), axis, angle));
  }
}

// Sets a chain to explicit positions relative to its current root.
void place(Pose& pose, std::size_t joint, const Vec3& position) {
  pose[joint] = position;
}

Pose wave_setup(Pose pose) {
  // Right upper arm raised sideways, forearm pointing up.
  place(pose, n::kElbowRight, {-0.40, 0.62, 0.0});
  place(pose, n::kWristRight, {-0.40, 0.88, 0.0});
  place(pose, n::kHandRight, {-0.40, 0.95, 0.01});
  place(pose, n::kHandTipRight, {-0.40, 1.02, 0.01});
  place(pose, n::kThumbRight, {-0.36, 0.93, 0.03});
  return pose;
}

Pose clap_setup(Pose pose) {
  // Elbows by the ribs, forearms pointing forward.
  for (int side = 0; side < 2; ++side) {
    const double sx = side == 0 ? 1.0 : -1.0;
    const std::size_t elbow = side == 0 ? n::kElbowLeft : n::kElbowRight;
    const std::size_t wrist = side == 0 ? n::kWristLeft : n::kWristRight;
    const std::size_t hand = side == 0 ? n::kHandLeft : n::kHandRight;
    const std::size_t tip = side == 0 ? n::kHandTipLeft : n::kHandTipRight;
    const std::size_t thumb = side == 0 ? n::kThumbLeft : n::kThumbRight;
    place(pose, elbow, {sx * 0.20, 0.26, 0.05});
    place(pose, wrist, {sx * 0.20, 0.30, 0.30});
    place(pose, hand, {sx * 0.20, 0.31, 0.37});
    place(pose, tip, {sx * 0.20, 0.32, 0.44});
    place(pose, thumb, {sx * 0.17, 0.34, 0.35});
  }
  return pose;
}

struct Motion {
  double amplitude = 1.0;  // relative
  double cycles = 2.0;
  double phase = 0.0;
};

// Smooth oscillation in [0, 1].
double pulse(const Motion& m, double u) {
  return 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * m.cycles * u + m.phase);
}

Pose animate(ActionClass action, const Pose& setup, const Motion& m,
             double u) {
  Pose pose = setup;
  constexpr double deg = std::numbers::pi / 180.0;
  switch (action) {
    case ActionClass::kWaveRightHand: {
      // Forearm swings in the frontal plane about the elbow.
      const double angle = m.amplitude * 35.0 * deg * (2.0 * pulse(m, u) - 1.0);
      rotate_about(pose,
                   {n::kWristRight, n::kHandRight, n::kHandTipRight,
                    n::kThumbRight},
                   setup[n::kElbowRight], 2, -angle);
      break;
    }
    case ActionClass::kKickLeftLeg: {
      const double angle = m.amplitude * 55.0 * deg * pulse(m, u);
      const double knee = 0.5 * angle;
      rotate_about(pose, {n::kAnkleLeft, n::kFootLeft}, setup[n::kKneeLeft], 0,
                   knee);
      rotate_about(pose, {n::kKneeLeft, n::kAnkleLeft, n::kFootLeft},
                   setup[n::kHipLeft], 0, -angle);
      break;
    }
    case ActionClass::kBow: {
      const double angle = m.amplitude * 40.0 * deg * pulse(m, u);
      rotate_about(pose, {n::kSpineShoulder, n::kNeck, n::kHead},
                   setup[n::kSpineMid], 0, angle);
      break;
    }
    case ActionClass::kClap: {
      // Forearms swing inwards about the vertical axis until the hands meet.
      const double angle = m.amplitude * 32.0 * deg * pulse(m, u);
      rotate_about(pose,
                   {n::kWristLeft, n::kHandLeft, n::kHandTipLeft,
                    n::kThumbLeft},
                   setup[n::kElbowLeft], 1, -angle);
      rotate_about(pose,
                   {n::kWristRight, n::kHandRight, n::kHandTipRight,
                    n::kThumbRight},
                   setup[n::kElbowRight], 1, angle);
      break;
    }
  }
  return pose;
}

std::string sample_file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "seq_%05zu.json", index);
  return buf;
}

}  // namespace

std::string_view to_string(ActionClass cls) noexcept {
  switch (cls) {
    case ActionClass::kWaveRightHand: return "wave-right-hand";
    case ActionClass::kKickLeftLeg: return "kick-left-leg";
    case ActionClass::kBow: return "bow";
    case ActionClass::kClap: return "clap";
  }
  return "unknown";
}

ActionClass parse_action_class(std::string_view name) {
  for (ActionClass cls : kAllActionClasses) {
    if (to_string(cls) == name) return cls;
  }
  throw Error(ErrorCode::kUnknownClass,
              "unknown action class '" + std::string(name) + "'");
}

std::vector<std::array<double, 3>> rest_pose() {
  Pose p(n::kJointCount);
  p[n::kSpineBase] = {0.0, 0.0, 0.0};
  p[n::kSpineMid] = {0.0, 0.28, 0.0};
  p[n::kSpineShoulder] = {0.0, 0.52, 0.0};
  p[n::kNeck] = {0.0, 0.60, 0.0};
  p[n::kHead] = {0.0, 0.75, 0.0};
  for (int side = 0; side < 2; ++side) {
    const double sx = side == 0 ? 1.0 : -1.0;
    const bool left = side == 0;
    p[left ? n::kShoulderLeft : n::kShoulderRight] = {sx * 0.18, 0.50, 0.0};
    p[left ? n::kElbowLeft : n::kElbowRight] = {sx * 0.22, 0.24, 0.0};
    p[left ? n::kWristLeft : n::kWristRight] = {sx * 0.24, 0.00, 0.02};
    p[left ? n::kHandLeft : n::kHandRight] = {sx * 0.245, -0.07, 0.03};
    p[left ? n::kHandTipLeft : n::kHandTipRight] = {sx * 0.25, -0.14, 0.03};
    p[left ? n::kThumbLeft : n::kThumbRight] = {sx * 0.21, -0.06, 0.05};
    p[left ? n::kHipLeft : n::kHipRight] = {sx * 0.09, -0.05, 0.0};
    p[left ? n::kKneeLeft : n::kKneeRight] = {sx * 0.10, -0.48, 0.01};
    p[left ? n::kAnkleLeft : n::kAnkleRight] = {sx * 0.10, -0.88, 0.0};
    p[left ? n::kFootLeft : n::kFootRight] = {sx * 0.10, -0.93, 0.10};
  }
  return p;
}

std::vector<std::size_t> SyntheticSample::prime_joints() const {
  std::vector<std::size_t> out = moving_joints;
  out.insert(out.end(), interacting_joints.begin(), interacting_joints.end());
  std::sort(out.begin(), out.end());
  return out;
}

SyntheticSample generate_sample(ActionClass action, std::uint64_t seed,
                                const GeneratorOptions& options) {
  if (options.frames == 0) {
    throw Error(ErrorCode::kInvalidArgument, "frames must be >= 1");
  }
  Rng rng(seed);
  Motion motion;
  motion.amplitude = rng.uniform(0.8, 1.2);
  motion.cycles = rng.uniform(1.5, 3.0);
  motion.phase = rng.uniform(-0.3, 0.3);
  const double yaw =
      rng.uniform(-options.yaw_range_deg, options.yaw_range_deg) *
      std::numbers::pi / 180.0;
  const double pitch =
      rng.uniform(-options.pitch_range_deg, options.pitch_range_deg) *
      std::numbers::pi / 180.0;
  const double scale = rng.uniform(options.scale_min, options.scale_max);
  const Vec3 offset = {rng.uniform(-0.5, 0.5), rng.uniform(-0.2, 0.2),
                       rng.uniform(2.5, 3.5)};

  Pose setup = rest_pose();
  if (action == ActionClass::kWaveRightHand) setup = wave_setup(setup);
  if (action == ActionClass::kClap) setup = clap_setup(setup);

  const std::size_t T = options.frames;
  const std::size_t V = n::kJointCount;
  std::vector<Pose> clean(T);
  for (std::size_t t = 0; t < T; ++t) {
    const double u = T == 1 ? 0.0 : static_cast<double>(t) / (T - 1);
    clean[t] = animate(action, setup, motion, u);
  }

  // Ground truth from the noise-free trajectory.
  std::vector<std::size_t> moving;
  std::vector<unsigned char> is_moving(V, 0);
  for (std::size_t v = 0; v < V; ++v) {
    double travel = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      travel = std::max(travel, dist(clean[t][v], clean[0][v]));
    }
    if (travel > 0.01) {
      moving.push_back(v);
      is_moving[v] = 1;
    }
  }
  std::vector<std::size_t> interacting;
  for (std::size_t j = 0; j < V; ++j) {
    if (is_moving[j]) continue;
    bool interacts = false;
    for (std::size_t m : moving) {
      double lo = 1e9;
      double hi = 0.0;
      for (std::size_t t = 0; t < T; ++t) {
        const double d = dist(clean[t][j], clean[t][m]);
        lo = std::min(lo, d);
        hi = std::max(hi, d);
      }
      if (lo < options.interaction_radius &&
          hi - lo > options.interaction_change) {
        interacts = true;
      }
    }
    if (interacts) interacting.push_back(j);
  }

  Tensor3 values(3, V, T);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t v = 0; v < V; ++v) {
      Vec3 p = clean[t][v];
      for (double& x : p) x *= scale;
      p = add(rotate(rotate(p, 1, yaw), 0, pitch), offset);
      for (std::size_t c = 0; c < 3; ++c) {
        values(c, v, t) = p[c] + options.jitter_sigma * rng.normal();
      }
    }
  }

  SkeletonSequence seq(std::move(values), JointLayout::ntu25());
  seq.action_label = static_cast<int>(action);
  return {std::move(seq), action, std::move(moving), std::move(interacting)};
}

std::vector<SyntheticSample> generate_dataset(
    const std::vector<ActionClass>& classes, std::size_t count,
    std::uint64_t seed, const GeneratorOptions& options) {
  if (count == 0) {
    throw Error(ErrorCode::kInvalidArgument, "count must be >= 1");
  }
  std::vector<SyntheticSample> out;
  out.reserve(classes.size() * count);
  std::uint64_t stream = 0;
  for (std::size_t i = 0; i < count; ++i) {
    for (ActionClass cls : classes) {
      out.push_back(generate_sample(cls, derive_seed(seed, stream++), options));
    }
  }
  return out;
}

void write_dataset(const std::filesystem::path& dir,
                   const std::vector<SyntheticSample>& samples,
                   std::uint64_t seed) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + dir.string());
  nlohmann::json manifest;
  manifest["seed"] = seed;
  manifest["classes"] = nlohmann::json::array();
  for (ActionClass cls : kAllActionClasses) {
    manifest["classes"].push_back(std::string(to_string(cls)));
  }
  auto& list = manifest["samples"] = nlohmann::json::array();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    const std::string file = sample_file_name(i);
    write_sequence(dir / file, s.sequence);
    list.push_back({{"file", file},
                    {"label", static_cast<int>(s.action)},
                    {"class", std::string(to_string(s.action))},
                    {"moving_joints", s.moving_joints},
                    {"prime_joints", s.prime_joints()}});
  }
  std::ofstream out(dir / "manifest.json");
  if (!out) throw Error(ErrorCode::kIoError, "cannot write manifest");
  out << manifest.dump(1) << '\n';
}

std::vector<DatasetEntry> read_dataset(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) {
    throw Error(ErrorCode::kIoError,
                "no manifest.json in " + dir.string());
  }
  nlohmann::json manifest;
  try {
    in >> manifest;
    std::vector<DatasetEntry> out;
    for (const auto& item : manifest.at("samples")) {
      DatasetEntry e{read_sequence(dir / item.at("file").get<std::string>()),
                     item.at("label").get<int>(),
                     item.value("class", std::string()),
                     item.value("prime_joints", std::vector<std::size_t>{})};
      out.push_back(std::move(e));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormatError,
                std::string("invalid dataset manifest: ") + e.what());
  }
}

}  // namespace stjd
