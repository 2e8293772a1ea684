#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "stjd/error.hpp"
#include "stjd/skeleton.hpp"

using namespace stjd;

namespace {

struct Body {
  std::string id;
  std::vector<std::array<double, 3>> joints;
};

// One NTU body block: metadata, joint count, 25 joint lines of 12 fields.
void write_body(std::ostream& out, const Body& body, int joint_count = 25) {
  out << body.id << " 0 1 2 1 2 0 0.1 0.2 2\n" << joint_count << "\n";
  for (int j = 0; j < joint_count; ++j) {
    const auto& p = body.joints[j % body.joints.size()];
    out << p[0] << ' ' << p[1] << ' ' << p[2]
        << " 250.5 200.25 1000.1 500.2 0.1 0.2 0.3 0.9 2\n";
  }
}

std::vector<std::array<double, 3>> joints_with(double base) {
  std::vector<std::array<double, 3>> j(25);
  for (int v = 0; v < 25; ++v) j[v] = {base + v, base - v, base + 0.5 * v};
  return j;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an stjd::Error");
  return ErrorCode::kIoError;
}

SkeletonSequence ramp_sequence(std::size_t T) {
  Tensor3 x(3, 25, T);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t v = 0; v < 25; ++v)
      for (std::size_t t = 0; t < T; ++t) x(c, v, t) = 0.1 * c + 0.01 * v + t;
  return SkeletonSequence(std::move(x), JointLayout::ntu25());
}

}  // namespace

TEST_CASE("ntu parser: single zero frame") {
  std::stringstream s;
  s << "1\n1\n";
  write_body(s, {"72057594037931101", {{0.0, 0.0, 0.0}}});
  const auto seqs = parse_ntu_skeleton(s);
  REQUIRE(seqs.size() == 1);
  CHECK(seqs[0].channels() == 3);
  CHECK(seqs[0].joints() == 25);
  CHECK(seqs[0].frames() == 1);
  for (double v : seqs[0].values().data()) CHECK(v == 0.0);
  CHECK(seqs[0].person_index == 0);
}

TEST_CASE("ntu parser: keeps only the first three fields") {
  std::stringstream s;
  s << "2\n1\n";
  write_body(s, {"7", joints_with(0.25)});
  s << "1\n";
  write_body(s, {"7", joints_with(-1.5)});
  const auto seqs = parse_ntu_skeleton(s);
  REQUIRE(seqs.size() == 1);
  const auto& q = seqs[0];
  REQUIRE(q.frames() == 2);
  const double bases[] = {0.25, -1.5};
  for (std::size_t t = 0; t < 2; ++t) {
    for (std::size_t v = 0; v < 25; ++v) {
      CHECK(q(0, v, t) == doctest::Approx(bases[t] + v));
      CHECK(q(1, v, t) == doctest::Approx(bases[t] - v));
      CHECK(q(2, v, t) == doctest::Approx(bases[t] + 0.5 * v));
    }
  }
}

TEST_CASE("ntu parser: zero frames") {
  std::stringstream s("0\n");
  CHECK(parse_ntu_skeleton(s).empty());
}

TEST_CASE("ntu parser: two bodies") {
  std::stringstream s;
  s << "3\n";
  for (int f = 0; f < 3; ++f) {
    s << "2\n";
    write_body(s, {"111", joints_with(f)});
    write_body(s, {"222", joints_with(10 + f)});
  }
  const auto seqs = parse_ntu_skeleton(s);
  REQUIRE(seqs.size() == 2);
  CHECK(seqs[0].person_index == 0);
  CHECK(seqs[1].person_index == 1);
  CHECK(seqs[0].frames() == 3);
  CHECK(seqs[1].frames() == 3);
  CHECK(seqs[0](0, 0, 2) == 2.0);
  CHECK(seqs[1](0, 0, 2) == 12.0);
}

TEST_CASE("ntu parser: bodies matched by id across frames") {
  std::stringstream s;
  s << "3\n1\n";
  write_body(s, {"a", joints_with(1)});
  s << "2\n";
  write_body(s, {"b", joints_with(5)});
  write_body(s, {"a", joints_with(2)});
  s << "1\n";
  write_body(s, {"a", joints_with(3)});
  const auto seqs = parse_ntu_skeleton(s);
  REQUIRE(seqs.size() == 2);
  CHECK(seqs[0].frames() == 3);
  CHECK(seqs[0](0, 0, 1) == 2.0);
  CHECK(seqs[1].frames() == 1);
  CHECK(seqs[1](0, 0, 0) == 5.0);
}

TEST_CASE("ntu parser: errors") {
  SUBCASE("truncated") {
    std::stringstream s;
    s << "2\n1\n";
    write_body(s, {"1", joints_with(0)});
    CHECK(code_of([&] { parse_ntu_skeleton(s); }) == ErrorCode::kTruncatedFile);
  }
  SUBCASE("truncated inside a body") {
    std::stringstream full;
    full << "1\n1\n";
    write_body(full, {"1", joints_with(0)});
    std::string text = full.str();
    text.resize(text.size() / 2);
    text = text.substr(0, text.rfind('\n') + 1);
    std::stringstream s(text);
    CHECK(code_of([&] { parse_ntu_skeleton(s); }) == ErrorCode::kTruncatedFile);
  }
  SUBCASE("malformed number names the line") {
    std::stringstream full;
    full << "1\n1\n";
    write_body(full, {"1", joints_with(0)});
    std::string text = full.str();
    const auto pos = text.find("0 0 0 250.5");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 1, "x");
    std::stringstream s(text);
    try {
      parse_ntu_skeleton(s);
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kMalformedNumber);
      CHECK(std::string(e.what()).find("line 5") != std::string::npos);
    }
  }
  SUBCASE("joint count") {
    std::stringstream s;
    s << "1\n1\n";
    write_body(s, {"1", joints_with(0)}, 24);
    CHECK(code_of([&] { parse_ntu_skeleton(s); }) ==
          ErrorCode::kJointCountMismatch);
  }
  SUBCASE("bad frame count") {
    std::stringstream s("abc\n");
    CHECK(code_of([&] { parse_ntu_skeleton(s); }) == ErrorCode::kMalformedNumber);
  }
}

TEST_CASE("sequence invariants") {
  CHECK(code_of([] { SkeletonSequence(Tensor3(3, 25, 0), JointLayout::ntu25()); }) ==
        ErrorCode::kEmptySequence);
  CHECK(code_of([] { SkeletonSequence(Tensor3(3, 24, 2), JointLayout::ntu25()); }) ==
        ErrorCode::kShapeMismatch);
  Tensor3 bad(1, 2, 2);
  bad(0, 1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK(code_of([&] { SkeletonSequence(bad, JointLayout::generic(2)); }) ==
        ErrorCode::kNonFiniteInput);
}

TEST_CASE("resample") {
  SUBCASE("identity at the same length") {
    const auto s = ramp_sequence(50);
    CHECK(resample_sequence(s, 50).values() == s.values());
  }
  SUBCASE("single frame extends as a constant") {
    const auto s = ramp_sequence(1);
    const auto r = resample_sequence(s, 50);
    REQUIRE(r.frames() == 50);
    for (std::size_t t = 0; t < 50; ++t) CHECK(r(2, 7, t) == s(2, 7, 0));
  }
  SUBCASE("hand interpolation") {
    Tensor3 x(1, 1, 3);
    x(0, 0, 0) = 0;
    x(0, 0, 1) = 1;
    x(0, 0, 2) = 2;
    const auto r = resample_sequence(SkeletonSequence(x, JointLayout::generic(1)), 5);
    const double expect[] = {0, 0.5, 1, 1.5, 2};
    for (std::size_t t = 0; t < 5; ++t) CHECK(r(0, 0, t) == doctest::Approx(expect[t]).epsilon(1e-15));
  }
  SUBCASE("linear data stays linear on any grid") {
    const auto s = ramp_sequence(7);
    const auto r = resample_sequence(s, 13);
    for (std::size_t t = 0; t < 13; ++t) {
      const double u = t * 6.0 / 12.0;
      CHECK(std::abs(r(1, 3, t) - (0.1 + 0.03 + u)) < 1e-12);
    }
  }
  CHECK(code_of([] { resample_sequence(ramp_sequence(3), 0); }) ==
        ErrorCode::kInvalidArgument);
}

TEST_CASE("center") {
  SUBCASE("already centered") {
    Tensor3 x(3, 2, 2, 0.0);
    x(0, 1, 0) = 4;
    x(1, 0, 1) = 2;
    const SkeletonSequence s(x, JointLayout::generic(2));
    CHECK(center_sequence(s, 0).values() == s.values());
  }
  SUBCASE("all joints equal") {
    const SkeletonSequence s(Tensor3(3, 25, 4, 1.0), JointLayout::ntu25());
    const auto c = center_sequence(s, 13);
    for (double v : c.values().data()) CHECK(v == 0.0);
  }
  SUBCASE("direct subtraction") {
    Tensor3 x(3, 2, 1, 0.0);
    x(0, 0, 0) = 2;
    x(0, 1, 0) = 3;
    x(1, 1, 0) = 1;
    const auto c = center_sequence(SkeletonSequence(x, JointLayout::generic(2)), 0);
    CHECK(c(0, 1, 0) == 1.0);
    CHECK(c(1, 1, 0) == 1.0);
    CHECK(c(2, 1, 0) == 0.0);
  }
  SUBCASE("idempotent") {
    std::mt19937_64 gen(3);
    for (int trial = 0; trial < 20; ++trial) {
      SkeletonSequence s(oracle::random_tensor(3, 25, 6, gen), JointLayout::ntu25());
      const auto once = center_sequence(s, trial % 25);
      CHECK(center_sequence(once, trial % 25).values() == once.values());
    }
  }
  CHECK(code_of([] { center_sequence(ramp_sequence(2), 25); }) ==
        ErrorCode::kIndexOutOfRange);
}

TEST_CASE("json round trip is bit-identical") {
  std::mt19937_64 gen(11);
  auto x = oracle::random_tensor(3, 25, 9, gen);
  x(0, 0, 0) = 1e-300;
  x(1, 2, 3) = -123456789.123456789;
  x(2, 4, 5) = 0.1 + 0.2;
  SkeletonSequence s(x, JointLayout::ntu25());
  s.subject_id = 4;
  s.action_label = 2;
  s.person_index = 1;
  const auto back = sequence_from_json(sequence_to_json(s));
  CHECK(back.values() == s.values());
  CHECK(back.layout().name == "ntu25");
  CHECK(back.subject_id == 4);
  CHECK(back.action_label == 2);
  CHECK(back.person_index == 1);

  const auto path = std::filesystem::temp_directory_path() / "stjd_roundtrip.json";
  write_sequence(path, s);
  CHECK(read_sequence(path).values() == s.values());
  std::filesystem::remove(path);

  SkeletonSequence g(oracle::random_tensor(2, 4, 3, gen), JointLayout::generic(4));
  const auto gb = sequence_from_json(sequence_to_json(g));
  CHECK(gb.values() == g.values());
  CHECK(gb.joints() == 4);
}

TEST_CASE("json rejects inconsistent shapes") {
  CHECK(code_of([] {
          sequence_from_json(R"({"shape":[1,2,2],"layout":"generic","values":[1,2,3]})");
        }) == ErrorCode::kShapeMismatch);
  CHECK(code_of([] { sequence_from_json("{not json"); }) == ErrorCode::kFormatError);
}

TEST_CASE("parse then resample to the same length is exact") {
  std::stringstream s;
  s << "4\n";
  for (int f = 0; f < 4; ++f) {
    s << "1\n";
    write_body(s, {"9", joints_with(0.37 * f)});
  }
  const auto seq = parse_ntu_skeleton(s).at(0);
  const auto r = resample_sequence(seq, seq.frames());
  for (std::size_t i = 0; i < seq.values().size(); ++i) {
    CHECK(std::abs(r.values().data()[i] - seq.values().data()[i]) <= 1e-12);
  }
}

TEST_CASE("ntu layout") {
  const auto layout = JointLayout::ntu25();
  CHECK(layout.joint_count == 25);
  CHECK(layout.names.size() == 25);
  CHECK(layout.edges.size() == 24);
  CHECK(layout.edges_form_tree());
  CHECK_NOTHROW(validate_part_map(layout.part_map, 25));
  CHECK(layout.part_map.size() == 5);

  std::set<std::size_t> seen;
  for (const auto& [a, b] : layout.mirror_pairs) {
    CHECK(seen.insert(a).second);
    CHECK(seen.insert(b).second);
    const auto parts = layout.part_of_joint();
    CHECK(parts[a] != parts[b]);
  }
}

TEST_CASE("shipped part map matches the built-in layout") {
  const auto parts = load_part_map(std::filesystem::path(STJD_DATA_DIR) / "ntu25_parts.txt");
  CHECK(parts == JointLayout::ntu25().part_map);
  CHECK_NOTHROW(validate_part_map(parts, 25));
}

TEST_CASE("part map validation") {
  PartMap overlap{{"a", {0, 1}}, {"b", {1, 2}}};
  CHECK(code_of([&] { validate_part_map(overlap, 3); }) == ErrorCode::kPartMapIncomplete);
  PartMap missing{{"a", {0, 1}}};
  CHECK(code_of([&] { validate_part_map(missing, 3); }) == ErrorCode::kPartMapIncomplete);
  PartMap outside{{"a", {0, 1, 2, 3}}};
  CHECK(code_of([&] { validate_part_map(outside, 3); }) == ErrorCode::kPartMapIncomplete);
}
