#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include "homeostat/drift.hpp"
#include "homeostat/rng.hpp"

namespace hs = homeostat;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const fs::path dir = fs::temp_directory_path() / "homeostat_drift_test";
  fs::create_directories(dir);
  return dir;
}

void write_bytes(const fs::path& p, const std::vector<unsigned char>& bytes) {
  std::ofstream f(p, std::ios::binary);
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
}

void push_be32(std::vector<unsigned char>& v, std::uint32_t x) {
  v.push_back(static_cast<unsigned char>(x >> 24));
  v.push_back(static_cast<unsigned char>(x >> 16));
  v.push_back(static_cast<unsigned char>(x >> 8));
  v.push_back(static_cast<unsigned char>(x));
}

// 2x2 images so the fixture stays readable
std::vector<unsigned char> image_file(std::uint32_t m, unsigned char fill) {
  std::vector<unsigned char> v;
  push_be32(v, hs::kIdxImageMagic);
  push_be32(v, m);
  push_be32(v, 2);
  push_be32(v, 2);
  for (std::uint32_t i = 0; i < m * 4; ++i) v.push_back(fill);
  return v;
}

std::vector<unsigned char> label_file(std::uint32_t m, unsigned char label) {
  std::vector<unsigned char> v;
  push_be32(v, hs::kIdxLabelMagic);
  push_be32(v, m);
  for (std::uint32_t i = 0; i < m; ++i) v.push_back(label);
  return v;
}

}  // namespace

TEST_CASE("idx loader validates headers") {
  const auto dir = temp_dir();
  const auto img = dir / "img";
  const auto lab = dir / "lab";

  SUBCASE("accepts a well-formed pair and scales pixels") {
    auto iv = image_file(2, 0);
    iv[16] = 255;  // first pixel of first image
    write_bytes(img, iv);
    write_bytes(lab, label_file(2, 7));
    const hs::Dataset d = hs::load_idx(img.string(), lab.string());
    CHECK(d.size() == 2);
    CHECK(d.images(0, 0) == 1.0);
    CHECK(d.images(1, 0) == 0.0);
    CHECK(d.raw_labels[0] == 7);
  }
  SUBCASE("bad image magic") {
    auto iv = image_file(2, 0);
    iv[3] = 99;
    write_bytes(img, iv);
    write_bytes(lab, label_file(2, 1));
    CHECK_THROWS_AS(hs::load_idx(img.string(), lab.string()), hs::FormatError);
  }
  SUBCASE("count mismatch") {
    write_bytes(img, image_file(2, 0));
    write_bytes(lab, label_file(3, 1));
    CHECK_THROWS_AS(hs::load_idx(img.string(), lab.string()), hs::FormatError);
  }
  SUBCASE("truncated image payload") {
    auto iv = image_file(2, 0);
    iv.resize(iv.size() - 3);
    write_bytes(img, iv);
    write_bytes(lab, label_file(2, 1));
    CHECK_THROWS_AS(hs::load_idx(img.string(), lab.string()), hs::IoError);
  }
  SUBCASE("label out of range") {
    write_bytes(img, image_file(1, 0));
    write_bytes(lab, label_file(1, 10));
    CHECK_THROWS_AS(hs::load_idx(img.string(), lab.string()), hs::FormatError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(hs::load_idx((dir / "nope").string(), lab.string()), hs::IoError);
  }
}

TEST_CASE("save/load round trip") {
  const auto dir = temp_dir();
  const hs::Dataset d = hs::make_synthetic(50, 123, 0.2);
  hs::save_idx(d, (dir / "rt-img").string(), (dir / "rt-lab").string());
  const hs::Dataset back = hs::load_idx((dir / "rt-img").string(), (dir / "rt-lab").string());
  REQUIRE(back.size() == d.size());
  CHECK(back.raw_labels == d.raw_labels);
  // pixels survive up to the 8-bit quantization of the file format
  CHECK((back.images - d.images).cwiseAbs().maxCoeff() <= 0.5 / 255.0 + 1e-12);
}

TEST_CASE("synthetic data is deterministic and balanced") {
  const hs::Dataset a = hs::make_synthetic(40, 9, 0.3);
  const hs::Dataset b = hs::make_synthetic(40, 9, 0.3);
  CHECK(a.images == b.images);
  CHECK(a.raw_labels == b.raw_labels);
  std::map<int, int> counts;
  for (int y : a.raw_labels) ++counts[y];
  for (int c = 0; c < 10; ++c) CHECK(counts[c] == 4);
  CHECK(a.images.minCoeff() >= 0.0);
  CHECK(a.images.maxCoeff() <= 1.0);
}

TEST_CASE("stratified subset balances classes") {
  const hs::Dataset d = hs::make_synthetic(200, 5, 0.2);
  auto rng = hs::make_rng(5, 1);
  const hs::Dataset sub = hs::stratified_subset(d, 53, rng);
  REQUIRE(sub.size() == 53);
  std::map<int, int> counts;
  for (int y : sub.raw_labels) ++counts[y];
  for (int c = 0; c < 10; ++c) {
    CHECK(counts[c] >= 5);
    CHECK(counts[c] <= 6);
  }
  CHECK_THROWS_AS(hs::stratified_subset(d, 201, rng), hs::ConfigurationError);
}

TEST_CASE("pair swap semantics") {
  const auto p1 = hs::swap_pair(hs::identity_permutation(), 0, 9);
  CHECK(p1.relabel(0) == 9);
  CHECK(p1.relabel(9) == 0);
  CHECK(p1.relabel(4) == 4);
  CHECK(p1.is_bijection());
  // swapping the same pair twice is the identity
  CHECK(hs::swap_pair(p1, 0, 9) == hs::identity_permutation());
  CHECK_THROWS(hs::swap_pair(p1, 3, 3));
  CHECK_THROWS(hs::swap_pair(p1, -1, 3));
}

TEST_CASE("random swap sequences preserve bijectivity") {
  auto rng = hs::make_rng(77, 0);
  std::uniform_int_distribution<int> cls(0, 9);
  auto perm = hs::identity_permutation();
  for (int i = 0; i < 2000; ++i) {
    int a = cls(rng), b = cls(rng);
    if (a == b) continue;
    perm = hs::swap_pair(perm, a, b);
    REQUIRE(perm.is_bijection());
  }
}

TEST_CASE("event spacing within an epoch") {
  auto rng = hs::make_rng(1, 0);
  SUBCASE("rate 500 in a 50000-presentation epoch") {
    const auto sched = hs::ShiftSchedule::constant(500, 50000);
    const auto events = hs::swap_events_for_epoch(sched, 0, rng);
    REQUIRE(events.size() == 500);
    for (std::size_t i = 0; i < events.size(); ++i) {
      CHECK(events[i].presentation_index == 100 * static_cast<long>(i + 1));
      CHECK(events[i].class_a != events[i].class_b);
    }
  }
  SUBCASE("rate 1 lands at the epoch boundary") {
    const auto sched = hs::ShiftSchedule::constant(1, 5000);
    const auto events = hs::swap_events_for_epoch(sched, 3, rng);
    REQUIRE(events.size() == 1);
    CHECK(events[0].presentation_index == 3 * 5000L + 5000);
    CHECK(events[0].epoch == 3);
  }
  SUBCASE("rate 0 yields no events") {
    const auto sched = hs::ShiftSchedule::constant(0, 5000);
    CHECK(hs::swap_events_for_epoch(sched, 0, rng).empty());
  }
  SUBCASE("rate above epoch length is rejected") {
    const auto sched = hs::ShiftSchedule::constant(5001, 5000);
    CHECK_THROWS(hs::swap_events_for_epoch(sched, 0, rng));
  }
}

TEST_CASE("stream serves every sample once per epoch when lengths match") {
  const hs::Dataset d = hs::make_synthetic(60, 2, 0.2);
  hs::DriftStream stream(d, hs::ShiftSchedule::constant(0, 60), 11);
  for (int epoch = 0; epoch < 3; ++epoch) {
    std::vector<int> seen(60, 0);
    for (int i = 0; i < 60; ++i) ++seen[static_cast<std::size_t>(stream.next().sample)];
    for (int count : seen) CHECK(count == 1);
  }
}

TEST_CASE("stream is deterministic and swaps relabel served samples") {
  const hs::Dataset d = hs::make_synthetic(50, 3, 0.2);
  const auto sched = hs::ShiftSchedule::constant(5, 100);
  hs::DriftStream s1(d, sched, 21);
  hs::DriftStream s2(d, sched, 21);
  auto perm = hs::identity_permutation();
  for (int i = 0; i < 450; ++i) {
    const auto p1 = s1.next();
    const auto p2 = s2.next();
    CHECK(p1.sample == p2.sample);
    CHECK(p1.label == p2.label);
    for (const auto& e : p1.fired) perm = hs::swap_pair(perm, e.class_a, e.class_b);
    // replaying the fired events reconstructs the stream's permutation,
    // and the served label is the raw label pushed through it
    CHECK(perm == s1.permutation());
    CHECK(p1.label == perm.relabel(d.raw_labels[static_cast<std::size_t>(p1.sample)]));
  }
  // events with presentation_index <= 449: four served epochs' worth plus two
  CHECK(s1.event_log().size() == 4 * 5 + 2);
}

TEST_CASE("event log replay matches the full event_log accessor") {
  const hs::Dataset d = hs::make_synthetic(30, 4, 0.2);
  hs::DriftStream stream(d, hs::ShiftSchedule::constant(3, 90), 31);
  auto perm = hs::identity_permutation();
  for (int i = 0; i < 270; ++i) stream.next();
  for (const auto& e : stream.event_log()) perm = hs::swap_pair(perm, e.class_a, e.class_b);
  CHECK(perm == stream.permutation());
}

TEST_CASE("seasonal schedules") {
  SUBCASE("schedule A alternates calm and storm") {
    const auto sched = hs::schedule_a(1000, 40, 10);
    CHECK(sched.rate_at(0) == 0.0);
    CHECK(sched.rate_at(10) == 40.0);
    CHECK(sched.rate_at(25) == 0.0);
    CHECK(sched.rate_at(30) == 40.0);
    CHECK(sched.rate_at(45) == 0.0);
    CHECK(sched.rate_at(400) == 0.0);  // last segment persists
  }
  SUBCASE("schedule B ramps through an intermediate rate") {
    const auto sched = hs::schedule_b(1000, 40, 8);
    CHECK(sched.rate_at(0) == 0.0);
    CHECK(sched.rate_at(8) == 4.0);
    CHECK(sched.rate_at(16) == 40.0);
    CHECK(sched.rate_at(24) == 4.0);
    CHECK(sched.rate_at(32) == 0.0);
  }
}

TEST_CASE("event log CSV format") {
  const auto dir = temp_dir();
  std::vector<hs::SwapEvent> events{{100, 0, 2, 7}, {200, 0, 1, 4}};
  const auto path = (dir / "events.csv").string();
  hs::write_event_log(events, path);
  std::ifstream f(path);
  std::string line;
  std::getline(f, line);
  CHECK(line == "presentation_index,epoch,class_a,class_b");
  std::getline(f, line);
  CHECK(line == "100,0,2,7");
  std::getline(f, line);
  CHECK(line == "200,0,1,4");
}
