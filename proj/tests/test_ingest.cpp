#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <missformer/ingest.hpp>
#include <missformer/rng.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace missformer;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("/tmp/missformer_ingest_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

std::vector<RawRecord> track(std::int64_t agent, std::int64_t first_frame, int steps,
                             std::int64_t stride = 10) {
  std::vector<RawRecord> records;
  for (int i = 0; i < steps; ++i) {
    RawRecord r;
    r.agent = agent;
    r.frame = first_frame + stride * i;
    // coordinates encode identity so window contents can be audited
    r.x = static_cast<double>(agent) * 1000.0 + static_cast<double>(i);
    r.y = static_cast<double>(r.frame);
    records.push_back(r);
  }
  return records;
}

void append(std::vector<RawRecord>& into, const std::vector<RawRecord>& more) {
  into.insert(into.end(), more.begin(), more.end());
}

}  // namespace

TEST_CASE("empty input parses to an empty record list") {
  std::istringstream in("");
  CHECK(parse_records(in).empty());
  std::istringstream blanks("\n   \n\t\n");
  CHECK(parse_records(blanks).empty());
}

TEST_CASE("a literal row parses exactly, including integral-float ids") {
  std::istringstream in("10 3 1.5 -2.25\n840.0 17.0 0.125 3e2\n");
  const auto records = parse_records(in);
  REQUIRE(records.size() == 2);
  CHECK(records[0] == RawRecord{10, 3, 1.5, -2.25});
  CHECK(records[1] == RawRecord{840, 17, 0.125, 300.0});
}

TEST_CASE("strict parsing names the malformed line; lenient skips with a warning") {
  Rng rng(31);
  const char* mutations[] = {"abc 2 0.5 0.5",  // non-numeric frame
                             "7 2 0.5",        // missing field
                             "7 2 0.5 0.5 9",  // extra field
                             "7.5 2 0.5 0.5",  // fractional frame
                             "7 2 nan 0.5"};   // non-finite coordinate
  for (int rep = 0; rep < 10; ++rep) {
    const int bad_line = rng.uniform_int(1, 100);
    std::ostringstream text;
    for (int i = 1; i <= 100; ++i) {
      if (i == bad_line)
        text << mutations[rng.uniform_int(0, 4)] << '\n';
      else
        text << i * 10 << " 1 " << 0.5 * i << " -1.5\n";
    }

    std::istringstream strict(text.str());
    try {
      parse_records(strict);
      FAIL("expected a parse error");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()).find("line " + std::to_string(bad_line)) !=
            std::string::npos);
    }

    std::istringstream lax(text.str());
    std::vector<std::string> warnings;
    ParseOptions options;
    options.lenient = true;
    options.warnings = &warnings;
    const auto records = parse_records(lax, options);
    CHECK(records.size() == 99);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("line " + std::to_string(bad_line)) != std::string::npos);
  }
}

TEST_CASE("parse_file names the path and rejects missing files") {
  CHECK_THROWS_WITH_AS(parse_file("/tmp/missformer_ingest_nope"),
                       "cannot open '/tmp/missformer_ingest_nope'", std::runtime_error);
  TempFile file("badrow.txt");
  std::ofstream(file.path) << "1 1 0 0\nbogus\n";
  try {
    parse_file(file.path);
    FAIL("expected a parse error");
  } catch (const std::runtime_error& e) {
    const std::string what = e.what();
    CHECK(what.find(file.path) != std::string::npos);
    CHECK(what.find("line 2") != std::string::npos);
  }
}

TEST_CASE("records round-trip through their text form at full precision") {
  Rng rng(32);
  std::vector<RawRecord> records;
  for (int i = 0; i < 50; ++i) {
    RawRecord r;
    r.frame = rng.uniform_int(0, 100000);
    r.agent = rng.uniform_int(0, 500);
    r.x = rng.uniform(-100.0, 100.0);
    r.y = rng.normal(0.0, 7.3);
    records.push_back(r);
  }
  TempFile file("roundtrip.txt");
  save_records(records, file.path);
  CHECK(parse_file(file.path) == records);
}

TEST_CASE("an agent with exactly 20 consecutive frames yields one window") {
  const auto set = windows(track(1, 100, 20), {}, "unit");
  CHECK(set.frame_stride == 10);
  CHECK(set.source == "unit");
  REQUIRE(set.windows.size() == 1);
  const Trajectory& w = set.windows[0];
  REQUIRE(w.length() == 20);
  CHECK(w.dt == 0.4);
  for (Index j = 0; j < 20; ++j) {
    CHECK(w.positions(j, 0) == 1000.0 + static_cast<double>(j));
    CHECK(w.positions(j, 1) == 100.0 + 10.0 * static_cast<double>(j));
  }
}

TEST_CASE("a frame gap breaks the run so no window spans it") {
  auto records = track(1, 0, 10);          // frames 0..90
  append(records, track(1, 120, 10));      // gap of 30, then 120..210
  const auto set = windows(std::move(records));
  CHECK(set.frame_stride == 10);
  CHECK(set.windows.empty());  // two 10-step runs, neither long enough
}

TEST_CASE("window count follows the sliding-window counting oracle") {
  const auto set = windows(track(2, 0, 25));
  CHECK(set.windows.size() == 6);  // 25 - 20 + 1

  WindowConfig config;
  config.stride = 2;
  const auto strided = windows(track(2, 0, 25), config);
  CHECK(strided.windows.size() == 3);  // starts 0, 2, 4

  config.stride = 1;
  config.obs_len = 3;
  config.pred_len = 2;
  const auto short_windows = windows(track(2, 0, 7), config);
  CHECK(short_windows.windows.size() == 3);  // 7 - 5 + 1
}

TEST_CASE("the frame stride is the modal delta and ties go to the smallest") {
  // agent 1 sampled every 6 frames (majority), agent 2 every 12
  auto records = track(1, 0, 24, 6);
  append(records, track(2, 0, 4, 12));
  const auto set = windows(std::move(records));
  CHECK(set.frame_stride == 6);
  CHECK(set.windows.size() == 5);  // only agent 1 chains: 24 - 20 + 1

  auto tie = track(3, 0, 3, 5);       // two deltas of 5
  append(tie, track(4, 0, 3, 15));    // two deltas of 15
  CHECK(windows(std::move(tie)).frame_stride == 5);
}

TEST_CASE("windows never mix agents or span gaps on randomized record sets") {
  Rng rng(33);
  for (int rep = 0; rep < 8; ++rep) {
    std::vector<RawRecord> records;
    std::size_t expected = 0;
    const int agents = rng.uniform_int(2, 6);
    for (int a = 1; a <= agents; ++a) {
      std::int64_t frame = rng.uniform_int(0, 50) * 10;
      const int runs = rng.uniform_int(1, 3);
      for (int r = 0; r < runs; ++r) {
        const int steps = rng.uniform_int(1, 30);
        append(records, track(a, frame, steps));
        if (steps >= 20) expected += static_cast<std::size_t>(steps - 20 + 1);
        frame += 10 * steps + 10 * rng.uniform_int(1, 5) + 10;  // gap > stride
      }
    }
    // shuffle input order; windows() sorts internally
    for (std::size_t i = records.size(); i > 1; --i)
      std::swap(records[i - 1], records[static_cast<std::size_t>(rng.uniform_int(
                                    0, static_cast<int>(i) - 1))]);

    const auto set = windows(std::move(records));
    REQUIRE(set.frame_stride == 10);
    CHECK(set.windows.size() == expected);
    for (const Trajectory& w : set.windows) {
      const double agent_code = std::floor(w.positions(0, 0) / 1000.0);
      for (Index j = 0; j < w.length(); ++j) {
        CHECK(std::floor(w.positions(j, 0) / 1000.0) == agent_code);  // one agent
        if (j > 0)  // consecutive frames at the stride
          CHECK(w.positions(j, 1) - w.positions(j - 1, 1) == 10.0);
      }
    }
  }
}

TEST_CASE("center_last_observed translates each window to the origin") {
  WindowConfig config;
  config.center_last_observed = true;
  const auto set = windows(track(5, 0, 22), config);
  REQUIRE(set.windows.size() == 3);
  const auto plain = windows(track(5, 0, 22));
  for (std::size_t i = 0; i < set.windows.size(); ++i) {
    const Trajectory& c = set.windows[i];
    CHECK(c.positions(config.obs_len - 1, 0) == 0.0);
    CHECK(c.positions(config.obs_len - 1, 1) == 0.0);
    // translation only: step differences survive
    for (Index j = 1; j < c.length(); ++j) {
      CHECK(c.positions(j, 0) - c.positions(j - 1, 0) ==
            plain.windows[i].positions(j, 0) - plain.windows[i].positions(j - 1, 0));
      CHECK(c.positions(j, 1) - c.positions(j - 1, 1) ==
            plain.windows[i].positions(j, 1) - plain.windows[i].positions(j - 1, 1));
    }
  }
}

TEST_CASE("window extraction validates its configuration") {
  WindowConfig config;
  config.stride = 0;
  CHECK_THROWS_AS(windows({}, config), std::invalid_argument);
  config.stride = 1;
  config.obs_len = 0;
  CHECK_THROWS_AS(windows({}, config), std::invalid_argument);
  config.obs_len = 8;
  config.dt = 0.0;
  CHECK_THROWS_AS(windows({}, config), std::invalid_argument);
}

TEST_CASE("extracted windows serialize through the trajectory corpus format") {
  const auto set = windows(track(6, 40, 23));
  REQUIRE(set.windows.size() == 4);
  TempFile file("corpus.txt");
  save_corpus(set.windows, file.path);
  const auto loaded = load_corpus(file.path);
  REQUIRE(loaded.size() == set.windows.size());
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    CHECK(loaded[i].dt == set.windows[i].dt);
    CHECK(loaded[i].positions == set.windows[i].positions);
  }
}
