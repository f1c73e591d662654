#pragma once

// Readers for the ETH/UCY world-coordinate text format (`frame agent x y`
// rows) and the segmentation of per-agent tracks into fixed observe/predict
// windows at the dataset's native frame stride.

#include <missformer/trajectory.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace missformer {

struct RawRecord {
  std::int64_t frame = 0;
  std::int64_t agent = 0;
  double x = 0.0;  // meters, world coordinates
  double y = 0.0;

  bool operator==(const RawRecord&) const = default;
};

struct ParseOptions {
  // Strict parsing throws on the first malformed line; lenient parsing skips
  // it and records a warning (to `warnings` when given, stderr otherwise).
  bool lenient = false;
  std::vector<std::string>* warnings = nullptr;
};

// Whitespace-separated numeric rows; frame/agent may be written as integral
// floats ("10.0"). Malformed lines raise std::runtime_error naming the line.
std::vector<RawRecord> parse_records(std::istream& in, const ParseOptions& options = {});
std::vector<RawRecord> parse_file(const std::string& path, const ParseOptions& options = {});

// `frame agent x y` rows, full double precision.
void save_records(const std::vector<RawRecord>& records, const std::string& path);

struct WindowConfig {
  Index obs_len = 8;
  Index pred_len = 12;
  Index stride = 1;   // window start step within a run
  double dt = 0.4;    // seconds per step assigned to the output windows
  bool center_last_observed = false;  // translate each window so step obs_len-1 is (0,0)
};

struct SampleSet {
  std::string source;              // split name, bookkeeping only
  std::int64_t frame_stride = 0;   // modal frame delta the runs were built with
  Index obs_len = 0;
  Index pred_len = 0;
  std::vector<Trajectory> windows;  // obs_len + pred_len steps each
};

// Sorts by (agent, frame), infers the frame stride as the modal positive
// frame delta, chains frame-consecutive runs per agent (any other delta,
// including duplicates, breaks the run) and slides a window of
// obs_len + pred_len steps over each run. Never mixes agents.
SampleSet windows(std::vector<RawRecord> records, const WindowConfig& config = {},
                  std::string source = "");

}  // namespace missformer
