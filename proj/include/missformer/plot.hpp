#pragma once

// Static SVG figures: attention heatmaps with missing-index markers and
// truth/observed/estimate trajectory overlays. Every figure gets a
// machine-readable `<path>.dump` sidecar carrying the exact numbers; tests
// assert on dumps, never on rendered bytes.

#include <missformer/model.hpp>
#include <missformer/trajectory.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace missformer {

struct AttentionDump {
  AttentionRecord record;
  std::vector<std::uint8_t> missing;
};

// One k x k color grid per layer/head (0 -> light, row max -> dark), missing
// input indices marked above each grid. Writes `path` and `path.dump`.
void plot_attention(const AttentionRecord& record, const std::vector<std::uint8_t>& missing,
                    const std::string& path);

void save_attention_dump(const AttentionRecord& record,
                         const std::vector<std::uint8_t>& missing, const std::string& path);
AttentionDump load_attention_dump(const std::string& path);

struct TrajectoryPlotData {
  Trajectory truth;
  ObservedSequence observed;
  Trajectory estimate;
};

// Overlay of ground truth, observed points, crosses at missing steps and the
// model estimate, axes in meters. Writes `path` and `path.dump`.
void plot_trajectories(const Trajectory& truth, const ObservedSequence& observed,
                       const Trajectory& estimate, const std::string& path);

void save_trajectory_dump(const TrajectoryPlotData& data, const std::string& path);
TrajectoryPlotData load_trajectory_dump(const std::string& path);

}  // namespace missformer
