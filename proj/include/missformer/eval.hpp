#pragma once

// Displacement metrics (ADE, sigma_ADE, FDE), corpus-level evaluation for the
// three inference tasks, the constant-velocity least-squares baseline, and the
// five-split leave-one-out protocol for real data.

#include <missformer/corrupt.hpp>
#include <missformer/model.hpp>
#include <missformer/trajectory.hpp>
#include <missformer/training.hpp>

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace missformer {

// Half-open step range [begin, end) selecting which steps a metric covers:
// all steps for reconstruction/filtering, the masked tail for prediction.
struct StepRange {
  Index begin = 0;
  Index end = 0;
};

struct EvalReport {
  std::string task;
  Index n_samples = 0;
  double ade = 0.0;      // mean over samples of per-sample ADE, meters
  double ade_std = 0.0;  // population std of per-sample ADE, meters
  double fde = 0.0;      // mean over samples of per-sample FDE, meters
  std::vector<std::pair<double, double>> per_sample;  // (ade_i, fde_i)
};

// Mean Euclidean distance over the range. Throws std::invalid_argument on an
// empty or out-of-bounds range or mismatched lengths.
double ade(const Trajectory& estimate, const Trajectory& truth, StepRange range);

// Euclidean distance at the final step. Lengths must match.
double fde(const Trajectory& estimate, const Trajectory& truth);

// Aggregates per-sample metrics in index order (deterministic reduction).
// ranges[i] applies to pair i; a report's ade/fde are unweighted means.
EvalReport evaluate_estimates(const std::vector<Trajectory>& estimates,
                              const std::vector<Trajectory>& truths,
                              const std::vector<StepRange>& ranges, std::string task);

struct EvalConfig {
  TaskKind task = TaskKind::reconstruction;
  Index pred_min = 6;  // sampled masked-tail lengths for the prediction task
  Index pred_max = 12;
  Index batch_size = 64;
  std::uint64_t seed = 0;  // drives tail-length sampling; noise/masks come from the corruption seed
};

// Corrupts the corpus once (deterministically from the seeds involved), feeds
// it through the model grouped by length, and scores the head output as
// positions in meters. Offset-mode models need no integration: their head is
// trained against absolute positions.
EvalReport evaluate(const MissFormerModel& model, const std::vector<Trajectory>& corpus,
                    const CorruptionConfig& corrupt_config, const EvalConfig& eval_config);

// Same data path, estimates from the constant-velocity baseline instead.
EvalReport evaluate_linear_baseline(const std::vector<Trajectory>& corpus,
                                    const CorruptionConfig& corrupt_config,
                                    const EvalConfig& eval_config);

// Least-squares constant-velocity fit over the observed steps, evaluated over
// the full length plus `horizon` extra steps (missing steps are filled by the
// fitted line). Throws std::invalid_argument with fewer than 2 observed steps.
Trajectory linear_baseline(const ObservedSequence& obs, Index horizon, double dt = 1.0);

struct LooSplit {
  std::string name;  // eth, hotel, univ, zara1 or zara2
  std::vector<Trajectory> trajectories;
};

struct LeaveOneOutResult {
  std::vector<std::pair<std::string, EvalReport>> per_split;
  EvalReport average;  // unweighted mean over the five splits
};

// Called once per rotation with the held-out split's name, the four training
// splits merged, and the held-out trajectories; returns the held-out report.
using SplitEvaluator = std::function<EvalReport(
    const std::string& held_out, const std::vector<Trajectory>& train_set,
    const std::vector<Trajectory>& eval_set)>;

// Requires exactly the five canonical splits (any order); throws
// std::invalid_argument otherwise.
LeaveOneOutResult leave_one_out(const std::vector<LooSplit>& splits,
                                const SplitEvaluator& evaluate_split);

// Newline-delimited records: task n ade ade_std fde.
void save_eval_records(const std::vector<EvalReport>& reports, const std::string& path);
std::vector<EvalReport> load_eval_records(const std::string& path);

}  // namespace missformer
