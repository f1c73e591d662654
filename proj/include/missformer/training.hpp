#pragma once

// Mean-squared-error training over a trajectory corpus. Each epoch corrupts
// the corpus afresh (unless frozen), groups equal-length sequences into
// shuffled mini-batches and applies AdamW. For the prediction task, tail
// masking starts at the curriculum switch epoch (immediately when unset).

#include <missformer/corrupt.hpp>
#include <missformer/model.hpp>
#include <missformer/optimizer.hpp>
#include <missformer/tensor.hpp>
#include <missformer/trajectory.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace missformer {

enum class TaskKind { reconstruction, filtering, prediction };

const char* to_string(TaskKind task);
TaskKind task_from_string(const std::string& s);

struct TrainConfig {
  double learning_rate = 0.001;
  Index epochs = 1;
  Index batch_size = 64;
  TaskKind task = TaskKind::reconstruction;
  // Epoch at which prediction-style tail masking begins. Unset means: mask
  // from the start for the prediction task, never for the other tasks.
  std::optional<Index> curriculum_switch_epoch;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 0;
  bool frozen_corruption = false;  // reuse the epoch-0 corruption every epoch
  Index pred_min = 6;              // sampled tail lengths for the prediction task
  Index pred_max = 12;

  void validate() const;  // throws std::invalid_argument
};

struct TrainRun {
  std::vector<double> epoch_losses;     // coordinate-weighted mean per epoch
  std::vector<double> wallclock_ms;     // cumulative, one entry per epoch
  std::vector<double> masked_fraction;  // fraction of tail-masked steps per epoch
  TrainConfig config;
};

// Mean over all k*2 squared coordinate differences; truth rows pair with
// estimate rows (works for stacked equal-length batches too).
Tensor mse_loss(const Tensor& estimates, const DenseMatrix<double>& truth);

// The exact observation set the trainer feeds at `epoch`, in corpus order:
// corruption (fresh or frozen), offset conversion when the model wants
// offsets, then tail masking if the curriculum says so. Exposed so tests and
// the evaluation harness share the trainer's data path. When `pred_lengths`
// is given it receives the masked tail length per sample (0 = unmasked).
std::vector<ObservedSequence> epoch_observations(const std::vector<Trajectory>& corpus,
                                                 const CorruptionConfig& corrupt_config,
                                                 const TrainConfig& train_config,
                                                 SequenceMode input_mode, Index epoch,
                                                 std::vector<Index>* pred_lengths = nullptr);

// Trains in place. Throws std::runtime_error on divergence (non-finite loss,
// gradient or parameter), reporting the failing epoch and the last finite one.
TrainRun train(MissFormerModel& model, const std::vector<Trajectory>& corpus,
               const CorruptionConfig& corrupt_config, const TrainConfig& train_config);

// Newline-delimited records: epoch loss wallclock_ms.
void save_train_log(const TrainRun& run, const std::string& path);

}  // namespace missformer
