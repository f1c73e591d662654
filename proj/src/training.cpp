#include <missformer/training.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

namespace missformer {

namespace {

// Stream tags for deriving independent rng sequences from one seed.
constexpr std::uint64_t kShuffleStream = 0x7368756666ULL;   // batch order
constexpr std::uint64_t kPredLenStream = 0x707265644cULL;   // tail lengths

template <class T>
void fisher_yates(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i)
    std::swap(items[i - 1], items[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i - 1)))]);
}

}  // namespace

const char* to_string(TaskKind task) {
  switch (task) {
    case TaskKind::reconstruction: return "reconstruction";
    case TaskKind::filtering: return "filtering";
    case TaskKind::prediction: return "prediction";
  }
  return "?";
}

TaskKind task_from_string(const std::string& s) {
  if (s == "reconstruction") return TaskKind::reconstruction;
  if (s == "filtering") return TaskKind::filtering;
  if (s == "prediction") return TaskKind::prediction;
  throw std::invalid_argument("unknown task '" + s + "'");
}

void TrainConfig::validate() const {
  AdamWConfig adam;
  adam.learning_rate = learning_rate;
  adam.beta1 = beta1;
  adam.beta2 = beta2;
  adam.eps = eps;
  adam.weight_decay = weight_decay;
  adam.validate();
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (curriculum_switch_epoch && *curriculum_switch_epoch >= epochs)
    throw std::invalid_argument("curriculum_switch_epoch must be smaller than epochs");
  if (pred_min < 1 || pred_min > pred_max)
    throw std::invalid_argument("prediction length range out of order");
}

Tensor mse_loss(const Tensor& estimates, const DenseMatrix<double>& truth) {
  if (estimates.rows() != truth.rows() || estimates.cols() != truth.cols())
    throw std::invalid_argument("mse_loss: estimate shape " + std::to_string(estimates.rows()) +
                                "x" + std::to_string(estimates.cols()) + " vs truth " +
                                std::to_string(truth.rows()) + "x" + std::to_string(truth.cols()));
  Tensor diff = sub(estimates, Tensor(truth));
  return mean_all(mul(diff, diff));
}

std::vector<ObservedSequence> epoch_observations(const std::vector<Trajectory>& corpus,
                                                 const CorruptionConfig& corrupt_config,
                                                 const TrainConfig& train_config,
                                                 SequenceMode input_mode, Index epoch,
                                                 std::vector<Index>* pred_lengths) {
  corrupt_config.validate();
  train_config.validate();
  const std::uint64_t corruption_epoch =
      train_config.frozen_corruption ? 0 : static_cast<std::uint64_t>(epoch);
  const bool mask_now =
      train_config.task == TaskKind::prediction &&
      (!train_config.curriculum_switch_epoch || epoch >= *train_config.curriculum_switch_epoch);
  Rng pred_rng(Rng::derive(Rng::derive(train_config.seed, kPredLenStream),
                           static_cast<std::uint64_t>(epoch)));

  std::vector<ObservedSequence> result;
  result.reserve(corpus.size());
  if (pred_lengths) pred_lengths->assign(corpus.size(), 0);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    Rng sample_rng(Rng::derive(Rng::derive(corrupt_config.seed, corruption_epoch),
                               static_cast<std::uint64_t>(i)));
    ObservedSequence obs = corrupt(corpus[i], corrupt_config, sample_rng);
    if (input_mode == SequenceMode::offsets) obs = to_offsets(obs);
    if (mask_now) {
      // keep at least two leading steps so the input stays a sequence
      const Index hi = std::min(train_config.pred_max, obs.length() - 2);
      const Index lo = std::min(train_config.pred_min, hi);
      const Index n_pred =
          static_cast<Index>(pred_rng.uniform_int(static_cast<int>(lo), static_cast<int>(hi)));
      obs = mask_tail_for_prediction(obs, n_pred);
      if (pred_lengths) (*pred_lengths)[i] = n_pred;
    }
    result.push_back(std::move(obs));
  }
  return result;
}

TrainRun train(MissFormerModel& model, const std::vector<Trajectory>& corpus,
               const CorruptionConfig& corrupt_config, const TrainConfig& train_config) {
  corrupt_config.validate();
  train_config.validate();
  if (corpus.empty()) throw std::invalid_argument("training corpus is empty");
  for (const Trajectory& t : corpus) {
    validate(t);
    if (t.length() > model.config().k_max)
      throw std::invalid_argument("corpus trajectory longer than the model's k_max");
  }

  AdamWConfig adam_config;
  adam_config.learning_rate = train_config.learning_rate;
  adam_config.beta1 = train_config.beta1;
  adam_config.beta2 = train_config.beta2;
  adam_config.eps = train_config.eps;
  adam_config.weight_decay = train_config.weight_decay;
  AdamW optimizer(model.parameters(), adam_config);

  TrainRun run;
  run.config = train_config;
  run.epoch_losses.reserve(static_cast<std::size_t>(train_config.epochs));
  const auto start = std::chrono::steady_clock::now();

  ForwardOptions forward_options;
  forward_options.record_attention = false;

  for (Index epoch = 0; epoch < train_config.epochs; ++epoch) {
    std::vector<Index> pred_lengths;
    const std::vector<ObservedSequence> observations = epoch_observations(
        corpus, corrupt_config, train_config, model.config().input_mode, epoch, &pred_lengths);

    // equal-length buckets -> shuffled batches, deterministic under the seed
    Rng shuffle_rng(Rng::derive(Rng::derive(train_config.seed, kShuffleStream),
                                static_cast<std::uint64_t>(epoch)));
    std::map<Index, std::vector<std::size_t>> by_length;
    for (std::size_t i = 0; i < observations.size(); ++i)
      by_length[observations[i].length()].push_back(i);
    std::vector<std::vector<std::size_t>> batches;
    for (auto& [length, indices] : by_length) {
      fisher_yates(indices, shuffle_rng);
      for (std::size_t pos = 0; pos < indices.size();
           pos += static_cast<std::size_t>(train_config.batch_size)) {
        const std::size_t end =
            std::min(indices.size(), pos + static_cast<std::size_t>(train_config.batch_size));
        batches.emplace_back(indices.begin() + static_cast<std::ptrdiff_t>(pos),
                             indices.begin() + static_cast<std::ptrdiff_t>(end));
      }
    }
    fisher_yates(batches, shuffle_rng);

    double weighted_loss = 0.0;
    double total_coords = 0.0;
    try {
      for (const std::vector<std::size_t>& batch : batches) {
        std::vector<const ObservedSequence*> inputs;
        inputs.reserve(batch.size());
        const Index k = observations[batch[0]].length();
        DenseMatrix<double> truth(static_cast<Index>(batch.size()) * k, 2);
        for (std::size_t b = 0; b < batch.size(); ++b) {
          inputs.push_back(&observations[batch[b]]);
          truth.middleRows(static_cast<Index>(b) * k, k) = corpus[batch[b]].positions;
        }
        BatchForwardResult forward = encoder_forward_batch(inputs, model, forward_options);
        Tensor loss = mse_loss(forward.estimates, truth);
        optimizer.zero_grad();
        backward(loss);
        optimizer.step();
        const double coords = static_cast<double>(truth.size());
        weighted_loss += loss.item() * coords;
        total_coords += coords;
      }
    } catch (const std::domain_error& e) {
      // non-finite loss/gradient/parameter surfaced by the tensor layer
      const std::string last =
          run.epoch_losses.empty()
              ? std::string("none")
              : std::to_string(run.epoch_losses.size() - 1) + " (loss " +
                    format_double(run.epoch_losses.back()) + ")";
      throw std::runtime_error("training diverged at epoch " + std::to_string(epoch) +
                               ": " + e.what() + "; last finite epoch: " + last);
    }

    const double epoch_loss = weighted_loss / total_coords;
    if (!std::isfinite(epoch_loss)) {
      const std::string last =
          run.epoch_losses.empty()
              ? std::string("none")
              : std::to_string(run.epoch_losses.size() - 1) + " (loss " +
                    format_double(run.epoch_losses.back()) + ")";
      throw std::runtime_error("training diverged at epoch " + std::to_string(epoch) +
                               ": non-finite epoch loss; last finite epoch: " + last);
    }
    run.epoch_losses.push_back(epoch_loss);

    double masked_steps = 0.0, total_steps = 0.0;
    for (std::size_t i = 0; i < observations.size(); ++i) {
      masked_steps += static_cast<double>(pred_lengths.empty() ? 0 : pred_lengths[i]);
      total_steps += static_cast<double>(observations[i].length());
    }
    run.masked_fraction.push_back(masked_steps / total_steps);
    run.wallclock_ms.push_back(
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count());
  }
  return run;
}

void save_train_log(const TrainRun& run, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  for (std::size_t e = 0; e < run.epoch_losses.size(); ++e)
    out << e << ' ' << format_double(run.epoch_losses[e]) << ' '
        << format_double(run.wallclock_ms[e]) << '\n';
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace missformer
