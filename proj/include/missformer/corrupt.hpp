#pragma once

// Corruption stage: turns ground-truth trajectories into model inputs by
// adding Gaussian observation noise, dropping steps via Bernoulli missing
// events (dropped steps become the (0,0,1) missing token), converting to the
// offset representation, and masking sequence tails for prediction.

#include <missformer/rng.hpp>
#include <missformer/trajectory.hpp>

#include <cstdint>

namespace missformer {

struct CorruptionConfig {
  double noise_std = 0.0;     // sigma of per-coordinate N(0, sigma^2), meters
  double missing_prob = 0.0;  // per-step drop probability
  bool protect_first = true;  // never drop step 0 (anchors offset inputs)
  std::uint64_t seed = 0;

  void validate() const;  // throws std::invalid_argument
};

// Noise and mask draws depend only on the rng stream, never on the trajectory
// values, so the truth under a dropped step cannot leak into the output.
ObservedSequence corrupt(const Trajectory& traj, const CorruptionConfig& config, Rng& rng);
ObservedSequence corrupt(const Trajectory& traj, const CorruptionConfig& config);

// Position -> offset representation. offset[0] is (0,0); offset[i] is the
// difference values[i]-values[i-1] when both endpoints are observed, and a
// missing token when either endpoint is missing.
ObservedSequence to_offsets(const ObservedSequence& obs);

// Replaces the last n_pred steps with missing tokens (the prediction slots).
ObservedSequence mask_tail_for_prediction(const ObservedSequence& obs, Index n_pred);

}  // namespace missformer
