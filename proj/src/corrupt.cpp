#include <missformer/corrupt.hpp>

#include <cmath>
#include <stdexcept>
#include <string>

namespace missformer {

void CorruptionConfig::validate() const {
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std))
    throw std::invalid_argument("noise_std must be finite and >= 0");
  if (!(missing_prob >= 0.0 && missing_prob <= 1.0))
    throw std::invalid_argument("missing_prob must lie in [0,1], got " +
                                std::to_string(missing_prob));
}

ObservedSequence corrupt(const Trajectory& traj, const CorruptionConfig& config, Rng& rng) {
  config.validate();
  validate(traj);

  const Index k = traj.length();
  ObservedSequence obs;
  obs.mode = SequenceMode::positions;
  obs.values.resize(k, 2);
  obs.missing.resize(static_cast<std::size_t>(k));
  for (Index i = 0; i < k; ++i) {
    // Fixed per-step draw order (noise x, noise y, drop); the drop draw is
    // consumed even when it cannot apply so the stream stays aligned.
    const double nx = rng.normal(0.0, config.noise_std);
    const double ny = rng.normal(0.0, config.noise_std);
    bool drop = rng.bernoulli(config.missing_prob);
    if (config.protect_first && i == 0) drop = false;
    if (drop) {
      obs.values(i, 0) = 0.0;
      obs.values(i, 1) = 0.0;
      obs.missing[static_cast<std::size_t>(i)] = 1;
    } else {
      obs.values(i, 0) = traj.positions(i, 0) + nx;
      obs.values(i, 1) = traj.positions(i, 1) + ny;
      obs.missing[static_cast<std::size_t>(i)] = 0;
    }
  }
  return obs;
}

ObservedSequence corrupt(const Trajectory& traj, const CorruptionConfig& config) {
  Rng rng(config.seed);
  return corrupt(traj, config, rng);
}

ObservedSequence to_offsets(const ObservedSequence& obs) {
  if (obs.mode != SequenceMode::positions)
    throw std::invalid_argument("to_offsets needs a positions-mode sequence");
  validate(obs);

  const Index k = obs.length();
  ObservedSequence out;
  out.mode = SequenceMode::offsets;
  out.values = DenseMatrix<double>::Zero(k, 2);
  out.missing.resize(static_cast<std::size_t>(k));
  for (Index i = 0; i < k; ++i) {
    const bool gap = (i == 0) ? obs.missing[0] != 0
                              : (obs.missing[static_cast<std::size_t>(i)] != 0 ||
                                 obs.missing[static_cast<std::size_t>(i - 1)] != 0);
    if (gap) {
      out.missing[static_cast<std::size_t>(i)] = 1;
    } else {
      out.missing[static_cast<std::size_t>(i)] = 0;
      if (i > 0) out.values.row(i) = obs.values.row(i) - obs.values.row(i - 1);
    }
  }
  return out;
}

ObservedSequence mask_tail_for_prediction(const ObservedSequence& obs, Index n_pred) {
  if (n_pred < 0) throw std::invalid_argument("n_pred must be non-negative");
  if (n_pred >= obs.length())
    throw std::invalid_argument("cannot mask " + std::to_string(n_pred) + " of " +
                                std::to_string(obs.length()) + " steps");
  ObservedSequence out = obs;
  for (Index i = obs.length() - n_pred; i < obs.length(); ++i) {
    out.values(i, 0) = 0.0;
    out.values(i, 1) = 0.0;
    out.missing[static_cast<std::size_t>(i)] = 1;
  }
  return out;
}

}  // namespace missformer
