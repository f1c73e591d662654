#pragma once

// Synthetic trajectory generators. Two regimes share one kinematic core:
//   object:     fast agents, U(5,10) m/s initial speed, 1 fps
//   pedestrian: N(1.38, 0.37^2) m/s walking speed (positive draws), 2.5 fps
// Per step the heading turns by a sampled angle and the speed integrates a
// sampled acceleration (clamped at zero); the position advances speed*dt
// along the current heading.

#include <missformer/rng.hpp>
#include <missformer/trajectory.hpp>

#include <cstdint>
#include <vector>

namespace missformer {

// Scalar sampling distribution for generator parameters.
struct Dist {
  enum class Kind { uniform, normal, positive_normal };

  Kind kind = Kind::uniform;
  double a = 0.0;  // uniform: lower bound; normal: mean
  double b = 0.0;  // uniform: upper bound; normal: stddev

  static Dist uniform(double lo, double hi) { return {Kind::uniform, lo, hi}; }
  static Dist normal(double mean, double stddev) { return {Kind::normal, mean, stddev}; }
  static Dist positive_normal(double mean, double stddev) {
    return {Kind::positive_normal, mean, stddev};
  }

  double sample(Rng& rng) const;
  void validate(const char* name) const;  // throws std::invalid_argument
};

struct GeneratorConfig {
  Dist speed_dist = Dist::uniform(5.0, 10.0);           // initial speed, m/s
  Dist heading_dist = Dist::uniform(0.0, 360.0);        // initial heading, degrees
  Dist heading_change_dist = Dist::uniform(-20.0, 20.0);  // per-step turn, degrees
  Dist accel_dist = Dist::uniform(-0.8, 1.5);           // per-step accel, m/s^2
  double frame_rate = 1.0;                              // fps; dt = 1/frame_rate
  Index min_length = 8;
  Index max_length = 20;
  std::uint64_t seed = 0;
  // Optional uniform start-position offset; default keeps every start at the
  // origin since the model consumes relative geometry only.
  bool spatial_offset = false;
  double spatial_offset_range = 10.0;  // start coords ~ U(-range, range) when enabled

  void validate() const;  // throws std::invalid_argument
};

GeneratorConfig object_config(std::uint64_t seed = 0);
GeneratorConfig pedestrian_config(std::uint64_t seed = 0);

// One trajectory from an explicit per-trajectory stream. Draw order is fixed:
// length, speed, heading, optional offset, then per step (turn, accel).
Trajectory generate_one(const GeneratorConfig& config, Rng& rng);

// n trajectories; trajectory i uses the stream derived from (seed, i), so the
// corpus is reproducible and generation could be split across workers.
std::vector<Trajectory> generate(const GeneratorConfig& config, Index n);

std::vector<Trajectory> generate_object(const GeneratorConfig& config, Index n);
std::vector<Trajectory> generate_pedestrian(const GeneratorConfig& config, Index n);

}  // namespace missformer
