#include <missformer/trajgen.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace missformer {

namespace {

double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }

}  // namespace

double Dist::sample(Rng& rng) const {
  switch (kind) {
    case Kind::uniform:
      return rng.uniform(a, b);
    case Kind::normal:
      return rng.normal(a, b);
    case Kind::positive_normal:
      return rng.positive_normal(a, b);
  }
  throw std::logic_error("unreachable distribution kind");
}

void Dist::validate(const char* name) const {
  if (!std::isfinite(a) || !std::isfinite(b))
    throw std::invalid_argument(std::string(name) + ": non-finite distribution parameter");
  if (kind == Kind::uniform && a > b)
    throw std::invalid_argument(std::string(name) + ": uniform bounds out of order (" +
                                std::to_string(a) + " > " + std::to_string(b) + ")");
  if (kind != Kind::uniform && b < 0.0)
    throw std::invalid_argument(std::string(name) + ": negative stddev");
  if (kind == Kind::positive_normal && b == 0.0 && a <= 0.0)
    throw std::invalid_argument(std::string(name) +
                                ": degenerate positive normal needs a positive mean");
}

void GeneratorConfig::validate() const {
  speed_dist.validate("speed_dist");
  heading_dist.validate("heading_dist");
  heading_change_dist.validate("heading_change_dist");
  accel_dist.validate("accel_dist");
  if (!(frame_rate > 0.0)) throw std::invalid_argument("frame_rate must be positive");
  if (min_length < 2)
    throw std::invalid_argument("min_length must be >= 2, got " + std::to_string(min_length));
  if (min_length > max_length)
    throw std::invalid_argument("length range out of order: [" + std::to_string(min_length) +
                                ", " + std::to_string(max_length) + "]");
  if (spatial_offset && !(spatial_offset_range >= 0.0))
    throw std::invalid_argument("spatial_offset_range must be non-negative");
}

GeneratorConfig object_config(std::uint64_t seed) {
  GeneratorConfig config;
  config.seed = seed;
  return config;  // struct defaults are the object regime
}

GeneratorConfig pedestrian_config(std::uint64_t seed) {
  GeneratorConfig config;
  config.speed_dist = Dist::positive_normal(1.38, 0.37);
  config.heading_change_dist = Dist::uniform(-20.0, 20.0);
  config.accel_dist = Dist::uniform(-0.2, 0.2);
  config.frame_rate = 2.5;
  config.seed = seed;
  return config;
}

Trajectory generate_one(const GeneratorConfig& config, Rng& rng) {
  const double dt = 1.0 / config.frame_rate;
  const Index k = static_cast<Index>(
      rng.uniform_int(static_cast<int>(config.min_length), static_cast<int>(config.max_length)));
  double speed = config.speed_dist.sample(rng);
  double heading = deg2rad(config.heading_dist.sample(rng));
  double x = 0.0;
  double y = 0.0;
  if (config.spatial_offset) {
    x = rng.uniform(-config.spatial_offset_range, config.spatial_offset_range);
    y = rng.uniform(-config.spatial_offset_range, config.spatial_offset_range);
  }

  Trajectory traj;
  traj.dt = dt;
  traj.positions.resize(k, 2);
  traj.positions(0, 0) = x;
  traj.positions(0, 1) = y;
  for (Index i = 1; i < k; ++i) {
    x += speed * dt * std::cos(heading);
    y += speed * dt * std::sin(heading);
    traj.positions(i, 0) = x;
    traj.positions(i, 1) = y;
    if (i + 1 < k) {  // draws happen between advances, none after the last
      heading += deg2rad(config.heading_change_dist.sample(rng));
      speed = std::max(0.0, speed + config.accel_dist.sample(rng) * dt);
    }
  }
  return traj;
}

std::vector<Trajectory> generate(const GeneratorConfig& config, Index n) {
  config.validate();
  if (n < 1) throw std::invalid_argument("need n >= 1 trajectories, got " + std::to_string(n));
  std::vector<Trajectory> corpus;
  corpus.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    Rng rng(Rng::derive(config.seed, static_cast<std::uint64_t>(i)));
    corpus.push_back(generate_one(config, rng));
  }
  return corpus;
}

std::vector<Trajectory> generate_object(const GeneratorConfig& config, Index n) {
  return generate(config, n);
}

std::vector<Trajectory> generate_pedestrian(const GeneratorConfig& config, Index n) {
  if (config.speed_dist.kind != Dist::Kind::positive_normal)
    throw std::invalid_argument("pedestrian regime expects a positive-normal speed distribution");
  return generate(config, n);
}

}  // namespace missformer
