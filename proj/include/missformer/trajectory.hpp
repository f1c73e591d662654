#pragma once

// Core trajectory/order-of-observation types shared by the generators, the
// corruption stage, the model and the evaluation harness, plus the
// newline-delimited text corpus format every pipeline stage speaks.

#include <missformer/tensor.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace missformer {

// Ground-truth sequence of 2D positions sampled at a fixed rate.
struct Trajectory {
  DenseMatrix<double> positions;  // k x 2, meters
  double dt = 1.0;                // seconds per step

  Index length() const { return positions.rows(); }
};

enum class SequenceMode { positions, offsets };

const char* to_string(SequenceMode mode);
SequenceMode sequence_mode_from_string(const std::string& s);

// Corrupted model input: per-step 2D values plus a missing bit. Missing steps
// carry exactly (0,0) so the underlying truth cannot leak through them.
struct ObservedSequence {
  DenseMatrix<double> values;          // k x 2, zeroed where missing
  std::vector<std::uint8_t> missing;   // k entries, 1 = missing
  SequenceMode mode = SequenceMode::positions;

  Index length() const { return values.rows(); }
};

// Throws std::invalid_argument when an invariant is broken (short sequence,
// non-finite coordinate, missing step with non-zero value, ...).
void validate(const Trajectory& traj);
void validate(const ObservedSequence& obs);

// ---- corpus text format ----------------------------------------------------
// One record per line, space-separated decimal text:
//   trajectory: k dt x1 y1 x2 y2 ...
//   observed:   k mode x1 y1 m1 x2 y2 m2 ...     (mode: positions|offsets)
// Numbers are written shortest-round-trip so load(save(c)) is exact.

std::string format_double(double v);
double parse_double(const std::string& token, const char* what, std::size_t line_no);

std::string to_line(const Trajectory& traj);
std::string to_line(const ObservedSequence& obs);
Trajectory trajectory_from_line(const std::string& line, std::size_t line_no = 0);
ObservedSequence observed_from_line(const std::string& line, std::size_t line_no = 0);

void save_corpus(const std::vector<Trajectory>& corpus, const std::string& path);
std::vector<Trajectory> load_corpus(const std::string& path);
void save_observed(const std::vector<ObservedSequence>& corpus, const std::string& path);
std::vector<ObservedSequence> load_observed(const std::string& path);

}  // namespace missformer
