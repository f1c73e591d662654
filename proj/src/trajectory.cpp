#include <missformer/trajectory.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace missformer {

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) tokens.push_back(tok);
  return tokens;
}

[[noreturn]] void line_error(std::size_t line_no, const std::string& what) {
  throw std::runtime_error("line " + std::to_string(line_no) + ": " + what);
}

}  // namespace

const char* to_string(SequenceMode mode) {
  return mode == SequenceMode::positions ? "positions" : "offsets";
}

SequenceMode sequence_mode_from_string(const std::string& s) {
  if (s == "positions") return SequenceMode::positions;
  if (s == "offsets") return SequenceMode::offsets;
  throw std::invalid_argument("unknown sequence mode '" + s + "'");
}

void validate(const Trajectory& traj) {
  if (traj.length() < 2)
    throw std::invalid_argument("trajectory needs at least 2 steps, got " +
                                std::to_string(traj.length()));
  if (traj.positions.cols() != 2)
    throw std::invalid_argument("trajectory positions must be k x 2");
  if (!(traj.dt > 0.0)) throw std::invalid_argument("trajectory dt must be positive");
  if (!traj.positions.allFinite())
    throw std::invalid_argument("trajectory contains non-finite coordinates");
}

void validate(const ObservedSequence& obs) {
  if (obs.values.cols() != 2)
    throw std::invalid_argument("observed values must be k x 2");
  if (static_cast<Index>(obs.missing.size()) != obs.values.rows())
    throw std::invalid_argument("missing flags must match sequence length");
  if (!obs.values.allFinite())
    throw std::invalid_argument("observed sequence contains non-finite values");
  for (Index i = 0; i < obs.values.rows(); ++i) {
    if (obs.missing[static_cast<std::size_t>(i)] > 1)
      throw std::invalid_argument("missing flags must be 0 or 1");
    if (obs.missing[static_cast<std::size_t>(i)] == 1 &&
        (obs.values(i, 0) != 0.0 || obs.values(i, 1) != 0.0))
      throw std::invalid_argument("missing step " + std::to_string(i) +
                                  " must carry exactly (0,0)");
  }
}

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw std::runtime_error("failed to format double");
  return std::string(buf, end);
}

double parse_double(const std::string& token, const char* what, std::size_t line_no) {
  double v = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  auto [end, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || end != last)
    line_error(line_no, std::string("malformed ") + what + " '" + token + "'");
  return v;
}

std::string to_line(const Trajectory& traj) {
  std::string out = std::to_string(traj.length());
  out += ' ';
  out += format_double(traj.dt);
  for (Index i = 0; i < traj.length(); ++i) {
    out += ' ';
    out += format_double(traj.positions(i, 0));
    out += ' ';
    out += format_double(traj.positions(i, 1));
  }
  return out;
}

std::string to_line(const ObservedSequence& obs) {
  std::string out = std::to_string(obs.length());
  out += ' ';
  out += to_string(obs.mode);
  for (Index i = 0; i < obs.length(); ++i) {
    out += ' ';
    out += format_double(obs.values(i, 0));
    out += ' ';
    out += format_double(obs.values(i, 1));
    out += ' ';
    out += std::to_string(int(obs.missing[static_cast<std::size_t>(i)]));
  }
  return out;
}

Trajectory trajectory_from_line(const std::string& line, std::size_t line_no) {
  const auto tokens = split_ws(line);
  if (tokens.size() < 2) line_error(line_no, "trajectory record too short");
  const long k = std::lround(parse_double(tokens[0], "length", line_no));
  if (k < 2) line_error(line_no, "trajectory length must be >= 2");
  if (tokens.size() != 2 + 2 * static_cast<std::size_t>(k))
    line_error(line_no, "expected " + std::to_string(2 + 2 * k) + " fields, got " +
                            std::to_string(tokens.size()));
  Trajectory traj;
  traj.dt = parse_double(tokens[1], "dt", line_no);
  traj.positions.resize(k, 2);
  for (long i = 0; i < k; ++i) {
    traj.positions(i, 0) = parse_double(tokens[2 + 2 * i], "x", line_no);
    traj.positions(i, 1) = parse_double(tokens[3 + 2 * i], "y", line_no);
  }
  try {
    validate(traj);
  } catch (const std::invalid_argument& e) {
    line_error(line_no, e.what());
  }
  return traj;
}

ObservedSequence observed_from_line(const std::string& line, std::size_t line_no) {
  const auto tokens = split_ws(line);
  if (tokens.size() < 2) line_error(line_no, "observed record too short");
  const long k = std::lround(parse_double(tokens[0], "length", line_no));
  if (k < 1) line_error(line_no, "observed length must be >= 1");
  if (tokens.size() != 2 + 3 * static_cast<std::size_t>(k))
    line_error(line_no, "expected " + std::to_string(2 + 3 * k) + " fields, got " +
                            std::to_string(tokens.size()));
  ObservedSequence obs;
  try {
    obs.mode = sequence_mode_from_string(tokens[1]);
  } catch (const std::invalid_argument& e) {
    line_error(line_no, e.what());
  }
  obs.values.resize(k, 2);
  obs.missing.resize(static_cast<std::size_t>(k));
  for (long i = 0; i < k; ++i) {
    obs.values(i, 0) = parse_double(tokens[2 + 3 * i], "x", line_no);
    obs.values(i, 1) = parse_double(tokens[3 + 3 * i], "y", line_no);
    const double m = parse_double(tokens[4 + 3 * i], "missing flag", line_no);
    if (m != 0.0 && m != 1.0) line_error(line_no, "missing flag must be 0 or 1");
    obs.missing[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(m);
  }
  try {
    validate(obs);
  } catch (const std::invalid_argument& e) {
    line_error(line_no, e.what());
  }
  return obs;
}

namespace {

template <class Record, class ToLine>
void save_lines(const std::vector<Record>& records, const std::string& path, ToLine to_line_fn) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  for (const auto& rec : records) out << to_line_fn(rec) << '\n';
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

template <class Record, class FromLine>
std::vector<Record> load_lines(const std::string& path, FromLine from_line_fn) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  std::vector<Record> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    records.push_back(from_line_fn(line, line_no));
  }
  return records;
}

}  // namespace

void save_corpus(const std::vector<Trajectory>& corpus, const std::string& path) {
  save_lines(corpus, path, [](const Trajectory& t) { return to_line(t); });
}

std::vector<Trajectory> load_corpus(const std::string& path) {
  return load_lines<Trajectory>(path, [](const std::string& l, std::size_t n) {
    return trajectory_from_line(l, n);
  });
}

void save_observed(const std::vector<ObservedSequence>& corpus, const std::string& path) {
  save_lines(corpus, path, [](const ObservedSequence& o) { return to_line(o); });
}

std::vector<ObservedSequence> load_observed(const std::string& path) {
  return load_lines<ObservedSequence>(path, [](const std::string& l, std::size_t n) {
    return observed_from_line(l, n);
  });
}

}  // namespace missformer
