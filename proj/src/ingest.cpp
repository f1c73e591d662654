#include <missformer/ingest.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace missformer {

namespace {

std::int64_t parse_id(const std::string& token, const char* what, std::size_t line_no) {
  const double v = parse_double(token, what, line_no);
  const double rounded = std::nearbyint(v);
  if (std::abs(v - rounded) > 1e-6 || std::abs(rounded) > 9.0e15)
    throw std::runtime_error("line " + std::to_string(line_no) + ": non-integral " + what +
                             " '" + token + "'");
  return static_cast<std::int64_t>(rounded);
}

RawRecord record_from_line(const std::string& line, std::size_t line_no) {
  std::istringstream fields(line);
  std::string f, a, x, y, extra;
  if (!(fields >> f >> a >> x >> y))
    throw std::runtime_error("line " + std::to_string(line_no) +
                             ": expected 4 fields `frame agent x y`");
  if (fields >> extra)
    throw std::runtime_error("line " + std::to_string(line_no) + ": trailing field '" +
                             extra + "'");
  RawRecord r;
  r.frame = parse_id(f, "frame", line_no);
  r.agent = parse_id(a, "agent", line_no);
  r.x = parse_double(x, "x", line_no);
  r.y = parse_double(y, "y", line_no);
  if (!std::isfinite(r.x) || !std::isfinite(r.y))
    throw std::runtime_error("line " + std::to_string(line_no) + ": non-finite coordinate");
  return r;
}

}  // namespace

std::vector<RawRecord> parse_records(std::istream& in, const ParseOptions& options) {
  std::vector<RawRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      records.push_back(record_from_line(line, line_no));
    } catch (const std::runtime_error& e) {
      if (!options.lenient) throw;
      const std::string warning = std::string("skipped ") + e.what();
      if (options.warnings)
        options.warnings->push_back(warning);
      else
        std::cerr << warning << '\n';
    }
  }
  return records;
}

std::vector<RawRecord> parse_file(const std::string& path, const ParseOptions& options) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  try {
    return parse_records(in, options);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void save_records(const std::vector<RawRecord>& records, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  for (const auto& r : records)
    out << r.frame << ' ' << r.agent << ' ' << format_double(r.x) << ' ' << format_double(r.y)
        << '\n';
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

SampleSet windows(std::vector<RawRecord> records, const WindowConfig& config,
                  std::string source) {
  if (config.obs_len < 1 || config.pred_len < 1)
    throw std::invalid_argument("window needs obs_len >= 1 and pred_len >= 1");
  if (config.stride < 1) throw std::invalid_argument("window stride must be >= 1");
  if (!(config.dt > 0.0)) throw std::invalid_argument("window dt must be positive");

  std::stable_sort(records.begin(), records.end(), [](const RawRecord& a, const RawRecord& b) {
    return a.agent != b.agent ? a.agent < b.agent : a.frame < b.frame;
  });

  SampleSet set;
  set.source = std::move(source);
  set.obs_len = config.obs_len;
  set.pred_len = config.pred_len;

  // Annotation decimation differs between splits; the modal positive frame
  // delta recovers each dataset's native stride (smallest wins a tie).
  std::map<std::int64_t, std::size_t> delta_counts;
  for (std::size_t i = 1; i < records.size(); ++i)
    if (records[i].agent == records[i - 1].agent && records[i].frame > records[i - 1].frame)
      ++delta_counts[records[i].frame - records[i - 1].frame];
  for (const auto& [delta, count] : delta_counts)
    if (set.frame_stride == 0 || count > delta_counts[set.frame_stride]) set.frame_stride = delta;
  if (set.frame_stride == 0) return set;  // no consecutive pairs at all

  const Index window_len = config.obs_len + config.pred_len;
  auto flush_run = [&](std::size_t begin, std::size_t end) {
    const auto run_len = static_cast<Index>(end - begin);
    for (Index start = 0; start + window_len <= run_len; start += config.stride) {
      Trajectory w;
      w.dt = config.dt;
      w.positions.resize(window_len, 2);
      for (Index j = 0; j < window_len; ++j) {
        const RawRecord& r = records[begin + static_cast<std::size_t>(start + j)];
        w.positions(j, 0) = r.x;
        w.positions(j, 1) = r.y;
      }
      if (config.center_last_observed) {
        const double cx = w.positions(config.obs_len - 1, 0);
        const double cy = w.positions(config.obs_len - 1, 1);
        for (Index j = 0; j < window_len; ++j) {
          w.positions(j, 0) -= cx;
          w.positions(j, 1) -= cy;
        }
      }
      set.windows.push_back(std::move(w));
    }
  };

  std::size_t run_begin = 0;
  for (std::size_t i = 1; i <= records.size(); ++i) {
    const bool chains = i < records.size() && records[i].agent == records[i - 1].agent &&
                        records[i].frame - records[i - 1].frame == set.frame_stride;
    if (!chains) {
      flush_run(run_begin, i);
      run_begin = i;
    }
  }
  return set;
}

}  // namespace missformer
