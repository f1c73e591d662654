#include <missformer/plot.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace missformer {

namespace {

[[noreturn]] void line_error(std::size_t line_no, const std::string& what) {
  throw std::runtime_error("line " + std::to_string(line_no) + ": " + what);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

void finish_out(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

void check_attention(const AttentionRecord& record, const std::vector<std::uint8_t>& missing) {
  if (record.weights.empty()) throw std::invalid_argument("attention record has no layers");
  const Index k = static_cast<Index>(missing.size());
  const std::size_t heads = record.weights.front().size();
  if (heads == 0) throw std::invalid_argument("attention record has no heads");
  for (const auto& layer : record.weights) {
    if (layer.size() != heads)
      throw std::invalid_argument("attention record has ragged head counts");
    for (const auto& w : layer)
      if (w.rows() != k || w.cols() != k)
        throw std::invalid_argument("attention matrices must be k x k with k matching the "
                                    "missing flags");
  }
}

// white -> dark blue ramp
std::string heat_color(double v) {
  v = std::clamp(v, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(247.0 + (8.0 - 247.0) * v));
  const int g = static_cast<int>(std::lround(251.0 + (48.0 - 251.0) * v));
  const int b = static_cast<int>(std::lround(255.0 + (107.0 - 255.0) * v));
  std::ostringstream s;
  s << "rgb(" << r << ',' << g << ',' << b << ')';
  return s.str();
}

std::string num(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

}  // namespace

void save_attention_dump(const AttentionRecord& record,
                         const std::vector<std::uint8_t>& missing, const std::string& path) {
  check_attention(record, missing);
  std::ofstream out = open_out(path);
  const Index k = static_cast<Index>(missing.size());
  out << "attention-dump v1\n";
  out << "layers " << record.weights.size() << " heads " << record.weights.front().size()
      << " k " << k << "\n";
  out << "missing";
  for (auto m : missing) out << ' ' << static_cast<int>(m);
  out << "\n";
  for (std::size_t layer = 0; layer < record.weights.size(); ++layer)
    for (std::size_t head = 0; head < record.weights[layer].size(); ++head) {
      out << "layer " << layer << " head " << head << "\n";
      const auto& w = record.weights[layer][head];
      for (Index i = 0; i < k; ++i) {
        for (Index j = 0; j < k; ++j) out << (j ? " " : "") << format_double(w(i, j));
        out << "\n";
      }
    }
  finish_out(out, path);
}

AttentionDump load_attention_dump(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> std::string& {
    if (!std::getline(in, line)) line_error(line_no + 1, "unexpected end of file");
    ++line_no;
    return line;
  };

  if (next_line() != "attention-dump v1") line_error(line_no, "bad magic");
  std::istringstream header(next_line());
  std::string kw1, kw2, kw3;
  std::size_t layers = 0, heads = 0;
  Index k = 0;
  if (!(header >> kw1 >> layers >> kw2 >> heads >> kw3 >> k) || kw1 != "layers" ||
      kw2 != "heads" || kw3 != "k" || layers == 0 || heads == 0 || k <= 0)
    line_error(line_no, "bad header");

  AttentionDump dump;
  std::istringstream miss(next_line());
  std::string kw;
  if (!(miss >> kw) || kw != "missing") line_error(line_no, "expected missing flags");
  int flag = 0;
  while (miss >> flag) {
    if (flag != 0 && flag != 1) line_error(line_no, "missing flags must be 0 or 1");
    dump.missing.push_back(static_cast<std::uint8_t>(flag));
  }
  if (static_cast<Index>(dump.missing.size()) != k) line_error(line_no, "wrong flag count");

  dump.record.weights.resize(layers);
  for (std::size_t layer = 0; layer < layers; ++layer) {
    dump.record.weights[layer].resize(heads);
    for (std::size_t head = 0; head < heads; ++head) {
      std::istringstream title(next_line());
      std::size_t l = 0, h = 0;
      if (!(title >> kw1 >> l >> kw2 >> h) || kw1 != "layer" || kw2 != "head" || l != layer ||
          h != head)
        line_error(line_no, "bad matrix heading");
      DenseMatrix<double>& w = dump.record.weights[layer][head];
      w.resize(k, k);
      for (Index i = 0; i < k; ++i) {
        std::istringstream row(next_line());
        std::string tok;
        for (Index j = 0; j < k; ++j) {
          if (!(row >> tok)) line_error(line_no, "short matrix row");
          w(i, j) = parse_double(tok, "weight", line_no);
        }
        if (row >> tok) line_error(line_no, "long matrix row");
      }
    }
  }
  return dump;
}

void plot_attention(const AttentionRecord& record, const std::vector<std::uint8_t>& missing,
                    const std::string& path) {
  check_attention(record, missing);
  const Index k = static_cast<Index>(missing.size());
  const std::size_t layers = record.weights.size();
  const std::size_t heads = record.weights.front().size();

  const double cell = 16.0, pad = 46.0, title_h = 34.0;
  const double grid = cell * static_cast<double>(k);
  const double panel_w = grid + pad, panel_h = grid + pad + title_h;
  const double width = panel_w * static_cast<double>(heads) + pad;
  const double height = panel_h * static_cast<double>(layers) + pad;

  std::ofstream out = open_out(path);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
      << "' viewBox='0 0 " << width << ' ' << height << "'>\n";
  out << "<style>text{font-family:sans-serif;font-size:11px;fill:#333}"
         ".miss{fill:#d62728;font-weight:bold}</style>\n";

  for (std::size_t layer = 0; layer < layers; ++layer)
    for (std::size_t head = 0; head < heads; ++head) {
      const double x0 = pad + panel_w * static_cast<double>(head);
      const double y0 = pad + panel_h * static_cast<double>(layer) + title_h;
      const auto& w = record.weights[layer][head];
      const double peak = std::max(w.maxCoeff(), 1e-300);

      out << "<text x='" << x0 << "' y='" << y0 - 22 << "'>layer " << layer << " head "
          << head << "</text>\n";
      // missing input indices sit above the corresponding key columns
      for (Index j = 0; j < k; ++j)
        if (missing[static_cast<std::size_t>(j)])
          out << "<text class='miss' x='" << x0 + cell * (static_cast<double>(j) + 0.5)
              << "' y='" << y0 - 6 << "' text-anchor='middle'>" << j << "</text>\n";
      for (Index i = 0; i < k; ++i)
        for (Index j = 0; j < k; ++j)
          out << "<rect x='" << x0 + cell * static_cast<double>(j) << "' y='"
              << y0 + cell * static_cast<double>(i) << "' width='" << cell << "' height='"
              << cell << "' fill='" << heat_color(w(i, j) / peak) << "'/>\n";
      out << "<rect x='" << x0 << "' y='" << y0 << "' width='" << grid << "' height='" << grid
          << "' fill='none' stroke='#999'/>\n";
    }
  out << "</svg>\n";
  finish_out(out, path);
  save_attention_dump(record, missing, path + ".dump");
}

void save_trajectory_dump(const TrajectoryPlotData& data, const std::string& path) {
  const Index k = data.truth.length();
  if (data.observed.values.rows() != k || data.estimate.length() != k)
    throw std::invalid_argument("trajectory plot needs equal-length truth/observed/estimate");
  std::ofstream out = open_out(path);
  out << "trajectory-plot v1\n";
  out << "k " << k << " dt " << format_double(data.truth.dt) << " mode "
      << to_string(data.observed.mode) << "\n";
  for (Index i = 0; i < k; ++i)
    out << format_double(data.truth.positions(i, 0)) << ' '
        << format_double(data.truth.positions(i, 1)) << ' '
        << format_double(data.observed.values(i, 0)) << ' '
        << format_double(data.observed.values(i, 1)) << ' '
        << static_cast<int>(data.observed.missing[static_cast<std::size_t>(i)]) << ' '
        << format_double(data.estimate.positions(i, 0)) << ' '
        << format_double(data.estimate.positions(i, 1)) << "\n";
  finish_out(out, path);
}

TrajectoryPlotData load_trajectory_dump(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> std::string& {
    if (!std::getline(in, line)) line_error(line_no + 1, "unexpected end of file");
    ++line_no;
    return line;
  };

  if (next_line() != "trajectory-plot v1") line_error(line_no, "bad magic");
  std::istringstream header(next_line());
  std::string kw1, kw2, kw3, dt_tok, mode_tok;
  Index k = 0;
  if (!(header >> kw1 >> k >> kw2 >> dt_tok >> kw3 >> mode_tok) || kw1 != "k" || kw2 != "dt" ||
      kw3 != "mode" || k < 1)
    line_error(line_no, "bad header");

  TrajectoryPlotData data;
  data.truth.dt = data.estimate.dt = parse_double(dt_tok, "dt", line_no);
  data.observed.mode = sequence_mode_from_string(mode_tok);
  data.truth.positions.resize(k, 2);
  data.observed.values.resize(k, 2);
  data.observed.missing.resize(static_cast<std::size_t>(k));
  data.estimate.positions.resize(k, 2);
  for (Index i = 0; i < k; ++i) {
    std::istringstream row(next_line());
    std::string tok[7], extra;
    for (auto& t : tok)
      if (!(row >> t)) line_error(line_no, "expected 7 fields");
    if (row >> extra) line_error(line_no, "trailing fields");
    data.truth.positions(i, 0) = parse_double(tok[0], "truth x", line_no);
    data.truth.positions(i, 1) = parse_double(tok[1], "truth y", line_no);
    data.observed.values(i, 0) = parse_double(tok[2], "observed x", line_no);
    data.observed.values(i, 1) = parse_double(tok[3], "observed y", line_no);
    if (tok[4] != "0" && tok[4] != "1") line_error(line_no, "missing flag must be 0 or 1");
    data.observed.missing[static_cast<std::size_t>(i)] = tok[4] == "1" ? 1 : 0;
    data.estimate.positions(i, 0) = parse_double(tok[5], "estimate x", line_no);
    data.estimate.positions(i, 1) = parse_double(tok[6], "estimate y", line_no);
  }
  return data;
}

void plot_trajectories(const Trajectory& truth, const ObservedSequence& observed,
                       const Trajectory& estimate, const std::string& path) {
  TrajectoryPlotData data{truth, observed, estimate};
  const Index k = truth.length();
  if (observed.values.rows() != k || estimate.length() != k)
    throw std::invalid_argument("trajectory plot needs equal-length truth/observed/estimate");

  double xmin = truth.positions.col(0).minCoeff(), xmax = truth.positions.col(0).maxCoeff();
  double ymin = truth.positions.col(1).minCoeff(), ymax = truth.positions.col(1).maxCoeff();
  xmin = std::min(xmin, estimate.positions.col(0).minCoeff());
  xmax = std::max(xmax, estimate.positions.col(0).maxCoeff());
  ymin = std::min(ymin, estimate.positions.col(1).minCoeff());
  ymax = std::max(ymax, estimate.positions.col(1).maxCoeff());
  for (Index i = 0; i < k; ++i) {
    if (observed.missing[static_cast<std::size_t>(i)]) continue;
    xmin = std::min(xmin, observed.values(i, 0));
    xmax = std::max(xmax, observed.values(i, 0));
    ymin = std::min(ymin, observed.values(i, 1));
    ymax = std::max(ymax, observed.values(i, 1));
  }
  if (xmax - xmin < 1e-9) { xmin -= 0.5; xmax += 0.5; }
  if (ymax - ymin < 1e-9) { ymin -= 0.5; ymax += 0.5; }

  const double plot = 480.0, margin = 56.0;
  const double scale = plot / std::max(xmax - xmin, ymax - ymin);
  const double width = margin * 2 + (xmax - xmin) * scale;
  const double height = margin * 2 + (ymax - ymin) * scale;
  auto px = [&](double x) { return margin + (x - xmin) * scale; };
  auto py = [&](double y) { return height - margin - (y - ymin) * scale; };

  std::ofstream out = open_out(path);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
      << "' viewBox='0 0 " << width << ' ' << height << "'>\n";
  out << "<style>text{font-family:sans-serif;font-size:11px;fill:#333}</style>\n";
  out << "<rect x='" << margin << "' y='" << margin << "' width='" << width - 2 * margin
      << "' height='" << height - 2 * margin << "' fill='none' stroke='#999'/>\n";

  // axis labels and extents, meters
  out << "<text x='" << width / 2 << "' y='" << height - 12
      << "' text-anchor='middle'>x [m]</text>\n";
  out << "<text x='14' y='" << height / 2 << "' text-anchor='middle' transform='rotate(-90 14 "
      << height / 2 << ")'>y [m]</text>\n";
  out << "<text x='" << margin << "' y='" << height - margin + 16 << "' text-anchor='middle'>"
      << num(xmin) << "</text>\n";
  out << "<text x='" << width - margin << "' y='" << height - margin + 16
      << "' text-anchor='middle'>" << num(xmax) << "</text>\n";
  out << "<text x='" << margin - 6 << "' y='" << py(ymin) + 4 << "' text-anchor='end'>"
      << num(ymin) << "</text>\n";
  out << "<text x='" << margin - 6 << "' y='" << py(ymax) + 4 << "' text-anchor='end'>"
      << num(ymax) << "</text>\n";

  auto polyline = [&](const DenseMatrix<double>& p, const char* style) {
    out << "<polyline fill='none' " << style << " points='";
    for (Index i = 0; i < p.rows(); ++i)
      out << (i ? " " : "") << px(p(i, 0)) << ',' << py(p(i, 1));
    out << "'/>\n";
  };
  polyline(truth.positions, "stroke='#333' stroke-width='2'");
  polyline(estimate.positions, "stroke='#d62728' stroke-width='2' stroke-dasharray='6,4'");

  for (Index i = 0; i < k; ++i) {
    if (observed.missing[static_cast<std::size_t>(i)]) {
      // cross marker at the ground-truth location of the dropped step
      const double cx = px(truth.positions(i, 0)), cy = py(truth.positions(i, 1));
      out << "<path class='cross' stroke='#ff7f0e' stroke-width='2' d='M" << cx - 5 << ' '
          << cy - 5 << " L" << cx + 5 << ' ' << cy + 5 << " M" << cx - 5 << ' ' << cy + 5
          << " L" << cx + 5 << ' ' << cy - 5 << "'/>\n";
    } else {
      out << "<circle cx='" << px(observed.values(i, 0)) << "' cy='"
          << py(observed.values(i, 1)) << "' r='3' fill='#1f77b4'/>\n";
    }
  }

  // legend
  const double lx = margin + 10;
  out << "<text x='" << lx << "' y='" << margin - 30 << "'>truth &#8212; &#160; estimate - - "
      << "&#160; observed &#9679; &#160; missing &#215;</text>\n";
  out << "</svg>\n";
  finish_out(out, path);
  save_trajectory_dump(data, path + ".dump");
}

}  // namespace missformer
