#include <missformer/eval.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace missformer {

namespace {

void check_lengths(const Trajectory& estimate, const Trajectory& truth) {
  if (estimate.length() != truth.length())
    throw std::invalid_argument("estimate/truth length mismatch: " +
                                std::to_string(estimate.length()) + " vs " +
                                std::to_string(truth.length()));
}

[[noreturn]] void line_error(std::size_t line_no, const std::string& what) {
  throw std::runtime_error("line " + std::to_string(line_no) + ": " + what);
}

}  // namespace

double ade(const Trajectory& estimate, const Trajectory& truth, StepRange range) {
  check_lengths(estimate, truth);
  if (range.begin >= range.end)
    throw std::invalid_argument("empty evaluation range");
  if (range.begin < 0 || range.end > truth.length())
    throw std::invalid_argument("evaluation range exceeds sequence length");
  double sum = 0.0;
  for (Index i = range.begin; i < range.end; ++i) {
    const double dx = estimate.positions(i, 0) - truth.positions(i, 0);
    const double dy = estimate.positions(i, 1) - truth.positions(i, 1);
    sum += std::hypot(dx, dy);
  }
  return sum / static_cast<double>(range.end - range.begin);
}

double fde(const Trajectory& estimate, const Trajectory& truth) {
  check_lengths(estimate, truth);
  const Index last = truth.length() - 1;
  return std::hypot(estimate.positions(last, 0) - truth.positions(last, 0),
                    estimate.positions(last, 1) - truth.positions(last, 1));
}

EvalReport evaluate_estimates(const std::vector<Trajectory>& estimates,
                              const std::vector<Trajectory>& truths,
                              const std::vector<StepRange>& ranges, std::string task) {
  if (estimates.size() != truths.size() || estimates.size() != ranges.size())
    throw std::invalid_argument("estimates, truths and ranges must align");
  if (estimates.empty()) throw std::invalid_argument("nothing to evaluate");

  EvalReport report;
  report.task = std::move(task);
  report.n_samples = static_cast<Index>(estimates.size());
  report.per_sample.reserve(estimates.size());
  double ade_sum = 0.0, fde_sum = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    const double a = ade(estimates[i], truths[i], ranges[i]);
    const double f = fde(estimates[i], truths[i]);
    report.per_sample.emplace_back(a, f);
    ade_sum += a;
    fde_sum += f;
  }
  const double n = static_cast<double>(report.n_samples);
  report.ade = ade_sum / n;
  report.fde = fde_sum / n;
  double var = 0.0;
  for (const auto& [a, f] : report.per_sample) {
    (void)f;
    var += (a - report.ade) * (a - report.ade);
  }
  report.ade_std = std::sqrt(var / n);  // population std
  return report;
}

namespace {

// Shared eval data path: the trainer's epoch-0 observations (frozen
// corruption, tail masking for the prediction task) plus the metric range
// each sample should be scored on.
struct EvalInputs {
  std::vector<ObservedSequence> observations;
  std::vector<StepRange> ranges;
};

EvalInputs eval_inputs(const std::vector<Trajectory>& corpus,
                       const CorruptionConfig& corrupt_config, const EvalConfig& eval_config,
                       SequenceMode input_mode) {
  if (corpus.empty()) throw std::invalid_argument("evaluation corpus is empty");
  TrainConfig tc;
  tc.task = eval_config.task;
  tc.pred_min = eval_config.pred_min;
  tc.pred_max = eval_config.pred_max;
  tc.seed = eval_config.seed;
  tc.frozen_corruption = true;
  EvalInputs inputs;
  std::vector<Index> pred_lengths;
  inputs.observations =
      epoch_observations(corpus, corrupt_config, tc, input_mode, 0, &pred_lengths);
  inputs.ranges.resize(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const Index k = corpus[i].length();
    const Index pred = eval_config.task == TaskKind::prediction ? pred_lengths[i] : 0;
    inputs.ranges[i] = pred > 0 ? StepRange{k - pred, k} : StepRange{0, k};
  }
  return inputs;
}

}  // namespace

EvalReport evaluate(const MissFormerModel& model, const std::vector<Trajectory>& corpus,
                    const CorruptionConfig& corrupt_config, const EvalConfig& eval_config) {
  const EvalInputs inputs =
      eval_inputs(corpus, corrupt_config, eval_config, model.config().input_mode);

  // Group equal lengths so each forward pass is one stacked matrix product.
  std::map<Index, std::vector<std::size_t>> by_length;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    by_length[corpus[i].length()].push_back(i);

  std::vector<Trajectory> estimates(corpus.size());
  ForwardOptions options;
  options.record_attention = false;
  for (const auto& [k, members] : by_length) {
    for (std::size_t start = 0; start < members.size();
         start += static_cast<std::size_t>(eval_config.batch_size)) {
      const std::size_t stop =
          std::min(members.size(), start + static_cast<std::size_t>(eval_config.batch_size));
      std::vector<const ObservedSequence*> batch;
      batch.reserve(stop - start);
      for (std::size_t j = start; j < stop; ++j)
        batch.push_back(&inputs.observations[members[j]]);
      const BatchForwardResult out = encoder_forward_batch(batch, model, options);
      const DenseMatrix<double>& values = out.estimates.value();
      for (std::size_t j = start; j < stop; ++j) {
        const std::size_t sample = members[j];
        Trajectory est;
        est.dt = corpus[sample].dt;
        est.positions = values.middleRows(static_cast<Index>(j - start) * k, k);
        estimates[sample] = std::move(est);
      }
    }
  }
  return evaluate_estimates(estimates, corpus, inputs.ranges,
                            to_string(eval_config.task));
}

EvalReport evaluate_linear_baseline(const std::vector<Trajectory>& corpus,
                                    const CorruptionConfig& corrupt_config,
                                    const EvalConfig& eval_config) {
  const EvalInputs inputs =
      eval_inputs(corpus, corrupt_config, eval_config, SequenceMode::positions);
  std::vector<Trajectory> estimates;
  estimates.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i)
    estimates.push_back(linear_baseline(inputs.observations[i], 0, corpus[i].dt));
  return evaluate_estimates(estimates, corpus, inputs.ranges,
                            std::string(to_string(eval_config.task)) + "-linear");
}

Trajectory linear_baseline(const ObservedSequence& obs, Index horizon, double dt) {
  if (obs.mode != SequenceMode::positions)
    throw std::invalid_argument("linear baseline expects a positions-mode sequence");
  if (horizon < 0) throw std::invalid_argument("horizon must be non-negative");
  const Index k = obs.values.rows();

  // Least-squares fit p(i) = a + b*i over the observed steps.
  double n = 0.0, si = 0.0, sii = 0.0;
  double sx = 0.0, sxi = 0.0, sy = 0.0, syi = 0.0;
  for (Index i = 0; i < k; ++i) {
    if (obs.missing[static_cast<std::size_t>(i)]) continue;
    const double t = static_cast<double>(i);
    n += 1.0;
    si += t;
    sii += t * t;
    sx += obs.values(i, 0);
    sxi += obs.values(i, 0) * t;
    sy += obs.values(i, 1);
    syi += obs.values(i, 1) * t;
  }
  if (n < 2.0)
    throw std::invalid_argument("linear baseline needs at least 2 observed steps, got " +
                                std::to_string(static_cast<long long>(n)));
  const double det = n * sii - si * si;  // > 0 for distinct observed indices
  const double ax = (sii * sx - si * sxi) / det;
  const double bx = (n * sxi - si * sx) / det;
  const double ay = (sii * sy - si * syi) / det;
  const double by = (n * syi - si * sy) / det;

  Trajectory estimate;
  estimate.dt = dt;
  estimate.positions.resize(k + horizon, 2);
  for (Index i = 0; i < k + horizon; ++i) {
    const double t = static_cast<double>(i);
    estimate.positions(i, 0) = ax + bx * t;
    estimate.positions(i, 1) = ay + by * t;
  }
  return estimate;
}

LeaveOneOutResult leave_one_out(const std::vector<LooSplit>& splits,
                                const SplitEvaluator& evaluate_split) {
  static constexpr std::array<const char*, 5> canonical = {"eth", "hotel", "univ", "zara1",
                                                           "zara2"};
  if (splits.size() != canonical.size())
    throw std::invalid_argument("leave-one-out needs exactly 5 splits, got " +
                                std::to_string(splits.size()));
  std::array<const LooSplit*, 5> ordered{};
  for (std::size_t c = 0; c < canonical.size(); ++c) {
    for (const auto& split : splits)
      if (split.name == canonical[c]) {
        if (ordered[c]) throw std::invalid_argument("duplicate split '" + split.name + "'");
        ordered[c] = &split;
      }
    if (!ordered[c])
      throw std::invalid_argument(std::string("missing split '") + canonical[c] + "'");
  }

  LeaveOneOutResult result;
  result.average.task = "average";
  for (std::size_t held = 0; held < ordered.size(); ++held) {
    std::vector<Trajectory> train_set;
    for (std::size_t other = 0; other < ordered.size(); ++other) {
      if (other == held) continue;
      train_set.insert(train_set.end(), ordered[other]->trajectories.begin(),
                       ordered[other]->trajectories.end());
    }
    EvalReport report =
        evaluate_split(ordered[held]->name, train_set, ordered[held]->trajectories);
    result.average.ade += report.ade / 5.0;
    result.average.ade_std += report.ade_std / 5.0;
    result.average.fde += report.fde / 5.0;
    result.average.n_samples += report.n_samples;
    result.per_split.emplace_back(ordered[held]->name, std::move(report));
  }
  return result;
}

void save_eval_records(const std::vector<EvalReport>& reports, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  for (const auto& r : reports) {
    if (r.task.empty() || r.task.find_first_of(" \t\n") != std::string::npos)
      throw std::invalid_argument("eval record task must be a single token, got '" + r.task +
                                  "'");
    out << r.task << ' ' << r.n_samples << ' ' << format_double(r.ade) << ' '
        << format_double(r.ade_std) << ' ' << format_double(r.fde) << '\n';
  }
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

std::vector<EvalReport> load_eval_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::vector<EvalReport> reports;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string task;
    if (!(fields >> task)) continue;  // blank line
    EvalReport r;
    r.task = task;
    long long n = 0;
    std::string tok;
    if (!(fields >> n) || n < 0) line_error(line_no, "bad sample count");
    r.n_samples = static_cast<Index>(n);
    if (!(fields >> tok)) line_error(line_no, "missing ade");
    r.ade = parse_double(tok, "ade", line_no);
    if (!(fields >> tok)) line_error(line_no, "missing ade_std");
    r.ade_std = parse_double(tok, "ade_std", line_no);
    if (!(fields >> tok)) line_error(line_no, "missing fde");
    r.fde = parse_double(tok, "fde", line_no);
    if (fields >> tok) line_error(line_no, "trailing fields");
    reports.push_back(std::move(r));
  }
  return reports;
}

}  // namespace missformer
