// Acceptance gate: nine criteria, each printing one PASS/FAIL line with the
// measured value and its pinned tolerance. Scales default to CI size;
// MISSFORMER_ACCEPT_FULL=1 additionally runs the full-scale reconstruction
// gate (1000 samples / 1000 epochs, ADE <= 0.15 m, <= 45 min single-threaded).
// The final criterion re-executes every pipeline and demands bit-identical
// metrics.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "grad_check.hpp"

#include <missformer/corrupt.hpp>
#include <missformer/eval.hpp>
#include <missformer/ingest.hpp>
#include <missformer/model.hpp>
#include <missformer/tensor.hpp>
#include <missformer/trajectory.hpp>
#include <missformer/trajgen.hpp>
#include <missformer/training.hpp>

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

using namespace missformer;

namespace {

using Metrics = std::vector<std::pair<std::string, double>>;

std::map<int, Metrics> g_metrics;                  // first-execution results
std::map<int, std::function<Metrics()>> g_jobs;    // re-executable pipelines
std::optional<MissFormerModel> g_reference_model;  // trained by criterion 2

bool full_scale() {
  const char* e = std::getenv("MISSFORMER_ACCEPT_FULL");
  return e && *e && *e != '0';
}

void verdict(int criterion, bool pass, const std::string& detail) {
  std::printf("[criterion %d] %s  %s\n", criterion, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Metrics run_and_store(int criterion, std::function<Metrics()> job) {
  g_jobs[criterion] = job;
  g_metrics[criterion] = job();
  return g_metrics[criterion];
}

double metric(const Metrics& m, const std::string& name) {
  for (const auto& [key, value] : m)
    if (key == name) return value;
  throw std::logic_error("metric '" + name + "' not recorded");
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(digits);
  out << v;
  return out.str();
}

// ---- shared pipeline pieces -------------------------------------------------

// Reconstruction protocol used by criteria 2 and 3: object-regime corpus,
// d_model 64, one head, one layer; hyperparameters tuned for the fixed epoch
// budget (constant-rate AdamW needs a hot learning rate to descend from the
// random-init loss within 300 epochs).
struct ReconstructionResult {
  double first_loss = 0.0;
  double final_loss = 0.0;
  double ade = 0.0;
  double train_seconds = 0.0;
};

ReconstructionResult reconstruction_run(Index n_train, Index n_eval, double missing_prob,
                                        bool keep_model) {
  GeneratorConfig gc = object_config(11);
  const auto train_set = generate(gc, n_train);
  GeneratorConfig ge = object_config(999);
  const auto eval_set = generate(ge, n_eval);

  ModelConfig mc;
  mc.d_model = 64;
  mc.n_head = 1;
  mc.n_layer = 1;
  mc.seed = 3;
  mc.coord_scale = 0.1;

  CorruptionConfig cc;
  cc.missing_prob = missing_prob;
  cc.seed = 21;

  TrainConfig tc;
  tc.task = TaskKind::reconstruction;
  tc.learning_rate = 3e-3;
  tc.epochs = 300;
  tc.batch_size = 64;
  tc.seed = 5;

  ReconstructionResult out;
  const auto t0 = std::chrono::steady_clock::now();
  MissFormerModel local(mc);
  MissFormerModel* model = &local;
  if (keep_model) {
    g_reference_model.emplace(mc);
    model = &*g_reference_model;
  }
  const TrainRun run = train(*model, train_set, cc, tc);
  out.train_seconds = seconds_since(t0);
  out.first_loss = run.epoch_losses.front();
  out.final_loss = run.epoch_losses.back();

  EvalConfig ec;
  ec.task = TaskKind::reconstruction;
  ec.seed = 77;
  CorruptionConfig ce = cc;
  ce.seed = 42;
  out.ade = evaluate(*model, eval_set, ce, ec).ade;
  return out;
}

// Full-scale variant: 1000 samples / 1000 epochs total, learning rate stepped
// down across four stages so late epochs refine instead of hovering on the
// optimizer's noise ball.
ReconstructionResult reconstruction_run_full() {
  GeneratorConfig gc = object_config(11);
  const auto train_set = generate(gc, 1000);
  GeneratorConfig ge = object_config(999);
  const auto eval_set = generate(ge, 1000);

  ModelConfig mc;
  mc.d_model = 64;
  mc.n_head = 1;
  mc.n_layer = 1;
  mc.seed = 3;
  mc.coord_scale = 0.1;
  MissFormerModel model(mc);

  CorruptionConfig cc;
  cc.seed = 21;

  ReconstructionResult out;
  const auto t0 = std::chrono::steady_clock::now();
  const std::pair<Index, double> stages[] = {
      {400, 3e-3}, {300, 1e-3}, {200, 3e-4}, {100, 1e-4}};
  bool first = true;
  for (std::size_t s = 0; s < 4; ++s) {
    TrainConfig tc;
    tc.task = TaskKind::reconstruction;
    tc.epochs = stages[s].first;
    tc.learning_rate = stages[s].second;
    tc.batch_size = 64;
    tc.seed = 5 + s;
    const TrainRun run = train(model, train_set, cc, tc);
    if (first) out.first_loss = run.epoch_losses.front();
    first = false;
    out.final_loss = run.epoch_losses.back();
  }
  out.train_seconds = seconds_since(t0);

  EvalConfig ec;
  ec.task = TaskKind::reconstruction;
  ec.seed = 77;
  CorruptionConfig ce = cc;
  ce.seed = 42;
  out.ade = evaluate(model, eval_set, ce, ec).ade;
  return out;
}

// Unit observation noise is what separates the input modes: offsets built from
// noisy positions accumulate error through path integration, while attention
// over noisy positions can average the noise away. Noise-free runs invert the
// ordering (clean offsets are ideal small-range inputs).
double prediction_ade(SequenceMode mode, double missing_prob) {
  GeneratorConfig gc = pedestrian_config(11);
  const auto train_set = generate(gc, 400);
  GeneratorConfig ge = pedestrian_config(999);
  const auto eval_set = generate(ge, 500);

  ModelConfig mc;
  mc.d_model = 32;
  mc.n_head = 1;
  mc.n_layer = 1;
  mc.seed = 3;
  mc.coord_scale = 1.0;
  mc.input_mode = mode;
  MissFormerModel model(mc);

  CorruptionConfig cc;
  cc.noise_std = 1.0;
  cc.missing_prob = missing_prob;
  cc.seed = 21;

  TrainConfig tc;
  tc.task = TaskKind::prediction;
  tc.learning_rate = 1e-3;
  tc.epochs = 300;
  tc.batch_size = 64;
  tc.seed = 5;
  train(model, train_set, cc, tc);

  EvalConfig ec;
  ec.task = TaskKind::prediction;
  ec.seed = 77;
  CorruptionConfig ce = cc;
  ce.seed = 42;
  return evaluate(model, eval_set, ce, ec).ade;
}

std::vector<Trajectory> constant_velocity_corpus(Index n, std::uint64_t seed) {
  GeneratorConfig gen = object_config(seed);
  gen.heading_change_dist = Dist::uniform(0.0, 0.0);
  gen.accel_dist = Dist::uniform(0.0, 0.0);
  return generate(gen, n);
}

}  // namespace

// ---- criterion 1: analytic gradients match central finite differences ------

TEST_CASE("criterion 1: gradient integrity") {
  const Metrics m = run_and_store(1, [] {
    ModelConfig config;
    config.d_model = 8;
    config.n_head = 1;
    config.n_layer = 1;
    config.seed = 20;
    MissFormerModel model(config);

    Rng rng(21);
    ObservedSequence obs;
    obs.values = gradcheck::random_matrix(rng, 5, 2);
    obs.missing.assign(5, 0);
    obs.missing[2] = 1;
    obs.values.row(2).setZero();
    const DenseMatrix<double> target = gradcheck::random_matrix(rng, 5, 2);

    std::vector<Tensor> params;
    std::size_t total_coords = 0;
    for (auto& p : model.parameters()) {
      params.push_back(p.tensor);
      total_coords += static_cast<std::size_t>(p.tensor.value().size());
    }
    auto make_loss = [&] {
      Tensor est = encoder_forward(obs, model, {.record_attention = false}).estimates;
      Tensor diff = sub(est, Tensor(target));
      return mean_all(mul(diff, diff));
    };
    const auto result = gradcheck::check_gradients(params, make_loss, 1e-5, 1e-6);
    return Metrics{{"max_rel_error", result.max_rel_error},
                   {"coords", static_cast<double>(result.coords_checked)},
                   {"total_coords", static_cast<double>(total_coords)}};
  });

  const double err = metric(m, "max_rel_error");
  const bool pass = err < 1e-4;
  verdict(1, pass,
          "max relative gradient error " + fixed(err, 8) + " < 1e-4 over " +
              std::to_string(static_cast<long>(metric(m, "coords"))) + " parameters");
  CHECK(err < 1e-4);
  // full coverage: every coordinate of every parameter tensor was checked
  CHECK(metric(m, "coords") == metric(m, "total_coords"));
}

// ---- criterion 2: clean reconstruction reaches the pinned ADE ---------------

TEST_CASE("criterion 2: reconstruction accuracy") {
  const bool full = full_scale();
  const Metrics m = run_and_store(2, [full] {
    const ReconstructionResult ci = reconstruction_run(500, 500, 0.0, /*keep_model=*/true);
    Metrics out{{"ci_ade", ci.ade},
                {"ci_final_loss", ci.final_loss},
                {"ci_seconds", ci.train_seconds}};
    if (full) {
      const ReconstructionResult fr = reconstruction_run_full();
      out.emplace_back("full_ade", fr.ade);
      out.emplace_back("full_final_loss", fr.final_loss);
      out.emplace_back("full_seconds", fr.train_seconds);
    }
    return out;
  });

  const double ci_ade = metric(m, "ci_ade");
  bool pass = ci_ade <= 0.5;
  std::string detail = "held-out ADE " + fixed(ci_ade) + " <= 0.5 m (500 samples / 300 epochs, " +
                       fixed(metric(m, "ci_seconds"), 1) + " s)";
  if (full) {
    const double full_ade = metric(m, "full_ade");
    const double minutes = metric(m, "full_seconds") / 60.0;
    pass = pass && full_ade <= 0.15 && minutes <= 45.0;
    detail += "; full ADE " + fixed(full_ade) + " <= 0.15 m in " + fixed(minutes, 1) +
              " min <= 45 (1000 samples / 1000 epochs)";
    CHECK(full_ade <= 0.15);
    CHECK(minutes <= 45.0);
  }
  verdict(2, pass, detail);
  CHECK(ci_ade <= 0.5);
}

// ---- criterion 3: missing tokens stay close to the matched clean run --------

// A ratio gate between two runs is only meaningful when both actually
// converge; pedestrian-scale coordinates get there inside the epoch budget
// (object-scale pairs stall on the optimizer noise ball and the ratio then
// measures luck, not missing-token handling).
TEST_CASE("criterion 3: missing-token handling") {
  const Metrics m = run_and_store(3, [] {
    auto run = [](double missing_prob) {
      GeneratorConfig gc = pedestrian_config(11);
      const auto train_set = generate(gc, 500);
      GeneratorConfig ge = pedestrian_config(999);
      const auto eval_set = generate(ge, 500);

      ModelConfig mc;
      mc.d_model = 32;
      mc.n_head = 1;
      mc.n_layer = 1;
      mc.seed = 3;
      mc.coord_scale = 1.0;
      MissFormerModel model(mc);

      CorruptionConfig cc;
      cc.missing_prob = missing_prob;
      cc.seed = 21;

      TrainConfig tc;
      tc.task = TaskKind::reconstruction;
      tc.learning_rate = 1e-3;
      tc.epochs = 300;
      tc.batch_size = 64;
      tc.seed = 5;
      const TrainRun tr = train(model, train_set, cc, tc);

      EvalConfig ec;
      ec.task = TaskKind::reconstruction;
      ec.seed = 77;
      CorruptionConfig ce = cc;
      ce.seed = 42;
      ReconstructionResult out;
      out.first_loss = tr.epoch_losses.front();
      out.final_loss = tr.epoch_losses.back();
      out.ade = evaluate(model, eval_set, ce, ec).ade;
      return out;
    };
    const ReconstructionResult clean = run(0.0);
    const ReconstructionResult miss = run(0.1);
    return Metrics{{"clean_ade", clean.ade},
                   {"ade", miss.ade},
                   {"first_loss", miss.first_loss},
                   {"final_loss", miss.final_loss}};
  });

  const double ade = metric(m, "ade");
  const double clean_ade = metric(m, "clean_ade");
  const bool learned = metric(m, "final_loss") < metric(m, "first_loss");
  const bool pass = ade <= 4.0 * clean_ade && learned;
  verdict(3, pass,
          "missing 0.1 ADE " + fixed(ade) + " <= 4 x clean ADE " + fixed(clean_ade) + " = " +
              fixed(4.0 * clean_ade) + "; loss " + fixed(metric(m, "first_loss"), 1) + " -> " +
              fixed(metric(m, "final_loss"), 3));
  CHECK(ade <= 4.0 * clean_ade);
  CHECK(learned);
}

// ---- criterion 4: filtering beats echoing the noisy observations ------------

TEST_CASE("criterion 4: filtering de-noises") {
  const Metrics m = run_and_store(4, [] {
    // pedestrian-scale coordinates keep the run about de-noising rather than
    // range calibration: unit noise is large against walking-speed motion
    GeneratorConfig gc = pedestrian_config(11);
    const auto train_set = generate(gc, 500);
    GeneratorConfig ge = pedestrian_config(999);
    const auto eval_set = generate(ge, 400);

    ModelConfig mc;
    mc.d_model = 32;
    mc.n_head = 1;
    mc.n_layer = 1;
    mc.seed = 3;
    mc.coord_scale = 1.0;
    MissFormerModel model(mc);

    CorruptionConfig cc;
    cc.noise_std = 1.0;
    cc.seed = 21;

    TrainConfig tc;
    tc.task = TaskKind::filtering;
    tc.learning_rate = 1e-3;
    tc.epochs = 300;
    tc.batch_size = 64;
    tc.seed = 5;
    train(model, train_set, cc, tc);

    EvalConfig ec;
    ec.task = TaskKind::filtering;
    ec.seed = 77;
    CorruptionConfig ce = cc;
    ce.seed = 42;
    const double model_ade = evaluate(model, eval_set, ce, ec).ade;

    // echo baseline: ADE of the noisy observations themselves
    TrainConfig et;
    et.task = ec.task;
    et.seed = ec.seed;
    et.frozen_corruption = true;
    const auto obs = epoch_observations(eval_set, ce, et, SequenceMode::positions, 0);
    double total = 0.0;
    std::size_t steps = 0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
      for (Index t = 0; t < obs[i].length(); ++t) {
        const double dx = obs[i].values(t, 0) - eval_set[i].positions(t, 0);
        const double dy = obs[i].values(t, 1) - eval_set[i].positions(t, 1);
        total += std::sqrt(dx * dx + dy * dy);
        ++steps;
      }
    }
    const double echo_ade = total / static_cast<double>(steps);
    return Metrics{{"model_ade", model_ade}, {"echo_ade", echo_ade}};
  });

  const double model_ade = metric(m, "model_ade");
  const double echo_ade = metric(m, "echo_ade");
  const bool pass = model_ade < echo_ade;
  verdict(4, pass,
          "unit-noise filtering ADE " + fixed(model_ade) + " < echo ADE " + fixed(echo_ade) +
              " (theory ~1.2533)");
  CHECK(model_ade < echo_ade);
  CHECK(echo_ade == doctest::Approx(1.2533).epsilon(0.05));  // sanity on the eval noise
}

// ---- criterion 5: prediction ordering across input modes and corruption -----

TEST_CASE("criterion 5: prediction ordering") {
  const Metrics m = run_and_store(5, [] {
    return Metrics{{"positions_clean", prediction_ade(SequenceMode::positions, 0.0)},
                   {"offsets_clean", prediction_ade(SequenceMode::offsets, 0.0)},
                   {"positions_missing", prediction_ade(SequenceMode::positions, 0.1)}};
  });

  const double pos = metric(m, "positions_clean");
  const double off = metric(m, "offsets_clean");
  const double mis = metric(m, "positions_missing");
  const bool pass = pos < off && pos < mis;
  verdict(5, pass,
          "prediction ADE: positions " + fixed(pos) + " < offsets " + fixed(off) +
              "; fully-observed " + fixed(pos) + " < missing-corrupted " + fixed(mis));
  CHECK(pos < off);
  CHECK(pos < mis);
}

// ---- criterion 6: linear baseline against the reference leave-one-out table --

TEST_CASE("criterion 6: linear baseline on real data") {
  namespace fs = std::filesystem;
  const char* env = std::getenv("MISSFORMER_DATA_DIR");
  const fs::path data_dir = env && *env ? fs::path(env) : fs::path("data");
  const std::vector<std::string> names = {"eth", "hotel", "univ", "zara1", "zara2"};
  bool have_all = true;
  for (const auto& name : names)
    if (!fs::exists(data_dir / (name + ".txt"))) have_all = false;

  if (!have_all) {
    // datasets absent: fall back to the exact-fit invariant of the baseline
    // (noise-free, fully observed constant-velocity data fits a line exactly)
    const Metrics m = run_and_store(6, [] {
      const auto corpus = constant_velocity_corpus(200, 13);
      CorruptionConfig cc;
      cc.seed = 21;
      EvalConfig ec;
      ec.task = TaskKind::prediction;
      ec.pred_min = 12;
      ec.pred_max = 12;
      ec.seed = 77;
      return Metrics{{"ade", evaluate_linear_baseline(corpus, cc, ec).ade}};
    });
    const double ade = metric(m, "ade");
    const bool pass = ade < 1e-9;
    verdict(6, pass,
            "datasets absent; constant-velocity exact-fit ADE " + fixed(ade, 12) + " < 1e-9");
    CHECK(ade < 1e-9);
    return;
  }

  const Metrics m = run_and_store(6, [data_dir, names] {
    std::vector<LooSplit> splits;
    for (const auto& name : names) {
      ParseOptions opts;
      opts.lenient = true;
      const auto records = parse_file((data_dir / (name + ".txt")).string(), opts);
      WindowConfig wc;  // obs 8, pred 12, stride 1, dt 0.4
      splits.push_back({name, windows(records, wc, name).windows});
    }
    const auto result = leave_one_out(
        splits, [](const std::string& held_out, const std::vector<Trajectory>&,
                   const std::vector<Trajectory>& eval_set) {
          CorruptionConfig cc;
          cc.seed = 42;
          EvalConfig ec;
          ec.task = TaskKind::prediction;
          ec.pred_min = 12;
          ec.pred_max = 12;
          ec.seed = 77;
          EvalReport rep = evaluate_linear_baseline(eval_set, cc, ec);
          rep.task = held_out;
          return rep;
        });
    return Metrics{{"ade", result.average.ade}, {"fde", result.average.fde}};
  });

  const double ade = metric(m, "ade");
  const double fde = metric(m, "fde");
  const bool pass = std::abs(ade - 0.79) <= 0.15 && std::abs(fde - 1.59) <= 0.30;
  verdict(6, pass,
          "leave-one-out linear baseline ADE " + fixed(ade) + " (0.79 +- 0.15), FDE " +
              fixed(fde) + " (1.59 +- 0.30)");
  CHECK(std::abs(ade - 0.79) <= 0.15);
  CHECK(std::abs(fde - 1.59) <= 0.30);
}

// ---- criterion 7: transformer beats the linear baseline on prediction -------

TEST_CASE("criterion 7: beats linear baseline by 10 percent") {
  const Metrics m = run_and_store(7, [] {
    GeneratorConfig gc = pedestrian_config(11);
    gc.min_length = 20;
    gc.max_length = 20;
    const auto train_set = generate(gc, 4000);
    GeneratorConfig ge = gc;
    ge.seed = 999;
    const auto eval_set = generate(ge, 1000);

    // Two layers matter here: the first can form offsets, the second
    // extrapolates them. One-layer models of any width plateau at a ~0.93
    // ratio against the baseline; two layers reach the high-0.7s, close to a
    // constant-velocity oracle reading the last clean offset.
    ModelConfig mc;
    mc.d_model = 32;
    mc.n_head = 2;
    mc.n_layer = 2;
    mc.seed = 3;
    mc.coord_scale = 1.0;
    MissFormerModel model(mc);

    CorruptionConfig cc;
    cc.seed = 21;

    TrainConfig tc;
    tc.task = TaskKind::prediction;
    tc.pred_min = 12;
    tc.pred_max = 12;
    tc.batch_size = 64;
    // constant-rate AdamW wanders near its floor; step the rate down to settle
    const std::pair<Index, double> stages[] = {{30, 1e-3}, {15, 3e-4}, {7, 1e-4}};
    for (std::size_t s = 0; s < 3; ++s) {
      tc.epochs = stages[s].first;
      tc.learning_rate = stages[s].second;
      tc.seed = 5 + s;
      train(model, train_set, cc, tc);
    }

    EvalConfig ec;
    ec.task = TaskKind::prediction;
    ec.pred_min = 12;
    ec.pred_max = 12;
    ec.seed = 77;
    CorruptionConfig ce = cc;
    ce.seed = 42;
    const double model_ade = evaluate(model, eval_set, ce, ec).ade;
    const double base_ade = evaluate_linear_baseline(eval_set, ce, ec).ade;
    return Metrics{{"model_ade", model_ade}, {"base_ade", base_ade}};
  });

  const double model_ade = metric(m, "model_ade");
  const double base_ade = metric(m, "base_ade");
  const bool pass = model_ade <= 0.9 * base_ade;
  verdict(7, pass,
          "observe-8/predict-12 ADE " + fixed(model_ade) + " <= 0.9 x linear " + fixed(base_ade) +
              " = " + fixed(0.9 * base_ade) + " (4000 trajectories)");
  CHECK(model_ade <= 0.9 * base_ade);
}

// ---- criterion 8: masked inputs cannot leak; attention rows normalized ------

TEST_CASE("criterion 8: missing-token invariance") {
  REQUIRE(g_reference_model.has_value());
  const Metrics m = run_and_store(8, [] {
    const MissFormerModel& model = *g_reference_model;
    GeneratorConfig gc = object_config(999);
    const auto corpus = generate(gc, 4);

    double max_out_diff = 0.0;
    double max_row_dev = 0.0;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      CorruptionConfig cc;
      cc.missing_prob = 0.3;
      cc.seed = 100 + i;
      Rng rng_a(Rng::derive(cc.seed, i));
      const ObservedSequence obs_a = corrupt(corpus[i], cc, rng_a);

      // shift the truth only where the corruption dropped the observation
      Trajectory altered = corpus[i];
      for (Index t = 0; t < obs_a.length(); ++t)
        if (obs_a.missing[static_cast<std::size_t>(t)]) {
          altered.positions(t, 0) += 1000.0;
          altered.positions(t, 1) -= 500.0;
        }
      Rng rng_b(Rng::derive(cc.seed, i));
      const ObservedSequence obs_b = corrupt(altered, cc, rng_b);
      REQUIRE(obs_b.missing == obs_a.missing);

      const ForwardResult res_a = encoder_forward(obs_a, model);
      const ForwardResult res_b = encoder_forward(obs_b, model);
      for (Index r = 0; r < res_a.estimates.value().rows(); ++r)
        for (Index c = 0; c < 2; ++c) {
          const double a = res_a.estimates.value()(r, c);
          const double b = res_b.estimates.value()(r, c);
          if (std::bit_cast<std::uint64_t>(a) != std::bit_cast<std::uint64_t>(b))
            max_out_diff = std::max(max_out_diff, std::abs(a - b) + 1e-300);
        }
      for (const auto& layer : res_a.attention.weights)
        for (const auto& head : layer)
          for (Index r = 0; r < head.rows(); ++r)
            max_row_dev = std::max(max_row_dev, std::abs(head.row(r).sum() - 1.0));
    }
    return Metrics{{"max_out_diff", max_out_diff}, {"max_row_dev", max_row_dev}};
  });

  const bool identical = metric(m, "max_out_diff") == 0.0;
  const double row_dev = metric(m, "max_row_dev");
  const bool pass = identical && row_dev < 1e-9;
  verdict(8, pass,
          std::string("outputs bit-identical under masked-truth changes: ") +
              (identical ? "yes" : "NO") + "; max attention row-sum deviation " +
              fixed(row_dev, 12) + " < 1e-9");
  CHECK(identical);
  CHECK(row_dev < 1e-9);
}

// ---- criterion 9: every run above reproduces its metrics bit-exactly --------

TEST_CASE("criterion 9: determinism") {
  REQUIRE(!g_jobs.empty());
  bool all_exact = true;
  std::string first_mismatch;
  for (const auto& [criterion, job] : g_jobs) {
    const Metrics again = job();
    const Metrics& before = g_metrics[criterion];
    REQUIRE(again.size() == before.size());
    for (std::size_t i = 0; i < again.size(); ++i) {
      if (before[i].first == "ci_seconds" || before[i].first == "full_seconds") continue;
      if (std::bit_cast<std::uint64_t>(again[i].second) !=
          std::bit_cast<std::uint64_t>(before[i].second)) {
        all_exact = false;
        if (first_mismatch.empty())
          first_mismatch = "criterion " + std::to_string(criterion) + " metric '" +
                           before[i].first + "': " + fixed(before[i].second, 12) + " vs " +
                           fixed(again[i].second, 12);
      }
    }
  }
  verdict(9, all_exact,
          all_exact ? "all " + std::to_string(g_jobs.size()) +
                          " pipelines re-ran bit-exactly with their original seeds"
                    : "re-run diverged: " + first_mismatch);
  CHECK(all_exact);
  CHECK(first_mismatch.empty());
}
