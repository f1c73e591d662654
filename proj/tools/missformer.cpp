// Command-line front end for the full pipeline: synthetic data generation,
// corruption, training, evaluation, prediction, figure emission and report
// assembly. Every artifact gets a `<path>.meta` sidecar with the resolved
// configuration; MISSFORMER_OUT_DIR prefixes relative output paths.

#include <CLI11.hpp>

#include <missformer/checkpoint.hpp>
#include <missformer/corrupt.hpp>
#include <missformer/eval.hpp>
#include <missformer/ingest.hpp>
#include <missformer/model.hpp>
#include <missformer/plot.hpp>
#include <missformer/trajectory.hpp>
#include <missformer/trajgen.hpp>
#include <missformer/training.hpp>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace {

using namespace missformer;

using Meta = std::vector<std::pair<std::string, std::string>>;

std::string out_path(const std::string& path) {
  const char* dir = std::getenv("MISSFORMER_OUT_DIR");
  if (!dir || !*dir || path.empty() || path.front() == '/') return path;
  std::string prefixed(dir);
  if (prefixed.back() != '/') prefixed += '/';
  return prefixed + path;
}

void write_meta(const std::string& artifact, const std::string& command, const Meta& meta) {
  std::ofstream out(artifact + ".meta");
  if (!out) throw std::runtime_error("cannot open '" + artifact + ".meta' for writing");
  out << "command=" << command << "\n";
  for (const auto& [key, value] : meta) out << key << '=' << value << "\n";
}

std::string fmt(double v) { return format_double(v); }

// ---- per-subcommand config files ----
//
// A config file holds `key=value` lines naming the subcommand's long options
// (without dashes). Values fill in options the command line left unset, so
// explicit flags always win. Applied after parsing because the library only
// honours its own config mechanism on the top-level app.

std::string trim(const std::string& text) {
  const auto begin = text.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  return text.substr(begin, text.find_last_not_of(" \t\r") - begin + 1);
}

void add_config_option(CLI::App* cmd) {
  cmd->add_option("--config", "key=value file supplying defaults for the other flags");
}

void apply_config(CLI::App* cmd) {
  const CLI::Option* config_opt = cmd->get_option("--config");
  if (config_opt->count() == 0) return;
  const auto path = config_opt->as<std::string>();
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(text.substr(0, eq));
    CLI::Option* opt = cmd->get_option_no_throw("--" + key);
    if (opt == nullptr || opt == config_opt)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": unknown option '" +
                               key + "'");
    if (opt->count() > 0) continue;  // command line (or an earlier line) wins
    opt->add_result(trim(text.substr(eq + 1)));
    opt->run_callback();
  }
}

// ---- generation options shared by every corpus-producing command ----

struct GenOptions {
  std::string regime = "object";
  Index n = 0;
  std::uint64_t seed = 0;
  Index min_len = 0;  // 0 keeps the regime default
  Index max_len = 0;
  bool spatial_offset = false;
  double offset_range = 10.0;
};

void add_gen_options(CLI::App* cmd, GenOptions& gen, Index default_n,
                     bool seed_alias = false) {
  gen.n = default_n;
  cmd->add_option("--regime", gen.regime, "trajectory regime: object or pedestrian")
      ->check(CLI::IsMember({"object", "pedestrian"}));
  cmd->add_option("--n,--samples", gen.n, "number of trajectories");
  cmd->add_option(seed_alias ? "--gen-seed,--seed" : "--gen-seed", gen.seed,
                  "generator seed");
  cmd->add_option("--min-len", gen.min_len, "minimum trajectory length (0 = regime default)");
  cmd->add_option("--max-len", gen.max_len, "maximum trajectory length (0 = regime default)");
  cmd->add_flag("--spatial-offset", gen.spatial_offset, "uniform start-position offsets");
  cmd->add_option("--offset-range", gen.offset_range, "start offset range, meters");
}

std::vector<Trajectory> run_generator(const GenOptions& gen) {
  GeneratorConfig config =
      gen.regime == "pedestrian" ? pedestrian_config(gen.seed) : object_config(gen.seed);
  if (gen.min_len > 0) config.min_length = gen.min_len;
  if (gen.max_len > 0) config.max_length = gen.max_len;
  config.spatial_offset = gen.spatial_offset;
  config.spatial_offset_range = gen.offset_range;
  return generate(config, gen.n);
}

void describe(const GenOptions& gen, Meta& meta) {
  meta.emplace_back("regime", gen.regime);
  meta.emplace_back("samples", std::to_string(gen.n));
  meta.emplace_back("gen-seed", std::to_string(gen.seed));
  if (gen.min_len > 0) meta.emplace_back("min-len", std::to_string(gen.min_len));
  if (gen.max_len > 0) meta.emplace_back("max-len", std::to_string(gen.max_len));
  meta.emplace_back("spatial-offset", gen.spatial_offset ? "1" : "0");
}

// ---- corruption options shared by corrupt/train/eval/plot commands ----

struct CorruptOptions {
  double noise = 0.0;
  double missing = 0.0;
  bool unprotect_first = false;
  std::uint64_t seed = 0;
};

void add_corrupt_options(CLI::App* cmd, CorruptOptions& opt) {
  cmd->add_option("--noise", opt.noise, "observation noise sigma, meters");
  cmd->add_option("--missing", opt.missing, "per-step missing probability");
  cmd->add_flag("--unprotect-first", opt.unprotect_first, "allow dropping step 0");
  cmd->add_option("--seed", opt.seed, "corruption / run seed");
}

CorruptionConfig corruption_config(const CorruptOptions& opt) {
  CorruptionConfig cc;
  cc.noise_std = opt.noise;
  cc.missing_prob = opt.missing;
  cc.protect_first = !opt.unprotect_first;
  cc.seed = opt.seed;
  return cc;
}

void describe(const CorruptOptions& opt, Meta& meta) {
  meta.emplace_back("noise", fmt(opt.noise));
  meta.emplace_back("missing", fmt(opt.missing));
  meta.emplace_back("protect-first", opt.unprotect_first ? "0" : "1");
  meta.emplace_back("seed", std::to_string(opt.seed));
}

// ---- model options ----

struct ModelOptions {
  Index d_model = 64;
  Index heads = 1;
  Index layers = 1;
  Index d_ff = 0;
  Index k_max = 20;
  std::string input_mode = "positions";
  std::string pe = "literal";
  double coord_scale = 1.0;
  std::uint64_t model_seed = 0;
};

void add_model_options(CLI::App* cmd, ModelOptions& opt) {
  cmd->add_option("--d-model", opt.d_model, "embedding width");
  cmd->add_option("--heads", opt.heads, "attention heads");
  cmd->add_option("--layers", opt.layers, "encoder layers");
  cmd->add_option("--d-ff", opt.d_ff, "feed-forward width (0 = 4*d_model)");
  cmd->add_option("--k-max", opt.k_max, "maximum sequence length");
  cmd->add_option("--input-mode", opt.input_mode, "positions or offsets")
      ->check(CLI::IsMember({"positions", "offsets"}));
  cmd->add_option("--pe", opt.pe, "positional encoding variant: literal or paired")
      ->check(CLI::IsMember({"literal", "paired"}));
  cmd->add_option("--coord-scale", opt.coord_scale, "input/output coordinate scale");
  cmd->add_option("--model-seed", opt.model_seed, "parameter init seed");
}

ModelConfig model_config(const ModelOptions& opt) {
  ModelConfig mc;
  mc.d_model = opt.d_model;
  mc.n_head = opt.heads;
  mc.n_layer = opt.layers;
  mc.d_ff = opt.d_ff;
  mc.k_max = opt.k_max;
  mc.input_mode = sequence_mode_from_string(opt.input_mode);
  mc.pe_variant = pe_variant_from_string(opt.pe);
  mc.coord_scale = opt.coord_scale;
  mc.seed = opt.model_seed;
  return mc;
}

void describe(const ModelConfig& mc, Meta& meta) {
  meta.emplace_back("d-model", std::to_string(mc.d_model));
  meta.emplace_back("heads", std::to_string(mc.n_head));
  meta.emplace_back("layers", std::to_string(mc.n_layer));
  meta.emplace_back("d-ff", std::to_string(mc.ff_width()));
  meta.emplace_back("k-max", std::to_string(mc.k_max));
  meta.emplace_back("input-mode", to_string(mc.input_mode));
  meta.emplace_back("pe", to_string(mc.pe_variant));
  meta.emplace_back("coord-scale", fmt(mc.coord_scale));
  meta.emplace_back("model-seed", std::to_string(mc.seed));
}

void check_fits(const std::vector<Trajectory>& corpus, Index k_max, Index horizon = 0) {
  for (const Trajectory& t : corpus)
    if (t.length() + horizon > k_max)
      throw std::runtime_error("trajectory of length " + std::to_string(t.length()) +
                               (horizon > 0 ? " plus horizon " + std::to_string(horizon) : "") +
                               " exceeds the model's k-max " + std::to_string(k_max));
}

// Builds the observed sequences exactly the way training/evaluation do
// (frozen corruption, optional fixed tail mask).
std::vector<ObservedSequence> corpus_observations(const std::vector<Trajectory>& corpus,
                                                  const CorruptOptions& copt,
                                                  SequenceMode input_mode, Index tail) {
  TrainConfig tc;
  tc.seed = copt.seed;
  tc.frozen_corruption = true;
  if (tail > 0) {
    tc.task = TaskKind::prediction;
    tc.pred_min = tc.pred_max = tail;
  }
  return epoch_observations(corpus, corruption_config(copt), tc, input_mode, 0);
}

// ---- sub-command runners ----

struct GenerateCmd {
  GenOptions gen;
  std::string out;
};

void run_generate(const GenerateCmd& cmd) {
  const auto corpus = run_generator(cmd.gen);
  const std::string path = out_path(cmd.out);
  save_corpus(corpus, path);
  Meta meta;
  describe(cmd.gen, meta);
  write_meta(path, "generate", meta);
  std::cout << "wrote " << corpus.size() << " trajectories to " << path << "\n";
}

struct CorruptCmd {
  std::string in, out;
  CorruptOptions corrupt;
  std::string mode = "positions";
  Index tail = 0;
};

void run_corrupt(const CorruptCmd& cmd) {
  const auto corpus = load_corpus(cmd.in);
  const auto observations = corpus_observations(corpus, cmd.corrupt,
                                                sequence_mode_from_string(cmd.mode), cmd.tail);
  const std::string path = out_path(cmd.out);
  save_observed(observations, path);
  Meta meta;
  meta.emplace_back("in", cmd.in);
  describe(cmd.corrupt, meta);
  meta.emplace_back("mode", cmd.mode);
  meta.emplace_back("tail", std::to_string(cmd.tail));
  write_meta(path, "corrupt", meta);
  std::cout << "wrote " << observations.size() << " observed sequences to " << path << "\n";
}

struct TrainCmd {
  std::string in;  // empty -> generate
  GenOptions gen;
  ModelOptions model;
  std::string init_ckpt;
  CorruptOptions corrupt;
  std::string task = "reconstruction";
  Index epochs = 1;
  Index batch = 64;
  double lr = 0.001;
  double weight_decay = 1e-4;
  bool frozen_corruption = false;
  long long curriculum_epoch = -1;
  Index pred_min = 6;
  Index pred_max = 12;
  std::string ckpt = "model.ckpt";
  std::string log = "train.log";
};

void run_train(const TrainCmd& cmd) {
  const auto corpus = cmd.in.empty() ? run_generator(cmd.gen) : load_corpus(cmd.in);

  MissFormerModel model = cmd.init_ckpt.empty() ? MissFormerModel(model_config(cmd.model))
                                                : load_checkpoint(cmd.init_ckpt);
  check_fits(corpus, model.config().k_max);

  TrainConfig tc;
  tc.task = task_from_string(cmd.task);
  tc.epochs = cmd.epochs;
  tc.batch_size = cmd.batch;
  tc.learning_rate = cmd.lr;
  tc.weight_decay = cmd.weight_decay;
  tc.seed = cmd.corrupt.seed;
  tc.frozen_corruption = cmd.frozen_corruption;
  if (cmd.curriculum_epoch >= 0) tc.curriculum_switch_epoch = cmd.curriculum_epoch;
  tc.pred_min = cmd.pred_min;
  tc.pred_max = cmd.pred_max;

  const TrainRun run = train(model, corpus, corruption_config(cmd.corrupt), tc);

  Meta meta;
  if (cmd.in.empty())
    describe(cmd.gen, meta);
  else
    meta.emplace_back("in", cmd.in);
  if (!cmd.init_ckpt.empty()) meta.emplace_back("init-ckpt", cmd.init_ckpt);
  describe(model.config(), meta);
  describe(cmd.corrupt, meta);
  meta.emplace_back("task", cmd.task);
  meta.emplace_back("epochs", std::to_string(cmd.epochs));
  meta.emplace_back("batch", std::to_string(cmd.batch));
  meta.emplace_back("lr", fmt(cmd.lr));
  meta.emplace_back("weight-decay", fmt(cmd.weight_decay));
  meta.emplace_back("frozen-corruption", cmd.frozen_corruption ? "1" : "0");
  if (cmd.curriculum_epoch >= 0)
    meta.emplace_back("curriculum-epoch", std::to_string(cmd.curriculum_epoch));
  meta.emplace_back("pred-min", std::to_string(cmd.pred_min));
  meta.emplace_back("pred-max", std::to_string(cmd.pred_max));

  const std::string ckpt = out_path(cmd.ckpt);
  save_checkpoint(model, ckpt);
  write_meta(ckpt, "train", meta);
  if (!cmd.log.empty()) {
    const std::string log = out_path(cmd.log);
    save_train_log(run, log);
    write_meta(log, "train", meta);
  }
  std::cout << "final loss " << fmt(run.epoch_losses.back()) << " after " << cmd.epochs
            << " epochs; checkpoint " << ckpt << "\n";
}

struct EvalCmd {
  std::string ckpt;
  bool baseline = false;
  std::string in;  // empty -> generate
  GenOptions gen;
  CorruptOptions corrupt;
  std::string task = "reconstruction";
  Index pred_min = 6;
  Index pred_max = 12;
  std::string out;
};

void run_eval(const EvalCmd& cmd) {
  const auto corpus = cmd.in.empty() ? run_generator(cmd.gen) : load_corpus(cmd.in);

  EvalConfig ec;
  ec.task = task_from_string(cmd.task);
  ec.pred_min = cmd.pred_min;
  ec.pred_max = cmd.pred_max;
  ec.seed = cmd.corrupt.seed;

  EvalReport report;
  if (cmd.baseline) {
    report = evaluate_linear_baseline(corpus, corruption_config(cmd.corrupt), ec);
  } else {
    const MissFormerModel model = load_checkpoint(cmd.ckpt);
    check_fits(corpus, model.config().k_max);
    report = evaluate(model, corpus, corruption_config(cmd.corrupt), ec);
  }

  std::cout << report.task << " n=" << report.n_samples << " ade=" << fmt(report.ade)
            << " ade_std=" << fmt(report.ade_std) << " fde=" << fmt(report.fde) << "\n";
  if (!cmd.out.empty()) {
    const std::string path = out_path(cmd.out);
    save_eval_records({report}, path);
    Meta meta;
    if (cmd.baseline)
      meta.emplace_back("baseline", "linear");
    else
      meta.emplace_back("ckpt", cmd.ckpt);
    if (cmd.in.empty())
      describe(cmd.gen, meta);
    else
      meta.emplace_back("in", cmd.in);
    describe(cmd.corrupt, meta);
    meta.emplace_back("task", cmd.task);
    meta.emplace_back("pred-min", std::to_string(cmd.pred_min));
    meta.emplace_back("pred-max", std::to_string(cmd.pred_max));
    write_meta(path, "eval", meta);
  }
}

struct PredictCmd {
  std::string ckpt, in, out;
  Index horizon = 0;
  double dt = 1.0;
};

void run_predict(const PredictCmd& cmd) {
  const MissFormerModel model = load_checkpoint(cmd.ckpt);
  const auto observations = load_observed(cmd.in);
  std::vector<Trajectory> estimates;
  estimates.reserve(observations.size());
  for (const ObservedSequence& obs : observations) {
    if (obs.length() + cmd.horizon > model.config().k_max)
      throw std::runtime_error("sequence length " + std::to_string(obs.length()) +
                               " plus horizon exceeds the model's k-max");
    estimates.push_back(predict_full(obs, model, cmd.horizon, cmd.dt));
  }
  const std::string path = out_path(cmd.out);
  save_corpus(estimates, path);
  Meta meta;
  meta.emplace_back("ckpt", cmd.ckpt);
  meta.emplace_back("in", cmd.in);
  meta.emplace_back("horizon", std::to_string(cmd.horizon));
  meta.emplace_back("dt", fmt(cmd.dt));
  write_meta(path, "predict", meta);
  std::cout << "wrote " << estimates.size() << " estimates to " << path << "\n";
}

struct PlotCmd {
  std::string ckpt, in, out;
  bool baseline = false;  // plot-traj only
  Index sample = 0;
  CorruptOptions corrupt;
  Index tail = 0;
};

Meta plot_meta(const PlotCmd& cmd) {
  Meta meta;
  if (cmd.baseline)
    meta.emplace_back("baseline", "linear");
  else
    meta.emplace_back("ckpt", cmd.ckpt);
  meta.emplace_back("in", cmd.in);
  meta.emplace_back("sample", std::to_string(cmd.sample));
  describe(cmd.corrupt, meta);
  meta.emplace_back("tail", std::to_string(cmd.tail));
  return meta;
}

void run_plot_attn(const PlotCmd& cmd) {
  const MissFormerModel model = load_checkpoint(cmd.ckpt);
  const auto corpus = load_corpus(cmd.in);
  if (cmd.sample < 0 || cmd.sample >= static_cast<Index>(corpus.size()))
    throw std::runtime_error("sample index " + std::to_string(cmd.sample) +
                             " outside corpus of " + std::to_string(corpus.size()));
  check_fits(corpus, model.config().k_max);
  const auto observations =
      corpus_observations(corpus, cmd.corrupt, model.config().input_mode, cmd.tail);
  const ObservedSequence& obs = observations[static_cast<std::size_t>(cmd.sample)];
  const ForwardResult forward = encoder_forward(obs, model);
  const std::string path = out_path(cmd.out);
  plot_attention(forward.attention, obs.missing, path);
  write_meta(path, "plot-attn", plot_meta(cmd));
  std::cout << "wrote " << path << " and sidecars\n";
}

void run_plot_traj(const PlotCmd& cmd) {
  const auto corpus = load_corpus(cmd.in);
  if (cmd.sample < 0 || cmd.sample >= static_cast<Index>(corpus.size()))
    throw std::runtime_error("sample index " + std::to_string(cmd.sample) +
                             " outside corpus of " + std::to_string(corpus.size()));
  const Trajectory& truth = corpus[static_cast<std::size_t>(cmd.sample)];

  Trajectory estimate;
  ObservedSequence shown;  // positions-mode view for the figure
  if (cmd.baseline) {
    const auto observations =
        corpus_observations(corpus, cmd.corrupt, SequenceMode::positions, cmd.tail);
    shown = observations[static_cast<std::size_t>(cmd.sample)];
    estimate = linear_baseline(shown, 0, truth.dt);
  } else {
    const MissFormerModel model = load_checkpoint(cmd.ckpt);
    check_fits(corpus, model.config().k_max);
    const auto observations =
        corpus_observations(corpus, cmd.corrupt, model.config().input_mode, cmd.tail);
    const ObservedSequence& obs = observations[static_cast<std::size_t>(cmd.sample)];
    estimate = predict_full(obs, model, 0, truth.dt);
    shown = model.config().input_mode == SequenceMode::positions
                ? obs
                : corpus_observations(corpus, cmd.corrupt, SequenceMode::positions,
                                      cmd.tail)[static_cast<std::size_t>(cmd.sample)];
  }
  const std::string path = out_path(cmd.out);
  plot_trajectories(truth, shown, estimate, path);
  write_meta(path, "plot-traj", plot_meta(cmd));
  std::cout << "wrote " << path << " and sidecars\n";
}

struct IngestCmd {
  std::string in, out, source;
  Index obs_len = 8;
  Index pred_len = 12;
  Index stride = 1;
  double dt = 0.4;
  bool center = false;
  bool lenient = false;
};

void run_ingest(const IngestCmd& cmd) {
  ParseOptions popt;
  popt.lenient = cmd.lenient;
  const auto records = parse_file(cmd.in, popt);
  WindowConfig wc;
  wc.obs_len = cmd.obs_len;
  wc.pred_len = cmd.pred_len;
  wc.stride = cmd.stride;
  wc.dt = cmd.dt;
  wc.center_last_observed = cmd.center;
  const SampleSet set = windows(records, wc, cmd.source);
  const std::string path = out_path(cmd.out);
  save_corpus(set.windows, path);
  Meta meta;
  meta.emplace_back("in", cmd.in);
  meta.emplace_back("source", set.source);
  meta.emplace_back("frame-stride", std::to_string(set.frame_stride));
  meta.emplace_back("obs-len", std::to_string(cmd.obs_len));
  meta.emplace_back("pred-len", std::to_string(cmd.pred_len));
  meta.emplace_back("stride", std::to_string(cmd.stride));
  meta.emplace_back("dt", fmt(cmd.dt));
  meta.emplace_back("center-last-observed", cmd.center ? "1" : "0");
  write_meta(path, "ingest", meta);
  std::cout << "wrote " << set.windows.size() << " windows (frame stride "
            << set.frame_stride << ") to " << path << "\n";
}

struct ReportCmd {
  std::vector<std::string> records;
  std::string out;
  bool citations = false;
};

void run_report(const ReportCmd& cmd) {
  std::vector<EvalReport> rows;
  for (const std::string& path : cmd.records)
    for (EvalReport& r : load_eval_records(path)) rows.push_back(std::move(r));

  std::ostringstream table;
  table << std::left << std::setw(28) << "task" << std::right << std::setw(8) << "n"
        << std::setw(12) << "ADE" << std::setw(12) << "sigma_ADE" << std::setw(12) << "FDE"
        << "\n";
  table << std::string(72, '-') << "\n";
  table.setf(std::ios::fixed);
  table.precision(3);
  for (const EvalReport& r : rows)
    table << std::left << std::setw(28) << r.task << std::right << std::setw(8) << r.n_samples
          << std::setw(12) << r.ade << std::setw(12) << r.ade_std << std::setw(12) << r.fde
          << "\n";
  if (cmd.citations) {
    table << "\nreference results (cited, not reproduced)\n";
    table << std::string(72, '-') << "\n";
    const struct { const char* name; double ade, fde; } refs[] = {
        {"reconstruction (1000x1000)", 0.067, -1.0},
        {"reconstruction+missing", 0.087, -1.0},
        {"filtering N(0,1)", 0.126, -1.0},
        {"prediction (positions)", 0.809, -1.0},
        {"prediction (pos+missing)", 0.920, -1.0},
        {"prediction (offsets)", 1.186, -1.0},
        {"prediction (off+missing)", 1.221, -1.0},
        {"real-data linear avg", 0.79, 1.59},
        {"real-data transformer avg", 0.53, 1.15},
    };
    for (const auto& ref : refs) {
      table << std::left << std::setw(28) << ref.name << std::right << std::setw(8) << "-"
            << std::setw(12) << ref.ade;
      if (ref.fde >= 0)
        table << std::setw(12) << "" << std::setw(12) << ref.fde;
      table << "\n";
    }
  }

  std::cout << table.str();
  if (!cmd.out.empty()) {
    const std::string path = out_path(cmd.out);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << table.str();
    Meta meta;
    for (const std::string& r : cmd.records) meta.emplace_back("records", r);
    meta.emplace_back("citations", cmd.citations ? "1" : "0");
    write_meta(path, "report", meta);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trajectory reconstruction, filtering and prediction with a "
               "missing-data-aware transformer encoder"};
  app.require_subcommand(1);

  GenerateCmd generate_cmd;
  auto* gen_cmd = app.add_subcommand("generate", "write a synthetic trajectory corpus");
  add_config_option(gen_cmd);
  add_gen_options(gen_cmd, generate_cmd.gen, 1000, /*seed_alias=*/true);
  gen_cmd->add_option("--out", generate_cmd.out, "corpus output path")->required();

  CorruptCmd corrupt_cmd;
  auto* cor_cmd = app.add_subcommand("corrupt", "corrupt a corpus into observed sequences");
  add_config_option(cor_cmd);
  cor_cmd->add_option("--in", corrupt_cmd.in, "corpus input path")->required();
  cor_cmd->add_option("--out", corrupt_cmd.out, "observed output path")->required();
  add_corrupt_options(cor_cmd, corrupt_cmd.corrupt);
  cor_cmd->add_option("--mode", corrupt_cmd.mode, "positions or offsets")
      ->check(CLI::IsMember({"positions", "offsets"}));
  cor_cmd->add_option("--tail", corrupt_cmd.tail, "mask this many trailing steps");

  TrainCmd train_cmd;
  auto* tr_cmd = app.add_subcommand("train", "train a model, write checkpoint and log");
  add_config_option(tr_cmd);
  tr_cmd->add_option("--in", train_cmd.in, "training corpus (omit to generate)");
  add_gen_options(tr_cmd, train_cmd.gen, 1000);
  add_model_options(tr_cmd, train_cmd.model);
  tr_cmd->add_option("--init-ckpt", train_cmd.init_ckpt, "continue from this checkpoint");
  add_corrupt_options(tr_cmd, train_cmd.corrupt);
  tr_cmd->add_option("--task", train_cmd.task, "reconstruction, filtering or prediction")
      ->check(CLI::IsMember({"reconstruction", "filtering", "prediction"}));
  tr_cmd->add_option("--epochs", train_cmd.epochs, "training epochs");
  tr_cmd->add_option("--batch", train_cmd.batch, "batch size");
  tr_cmd->add_option("--lr", train_cmd.lr, "learning rate");
  tr_cmd->add_option("--weight-decay", train_cmd.weight_decay, "decoupled weight decay");
  tr_cmd->add_flag("--frozen-corruption", train_cmd.frozen_corruption,
                   "reuse epoch-0 corruption every epoch");
  tr_cmd->add_option("--curriculum-epoch", train_cmd.curriculum_epoch,
                     "epoch at which tail masking starts (-1 = immediately)");
  tr_cmd->add_option("--pred-min", train_cmd.pred_min, "minimum masked tail length");
  tr_cmd->add_option("--pred-max", train_cmd.pred_max, "maximum masked tail length");
  tr_cmd->add_option("--ckpt", train_cmd.ckpt, "checkpoint output path");
  tr_cmd->add_option("--log", train_cmd.log, "training log output path (empty = skip)");

  EvalCmd eval_cmd;
  auto* ev_cmd = app.add_subcommand("eval", "evaluate a checkpoint or the linear baseline");
  add_config_option(ev_cmd);
  auto* ev_ckpt = ev_cmd->add_option("--ckpt", eval_cmd.ckpt, "model checkpoint");
  ev_cmd->add_flag("--baseline", eval_cmd.baseline, "evaluate the linear baseline instead")
      ->excludes(ev_ckpt);
  ev_cmd->add_option("--in", eval_cmd.in, "evaluation corpus (omit to generate)");
  add_gen_options(ev_cmd, eval_cmd.gen, 5000);
  add_corrupt_options(ev_cmd, eval_cmd.corrupt);
  ev_cmd->add_option("--task", eval_cmd.task, "reconstruction, filtering or prediction")
      ->check(CLI::IsMember({"reconstruction", "filtering", "prediction"}));
  ev_cmd->add_option("--pred-min", eval_cmd.pred_min, "minimum masked tail length");
  ev_cmd->add_option("--pred-max", eval_cmd.pred_max, "maximum masked tail length");
  ev_cmd->add_option("--out", eval_cmd.out, "eval record output path");

  PredictCmd predict_cmd;
  auto* pr_cmd = app.add_subcommand("predict", "run a checkpoint over observed sequences");
  add_config_option(pr_cmd);
  pr_cmd->add_option("--ckpt", predict_cmd.ckpt, "model checkpoint")->required();
  pr_cmd->add_option("--in", predict_cmd.in, "observed sequences input")->required();
  pr_cmd->add_option("--out", predict_cmd.out, "estimate corpus output")->required();
  pr_cmd->add_option("--horizon", predict_cmd.horizon, "extra steps to predict");
  pr_cmd->add_option("--dt", predict_cmd.dt, "seconds per step for the output");

  PlotCmd plot_attn_cmd;
  auto* pa_cmd = app.add_subcommand("plot-attn", "attention heatmaps for one sample");
  add_config_option(pa_cmd);
  pa_cmd->add_option("--ckpt", plot_attn_cmd.ckpt, "model checkpoint")->required();
  pa_cmd->add_option("--in", plot_attn_cmd.in, "corpus input path")->required();
  pa_cmd->add_option("--sample", plot_attn_cmd.sample, "sample index");
  add_corrupt_options(pa_cmd, plot_attn_cmd.corrupt);
  pa_cmd->add_option("--tail", plot_attn_cmd.tail, "mask this many trailing steps");
  pa_cmd->add_option("--out", plot_attn_cmd.out, "SVG output path")->required();

  PlotCmd plot_traj_cmd;
  auto* pt_cmd = app.add_subcommand("plot-traj", "truth/observed/estimate overlay");
  add_config_option(pt_cmd);
  auto* pt_ckpt = pt_cmd->add_option("--ckpt", plot_traj_cmd.ckpt, "model checkpoint");
  pt_cmd->add_flag("--baseline", plot_traj_cmd.baseline, "estimate with the linear baseline")
      ->excludes(pt_ckpt);
  pt_cmd->add_option("--in", plot_traj_cmd.in, "corpus input path")->required();
  pt_cmd->add_option("--sample", plot_traj_cmd.sample, "sample index");
  add_corrupt_options(pt_cmd, plot_traj_cmd.corrupt);
  pt_cmd->add_option("--tail", plot_traj_cmd.tail, "mask this many trailing steps");
  pt_cmd->add_option("--out", plot_traj_cmd.out, "SVG output path")->required();

  IngestCmd ingest_cmd;
  auto* in_cmd = app.add_subcommand("ingest", "convert `frame agent x y` data to a corpus");
  add_config_option(in_cmd);
  in_cmd->add_option("--in", ingest_cmd.in, "raw records input path")->required();
  in_cmd->add_option("--out", ingest_cmd.out, "corpus output path")->required();
  in_cmd->add_option("--source", ingest_cmd.source, "split name for bookkeeping");
  in_cmd->add_option("--obs-len", ingest_cmd.obs_len, "observed steps per window");
  in_cmd->add_option("--pred-len", ingest_cmd.pred_len, "predicted steps per window");
  in_cmd->add_option("--stride", ingest_cmd.stride, "window start stride");
  in_cmd->add_option("--dt", ingest_cmd.dt, "seconds per step of the output windows");
  in_cmd->add_flag("--center", ingest_cmd.center, "translate last observed step to origin");
  in_cmd->add_flag("--lenient", ingest_cmd.lenient, "skip malformed lines with a warning");

  ReportCmd report_cmd;
  auto* rp_cmd = app.add_subcommand("report", "tabulate eval records");
  add_config_option(rp_cmd);
  rp_cmd->add_option("--records", report_cmd.records, "eval record files")->required();
  rp_cmd->add_option("--out", report_cmd.out, "report output path");
  rp_cmd->add_flag("--citations", report_cmd.citations,
                   "append reference results (cited, not reproduced)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // 0
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;  // usage error
  }

  try {
    for (CLI::App* sub : app.get_subcommands()) apply_config(sub);
    if (*gen_cmd) run_generate(generate_cmd);
    if (*cor_cmd) run_corrupt(corrupt_cmd);
    if (*tr_cmd) run_train(train_cmd);
    if (*ev_cmd) run_eval(eval_cmd);
    if (*pr_cmd) run_predict(predict_cmd);
    if (*pa_cmd) run_plot_attn(plot_attn_cmd);
    if (*pt_cmd) run_plot_traj(plot_traj_cmd);
    if (*in_cmd) run_ingest(ingest_cmd);
    if (*rp_cmd) run_report(report_cmd);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
