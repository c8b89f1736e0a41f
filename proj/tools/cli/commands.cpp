#include "commands.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "errors.hpp"
#include "metalstm/baselines.hpp"
#include "metalstm/checkpoint.hpp"
#include "metalstm/config.hpp"
#include "metalstm/metaopt.hpp"
#include "report.hpp"
#include "suite_io.hpp"
#include "trace.hpp"

namespace metalstm::cli {

namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void on_sigint(int) { g_interrupted = true; }

void require_file(const std::string& path, const char* what) {
  if (!std::filesystem::is_regular_file(path)) throw UsageError(std::string(what) + " not found: " + path);
}

RunConfig config_or_default(const std::string& path) {
  if (path.empty()) return RunConfig{};
  require_file(path, "config file");
  return load_run_config(path);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct GenArgs {
  std::string config;
  std::uint64_t seed = 1;
  std::size_t count = 0;
  std::string out;
  std::string csv_dir;
};

int cmd_gen(const GenArgs& a, std::ostream& out) {
  if (a.count == 0) throw UsageError("gen: --count must be >= 1");
  const RunConfig cfg = config_or_default(a.config);
  const Suite suite = generate_suite(cfg.generator, a.count, a.seed);
  save_suite(suite, a.out);
  if (!a.csv_dir.empty()) export_suite_csv(suite, a.csv_dir);
  out << "wrote " << suite.datasets.size() << " datasets to " << a.out << " (fingerprint " << suite.fingerprint()
      << ")\n";
  return kOk;
}

struct TrainArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> iterations;
  std::string out;
  std::string loss_log;
  std::string resume;
};

int cmd_meta_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  require_file(a.config, "config file");
  RunConfig cfg = load_run_config(a.config);
  if (a.seed) cfg.training.seed = *a.seed;
  if (a.iterations) cfg.training.iterations = *a.iterations;
  if (!a.out.empty()) cfg.output.checkpoint = a.out;
  if (!a.loss_log.empty()) cfg.output.loss_log = a.loss_log;
  const std::string echo = dump_run_config(cfg);

  Checkpoint start;
  if (!a.resume.empty()) {
    require_file(a.resume, "checkpoint");
    start = load_checkpoint(a.resume);
    if (!(start.model == cfg.model) || start.learner.fc_sizes != cfg.fc_sizes) {
      throw UsageError("meta-train: resumed checkpoint does not match the configured architecture");
    }
    start.config_echo = echo;
  } else {
    start = initial_checkpoint(cfg.model, cfg.fc_sizes, cfg.training, echo);
  }

  std::ofstream log(cfg.output.loss_log, a.resume.empty() ? std::ios::trunc : std::ios::app);
  if (!log) throw std::runtime_error("cannot open loss log " + cfg.output.loss_log);

  TrainHooks hooks;
  std::vector<LossRecord> pending;
  hooks.on_log = [&](std::uint64_t it, double loss) {
    out << "iter=" << it + 1 << " loss=" << fmt("%.6f", loss) << '\n' << std::flush;
  };
  hooks.on_checkpoint = [&](const Checkpoint& c) { save_checkpoint(c, cfg.output.checkpoint); };
  hooks.should_stop = [] { return g_interrupted.load(); };

  auto write_log = [&](const std::vector<LossRecord>& records) {
    for (const auto& r : records) log << r.iteration << '\t' << fmt("%.17g", r.loss) << '\n';
    log.flush();
  };

  g_interrupted = false;
  auto previous = std::signal(SIGINT, on_sigint);
  try {
    TrainResult result = meta_train(std::move(start), cfg.generator, cfg.training, hooks);
    std::signal(SIGINT, previous);
    write_log(result.losses);
    save_checkpoint(result.checkpoint, cfg.output.checkpoint);
    out << "saved checkpoint at iteration " << result.checkpoint.iteration << " to " << cfg.output.checkpoint << '\n';
    return kOk;
  } catch (const TrainingAborted& e) {
    std::signal(SIGINT, previous);
    const std::string path = cfg.output.checkpoint + ".emergency";
    save_checkpoint(e.last_good(), path);
    err << "meta-train aborted: " << e.what() << "; last good state saved to " << path << '\n';
    return kRuntimeFailure;
  }
}

struct EvalArgs {
  std::string checkpoint;
  std::string suite;
  std::vector<std::string> baselines;
  std::string external_scores;
  std::string external_name = "external";
  std::string out;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  require_file(a.checkpoint, "checkpoint");
  require_file(a.suite, "suite");
  for (const auto& b : a.baselines)
    if (b != "logreg") throw UsageError("eval: unknown baseline \"" + b + "\" (available: logreg)");

  const std::string ckpt_bytes = io::read_file(a.checkpoint);
  const Checkpoint ckpt = decode_checkpoint(ckpt_bytes);
  const Suite suite = load_suite(a.suite);
  if (ckpt.model.n_in != suite.n_in()) {
    throw UsageError("eval: checkpoint model takes " + std::to_string(ckpt.model.n_in) + " inputs but the suite has " +
                     std::to_string(suite.n_in()));
  }
  std::vector<double> external;
  if (!a.external_scores.empty()) external = read_external_scores(a.external_scores, suite.datasets.size());

  Report report;
  report.suite_fingerprint = suite.fingerprint();
  report.checkpoint_fingerprint = io::hex64(io::fnv1a64(ckpt_bytes));
  for (const auto& d : suite.datasets) {
    report.taus.push_back(d.tau);
    report.lengths.push_back(d.size());
  }
  report.methods.push_back({"learned", evaluate_suite(learned_scorer(ckpt.params, ckpt.model), suite.datasets)});
  for (const auto& b : a.baselines) report.methods.push_back({b, evaluate_suite(logreg_scorer(), suite.datasets)});
  if (!external.empty()) report.methods.push_back({a.external_name, summarize(external)});

  if (!a.out.empty()) io::write_file_atomic(a.out, format_report(report));
  out << format_table(report);
  return kOk;
}

struct TraceArgs {
  std::string checkpoint;
  std::string suite;
  std::size_t index = 0;
  std::string out;
};

int cmd_trace(const TraceArgs& a, std::ostream& out) {
  require_file(a.checkpoint, "checkpoint");
  require_file(a.suite, "suite");
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  const Suite suite = load_suite(a.suite);
  if (a.index >= suite.datasets.size()) {
    throw UsageError("trace: index " + std::to_string(a.index) + " outside suite of " +
                     std::to_string(suite.datasets.size()));
  }
  if (ckpt.model.n_in != suite.n_in()) throw UsageError("trace: checkpoint and suite input sizes differ");
  const auto rows = compute_trace(ckpt.params, ckpt.model, suite.datasets[a.index]);
  std::ofstream os(a.out, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + a.out);
  write_trace_csv(os, rows);
  out << "wrote " << rows.size() << " rows to " << a.out << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"metalstm: meta-learned online learning with a gated parameter-state learner", "metalstm"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate a suite of synthetic datasets");
  g->add_option("--config", gen.config, "Run configuration (JSON); generator section is used");
  g->add_option("--seed", gen.seed, "Master seed")->capture_default_str();
  g->add_option("--count,-n", gen.count, "Number of datasets")->required();
  g->add_option("--out,-o", gen.out, "Output suite file")->required();
  g->add_option("--csv-dir", gen.csv_dir, "Also export one CSV per dataset into this directory");

  TrainArgs train;
  auto* t = app.add_subcommand("meta-train", "Meta-train the learner");
  t->add_option("--config", train.config, "Run configuration (JSON)")->required();
  t->add_option("--seed", train.seed, "Override training.seed");
  t->add_option("--iterations", train.iterations, "Override training.iterations");
  t->add_option("--out,-o", train.out, "Override output.checkpoint");
  t->add_option("--loss-log", train.loss_log, "Override output.loss_log");
  t->add_option("--resume", train.resume, "Continue from this checkpoint");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Score a checkpoint and baselines on a suite");
  e->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")->required();
  e->add_option("--suite", ev.suite, "Suite file")->required();
  e->add_option("--baseline", ev.baselines, "Baseline to include (logreg); repeatable");
  e->add_option("--external-scores", ev.external_scores, "File of dataset_index<TAB>mce lines");
  e->add_option("--external-name", ev.external_name, "Column name for external scores")->capture_default_str();
  e->add_option("--out,-o", ev.out, "Report output path");

  TraceArgs tr;
  auto* c = app.add_subcommand("trace", "Export a per-timestep episode trace as CSV");
  c->add_option("--checkpoint", tr.checkpoint, "Checkpoint file")->required();
  c->add_option("--suite", tr.suite, "Suite file")->required();
  c->add_option("--index", tr.index, "Dataset index within the suite")->required();
  c->add_option("--out,-o", tr.out, "Output CSV")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& pe) {
    const int code = app.exit(pe, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*g) return cmd_gen(gen, out);
    if (*t) return cmd_meta_train(train, out, err);
    if (*e) return cmd_eval(ev, out);
    if (*c) return cmd_trace(tr, out);
  } catch (const UsageError& ex) {
    err << "error: " << ex.what() << '\n';
    return kUsage;
  } catch (const ConfigError& ex) {
    err << "config error: " << ex.what() << '\n';
    return kUsage;
  } catch (const io::FormatError& ex) {
    err << "invalid input file: " << ex.what() << '\n';
    return kUsage;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kRuntimeFailure;
  }
  return kUsage;
}

}  // namespace metalstm::cli
