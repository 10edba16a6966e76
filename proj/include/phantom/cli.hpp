#pragma once

// `phantom <command>` entry point: gen-data | train | synthesize | evaluate | report.
// Exit status: 0 success, 2 invalid configuration, 3 training divergence,
// 1 any other failure.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "phantom/benchmark_data.hpp"
#include "phantom/checkpoint.hpp"
#include "phantom/config.hpp"
#include "phantom/dataset_io.hpp"
#include "phantom/error.hpp"
#include "phantom/logging.hpp"
#include "phantom/report.hpp"
#include "phantom/trainer.hpp"

namespace phantom::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitDivergence = 3;

struct Invocation {
  std::string command;
  std::string config_path;  // empty: all defaults
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::vector<std::string> overrides;
};

namespace detail {

inline std::string iso_time_utc() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void write_json(const fs::path& path, const nlohmann::json& j) {
  write_file_atomic(path, j.dump(2) + "\n");
}

/// Resolved config echo plus the separate timestamped run metadata.
inline void write_run_files(const fs::path& dir, const Invocation& inv, const RunConfig& cfg,
                            const std::string& started) {
  fs::create_directories(dir);
  write_json(dir / "resolved_config.json", to_json(cfg));
  write_json(dir / "run_metadata.json", {{"command", inv.command},
                                         {"config_path", inv.config_path},
                                         {"overrides", inv.overrides},
                                         {"started_utc", started},
                                         {"finished_utc", iso_time_utc()},
                                         {"generator_version", kGeneratorVersion}});
}

inline std::vector<ClassSpec> specs_with(const std::vector<double>& proportions) {
  auto specs = default_class_specs();
  for (std::size_t c = 0; c < specs.size(); ++c) specs[c].proportion = proportions[c];
  return specs;
}

inline void gen_data(const Invocation& inv, const RunConfig& cfg, const std::string& started) {
  const auto& d = cfg.data;
  const fs::path dir = d.output_dir;
  const auto specs = specs_with(d.proportions);
  log::write(log::Level::info, "generating %ld rows (seed %llu)", d.n_total,
             static_cast<unsigned long long>(d.seed));
  const auto table = generate_benchmark(d.n_total, specs, d.seed);
  const auto split = stratified_split(table, d.test_fraction, child_seed(d.seed, 2000));
  fs::create_directories(dir);
  write_csv(table, dir / "benchmark.csv");
  write_csv(split.train, dir / "train.csv");
  write_csv(split.test, dir / "test.csv");
  auto meta = benchmark_metadata(specs, d.n_total, d.seed);
  const auto counts = table.class_counts();
  const auto test_counts = split.test.class_counts();
  meta["class_counts"] = std::vector<long>(counts.begin(), counts.end());
  meta["test_fraction"] = d.test_fraction;
  meta["test_class_counts"] = std::vector<long>(test_counts.begin(), test_counts.end());
  write_json(dir / "metadata.json", meta);
  write_run_files(dir, inv, cfg, started);
}

inline void train_command(const Invocation& inv, const RunConfig& cfg, const std::string& started) {
  const auto& t = cfg.train;
  const fs::path dir = t.checkpoint_dir;
  const auto data = read_csv(t.data_path);
  validate_table(data);
  log::write(log::Level::info, "training on %ld rows: L=%d, %d iterations per level", static_cast<long>(data.rows()),
             t.config.levels, t.config.iters_per_level);
  const auto every = std::max(1, t.config.iters_per_level / 10);
  const auto result = train(t.config, data, [&](const LogRow& row) {
    if (log::enabled(log::Level::debug) || (row.step + 1) % every == 0) {
      log::write(log::Level::info, "step %ld level %d: total_g=%.4f total_d=%.4f", row.step + 1, row.level,
                 row.losses.total_g, row.losses.total_d);
    }
  });
  save_checkpoint(dir, result.state, to_json(t.config));
  write_file_atomic(dir / "training_log.csv", training_log_csv(result.log));
  nlohmann::json stab = nlohmann::json::array();
  for (const auto& s : result.stabilization) {
    stab.push_back({{"level", s.level}, {"steps", s.steps}, {"l1_before", s.l1_before}, {"l1_after", s.l1_after},
                    {"critic_checksum_before", s.critic_before}, {"critic_checksum_after", s.critic_after},
                    {"classifier_checksum_before", s.classifier_before},
                    {"classifier_checksum_after", s.classifier_after}});
  }
  write_json(dir / "stabilization.json", stab);
  write_run_files(dir, inv, cfg, started);
}

inline void synthesize_command(const Invocation& inv, const RunConfig& cfg, const std::string& started) {
  const auto& s = cfg.synthesize;
  const fs::path dir = s.output_dir;
  const auto models = load_models(s.checkpoint_dir);
  const auto table = synthesize(models, s.n, s.label_counts ? &*s.label_counts : nullptr, s.seed);
  fs::create_directories(dir);
  write_csv(table, dir / "synthetic.csv");
  write_run_files(dir, inv, cfg, started);
}

inline void evaluate_command(const Invocation& inv, const RunConfig& cfg, const std::string& started) {
  const auto& e = cfg.evaluate;
  const fs::path dir = e.report_dir;
  DatasetTable real_train = read_csv(e.real_path);
  DatasetTable real_test;
  if (e.real_test_path.empty()) {
    auto split = stratified_split(real_train, e.test_fraction, child_seed(e.detector_seed, 2000));
    real_train = std::move(split.train);
    real_test = std::move(split.test);
  } else {
    real_test = read_csv(e.real_test_path);
  }
  const auto synth = read_csv(e.synth_path);
  const auto result = evaluate_tables(real_train, synth, real_test,
                                      {e.detector_seed, e.density_feature, e.grid_points, e.nn_bins});
  fs::create_directories(dir);
  write_json(dir / "metrics.json", to_json(result.report));
  write_file_atomic(dir / "report.txt", render_report(result.report));
  nlohmann::json plots = nlohmann::json::object();
  for (const auto& [stem, series] : result.plots) {
    write_file_atomic(dir / (stem + ".csv"), plot_csv(series));
    plots[stem] = plot_metadata(series);
    plots[stem]["file"] = stem + ".csv";
  }
  write_json(dir / "plots.json", plots);
  write_run_files(dir, inv, cfg, started);
}

inline void report_command(const Invocation& inv, const RunConfig& cfg, const std::string& started,
                           std::ostream& out) {
  const auto& r = cfg.report;
  auto doc = nlohmann::json::parse(read_file(r.metrics_path), nullptr, false);
  if (doc.is_discarded()) throw FormatError("metrics file is not valid JSON: " + r.metrics_path);
  const std::string text = render_report(metrics_from_json(doc));
  const fs::path dir = r.output_dir;
  fs::create_directories(dir);
  write_file_atomic(dir / "report.txt", text);
  write_run_files(dir, inv, cfg, started);
  out << text;
}

/// --seed and --out address the section the command runs.
inline void apply_invocation(const Invocation& inv, RunConfig& cfg) {
  if (inv.command == "gen-data") {
    if (inv.seed) cfg.data.seed = *inv.seed;
    if (!inv.out_dir.empty()) cfg.data.output_dir = inv.out_dir;
  } else if (inv.command == "train") {
    if (inv.seed) cfg.train.config.seed = *inv.seed;
    if (!inv.out_dir.empty()) cfg.train.checkpoint_dir = inv.out_dir;
  } else if (inv.command == "synthesize") {
    if (inv.seed) cfg.synthesize.seed = *inv.seed;
    if (!inv.out_dir.empty()) cfg.synthesize.output_dir = inv.out_dir;
  } else if (inv.command == "evaluate") {
    if (inv.seed) cfg.evaluate.detector_seed = *inv.seed;
    if (!inv.out_dir.empty()) cfg.evaluate.report_dir = inv.out_dir;
  } else if (inv.command == "report") {
    if (!inv.out_dir.empty()) cfg.report.output_dir = inv.out_dir;
  }
}

}  // namespace detail

inline RunConfig resolve(const Invocation& inv) {
  nlohmann::json doc = inv.config_path.empty() ? nlohmann::json::object() : load_config_document(inv.config_path);
  apply_overrides(doc, inv.overrides);
  RunConfig cfg = parse_config(doc);
  detail::apply_invocation(inv, cfg);
  resolve_paths(cfg, fs::current_path());
  return cfg;
}

inline int execute(const Invocation& inv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  const std::string started = detail::iso_time_utc();
  try {
    const RunConfig cfg = resolve(inv);
    if (inv.command == "gen-data") detail::gen_data(inv, cfg, started);
    else if (inv.command == "train") detail::train_command(inv, cfg, started);
    else if (inv.command == "synthesize") detail::synthesize_command(inv, cfg, started);
    else if (inv.command == "evaluate") detail::evaluate_command(inv, cfg, started);
    else if (inv.command == "report") detail::report_command(inv, cfg, started, out);
    else throw ConfigError("unknown command: " + inv.command);
    return kExitOk;
  } catch (const ValidationError& e) {
    err << e.what() << "\n";
    return kExitInvalid;
  } catch (const DivergenceError& e) {
    err << "training diverged: term=" << e.term() << " value=" << e.value() << " step=" << e.step() << "\n";
    return kExitDivergence;
  } catch (const Error& e) {
    err << e.what() << "\n";
    return e.kind() == ErrorKind::config || e.kind() == ErrorKind::infeasible_split ? kExitInvalid : kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

/// Parses argv-style arguments (without the program name) and executes.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Synthetic network-intrusion data: generate, train, synthesize, evaluate, report"};
  app.require_subcommand(1);
  Invocation inv;
  std::uint64_t seed = 0;
  for (const char* name : {"gen-data", "train", "synthesize", "evaluate", "report"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", inv.config_path, "JSON configuration file");
    sub->add_option("--seed", seed, "seed for this command");
    sub->add_option("--out", inv.out_dir, "output directory for this command");
    sub->add_option("--set", inv.overrides, "override as section.key=value")->take_all()->allow_extra_args(false);
    sub->callback([&inv, name] { inv.command = name; });
  }
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return kExitInvalid;
  }
  for (auto* sub : app.get_subcommands()) {
    if (sub->count("--seed") > 0) inv.seed = seed;
  }
  return execute(inv, out, err);
}

}  // namespace phantom::cli
