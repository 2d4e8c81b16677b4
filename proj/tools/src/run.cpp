#include <functional>
#include <map>
#include <ostream>

#include <CLI11.hpp>

#include "rlscale/cli/commands.hpp"
#include "rlscale/error.hpp"

namespace rlscale::cli {

namespace {

using Handler = std::function<nlohmann::json(const CommandOptions&)>;

void add_out(CLI::App* cmd, CommandOptions& o, bool required) {
  auto* opt = cmd->add_option("--out", o.pipeline.output_dir, "Output directory");
  if (required) opt->required();
}

void add_inputs(CLI::App* cmd, CommandOptions& o, const char* what) {
  cmd->add_option("--input", o.pipeline.input_paths, what)->required();
}

void add_fit_selection(CLI::App* cmd, CommandOptions& o) {
  cmd->add_option("--fit", o.fit_path, "Data-efficiency fit document")->required();
  cmd->add_option("--task", o.task, "Task to use when the document covers several");
  cmd->add_option("--threshold", o.threshold, "Threshold J (default: the highest fitted)");
  cmd->add_option("--k", o.pipeline.k, "FLOPs per (UTD x parameter x env step)");
}

void error_line(std::ostream& err, OutputFormat format, const char* kind, int code, const std::string& message) {
  if (format == OutputFormat::structured) {
    err << nlohmann::json{{"error", kind}, {"exit_code", code}, {"message", message}}.dump() << '\n';
  } else {
    err << "rlscale: " << kind << ": " << message << '\n';
  }
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Scaling-law fitting and compute allocation for RL training logs", "rlscale"};
  app.require_subcommand(1);
  // --format is global; subcommands inherit fallthrough so it may also follow the subcommand.
  app.fallthrough();

  CommandOptions o;
  std::map<CLI::App*, Handler> handlers;
  const std::map<std::string, OutputFormat> formats{{"csv", OutputFormat::csv}, {"structured", OutputFormat::structured}};
  app.add_option("--format", o.format, "Summary format on stdout")
      ->transform(CLI::CheckedTransformer(formats, CLI::ignore_case));

  auto* ingest = app.add_subcommand("ingest", "Validate run logs against a manifest and write canonical copies");
  ingest->add_option("--manifest", o.pipeline.manifest_path, "Task manifest (JSON)")->required();
  add_inputs(ingest, o, "Run-log CSV files");
  add_out(ingest, o, true);
  handlers[ingest] = cmd_ingest;

  auto* preprocess = app.add_subcommand("preprocess", "Learning curves to data-efficiency and best-batch tables");
  preprocess->add_option("--manifest", o.pipeline.manifest_path, "Task manifest (JSON)")->required();
  add_inputs(preprocess, o, "Run-log CSV files");
  add_out(preprocess, o, true);
  preprocess->add_option("--thresholds", o.pipeline.m_thresholds, "Number of return thresholds");
  preprocess->add_option("--bootstrap-k", o.pipeline.bootstrap.replicates, "Bootstrap replicates");
  preprocess->add_option("--seed", o.pipeline.rng_seed, "Random seed");
  handlers[preprocess] = cmd_preprocess;

  auto* fit_batch = app.add_subcommand("fit-batch", "Fit the best-batch-size rule");
  add_inputs(fit_batch, o, "Best-batch CSV files");
  add_out(fit_batch, o, true);
  fit_batch->add_option("--task", o.task, "Task to fit when the table covers several");
  fit_batch->add_option("--seed", o.pipeline.rng_seed, "Seed for optimizer restarts");
  handlers[fit_batch] = cmd_fit_batch;

  auto* fit_data = app.add_subcommand("fit-data", "Fit data-efficiency laws per threshold");
  add_inputs(fit_data, o, "Efficiency CSV files");
  add_out(fit_data, o, true);
  fit_data->add_option("--mode", o.pipeline.fit_mode, "independent, shared or aggregated")
      ->check(CLI::IsMember({"independent", "shared", "aggregated"}));
  fit_data->add_option("--seed", o.pipeline.rng_seed, "Seed for optimizer restarts");
  fit_data->add_flag("--allow-unstable", o.allow_unstable, "Exit 0 even when some fit is unstable");
  handlers[fit_data] = cmd_fit_data;

  auto* allocate = app.add_subcommand("allocate", "Optimal UTD ratio and model size under a budget");
  add_fit_selection(allocate, o);
  add_out(allocate, o, false);
  allocate->add_option("--data-budget", o.data_budget, "Env-step target D0");
  allocate->add_option("--compute-budget", o.compute_budget, "FLOPs budget C0");
  allocate->add_option("--delta", o.delta, "FLOPs-equivalent cost of one env step");
  handlers[allocate] = cmd_allocate;

  auto* frontier = app.add_subcommand("frontier", "Budget frontier across thresholds and its power laws");
  add_fit_selection(frontier, o);
  add_out(frontier, o, true);
  frontier->add_option("--manifest", o.pipeline.manifest_path, "Task manifest (for delta)");
  frontier->add_option("--delta", o.delta, "FLOPs-equivalent cost of one env step");
  frontier->add_option("--extrapolate-top", o.pipeline.n_extrapolate, "Highest-budget points held out of the fit");
  frontier->add_option("--batch-fit", o.batch_fit_path, "Batch-rule document (adds the fixed-batch baseline)");
  handlers[frontier] = cmd_frontier;

  auto* sensitivity = app.add_subcommand("sensitivity", "Data efficiency of batch sizes away from the rule");
  add_inputs(sensitivity, o, "Efficiency CSV files (all batch arms)");
  sensitivity->add_option("--batch-fit", o.batch_fit_path, "Batch-rule document")->required();
  sensitivity->add_option("--task", o.task, "Restrict to one task");
  add_out(sensitivity, o, false);
  handlers[sensitivity] = cmd_sensitivity;

  auto* evaluate = app.add_subcommand("evaluate", "Relative error of a fit on held-out efficiency tables");
  evaluate->add_option("--fit", o.fit_path, "Data-efficiency fit document")->required();
  add_inputs(evaluate, o, "Held-out efficiency CSV files");
  add_out(evaluate, o, false);
  handlers[evaluate] = cmd_evaluate;

  auto* synth = app.add_subcommand("synth", "Synthetic learning curves and efficiency grids from known laws");
  synth->add_option("--spec", o.spec_path, "Synthetic-experiment spec (JSON)")->required();
  add_out(synth, o, true);
  synth->add_option("--seed", o.pipeline.rng_seed, "Override the spec's seed (0 keeps it)");
  handlers[synth] = cmd_synth;

  auto* report = app.add_subcommand("report", "Iso-data contours and frontier tables for plotting");
  add_fit_selection(report, o);
  add_out(report, o, true);
  report->add_option("--manifest", o.pipeline.manifest_path, "Task manifest (for delta)");
  report->add_option("--delta", o.delta, "FLOPs-equivalent cost of one env step");
  report->add_option("--d-target", o.d_targets, "Data targets for contours (default: multiples of d_min)");
  handlers[report] = cmd_report;

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    error_line(err, o.format, "usage", kExitInput, e.what());
    return kExitInput;
  }

  CLI::App* chosen = app.get_subcommands().front();
  try {
    const auto summary = handlers.at(chosen)(o);
    print_summary(out, summary, o.format);
    return kExitOk;
  } catch (const InputError& e) {
    error_line(err, o.format, "input error", kExitInput, e.what());
    return kExitInput;
  } catch (const NumericalError& e) {
    error_line(err, o.format, "numerical error", kExitNumerical, e.what());
    return kExitNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    error_line(err, o.format, "input error", kExitInput, e.what());
    return kExitInput;
  }
}

}  // namespace rlscale::cli
