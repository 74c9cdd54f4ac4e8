#include "app.hpp"

#include <charconv>
#include <cstdlib>
#include <functional>
#include <ostream>
#include <string_view>

#include <CLI11/CLI11.hpp>

#include "commands.hpp"
#include "perplex/error.hpp"
#include "perplex/suites.hpp"

namespace perplex::cli {

namespace {

constexpr int kExitIo = 1;
constexpr int kExitUsage = 2;

const std::vector<std::string> kSides = {"one", "two"};

void check_thread_env() {
  const char* env = std::getenv("PERPLEX_THREADS");
  if (!env) return;
  const std::string_view text(env);
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || value == 0) {
    throw DomainError("PERPLEX_THREADS must be a positive integer");
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Perplexity-based attribution and detection tests for sequence models", "perplex"};
  app.set_config("--config", "", "TOML or INI file of option values; command-line flags take precedence");
  bool print_config = false;
  app.add_flag("--print-config", print_config, "Print the resolved configuration and exit")->configurable(false);
  app.require_subcommand(1);

  std::function<CommandOutput()> action;

  // simulate
  SimulateConfig sim;
  std::string sim_model, sim_eval, sim_eval_name, sim_label, sim_out_model, sim_out_tokens;
  auto* simulate = app.add_subcommand("simulate", "Sample texts from a Markov model and write log-prob traces");
  auto* sim_model_opt = simulate->add_option("--model", sim_model, "Generator model JSON");
  simulate->add_flag("--uniform", sim.uniform, "Use a uniform generator")->excludes(sim_model_opt);
  simulate->add_option("--alphabet", sim.alphabet, "Alphabet size K")->capture_default_str();
  simulate->add_option("--order", sim.order, "Markov order")->capture_default_str();
  simulate->add_option("--concentration", sim.concentration, "Dirichlet concentration for random rows")->capture_default_str();
  simulate->add_option("--epsilon", sim.epsilon, "Probability floor for random models")->capture_default_str();
  simulate->add_option("--model-seed", sim.model_seed, "Seed for the random model")->capture_default_str();
  simulate->add_option("--name", sim.generator_name, "Generator name used in ids and token files")->capture_default_str();
  auto* sim_eval_opt = simulate->add_option("--evaluator", sim_eval, "Scoring model JSON (default: the generator)");
  auto* sim_eval_name_opt = simulate->add_option("--evaluator-name", sim_eval_name, "Evaluator name in the traces");
  auto* sim_label_opt = simulate->add_option("--label", sim_label, "Trace label")
                            ->check(CLI::IsMember({"null_source", "evaluator_source", "unknown"}));
  simulate->add_option("--n", sim.n, "Tokens generated after the prompt")->capture_default_str();
  simulate->add_option("--count", sim.count, "Number of texts")->capture_default_str();
  simulate->add_option("--prompt-len", sim.prompt_len, "Prompt tokens drawn uniformly before generation")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Master seed")->capture_default_str();
  simulate->add_option("--out", sim.out, "Trace JSONL output")->capture_default_str();
  auto* sim_out_model_opt = simulate->add_option("--out-model", sim_out_model, "Write the generator model JSON here");
  auto* sim_out_tokens_opt = simulate->add_option("--out-tokens", sim_out_tokens, "Write the sampled token JSONL here");
  simulate->callback([&] {
    if (sim_model_opt->count()) sim.model = sim_model;
    if (sim_eval_opt->count()) sim.evaluator = sim_eval;
    if (sim_eval_name_opt->count()) sim.evaluator_name = sim_eval_name;
    if (sim_label_opt->count()) sim.label = sim_label;
    if (sim_out_model_opt->count()) sim.out_model = sim_out_model;
    if (sim_out_tokens_opt->count()) sim.out_tokens = sim_out_tokens;
    action = [&] { return cmd_simulate(sim); };
  });

  // calibrate
  CalibrateConfig cal;
  std::string cal_side = "one";
  auto* calibrate = app.add_subcommand("calibrate", "Calibrate a detection threshold on null traces");
  calibrate->add_option("--null", cal.null_traces, "Null-source trace JSONL")->required();
  calibrate->add_option("--fpr", cal.fpr, "Target false-positive rate")->capture_default_str();
  calibrate->add_option("--sided", cal_side, "one or two")->check(CLI::IsMember(kSides))->capture_default_str();
  calibrate->add_option("--out", cal.out, "Profile JSON output")->capture_default_str();
  calibrate->callback([&] {
    cal.sidedness = parse_sidedness(cal_side);
    action = [&] { return cmd_calibrate(cal); };
  });

  // detect
  DetectConfig det;
  std::string det_profile, det_null, det_side = "one";
  auto* detect = app.add_subcommand("detect", "Run the detection test over a trace file");
  detect->add_option("--traces", det.traces, "Trace JSONL to classify")->required();
  auto* det_profile_opt = detect->add_option("--profile", det_profile, "Calibration profile JSON");
  auto* det_null_opt = detect->add_option("--null", det_null, "Null traces for on-the-fly calibration");
  detect->add_option("--fpr", det.fpr, "Target FPR for on-the-fly calibration")->capture_default_str();
  detect->add_option("--sided", det_side, "one or two")->check(CLI::IsMember(kSides))->capture_default_str();
  detect->add_option("--budget", det.budgets, "FPR budgets for TPR@FPR (default: the profile target)")->delimiter(',');
  detect->add_option("--out", det.out, "Report JSON output")->capture_default_str();
  detect->callback([&] {
    if (det_profile_opt->count()) det.profile = det_profile;
    if (det_null_opt->count()) det.null_traces = det_null;
    det.sidedness = parse_sidedness(det_side);
    action = [&] { return cmd_detect(det); };
  });

  // attribute
  AttributeConfig att;
  auto* attribute = app.add_subcommand("attribute", "Attribute texts to model set A or set B");
  attribute->add_option("--set-a", att.set_a, "Model JSON files of set A")->required()->delimiter(',');
  attribute->add_option("--set-b", att.set_b, "Model JSON files of set B")->required()->delimiter(',');
  attribute->add_option("--texts", att.texts, "Token JSONL of texts to attribute")->required();
  attribute->add_option("--out", att.out, "Report JSON output")->capture_default_str();
  attribute->callback([&] { action = [&] { return cmd_attribute(att); }; });

  // lab
  LabConfig lab;
  std::string lab_suite, lab_gen, lab_eval;
  std::size_t lab_trials = 0;
  std::vector<std::size_t> lab_ns;
  std::vector<double> lab_ts;
  auto* labcmd = app.add_subcommand("lab", "Run a simulation suite or an explicit tail grid");
  auto* suite_opt = labcmd->add_option("--suite", lab_suite, "Named suite")->check(CLI::IsMember(suite_names()));
  auto* gen_opt = labcmd->add_option("--generator", lab_gen, "Generator model JSON for an explicit grid");
  auto* eval_opt = labcmd->add_option("--evaluator", lab_eval, "Evaluator model JSON (default: the generator)");
  labcmd->add_option("--seed", lab.seed, "Master seed")->capture_default_str();
  auto* trials_opt = labcmd->add_option("--trials", lab_trials, "Monte-Carlo trials per point");
  auto* ns_opt = labcmd->add_option("--n-grid", lab_ns, "Comma-separated string lengths")->delimiter(',');
  auto* ts_opt = labcmd->add_option("--t", lab_ts, "Comma-separated deviation thresholds")->delimiter(',');
  labcmd->add_flag("--exact-oracle", lab.exact_oracle, "Also compute exact tails by enumeration");
  labcmd->add_flag("--plot", lab.plot, "Write an SVG next to the JSON report");
  labcmd->add_option("--out", lab.out, "Report JSON output")->capture_default_str();
  labcmd->callback([&] {
    if (suite_opt->count()) lab.suite = lab_suite;
    if (gen_opt->count()) lab.generator = lab_gen;
    if (eval_opt->count()) lab.evaluator = lab_eval;
    if (trials_opt->count()) lab.trials = lab_trials;
    if (ns_opt->count()) lab.n_grid = lab_ns;
    if (ts_opt->count()) lab.t_grid = lab_ts;
    action = [&] { return cmd_lab(lab); };
  });

  // metrics
  MetricsConfig met;
  std::string met_scores;
  auto* metrics = app.add_subcommand("metrics", "AUROC and TPR at fixed FPR for labeled traces or raw scores");
  metrics->add_option("--traces", met.traces, "Trace JSONL files, one table column each")->delimiter(',');
  auto* scores_opt = metrics->add_option("--scores", met_scores, "JSON {\"positives\":[...],\"negatives\":[...]}");
  metrics->add_option("--budget", met.budgets, "FPR budgets")->delimiter(',')->capture_default_str();
  metrics->add_option("--out", met.out, "Metrics JSON output")->capture_default_str();
  metrics->callback([&] {
    if (scores_opt->count()) met.scores = met_scores;
    action = [&] { return cmd_metrics(met); };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  } catch (const DomainError& e) {
    err << "perplex: " << e.what() << "\n";
    return kExitUsage;
  }

  if (print_config) {
    out << app.config_to_str(true, false);
    return 0;
  }

  try {
    check_thread_env();
    CommandOutput result = action();
    write_outputs(result.files);
    out << result.table;
    for (const auto& file : result.files) out << "wrote " << file.target.string() << "\n";
    return 0;
  } catch (const DomainError& e) {
    err << "perplex: " << e.what() << "\n";
    return kExitUsage;
  } catch (const GuardError& e) {
    err << "perplex: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "perplex: " << e.what() << "\n";
    return kExitIo;
  }
}

}  // namespace perplex::cli
