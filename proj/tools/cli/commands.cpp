#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <system_error>

#include <unistd.h>

#include <nlohmann/json.hpp>

#include "perplex/error.hpp"
#include "perplex/lab.hpp"
#include "perplex/lab_report.hpp"
#include "perplex/metrics.hpp"
#include "perplex/numfmt.hpp"
#include "perplex/parallel.hpp"
#include "perplex/seeding.hpp"
#include "perplex/suites.hpp"
#include "perplex/svg.hpp"
#include "perplex/traceio.hpp"
#include "token_file.hpp"

namespace perplex::cli {

namespace {

using ojson = nlohmann::ordered_json;

// Prompt tokens are drawn from their own stream so that runs with the same
// seed share prefixes no matter which generator continues them.
constexpr std::uint64_t kPromptStream = 0x70726f6d7074;

std::string read_file(const path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error("cannot open " + file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string pad_left(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string rate(std::size_t hits, std::size_t total) {
  return total == 0 ? "n/a" : format_fixed(static_cast<double>(hits) / static_cast<double>(total), 4);
}

// A rate, or the string "n/a" when its class is missing.
ojson rate_json(std::size_t hits, std::size_t total) {
  if (total == 0) return "n/a";
  return static_cast<double>(hits) / static_cast<double>(total);
}

void check_fpr(double fpr, const char* flag) {
  if (!(fpr > 0.0 && fpr < 1.0)) throw DomainError(std::string(flag) + " must lie in (0, 1)");
}

MarkovModel build_generator(const SimulateConfig& c) {
  if (c.model) return load_model(c.model->string());
  const Alphabet alphabet(c.alphabet);
  if (c.uniform) return MarkovModel::uniform(alphabet, c.order);
  return random_markov(alphabet, c.order, c.concentration, c.epsilon, c.model_seed);
}

std::vector<Token> sample_prompt(std::size_t alphabet, std::size_t len, std::uint64_t seed,
                                 std::size_t index) {
  Rng rng(mix_seed(mix_seed(seed, kPromptStream), index));
  std::vector<Token> prompt(len);
  for (auto& token : prompt) {
    const auto k = static_cast<std::size_t>(rng.uniform() * static_cast<double>(alphabet));
    token = static_cast<Token>(std::min(k, alphabet - 1));
  }
  return prompt;
}

struct Summary {
  double mean = 0.0;
  double min = std::numeric_limits<double>::infinity();
  double max = -std::numeric_limits<double>::infinity();
  std::size_t finite = 0;
};

Summary summarize_statistics(const std::vector<double>& values) {
  Summary s;
  double sum = 0.0;
  for (const double v : values) {
    if (!std::isfinite(v)) continue;
    sum += v;
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
    ++s.finite;
  }
  if (s.finite > 0) s.mean = sum / static_cast<double>(s.finite);
  return s;
}

std::vector<double> trace_statistics(const std::vector<LogProbTrace>& traces) {
  std::vector<double> out(traces.size());
  parallel_for(traces.size(), [&](std::size_t i) { out[i] = trace_statistic(traces[i]); });
  return out;
}

ojson profile_json(const CalibrationProfile& profile) { return ojson::parse(to_json(profile)); }

std::string describe_profile(const CalibrationProfile& p) {
  return "threshold " + format_exact(p.threshold) + " (" + std::string(to_string(p.sidedness)) +
         "-sided, target FPR " + format_short(p.target_fpr) + ", achieved " +
         format_fixed(p.achieved_fpr, 4) + " on " + std::to_string(p.n_null) + " nulls)";
}

ojson metric_json(const ScoreSet& scores, const std::vector<double>& budgets) {
  ojson out;
  out["auroc"] = auroc(scores);
  ojson tpr = ojson::object();
  for (const double b : budgets) tpr[format_short(b)] = tpr_at_fpr(scores, b);
  out["tpr_at_fpr"] = std::move(tpr);
  return out;
}

ScoreSet scores_from_traces(const std::vector<LogProbTrace>& traces) {
  ScoreSet scores;
  for (const auto& trace : traces) {
    if (trace.label == TraceLabel::EvaluatorSource) scores.positives.push_back(detection_score(trace));
    if (trace.label == TraceLabel::NullSource) scores.negatives.push_back(detection_score(trace));
  }
  return scores;
}

std::vector<double> number_list(const nlohmann::json& doc, const char* field, const path& file) {
  if (!doc.contains(field) || !doc.at(field).is_array()) {
    throw FormatError(0, field, file.string() + ": expected an array of numbers");
  }
  std::vector<double> out;
  for (const auto& v : doc.at(field)) {
    if (!v.is_number()) throw FormatError(0, field, file.string() + ": expected an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

void write_outputs(const std::vector<OutputFile>& files) {
  std::vector<path> temps;
  auto discard = [&] {
    std::error_code ignored;
    for (const auto& t : temps) {
      if (!t.empty()) std::filesystem::remove(t, ignored);
    }
  };
  auto write = [](const path& target, const std::string& content, const path& reported) {
    std::ofstream out(target, std::ios::binary | std::ios::trunc);
    out << content;
    out.close();
    if (!out) throw Error("cannot write " + reported.string());
  };
  // Devices and pipes (e.g. /dev/stdout) cannot be swapped by rename.
  auto special = [](const path& target) {
    return std::filesystem::exists(target) && !std::filesystem::is_regular_file(target);
  };
  try {
    for (const auto& file : files) {
      if (special(file.target)) {
        temps.emplace_back();
        continue;
      }
      if (file.target.has_parent_path()) std::filesystem::create_directories(file.target.parent_path());
      path temp = file.target;
      temp += ".tmp" + std::to_string(::getpid());
      temps.push_back(temp);
      write(temp, file.content, file.target);
    }
    for (std::size_t i = 0; i < files.size(); ++i) {
      if (temps[i].empty()) {
        write(files[i].target, files[i].content, files[i].target);
      } else {
        std::filesystem::rename(temps[i], files[i].target);
      }
    }
  } catch (const std::filesystem::filesystem_error& e) {
    discard();
    throw Error(e.what());
  } catch (...) {
    discard();
    throw;
  }
}

// --- validation ------------------------------------------------------------

void validate(const SimulateConfig& c) {
  if (c.n == 0) throw DomainError("--n must be at least 1");
  if (c.count == 0) throw DomainError("--count must be at least 1");
  if (c.model && c.uniform) throw DomainError("--model and --uniform are mutually exclusive");
  if (!c.model) {
    if (c.alphabet < 2) throw DomainError("--alphabet must be at least 2");
    double rows = 1.0;
    for (std::size_t i = 0; i < c.order; ++i) rows *= static_cast<double>(c.alphabet);
    if (rows > static_cast<double>(kMaxMarkovRows)) {
      throw DomainError("--alphabet^--order exceeds " + std::to_string(kMaxMarkovRows) + " rows");
    }
    if (!c.uniform) {
      if (!(c.concentration > 0.0) || !std::isfinite(c.concentration)) {
        throw DomainError("--concentration must be positive");
      }
      if (!(c.epsilon > 0.0 && c.epsilon <= 1.0 / static_cast<double>(c.alphabet))) {
        throw DomainError("--epsilon must lie in (0, 1/alphabet]");
      }
    }
  }
  if (c.generator_name.empty()) throw DomainError("--name must not be empty");
  if (c.evaluator_name && c.evaluator_name->empty()) throw DomainError("--evaluator-name must not be empty");
  if (c.label) parse_trace_label(*c.label);
}

void validate(const CalibrateConfig& c) {
  if (c.null_traces.empty()) throw DomainError("--null is required");
  check_fpr(c.fpr, "--fpr");
}

void validate(const DetectConfig& c) {
  if (c.traces.empty()) throw DomainError("--traces is required");
  if (c.profile && c.null_traces) throw DomainError("give either --profile or --null, not both");
  if (!c.profile && !c.null_traces) {
    throw DomainError("missing calibration input: pass --profile or --null");
  }
  check_fpr(c.fpr, "--fpr");
  for (const double b : c.budgets) check_fpr(b, "--budget");
}

void validate(const AttributeConfig& c) {
  if (c.set_a.empty() || c.set_b.empty()) throw DomainError("--set-a and --set-b each need a model");
  if (c.texts.empty()) throw DomainError("--texts is required");
  std::set<std::string> seen;
  for (const auto* set : {&c.set_a, &c.set_b}) {
    for (const auto& file : *set) {
      const std::string id = file.stem().string();
      if (!seen.insert(id).second) {
        throw DomainError("overlapping model sets: id '" + id + "' appears more than once");
      }
    }
  }
}

void validate(const LabConfig& c) {
  if (c.suite && c.generator) throw DomainError("give either --suite or --generator, not both");
  if (!c.suite && !c.generator) throw DomainError("lab needs --suite or --generator");
  if (c.suite) {
    const auto names = suite_names();
    if (std::find(names.begin(), names.end(), *c.suite) == names.end()) {
      throw DomainError("unknown lab suite '" + *c.suite + "'");
    }
  } else {
    if (!c.n_grid || !c.t_grid) throw DomainError("an explicit grid needs --n-grid and --t");
  }
  const bool curves = c.suite && (*c.suite == "prop1-default" || *c.suite == "prop2-default");
  if (c.trials && *c.trials < (curves ? 500u : 100u)) {
    throw DomainError(std::string("--trials must be at least ") + (curves ? "500" : "100"));
  }
  if (c.n_grid) {
    if (c.n_grid->empty()) throw DomainError("--n-grid must not be empty");
    for (const auto n : *c.n_grid) {
      if (n == 0) throw DomainError("--n-grid lengths must be positive");
    }
  }
  if (c.t_grid) {
    if (c.t_grid->empty()) throw DomainError("--t must not be empty");
    for (const double t : *c.t_grid) {
      if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("--t values must be finite and non-negative");
    }
  }
}

void validate(const MetricsConfig& c) {
  if (c.traces.empty() && !c.scores) throw DomainError("metrics needs --traces or --scores");
  if (c.budgets.empty()) throw DomainError("--budget list must not be empty");
  for (const double b : c.budgets) check_fpr(b, "--budget");
}

// --- simulate --------------------------------------------------------------

CommandOutput cmd_simulate(const SimulateConfig& c) {
  validate(c);
  const MarkovModel generator = build_generator(c);
  std::optional<MarkovModel> evaluator_storage;
  if (c.evaluator) evaluator_storage = load_model(c.evaluator->string());
  const MarkovModel& evaluator = evaluator_storage ? *evaluator_storage : generator;
  if (evaluator.alphabet() != generator.alphabet()) {
    throw DomainError("evaluator and generator alphabets differ");
  }

  const std::string evaluator_name =
      c.evaluator_name.value_or(c.evaluator ? c.evaluator->stem().string() : c.generator_name);
  const TraceLabel label = c.label ? parse_trace_label(*c.label)
                                   : (c.evaluator ? TraceLabel::NullSource : TraceLabel::EvaluatorSource);
  const std::size_t k = generator.alphabet().size();

  std::vector<TokenSequence> texts(c.count);
  std::vector<LogProbTrace> traces(c.count);
  parallel_for(c.count, [&](std::size_t i) {
    const auto prompt = sample_prompt(k, c.prompt_len, c.seed, i);
    texts[i] = generate(generator, prompt, c.n, mix_seed(c.seed, i));
    traces[i] = make_trace(c.generator_name + "-" + std::to_string(i), label, evaluator_name,
                           evaluator, texts[i]);
  });

  CommandOutput out;
  std::ostringstream trace_text;
  write_traces(trace_text, traces);
  out.files.push_back({c.out, trace_text.str()});
  if (c.out_model) out.files.push_back({*c.out_model, to_json(generator)});
  if (c.out_tokens) {
    std::string tokens;
    for (std::size_t i = 0; i < texts.size(); ++i) {
      tokens += to_jsonl(TokenRecord{traces[i].id, c.generator_name, texts[i]}) + "\n";
    }
    out.files.push_back({*c.out_tokens, std::move(tokens)});
  }

  const auto stats = trace_statistics(traces);
  const Summary s = summarize_statistics(stats);
  const std::size_t zero = static_cast<std::size_t>(
      std::count_if(traces.begin(), traces.end(), [](const auto& t) { return t.zero_probability; }));
  std::string& table = out.table;
  table += "simulated " + std::to_string(c.count) + " trace(s) of " + std::to_string(c.n) +
           " tokens (prompt " + std::to_string(c.prompt_len) + ") from '" + c.generator_name +
           "' scored by '" + evaluator_name + "'\n";
  table += "label " + std::string(to_string(label)) + "    alphabet " + std::to_string(k) +
           "    seed " + std::to_string(c.seed) + "\n";
  if (s.finite > 0) {
    table += "statistic  mean " + format_fixed(s.mean, 6) + "  min " + format_fixed(s.min, 6) +
             "  max " + format_fixed(s.max, 6) + "\n";
  }
  table += "zero-probability traces " + std::to_string(zero) + "\n";
  return out;
}

// --- calibrate -------------------------------------------------------------

CommandOutput cmd_calibrate(const CalibrateConfig& c) {
  validate(c);
  const auto nulls = load_traces(c.null_traces);
  const auto stats = trace_statistics(nulls);
  const CalibrationProfile profile = calibrate_threshold(stats, c.fpr, c.sidedness);
  CommandOutput out;
  out.files.push_back({c.out, to_json(profile) + "\n"});
  out.table = "calibrated " + describe_profile(profile) + "\n";
  return out;
}

// --- detect ----------------------------------------------------------------

CommandOutput cmd_detect(const DetectConfig& c) {
  validate(c);
  CalibrationProfile profile;
  if (c.profile) {
    profile = profile_from_json(read_file(*c.profile));
  } else {
    const auto nulls = load_traces(*c.null_traces);
    profile = calibrate_threshold(trace_statistics(nulls), c.fpr, c.sidedness);
  }
  const auto traces = load_traces(c.traces);
  if (traces.empty()) throw DomainError("trace file " + c.traces.string() + " holds no traces");

  std::vector<TestOutcome> outcomes(traces.size());
  parallel_for(traces.size(), [&](std::size_t i) { outcomes[i] = detect_trace(traces[i], profile); });

  std::size_t tp = 0, fn = 0, fp = 0, tn = 0, unlabeled = 0, certain = 0;
  ojson verdicts = ojson::array();
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const TestOutcome& o = outcomes[i];
    const bool flagged = o.decision == Decision::RejectNull;
    if (o.decision == Decision::CertainNotA) ++certain;
    switch (traces[i].label) {
      case TraceLabel::EvaluatorSource: ++(flagged ? tp : fn); break;
      case TraceLabel::NullSource: ++(flagged ? fp : tn); break;
      case TraceLabel::Unknown: ++unlabeled; break;
    }
    ojson v;
    v["id"] = traces[i].id;
    v["label"] = to_string(traces[i].label);
    v["decision"] = to_string(o.decision);
    v["statistic"] = o.statistic;
    v["score"] = -o.statistic;
    verdicts.push_back(std::move(v));
  }

  const std::vector<double> budgets = c.budgets.empty() ? std::vector<double>{profile.target_fpr} : c.budgets;
  const ScoreSet scores = scores_from_traces(traces);
  const bool both = !scores.positives.empty() && !scores.negatives.empty();

  ojson summary;
  summary["traces"] = traces.size();
  summary["tp"] = tp;
  summary["fn"] = fn;
  summary["fp"] = fp;
  summary["tn"] = tn;
  summary["unlabeled"] = unlabeled;
  summary["certain_not_a"] = certain;
  summary["tpr"] = rate_json(tp, tp + fn);
  summary["fpr"] = rate_json(fp, fp + tn);
  if (fp + tn > 0) {
    const WilsonInterval ci = wilson_interval(fp, fp + tn);
    summary["fpr_ci"] = ojson::array({ci.low, ci.high});
  }
  if (both) {
    const ojson m = metric_json(scores, budgets);
    summary["auroc"] = m["auroc"];
    summary["tpr_at_fpr"] = m["tpr_at_fpr"];
  } else {
    summary["auroc"] = "n/a";
    summary["tpr_at_fpr"] = "n/a";
  }

  ojson doc;
  doc["traces_file"] = c.traces.string();
  doc["profile"] = profile_json(profile);
  doc["summary"] = summary;
  doc["verdicts"] = std::move(verdicts);

  CommandOutput out;
  out.files.push_back({c.out, doc.dump(2) + "\n"});

  std::string& t = out.table;
  t += "detect: " + std::to_string(traces.size()) + " traces, " + describe_profile(profile) + "\n\n";
  t += pad_right("", 18) + pad_left("flagged", 10) + pad_left("not flagged", 13) + "\n";
  t += pad_right("evaluator_source", 18) + pad_left(std::to_string(tp), 10) + pad_left(std::to_string(fn), 13) + "\n";
  t += pad_right("null_source", 18) + pad_left(std::to_string(fp), 10) + pad_left(std::to_string(tn), 13) + "\n";
  t += "unlabeled " + std::to_string(unlabeled) + "    certain_not_a " + std::to_string(certain) + "\n\n";
  t += "TPR   " + rate(tp, tp + fn) + "\n";
  t += "FPR   " + rate(fp, fp + tn);
  if (fp + tn > 0) {
    const WilsonInterval ci = wilson_interval(fp, fp + tn);
    t += "  95% CI [" + format_fixed(ci.low, 4) + ", " + format_fixed(ci.high, 4) + "]";
  }
  t += "\nAUROC " + (both ? format_fixed(summary["auroc"].get<double>(), 4) : std::string("n/a")) + "\n";
  for (const double b : budgets) {
    t += "TPR@FPR=" + format_short(b) + " " +
         (both ? format_fixed(summary["tpr_at_fpr"][format_short(b)].get<double>(), 4) : std::string("n/a")) +
         "\n";
  }
  return out;
}

// --- attribute -------------------------------------------------------------

CommandOutput cmd_attribute(const AttributeConfig& c) {
  validate(c);
  auto load_set = [](const std::vector<path>& files) {
    std::vector<NamedModel> set;
    for (const auto& file : files) {
      set.push_back({file.stem().string(), std::make_shared<const MarkovModel>(load_model(file.string()))});
    }
    return set;
  };
  const auto set_a = load_set(c.set_a);
  const auto set_b = load_set(c.set_b);
  const Alphabet alphabet = set_a.front().model->alphabet();
  for (const auto* set : {&set_a, &set_b}) {
    for (const auto& m : *set) {
      if (m.model->alphabet() != alphabet) throw DomainError("model '" + m.id + "' has a different alphabet");
    }
  }
  const auto records = load_token_file(c.texts);
  for (const auto& r : records) r.text.validate(alphabet);

  std::vector<TestOutcome> outcomes(records.size());
  parallel_for(records.size(),
               [&](std::size_t i) { outcomes[i] = attribution_test(set_a, set_b, records[i].text); });

  auto member = [](const std::vector<NamedModel>& set, const std::string& id) {
    return std::any_of(set.begin(), set.end(), [&](const NamedModel& m) { return m.id == id; });
  };

  std::map<Decision, std::size_t> decisions;
  std::size_t a_texts = 0, a_missed = 0, b_texts = 0, b_rejected = 0;
  ojson verdicts = ojson::array();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const TestOutcome& o = outcomes[i];
    ++decisions[o.decision];
    const bool rejected = o.decision == Decision::RejectNull;
    std::optional<std::string> truth;
    if (records[i].generator) {
      if (member(set_a, *records[i].generator)) {
        truth = "A";
        ++a_texts;
        if (!rejected) ++a_missed;
      } else if (member(set_b, *records[i].generator)) {
        truth = "B";
        ++b_texts;
        if (rejected) ++b_rejected;
      }
    }
    ojson v;
    v["id"] = records[i].id;
    v["truth"] = truth ? ojson(*truth) : ojson(nullptr);
    v["decision"] = to_string(o.decision);
    v["statistic"] = o.statistic;
    v["per_model_nll"] = o.per_model_nll;
    verdicts.push_back(std::move(v));
  }

  ojson summary;
  summary["texts"] = records.size();
  for (const Decision d : {Decision::RejectNull, Decision::RetainNull, Decision::CertainNotA}) {
    summary[std::string(to_string(d))] = decisions[d];
  }
  if (b_texts > 0) {
    const WilsonInterval ci = wilson_interval(b_rejected, b_texts);
    summary["b_texts"] = b_texts;
    summary["type1"] = static_cast<double>(b_rejected) / static_cast<double>(b_texts);
    summary["type1_ci"] = ojson::array({ci.low, ci.high});
  }
  if (a_texts > 0) {
    const WilsonInterval ci = wilson_interval(a_missed, a_texts);
    summary["a_texts"] = a_texts;
    summary["type2"] = static_cast<double>(a_missed) / static_cast<double>(a_texts);
    summary["type2_ci"] = ojson::array({ci.low, ci.high});
  }

  ojson doc;
  ojson ids_a = ojson::array(), ids_b = ojson::array();
  for (const auto& m : set_a) ids_a.push_back(m.id);
  for (const auto& m : set_b) ids_b.push_back(m.id);
  doc["set_a"] = std::move(ids_a);
  doc["set_b"] = std::move(ids_b);
  doc["summary"] = summary;
  doc["verdicts"] = std::move(verdicts);

  CommandOutput out;
  out.files.push_back({c.out, doc.dump(2) + "\n"});
  std::string& t = out.table;
  t += "attribute: " + std::to_string(records.size()) + " texts, " + std::to_string(set_a.size()) +
       " model(s) in A vs " + std::to_string(set_b.size()) + " in B\n";
  t += "reject_null " + std::to_string(decisions[Decision::RejectNull]) + "    retain_null " +
       std::to_string(decisions[Decision::RetainNull]) + "    certain_not_a " +
       std::to_string(decisions[Decision::CertainNotA]) + "\n";
  if (b_texts > 0) t += "type I  " + rate(b_rejected, b_texts) + "  over " + std::to_string(b_texts) + " B texts\n";
  if (a_texts > 0) t += "type II " + rate(a_missed, a_texts) + "  over " + std::to_string(a_texts) + " A texts\n";
  if (a_texts + b_texts == 0) t += "no labeled texts; error rates omitted\n";
  return out;
}

// --- lab -------------------------------------------------------------------

CommandOutput cmd_lab(const LabConfig& c) {
  validate(c);
  LabReport report;
  if (c.suite) {
    SuiteOptions options;
    options.master_seed = c.seed;
    options.trials = c.trials;
    options.n_grid = c.n_grid;
    options.t_grid = c.t_grid;
    options.exact_oracle = c.exact_oracle;
    report = run_suite(*c.suite, options);
  } else {
    const MarkovModel generator = load_model(c.generator->string());
    std::optional<MarkovModel> evaluator;
    if (c.evaluator) evaluator = load_model(c.evaluator->string());
    const MarkovModel& eval = evaluator ? *evaluator : generator;
    if (eval.alphabet() != generator.alphabet()) throw DomainError("evaluator and generator alphabets differ");
    report = run_tail_grid("custom", generator, eval, *c.n_grid, *c.t_grid, c.trials.value_or(1000),
                           c.seed, c.exact_oracle);
    report.configuration = "generator " + c.generator->filename().string() + ", evaluator " +
                           (c.evaluator ? c.evaluator->filename().string() : std::string("= generator"));
  }

  CommandOutput out;
  out.files.push_back({c.out, to_json(report)});
  if (c.plot) {
    path svg = c.out;
    svg.replace_extension(".svg");
    const auto charts = report_charts(report);
    out.files.push_back({svg, render_svg(charts)});
  }
  out.table = render_table(report);
  return out;
}

// --- metrics ---------------------------------------------------------------

CommandOutput cmd_metrics(const MetricsConfig& c) {
  validate(c);
  std::vector<std::pair<std::string, ScoreSet>> columns;
  std::set<std::string> names;
  auto add = [&](const path& file, ScoreSet scores) {
    std::string name = file.stem().string();
    if (!names.insert(name).second) {
      name = file.string();
      names.insert(name);
    }
    if (scores.positives.empty() || scores.negatives.empty()) {
      throw DomainError(file.string() + ": metrics need both evaluator_source and null_source scores");
    }
    columns.emplace_back(std::move(name), std::move(scores));
  };
  for (const auto& file : c.traces) add(file, scores_from_traces(load_traces(file)));
  if (c.scores) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(read_file(*c.scores));
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(0, "", c.scores->string() + ": " + e.what());
    }
    add(*c.scores, ScoreSet{number_list(doc, "positives", *c.scores), number_list(doc, "negatives", *c.scores)});
  }

  ojson doc = ojson::object();
  std::vector<ojson> results;
  for (const auto& [name, scores] : columns) {
    ojson m = metric_json(scores, c.budgets);
    m["n_positive"] = scores.positives.size();
    m["n_negative"] = scores.negatives.size();
    results.push_back(m);
    doc[name] = std::move(m);
  }

  CommandOutput out;
  out.files.push_back({c.out, doc.dump(2) + "\n"});

  std::size_t width = 10;
  for (const auto& [name, scores] : columns) width = std::max(width, name.size() + 2);
  std::string& t = out.table;
  t += pad_right("metric", 16);
  for (const auto& [name, scores] : columns) t += pad_left(name, width);
  t += "\n";
  for (const double b : c.budgets) {
    t += pad_right("TPR@FPR=" + format_short(b), 16);
    for (const auto& r : results) t += pad_left(format_fixed(r["tpr_at_fpr"][format_short(b)].get<double>(), 4), width);
    t += "\n";
  }
  t += pad_right("AUROC", 16);
  for (const auto& r : results) t += pad_left(format_fixed(r["auroc"].get<double>(), 4), width);
  t += "\n";
  return out;
}

}  // namespace perplex::cli
