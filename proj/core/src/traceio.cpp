#include "perplex/traceio.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include <nlohmann/json.hpp>

#include "perplex/error.hpp"
#include "perplex/infometrics.hpp"
#include "perplex/numfmt.hpp"

namespace perplex {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Slack on the ln K entropy bound for values that went through 17-digit text.
constexpr double kEntropySlack = 1e-12;

using json = nlohmann::json;

const json& require(const json& obj, const char* field) {
  if (!obj.contains(field)) throw FormatError(0, field, "missing required field");
  return obj.at(field);
}

std::size_t require_count(const json& obj, const char* field) {
  const json& v = require(obj, field);
  if (!v.is_number_unsigned()) throw FormatError(0, field, "expected a non-negative integer");
  return v.get<std::size_t>();
}

LogProbTrace trace_from_json(const json& doc) {
  if (!doc.is_object()) throw FormatError(0, "", "trace line must be a JSON object");
  LogProbTrace trace;

  const json& id = require(doc, "id");
  if (!id.is_string()) throw FormatError(0, "id", "expected a string");
  trace.id = id.get<std::string>();

  const json& label = require(doc, "label");
  if (!label.is_string()) throw FormatError(0, "label", "expected a string");
  try {
    trace.label = parse_trace_label(label.get<std::string>());
  } catch (const DomainError& e) {
    throw FormatError(0, "label", e.what());
  }

  const json& name = require(doc, "evaluator_name");
  if (!name.is_string()) throw FormatError(0, "evaluator_name", "expected a string");
  trace.evaluator_name = name.get<std::string>();

  trace.prompt_len = require_count(doc, "prompt_len");
  if (doc.contains("alphabet_size") && !doc.at("alphabet_size").is_null()) {
    trace.alphabet_size = require_count(doc, "alphabet_size");
  }
  if (doc.contains("zero_probability")) {
    const json& flag = doc.at("zero_probability");
    if (!flag.is_boolean()) throw FormatError(0, "zero_probability", "expected a boolean");
    trace.zero_probability = flag.get<bool>();
  }

  const json& steps = require(doc, "steps");
  if (!steps.is_array()) throw FormatError(0, "steps", "expected an array");
  trace.steps.reserve(steps.size());
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const json& step = steps[i];
    const std::string where = "steps[" + std::to_string(i) + "]";
    if (!step.is_object()) throw FormatError(0, where, "expected an object");
    if (!step.contains("nll")) throw FormatError(0, where + ".nll", "missing required field");
    if (!step.contains("step_entropy")) {
      throw FormatError(0, where + ".step_entropy", "missing required field");
    }
    const json& nll = step.at("nll");
    const json& h = step.at("step_entropy");
    TraceStep s;
    if (nll.is_null()) {
      s.nll = kInf;
    } else if (nll.is_number()) {
      s.nll = nll.get<double>();
    } else {
      throw FormatError(0, where + ".nll", "expected a number or null");
    }
    if (!h.is_number()) throw FormatError(0, where + ".step_entropy", "expected a number");
    s.entropy = h.get<double>();
    trace.steps.push_back(s);
  }
  return trace;
}

void check_header(const std::string& line, std::size_t line_no) {
  json doc;
  try {
    doc = json::parse(line);
  } catch (const json::parse_error& e) {
    throw FormatError(line_no, "", std::string("malformed header: ") + e.what());
  }
  if (!doc.is_object() || doc.value("format", "") != "perplex-trace") {
    throw FormatError(line_no, "format", "expected the perplex-trace header line");
  }
  if (!doc.contains("version") || doc.at("version") != 1) {
    throw FormatError(line_no, "version", "unsupported trace format version");
  }
  if (doc.value("log_base", "") != "e") {
    throw FormatError(line_no, "log_base", "only natural-log traces are supported");
  }
}

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

}  // namespace

std::string_view to_string(TraceLabel label) {
  switch (label) {
    case TraceLabel::NullSource: return "null_source";
    case TraceLabel::EvaluatorSource: return "evaluator_source";
    case TraceLabel::Unknown: return "unknown";
  }
  return "unknown";
}

TraceLabel parse_trace_label(std::string_view text) {
  if (text == "null_source") return TraceLabel::NullSource;
  if (text == "evaluator_source") return TraceLabel::EvaluatorSource;
  if (text == "unknown") return TraceLabel::Unknown;
  throw DomainError("label must be null_source, evaluator_source or unknown");
}

void validate(const LogProbTrace& trace) {
  if (trace.steps.size() <= trace.prompt_len) {
    throw FormatError(0, "steps", "no scored steps after prompt_len");
  }
  if (trace.alphabet_size && *trace.alphabet_size < 2) {
    throw FormatError(0, "alphabet_size", "must be at least 2");
  }
  const double entropy_cap = trace.alphabet_size
                                 ? std::log(static_cast<double>(*trace.alphabet_size)) * (1.0 + kEntropySlack) + kEntropySlack
                                 : kInf;
  bool scored_infinite = false;
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const TraceStep& s = trace.steps[i];
    const std::string where = "steps[" + std::to_string(i) + "]";
    if (std::isnan(s.nll) || s.nll < 0.0) throw FormatError(0, where + ".nll", "negative or NaN NLL");
    if (std::isinf(s.nll) && i >= trace.prompt_len) scored_infinite = true;
    if (!std::isfinite(s.entropy) || s.entropy < 0.0) {
      throw FormatError(0, where + ".step_entropy", "entropy must be finite and non-negative");
    }
    if (s.entropy > entropy_cap) {
      throw FormatError(0, where + ".step_entropy", "entropy exceeds ln(alphabet_size)");
    }
  }
  if (scored_infinite != trace.zero_probability) {
    throw FormatError(0, "zero_probability",
                      scored_infinite ? "infinite NLL present but flag not set"
                                      : "flag set but every scored NLL is finite");
  }
}

std::vector<LogProbTrace> parse_traces(std::istream& in) {
  std::vector<LogProbTrace> traces;
  std::string line;
  std::size_t line_no = 0;
  bool seen_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    if (!seen_header) {
      check_header(line, line_no);
      seen_header = true;
      continue;
    }
    try {
      json doc;
      try {
        doc = json::parse(line);
      } catch (const json::parse_error& e) {
        throw FormatError(0, "", std::string("malformed JSON: ") + e.what());
      }
      LogProbTrace trace = trace_from_json(doc);
      validate(trace);
      traces.push_back(std::move(trace));
    } catch (const FormatError& e) {
      throw FormatError(line_no, e.field(), e.detail());
    }
  }
  return traces;
}

std::vector<LogProbTrace> load_traces(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open trace file " + path.string());
  return parse_traces(in);
}

std::string to_jsonl(const LogProbTrace& trace) {
  std::string out = "{";
  out += "\"id\":" + json_quote(trace.id);
  out += ",\"label\":" + json_quote(std::string(to_string(trace.label)));
  out += ",\"evaluator_name\":" + json_quote(trace.evaluator_name);
  if (trace.alphabet_size) out += ",\"alphabet_size\":" + std::to_string(*trace.alphabet_size);
  out += ",\"prompt_len\":" + std::to_string(trace.prompt_len);
  out += std::string(",\"zero_probability\":") + (trace.zero_probability ? "true" : "false");
  out += ",\"steps\":[";
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    if (i) out += ",";
    const TraceStep& s = trace.steps[i];
    out += "{\"nll\":" + (std::isinf(s.nll) ? std::string("null") : format_exact(s.nll));
    out += ",\"step_entropy\":" + format_exact(s.entropy) + "}";
  }
  out += "]}";
  return out;
}

void write_traces(std::ostream& out, std::span<const LogProbTrace> traces) {
  out << kTraceHeader << '\n';
  for (const auto& trace : traces) out << to_jsonl(trace) << '\n';
}

LogProbTrace make_trace(std::string id, TraceLabel label, std::string evaluator_name,
                        const SequentialModel& evaluator, const TokenSequence& text) {
  text.validate(evaluator.alphabet());
  if (text.n_scored() == 0) throw DomainError("no tokens to score after the prompt");
  LogProbTrace trace;
  trace.id = std::move(id);
  trace.label = label;
  trace.evaluator_name = std::move(evaluator_name);
  trace.alphabet_size = evaluator.alphabet().size();
  trace.prompt_len = text.prompt_len;
  trace.steps.reserve(text.size());
  const std::span<const Token> tokens(text.tokens);
  for (std::size_t pos = 0; pos < tokens.size(); ++pos) {
    const auto context = tokens.first(pos);
    TraceStep step;
    step.nll = -evaluator.log_conditional(context)[tokens[pos]];
    step.entropy = entropy(evaluator.conditional(context));
    if (std::isinf(step.nll) && pos >= text.prompt_len) trace.zero_probability = true;
    trace.steps.push_back(step);
  }
  return trace;
}

double trace_statistic(const LogProbTrace& trace) {
  if (trace.steps.size() <= trace.prompt_len) throw DomainError("no scored steps after prompt_len");
  double nll = 0.0;
  double h = 0.0;
  for (std::size_t i = trace.prompt_len; i < trace.steps.size(); ++i) {
    nll += trace.steps[i].nll;
    h += trace.steps[i].entropy;
  }
  if (std::isinf(nll)) return kInf;
  const double n = static_cast<double>(trace.n_scored());
  return nll / n - h / n;
}

double detection_score(const LogProbTrace& trace) { return -trace_statistic(trace); }

TestOutcome detect_trace(const LogProbTrace& trace, const CalibrationProfile& profile) {
  TestOutcome out;
  out.threshold = profile.threshold;
  out.n_scored = trace.n_scored();
  out.statistic = trace_statistic(trace);
  if (trace.zero_probability || std::isinf(out.statistic)) {
    out.decision = Decision::CertainNotA;
    out.statistic = kInf;
    out.per_model_nll[trace.evaluator_name] = kInf;
    return out;
  }
  double nll = 0.0;
  for (std::size_t i = trace.prompt_len; i < trace.steps.size(); ++i) nll += trace.steps[i].nll;
  out.per_model_nll[trace.evaluator_name] = nll / static_cast<double>(out.n_scored);
  out.decision = detection_decision(out.statistic, profile.threshold, profile.sidedness);
  return out;
}

}  // namespace perplex
