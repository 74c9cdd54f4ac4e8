#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "perplex/hypothesis.hpp"
#include "perplex/seqmodel.hpp"

namespace perplex {

// First line of every trace file.
inline constexpr std::string_view kTraceHeader =
    R"({"format":"perplex-trace","version":1,"log_base":"e"})";

enum class TraceLabel { NullSource, EvaluatorSource, Unknown };

std::string_view to_string(TraceLabel label);
TraceLabel parse_trace_label(std::string_view text);

struct TraceStep {
  double nll = 0.0;      // +infinity for a zero-probability token
  double entropy = 0.0;  // evaluator's conditional entropy at this position
};

// Evaluator-side record of one text: one step per token, the first prompt_len
// of which are excluded from the statistic.
struct LogProbTrace {
  std::string id;
  TraceLabel label = TraceLabel::Unknown;
  std::size_t prompt_len = 0;
  std::vector<TraceStep> steps;
  std::string evaluator_name;
  std::optional<std::size_t> alphabet_size;
  // Set iff some scored step has an infinite NLL.
  bool zero_probability = false;

  std::size_t n_scored() const noexcept { return steps.size() - prompt_len; }
};

// Throws FormatError (line 0) when an invariant fails.
void validate(const LogProbTrace& trace);

std::vector<LogProbTrace> parse_traces(std::istream& in);
std::vector<LogProbTrace> load_traces(const std::filesystem::path& path);

// One JSONL line (no trailing newline); floats at 17 significant digits and
// infinite NLLs written as null.
std::string to_jsonl(const LogProbTrace& trace);
void write_traces(std::ostream& out, std::span<const LogProbTrace> traces);

// Scores text under evaluator and records per-token NLL and step entropy.
LogProbTrace make_trace(std::string id, TraceLabel label, std::string evaluator_name,
                        const SequentialModel& evaluator, const TokenSequence& text);

// Mean NLL minus mean step entropy over the scored steps; +inf when a scored
// step has zero probability.
double trace_statistic(const LogProbTrace& trace);

// Larger means more evaluator-like: the negated statistic.
double detection_score(const LogProbTrace& trace);

TestOutcome detect_trace(const LogProbTrace& trace, const CalibrationProfile& profile);

}  // namespace perplex
