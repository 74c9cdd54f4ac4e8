#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "perplex/seqmodel.hpp"

namespace perplex {

enum class Decision {
  RejectNull,  // attribute to set A / conclude the evaluator wrote the text
  RetainNull,
  CertainNotA,  // a zero-probability token was observed under the candidate(s)
};

enum class Sidedness { OneSided, TwoSided };

std::string_view to_string(Decision decision);
std::string_view to_string(Sidedness sidedness);
Sidedness parse_sidedness(std::string_view text);

struct TestOutcome {
  Decision decision = Decision::RetainNull;
  // Detection: log-perplexity minus average entropy.
  // Attribution: best mean NLL in A minus best mean NLL in B.
  double statistic = 0.0;
  std::optional<double> threshold;
  std::map<std::string, double> per_model_nll;
  std::size_t n_scored = 0;
};

struct NamedModel {
  std::string id;
  std::shared_ptr<const SequentialModel> model;
};

// Set-versus-set attribution. Null: a model in set_b generated the text.
// Rejects iff some A model has a strictly smaller mean NLL than every B model.
// Models with an infinite NLL drop out of contention; if every A model drops
// out the decision is CertainNotA.
TestOutcome attribution_test(std::span<const NamedModel> set_a, std::span<const NamedModel> set_b,
                             const TokenSequence& text);

// The same rule applied to precomputed per-model mean NLLs (+inf allowed).
TestOutcome attribution_decision(const std::map<std::string, double>& set_a_nll,
                                 const std::map<std::string, double>& set_b_nll,
                                 std::size_t n_scored);

// Log-perplexity minus average entropy under the evaluator.
double detection_statistic(const SequentialModel& evaluator, const TokenSequence& text);

// RejectNull iff |statistic| <= t (two-sided) or statistic <= t (one-sided).
Decision detection_decision(double statistic, double t, Sidedness sidedness);

// Null: the evaluator did not generate the text.
TestOutcome detection_test(const SequentialModel& evaluator, const TokenSequence& text, double t,
                           Sidedness sidedness);

struct CalibrationProfile {
  double threshold = 0.0;
  double target_fpr = 0.0;
  double achieved_fpr = 0.0;
  std::size_t n_null = 0;
  Sidedness sidedness = Sidedness::OneSided;
};

// Empirical order-statistic threshold with no interpolation: the k-th smallest
// null statistic (|statistic| when two-sided), k = floor(target_fpr * n), lowered
// to the largest double whose empirical FPR stays within the target when ties
// straddle the k-th position.
CalibrationProfile calibrate_threshold(std::span<const double> null_statistics, double target_fpr,
                                       Sidedness sidedness);

std::string to_json(const CalibrationProfile& profile);
CalibrationProfile profile_from_json(const std::string& text);

}  // namespace perplex
