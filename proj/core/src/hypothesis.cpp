#include "perplex/hypothesis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "perplex/error.hpp"
#include "perplex/infometrics.hpp"
#include "perplex/numfmt.hpp"

namespace perplex {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double mean_nll(const SequentialModel& model, const TokenSequence& text) {
  const PathSums sums = scan_path(nullptr, model, text);
  return sums.infinite ? kInf : sums.nll / static_cast<double>(sums.n_scored);
}

double best_finite(const std::map<std::string, double>& nll) {
  double best = kInf;
  for (const auto& [id, value] : nll) {
    if (std::isfinite(value)) best = std::min(best, value);
  }
  return best;
}

}  // namespace

std::string_view to_string(Decision decision) {
  switch (decision) {
    case Decision::RejectNull: return "reject_null";
    case Decision::RetainNull: return "retain_null";
    case Decision::CertainNotA: return "certain_not_a";
  }
  return "unknown";
}

std::string_view to_string(Sidedness sidedness) {
  return sidedness == Sidedness::OneSided ? "one" : "two";
}

Sidedness parse_sidedness(std::string_view text) {
  if (text == "one") return Sidedness::OneSided;
  if (text == "two") return Sidedness::TwoSided;
  throw DomainError("sidedness must be 'one' or 'two'");
}

TestOutcome attribution_decision(const std::map<std::string, double>& set_a_nll,
                                 const std::map<std::string, double>& set_b_nll,
                                 std::size_t n_scored) {
  if (set_a_nll.empty() || set_b_nll.empty()) {
    throw DomainError("attribution needs non-empty model sets");
  }
  for (const auto& [id, value] : set_a_nll) {
    if (set_b_nll.contains(id)) throw DomainError("model '" + id + "' appears in both sets");
    if (std::isnan(value)) throw DomainError("NaN mean NLL for model '" + id + "'");
  }
  for (const auto& [id, value] : set_b_nll) {
    if (std::isnan(value)) throw DomainError("NaN mean NLL for model '" + id + "'");
  }

  TestOutcome out;
  out.n_scored = n_scored;
  out.per_model_nll = set_a_nll;
  out.per_model_nll.insert(set_b_nll.begin(), set_b_nll.end());

  const double best_a = best_finite(set_a_nll);
  const double best_b = best_finite(set_b_nll);
  if (std::isinf(best_a)) {
    out.decision = Decision::CertainNotA;
    out.statistic = kInf;
    return out;
  }
  out.statistic = best_a - best_b;
  out.decision = best_a < best_b ? Decision::RejectNull : Decision::RetainNull;
  return out;
}

TestOutcome attribution_test(std::span<const NamedModel> set_a, std::span<const NamedModel> set_b,
                             const TokenSequence& text) {
  if (set_a.empty() || set_b.empty()) throw DomainError("attribution needs non-empty model sets");
  const Alphabet alphabet = set_a.front().model->alphabet();

  auto collect = [&](std::span<const NamedModel> set, std::map<std::string, double>& into,
                     std::map<std::string, const SequentialModel*>& owners) {
    for (const NamedModel& m : set) {
      if (!m.model) throw DomainError("model '" + m.id + "' is null");
      if (!(m.model->alphabet() == alphabet)) throw DomainError("model alphabets differ");
      auto [it, inserted] = owners.emplace(m.id, m.model.get());
      if (!inserted) {
        if (it->second != m.model.get()) throw DomainError("duplicate model id '" + m.id + "'");
        continue;
      }
      into[m.id] = mean_nll(*m.model, text);
    }
  };

  std::map<std::string, double> a_nll;
  std::map<std::string, double> b_nll;
  std::map<std::string, const SequentialModel*> a_owner;
  std::map<std::string, const SequentialModel*> b_owner;
  collect(set_a, a_nll, a_owner);
  collect(set_b, b_nll, b_owner);
  for (const auto& [id, ptr] : a_owner) {
    for (const auto& [other_id, other_ptr] : b_owner) {
      if (ptr == other_ptr) {
        throw DomainError("model '" + id + "' and '" + other_id + "' are the same instance");
      }
    }
  }
  return attribution_decision(a_nll, b_nll, text.n_scored());
}

double detection_statistic(const SequentialModel& evaluator, const TokenSequence& text) {
  const PathSums sums = scan_path(nullptr, evaluator, text);
  if (sums.infinite) {
    throw SupportError("infinite NLL: the evaluator cannot have generated this text");
  }
  const double n = static_cast<double>(sums.n_scored);
  return sums.nll / n - sums.evaluator_entropy / n;
}

Decision detection_decision(double statistic, double t, Sidedness sidedness) {
  const bool inside = sidedness == Sidedness::TwoSided ? std::abs(statistic) <= t : statistic <= t;
  return inside ? Decision::RejectNull : Decision::RetainNull;
}

TestOutcome detection_test(const SequentialModel& evaluator, const TokenSequence& text, double t,
                           Sidedness sidedness) {
  if (std::isnan(t)) throw DomainError("threshold is NaN");
  if (sidedness == Sidedness::TwoSided && t < 0.0) {
    throw DomainError("two-sided threshold must be non-negative");
  }
  const PathSums sums = scan_path(nullptr, evaluator, text);
  const double n = static_cast<double>(sums.n_scored);

  TestOutcome out;
  out.threshold = t;
  out.n_scored = sums.n_scored;
  if (sums.infinite) {
    out.decision = Decision::CertainNotA;
    out.statistic = kInf;
    out.per_model_nll["evaluator"] = kInf;
    return out;
  }
  out.per_model_nll["evaluator"] = sums.nll / n;
  out.statistic = sums.nll / n - sums.evaluator_entropy / n;
  out.decision = detection_decision(out.statistic, t, sidedness);
  return out;
}

CalibrationProfile calibrate_threshold(std::span<const double> null_statistics, double target_fpr,
                                       Sidedness sidedness) {
  if (null_statistics.empty()) throw DomainError("calibration needs null statistics");
  if (!(target_fpr > 0.0 && target_fpr < 1.0)) throw DomainError("target FPR must lie in (0, 1)");

  std::vector<double> values;
  values.reserve(null_statistics.size());
  for (const double s : null_statistics) {
    if (std::isnan(s)) throw DomainError("NaN null statistic");
    values.push_back(sidedness == Sidedness::TwoSided ? std::abs(s) : s);
  }
  std::sort(values.begin(), values.end());

  const std::size_t n = values.size();
  const double nd = static_cast<double>(n);
  auto k = static_cast<std::size_t>(std::floor(target_fpr * nd + 1e-9));
  if (k > 0 && static_cast<double>(k) / nd > target_fpr) --k;
  if (k == 0) {
    throw DomainError("too few null samples: need at least ceil(1/target_fpr) = " +
                      std::to_string(static_cast<std::size_t>(std::ceil(1.0 / target_fpr))));
  }

  const double candidate = values[k - 1];
  const auto at_or_below =
      static_cast<std::size_t>(std::upper_bound(values.begin(), values.end(), candidate) - values.begin());

  CalibrationProfile profile;
  profile.target_fpr = target_fpr;
  profile.n_null = n;
  profile.sidedness = sidedness;
  if (at_or_below <= k) {
    profile.threshold = candidate;
    profile.achieved_fpr = static_cast<double>(at_or_below) / nd;
  } else {
    // Ties at the k-th value would overshoot the budget: step just below them.
    profile.threshold = std::nextafter(candidate, -kInf);
    const auto below =
        static_cast<std::size_t>(std::lower_bound(values.begin(), values.end(), candidate) - values.begin());
    profile.achieved_fpr = static_cast<double>(below) / nd;
  }
  if (sidedness == Sidedness::TwoSided && profile.threshold < 0.0) {
    throw DomainError("two-sided calibration impossible: too many null statistics are exactly 0");
  }
  return profile;
}

std::string to_json(const CalibrationProfile& profile) {
  std::string out = "{";
  out += "\"threshold\":" + format_exact(profile.threshold);
  out += ",\"target_fpr\":" + format_exact(profile.target_fpr);
  out += ",\"achieved_fpr\":" + format_exact(profile.achieved_fpr);
  out += ",\"n_null\":" + std::to_string(profile.n_null);
  out += ",\"sidedness\":" + json_quote(std::string(to_string(profile.sidedness)));
  out += "}";
  return out;
}

CalibrationProfile profile_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(0, "", std::string("malformed calibration profile: ") + e.what());
  }
  if (!doc.is_object()) throw FormatError(0, "", "calibration profile must be a JSON object");
  auto number = [&](const char* field) {
    if (!doc.contains(field) || !doc.at(field).is_number()) throw FormatError(0, field, "expected a number");
    return doc.at(field).get<double>();
  };

  CalibrationProfile profile;
  profile.threshold = number("threshold");
  profile.target_fpr = number("target_fpr");
  profile.achieved_fpr = number("achieved_fpr");
  if (!doc.contains("n_null") || !doc.at("n_null").is_number_unsigned()) {
    throw FormatError(0, "n_null", "expected a count");
  }
  profile.n_null = doc.at("n_null").get<std::size_t>();
  if (!doc.contains("sidedness") || !doc.at("sidedness").is_string()) {
    throw FormatError(0, "sidedness", "expected \"one\" or \"two\"");
  }
  try {
    profile.sidedness = parse_sidedness(doc.at("sidedness").get<std::string>());
  } catch (const DomainError& e) {
    throw FormatError(0, "sidedness", e.what());
  }
  if (!(profile.target_fpr > 0.0 && profile.target_fpr < 1.0)) {
    throw FormatError(0, "target_fpr", "must lie in (0, 1)");
  }
  if (profile.achieved_fpr > profile.target_fpr) {
    throw FormatError(0, "achieved_fpr", "exceeds target_fpr");
  }
  return profile;
}

}  // namespace perplex
