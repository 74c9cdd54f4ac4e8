#include "perplex/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>

#include "perplex/error.hpp"

namespace perplex {

namespace {

void check_scores(const ScoreSet& scores) {
  if (scores.positives.empty() || scores.negatives.empty()) {
    throw DomainError("metrics need at least one positive and one negative score");
  }
  auto has_nan = [](const std::vector<double>& v) {
    return std::any_of(v.begin(), v.end(), [](double x) { return std::isnan(x); });
  };
  if (has_nan(scores.positives) || has_nan(scores.negatives)) throw DomainError("NaN score");
}

}  // namespace

double tpr_at_fpr(const ScoreSet& scores, double fpr_budget) {
  check_scores(scores);
  if (!(fpr_budget > 0.0 && fpr_budget < 1.0)) throw DomainError("FPR budget must lie in (0, 1)");

  std::vector<double> negatives = scores.negatives;
  std::sort(negatives.begin(), negatives.end(), std::greater<>());
  const double n_neg = static_cast<double>(negatives.size());
  auto allowed = static_cast<std::size_t>(std::floor(fpr_budget * n_neg + 1e-9));
  if (allowed > 0 && static_cast<double>(allowed) / n_neg > fpr_budget) --allowed;

  // Walk the negative order statistics downward; a threshold at value v flags
  // every negative >= v, i.e. through the last copy of v.
  double threshold = std::nextafter(negatives.front(), std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < negatives.size();) {
    std::size_t j = i;
    while (j < negatives.size() && negatives[j] == negatives[i]) ++j;
    if (j > allowed) break;
    threshold = negatives[i];
    i = j;
  }

  const auto hits = std::count_if(scores.positives.begin(), scores.positives.end(),
                                  [threshold](double s) { return s >= threshold; });
  return static_cast<double>(hits) / static_cast<double>(scores.positives.size());
}

double auroc(const ScoreSet& scores) {
  check_scores(scores);
  std::vector<double> negatives = scores.negatives;
  std::sort(negatives.begin(), negatives.end());

  // Twice the Mann-Whitney U, kept in integers so ties stay exact.
  std::uint64_t twice_u = 0;
  for (const double p : scores.positives) {
    const auto below = std::lower_bound(negatives.begin(), negatives.end(), p) - negatives.begin();
    const auto through = std::upper_bound(negatives.begin(), negatives.end(), p) - negatives.begin();
    twice_u += 2 * static_cast<std::uint64_t>(below) + static_cast<std::uint64_t>(through - below);
  }
  const double pairs =
      static_cast<double>(scores.positives.size()) * static_cast<double>(negatives.size());
  return static_cast<double>(twice_u) / (2.0 * pairs);
}

}  // namespace perplex
