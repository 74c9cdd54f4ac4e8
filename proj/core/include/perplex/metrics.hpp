#pragma once

#include <span>
#include <vector>

namespace perplex {

// Detector scores oriented so that larger means more evaluator-like.
struct ScoreSet {
  std::vector<double> positives;
  std::vector<double> negatives;
};

// Best TPR over thresholds drawn from the negative-score order statistics
// (plus one just above the largest negative) whose empirical FPR, with
// "score >= threshold" flagged positive, stays within fpr_budget.
double tpr_at_fpr(const ScoreSet& scores, double fpr_budget);

// Mann-Whitney AUROC; ties count one half.
double auroc(const ScoreSet& scores);

}  // namespace perplex
