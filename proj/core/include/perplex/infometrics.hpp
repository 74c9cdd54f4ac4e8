#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "perplex/seqmodel.hpp"

namespace perplex {

// Per-token negative log-likelihoods (nats) of the scored region of a text.
struct NllSequence {
  std::vector<double> values;
  bool contains_infinite = false;

  std::size_t size() const noexcept { return values.size(); }
};

struct MetricSummary {
  double log_perplexity = 0.0;
  double avg_entropy = 0.0;
  std::optional<double> avg_cross_entropy;
  std::optional<double> avg_kl;
  std::size_t n_scored = 0;
};

// Entropy of one distribution with 0 * ln 0 := 0.
double entropy(std::span<const double> probs);
// -sum p(y) ln q(y); throws SupportError when p(y) > 0 and q(y) = 0.
double cross_entropy(std::span<const double> p, std::span<const double> q);
double kl_divergence(std::span<const double> p, std::span<const double> q);

// Z_n = -ln p_n(Y_n) over the tokens after prompt_len; a zero-probability token
// gives +infinity and sets contains_infinite.
NllSequence nll_sequence(const SequentialModel& evaluator, const TokenSequence& text);

// Mean of the NLL values. Throws on an empty or infinite sequence.
double log_perplexity(const NllSequence& nll);

double avg_entropy(const SequentialModel& evaluator, const TokenSequence& text);
double avg_cross_entropy(const SequentialModel& generator, const SequentialModel& evaluator,
                         const TokenSequence& text);
// avg_cross_entropy minus the generator's realized average entropy.
double avg_kl(const SequentialModel& generator, const SequentialModel& evaluator,
              const TokenSequence& text);

// Restricts pB to the support of pA and renormalizes.
Distribution condition_on_support(const Distribution& pB, const Distribution& pA);

MetricSummary summarize(const SequentialModel& evaluator, const TokenSequence& text);
MetricSummary summarize(const SequentialModel& generator, const SequentialModel& evaluator,
                        const TokenSequence& text);

// Running sums collected in one pass along a realized path. Every quantity
// above is a ratio of these sums to n_scored, accumulated in token order, so
// the one-pass and per-quantity routes agree bit for bit.
struct PathSums {
  std::size_t n_scored = 0;
  double nll = 0.0;
  bool infinite = false;
  double evaluator_entropy = 0.0;
  double cross_entropy = 0.0;     // only when a generator is supplied
  double generator_entropy = 0.0; // only when a generator is supplied
};

PathSums scan_path(const SequentialModel* generator, const SequentialModel& evaluator,
                   const TokenSequence& text);

}  // namespace perplex
