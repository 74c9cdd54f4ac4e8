#include "perplex/infometrics.hpp"

#include <cmath>
#include <limits>

#include "perplex/error.hpp"

namespace perplex {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double entropy_with_logs(std::span<const double> p, std::span<const double> log_p) {
  double h = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) h -= p[i] * log_p[i];
  }
  return h;
}

double cross_entropy_with_logs(std::span<const double> p, std::span<const double> log_q) {
  double h = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (std::isinf(log_q[i])) {
      throw SupportError("evaluator assigns zero probability inside the generator's support");
    }
    h -= p[i] * log_q[i];
  }
  return h;
}

void check_scorable(const SequentialModel& evaluator, const TokenSequence& text) {
  text.validate(evaluator.alphabet());
  if (text.n_scored() == 0) throw DomainError("no tokens to score after the prompt");
}

}  // namespace

double entropy(std::span<const double> probs) {
  double h = 0.0;
  for (const double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

double cross_entropy(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw DomainError("distributions differ in size");
  double h = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0) {
      throw SupportError("evaluator assigns zero probability inside the generator's support");
    }
    h -= p[i] * std::log(q[i]);
  }
  return h;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  return cross_entropy(p, q) - entropy(p);
}

PathSums scan_path(const SequentialModel* generator, const SequentialModel& evaluator,
                   const TokenSequence& text) {
  check_scorable(evaluator, text);
  if (generator && !(generator->alphabet() == evaluator.alphabet())) {
    throw DomainError("generator and evaluator alphabets differ");
  }

  PathSums sums;
  sums.n_scored = text.n_scored();
  const std::span<const Token> tokens(text.tokens);
  for (std::size_t pos = text.prompt_len; pos < tokens.size(); ++pos) {
    const auto context = tokens.first(pos);
    const auto p_eval = evaluator.conditional(context);
    const auto log_eval = evaluator.log_conditional(context);

    const double z = -log_eval[tokens[pos]];
    if (std::isinf(z)) sums.infinite = true;
    sums.nll += z;
    sums.evaluator_entropy += entropy_with_logs(p_eval, log_eval);

    if (generator) {
      const auto p_gen = generator->conditional(context);
      const auto log_gen = generator->log_conditional(context);
      sums.cross_entropy += cross_entropy_with_logs(p_gen, log_eval);
      sums.generator_entropy += entropy_with_logs(p_gen, log_gen);
    }
  }
  return sums;
}

NllSequence nll_sequence(const SequentialModel& evaluator, const TokenSequence& text) {
  check_scorable(evaluator, text);
  NllSequence out;
  out.values.reserve(text.n_scored());
  const std::span<const Token> tokens(text.tokens);
  for (std::size_t pos = text.prompt_len; pos < tokens.size(); ++pos) {
    const double z = -evaluator.log_conditional(tokens.first(pos))[tokens[pos]];
    if (std::isinf(z)) out.contains_infinite = true;
    out.values.push_back(z);
  }
  return out;
}

double log_perplexity(const NllSequence& nll) {
  if (nll.values.empty()) throw DomainError("log-perplexity of an empty NLL sequence");
  if (nll.contains_infinite) {
    throw SupportError("infinite NLL: the evaluator cannot have generated this text");
  }
  double sum = 0.0;
  for (const double z : nll.values) sum += z;
  return sum / static_cast<double>(nll.values.size());
}

double avg_entropy(const SequentialModel& evaluator, const TokenSequence& text) {
  const PathSums sums = scan_path(nullptr, evaluator, text);
  return sums.evaluator_entropy / static_cast<double>(sums.n_scored);
}

double avg_cross_entropy(const SequentialModel& generator, const SequentialModel& evaluator,
                         const TokenSequence& text) {
  const PathSums sums = scan_path(&generator, evaluator, text);
  return sums.cross_entropy / static_cast<double>(sums.n_scored);
}

double avg_kl(const SequentialModel& generator, const SequentialModel& evaluator,
              const TokenSequence& text) {
  const PathSums sums = scan_path(&generator, evaluator, text);
  const double n = static_cast<double>(sums.n_scored);
  return sums.cross_entropy / n - sums.generator_entropy / n;
}

Distribution condition_on_support(const Distribution& pB, const Distribution& pA) {
  if (pB.size() != pA.size()) throw DomainError("distributions differ in size");
  double mass = 0.0;
  for (std::size_t i = 0; i < pB.size(); ++i) {
    if (pA[i] > 0.0) mass += pB[i];
  }
  if (!(mass > 0.0)) throw SupportError("generator puts no mass on the evaluator's support");
  std::vector<double> out(pB.size(), 0.0);
  for (std::size_t i = 0; i < pB.size(); ++i) {
    if (pA[i] > 0.0) out[i] = pB[i] / mass;
  }
  return Distribution(std::move(out));
}

MetricSummary summarize(const SequentialModel& evaluator, const TokenSequence& text) {
  const PathSums sums = scan_path(nullptr, evaluator, text);
  const double n = static_cast<double>(sums.n_scored);
  MetricSummary out;
  out.n_scored = sums.n_scored;
  out.log_perplexity = sums.infinite ? kInf : sums.nll / n;
  out.avg_entropy = sums.evaluator_entropy / n;
  return out;
}

MetricSummary summarize(const SequentialModel& generator, const SequentialModel& evaluator,
                        const TokenSequence& text) {
  const PathSums sums = scan_path(&generator, evaluator, text);
  const double n = static_cast<double>(sums.n_scored);
  MetricSummary out;
  out.n_scored = sums.n_scored;
  out.log_perplexity = sums.infinite ? kInf : sums.nll / n;
  out.avg_entropy = sums.evaluator_entropy / n;
  out.avg_cross_entropy = sums.cross_entropy / n;
  out.avg_kl = sums.cross_entropy / n - sums.generator_entropy / n;
  return out;
}

}  // namespace perplex
