#include "perplex/seqmodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "perplex/error.hpp"
#include "perplex/seeding.hpp"

namespace perplex {

namespace {

std::size_t checked_power(std::size_t base, std::size_t exponent) {
  std::size_t result = 1;
  for (std::size_t i = 0; i < exponent; ++i) {
    if (result > kMaxMarkovRows / base) {
      throw DomainError("Markov table with K^m rows exceeds the row limit");
    }
    result *= base;
  }
  return result;
}

void check_epsilon(double eps, std::size_t alphabet_size) {
  const double limit = 1.0 / static_cast<double>(alphabet_size);
  if (!(eps > 0.0) || eps > limit) {
    throw DomainError("epsilon floor must lie in (0, 1/K]");
  }
}

}  // namespace

Alphabet::Alphabet(std::size_t size) : size_(size) {
  if (size < 2) throw DomainError("alphabet needs at least two tokens");
}

double Alphabet::max_entropy() const { return std::log(static_cast<double>(size_)); }

Distribution::Distribution(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.size() < 2) throw DomainError("distribution needs at least two entries");
  double sum = 0.0;
  for (const double p : probs_) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("probability outside [0, 1]");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) throw DomainError("probabilities do not sum to 1");
}

double Distribution::min_nonzero() const {
  double best = std::numeric_limits<double>::infinity();
  for (const double p : probs_) {
    if (p > 0.0) best = std::min(best, p);
  }
  return best;
}

Distribution floor_renormalize(const Distribution& d, double eps) {
  check_epsilon(eps, d.size());
  std::vector<double> p(d.probs().begin(), d.probs().end());

  // Each pass pins at least one more entry to exactly eps, and pinned entries
  // are never shaved again, so at most K passes run.
  for (std::size_t pass = 0; pass <= p.size(); ++pass) {
    double excess = 0.0;
    for (double& v : p) {
      if (v > 0.0 && v < eps) {
        excess += eps - v;
        v = eps;
      }
    }
    if (excess == 0.0) break;

    double above = 0.0;
    for (const double v : p) {
      if (v > eps) above += v;
    }
    if (above <= excess) throw DomainError("floor is infeasible for this distribution");
    const double shave = excess / above;
    for (double& v : p) {
      if (v > eps) v -= v * shave;
    }
  }
  return Distribution(std::move(p));
}

void TokenSequence::validate(Alphabet alphabet) const {
  if (prompt_len > tokens.size()) throw DomainError("prompt_len exceeds sequence length");
  for (const Token t : tokens) {
    if (!alphabet.contains(t)) throw DomainError("token id outside the alphabet");
  }
}

Distribution next_distribution(const SequentialModel& model, std::span<const Token> prompt,
                               std::span<const Token> history) {
  const Alphabet alphabet = model.alphabet();
  std::vector<Token> context;
  context.reserve(prompt.size() + history.size());
  context.insert(context.end(), prompt.begin(), prompt.end());
  context.insert(context.end(), history.begin(), history.end());
  for (const Token t : context) {
    if (!alphabet.contains(t)) throw DomainError("token id outside the alphabet");
  }
  const auto probs = model.conditional(context);
  return Distribution(std::vector<double>(probs.begin(), probs.end()));
}

MarkovModel::MarkovModel(Alphabet alphabet, std::size_t order, std::vector<Distribution> rows,
                         std::optional<double> epsilon)
    : alphabet_(alphabet),
      order_(order),
      rows_(checked_power(alphabet.size(), order)),
      epsilon_(epsilon) {
  const std::size_t k = alphabet_.size();
  if (rows.size() != rows_) throw DomainError("Markov table must have K^order rows");
  if (epsilon_) check_epsilon(*epsilon_, k);

  table_.reserve(rows_ * k);
  log_table_.reserve(rows_ * k);
  for (const Distribution& row : rows) {
    if (row.size() != k) throw DomainError("Markov row length differs from the alphabet size");
    for (const double p : row.probs()) {
      if (epsilon_ && p > 0.0 && p < *epsilon_) {
        throw DomainError("Markov row has an entry below the epsilon floor");
      }
      table_.push_back(p);
      log_table_.push_back(p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity());
    }
  }
}

MarkovModel MarkovModel::uniform(Alphabet alphabet, std::size_t order) {
  const std::size_t k = alphabet.size();
  const Distribution row(std::vector<double>(k, 1.0 / static_cast<double>(k)));
  return MarkovModel(alphabet, order, std::vector<Distribution>(checked_power(k, order), row),
                     1.0 / static_cast<double>(k));
}

std::size_t MarkovModel::row_index(std::span<const Token> context) const noexcept {
  const std::size_t k = alphabet_.size();
  std::size_t index = 0;
  const std::size_t have = context.size();
  for (std::size_t j = 0; j < order_; ++j) {
    // Position of the j-th token of the window; missing positions pad with 0.
    const std::size_t back = order_ - j;
    const Token t = back <= have ? context[have - back] : Token{0};
    index = index * k + t;
  }
  return index;
}

std::span<const double> MarkovModel::row(std::size_t index) const {
  if (index >= rows_) throw DomainError("Markov row index out of range");
  const std::size_t k = alphabet_.size();
  return std::span<const double>(table_).subspan(index * k, k);
}

Distribution MarkovModel::row_distribution(std::size_t index) const {
  const auto r = row(index);
  return Distribution(std::vector<double>(r.begin(), r.end()));
}

std::span<const double> MarkovModel::conditional(std::span<const Token> context) const {
  const std::size_t k = alphabet_.size();
  return std::span<const double>(table_).subspan(row_index(context) * k, k);
}

std::span<const double> MarkovModel::log_conditional(std::span<const Token> context) const {
  const std::size_t k = alphabet_.size();
  return std::span<const double>(log_table_).subspan(row_index(context) * k, k);
}

Token sample_token(std::span<const double> probs, double u) noexcept {
  double cumulative = 0.0;
  Token last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    last_positive = static_cast<Token>(i);
    cumulative += probs[i];
    if (u < cumulative) return last_positive;
  }
  // Rounding left the cumulative sum just below u.
  return last_positive;
}

TokenSequence generate(const SequentialModel& model, std::span<const Token> prompt, std::size_t n,
                       std::uint64_t seed) {
  if (n == 0) throw DomainError("generate needs n >= 1");
  TokenSequence out;
  out.tokens.reserve(prompt.size() + n);
  out.tokens.assign(prompt.begin(), prompt.end());
  out.prompt_len = prompt.size();
  out.validate(model.alphabet());

  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    out.tokens.push_back(sample_token(model.conditional(out.tokens), rng.uniform()));
  }
  return out;
}

MarkovModel random_markov(Alphabet alphabet, std::size_t order, double concentration, double eps,
                          std::uint64_t seed) {
  if (!(concentration > 0.0) || !std::isfinite(concentration)) {
    throw DomainError("Dirichlet concentration must be positive and finite");
  }
  const std::size_t k = alphabet.size();
  check_epsilon(eps, k);
  const std::size_t rows = checked_power(k, order);

  Rng rng(seed);
  std::gamma_distribution<double> gamma(concentration, 1.0);
  std::vector<Distribution> table;
  table.reserve(rows);
  std::vector<double> draw(k);
  for (std::size_t r = 0; r < rows; ++r) {
    double sum = 0.0;
    for (double& g : draw) {
      g = gamma(rng.engine());
      sum += g;
    }
    if (!(sum > 0.0)) {
      std::fill(draw.begin(), draw.end(), 1.0);
      sum = static_cast<double>(k);
    }
    std::vector<double> probs(k);
    for (std::size_t i = 0; i < k; ++i) probs[i] = draw[i] / sum;
    table.push_back(floor_renormalize(Distribution(std::move(probs)), eps));
  }
  return MarkovModel(alphabet, order, std::move(table), eps);
}

MarkovModel blend(const MarkovModel& base, const MarkovModel& other, double weight, double eps) {
  if (!(base.alphabet() == other.alphabet()) || base.order() != other.order()) {
    throw DomainError("blend needs models with the same alphabet and order");
  }
  if (!(weight >= 0.0 && weight <= 1.0)) throw DomainError("blend weight must lie in [0, 1]");
  const std::size_t k = base.alphabet().size();
  std::vector<Distribution> table;
  table.reserve(base.row_count());
  for (std::size_t r = 0; r < base.row_count(); ++r) {
    const auto a = base.row(r);
    const auto b = other.row(r);
    std::vector<double> probs(k);
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      probs[i] = (1.0 - weight) * a[i] + weight * b[i];
      sum += probs[i];
    }
    for (double& p : probs) p /= sum;
    table.push_back(floor_renormalize(Distribution(std::move(probs)), eps));
  }
  return MarkovModel(base.alphabet(), base.order(), std::move(table), eps);
}

}  // namespace perplex
