#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace perplex {

using Token = std::uint32_t;

// Probability rows must sum to one within this tolerance.
inline constexpr double kSumTolerance = 1e-12;

// Finite vocabulary of K >= 2 tokens with ids 0..K-1.
class Alphabet {
 public:
  explicit Alphabet(std::size_t size);

  std::size_t size() const noexcept { return size_; }
  bool contains(Token token) const noexcept { return token < size_; }
  // ln K, the maximum entropy of a next-token distribution.
  double max_entropy() const;

  friend bool operator==(Alphabet, Alphabet) = default;

 private:
  std::size_t size_;
};

// Validated probability vector over an alphabet.
class Distribution {
 public:
  explicit Distribution(std::vector<double> probs);

  std::span<const double> probs() const noexcept { return probs_; }
  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  // Smallest strictly positive entry.
  double min_nonzero() const;

  friend bool operator==(const Distribution&, const Distribution&) = default;

 private:
  std::vector<double> probs_;
};

// Raises every entry in (0, eps) to eps and shaves the created excess
// proportionally off the entries above eps, repeating until no entry lies in
// (0, eps). Exact zeros stay zero. Requires 0 < eps <= 1/K.
Distribution floor_renormalize(const Distribution& d, double eps);

// A realized string: the first prompt_len tokens are a fixed prefix that is
// conditioned on but excluded from every statistic.
struct TokenSequence {
  std::vector<Token> tokens;
  std::size_t prompt_len = 0;

  std::size_t size() const noexcept { return tokens.size(); }
  std::size_t n_scored() const noexcept { return tokens.size() - prompt_len; }
  std::span<const Token> prompt() const noexcept {
    return std::span<const Token>(tokens).first(prompt_len);
  }
  std::span<const Token> continuation() const noexcept {
    return std::span<const Token>(tokens).subspan(prompt_len);
  }

  // Throws DomainError on a token outside the alphabet or prompt_len > size.
  void validate(Alphabet alphabet) const;

  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

// Contract for a finite-alphabet sequential generative model: given everything
// seen so far it yields the next-token distribution. Implementations are
// immutable after construction and safe to share between threads.
class SequentialModel {
 public:
  virtual ~SequentialModel() = default;

  virtual Alphabet alphabet() const = 0;
  // Probability floor when every conditional is either 0 or >= epsilon.
  virtual std::optional<double> epsilon() const = 0;

  // Next-token probabilities after `context` (prompt followed by history).
  // The returned span stays valid for the lifetime of the model. Context tokens
  // are not range-checked here; see next_distribution for the checked entry.
  virtual std::span<const double> conditional(std::span<const Token> context) const = 0;
  // Natural logs of conditional(context); -infinity where the probability is 0.
  virtual std::span<const double> log_conditional(std::span<const Token> context) const = 0;
};

// Checked lookup of the next-token distribution after prompt + history.
Distribution next_distribution(const SequentialModel& model, std::span<const Token> prompt,
                               std::span<const Token> history);

// Markov model of order m over K tokens. Row index is the last m tokens read
// most-significant-first; histories shorter than m are left-padded with token 0.
class MarkovModel final : public SequentialModel {
 public:
  MarkovModel(Alphabet alphabet, std::size_t order, std::vector<Distribution> rows,
              std::optional<double> epsilon);

  // Every row uniform; epsilon is 1/K.
  static MarkovModel uniform(Alphabet alphabet, std::size_t order = 0);

  Alphabet alphabet() const override { return alphabet_; }
  std::optional<double> epsilon() const override { return epsilon_; }
  std::span<const double> conditional(std::span<const Token> context) const override;
  std::span<const double> log_conditional(std::span<const Token> context) const override;

  std::size_t order() const noexcept { return order_; }
  std::size_t row_count() const noexcept { return rows_; }
  std::size_t row_index(std::span<const Token> context) const noexcept;
  std::span<const double> row(std::size_t index) const;
  Distribution row_distribution(std::size_t index) const;

  friend bool operator==(const MarkovModel& a, const MarkovModel& b) {
    return a.alphabet_ == b.alphabet_ && a.order_ == b.order_ && a.epsilon_ == b.epsilon_ &&
           a.table_ == b.table_;
  }

 private:
  Alphabet alphabet_;
  std::size_t order_;
  std::size_t rows_;
  std::optional<double> epsilon_;
  std::vector<double> table_;
  std::vector<double> log_table_;
};

// Largest number of rows (K^m) a MarkovModel may hold.
inline constexpr std::size_t kMaxMarkovRows = std::size_t{1} << 22;

// Samples n tokens after `prompt` by inverse-CDF over each conditional in
// token-id order. Pure function of (model, prompt, n, seed).
TokenSequence generate(const SequentialModel& model, std::span<const Token> prompt, std::size_t n,
                       std::uint64_t seed);

// Inverse-CDF draw from probs given u in [0, 1).
Token sample_token(std::span<const double> probs, double u) noexcept;

// Rows drawn from a symmetric Dirichlet(concentration) then floored at eps.
MarkovModel random_markov(Alphabet alphabet, std::size_t order, double concentration, double eps,
                          std::uint64_t seed);

// Row-wise mixture (1 - weight) * base + weight * other, floored at eps.
MarkovModel blend(const MarkovModel& base, const MarkovModel& other, double weight, double eps);

// Self-describing JSON {alphabet_size, order, epsilon, rows} with 17-digit floats.
std::string to_json(const MarkovModel& model);
MarkovModel markov_from_json(const std::string& text);
void save_model(const MarkovModel& model, const std::string& path);
MarkovModel load_model(const std::string& path);

}  // namespace perplex
