#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "perplex/hypothesis.hpp"
#include "perplex/seqmodel.hpp"

namespace perplex {

// Two-sided 95% normal quantile.
inline constexpr double kZ95 = 1.959963984540054;

// Largest K^n an exact enumeration may visit.
inline constexpr std::uint64_t kEnumerationGuard = std::uint64_t{1} << 24;

struct WilsonInterval {
  double low = 0.0;
  double high = 1.0;
};

WilsonInterval wilson_interval(std::size_t successes, std::size_t trials, double z = kZ95);

struct TailEstimate {
  std::size_t n = 0;
  double t = 0.0;
  double p_hat = 0.0;
  std::size_t hits = 0;
  std::size_t trials = 0;
  double ci_low = 0.0;
  double ci_high = 1.0;
};

// |log-perplexity - average cross-entropy| of generate(generator, prompt, n,
// mix_seed(master_seed, i)) scored by evaluator, for trials i = 0..trials-1.
// With generator == evaluator the cross-entropy is the evaluator's entropy.
std::vector<double> sample_deviations(const SequentialModel& generator,
                                      const SequentialModel& evaluator, std::size_t n,
                                      std::size_t trials, std::uint64_t master_seed,
                                      std::span<const Token> prompt = {});

TailEstimate tail_from_deviations(std::span<const double> deviations, std::size_t n, double t);

// Monte-Carlo estimate of P(deviation >= t) with a Wilson 95% interval.
TailEstimate estimate_tail(const SequentialModel& generator, const SequentialModel& evaluator,
                           std::size_t n, double t, std::size_t trials, std::uint64_t master_seed,
                           std::span<const Token> prompt = {});

// Throws GuardError when K^n exceeds kEnumerationGuard.
void check_enumeration_guard(std::size_t alphabet_size, std::size_t n);

// Exact P_generator(deviation >= t) by depth-first enumeration of all K^n
// continuations of the prompt.
double exact_tail(const SequentialModel& generator, const SequentialModel& evaluator,
                  std::size_t n, double t, std::span<const Token> prompt = {});

// Exact probability, under strings drawn from generator, that the detection
// test with evaluator rejects the null.
double exact_detection_rate(const SequentialModel& generator, const SequentialModel& evaluator,
                            std::size_t n, double t, Sidedness sidedness,
                            std::span<const Token> prompt = {});

struct DecayFit {
  std::vector<std::pair<double, double>> points;  // (n, ln p_hat), positive p_hat only
  std::size_t excluded = 0;                       // points dropped for p_hat == 0
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

// Ordinary least squares of ln p_hat against n over the points with p_hat > 0.
// Throws DomainError with fewer than three positive points.
DecayFit fit_decay(std::span<const std::pair<double, double>> points);

struct AttributionSetup {
  std::vector<NamedModel> set_a;
  std::vector<NamedModel> set_b;
};

struct FixedThreshold {
  double t = 0.0;
};

// Threshold calibrated per length on a separate batch of null texts.
struct CalibratedThreshold {
  double target_fpr = 0.05;
  std::size_t null_samples = 1000;
};

struct DetectionSetup {
  NamedModel evaluator;
  std::vector<NamedModel> null_sources;
  Sidedness sidedness = Sidedness::TwoSided;
  std::variant<FixedThreshold, CalibratedThreshold> threshold = FixedThreshold{0.1};
};

using CurveSetup = std::variant<AttributionSetup, DetectionSetup>;

std::string describe(const CurveSetup& setup);

struct ErrorPoint {
  std::size_t n = 0;
  double type1_hat = 0.0;
  double type2_hat = 0.0;
  std::size_t trials = 0;
  WilsonInterval type1_ci;
  WilsonInterval type2_ci;
  std::optional<double> threshold;
};

struct ErrorCurve {
  std::vector<ErrorPoint> points;
  std::string configuration;
};

// For each n, samples `trials` null texts (cycling through set B / the null
// sources) and `trials` alternative texts (cycling through set A / the
// evaluator), runs the configured test and records the empirical type I and
// type II rates.
ErrorCurve error_curve(const CurveSetup& setup, std::span<const std::size_t> ns,
                       std::size_t trials, std::uint64_t master_seed,
                       std::span<const Token> prompt = {});

}  // namespace perplex
