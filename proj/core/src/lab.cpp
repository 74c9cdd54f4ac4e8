#include "perplex/lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "perplex/error.hpp"
#include "perplex/infometrics.hpp"
#include "perplex/numfmt.hpp"
#include "perplex/parallel.hpp"
#include "perplex/seeding.hpp"

namespace perplex {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_same_alphabet(const SequentialModel& a, const SequentialModel& b) {
  if (!(a.alphabet() == b.alphabet())) throw DomainError("model alphabets differ");
}

double path_deviation(const PathSums& sums) {
  if (sums.infinite) return kInf;
  const double n = static_cast<double>(sums.n_scored);
  return std::abs(sums.nll / n - sums.cross_entropy / n);
}

// Depth-first walk over every continuation with positive generator mass.
// Running sums are accumulated in token order, matching scan_path.
template <class Leaf>
void enumerate_paths(const SequentialModel& generator, const SequentialModel& evaluator,
                     std::vector<Token>& context, std::size_t remaining, double prob, double nll,
                     double cross, double evaluator_entropy, Leaf& leaf) {
  if (remaining == 0) {
    leaf(prob, nll, cross, evaluator_entropy);
    return;
  }
  const auto p_gen = generator.conditional(context);
  const auto p_eval = evaluator.conditional(context);
  const auto log_eval = evaluator.log_conditional(context);
  const double cross_step = cross_entropy(p_gen, p_eval);
  const double entropy_step = entropy(p_eval);
  for (std::size_t y = 0; y < p_gen.size(); ++y) {
    if (p_gen[y] <= 0.0) continue;
    context.push_back(static_cast<Token>(y));
    enumerate_paths(generator, evaluator, context, remaining - 1, prob * p_gen[y],
                    nll + (-log_eval[y]), cross + cross_step, evaluator_entropy + entropy_step, leaf);
    context.pop_back();
  }
}

template <class Leaf>
void enumerate_all(const SequentialModel& generator, const SequentialModel& evaluator,
                   std::size_t n, std::span<const Token> prompt, Leaf& leaf) {
  check_same_alphabet(generator, evaluator);
  if (n == 0) throw DomainError("enumeration needs n >= 1");
  check_enumeration_guard(generator.alphabet().size(), n);
  std::vector<Token> context(prompt.begin(), prompt.end());
  for (const Token t : context) {
    if (!generator.alphabet().contains(t)) throw DomainError("prompt token outside the alphabet");
  }
  context.reserve(prompt.size() + n);
  enumerate_paths(generator, evaluator, context, n, 1.0, 0.0, 0.0, 0.0, leaf);
}

std::string join_ids(const std::vector<NamedModel>& models) {
  std::string out = "{";
  for (std::size_t i = 0; i < models.size(); ++i) {
    if (i) out += ",";
    out += models[i].id;
  }
  return out + "}";
}

}  // namespace

WilsonInterval wilson_interval(std::size_t successes, std::size_t trials, double z) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  WilsonInterval ci{std::max(0.0, center - half), std::min(1.0, center + half)};
  ci.low = std::min(ci.low, p);
  ci.high = std::max(ci.high, p);
  return ci;
}

std::vector<double> sample_deviations(const SequentialModel& generator,
                                      const SequentialModel& evaluator, std::size_t n,
                                      std::size_t trials, std::uint64_t master_seed,
                                      std::span<const Token> prompt) {
  check_same_alphabet(generator, evaluator);
  if (n == 0) throw DomainError("sequence length must be at least 1");
  std::vector<double> deviations(trials);
  parallel_for(trials, [&](std::size_t i) {
    const TokenSequence text = generate(generator, prompt, n, mix_seed(master_seed, i));
    deviations[i] = path_deviation(scan_path(&generator, evaluator, text));
  });
  return deviations;
}

TailEstimate tail_from_deviations(std::span<const double> deviations, std::size_t n, double t) {
  if (!(t >= 0.0)) throw DomainError("deviation threshold must be non-negative");
  TailEstimate out;
  out.n = n;
  out.t = t;
  out.trials = deviations.size();
  out.hits = static_cast<std::size_t>(
      std::count_if(deviations.begin(), deviations.end(), [t](double d) { return d >= t; }));
  out.p_hat = out.trials ? static_cast<double>(out.hits) / static_cast<double>(out.trials) : 0.0;
  const WilsonInterval ci = wilson_interval(out.hits, out.trials);
  out.ci_low = ci.low;
  out.ci_high = ci.high;
  return out;
}

TailEstimate estimate_tail(const SequentialModel& generator, const SequentialModel& evaluator,
                           std::size_t n, double t, std::size_t trials, std::uint64_t master_seed,
                           std::span<const Token> prompt) {
  if (trials < 100) throw DomainError("estimate_tail needs at least 100 trials");
  if (!(t >= 0.0)) throw DomainError("deviation threshold must be non-negative");
  const auto deviations = sample_deviations(generator, evaluator, n, trials, master_seed, prompt);
  return tail_from_deviations(deviations, n, t);
}

void check_enumeration_guard(std::size_t alphabet_size, std::size_t n) {
  std::uint64_t states = 1;
  for (std::size_t i = 0; i < n; ++i) {
    states *= alphabet_size;
    if (states > kEnumerationGuard) {
      throw GuardError("exact enumeration of K^n = " + std::to_string(alphabet_size) + "^" +
                       std::to_string(n) + " strings exceeds the 2^24 state guard");
    }
  }
}

double exact_tail(const SequentialModel& generator, const SequentialModel& evaluator,
                  std::size_t n, double t, std::span<const Token> prompt) {
  if (!(t >= 0.0)) throw DomainError("deviation threshold must be non-negative");
  const double nd = static_cast<double>(n);
  double mass = 0.0;
  auto leaf = [&](double prob, double nll, double cross, double) {
    const double deviation = std::isinf(nll) ? kInf : std::abs(nll / nd - cross / nd);
    if (deviation >= t) mass += prob;
  };
  enumerate_all(generator, evaluator, n, prompt, leaf);
  return std::clamp(mass, 0.0, 1.0);
}

double exact_detection_rate(const SequentialModel& generator, const SequentialModel& evaluator,
                            std::size_t n, double t, Sidedness sidedness,
                            std::span<const Token> prompt) {
  const double nd = static_cast<double>(n);
  double mass = 0.0;
  auto leaf = [&](double prob, double nll, double, double evaluator_entropy) {
    if (std::isinf(nll)) return;  // certain the evaluator did not write it
    const double statistic = nll / nd - evaluator_entropy / nd;
    if (detection_decision(statistic, t, sidedness) == Decision::RejectNull) mass += prob;
  };
  enumerate_all(generator, evaluator, n, prompt, leaf);
  return std::clamp(mass, 0.0, 1.0);
}

DecayFit fit_decay(std::span<const std::pair<double, double>> points) {
  DecayFit fit;
  for (const auto& [n, p] : points) {
    if (!std::isfinite(n) || !(p >= 0.0 && p <= 1.0)) throw DomainError("invalid decay point");
    if (p > 0.0) {
      fit.points.emplace_back(n, std::log(p));
    } else {
      ++fit.excluded;
    }
  }
  if (fit.points.size() < 3) throw DomainError("fit_decay needs at least three points with p_hat > 0");

  const double count = static_cast<double>(fit.points.size());
  double mean_x = 0.0;
  double mean_y = 0.0;
  for (const auto& [x, y] : fit.points) {
    mean_x += x;
    mean_y += y;
  }
  mean_x /= count;
  mean_y /= count;

  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (const auto& [x, y] : fit.points) {
    sxx += (x - mean_x) * (x - mean_x);
    sxy += (x - mean_x) * (y - mean_y);
    syy += (y - mean_y) * (y - mean_y);
  }
  if (sxx == 0.0) throw DomainError("fit_decay needs at least two distinct lengths");

  fit.slope = sxy / sxx;
  fit.intercept = mean_y - fit.slope * mean_x;
  double ss_res = 0.0;
  for (const auto& [x, y] : fit.points) {
    const double r = y - (fit.intercept + fit.slope * x);
    ss_res += r * r;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

std::string describe(const CurveSetup& setup) {
  if (const auto* attribution = std::get_if<AttributionSetup>(&setup)) {
    return "attribution A=" + join_ids(attribution->set_a) + " B=" + join_ids(attribution->set_b);
  }
  const auto& detection = std::get<DetectionSetup>(setup);
  std::string out = "detection evaluator=" + detection.evaluator.id +
                    " null=" + join_ids(detection.null_sources) +
                    " sided=" + std::string(to_string(detection.sidedness));
  if (const auto* fixed = std::get_if<FixedThreshold>(&detection.threshold)) {
    out += " t=" + format_short(fixed->t);
  } else {
    const auto& cal = std::get<CalibratedThreshold>(detection.threshold);
    out += " calibrated fpr=" + format_short(cal.target_fpr) +
           " on " + std::to_string(cal.null_samples) + " null texts";
  }
  return out;
}

namespace {

enum Stream : std::uint64_t { kNullStream = 0, kAltStream = 1, kCalibrationStream = 2 };

std::uint64_t stream_seed(std::uint64_t master, std::size_t n_index, Stream stream) {
  return mix_seed(master, 4 * n_index + stream);
}

ErrorPoint attribution_point(const AttributionSetup& setup, std::size_t n, std::size_t n_index,
                             std::size_t trials, std::uint64_t master,
                             std::span<const Token> prompt) {
  std::vector<unsigned char> false_reject(trials);
  std::vector<unsigned char> missed(trials);
  const std::uint64_t null_seed = stream_seed(master, n_index, kNullStream);
  const std::uint64_t alt_seed = stream_seed(master, n_index, kAltStream);
  parallel_for(trials, [&](std::size_t i) {
    const auto& b = setup.set_b[i % setup.set_b.size()];
    const TokenSequence null_text = generate(*b.model, prompt, n, mix_seed(null_seed, i));
    false_reject[i] =
        attribution_test(setup.set_a, setup.set_b, null_text).decision == Decision::RejectNull;

    const auto& a = setup.set_a[i % setup.set_a.size()];
    const TokenSequence alt_text = generate(*a.model, prompt, n, mix_seed(alt_seed, i));
    missed[i] =
        attribution_test(setup.set_a, setup.set_b, alt_text).decision != Decision::RejectNull;
  });

  ErrorPoint point;
  point.n = n;
  point.trials = trials;
  const auto fp = static_cast<std::size_t>(std::count(false_reject.begin(), false_reject.end(), 1));
  const auto fn = static_cast<std::size_t>(std::count(missed.begin(), missed.end(), 1));
  point.type1_hat = static_cast<double>(fp) / static_cast<double>(trials);
  point.type2_hat = static_cast<double>(fn) / static_cast<double>(trials);
  point.type1_ci = wilson_interval(fp, trials);
  point.type2_ci = wilson_interval(fn, trials);
  return point;
}

double null_statistic(const SequentialModel& evaluator, const TokenSequence& text) {
  const PathSums sums = scan_path(nullptr, evaluator, text);
  if (sums.infinite) return kInf;
  const double n = static_cast<double>(sums.n_scored);
  return sums.nll / n - sums.evaluator_entropy / n;
}

ErrorPoint detection_point(const DetectionSetup& setup, std::size_t n, std::size_t n_index,
                           std::size_t trials, std::uint64_t master,
                           std::span<const Token> prompt) {
  const SequentialModel& evaluator = *setup.evaluator.model;
  double t = 0.0;
  if (const auto* fixed = std::get_if<FixedThreshold>(&setup.threshold)) {
    t = fixed->t;
  } else {
    const auto& cal = std::get<CalibratedThreshold>(setup.threshold);
    const std::uint64_t cal_seed = stream_seed(master, n_index, kCalibrationStream);
    std::vector<double> stats(cal.null_samples);
    parallel_for(cal.null_samples, [&](std::size_t i) {
      const auto& source = setup.null_sources[i % setup.null_sources.size()];
      stats[i] = null_statistic(evaluator, generate(*source.model, prompt, n, mix_seed(cal_seed, i)));
    });
    t = calibrate_threshold(stats, cal.target_fpr, setup.sidedness).threshold;
  }

  std::vector<unsigned char> false_reject(trials);
  std::vector<unsigned char> missed(trials);
  const std::uint64_t null_seed = stream_seed(master, n_index, kNullStream);
  const std::uint64_t alt_seed = stream_seed(master, n_index, kAltStream);
  parallel_for(trials, [&](std::size_t i) {
    const auto& source = setup.null_sources[i % setup.null_sources.size()];
    const double null_stat =
        null_statistic(evaluator, generate(*source.model, prompt, n, mix_seed(null_seed, i)));
    false_reject[i] = std::isfinite(null_stat) &&
                      detection_decision(null_stat, t, setup.sidedness) == Decision::RejectNull;

    const double alt_stat =
        null_statistic(evaluator, generate(evaluator, prompt, n, mix_seed(alt_seed, i)));
    missed[i] = !std::isfinite(alt_stat) ||
                detection_decision(alt_stat, t, setup.sidedness) != Decision::RejectNull;
  });

  ErrorPoint point;
  point.n = n;
  point.trials = trials;
  point.threshold = t;
  const auto fp = static_cast<std::size_t>(std::count(false_reject.begin(), false_reject.end(), 1));
  const auto fn = static_cast<std::size_t>(std::count(missed.begin(), missed.end(), 1));
  point.type1_hat = static_cast<double>(fp) / static_cast<double>(trials);
  point.type2_hat = static_cast<double>(fn) / static_cast<double>(trials);
  point.type1_ci = wilson_interval(fp, trials);
  point.type2_ci = wilson_interval(fn, trials);
  return point;
}

void validate_setup(const CurveSetup& setup) {
  auto check_models = [](const std::vector<NamedModel>& models, const char* what) {
    if (models.empty()) throw DomainError(std::string(what) + " is empty");
    for (const auto& m : models) {
      if (!m.model) throw DomainError("model '" + m.id + "' is null");
    }
  };
  std::vector<const NamedModel*> all;
  if (const auto* attribution = std::get_if<AttributionSetup>(&setup)) {
    check_models(attribution->set_a, "set A");
    check_models(attribution->set_b, "set B");
    for (const auto& m : attribution->set_a) all.push_back(&m);
    for (const auto& m : attribution->set_b) all.push_back(&m);
  } else {
    const auto& detection = std::get<DetectionSetup>(setup);
    if (!detection.evaluator.model) throw DomainError("evaluator is null");
    check_models(detection.null_sources, "null source list");
    all.push_back(&detection.evaluator);
    for (const auto& m : detection.null_sources) all.push_back(&m);
    if (const auto* fixed = std::get_if<FixedThreshold>(&detection.threshold)) {
      if (std::isnan(fixed->t) || (detection.sidedness == Sidedness::TwoSided && fixed->t < 0.0)) {
        throw DomainError("invalid detection threshold");
      }
    }
  }
  for (const auto* m : all) {
    if (!(m->model->alphabet() == all.front()->model->alphabet())) {
      throw DomainError("configuration references mismatched alphabets");
    }
  }
}

}  // namespace

ErrorCurve error_curve(const CurveSetup& setup, std::span<const std::size_t> ns,
                       std::size_t trials, std::uint64_t master_seed,
                       std::span<const Token> prompt) {
  if (trials < 500) throw DomainError("error_curve needs at least 500 trials");
  if (ns.empty()) throw DomainError("error_curve needs at least one length");
  validate_setup(setup);

  ErrorCurve curve;
  curve.configuration = describe(setup);
  for (std::size_t j = 0; j < ns.size(); ++j) {
    if (ns[j] == 0) throw DomainError("sequence length must be at least 1");
    if (const auto* attribution = std::get_if<AttributionSetup>(&setup)) {
      curve.points.push_back(attribution_point(*attribution, ns[j], j, trials, master_seed, prompt));
    } else {
      curve.points.push_back(
          detection_point(std::get<DetectionSetup>(setup), ns[j], j, trials, master_seed, prompt));
    }
  }
  return curve;
}

}  // namespace perplex
