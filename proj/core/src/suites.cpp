#include "perplex/suites.hpp"

#include <memory>

#include "perplex/error.hpp"
#include "perplex/numfmt.hpp"
#include "perplex/seeding.hpp"

namespace perplex {

namespace family {

namespace {

std::shared_ptr<const MarkovModel> shared(MarkovModel model) {
  return std::make_shared<const MarkovModel>(std::move(model));
}

}  // namespace

ModelPair tail_pair(bool same_model) {
  const Alphabet alphabet(kTailAlphabet);
  auto generator = shared(random_markov(alphabet, 1, kTailConcentration, kTailEpsilon, 101));
  if (same_model) return {generator, generator};
  return {generator, shared(random_markov(alphabet, 1, kTailConcentration, kTailEpsilon, 202))};
}

AttributionSetup attribution_family() {
  const Alphabet alphabet(kTestAlphabet);
  const MarkovModel base = random_markov(alphabet, 1, kTestConcentration, kTestEpsilon, 301);
  auto member = [&](std::uint64_t seed) {
    return shared(blend(base, random_markov(alphabet, 1, kTestConcentration, kTestEpsilon, seed),
                        kAttributionBlend, kTestEpsilon));
  };
  AttributionSetup setup;
  setup.set_a.push_back({"A1", member(311)});
  setup.set_b.push_back({"B1", member(312)});
  setup.set_b.push_back({"B2", member(313)});
  setup.set_b.push_back({"B3", member(314)});
  return setup;
}

DetectionSetup detection_family(Sidedness sidedness,
                                std::variant<FixedThreshold, CalibratedThreshold> threshold) {
  const Alphabet alphabet(kTestAlphabet);
  DetectionSetup setup;
  setup.evaluator = {"A", shared(random_markov(alphabet, 1, kTestConcentration, kTestEpsilon, 401))};
  for (std::uint64_t i = 0; i < 3; ++i) {
    setup.null_sources.push_back(
        {"B" + std::to_string(i + 1),
         shared(random_markov(alphabet, 1, kTestConcentration, kTestEpsilon, 402 + i))});
  }
  setup.sidedness = sidedness;
  setup.threshold = threshold;
  return setup;
}

}  // namespace family

namespace {

const std::vector<std::size_t> kTailLengths = {125, 250, 500, 1000, 2000};
const std::vector<double> kTailThresholds = {0.05, 0.1, 0.2, 0.4};
const std::vector<std::size_t> kCurveLengths = {125, 250, 500, 1000};
constexpr std::size_t kTailTrials = 5000;
constexpr std::size_t kCurveTrials = 2000;

std::string tail_configuration(const char* which) {
  return std::string(which) + ": K=" + std::to_string(family::kTailAlphabet) +
         " order=1 epsilon=" + format_short(family::kTailEpsilon) +
         " concentration=" + format_short(family::kTailConcentration);
}

}  // namespace

std::vector<std::string> suite_names() {
  return {"thm1a-default", "thm1b-default", "prop1-default", "prop2-default", "oracle-small"};
}

LabReport run_tail_grid(const std::string& name, const SequentialModel& generator,
                        const SequentialModel& evaluator, const std::vector<std::size_t>& ns,
                        const std::vector<double>& ts, std::size_t trials,
                        std::uint64_t master_seed, bool exact_oracle) {
  if (trials < 100) throw DomainError("tail estimates need at least 100 trials");
  if (ns.empty() || ts.empty()) throw DomainError("tail grid needs lengths and thresholds");
  for (const double t : ts) {
    if (!(t >= 0.0)) throw DomainError("deviation thresholds must be non-negative");
  }
  if (exact_oracle) {
    for (const std::size_t n : ns) check_enumeration_guard(generator.alphabet().size(), n);
  }

  LabReport report;
  report.suite = name;
  report.master_seed = master_seed;
  report.tails.resize(ts.size());
  for (std::size_t k = 0; k < ts.size(); ++k) {
    report.tails[k].label = name;
    report.tails[k].t = ts[k];
  }

  for (std::size_t j = 0; j < ns.size(); ++j) {
    const auto deviations =
        sample_deviations(generator, evaluator, ns[j], trials, mix_seed(master_seed, j));
    for (std::size_t k = 0; k < ts.size(); ++k) {
      report.tails[k].estimates.push_back(tail_from_deviations(deviations, ns[j], ts[k]));
      if (exact_oracle) {
        report.tails[k].exact.push_back(exact_tail(generator, evaluator, ns[j], ts[k]));
      }
    }
  }

  for (auto& series : report.tails) {
    std::vector<std::pair<double, double>> points;
    std::size_t positive = 0;
    for (const auto& e : series.estimates) {
      points.emplace_back(static_cast<double>(e.n), e.p_hat);
      if (e.p_hat > 0.0) ++positive;
    }
    if (positive >= 3) {
      series.fit = fit_decay(points);
    } else {
      series.fit_note = "fewer than three lengths with p_hat > 0; no decay fit";
    }
  }
  return report;
}

LabReport run_suite(const std::string& name, const SuiteOptions& options) {
  if (name == "thm1a-default" || name == "thm1b-default") {
    const bool same = name == "thm1a-default";
    const auto pair = family::tail_pair(same);
    LabReport report = run_tail_grid(name, *pair.generator, *pair.evaluator,
                                     options.n_grid.value_or(kTailLengths),
                                     options.t_grid.value_or(kTailThresholds),
                                     options.trials.value_or(kTailTrials), options.master_seed,
                                     options.exact_oracle);
    report.configuration = tail_configuration(same ? "generator == evaluator" : "generator != evaluator");
    return report;
  }

  if (name == "prop1-default" || name == "prop2-default") {
    const auto ns = options.n_grid.value_or(kCurveLengths);
    const std::size_t trials = options.trials.value_or(kCurveTrials);
    if (options.exact_oracle) {
      for (const std::size_t n : ns) check_enumeration_guard(family::kTestAlphabet, n);
    }
    LabReport report;
    report.suite = name;
    report.master_seed = options.master_seed;
    report.configuration = "K=" + std::to_string(family::kTestAlphabet) +
                           " order=1 epsilon=" + format_short(family::kTestEpsilon);
    if (name == "prop1-default") {
      report.curves.push_back(
          error_curve(family::attribution_family(), ns, trials, options.master_seed));
    } else {
      const double t = options.t_grid && !options.t_grid->empty() ? options.t_grid->front() : 0.1;
      report.curves.push_back(error_curve(
          family::detection_family(Sidedness::TwoSided, FixedThreshold{t}), ns, trials,
          options.master_seed));
      report.curves.push_back(error_curve(
          family::detection_family(Sidedness::OneSided, CalibratedThreshold{0.05, 1000}), ns,
          trials, mix_seed(options.master_seed, 1)));
    }
    return report;
  }

  if (name == "oracle-small") {
    const Alphabet alphabet(3);
    const MarkovModel generator(alphabet, 0, {Distribution({0.6, 0.3, 0.1})}, std::nullopt);
    const MarkovModel evaluator(alphabet, 0, {Distribution({0.3, 0.4, 0.3})}, std::nullopt);
    LabReport report = run_tail_grid(name, generator, evaluator,
                                     options.n_grid.value_or(std::vector<std::size_t>{2, 4, 6, 8, 10}),
                                     options.t_grid.value_or(std::vector<double>{0.05, 0.1}),
                                     options.trials.value_or(2000), options.master_seed, true);
    report.configuration = "K=3 order=0 B=[0.6,0.3,0.1] A=[0.3,0.4,0.3]";
    return report;
  }

  throw DomainError("unknown lab suite '" + name + "'");
}

}  // namespace perplex
