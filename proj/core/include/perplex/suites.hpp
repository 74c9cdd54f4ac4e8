#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "perplex/lab.hpp"
#include "perplex/lab_report.hpp"
#include "perplex/seqmodel.hpp"

namespace perplex {

// Standard desk-scale model families used by the lab suites and the
// acceptance run. Every model is drawn from fixed seeds.
namespace family {

inline constexpr std::size_t kTailAlphabet = 20;
inline constexpr double kTailEpsilon = 1e-3;
inline constexpr double kTailConcentration = 0.3;

inline constexpr std::size_t kTestAlphabet = 30;
inline constexpr double kTestEpsilon = 1e-3;
inline constexpr double kTestConcentration = 1.0;
inline constexpr double kAttributionBlend = 0.22;

struct ModelPair {
  std::shared_ptr<const MarkovModel> generator;
  std::shared_ptr<const MarkovModel> evaluator;
};

// K=20, order-1, eps=1e-3 random models. same_model selects the
// generator == evaluator specialization.
ModelPair tail_pair(bool same_model);

// One A model against three B models: K=30, order 1, eps=1e-3, each a blend of
// a shared base with an independent random model.
AttributionSetup attribution_family();

// Evaluator A against three independent null sources (K=30, order 1, eps=1e-3).
DetectionSetup detection_family(Sidedness sidedness,
                                std::variant<FixedThreshold, CalibratedThreshold> threshold);

}  // namespace family

struct SuiteOptions {
  std::uint64_t master_seed = 20240601;
  std::optional<std::size_t> trials;
  std::optional<std::vector<std::size_t>> n_grid;
  std::optional<std::vector<double>> t_grid;
  bool exact_oracle = false;
};

std::vector<std::string> suite_names();

// Tail sweep: one TailSeries per t over the length grid, fit_decay attached
// when at least three estimates are positive.
LabReport run_tail_grid(const std::string& name, const SequentialModel& generator,
                        const SequentialModel& evaluator, const std::vector<std::size_t>& ns,
                        const std::vector<double>& ts, std::size_t trials,
                        std::uint64_t master_seed, bool exact_oracle);

// Throws DomainError for an unknown suite and GuardError when the exact oracle
// is requested on a grid beyond the enumeration guard.
LabReport run_suite(const std::string& name, const SuiteOptions& options);

}  // namespace perplex
