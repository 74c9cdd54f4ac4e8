#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "perplex/lab.hpp"
#include "perplex/svg.hpp"

namespace perplex {

// Tail estimates for one deviation threshold across the length grid.
struct TailSeries {
  std::string label;
  double t = 0.0;
  std::vector<TailEstimate> estimates;
  // Exact oracle values aligned with estimates, when requested.
  std::vector<std::optional<double>> exact;
  std::optional<DecayFit> fit;
  std::string fit_note;
};

struct LabReport {
  std::string suite;
  std::uint64_t master_seed = 0;
  std::string configuration;
  std::vector<TailSeries> tails;
  std::vector<ErrorCurve> curves;
};

std::string to_json(const LabReport& report);
std::string render_table(const LabReport& report);
std::vector<LineChart> report_charts(const LabReport& report);

}  // namespace perplex
