#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "perplex/hypothesis.hpp"

namespace perplex::cli {

using std::filesystem::path;

struct OutputFile {
  path target;
  std::string content;
};

// What a subcommand produced: files to commit plus a human summary for stdout.
// Commands never touch the filesystem for writing; write_outputs does that
// once every file has been computed, so a failed run leaves nothing behind.
struct CommandOutput {
  std::vector<OutputFile> files;
  std::string table;
};

// Writes each file to a sibling temporary and renames it into place.
void write_outputs(const std::vector<OutputFile>& files);

struct SimulateConfig {
  // Generator: a model file, or a uniform / random Markov model built here.
  std::optional<path> model;
  bool uniform = false;
  std::size_t alphabet = 4;
  std::size_t order = 0;
  double concentration = 1.0;
  double epsilon = 1e-3;
  std::uint64_t model_seed = 1;
  std::string generator_name = "generator";

  // Scoring model for the emitted traces; defaults to the generator.
  std::optional<path> evaluator;
  std::optional<std::string> evaluator_name;
  std::optional<std::string> label;

  std::size_t n = 100;
  std::size_t count = 1;
  std::size_t prompt_len = 0;
  std::uint64_t seed = 1;

  path out = "traces.jsonl";
  std::optional<path> out_model;
  std::optional<path> out_tokens;
};

struct CalibrateConfig {
  path null_traces;
  double fpr = 0.05;
  Sidedness sidedness = Sidedness::OneSided;
  path out = "profile.json";
};

struct DetectConfig {
  path traces;
  std::optional<path> profile;
  std::optional<path> null_traces;  // on-the-fly calibration when no profile is given
  double fpr = 0.05;
  Sidedness sidedness = Sidedness::OneSided;
  std::vector<double> budgets;  // TPR@FPR budgets; empty means the profile's target
  path out = "detect_report.json";
};

struct AttributeConfig {
  std::vector<path> set_a;
  std::vector<path> set_b;
  path texts;
  path out = "attribution_report.json";
};

struct LabConfig {
  std::optional<std::string> suite;
  // Explicit tail grid when no suite is named.
  std::optional<path> generator;
  std::optional<path> evaluator;
  std::uint64_t seed = 20240601;
  std::optional<std::size_t> trials;
  std::optional<std::vector<std::size_t>> n_grid;
  std::optional<std::vector<double>> t_grid;
  bool exact_oracle = false;
  bool plot = false;
  path out = "lab_report.json";
};

struct MetricsConfig {
  std::vector<path> traces;
  std::optional<path> scores;
  std::vector<double> budgets = {0.01, 0.05};
  path out = "metrics.json";
};

// Each validate throws DomainError on the first bad parameter.
void validate(const SimulateConfig& config);
void validate(const CalibrateConfig& config);
void validate(const DetectConfig& config);
void validate(const AttributeConfig& config);
void validate(const LabConfig& config);
void validate(const MetricsConfig& config);

CommandOutput cmd_simulate(const SimulateConfig& config);
CommandOutput cmd_calibrate(const CalibrateConfig& config);
CommandOutput cmd_detect(const DetectConfig& config);
CommandOutput cmd_attribute(const AttributeConfig& config);
CommandOutput cmd_lab(const LabConfig& config);
CommandOutput cmd_metrics(const MetricsConfig& config);

}  // namespace perplex::cli
