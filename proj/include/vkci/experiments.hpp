#pragma once

#include <map>
#include <string>
#include <vector>

#include "vkci/films.hpp"
#include "vkci/masystem.hpp"

namespace vkci {

enum class ExperimentKind {
  step_verify,
  stage_slope,
  nk_run,
  ma_roundtrip,
  density_demo,
  energy_scan,
};

const char* kind_name(ExperimentKind k);
ExperimentKind kind_from_name(const std::string& name);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::step_verify;
  int d = 2;
  int k = 1;
  long n = 0;  // 0 = per-experiment default
  std::vector<double> sigmas;
  double alpha = 0;  // 0 = per-experiment default
  double beta = 1.0;
  double eps = 0.05;
  double gamma = 2.0;
  std::vector<double> gammas;  // energy scan list; empty = {0.4, 2, 5}
  unsigned long seed = 1;
  std::string out = "out";

  void validate() const;  // kind-specific completeness
};

// strict flat key=value parser; unknown or duplicate keys are rejected
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text);

// canonical serialization; parse(canonical(c)) == c
std::string canonical_config(const ExperimentConfig& c);

// runs the experiment, writing CSV/JSON artifacts plus a manifest under
// config.out; throws the module errors on failure
void run_experiment(const ExperimentConfig& config);

}  // namespace vkci
