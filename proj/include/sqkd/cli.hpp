#pragma once

#include "sqkd/config.hpp"

#include <ostream>
#include <string>
#include <vector>

namespace sqkd {

/// P_k used by a configuration: conjugate-basis averages or uniform.
SourceDistribution config_source(const ExperimentConfig& config);

struct ScalingResult {
  double aperture = 0.0;
  int d = 0;
  double I_A = 0.0;
  double envelope_radius = 0.0;  // fixed at the configured alphabet's value
  double envelope_waist = 0.0;
};

/// Fills the configured alphabet's 99% envelope circle with cells of radius
/// `aperture` and evaluates the Gaussian source entropy over them.
ScalingResult scaling_estimate(const ExperimentConfig& config, double aperture);

/// Entry point of the command-line tool; args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sqkd
