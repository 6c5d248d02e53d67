#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace condfilter {

// Two-parameter pre-training cost model: a fixed overhead (filtering,
// setup, data plumbing) plus a compute term that scales linearly with
// image-epochs and quadratically with the image side length.
struct CostProfile {
  double throughput_coeff = 0.0;      // hours per image-epoch at 224
  double fixed_overhead_hours = 0.0;
  int reference_resolution = 224;

  void validate() const;
};

struct CostEstimate {
  double hours = 0.0;
  // The model is calibrated only at 112 and 224; anything else still
  // computes but is flagged.
  bool off_grid_resolution = false;
};

CostEstimate estimate_cost(long long images, long long epochs, int resolution,
                           const CostProfile& profile);

struct CostObservation {
  long long images = 0;
  long long epochs = 0;
  int resolution = 0;
  double hours = 0.0;
};

struct CalibrationResult {
  CostProfile profile;
  std::vector<double> residuals;  // observed - predicted, per observation
  double max_abs_residual = 0.0;
};

// Least-squares fit of (throughput_coeff, fixed_overhead_hours). Needs at
// least two observations with distinct compute terms. A negative overhead
// solution is re-fit with the overhead pinned at zero.
CalibrationResult calibrate(const std::vector<CostObservation>& observations);

std::string format_cost_profile(const CostProfile& profile);
CostProfile parse_cost_profile(const std::string& text);
void save_cost_profile(const CostProfile& profile, const std::string& path);
CostProfile load_cost_profile(const std::string& path);

std::vector<CostObservation> load_cost_observations(const std::string& path);

}  // namespace condfilter
