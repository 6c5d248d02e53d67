#include <doctest.h>

#include <cmath>
#include <fstream>

#include "condfilter/cost_model.hpp"
#include "condfilter/errors.hpp"
#include "condfilter/rng.hpp"
#include "test_util.hpp"

using namespace condfilter;
using testutil::TempDir;

TEST_CASE("half resolution exactly quarters the compute term") {
  CostProfile profile;
  profile.throughput_coeff = 2e-6;
  profile.fixed_overhead_hours = 0.0;
  const double full = estimate_cost(1000000, 10, 224, profile).hours;
  const double half = estimate_cost(1000000, 10, 112, profile).hours;
  CHECK(half == doctest::Approx(0.25 * full).epsilon(1e-12));
}

TEST_CASE("estimate flags uncalibrated resolutions") {
  CostProfile profile;
  profile.throughput_coeff = 1e-6;
  CHECK_FALSE(estimate_cost(1000, 1, 224, profile).off_grid_resolution);
  CHECK_FALSE(estimate_cost(1000, 1, 112, profile).off_grid_resolution);
  CHECK(estimate_cost(1000, 1, 160, profile).off_grid_resolution);
}

TEST_CASE("estimate validates arguments") {
  CostProfile profile;
  profile.throughput_coeff = 1e-6;
  CHECK_THROWS_AS(estimate_cost(0, 1, 224, profile), ArgumentError);
  CHECK_THROWS_AS(estimate_cost(1, 0, 224, profile), ArgumentError);
  CHECK_THROWS_AS(estimate_cost(1, 1, 0, profile), ArgumentError);
  profile.throughput_coeff = 0.0;
  CHECK_THROWS_AS(estimate_cost(1, 1, 224, profile), ArgumentError);
}

TEST_CASE("estimate is strictly monotone in every argument") {
  CostProfile profile;
  profile.throughput_coeff = 3e-7;
  profile.fixed_overhead_hours = 5.0;
  const double base = estimate_cost(100000, 90, 112, profile).hours;
  CHECK(estimate_cost(100001, 90, 112, profile).hours > base);
  CHECK(estimate_cost(100000, 91, 112, profile).hours > base);
  CHECK(estimate_cost(100000, 90, 113, profile).hours > base);
}

TEST_CASE("doubling images and halving epochs keeps the compute term") {
  CostProfile profile;
  profile.throughput_coeff = 4e-7;
  profile.fixed_overhead_hours = 3.0;
  const double a = estimate_cost(200000, 40, 224, profile).hours;
  const double b = estimate_cost(400000, 20, 224, profile).hours;
  CHECK(a == doctest::Approx(b).epsilon(1e-12));
}

TEST_CASE("calibration recovers an exact synthetic profile") {
  CostProfile truth;
  truth.throughput_coeff = 8e-7;
  truth.fixed_overhead_hours = 12.0;
  std::vector<CostObservation> obs = {
      {1280000, 90, 224, estimate_cost(1280000, 90, 224, truth).hours},
      {150000, 90, 112, estimate_cost(150000, 90, 112, truth).hours},
  };
  const CalibrationResult result = calibrate(obs);
  CHECK(result.profile.throughput_coeff ==
        doctest::Approx(truth.throughput_coeff).epsilon(1e-9));
  CHECK(result.profile.fixed_overhead_hours ==
        doctest::Approx(truth.fixed_overhead_hours).epsilon(1e-9));
  for (double r : result.residuals) CHECK(std::abs(r) < 1e-6);
}

TEST_CASE("calibration tolerates five percent noise") {
  CostProfile truth;
  truth.throughput_coeff = 8e-7;
  truth.fixed_overhead_hours = 10.0;
  const std::vector<std::pair<long long, int>> grid = {
      {1280000, 224}, {1280000, 112}, {640000, 224},
      {150000, 224},  {150000, 112},  {75000, 224},
  };
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    Rng rng(trial + 500);
    std::vector<CostObservation> obs;
    for (const auto& [images, res] : grid) {
      const double clean = estimate_cost(images, 90, res, truth).hours;
      const double noisy = clean * (1.0 + 0.05 * rng.gaussian());
      obs.push_back({images, 90, res, std::max(noisy, 0.0)});
    }
    const CalibrationResult result = calibrate(obs);
    CHECK(std::abs(result.profile.throughput_coeff - truth.throughput_coeff) <=
          0.15 * truth.throughput_coeff);

    // Prediction plus reported residual reconstructs every observation.
    for (std::size_t i = 0; i < obs.size(); ++i) {
      const double pred = estimate_cost(obs[i].images, obs[i].epochs,
                                        obs[i].resolution, result.profile)
                              .hours;
      CHECK(pred + result.residuals[i] ==
            doctest::Approx(obs[i].hours).epsilon(1e-12));
      CHECK(std::abs(result.residuals[i]) <= result.max_abs_residual + 1e-12);
    }
  }
}

TEST_CASE("calibration failure modes") {
  SUBCASE("single observation") {
    CHECK_THROWS_AS(calibrate({{1000, 10, 224, 5.0}}), CalibrationError);
  }
  SUBCASE("identical compute terms are rank deficient") {
    CHECK_THROWS_AS(
        calibrate({{1000, 10, 224, 5.0}, {1000, 10, 224, 6.0}}),
        CalibrationError);
  }
  SUBCASE("equivalent compute terms via the resolution factor") {
    // 4x images at half resolution has the same compute term.
    CHECK_THROWS_AS(
        calibrate({{1000, 10, 224, 5.0}, {4000, 10, 112, 6.0}}),
        CalibrationError);
  }
}

TEST_CASE("fitted profile reproduces the published cost bands") {
  // Supervised full-dataset rows: 170h at 224, 100h at 112, 90 epochs.
  const std::vector<CostObservation> supervised = {
      {1280000, 90, 224, 170.0},
      {1280000, 90, 112, 100.0},
  };
  const CalibrationResult fit = calibrate(supervised);
  const double at224 = estimate_cost(1280000, 90, 224, fit.profile).hours;
  const double at112 = estimate_cost(1280000, 90, 112, fit.profile).hours;
  CHECK(at224 >= 160.0);
  CHECK(at224 <= 180.0);
  CHECK(at112 >= 90.0);
  CHECK(at112 <= 110.0);

  // Unsupervised subset economics: fit on the full-dataset and 12%-subset
  // rows at 224, then compare predicted subset cost against full cost.
  const std::vector<CostObservation> unsupervised = {
      {1280000, 200, 224, 215.0},
      {150000, 200, 224, 35.5},
  };
  const CalibrationResult unsup = calibrate(unsupervised);
  const double full = estimate_cost(1280000, 200, 224, unsup.profile).hours;
  const double subset = estimate_cost(150000, 200, 224, unsup.profile).hours;
  CHECK(subset / full <= 0.2);

  // Pre-training compute alone (no fixed overhead) scales with the image
  // count: a 12% subset costs under 15% of the full run.
  CostProfile compute_only = unsup.profile;
  compute_only.fixed_overhead_hours = 0.0;
  const double ratio =
      estimate_cost(150000, 200, 224, compute_only).hours /
      estimate_cost(1280000, 200, 224, compute_only).hours;
  CHECK(ratio <= 0.15);
}

TEST_CASE("profile persistence and observation files") {
  TempDir dir;
  CostProfile profile;
  profile.throughput_coeff = 8.1018518518518512e-07;
  profile.fixed_overhead_hours = 76.666666666666671;
  const auto path = dir.file("prof.txt");
  save_cost_profile(profile, path);
  const CostProfile back = load_cost_profile(path);
  CHECK(back.throughput_coeff == profile.throughput_coeff);
  CHECK(back.fixed_overhead_hours == profile.fixed_overhead_hours);
  CHECK(back.reference_resolution == 224);

  const auto obs_path = dir.file("obs.txt");
  {
    std::ofstream out(obs_path);
    out << "# images epochs resolution hours\n";
    out << "1280000 90 224 170\n";
    out << "1280000 90 112 100\n";
  }
  const auto obs = load_cost_observations(obs_path);
  REQUIRE(obs.size() == 2);
  CHECK(obs[1].resolution == 112);
  CHECK(obs[1].hours == 100.0);
}
