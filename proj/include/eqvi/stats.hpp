#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace eqvi::stats {

double mean(std::span<const double> x);
/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double stddev(std::span<const double> x);
double standard_error(std::span<const double> x);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  std::size_t points = 0;
};
/// Ordinary least squares y = intercept + slope * x.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov test with the asymptotic Kolmogorov p-value.
TestResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Chi-square test of homogeneity for two count vectors over the same cells.
/// Cells empty in both samples are dropped.
TestResult chi_square_homogeneity(std::span<const double> a, std::span<const double> b);

/// Median of a copy of x.
double median(std::vector<double> x);

}  // namespace eqvi::stats
