#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace bart {

// log(sum(exp(x))) without overflow.
double log_sum_exp(std::span<const double> x);

// Logistic function, safe at both tails.
inline double logistic(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double log_beta_pdf(double x, double a, double b);

// Quantile of the chi-squared distribution with `dof` degrees of freedom.
double chi_squared_quantile(double p, double dof);

double mean(std::span<const double> x);
double variance(std::span<const double> x);  // unbiased

// Empirical quantile with linear interpolation between order statistics.
// `sorted` must be ascending.
double quantile_sorted(std::span<const double> sorted, double p);
double quantile(std::vector<double> x, double p);  // copies and sorts

// Standard error of the mean of a correlated series via non-overlapping
// batch means. Falls back to the iid formula when the series is too short.
double batch_se(std::span<const double> x, int num_batches = 50);

// Standard error of the mean of an iid sample.
double iid_se(std::span<const double> x);

}  // namespace bart
