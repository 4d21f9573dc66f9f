#include "bart/stats.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace bart {

double log_sum_exp(std::span<const double> x) {
  if (x.empty()) return -std::numeric_limits<double>::infinity();
  double m = *std::max_element(x.begin(), x.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

double log_beta_pdf(double x, double a, double b) {
  return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) + std::lgamma(a + b) -
         std::lgamma(a) - std::lgamma(b);
}

double chi_squared_quantile(double p, double dof) {
  boost::math::chi_squared_distribution<double> dist(dof);
  return boost::math::quantile(dist, p);
}

double mean(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return x.empty() ? 0.0 : s / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
  if (sorted.size() == 1) return sorted[0];
  double h = p * static_cast<double>(sorted.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(h));
  auto hi = std::min(lo + 1, sorted.size() - 1);
  double w = h - static_cast<double>(lo);
  return (1.0 - w) * sorted[lo] + w * sorted[hi];
}

double quantile(std::vector<double> x, double p) {
  std::sort(x.begin(), x.end());
  return quantile_sorted(x, p);
}

double iid_se(std::span<const double> x) {
  if (x.size() < 2) return std::numeric_limits<double>::infinity();
  return std::sqrt(variance(x) / static_cast<double>(x.size()));
}

double batch_se(std::span<const double> x, int num_batches) {
  const std::size_t n = x.size();
  if (num_batches < 2 || n < static_cast<std::size_t>(2 * num_batches)) return iid_se(x);
  const std::size_t bsize = n / static_cast<std::size_t>(num_batches);
  std::vector<double> bm(static_cast<std::size_t>(num_batches));
  for (int b = 0; b < num_batches; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < bsize; ++i) s += x[static_cast<std::size_t>(b) * bsize + i];
    bm[static_cast<std::size_t>(b)] = s / static_cast<double>(bsize);
  }
  return std::sqrt(variance(bm) / static_cast<double>(num_batches));
}

}  // namespace bart
