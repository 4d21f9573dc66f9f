#include "bart/rng.hpp"

#include "bart/stats.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace bart {

double Rng::uniform() {
  // 53-bit mantissa, exact [0,1)
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  std::normal_distribution<double> d(0.0, 1.0);
  return d(engine_);
}

double Rng::gamma(double shape, double scale) {
  std::gamma_distribution<double> d(shape, scale);
  return d(engine_);
}

// Log-domain gamma sampler; for small shapes the linear-scale draw
// underflows, so sample log(X) directly (rejection scheme of Liu, Martin
// and Syring for shape < 1).
double Rng::log_gamma(double shape) {
  if (shape >= 0.1) {
    double g;
    do {
      g = gamma(shape, 1.0);
    } while (g <= 0.0);
    return std::log(g);
  }
  const double a = shape;
  const double L = 1.0 / a - 1.0;
  const double w = std::exp(-1.0) * a / (1.0 - a);
  const double ww = 1.0 / (1.0 + w);
  double z = 0.0;
  while (true) {
    double u = uniform();
    z = (u <= ww) ? -std::log(u / ww) : std::log(uniform()) / L;
    double eta = z >= 0.0 ? -z : std::log(w) + std::log(L) + L * z;
    double h = -z - std::exp(-z / a);
    if (h - eta > std::log(uniform())) break;
  }
  return -z / a;
}

double Rng::beta(double a, double b) {
  // Log-domain ratio keeps tiny shapes stable.
  double lx = log_gamma(a);
  double ly = log_gamma(b);
  return logistic(lx - ly);
}

double Rng::exponential(double mean) {
  std::exponential_distribution<double> d(1.0 / mean);
  return d(engine_);
}

double Rng::chi_squared(double dof) { return gamma(0.5 * dof, 2.0); }

// Robert (1995): exact one-sided truncated standard normal.
double Rng::std_trunc_normal_lower(double a) {
  if (a < 0.45) {
    while (true) {
      double z = normal();
      if (z > a) return z;
    }
  }
  const double lambda = 0.5 * (a + std::sqrt(a * a + 4.0));
  while (true) {
    double z = a + exponential(1.0 / lambda);
    double d = z - lambda;
    if (uniform() <= std::exp(-0.5 * d * d)) return z;
  }
}

double Rng::truncated_normal_above(double mean, double sd, double lower) {
  return mean + sd * std_trunc_normal_lower((lower - mean) / sd);
}

double Rng::truncated_normal_below(double mean, double sd, double upper) {
  return mean - sd * std_trunc_normal_lower((mean - upper) / sd);
}

int Rng::categorical(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw std::runtime_error("categorical draw with non-positive total weight");
  double u = uniform() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(weights.size()) - 1;
}

int Rng::categorical_log(std::span<const double> log_weights) {
  double lse = log_sum_exp(log_weights);
  if (!std::isfinite(lse)) throw std::runtime_error("categorical draw with non-finite log weights");
  double u = uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    acc += std::exp(log_weights[i] - lse);
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(log_weights.size()) - 1;
}

std::uint64_t Rng::integer(std::uint64_t n) {
  std::uniform_int_distribution<std::uint64_t> d(0, n - 1);
  return d(engine_);
}

std::vector<double> Rng::dirichlet(std::span<const double> conc) {
  std::vector<double> logs(conc.size());
  dirichlet_log(conc, logs);
  for (double& v : logs) v = std::exp(v);
  return logs;
}

void Rng::dirichlet_log(std::span<const double> conc, std::span<double> log_out) {
  if (conc.size() != log_out.size()) throw std::invalid_argument("dirichlet_log size mismatch");
  for (std::size_t i = 0; i < conc.size(); ++i) log_out[i] = log_gamma(conc[i]);
  double lse = log_sum_exp({log_out.data(), log_out.size()});
  for (double& v : log_out) v -= lse;
}

namespace {
std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}
}  // namespace

Rng Rng::for_chain(std::uint64_t seed, std::uint64_t id) {
  return Rng(splitmix64(splitmix64(seed) ^ splitmix64(id + 1)));
}

std::string Rng::save_state() const {
  std::ostringstream os;
  os << engine_;
  return os.str();
}

void Rng::load_state(const std::string& text) {
  std::istringstream is(text);
  is >> engine_;
  if (is.fail()) throw std::runtime_error("bad rng state string");
}

}  // namespace bart
