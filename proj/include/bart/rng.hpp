#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace bart {

// Wrapper around a mt19937_64 stream. Distribution objects are constructed
// per draw so the engine state is the complete RNG state; that keeps
// checkpointed streams bit-exact on reload.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform();                           // U[0,1)
  double normal();                            // N(0,1)
  double normal(double mean, double sd) { return mean + sd * normal(); }
  double gamma(double shape, double scale = 1.0);
  double log_gamma(double shape);             // log of a Gamma(shape,1) draw
  double beta(double a, double b);
  double exponential(double mean);
  double chi_squared(double dof);

  // Draw from N(mean, sd^2) truncated to (lower, inf) or (-inf, upper).
  double truncated_normal_above(double mean, double sd, double lower);
  double truncated_normal_below(double mean, double sd, double upper);

  // Index draw with probabilities proportional to `weights` (>= 0).
  int categorical(std::span<const double> weights);
  // Same, weights given in the log domain (shift-invariant).
  int categorical_log(std::span<const double> log_weights);
  std::uint64_t integer(std::uint64_t n);     // uniform on {0,..,n-1}

  std::vector<double> dirichlet(std::span<const double> conc);
  // Dirichlet draw represented as log-probabilities; stable for tiny
  // concentrations where a direct draw underflows to zero.
  void dirichlet_log(std::span<const double> conc, std::span<double> log_out);

  // Independent stream derived from this seed for chain `id`.
  static Rng for_chain(std::uint64_t seed, std::uint64_t id);

  std::string save_state() const;
  void load_state(const std::string& text);

 private:
  double std_trunc_normal_lower(double a);  // Z ~ N(0,1) | Z > a
  std::mt19937_64 engine_;
};

}  // namespace bart
