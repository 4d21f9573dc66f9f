#pragma once

#include "bart/data.hpp"
#include "bart/rng.hpp"
#include "bart/tree.hpp"

#include <json.hpp>

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace bart {

// Split-variable counts across an ensemble plus the group aggregates the
// conjugate updates consume.
struct SplitCounts {
  std::vector<long> per_column;  // m_j
  long n_current = 0;
  long n_past = 0;
  std::vector<long> per_group;   // index k-1 -> m^k, size t-1

  static SplitCounts zeros(int P, int t);
};

SplitCounts tally_splits(const std::vector<Tree>& trees, const GroupingMeta& meta);

// Hyperparameter schedule of the time-ordered concentration priors:
// c_j = 1 - (t-j)/(t-1) * 0.5 for j in 1..t-1 (requires t >= 2).
double c_schedule(int t, int j);

// Shared grid machinery for concentration parameters. The posterior of a
// concentration alpha given a simplex s ~ D(alpha/m, ..., alpha/m), with
// prior alpha/(alpha+rho) ~ Beta(a, b), is discretized over lambda =
// alpha/(alpha+rho) on `grid` midpoints and sampled exactly.
std::vector<double> concentration_grid_logweights(std::span<const double> log_probs, double rho,
                                                  double a, double b, int grid);
double sample_concentration(std::span<const double> log_probs, double rho, double a, double b,
                            int grid, Rng& rng);
// Grid-weighted posterior mean of lambda (no sampling; used by diagnostics
// and refinement checks).
double concentration_posterior_mean_lambda(std::span<const double> log_probs, double rho,
                                           double a, double b, int grid);

class SplitSelector {
 public:
  virtual ~SplitSelector() = default;
  virtual std::string kind() const = 0;
  virtual double split_prob(int column) const = 0;
  virtual int draw_split_var(Rng& rng) const = 0;
  // One full posterior sweep of the selector state given split counts.
  virtual void update(const SplitCounts& counts, Rng& rng) = 0;
  // Fresh draw of all selector state from its prior.
  virtual void draw_from_prior(Rng& rng) = 0;
  virtual nlohmann::json snapshot() const = 0;
  virtual std::unique_ptr<SplitSelector> clone() const = 0;
  virtual void save(std::ostream& os) const = 0;
  virtual void load(std::istream& is) = 0;
  virtual int num_columns() const = 0;
};

struct UniformSelector final : SplitSelector {
  int P = 0;

  explicit UniformSelector(int P_) : P(P_) {}
  std::string kind() const override { return "uniform"; }
  double split_prob(int column) const override;
  int draw_split_var(Rng& rng) const override;
  void update(const SplitCounts&, Rng&) override {}
  void draw_from_prior(Rng&) override {}
  nlohmann::json snapshot() const override;
  std::unique_ptr<SplitSelector> clone() const override;
  void save(std::ostream& os) const override;
  void load(std::istream& is) override;
  int num_columns() const override { return P; }
};

// Dirichlet sparsity prior over all P columns: q ~ D(alpha/P,...,alpha/P)
// with alpha/(alpha+rho) ~ Beta(a, b).
struct DirichletSelector final : SplitSelector {
  int P = 0;
  double a = 0.5, b = 1.0, rho = 0.0;  // rho defaults to P
  int grid = 1000;
  std::vector<double> q, log_q;
  double alpha = 1.0;

  DirichletSelector(int P_, double a_, double b_, double rho_, int grid_);
  std::string kind() const override { return "dart"; }
  double split_prob(int column) const override { return q[static_cast<std::size_t>(column)]; }
  int draw_split_var(Rng& rng) const override;
  void update(const SplitCounts& counts, Rng& rng) override;
  void update_q(const SplitCounts& counts, Rng& rng);
  void update_alpha(Rng& rng);
  void draw_from_prior(Rng& rng) override;
  nlohmann::json snapshot() const override;
  std::unique_ptr<SplitSelector> clone() const override;
  void save(std::ostream& os) const override;
  void load(std::istream& is) override;
  int num_columns() const override { return P; }
};

// Hierarchical grouping prior for longitudinal predictors. A split picks
// the current group with probability w, otherwise past group k with
// probability u_k, then a column within the group from v. Concentrations
// eta (current), phi_k (within past group k) and alpha_k (across past
// groups, with the time-ordered Beta(c_k, 1) hyperpriors) are updated on
// lambda grids.
struct LDirichletSelector final : SplitSelector {
  int P = 0;
  int t = 1;
  std::vector<int> col_group;                  // 0 current, k past
  std::vector<int> current_cols;               // column indices
  std::vector<std::vector<int>> past_cols;     // per active group
  std::vector<int> active_past;                // time indices k with P_k > 0
  std::vector<int> col_pos;                    // position of a column inside its group

  double w = 0.5;
  std::vector<double> v_current, log_v_current;
  std::vector<std::vector<double>> v_past, log_v_past;
  std::vector<double> u, log_u;                // over active past groups
  double eta = 1.0;
  std::vector<double> phi;                     // per active past group
  std::vector<double> alpha;                   // per active past group

  double w_a = 1.0, w_b = 1.0;
  double conc_a = 0.5, conc_b = 1.0;           // DART-style Beta hyperprior for eta, phi
  int grid = 1000;

  LDirichletSelector(const GroupingMeta& meta, double w_a_, double w_b_, int grid_);
  std::string kind() const override { return "ldirichlet"; }

  bool has_current() const { return !current_cols.empty(); }
  bool has_past() const { return !active_past.empty(); }
  // Effective current-group probability: pinned when a side is empty so the
  // column probabilities always normalize.
  double effective_w() const;

  double split_prob(int column) const override;
  int draw_split_var(Rng& rng) const override;
  void update(const SplitCounts& counts, Rng& rng) override;
  void draw_from_prior(Rng& rng) override;
  nlohmann::json snapshot() const override;
  std::unique_ptr<SplitSelector> clone() const override;
  void save(std::ostream& os) const override;
  void load(std::istream& is) override;
  int num_columns() const override { return P; }

  // Individual update steps (exposed for the oracle tests).
  void update_v(const SplitCounts& counts, Rng& rng);
  void update_u(const SplitCounts& counts, Rng& rng);
  void update_w(const SplitCounts& counts, Rng& rng);
  void update_concentrations(Rng& rng);
  // Conditional log-weights of the lambda_k grid for past-group
  // concentration alpha_k (index into active_past).
  std::vector<double> alpha_k_grid_logweights(int active_idx, int grid_points) const;
};

struct SelectorConfig {
  std::string kind = "uniform";  // uniform | dart | ldirichlet
  double dart_a = 0.5;
  double dart_b = 1.0;
  double dart_rho = 0.0;  // 0 -> P
  double w_a = 1.0;
  double w_b = 1.0;
  int grid = 1000;
};

std::unique_ptr<SplitSelector> make_selector(const SelectorConfig& cfg, int P,
                                             const GroupingMeta& meta);

// Checkpoint helpers (selector kind tag plus state).
void save_selector(std::ostream& os, const SplitSelector& sel);
std::unique_ptr<SplitSelector> load_selector(std::istream& is, const GroupingMeta& meta);

}  // namespace bart
