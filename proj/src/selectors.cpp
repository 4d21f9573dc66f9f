#include "bart/selectors.hpp"

#include "bart/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace bart {

namespace {

constexpr double kLambdaEps = 1e-12;

double lambda_to_alpha(double lambda, double rho) {
  lambda = std::clamp(lambda, kLambdaEps, 1.0 - kLambdaEps);
  return rho * lambda / (1.0 - lambda);
}

void write_vec(std::ostream& os, std::span<const double> v) {
  os << v.size();
  char buf[40];
  for (double x : v) {
    std::snprintf(buf, sizeof(buf), " %.17g", x);
    os << buf;
  }
  os << "\n";
}

std::vector<double> read_vec(std::istream& is) {
  std::size_t n = 0;
  is >> n;
  std::vector<double> v(n);
  for (auto& x : v) is >> x;
  if (is.fail()) throw std::runtime_error("bad selector state vector");
  return v;
}

}  // namespace

SplitCounts SplitCounts::zeros(int P, int t) {
  SplitCounts c;
  c.per_column.assign(static_cast<std::size_t>(P), 0);
  c.per_group.assign(static_cast<std::size_t>(std::max(0, t - 1)), 0);
  return c;
}

SplitCounts tally_splits(const std::vector<Tree>& trees, const GroupingMeta& meta) {
  SplitCounts counts =
      SplitCounts::zeros(static_cast<int>(meta.column_group.size()), meta.response_time);
  for (const Tree& tree : trees) {
    for (const TreeNode& nd : tree.nodes) {
      if (nd.is_leaf()) continue;
      counts.per_column[static_cast<std::size_t>(nd.var)]++;
      int g = meta.column_group[static_cast<std::size_t>(nd.var)];
      if (g == 0) {
        counts.n_current++;
      } else {
        counts.n_past++;
        counts.per_group[static_cast<std::size_t>(g - 1)]++;
      }
    }
  }
  return counts;
}

double c_schedule(int t, int j) {
  if (t < 2) throw std::invalid_argument("c_schedule requires t >= 2 (no past groups otherwise)");
  if (j < 1 || j > t - 1) throw std::invalid_argument("c_schedule index j outside 1..t-1");
  return 1.0 - (static_cast<double>(t - j) / static_cast<double>(t - 1)) * 0.5;
}

std::vector<double> concentration_grid_logweights(std::span<const double> log_probs, double rho,
                                                  double a, double b, int grid) {
  const double m = static_cast<double>(log_probs.size());
  double sum_logs = 0.0;
  for (double lp : log_probs) sum_logs += lp;
  std::vector<double> logw(static_cast<std::size_t>(grid));
  for (int i = 0; i < grid; ++i) {
    double lambda = (static_cast<double>(i) + 0.5) / static_cast<double>(grid);
    double alpha = lambda_to_alpha(lambda, rho);
    // Dirichlet(s; alpha/m,...,alpha/m) terms that depend on alpha, plus the
    // Beta(a, b) prior density of lambda.
    double v = std::lgamma(alpha) - m * std::lgamma(alpha / m) + (alpha / m) * sum_logs +
               (a - 1.0) * std::log(lambda) + (b - 1.0) * std::log1p(-lambda);
    if (!std::isfinite(v)) v = -std::numeric_limits<double>::infinity();
    logw[static_cast<std::size_t>(i)] = v;
  }
  return logw;
}

double sample_concentration(std::span<const double> log_probs, double rho, double a, double b,
                            int grid, Rng& rng) {
  auto logw = concentration_grid_logweights(log_probs, rho, a, b, grid);
  int idx = rng.categorical_log(logw);
  double lambda = (static_cast<double>(idx) + 0.5) / static_cast<double>(grid);
  return lambda_to_alpha(lambda, rho);
}

double concentration_posterior_mean_lambda(std::span<const double> log_probs, double rho,
                                           double a, double b, int grid) {
  auto logw = concentration_grid_logweights(log_probs, rho, a, b, grid);
  double lse = log_sum_exp(logw);
  double mean = 0.0;
  for (int i = 0; i < grid; ++i) {
    double lambda = (static_cast<double>(i) + 0.5) / static_cast<double>(grid);
    mean += lambda * std::exp(logw[static_cast<std::size_t>(i)] - lse);
  }
  return mean;
}

// ---- UniformSelector ------------------------------------------------------

double UniformSelector::split_prob(int) const { return 1.0 / static_cast<double>(P); }

int UniformSelector::draw_split_var(Rng& rng) const {
  return static_cast<int>(rng.integer(static_cast<std::uint64_t>(P)));
}

nlohmann::json UniformSelector::snapshot() const { return {{"kind", "uniform"}}; }

std::unique_ptr<SplitSelector> UniformSelector::clone() const {
  return std::make_unique<UniformSelector>(*this);
}

void UniformSelector::save(std::ostream& os) const { os << "uniform " << P << "\n"; }

void UniformSelector::load(std::istream& is) {
  is >> P;
  if (is.fail()) throw std::runtime_error("bad uniform selector state");
}

// ---- DirichletSelector ----------------------------------------------------

DirichletSelector::DirichletSelector(int P_, double a_, double b_, double rho_, int grid_)
    : P(P_), a(a_), b(b_), rho(rho_ > 0.0 ? rho_ : static_cast<double>(P_)), grid(grid_) {
  q.assign(static_cast<std::size_t>(P), 1.0 / static_cast<double>(P));
  log_q.assign(static_cast<std::size_t>(P), -std::log(static_cast<double>(P)));
}

int DirichletSelector::draw_split_var(Rng& rng) const { return rng.categorical(q); }

void DirichletSelector::update_q(const SplitCounts& counts, Rng& rng) {
  std::vector<double> conc(static_cast<std::size_t>(P));
  for (int j = 0; j < P; ++j)
    conc[static_cast<std::size_t>(j)] =
        alpha / static_cast<double>(P) + static_cast<double>(counts.per_column[static_cast<std::size_t>(j)]);
  rng.dirichlet_log(conc, log_q);
  for (int j = 0; j < P; ++j) q[static_cast<std::size_t>(j)] = std::exp(log_q[static_cast<std::size_t>(j)]);
}

void DirichletSelector::update_alpha(Rng& rng) {
  alpha = sample_concentration(log_q, rho, a, b, grid, rng);
}

void DirichletSelector::update(const SplitCounts& counts, Rng& rng) {
  update_q(counts, rng);
  update_alpha(rng);
}

void DirichletSelector::draw_from_prior(Rng& rng) {
  alpha = lambda_to_alpha(rng.beta(a, b), rho);
  std::vector<double> conc(static_cast<std::size_t>(P), alpha / static_cast<double>(P));
  rng.dirichlet_log(conc, log_q);
  for (int j = 0; j < P; ++j) q[static_cast<std::size_t>(j)] = std::exp(log_q[static_cast<std::size_t>(j)]);
}

nlohmann::json DirichletSelector::snapshot() const {
  return {{"kind", "dart"}, {"q", q}, {"alpha", alpha}};
}

std::unique_ptr<SplitSelector> DirichletSelector::clone() const {
  return std::make_unique<DirichletSelector>(*this);
}

void DirichletSelector::save(std::ostream& os) const {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "dart %d %.17g %.17g %.17g %d %.17g\n", P, a, b, rho, grid,
                alpha);
  os << buf;
  write_vec(os, q);
  write_vec(os, log_q);
}

void DirichletSelector::load(std::istream& is) {
  is >> P >> a >> b >> rho >> grid >> alpha;
  if (is.fail()) throw std::runtime_error("bad dart selector state");
  q = read_vec(is);
  log_q = read_vec(is);
  if (static_cast<int>(q.size()) != P || static_cast<int>(log_q.size()) != P)
    throw std::runtime_error("dart selector state size mismatch");
}

// ---- LDirichletSelector ---------------------------------------------------

LDirichletSelector::LDirichletSelector(const GroupingMeta& meta, double w_a_, double w_b_,
                                       int grid_)
    : P(static_cast<int>(meta.column_group.size())),
      t(meta.response_time),
      col_group(meta.column_group),
      w_a(w_a_),
      w_b(w_b_),
      grid(grid_) {
  col_pos.assign(static_cast<std::size_t>(P), -1);
  std::vector<std::vector<int>> by_time(static_cast<std::size_t>(t));
  for (int j = 0; j < P; ++j)
    by_time[static_cast<std::size_t>(col_group[static_cast<std::size_t>(j)])].push_back(j);

  current_cols = by_time[0];
  for (std::size_t i = 0; i < current_cols.size(); ++i)
    col_pos[static_cast<std::size_t>(current_cols[i])] = static_cast<int>(i);

  for (int k = 1; k < t; ++k) {
    const auto& cols = by_time[static_cast<std::size_t>(k)];
    if (cols.empty()) continue;  // empty past group: dropped from u and the alpha index set
    active_past.push_back(k);
    past_cols.push_back(cols);
    for (std::size_t i = 0; i < cols.size(); ++i)
      col_pos[static_cast<std::size_t>(cols[i])] = static_cast<int>(i);
  }

  const auto pt = current_cols.size();
  v_current.assign(pt, pt ? 1.0 / static_cast<double>(pt) : 0.0);
  log_v_current.assign(pt, pt ? -std::log(static_cast<double>(pt)) : 0.0);
  eta = pt ? static_cast<double>(pt) : 1.0;
  for (const auto& cols : past_cols) {
    const auto pk = cols.size();
    v_past.emplace_back(pk, 1.0 / static_cast<double>(pk));
    log_v_past.emplace_back(pk, -std::log(static_cast<double>(pk)));
    phi.push_back(static_cast<double>(pk));
    alpha.push_back(std::max(1.0, static_cast<double>(t - 1)));
  }
  const auto na = active_past.size();
  u.assign(na, na ? 1.0 / static_cast<double>(na) : 0.0);
  log_u.assign(na, na ? -std::log(static_cast<double>(na)) : 0.0);
  w = w_a / (w_a + w_b);
}

double LDirichletSelector::effective_w() const {
  if (!has_past()) return 1.0;
  if (!has_current()) return 0.0;
  return w;
}

double LDirichletSelector::split_prob(int column) const {
  int g = col_group[static_cast<std::size_t>(column)];
  int pos = col_pos[static_cast<std::size_t>(column)];
  if (g == 0) return effective_w() * v_current[static_cast<std::size_t>(pos)];
  auto it = std::find(active_past.begin(), active_past.end(), g);
  if (it == active_past.end()) throw std::runtime_error("column without group label");
  auto ai = static_cast<std::size_t>(it - active_past.begin());
  return (1.0 - effective_w()) * u[ai] * v_past[ai][static_cast<std::size_t>(pos)];
}

int LDirichletSelector::draw_split_var(Rng& rng) const {
  if (rng.uniform() < effective_w())
    return current_cols[static_cast<std::size_t>(rng.categorical(v_current))];
  auto ai = static_cast<std::size_t>(rng.categorical(u));
  return past_cols[ai][static_cast<std::size_t>(rng.categorical(v_past[ai]))];
}

void LDirichletSelector::update_v(const SplitCounts& counts, Rng& rng) {
  if (has_current()) {
    std::vector<double> conc(current_cols.size());
    for (std::size_t i = 0; i < current_cols.size(); ++i)
      conc[i] = eta / static_cast<double>(current_cols.size()) +
                static_cast<double>(counts.per_column[static_cast<std::size_t>(current_cols[i])]);
    rng.dirichlet_log(conc, log_v_current);
    for (std::size_t i = 0; i < conc.size(); ++i) v_current[i] = std::exp(log_v_current[i]);
  }
  for (std::size_t ai = 0; ai < past_cols.size(); ++ai) {
    const auto& cols = past_cols[ai];
    std::vector<double> conc(cols.size());
    for (std::size_t i = 0; i < cols.size(); ++i)
      conc[i] = phi[ai] / static_cast<double>(cols.size()) +
                static_cast<double>(counts.per_column[static_cast<std::size_t>(cols[i])]);
    rng.dirichlet_log(conc, log_v_past[ai]);
    for (std::size_t i = 0; i < conc.size(); ++i) v_past[ai][i] = std::exp(log_v_past[ai][i]);
  }
}

void LDirichletSelector::update_u(const SplitCounts& counts, Rng& rng) {
  if (!has_past()) return;
  std::vector<double> conc(active_past.size());
  for (std::size_t ai = 0; ai < active_past.size(); ++ai)
    conc[ai] = alpha[ai] / static_cast<double>(t - 1) +
               static_cast<double>(counts.per_group[static_cast<std::size_t>(active_past[ai] - 1)]);
  rng.dirichlet_log(conc, log_u);
  for (std::size_t ai = 0; ai < conc.size(); ++ai) u[ai] = std::exp(log_u[ai]);
}

void LDirichletSelector::update_w(const SplitCounts& counts, Rng& rng) {
  if (!has_current() || !has_past()) return;  // pinned
  w = rng.beta(w_a + static_cast<double>(counts.n_current),
               w_b + static_cast<double>(counts.n_past));
}

std::vector<double> LDirichletSelector::alpha_k_grid_logweights(int active_idx,
                                                                int grid_points) const {
  const auto ai = static_cast<std::size_t>(active_idx);
  const int k = active_past[ai];
  const double ck = c_schedule(t, k);
  const double dk = 1.0;
  const double rho_k = static_cast<double>(t);
  const double denom = static_cast<double>(t - 1);

  double alpha_rest = 0.0;
  for (std::size_t aj = 0; aj < alpha.size(); ++aj)
    if (aj != ai) alpha_rest += alpha[aj];

  std::vector<double> logw(static_cast<std::size_t>(grid_points));
  for (int i = 0; i < grid_points; ++i) {
    double lambda = (static_cast<double>(i) + 0.5) / static_cast<double>(grid_points);
    double a_k = lambda_to_alpha(lambda, rho_k);
    // Heterogeneous Dirichlet density of u as a function of alpha_k; the
    // normalizing constant couples the alphas, hence the conditional scan.
    double v = std::lgamma((alpha_rest + a_k) / denom) - std::lgamma(a_k / denom) +
               (a_k / denom) * log_u[ai] + (ck - 1.0) * std::log(lambda) +
               (dk - 1.0) * std::log1p(-lambda);
    if (!std::isfinite(v)) v = -std::numeric_limits<double>::infinity();
    logw[static_cast<std::size_t>(i)] = v;
  }
  return logw;
}

void LDirichletSelector::update_concentrations(Rng& rng) {
  if (has_current())
    eta = sample_concentration(log_v_current, static_cast<double>(current_cols.size()), conc_a,
                               conc_b, grid, rng);
  for (std::size_t ai = 0; ai < past_cols.size(); ++ai)
    phi[ai] = sample_concentration(log_v_past[ai], static_cast<double>(past_cols[ai].size()),
                                   conc_a, conc_b, grid, rng);
  for (std::size_t ai = 0; ai < active_past.size(); ++ai) {
    auto logw = alpha_k_grid_logweights(static_cast<int>(ai), grid);
    int idx = rng.categorical_log(logw);
    double lambda = (static_cast<double>(idx) + 0.5) / static_cast<double>(grid);
    alpha[ai] = lambda_to_alpha(lambda, static_cast<double>(t));
  }
}

void LDirichletSelector::update(const SplitCounts& counts, Rng& rng) {
  update_v(counts, rng);
  update_u(counts, rng);
  update_w(counts, rng);
  update_concentrations(rng);
}

void LDirichletSelector::draw_from_prior(Rng& rng) {
  if (has_current()) {
    eta = lambda_to_alpha(rng.beta(conc_a, conc_b), static_cast<double>(current_cols.size()));
    std::vector<double> conc(current_cols.size(), eta / static_cast<double>(current_cols.size()));
    rng.dirichlet_log(conc, log_v_current);
    for (std::size_t i = 0; i < conc.size(); ++i) v_current[i] = std::exp(log_v_current[i]);
  }
  for (std::size_t ai = 0; ai < past_cols.size(); ++ai) {
    const auto pk = static_cast<double>(past_cols[ai].size());
    phi[ai] = lambda_to_alpha(rng.beta(conc_a, conc_b), pk);
    std::vector<double> conc(past_cols[ai].size(), phi[ai] / pk);
    rng.dirichlet_log(conc, log_v_past[ai]);
    for (std::size_t i = 0; i < conc.size(); ++i) v_past[ai][i] = std::exp(log_v_past[ai][i]);
  }
  if (has_past()) {
    std::vector<double> conc(active_past.size());
    for (std::size_t ai = 0; ai < active_past.size(); ++ai) {
      int k = active_past[ai];
      alpha[ai] = lambda_to_alpha(rng.beta(c_schedule(t, k), 1.0), static_cast<double>(t));
      conc[ai] = alpha[ai] / static_cast<double>(t - 1);
    }
    rng.dirichlet_log(conc, log_u);
    for (std::size_t ai = 0; ai < conc.size(); ++ai) u[ai] = std::exp(log_u[ai]);
  }
  if (has_current() && has_past()) w = rng.beta(w_a, w_b);
}

nlohmann::json LDirichletSelector::snapshot() const {
  return {{"kind", "ldirichlet"}, {"w", effective_w()},     {"u", u},
          {"v_current", v_current}, {"v_past", v_past},     {"eta", eta},
          {"phi", phi},             {"alpha", alpha},       {"active_past", active_past}};
}

std::unique_ptr<SplitSelector> LDirichletSelector::clone() const {
  return std::make_unique<LDirichletSelector>(*this);
}

void LDirichletSelector::save(std::ostream& os) const {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "ldirichlet %d %d %.17g %.17g %.17g %.17g %.17g %d %.17g\n", P,
                t, w, w_a, w_b, conc_a, conc_b, grid, eta);
  os << buf;
  write_vec(os, v_current);
  write_vec(os, u);
  write_vec(os, phi);
  write_vec(os, alpha);
  os << v_past.size() << "\n";
  for (const auto& v : v_past) write_vec(os, v);
}

void LDirichletSelector::load(std::istream& is) {
  std::string tag;
  int P_in = 0, t_in = 0;
  is >> P_in >> t_in >> w >> w_a >> w_b >> conc_a >> conc_b >> grid >> eta;
  if (is.fail()) throw std::runtime_error("bad ldirichlet selector state");
  if (P_in != P || t_in != t)
    throw std::runtime_error("ldirichlet selector state does not match the grouping meta");
  v_current = read_vec(is);
  u = read_vec(is);
  phi = read_vec(is);
  alpha = read_vec(is);
  std::size_t np = 0;
  is >> np;
  if (np != past_cols.size()) throw std::runtime_error("ldirichlet selector group count mismatch");
  v_past.clear();
  for (std::size_t i = 0; i < np; ++i) v_past.push_back(read_vec(is));
  // Rebuild the log caches.
  log_v_current.resize(v_current.size());
  for (std::size_t i = 0; i < v_current.size(); ++i) log_v_current[i] = std::log(v_current[i]);
  log_u.resize(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) log_u[i] = std::log(u[i]);
  log_v_past.clear();
  for (const auto& v : v_past) {
    std::vector<double> lg(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) lg[i] = std::log(v[i]);
    log_v_past.push_back(std::move(lg));
  }
}

// ---- factory / checkpoint -------------------------------------------------

std::unique_ptr<SplitSelector> make_selector(const SelectorConfig& cfg, int P,
                                             const GroupingMeta& meta) {
  if (cfg.kind == "uniform") return std::make_unique<UniformSelector>(P);
  if (cfg.kind == "dart")
    return std::make_unique<DirichletSelector>(P, cfg.dart_a, cfg.dart_b, cfg.dart_rho, cfg.grid);
  if (cfg.kind == "ldirichlet")
    return std::make_unique<LDirichletSelector>(meta, cfg.w_a, cfg.w_b, cfg.grid);
  throw std::runtime_error("unknown selector kind: '" + cfg.kind +
                           "' (expected uniform | dart | ldirichlet)");
}

void save_selector(std::ostream& os, const SplitSelector& sel) { sel.save(os); }

std::unique_ptr<SplitSelector> load_selector(std::istream& is, const GroupingMeta& meta) {
  std::string kind;
  is >> kind;
  if (kind == "uniform") {
    auto sel = std::make_unique<UniformSelector>(1);
    sel->load(is);
    return sel;
  }
  if (kind == "dart") {
    auto sel = std::make_unique<DirichletSelector>(1, 0.5, 1.0, 0.0, 1000);
    sel->load(is);
    return sel;
  }
  if (kind == "ldirichlet") {
    auto sel = std::make_unique<LDirichletSelector>(meta, 1.0, 1.0, 1000);
    sel->load(is);
    return sel;
  }
  throw std::runtime_error("unknown selector kind in checkpoint: " + kind);
}

}  // namespace bart
