#include "bart/tree.hpp"

#include "bart/selectors.hpp"
#include "bart/stats.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace bart {

int Tree::leaf_count() const {
  int c = 0;
  for (const auto& nd : nodes)
    if (nd.is_leaf()) ++c;
  return c;
}

namespace {

void collect_preorder(const std::vector<TreeNode>& nodes, int idx, bool leaves,
                      std::vector<int>& out) {
  const TreeNode& nd = nodes[static_cast<std::size_t>(idx)];
  if (nd.is_leaf()) {
    if (leaves) out.push_back(idx);
    return;
  }
  if (!leaves) out.push_back(idx);
  collect_preorder(nodes, nd.left, leaves, out);
  collect_preorder(nodes, nd.right, leaves, out);
}

void fill_depths(const std::vector<TreeNode>& nodes, int idx, int d, std::vector<int>& out) {
  out[static_cast<std::size_t>(idx)] = d;
  const TreeNode& nd = nodes[static_cast<std::size_t>(idx)];
  if (!nd.is_leaf()) {
    fill_depths(nodes, nd.left, d + 1, out);
    fill_depths(nodes, nd.right, d + 1, out);
  }
}

int copy_preorder(const std::vector<TreeNode>& src, int idx, std::vector<TreeNode>& dst) {
  int me = static_cast<int>(dst.size());
  dst.push_back(src[static_cast<std::size_t>(idx)]);
  if (!src[static_cast<std::size_t>(idx)].is_leaf()) {
    int l = copy_preorder(src, src[static_cast<std::size_t>(idx)].left, dst);
    int r = copy_preorder(src, src[static_cast<std::size_t>(idx)].right, dst);
    dst[static_cast<std::size_t>(me)].left = l;
    dst[static_cast<std::size_t>(me)].right = r;
  }
  return me;
}

}  // namespace

std::vector<int> Tree::leaf_indices() const {
  std::vector<int> out;
  collect_preorder(nodes, 0, true, out);
  return out;
}

std::vector<int> Tree::internal_indices() const {
  std::vector<int> out;
  collect_preorder(nodes, 0, false, out);
  return out;
}

std::vector<int> Tree::prunable_indices() const {
  std::vector<int> out;
  for (int i = 0; i < size(); ++i) {
    const auto& nd = nodes[static_cast<std::size_t>(i)];
    if (!nd.is_leaf() && nodes[static_cast<std::size_t>(nd.left)].is_leaf() &&
        nodes[static_cast<std::size_t>(nd.right)].is_leaf())
      out.push_back(i);
  }
  return out;
}

std::vector<int> Tree::depths() const {
  std::vector<int> out(nodes.size(), 0);
  fill_depths(nodes, 0, 0, out);
  return out;
}

int Tree::max_depth() const {
  int m = 0;
  for (int d : depths()) m = std::max(m, d);
  return m;
}

void Tree::compact() {
  std::vector<TreeNode> fresh;
  fresh.reserve(nodes.size());
  copy_preorder(nodes, 0, fresh);
  nodes = std::move(fresh);
}

namespace {

void weights_recursive(const Tree& tree, TreeMode mode, std::span<const double> xu, int idx,
                       double w, int& leaf_pos, std::span<double> out) {
  const TreeNode& nd = tree.nodes[static_cast<std::size_t>(idx)];
  if (nd.is_leaf()) {
    out[static_cast<std::size_t>(leaf_pos++)] = w;
    return;
  }
  double u = xu[static_cast<std::size_t>(nd.var)];
  double g;
  if (mode == TreeMode::hard) {
    g = (u <= nd.cut_u) ? 1.0 : 0.0;
  } else {
    g = logistic((nd.cut_u - u) / tree.bandwidth);
  }
  weights_recursive(tree, mode, xu, nd.left, w * g, leaf_pos, out);
  weights_recursive(tree, mode, xu, nd.right, w * (1.0 - g), leaf_pos, out);
}

}  // namespace

void leaf_weights(const Tree& tree, TreeMode mode, std::span<const double> xu,
                  std::span<double> out) {
  int pos = 0;
  weights_recursive(tree, mode, xu, 0, 1.0, pos, out);
}

double predict_tree(const Tree& tree, TreeMode mode, std::span<const double> xu) {
  std::vector<double> w(static_cast<std::size_t>(tree.leaf_count()));
  leaf_weights(tree, mode, xu, w);
  auto leaves = tree.leaf_indices();
  double s = 0.0;
  for (std::size_t i = 0; i < leaves.size(); ++i)
    s += w[i] * tree.nodes[static_cast<std::size_t>(leaves[i])].mu;
  return s;
}

double tree_log_marginal(const LeafSuffStats& st, double sigma2, double sigma_mu2) {
  if (!std::isfinite(st.rss)) throw std::runtime_error("non-finite residuals in marginal likelihood");
  const double n = static_cast<double>(st.n);
  double out = -0.5 * n * std::log(2.0 * M_PI * sigma2) - 0.5 * st.rss / sigma2;
  if (st.diagonal) {
    for (Eigen::Index l = 0; l < st.counts.size(); ++l) {
      double prec = st.counts(l) / sigma2 + 1.0 / sigma_mu2;
      double b = st.cross(l) / sigma2;
      out += -0.5 * std::log(sigma_mu2) - 0.5 * std::log(prec) + 0.5 * b * b / prec;
    }
    return out;
  }
  const Eigen::Index L = st.gram.rows();
  Eigen::MatrixXd omega = st.gram / sigma2;
  omega.diagonal().array() += 1.0 / sigma_mu2;
  Eigen::LLT<Eigen::MatrixXd> llt(omega);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("leaf precision matrix not positive definite");
  Eigen::VectorXd b = st.cross / sigma2;
  Eigen::VectorXd mu_hat = llt.solve(b);
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < L; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  out += -0.5 * static_cast<double>(L) * std::log(sigma_mu2) - 0.5 * logdet +
         0.5 * b.dot(mu_hat);
  return out;
}

void sample_leaf_values(Tree& tree, const LeafSuffStats& st, double sigma2, double sigma_mu2,
                        Rng& rng) {
  auto leaves = tree.leaf_indices();
  const Eigen::Index L = static_cast<Eigen::Index>(leaves.size());
  Eigen::VectorXd mu(L);
  if (st.diagonal) {
    for (Eigen::Index l = 0; l < L; ++l) {
      double prec = st.counts(l) / sigma2 + 1.0 / sigma_mu2;
      double mean = (st.cross(l) / sigma2) / prec;
      mu(l) = mean + rng.normal() / std::sqrt(prec);
    }
  } else {
    Eigen::MatrixXd omega = st.gram / sigma2;
    omega.diagonal().array() += 1.0 / sigma_mu2;
    Eigen::LLT<Eigen::MatrixXd> llt(omega);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("leaf precision matrix not positive definite");
    Eigen::VectorXd mu_hat = llt.solve(st.cross / sigma2);
    Eigen::VectorXd xi(L);
    for (Eigen::Index i = 0; i < L; ++i) xi(i) = rng.normal();
    // mu = mu_hat + L^-T xi has covariance Omega^{-1}
    mu = mu_hat + llt.matrixU().solve(xi);
  }
  for (Eigen::Index l = 0; l < L; ++l)
    tree.nodes[static_cast<std::size_t>(leaves[static_cast<std::size_t>(l)])].mu = mu(l);
}

double TreePrior::split_prob(int depth) const {
  return gamma * std::pow(1.0 + static_cast<double>(depth), -beta);
}

namespace {

// Move-kind probabilities given the current tree. A single-leaf tree can
// only grow; otherwise grow/prune/change are all available.
void move_probs(const Tree& tree, const TreePrior& prior, double& pg, double& pp, double& pc) {
  if (tree.size() == 1) {
    pg = 1.0;
    pp = 0.0;
    pc = 0.0;
  } else {
    pg = prior.p_grow;
    pp = prior.p_prune;
    pc = prior.p_change;
  }
}

void draw_rule(const SplitSelector& selector, const std::vector<ColumnTransform>& transforms,
               Rng& rng, TreeNode& nd) {
  int var = selector.draw_split_var(rng);
  const auto& tr = transforms[static_cast<std::size_t>(var)];
  auto c = rng.integer(tr.cut_values.size());
  nd.var = var;
  nd.cut = tr.cut_values[c];
  nd.cut_u = tr.cut_u[c];
}

}  // namespace

TreeMove propose_move(const Tree& tree, const TreePrior& prior, const SplitSelector& selector,
                      const std::vector<ColumnTransform>& transforms, Rng& rng) {
  double pg, pp, pc;
  move_probs(tree, prior, pg, pp, pc);
  double u = rng.uniform();
  MoveKind kind = u < pg ? MoveKind::grow : (u < pg + pp ? MoveKind::prune : MoveKind::change);

  TreeMove move;
  move.kind = kind;
  move.proposed = tree;
  Tree& prop = move.proposed;
  auto depths = tree.depths();

  if (kind == MoveKind::grow) {
    auto leaves = tree.leaf_indices();
    int leaf = leaves[rng.integer(leaves.size())];
    int d = depths[static_cast<std::size_t>(leaf)];

    {
      TreeNode& nd = prop.nodes[static_cast<std::size_t>(leaf)];
      draw_rule(selector, transforms, rng, nd);
      move.grow_var = nd.var;
      nd.mu = 0.0;
      nd.left = prop.size();
      nd.right = prop.size() + 1;
    }
    prop.nodes.push_back(TreeNode{});
    prop.nodes.push_back(TreeNode{});
    prop.compact();

    double ps_d = prior.split_prob(d);
    double ps_d1 = prior.split_prob(d + 1);
    move.log_prior_ratio =
        std::log(ps_d) + 2.0 * std::log(1.0 - ps_d1) - std::log(1.0 - ps_d);

    double pg2, pp2, pc2;
    move_probs(prop, prior, pg2, pp2, pc2);
    double fwd = pg / static_cast<double>(leaves.size());
    double rev = pp2 / static_cast<double>(prop.prunable_indices().size());
    move.log_proposal_ratio = std::log(rev) - std::log(fwd);
  } else if (kind == MoveKind::prune) {
    auto prunable = tree.prunable_indices();
    int node = prunable[rng.integer(prunable.size())];
    int d = depths[static_cast<std::size_t>(node)];

    TreeNode& nd = prop.nodes[static_cast<std::size_t>(node)];
    nd.var = -1;
    nd.left = nd.right = -1;
    nd.mu = 0.0;
    prop.compact();

    double ps_d = prior.split_prob(d);
    double ps_d1 = prior.split_prob(d + 1);
    move.log_prior_ratio =
        std::log(1.0 - ps_d) - std::log(ps_d) - 2.0 * std::log(1.0 - ps_d1);

    double pg2, pp2, pc2;
    move_probs(prop, prior, pg2, pp2, pc2);
    double fwd = pp / static_cast<double>(prunable.size());
    double rev = pg2 / static_cast<double>(prop.leaf_indices().size());
    move.log_proposal_ratio = std::log(rev) - std::log(fwd);
  } else {
    auto internals = tree.internal_indices();
    int node = internals[rng.integer(internals.size())];
    TreeNode& nd = prop.nodes[static_cast<std::size_t>(node)];
    draw_rule(selector, transforms, rng, nd);
    // Node choice is symmetric and the rule terms cancel against the prior.
  }
  return move;
}

namespace {

void grow_from_prior(Tree& tree, int idx, int depth, const TreePrior& prior,
                     const SplitSelector& selector,
                     const std::vector<ColumnTransform>& transforms, Rng& rng) {
  if (rng.uniform() >= prior.split_prob(depth)) return;
  int l, r;
  {
    TreeNode& nd = tree.nodes[static_cast<std::size_t>(idx)];
    draw_rule(selector, transforms, rng, nd);
    l = nd.left = tree.size();
    r = nd.right = tree.size() + 1;
  }
  tree.nodes.push_back(TreeNode{});
  tree.nodes.push_back(TreeNode{});
  grow_from_prior(tree, l, depth + 1, prior, selector, transforms, rng);
  grow_from_prior(tree, r, depth + 1, prior, selector, transforms, rng);
}

}  // namespace

Tree draw_tree_from_prior(const TreePrior& prior, const SplitSelector& selector,
                          const std::vector<ColumnTransform>& transforms, Rng& rng) {
  Tree tree;
  grow_from_prior(tree, 0, 0, prior, selector, transforms, rng);
  tree.compact();
  return tree;
}

namespace {
std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace

void write_tree(std::ostream& os, const Tree& tree) {
  os << "tree v1 tau=" << fmt_double(tree.bandwidth) << " nodes=" << tree.size() << "\n";
  // Nodes are already preorder; emit in storage order.
  for (const auto& nd : tree.nodes) {
    if (nd.is_leaf())
      os << "L " << fmt_double(nd.mu) << "\n";
    else
      os << "I " << nd.var << " " << fmt_double(nd.cut) << " " << fmt_double(nd.cut_u) << "\n";
  }
}

namespace {

int read_node(std::istream& is, Tree& tree) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("truncated tree serialization");
  std::istringstream ls(line);
  std::string tag;
  ls >> tag;
  int me = tree.size();
  tree.nodes.push_back(TreeNode{});
  if (tag == "L") {
    double mu;
    ls >> mu;
    if (ls.fail()) throw std::runtime_error("bad leaf line: " + line);
    tree.nodes[static_cast<std::size_t>(me)].mu = mu;
  } else if (tag == "I") {
    int var;
    double cut, cut_u;
    ls >> var >> cut >> cut_u;
    if (ls.fail()) throw std::runtime_error("bad internal-node line: " + line);
    auto& nd = tree.nodes[static_cast<std::size_t>(me)];
    nd.var = var;
    nd.cut = cut;
    nd.cut_u = cut_u;
    int l = read_node(is, tree);
    int r = read_node(is, tree);
    tree.nodes[static_cast<std::size_t>(me)].left = l;
    tree.nodes[static_cast<std::size_t>(me)].right = r;
  } else {
    throw std::runtime_error("unknown tree node tag: " + line);
  }
  return me;
}

}  // namespace

Tree read_tree(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw std::runtime_error("missing tree header");
  std::istringstream hs(header);
  std::string word, tau_field, nodes_field;
  hs >> word >> word >> tau_field >> nodes_field;
  if (tau_field.rfind("tau=", 0) != 0 || nodes_field.rfind("nodes=", 0) != 0)
    throw std::runtime_error("bad tree header: " + header);
  Tree tree;
  tree.nodes.clear();
  tree.bandwidth = std::stod(tau_field.substr(4));
  int expected = std::stoi(nodes_field.substr(6));
  read_node(is, tree);
  if (tree.size() != expected)
    throw std::runtime_error("tree node count mismatch in serialization");
  return tree;
}

std::string tree_to_string(const Tree& tree) {
  std::ostringstream os;
  write_tree(os, tree);
  return os.str();
}

Tree tree_from_string(const std::string& text) {
  std::istringstream is(text);
  return read_tree(is);
}

}  // namespace bart
