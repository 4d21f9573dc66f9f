#pragma once

#include "bart/data.hpp"
#include "bart/rng.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bart {

enum class TreeMode { hard, soft };

struct TreeNode {
  int var = -1;       // -1 marks a leaf
  double cut = 0.0;   // raw cutpoint
  double cut_u = 0.0; // cutpoint in rank space
  int left = -1;
  int right = -1;
  double mu = 0.0;    // leaf value

  bool is_leaf() const { return var < 0; }
};

// Binary decision tree stored as an arena; node 0 is the root and nodes are
// kept in preorder so serialization is canonical.
struct Tree {
  std::vector<TreeNode> nodes{TreeNode{}};
  double bandwidth = 0.1;  // per-tree gate bandwidth (soft mode)

  int size() const { return static_cast<int>(nodes.size()); }
  int leaf_count() const;
  int internal_count() const { return size() - leaf_count(); }
  std::vector<int> leaf_indices() const;      // preorder
  std::vector<int> internal_indices() const;  // preorder
  std::vector<int> prunable_indices() const;  // internal nodes with two leaf children
  std::vector<int> depths() const;            // per node
  int max_depth() const;

  // Renumber nodes into preorder (after structural edits).
  void compact();
};

// Leaf routing weights phi(x) in preorder-leaf order; sums to 1 exactly.
// `xu` is the observation row in rank space. Hard mode yields a one-hot
// vector via x_j <= c (equivalently u_j <= cut_u).
void leaf_weights(const Tree& tree, TreeMode mode, std::span<const double> xu,
                  std::span<double> out);

double predict_tree(const Tree& tree, TreeMode mode, std::span<const double> xu);

// Per-tree sufficient statistics of the Gaussian leaf model:
// diagonal (hard routing) carries per-leaf counts and residual sums;
// the dense form carries the leaf-weight Gram matrix and cross products.
struct LeafSuffStats {
  bool diagonal = true;
  Eigen::VectorXd counts;     // hard: observations per leaf
  Eigen::VectorXd cross;      // Lambda^T r (hard: per-leaf residual sums)
  Eigen::MatrixXd gram;       // soft: Lambda^T Lambda
  double rss = 0.0;           // r^T r
  long n = 0;
};

// log integral of N(r | Lambda mu, sigma2 I) N(mu | 0, sigma_mu2 I) d mu.
double tree_log_marginal(const LeafSuffStats& st, double sigma2, double sigma_mu2);

// Draw mu | r ~ N(Omega^{-1} Lambda^T r / sigma2, Omega^{-1}) and write the
// values into the tree's leaves (preorder-leaf order).
void sample_leaf_values(Tree& tree, const LeafSuffStats& st, double sigma2, double sigma_mu2,
                        Rng& rng);

// Structure prior and move mix for the Metropolis-Hastings tree kernel.
struct TreePrior {
  double gamma = 0.95;   // p(split at depth d) = gamma * (1+d)^-beta
  double beta = 2.0;
  double p_grow = 0.4;
  double p_prune = 0.4;
  double p_change = 0.2;

  double split_prob(int depth) const;
};

enum class MoveKind { grow, prune, change };

// A proposed structural move. Split-rule probabilities cancel between the
// tree prior and the proposal (both draw the variable from the selector and
// the cutpoint uniformly from the grid), so the ratios below carry only the
// structure-prior and node-selection terms.
struct TreeMove {
  MoveKind kind = MoveKind::grow;
  Tree proposed;
  double log_prior_ratio = 0.0;     // p(T') / p(T), structure terms
  double log_proposal_ratio = 0.0;  // q(T'->T) / q(T->T')
  int grow_var = -1;                // variable used by a grow proposal
};

class SplitSelector;  // selectors.hpp

TreeMove propose_move(const Tree& tree, const TreePrior& prior, const SplitSelector& selector,
                      const std::vector<ColumnTransform>& transforms, Rng& rng);

// Generate a tree from the structure prior (rules from the selector,
// cutpoints uniform on the grid); leaves are left at zero.
Tree draw_tree_from_prior(const TreePrior& prior, const SplitSelector& selector,
                          const std::vector<ColumnTransform>& transforms, Rng& rng);

// Line-based text serialization (preorder). Round trips exactly.
void write_tree(std::ostream& os, const Tree& tree);
Tree read_tree(std::istream& is);
std::string tree_to_string(const Tree& tree);
Tree tree_from_string(const std::string& text);

}  // namespace bart
