#include "bart/kernels.hpp"

#include <stdexcept>

namespace bart {
namespace kernels {

TreePlan make_plan(const Tree& tree) {
  TreePlan plan;
  const int n = tree.size();
  plan.var.resize(static_cast<std::size_t>(n));
  plan.cut_u.resize(static_cast<std::size_t>(n));
  plan.left.resize(static_cast<std::size_t>(n));
  plan.right.resize(static_cast<std::size_t>(n));
  plan.leaf_id.assign(static_cast<std::size_t>(n), -1);
  plan.bandwidth = tree.bandwidth;
  int next_leaf = 0;
  for (int i = 0; i < n; ++i) {
    const TreeNode& nd = tree.nodes[static_cast<std::size_t>(i)];
    plan.var[static_cast<std::size_t>(i)] = nd.var;
    plan.cut_u[static_cast<std::size_t>(i)] = nd.cut_u;
    plan.left[static_cast<std::size_t>(i)] = nd.left;
    plan.right[static_cast<std::size_t>(i)] = nd.right;
  }
  // Preorder leaf numbering must match Tree::leaf_indices(); the arena is
  // kept in preorder so storage order suffices.
  for (int i = 0; i < n; ++i)
    if (tree.nodes[static_cast<std::size_t>(i)].is_leaf()) {
      plan.leaf_id[static_cast<std::size_t>(i)] = next_leaf++;
      plan.mu.push_back(tree.nodes[static_cast<std::size_t>(i)].mu);
    }
  plan.num_leaves = next_leaf;
  return plan;
}

LeafSuffStats leaf_suffstats(const Tree& tree, TreeMode mode, const Matrix& U, const Vector& r,
                             Backend backend, int threads) {
  TreePlan plan = make_plan(tree);
  if (backend == Backend::openmp && threads > 1)
    return leaf_suffstats_openmp(plan, mode, U, r, threads);
  return leaf_suffstats_serial(plan, mode, U, r);
}

void predict_rows(const Tree& tree, TreeMode mode, const Matrix& U, Backend backend, int threads,
                  Vector& out) {
  TreePlan plan = make_plan(tree);
  if (backend == Backend::openmp && threads > 1)
    predict_rows_openmp(plan, mode, U, threads, out);
  else
    predict_rows_serial(plan, mode, U, out);
}

Vector predict_ensemble(const std::vector<Tree>& trees, TreeMode mode, const Matrix& U,
                        Backend backend, int threads) {
  Vector total = Vector::Zero(U.rows());
  Vector one(U.rows());
  for (const Tree& t : trees) {
    predict_rows(t, mode, U, backend, threads, one);
    total += one;
  }
  return total;
}

}  // namespace kernels
}  // namespace bart
