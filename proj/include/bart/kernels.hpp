#pragma once

#include "bart/data.hpp"
#include "bart/tree.hpp"

#include <vector>

namespace bart {
namespace kernels {

enum class Backend { serial, openmp };

// Flattened evaluation plan for a tree: index-based arrays the row loops
// traverse without touching the Tree object. Leaves are numbered in
// preorder-leaf order to match leaf_weights().
struct TreePlan {
  std::vector<int> var;
  std::vector<double> cut_u;
  std::vector<int> left;
  std::vector<int> right;
  std::vector<int> leaf_id;  // >= 0 for leaves
  std::vector<double> mu;    // per leaf
  int num_leaves = 0;
  double bandwidth = 0.1;
};

TreePlan make_plan(const Tree& tree);

// Accumulate the leaf sufficient statistics of one tree over all rows of U
// against residuals r. The serial variant is the reference implementation;
// the OpenMP variant partitions rows across threads and merges the
// per-thread accumulators in thread order, so results are deterministic for
// a fixed thread count.
LeafSuffStats leaf_suffstats(const Tree& tree, TreeMode mode, const Matrix& U, const Vector& r,
                             Backend backend, int threads);

LeafSuffStats leaf_suffstats_serial(const TreePlan& plan, TreeMode mode, const Matrix& U,
                                    const Vector& r);
LeafSuffStats leaf_suffstats_openmp(const TreePlan& plan, TreeMode mode, const Matrix& U,
                                    const Vector& r, int threads);

// Predictions of one tree for every row of U (overwrites out).
void predict_rows(const Tree& tree, TreeMode mode, const Matrix& U, Backend backend, int threads,
                  Vector& out);

void predict_rows_serial(const TreePlan& plan, TreeMode mode, const Matrix& U, Vector& out);
void predict_rows_openmp(const TreePlan& plan, TreeMode mode, const Matrix& U, int threads,
                         Vector& out);

// Sum of per-tree predictions over an ensemble.
Vector predict_ensemble(const std::vector<Tree>& trees, TreeMode mode, const Matrix& U,
                        Backend backend, int threads);

}  // namespace kernels
}  // namespace bart
