#include "bart/kernels.hpp"
#include "bart/stats.hpp"

namespace bart {
namespace kernels {
namespace detail {

// Routing weights of one row across all leaves, explicit-stack traversal.
void row_weights(const TreePlan& plan, TreeMode mode, const double* xu, double* w) {
  struct Item {
    int node;
    double weight;
  };
  Item stack[64];
  int top = 0;
  stack[top++] = {0, 1.0};
  while (top > 0) {
    Item it = stack[--top];
    const auto node = static_cast<std::size_t>(it.node);
    int leaf = plan.leaf_id[node];
    if (leaf >= 0) {
      w[leaf] = it.weight;
      continue;
    }
    double u = xu[plan.var[node]];
    double g = (mode == TreeMode::hard) ? (u <= plan.cut_u[node] ? 1.0 : 0.0)
                                        : logistic((plan.cut_u[node] - u) / plan.bandwidth);
    stack[top++] = {plan.right[node], it.weight * (1.0 - g)};
    stack[top++] = {plan.left[node], it.weight * g};
  }
}

int hard_leaf(const TreePlan& plan, const double* xu) {
  int node = 0;
  while (plan.leaf_id[static_cast<std::size_t>(node)] < 0) {
    const auto j = static_cast<std::size_t>(node);
    node = (xu[plan.var[j]] <= plan.cut_u[j]) ? plan.left[j] : plan.right[j];
  }
  return plan.leaf_id[static_cast<std::size_t>(node)];
}

}  // namespace detail

LeafSuffStats leaf_suffstats_serial(const TreePlan& plan, TreeMode mode, const Matrix& U,
                                    const Vector& r) {
  const auto n = U.rows();
  const auto P = U.cols();
  const int L = plan.num_leaves;
  LeafSuffStats st;
  st.n = n;

  if (mode == TreeMode::hard) {
    st.diagonal = true;
    st.counts = Eigen::VectorXd::Zero(L);
    st.cross = Eigen::VectorXd::Zero(L);
    for (Eigen::Index i = 0; i < n; ++i) {
      int leaf = detail::hard_leaf(plan, U.data() + i * P);
      st.counts(leaf) += 1.0;
      st.cross(leaf) += r(i);
      st.rss += r(i) * r(i);
    }
    return st;
  }

  st.diagonal = false;
  st.gram = Eigen::MatrixXd::Zero(L, L);
  st.cross = Eigen::VectorXd::Zero(L);
  std::vector<double> w(static_cast<std::size_t>(L));
  for (Eigen::Index i = 0; i < n; ++i) {
    detail::row_weights(plan, mode, U.data() + i * P, w.data());
    for (int a = 0; a < L; ++a) {
      st.cross(a) += r(i) * w[static_cast<std::size_t>(a)];
      for (int b = a; b < L; ++b)
        st.gram(a, b) += w[static_cast<std::size_t>(a)] * w[static_cast<std::size_t>(b)];
    }
    st.rss += r(i) * r(i);
  }
  st.gram.triangularView<Eigen::StrictlyLower>() = st.gram.transpose();
  return st;
}

void predict_rows_serial(const TreePlan& plan, TreeMode mode, const Matrix& U, Vector& out) {
  const auto n = U.rows();
  const auto P = U.cols();
  out.resize(n);
  const int L = plan.num_leaves;
  if (mode == TreeMode::hard) {
    for (Eigen::Index i = 0; i < n; ++i)
      out(i) = plan.mu[static_cast<std::size_t>(detail::hard_leaf(plan, U.data() + i * P))];
    return;
  }
  std::vector<double> w(static_cast<std::size_t>(L));
  for (Eigen::Index i = 0; i < n; ++i) {
    detail::row_weights(plan, mode, U.data() + i * P, w.data());
    double s = 0.0;
    for (int a = 0; a < L; ++a) s += w[static_cast<std::size_t>(a)] * plan.mu[static_cast<std::size_t>(a)];
    out(i) = s;
  }
}

}  // namespace kernels
}  // namespace bart
