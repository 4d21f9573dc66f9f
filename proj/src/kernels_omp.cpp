#include "bart/kernels.hpp"
#include "bart/stats.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include <algorithm>

namespace bart {
namespace kernels {
namespace detail {
void row_weights(const TreePlan& plan, TreeMode mode, const double* xu, double* w);
int hard_leaf(const TreePlan& plan, const double* xu);
}  // namespace detail

#ifndef _OPENMP

// Without OpenMP these forward to the serial reference.
LeafSuffStats leaf_suffstats_openmp(const TreePlan& plan, TreeMode mode, const Matrix& U,
                                    const Vector& r, int) {
  return leaf_suffstats_serial(plan, mode, U, r);
}
void predict_rows_openmp(const TreePlan& plan, TreeMode mode, const Matrix& U, int, Vector& out) {
  predict_rows_serial(plan, mode, U, out);
}

#else

LeafSuffStats leaf_suffstats_openmp(const TreePlan& plan, TreeMode mode, const Matrix& U,
                                    const Vector& r, int threads) {
  const auto n = U.rows();
  const auto P = U.cols();
  const int L = plan.num_leaves;
  const int nt = std::max(1, threads);

  LeafSuffStats st;
  st.n = n;
  st.diagonal = (mode == TreeMode::hard);

  // Per-thread accumulators, merged in thread order: deterministic for a
  // fixed thread count.
  std::vector<Eigen::VectorXd> counts(static_cast<std::size_t>(nt)),
      cross(static_cast<std::size_t>(nt));
  std::vector<Eigen::MatrixXd> gram(static_cast<std::size_t>(nt));
  std::vector<double> rss(static_cast<std::size_t>(nt), 0.0);

#pragma omp parallel num_threads(nt)
  {
    const auto tid = static_cast<std::size_t>(omp_get_thread_num());
    cross[tid] = Eigen::VectorXd::Zero(L);
    if (mode == TreeMode::hard)
      counts[tid] = Eigen::VectorXd::Zero(L);
    else
      gram[tid] = Eigen::MatrixXd::Zero(L, L);
    std::vector<double> w(static_cast<std::size_t>(L));

#pragma omp for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) {
      const double* xu = U.data() + i * P;
      if (mode == TreeMode::hard) {
        int leaf = detail::hard_leaf(plan, xu);
        counts[tid](leaf) += 1.0;
        cross[tid](leaf) += r(i);
      } else {
        detail::row_weights(plan, mode, xu, w.data());
        for (int a = 0; a < L; ++a) {
          cross[tid](a) += r(i) * w[static_cast<std::size_t>(a)];
          for (int b = a; b < L; ++b)
            gram[tid](a, b) += w[static_cast<std::size_t>(a)] * w[static_cast<std::size_t>(b)];
        }
      }
      rss[tid] += r(i) * r(i);
    }
  }

  st.cross = Eigen::VectorXd::Zero(L);
  if (mode == TreeMode::hard)
    st.counts = Eigen::VectorXd::Zero(L);
  else
    st.gram = Eigen::MatrixXd::Zero(L, L);
  for (int t = 0; t < nt; ++t) {
    const auto tt = static_cast<std::size_t>(t);
    st.cross += cross[tt];
    st.rss += rss[tt];
    if (mode == TreeMode::hard)
      st.counts += counts[tt];
    else
      st.gram += gram[tt];
  }
  if (mode != TreeMode::hard)
    st.gram.triangularView<Eigen::StrictlyLower>() = st.gram.transpose();
  return st;
}

void predict_rows_openmp(const TreePlan& plan, TreeMode mode, const Matrix& U, int threads,
                         Vector& out) {
  const auto n = U.rows();
  const auto P = U.cols();
  const int L = plan.num_leaves;
  const int nt = std::max(1, threads);
  out.resize(n);

#pragma omp parallel num_threads(nt)
  {
    std::vector<double> w(static_cast<std::size_t>(L));
#pragma omp for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) {
      const double* xu = U.data() + i * P;
      if (mode == TreeMode::hard) {
        out(i) = plan.mu[static_cast<std::size_t>(detail::hard_leaf(plan, xu))];
      } else {
        detail::row_weights(plan, mode, xu, w.data());
        double s = 0.0;
        for (int a = 0; a < L; ++a)
          s += w[static_cast<std::size_t>(a)] * plan.mu[static_cast<std::size_t>(a)];
        out(i) = s;
      }
    }
  }
}

#endif  // _OPENMP

}  // namespace kernels
}  // namespace bart
