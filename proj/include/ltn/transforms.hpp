#ifndef LTN_TRANSFORMS_HPP
#define LTN_TRANSFORMS_HPP

#include <cstdint>

#include <Eigen/Dense>

#include "ltn/parallel.hpp"
#include "ltn/phylo.hpp"

namespace ltn {

inline double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

/// Throws ValidationError unless p is strictly positive and sums to 1
/// within 1e-12.
void check_composition(const Eigen::VectorXd& p);

/// Rescale a positive vector onto the simplex.
Eigen::VectorXd closure(const Eigen::VectorXd& v);

/// Tree log-ratio transform: psi(A) = log(theta / (1 - theta)) with
/// theta(A) = left-subtree mass / node mass, indexed by interior pre-order.
Eigen::VectorXd tlr(const Eigen::VectorXd& p, const PhyloTree& tree);

/// Inverse tlr: each leaf probability is the product of theta or 1 - theta
/// along its root path.
Eigen::VectorXd tlr_inverse(const Eigen::VectorXd& psi, const PhyloTree& tree);

/// Branching probabilities theta(A) = logistic(psi(A)).
Eigen::VectorXd branch_probs(const Eigen::VectorXd& psi);

Eigen::VectorXd clr(const Eigen::VectorXd& p);
Eigen::VectorXd clr_inverse(const Eigen::VectorXd& x);

Eigen::VectorXd alr(const Eigen::VectorXd& p);
Eigen::VectorXd alr_inverse(const Eigen::VectorXd& x);

/// Isometric log-ratio balances on the tree:
/// eta(A) = sqrt(|Al||Ar| / (|Al|+|Ar|)) * log(g(p(Al)) / g(p(Ar))).
Eigen::VectorXd ilr(const Eigen::VectorXd& p, const PhyloTree& tree);
Eigen::VectorXd ilr_inverse(const Eigen::VectorXd& eta, const PhyloTree& tree);

/// Empirical node log-odds with a 0.5 pseudocount added to each side of the
/// binomial (not per leaf); used for chain initialization.
Eigen::MatrixXd empirical_logodds(const CountDecomposition& dec);

struct ClrCovariance {
  Eigen::MatrixXd cov;   // K x K, rows sum to 0
  Eigen::MatrixXd corr;  // entrywise normalization of cov
};

/// Monte Carlo conversion of LTN parameters to the induced clr
/// covariance/correlation: draw psi_1..psi_M ~ MVN(mu, omega^-1), map each
/// through tlr^-1 then clr, and return the sample covariance. Draws are
/// generated in fixed-size blocks with per-block substreams, so the result
/// is bit-identical for a given seed regardless of thread count.
ClrCovariance ltn_to_clr_cov(const Eigen::VectorXd& mu, const Eigen::MatrixXd& omega,
                             const PhyloTree& tree, std::int64_t draws, std::uint64_t seed,
                             Exec exec = Exec::kParallel);

struct RemappedMoments {
  Eigen::VectorXd node_means;  // tlr means on the target tree
  Eigen::MatrixXd node_cov;    // tlr covariance on the target tree
};

/// Re-express an LTN fit from one tree on another tree over the same leaf
/// label set: draw psi ~ MVN(mu, omega^-1) on `from`, map to compositions,
/// and take tlr moments on `to`.
RemappedMoments remap_ltn_moments(const Eigen::VectorXd& mu, const Eigen::MatrixXd& omega,
                                  const PhyloTree& from, const PhyloTree& to,
                                  std::int64_t draws, std::uint64_t seed,
                                  Exec exec = Exec::kParallel);

}  // namespace ltn

#endif  // LTN_TRANSFORMS_HPP
