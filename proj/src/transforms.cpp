#include "ltn/transforms.hpp"

#include <cmath>
#include <functional>
#include <unordered_map>
#include <vector>

#include "ltn/errors.hpp"
#include "ltn/rng.hpp"

namespace ltn {

namespace {

// Fixed Monte Carlo block size; per-block substreams make the block merge
// independent of the thread count.
constexpr std::int64_t kMcBlock = 4096;

void check_tree_params(const Eigen::VectorXd& mu, const Eigen::MatrixXd& omega,
                       const PhyloTree& tree, const char* what) {
  const int d = tree.interior_count();
  if (mu.size() != d || omega.rows() != d || omega.cols() != d)
    throw ValidationError(std::string(what) + ": parameter dimensions do not match the tree");
}

}  // namespace

void check_composition(const Eigen::VectorXd& p) {
  if ((p.array() <= 0.0).any())
    throw ValidationError("composition entries must be strictly positive");
  double sum = p.sum();
  if (std::fabs(sum - 1.0) > 1e-12)
    throw ValidationError("composition does not sum to 1 (got " + std::to_string(sum) + ")");
}

Eigen::VectorXd closure(const Eigen::VectorXd& v) {
  double sum = v.sum();
  if (!(sum > 0.0)) throw ValidationError("closure: vector must have positive total");
  return v / sum;
}

Eigen::VectorXd tlr(const Eigen::VectorXd& p, const PhyloTree& tree) {
  check_composition(p);
  const int d = tree.interior_count();
  if (p.size() != tree.leaf_count())
    throw ValidationError("tlr: composition length does not match the tree");
  std::vector<double> mass(d);
  Eigen::VectorXd psi(d);
  for (int a = d - 1; a >= 0; --a) {
    PhyloTree::Child l = tree.left(a);
    PhyloTree::Child r = tree.right(a);
    double ml = l.leaf ? p[l.idx] : mass[l.idx];
    double mr = r.leaf ? p[r.idx] : mass[r.idx];
    mass[a] = ml + mr;
    if (!(ml > 0.0) || !(mr > 0.0))
      throw ValidationError("tlr: zero mass at interior node " + std::to_string(a));
    psi[a] = std::log(ml) - std::log(mr);
  }
  return psi;
}

Eigen::VectorXd tlr_inverse(const Eigen::VectorXd& psi, const PhyloTree& tree) {
  const int d = tree.interior_count();
  if (psi.size() != d) throw ValidationError("tlr_inverse: log-odds length does not match tree");
  if (!psi.allFinite()) throw ValidationError("tlr_inverse: log-odds must be finite");
  std::vector<double> mass(d);
  Eigen::VectorXd p(tree.leaf_count());
  mass[0] = 1.0;
  for (int a = 0; a < d; ++a) {
    double m = mass[a];
    double ml = m * logistic(psi[a]);
    double mr = m * logistic(-psi[a]);
    PhyloTree::Child l = tree.left(a);
    PhyloTree::Child r = tree.right(a);
    if (l.leaf) p[l.idx] = ml; else mass[l.idx] = ml;
    if (r.leaf) p[r.idx] = mr; else mass[r.idx] = mr;
  }
  return p;
}

Eigen::VectorXd branch_probs(const Eigen::VectorXd& psi) {
  Eigen::VectorXd theta(psi.size());
  for (Eigen::Index a = 0; a < psi.size(); ++a) theta[a] = logistic(psi[a]);
  return theta;
}

Eigen::VectorXd clr(const Eigen::VectorXd& p) {
  check_composition(p);
  Eigen::VectorXd lg = p.array().log();
  return lg.array() - lg.mean();
}

Eigen::VectorXd clr_inverse(const Eigen::VectorXd& x) {
  Eigen::VectorXd e = (x.array() - x.maxCoeff()).exp();
  return closure(e);
}

Eigen::VectorXd alr(const Eigen::VectorXd& p) {
  check_composition(p);
  const Eigen::Index d = p.size() - 1;
  Eigen::VectorXd out(d);
  for (Eigen::Index j = 0; j < d; ++j) out[j] = std::log(p[j]) - std::log(p[d]);
  return out;
}

Eigen::VectorXd alr_inverse(const Eigen::VectorXd& x) {
  const Eigen::Index d = x.size();
  Eigen::VectorXd v(d + 1);
  double m = std::max(x.maxCoeff(), 0.0);
  for (Eigen::Index j = 0; j < d; ++j) v[j] = std::exp(x[j] - m);
  v[d] = std::exp(-m);
  return closure(v);
}

Eigen::VectorXd ilr(const Eigen::VectorXd& p, const PhyloTree& tree) {
  check_composition(p);
  const int d = tree.interior_count();
  if (p.size() != tree.leaf_count())
    throw ValidationError("ilr: composition length does not match the tree");
  Eigen::VectorXd lg = p.array().log();
  std::vector<double> sumlog(d);
  Eigen::VectorXd eta(d);
  for (int a = d - 1; a >= 0; --a) {
    PhyloTree::Child l = tree.left(a);
    PhyloTree::Child r = tree.right(a);
    double sl = l.leaf ? lg[l.idx] : sumlog[l.idx];
    double sr = r.leaf ? lg[r.idx] : sumlog[r.idx];
    sumlog[a] = sl + sr;
    double nl = tree.leaves_under(l);
    double nr = tree.leaves_under(r);
    eta[a] = std::sqrt(nl * nr / (nl + nr)) * (sl / nl - sr / nr);
  }
  return eta;
}

Eigen::VectorXd ilr_inverse(const Eigen::VectorXd& eta, const PhyloTree& tree) {
  const int d = tree.interior_count();
  if (eta.size() != d) throw ValidationError("ilr_inverse: balance length does not match tree");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(tree.leaf_count());
  std::function<void(PhyloTree::Child, double)> add = [&](PhyloTree::Child c, double v) {
    if (c.leaf) {
      x[c.idx] += v;
    } else {
      add(tree.left(c.idx), v);
      add(tree.right(c.idx), v);
    }
  };
  for (int a = 0; a < d; ++a) {
    PhyloTree::Child l = tree.left(a);
    PhyloTree::Child r = tree.right(a);
    double nl = tree.leaves_under(l);
    double nr = tree.leaves_under(r);
    add(l, eta[a] * std::sqrt(nr / (nl * (nl + nr))));
    add(r, -eta[a] * std::sqrt(nl / (nr * (nl + nr))));
  }
  return clr_inverse(x);
}

Eigen::MatrixXd empirical_logodds(const CountDecomposition& dec) {
  Eigen::MatrixXd psi(dec.y_total.rows(), dec.y_total.cols());
  for (Eigen::Index i = 0; i < psi.rows(); ++i) {
    for (Eigen::Index a = 0; a < psi.cols(); ++a) {
      double yl = static_cast<double>(dec.y_left(i, a));
      double yr = static_cast<double>(dec.y_total(i, a) - dec.y_left(i, a));
      psi(i, a) = std::log(yl + 0.5) - std::log(yr + 0.5);
    }
  }
  return psi;
}

namespace {

// Shared block-accumulation driver: maps each MVN draw through `transform`
// and accumulates first/second moments in fixed block order.
template <class Transform>
void mc_moments(const Eigen::VectorXd& mu, const Eigen::MatrixXd& omega, std::int64_t draws,
                std::uint64_t seed, Exec exec, int out_dim, Transform&& transform,
                Eigen::VectorXd& mean_out, Eigen::MatrixXd& cov_out) {
  if (draws < 2) throw ValidationError("Monte Carlo conversion needs at least 2 draws");
  auto llt = cholesky_spd(omega, "Monte Carlo conversion precision");
  const int nblocks = static_cast<int>((draws + kMcBlock - 1) / kMcBlock);
  std::vector<Eigen::VectorXd> bsum(nblocks);
  std::vector<Eigen::MatrixXd> bouter(nblocks);
  const int d = static_cast<int>(mu.size());

  for_each_index(exec, nblocks, [&](int b) {
    RngStream rng(seed, static_cast<std::uint64_t>(b) + 1);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(out_dim);
    Eigen::MatrixXd outer = Eigen::MatrixXd::Zero(out_dim, out_dim);
    Eigen::VectorXd z(d);
    const std::int64_t lo = static_cast<std::int64_t>(b) * kMcBlock;
    const std::int64_t hi = std::min(draws, lo + kMcBlock);
    for (std::int64_t m = lo; m < hi; ++m) {
      for (int k = 0; k < d; ++k) z[k] = rng.normal();
      Eigen::VectorXd psi = mu + llt.matrixU().solve(z);
      Eigen::VectorXd v = transform(psi);
      sum += v;
      outer.selfadjointView<Eigen::Lower>().rankUpdate(v);
    }
    bsum[b] = std::move(sum);
    bouter[b] = std::move(outer);
  });

  Eigen::VectorXd sum = Eigen::VectorXd::Zero(out_dim);
  Eigen::MatrixXd outer = Eigen::MatrixXd::Zero(out_dim, out_dim);
  for (int b = 0; b < nblocks; ++b) {
    sum += bsum[b];
    outer += bouter[b];
  }
  outer = outer.selfadjointView<Eigen::Lower>();
  const double m = static_cast<double>(draws);
  mean_out = sum / m;
  cov_out = (outer - sum * sum.transpose() / m) / (m - 1.0);
  cov_out = 0.5 * (cov_out + cov_out.transpose()).eval();
}

}  // namespace

ClrCovariance ltn_to_clr_cov(const Eigen::VectorXd& mu, const Eigen::MatrixXd& omega,
                             const PhyloTree& tree, std::int64_t draws, std::uint64_t seed,
                             Exec exec) {
  check_tree_params(mu, omega, tree, "ltn_to_clr_cov");
  const int K = tree.leaf_count();
  ClrCovariance out;
  Eigen::VectorXd mean;
  mc_moments(mu, omega, draws, seed, exec, K,
             [&](const Eigen::VectorXd& psi) { return clr(tlr_inverse(psi, tree)); }, mean,
             out.cov);
  out.corr.resize(K, K);
  Eigen::VectorXd sd = out.cov.diagonal().array().max(0.0).sqrt();
  for (int i = 0; i < K; ++i) {
    for (int j = 0; j < K; ++j) {
      double denom = sd[i] * sd[j];
      out.corr(i, j) = denom > 0.0 ? out.cov(i, j) / denom : (i == j ? 1.0 : 0.0);
    }
  }
  return out;
}

RemappedMoments remap_ltn_moments(const Eigen::VectorXd& mu, const Eigen::MatrixXd& omega,
                                  const PhyloTree& from, const PhyloTree& to,
                                  std::int64_t draws, std::uint64_t seed, Exec exec) {
  check_tree_params(mu, omega, from, "remap_ltn_moments");
  if (from.leaf_count() != to.leaf_count())
    throw ValidationError("remap_ltn_moments: trees have different leaf counts");
  // Map source leaf index -> target leaf index by label.
  std::unordered_map<std::string, int> to_idx;
  for (int u = 0; u < to.leaf_count(); ++u) to_idx.emplace(to.leaf_labels()[u], u);
  std::vector<int> perm(from.leaf_count());
  for (int u = 0; u < from.leaf_count(); ++u) {
    auto it = to_idx.find(from.leaf_labels()[u]);
    if (it == to_idx.end())
      throw ValidationError("remap_ltn_moments: leaf '" + from.leaf_labels()[u] +
                            "' missing from the target tree");
    perm[u] = it->second;
  }
  RemappedMoments out;
  mc_moments(mu, omega, draws, seed, exec, to.interior_count(),
             [&](const Eigen::VectorXd& psi) {
               Eigen::VectorXd p = tlr_inverse(psi, from);
               Eigen::VectorXd p_to(to.leaf_count());
               for (int u = 0; u < p.size(); ++u) p_to[perm[u]] = p[u];
               return tlr(p_to, to);
             },
             out.node_means, out.node_cov);
  return out;
}

}  // namespace ltn
