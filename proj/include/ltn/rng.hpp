#ifndef LTN_RNG_HPP
#define LTN_RNG_HPP

#include <array>
#include <cstdint>

#include <Eigen/Dense>

namespace ltn {

/// Seedable random stream with explicit substreams.
///
/// PCG64 (XSL-RR 128/64, "setseq" variant): the stream id selects the LCG
/// increment, so distinct stream ids yield distinct full-period sequences by
/// construction. Identical (seed, stream id, call sequence) reproduces the
/// same variates on any platform; all distribution kernels below are
/// hand-rolled so that checkpointed state round-trips exactly.
class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next_u64();

  double uniform();      // [0, 1)
  double uniform_pos();  // (0, 1), safe for log()

  double normal();                        // standard normal (Box-Muller)
  double exponential(double rate = 1.0);  // mean 1/rate
  double gamma(double shape, double rate);
  double beta(double a, double b);
  double inverse_gaussian(double mean, double shape);

  /// Exact Binomial(n, p) in O(log n) expected time via beta-order-statistic
  /// splitting (Devroye 1986, ch. X.4); small n falls back to Bernoulli
  /// counting.
  std::int64_t binomial(std::int64_t n, double p);

  /// PG(1, c) by the alternating-series rejection sampler
  /// (Polson, Scott & Windle 2013; Windle 2013, Algorithm 6).
  double polya_gamma1(double c);

  /// PG(b, c) for integer b >= 0. b = 0 returns 0 exactly; b <= exact_max
  /// sums b independent PG(1, c) draws; larger b uses a moment-matched
  /// normal approximation truncated at 0.
  double polya_gamma(std::int64_t b, double c, std::int64_t exact_max = kPgExactMax);

  static constexpr std::int64_t kPgExactMax = 200;

  std::uint64_t stream_id() const { return stream_id_; }

  /// Full generator state as two 64-bit words (stream id stored separately).
  std::array<std::uint64_t, 2> state_words() const;
  void restore(const std::array<std::uint64_t, 2>& words, std::uint64_t stream_id);

 private:
  unsigned __int128 state_;
  unsigned __int128 inc_;
  std::uint64_t stream_id_;
};

/// Closed-form PG(b, c) moments: mean b*tanh(c/2)/(2c) with limit b/4 at
/// c = 0, and the matching second-moment formula.
double pg_mean(double b, double c);
double pg_var(double b, double c);

/// Density of PG(b, 0) at w (alternating series), used by quadrature checks.
double pg_density_at_zero_tilt(double b, double w);

/// Draw from MVN(mean, cov). Cholesky-based; one jitter retry
/// (1e-10 * trace/d added to the diagonal) before failing.
Eigen::VectorXd mvn_mean_cov(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                             RngStream& rng);

/// Draw from MVN(mean, prec^-1) without forming the inverse.
Eigen::VectorXd mvn_mean_precision(const Eigen::VectorXd& mean, const Eigen::MatrixXd& prec,
                                   RngStream& rng);

/// Draw from MVN(prec^-1 h, prec^-1) -- the natural-parameter form used by
/// Gibbs full conditionals.
Eigen::VectorXd mvn_precision_linear(const Eigen::MatrixXd& prec, const Eigen::VectorXd& h,
                                     RngStream& rng);

/// q x d matrix with independent columns, column A ~ MVN(col_means.col(A),
/// col_scales[A] * (Z^T Z)^-1). `row_gram_llt` is the Cholesky of Z^T Z.
Eigen::MatrixXd matrix_normal_columns(const Eigen::MatrixXd& col_means,
                                      const Eigen::LLT<Eigen::MatrixXd>& row_gram_llt,
                                      const Eigen::VectorXd& col_scales, RngStream& rng);

/// Cholesky with one documented jitter retry; throws NumericalError.
Eigen::LLT<Eigen::MatrixXd> cholesky_spd(const Eigen::MatrixXd& m, const char* what);

}  // namespace ltn

#endif  // LTN_RNG_HPP
