#include "ltn/rng.hpp"

#include <cmath>
#include <limits>

#include "ltn/errors.hpp"

namespace ltn {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kHalfPi = kPi / 2.0;
constexpr double kTwoOverPi = 2.0 / kPi;
constexpr double kPiSq = kPi * kPi;

inline unsigned __int128 make_u128(std::uint64_t hi, std::uint64_t lo) {
  return (static_cast<unsigned __int128>(hi) << 64) | lo;
}

// PCG 128-bit LCG multiplier.
const unsigned __int128 kPcgMult = make_u128(0x2360ed051fc65da4ULL, 0x4385df649fccf645ULL);

inline std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotr64(std::uint64_t v, unsigned rot) {
  return (v >> rot) | (v << ((-rot) & 63u));
}

double log_norm_cdf(double x) {
  double c = 0.5 * std::erfc(-x * 0.70710678118654752440);
  return c > 0.0 ? std::log(c) : -std::numeric_limits<double>::infinity();
}

// Piecewise coefficients a_n(x|t) of the alternating series for the J*(1,0)
// density (Windle 2013, eqs. 2.14-2.15).
double pg_aterm(int n, double x, double t) {
  const double np = n + 0.5;
  double f;
  if (x <= t) {
    f = std::log(kPi) + std::log(np) + 1.5 * (std::log(kTwoOverPi) - std::log(x)) -
        2.0 * np * np / x;
  } else {
    f = std::log(kPi) + std::log(np) - 0.5 * x * kPiSq * np * np;
  }
  return std::exp(f);
}

// Gamma(1/2, 1) truncated to (pi/2, inf) (Chung 1998).
double pg_truncgamma(RngStream& rng) {
  for (;;) {
    double x = 2.0 * rng.exponential(1.0) + kHalfPi;
    double gx = std::sqrt(kHalfPi) / std::sqrt(x);
    if (rng.uniform() <= gx) return x;
  }
}

// Inverse-Gaussian(1/z, 1) truncated to (0, t) (Windle 2013, Algorithm 4).
double pg_tinvgauss(RngStream& rng, double z, double t) {
  double mu = 1.0 / z;
  if (mu > t) {
    for (;;) {
      double x = 1.0 / pg_truncgamma(rng);
      if (std::log(rng.uniform_pos()) < -0.5 * z * z * x) return x;
    }
  }
  for (;;) {
    double x = rng.inverse_gaussian(mu, 1.0);
    if (x < t) return x;
  }
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id) : stream_id_(stream_id) {
  std::uint64_t s = seed;
  std::uint64_t lo = splitmix64(s);
  std::uint64_t hi = splitmix64(s);
  inc_ = (static_cast<unsigned __int128>(stream_id) << 1) | 1u;
  state_ = 0;
  next_u64();
  state_ += make_u128(hi, lo);
  next_u64();
}

std::uint64_t RngStream::next_u64() {
  unsigned __int128 old = state_;
  state_ = old * kPcgMult + inc_;
  std::uint64_t xored = static_cast<std::uint64_t>(old >> 64) ^ static_cast<std::uint64_t>(old);
  unsigned rot = static_cast<unsigned>(old >> 122);
  return rotr64(xored, rot);
}

double RngStream::uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

double RngStream::uniform_pos() { return ((next_u64() >> 11) + 0.5) * 0x1.0p-53; }

double RngStream::normal() {
  double u1 = uniform_pos();
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

double RngStream::exponential(double rate) {
  if (rate <= 0.0) throw ValidationError("exponential: rate must be positive");
  return -std::log(uniform_pos()) / rate;
}

double RngStream::gamma(double shape, double rate) {
  if (shape <= 0.0 || rate <= 0.0) throw ValidationError("gamma: parameters must be positive");
  if (shape < 1.0) {
    double u = uniform_pos();
    return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
  }
  // Marsaglia & Tsang (2000).
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = normal();
    double t = 1.0 + c * x;
    if (t <= 0.0) continue;
    double v = t * t * t;
    double u = uniform_pos();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

double RngStream::beta(double a, double b) {
  double x = gamma(a, 1.0);
  double y = gamma(b, 1.0);
  double s = x + y;
  if (s <= 0.0) return 0.5;
  return x / s;
}

double RngStream::inverse_gaussian(double mean, double shape) {
  if (mean <= 0.0 || shape <= 0.0)
    throw ValidationError("inverse_gaussian: parameters must be positive");
  double n = normal();
  double y = n * n;
  double r = mean * y;
  // x = mean * (1 + (r - sqrt(r(r+4*shape)))/(2*shape)) in cancellation-free form.
  double disc = std::sqrt(r * (r + 4.0 * shape));
  double x = mean * (disc - r + 2.0 * shape) / (disc + r + 2.0 * shape);
  if (uniform() <= mean / (mean + x)) return x;
  return mean * mean / x;
}

std::int64_t RngStream::binomial(std::int64_t n, double p) {
  if (n < 0) throw ValidationError("binomial: n must be nonnegative");
  std::int64_t count = 0;
  // Beta order-statistic splitting keeps the recursion depth O(log n).
  while (n > 32) {
    if (p <= 0.0) return count;
    if (p >= 1.0) return count + n;
    std::int64_t a = 1 + n / 2;
    std::int64_t b = n + 1 - a;
    double x = beta(static_cast<double>(a), static_cast<double>(b));
    if (x <= 0.0) x = std::numeric_limits<double>::min();
    if (x >= 1.0) x = 1.0 - std::numeric_limits<double>::epsilon();
    if (p < x) {
      n = a - 1;
      p = p / x;
    } else {
      count += a;
      n = n - a;
      p = (p - x) / (1.0 - x);
    }
  }
  if (p <= 0.0) return count;
  if (p >= 1.0) return count + n;
  for (std::int64_t i = 0; i < n; ++i) {
    if (uniform() < p) ++count;
  }
  return count;
}

double RngStream::polya_gamma1(double c) {
  // PG(1, c) = J*(1, c/2) / 4; alternating-series rejection on J*
  // (Polson, Scott & Windle 2013; Windle 2013, Algorithm 6).
  const double z = 0.5 * std::fabs(c);
  const double t = kTwoOverPi;
  const double bigk = 0.5 * z * z + 0.125 * kPiSq;
  const double log_a = std::log(4.0) - std::log(kPi) - z;
  const double log_k = std::log(bigk);
  const double kt = bigk * t;
  const double w = std::sqrt(kHalfPi);
  const double logf1 = log_a + log_norm_cdf(w * (t * z - 1.0)) + log_k + kt;
  const double logf2 = log_a + 2.0 * z + log_norm_cdf(-w * (t * z + 1.0)) + log_k + kt;
  const double p_over_q = std::exp(logf1) + std::exp(logf2);
  const double ratio = 1.0 / (1.0 + p_over_q);

  for (;;) {
    double x;
    if (uniform() < ratio) {
      x = t + exponential(1.0) / bigk;  // truncated exponential tail
    } else {
      x = pg_tinvgauss(*this, z, t);  // truncated inverse-Gaussian head
    }
    double sn = pg_aterm(0, x, t);
    const double u = uniform() * sn;
    int i = 1;
    int sign = -1;
    bool even = false;
    for (;;) {
      sn += sign * pg_aterm(i, x, t);
      if (!even && u <= sn) return 0.25 * x;
      if (even && u > sn) break;
      even = !even;
      sign = -sign;
      ++i;
    }
  }
}

double RngStream::polya_gamma(std::int64_t b, double c, std::int64_t exact_max) {
  if (b < 0) throw ValidationError("polya_gamma: shape b must be nonnegative");
  if (b == 0) return 0.0;
  if (b <= exact_max) {
    double sum = 0.0;
    for (std::int64_t k = 0; k < b; ++k) sum += polya_gamma1(c);
    return sum;
  }
  // Moment-matched normal approximation, truncated at zero. The truncation
  // mass is negligible for b > exact_max (mean/sd grows like sqrt(b)).
  const double m = pg_mean(static_cast<double>(b), c);
  const double sd = std::sqrt(pg_var(static_cast<double>(b), c));
  double x;
  do {
    x = m + sd * normal();
  } while (x <= 0.0);
  return x;
}

std::array<std::uint64_t, 2> RngStream::state_words() const {
  return {static_cast<std::uint64_t>(state_ >> 64), static_cast<std::uint64_t>(state_)};
}

void RngStream::restore(const std::array<std::uint64_t, 2>& words, std::uint64_t stream_id) {
  state_ = make_u128(words[0], words[1]);
  stream_id_ = stream_id;
  inc_ = (static_cast<unsigned __int128>(stream_id) << 1) | 1u;
}

double pg_mean(double b, double c) {
  double ac = std::fabs(c);
  if (ac < 1e-4) return b * (0.25 - ac * ac / 48.0);
  return b * std::tanh(0.5 * ac) / (2.0 * ac);
}

double pg_var(double b, double c) {
  double ac = std::fabs(c);
  if (ac < 1e-3) return b * (1.0 / 24.0 - ac * ac / 120.0);
  double ch = std::cosh(0.5 * ac);
  return b * (std::sinh(ac) - ac) / (4.0 * ac * ac * ac * ch * ch);
}

double pg_density_at_zero_tilt(double b, double w) {
  if (w <= 0.0) return 0.0;
  const double log_pref = (b - 1.0) * std::log(2.0) - std::lgamma(b) -
                          0.5 * std::log(2.0 * kPi * w * w * w);
  double sum = 0.0;
  for (int n = 0; n < 600; ++n) {
    double a = 2.0 * n + b;
    double lt = log_pref + std::lgamma(n + b) - std::lgamma(n + 1.0) + std::log(a) -
                a * a / (8.0 * w);
    double term = std::exp(lt);
    sum += (n % 2 == 0) ? term : -term;
    if (n > 4 && term < 1e-18 * std::fabs(sum)) break;
  }
  return sum;
}

Eigen::LLT<Eigen::MatrixXd> cholesky_spd(const Eigen::MatrixXd& m, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() == Eigen::Success) return llt;
  // One jitter retry before giving up.
  const double jitter = 1e-10 * m.trace() / static_cast<double>(m.rows());
  Eigen::MatrixXd m2 = m;
  m2.diagonal().array() += jitter;
  llt.compute(m2);
  if (llt.info() == Eigen::Success) return llt;
  throw NumericalError(std::string("Cholesky factorization failed: ") + what);
}

Eigen::VectorXd mvn_mean_cov(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                             RngStream& rng) {
  auto llt = cholesky_spd(cov, "mvn covariance");
  Eigen::VectorXd z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return mean + llt.matrixL() * z;
}

Eigen::VectorXd mvn_mean_precision(const Eigen::VectorXd& mean, const Eigen::MatrixXd& prec,
                                   RngStream& rng) {
  auto llt = cholesky_spd(prec, "mvn precision");
  Eigen::VectorXd z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return mean + llt.matrixU().solve(z);
}

Eigen::VectorXd mvn_precision_linear(const Eigen::MatrixXd& prec, const Eigen::VectorXd& h,
                                     RngStream& rng) {
  auto llt = cholesky_spd(prec, "mvn precision");
  Eigen::VectorXd mean = llt.solve(h);
  Eigen::VectorXd z(h.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return mean + llt.matrixU().solve(z);
}

Eigen::MatrixXd matrix_normal_columns(const Eigen::MatrixXd& col_means,
                                      const Eigen::LLT<Eigen::MatrixXd>& row_gram_llt,
                                      const Eigen::VectorXd& col_scales, RngStream& rng) {
  const Eigen::Index q = col_means.rows();
  const Eigen::Index d = col_means.cols();
  if (col_scales.size() != d)
    throw ValidationError("matrix_normal_columns: scale/column count mismatch");
  Eigen::MatrixXd out(q, d);
  Eigen::VectorXd z(q);
  for (Eigen::Index a = 0; a < d; ++a) {
    if (!(col_scales[a] > 0.0))
      throw ValidationError("matrix_normal_columns: column scales must be positive");
    for (Eigen::Index i = 0; i < q; ++i) z[i] = rng.normal();
    // U^-1 z has covariance (Z^T Z)^-1 when U is the Cholesky factor of Z^T Z.
    out.col(a) = col_means.col(a) + std::sqrt(col_scales[a]) * row_gram_llt.matrixU().solve(z);
  }
  return out;
}

}  // namespace ltn
