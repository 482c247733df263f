#include "nggc/tf_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include <Eigen/Eigenvalues>

namespace nggc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Parlett-Reinsch diagonal balancing; improves companion eigenvalue accuracy.
void balance(Eigen::MatrixXd& m) {
  const Eigen::Index n = m.rows();
  constexpr double radix = 2.0;
  bool converged = false;
  for (int sweep = 0; sweep < 100 && !converged; ++sweep) {
    converged = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      double c = 0.0;
      double r = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        c += std::abs(m(j, i));
        r += std::abs(m(i, j));
      }
      if (c == 0.0 || r == 0.0) continue;
      double g = r / radix;
      double f = 1.0;
      const double s = c + r;
      while (c < g) {
        f *= radix;
        c *= radix * radix;
      }
      g = r * radix;
      while (c > g) {
        f /= radix;
        c /= radix * radix;
      }
      if ((c + r) / f < 0.95 * s) {
        converged = false;
        m.row(i) /= f;
        m.col(i) *= f;
      }
    }
  }
}

bool complex_less(const Complex& a, const Complex& b) {
  if (a.real() != b.real()) return a.real() < b.real();
  return a.imag() < b.imag();
}

double golden_max(const RationalTF& tf, double lo, double hi, double& arg) {
  // Maximizes |tf(jw)| on [lo, hi]; searches in log(w) when lo > 0.
  const bool logscale = lo > 0.0;
  auto to_w = [&](double x) { return logscale ? std::exp(x) : x; };
  auto mag = [&](double x) { return std::abs(tf.eval_s(Complex(0.0, to_w(x)))); };
  double a = logscale ? std::log(lo) : lo;
  double b = logscale ? std::log(hi) : hi;
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = mag(c);
  double fd = mag(d);
  for (int it = 0; it < 200 && std::abs(b - a) > 1e-13 * std::max(1.0, std::abs(b)); ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = mag(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = mag(d);
    }
  }
  const double x = (fc > fd) ? c : d;
  arg = to_w(x);
  return std::max(fc, fd);
}

}  // namespace

// ---------------------------------------------------------------- Polynomial

Polynomial::Polynomial() : coeffs_{0.0} {}

Polynomial::Polynomial(std::initializer_list<double> ascending) : coeffs_(ascending) { trim(); }

Polynomial::Polynomial(std::vector<double> ascending) : coeffs_(std::move(ascending)) { trim(); }

Polynomial Polynomial::constant(double c) { return Polynomial({c}); }

Polynomial Polynomial::from_roots(std::span<const double> roots) {
  Polynomial p{1.0};
  for (double r : roots) p = p * Polynomial{-r, 1.0};
  return p;
}

void Polynomial::trim() {
  if (coeffs_.empty()) {
    coeffs_.push_back(0.0);
    return;
  }
  for (double c : coeffs_) {
    if (!std::isfinite(c)) throw InvalidArgument("polynomial coefficient is not finite");
  }
  const double scale = max_abs_coeff();
  if (scale == 0.0) {
    coeffs_.assign(1, 0.0);
    return;
  }
  while (coeffs_.size() > 1 && std::abs(coeffs_.back()) <= kTrimTol * scale) coeffs_.pop_back();
}

double Polynomial::max_abs_coeff() const {
  double m = 0.0;
  for (double c : coeffs_) m = std::max(m, std::abs(c));
  return m;
}

Complex Polynomial::eval(Complex s) const {
  Complex acc = 0.0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * s + *it;
  return acc;
}

double Polynomial::eval(double s) const {
  double acc = 0.0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * s + *it;
  return acc;
}

std::vector<Complex> Polynomial::roots() const {
  const int n = degree();
  if (n < 1) return {};
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) comp(i + 1, i) = 1.0;
  for (int i = 0; i < n; ++i) comp(i, n - 1) = -coeffs_[i] / leading();
  balance(comp);
  Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
  std::vector<Complex> out(es.eigenvalues().begin(), es.eigenvalues().end());
  std::sort(out.begin(), out.end(), complex_less);
  return out;
}

Polynomial operator+(const Polynomial& a, const Polynomial& b) {
  std::vector<double> c(std::max(a.coeffs_.size(), b.coeffs_.size()), 0.0);
  for (std::size_t k = 0; k < c.size(); ++k) c[k] = a[k] + b[k];
  return Polynomial(std::move(c));
}

Polynomial operator-(const Polynomial& a, const Polynomial& b) { return a + (-1.0) * b; }

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  std::vector<double> c(a.coeffs_.size() + b.coeffs_.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.coeffs_.size(); ++i)
    for (std::size_t j = 0; j < b.coeffs_.size(); ++j) c[i + j] += a.coeffs_[i] * b.coeffs_[j];
  return Polynomial(std::move(c));
}

Polynomial operator*(double k, const Polynomial& p) {
  std::vector<double> c = p.coeffs_;
  for (double& x : c) x *= k;
  return Polynomial(std::move(c));
}

// ---------------------------------------------------------------- RationalTF

RationalTF::RationalTF(Polynomial num, Polynomial den) : num_(std::move(num)), den_(std::move(den)) {
  if (den_.is_zero()) throw InvalidArgument("transfer function denominator is the zero polynomial");
  const double lead = den_.leading();
  if (lead != 1.0) {
    num_ = (1.0 / lead) * num_;
    den_ = (1.0 / lead) * den_;
  }
}

RationalTF::RationalTF(std::vector<double> num, std::vector<double> den)
    : RationalTF(Polynomial(std::move(num)), Polynomial(std::move(den))) {}

RationalTF RationalTF::constant(double gain) { return RationalTF(Polynomial{gain}, Polynomial{1.0}); }

RationalTF operator+(const RationalTF& a, const RationalTF& b) {
  if (a.den() == b.den()) return RationalTF(a.num() + b.num(), a.den());
  return RationalTF(a.num() * b.den() + b.num() * a.den(), a.den() * b.den());
}

RationalTF operator*(const RationalTF& a, const RationalTF& b) {
  return RationalTF(a.num() * b.num(), a.den() * b.den());
}

RationalTF operator*(double k, const RationalTF& a) { return RationalTF(k * a.num(), a.den()); }

RationalTF reciprocal(const RationalTF& tf) {
  if (tf.is_zero()) throw ZeroNumerator("cannot invert an identically zero transfer function");
  return RationalTF(tf.den(), tf.num());
}

// ------------------------------------------------------------- FrequencyGrid

void FrequencyGrid::validate() const {
  if (!(omega_min > 0.0) || !std::isfinite(omega_min))
    throw InvalidArgument("frequency grid: omega_min must be positive and finite");
  if (!(omega_max > omega_min) || !std::isfinite(omega_max))
    throw InvalidArgument("frequency grid: omega_max must exceed omega_min");
  if (points_per_decade < 1) throw InvalidArgument("frequency grid: points_per_decade must be positive");
}

std::vector<double> FrequencyGrid::points() const {
  validate();
  const double lmin = std::log10(omega_min);
  const double lmax = std::log10(omega_max);
  const auto steps = static_cast<long>(std::ceil((lmax - lmin) * points_per_decade - 1e-9));
  std::vector<double> w;
  w.reserve(static_cast<std::size_t>(steps) + 2);
  if (include_zero) w.push_back(0.0);
  w.push_back(omega_min);
  for (long k = 1; k < steps; ++k) w.push_back(std::pow(10.0, lmin + (lmax - lmin) * k / steps));
  w.push_back(omega_max);
  return w;
}

// ---------------------------------------------------------------- StateSpace

Eigen::MatrixXcd StateSpace::response(double omega) const {
  const Eigen::Index n = states();
  if (n == 0) return Dff.cast<Complex>();
  Eigen::MatrixXcd sI_A = -A.cast<Complex>();
  sI_A.diagonal().array() += Complex(0.0, omega);
  Eigen::MatrixXcd x = sI_A.partialPivLu().solve(B.cast<Complex>());
  return C.cast<Complex>() * x + Dff.cast<Complex>();
}

Complex StateSpace::siso_response(double omega) const { return response(omega)(0, 0); }

// ---------------------------------------------------------------- operations

Complex eval_response(const RationalTF& tf, double omega) {
  if (!std::isfinite(omega) || omega < 0.0) throw InvalidArgument("omega must be finite and non-negative");
  const Complex s(0.0, omega);
  const Complex d = tf.den().eval(s);
  if (std::abs(d) < kAxisTol * tf.den().max_abs_coeff())
    throw PoleOnAxis("pole on the imaginary axis at omega = " + std::to_string(omega));
  return tf.num().eval(s) / d;
}

std::vector<Complex> poles(const RationalTF& tf) { return tf.den().roots(); }

std::vector<Complex> zeros(const RationalTF& tf) { return tf.num().roots(); }

Stability is_stable(const RationalTF& tf, double stab_tol) {
  Stability s{true, -kInf};
  for (const Complex& p : poles(tf)) s.margin = std::max(s.margin, p.real());
  s.stable = s.margin < -stab_tol;
  return s;
}

bool is_strictly_proper(const RationalTF& tf) { return tf.is_zero() || tf.relative_degree() >= 1; }

double hf_derivative_limit(const RationalTF& tf) {
  if (tf.is_zero()) return 0.0;
  const int rd = tf.relative_degree();
  if (rd <= 0) return kInf;
  if (rd >= 2) return 0.0;
  return std::abs(tf.num().leading() / tf.den().leading());
}

double hf_gain(const RationalTF& tf) {
  if (tf.is_zero()) return 0.0;
  const int rd = tf.relative_degree();
  if (rd > 0) return 0.0;
  if (rd < 0) return kInf;
  return std::abs(tf.num().leading() / tf.den().leading());
}

double dc_gain(const RationalTF& tf) {
  const double n0 = tf.num()[0];
  const double d0 = tf.den()[0];
  const bool num_vanishes = tf.is_zero() || std::abs(n0) <= kTrimTol * tf.num().max_abs_coeff();
  const bool den_vanishes = std::abs(d0) <= kTrimTol * tf.den().max_abs_coeff();
  if (den_vanishes && num_vanishes) throw Indeterminate("dc gain is 0/0 (pole and zero at the origin)");
  if (den_vanishes) return std::copysign(kInf, n0);
  return n0 / d0;
}

HinfResult hinf_norm(const RationalTF& tf, const FrequencyGrid& grid) {
  if (!is_stable(tf).stable) throw UnstableSystem("H-infinity norm is unbounded for an unstable system");
  std::vector<double> w = grid.points();
  if (w.front() != 0.0) w.insert(w.begin(), 0.0);

  std::size_t best = 0;
  double best_mag = -1.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double m = std::abs(eval_response(tf, w[k]));
    if (m > best_mag) {
      best_mag = m;
      best = k;
    }
  }
  HinfResult r{best_mag, w[best]};

  const double lo = w[best == 0 ? 0 : best - 1];
  const double hi = w[std::min(best + 1, w.size() - 1)];
  if (hi > lo) {
    double arg = 0.0;
    const double refined = golden_max(tf, lo, hi, arg);
    if (refined > r.norm) r = {refined, arg};
  }
  if (best + 1 == w.size()) {
    const double tail = hf_gain(tf);
    if (tail > r.norm) r = {tail, w.back()};
  }
  return r;
}

StateSpace to_statespace(const RationalTF& tf) {
  if (tf.relative_degree() < 0 && !tf.is_zero())
    throw ImproperSystem("cannot realize an improper transfer function (deg num > deg den)");
  const int n = tf.den().degree();
  const Polynomial& den = tf.den();  // monic
  const double d = tf.is_zero() ? 0.0 : tf.num()[static_cast<std::size_t>(n)];

  StateSpace ss;
  ss.A = Eigen::MatrixXd::Zero(n, n);
  ss.B = Eigen::MatrixXd::Zero(n, 1);
  ss.C = Eigen::MatrixXd::Zero(1, n);
  ss.Dff = Eigen::MatrixXd::Constant(1, 1, d);
  if (n == 0) return ss;
  // Companion form under the similarity diag(a^i), a a power of two near
  // |den(0)|^(1/n): same transfer function, far better conditioned when the
  // poles are large.
  double a = 1.0;
  if (den[0] != 0.0) a = std::exp2(std::round(std::log2(std::abs(den[0])) / n));
  for (int i = 0; i + 1 < n; ++i) ss.A(i, i + 1) = a;
  for (int j = 0; j < n; ++j) {
    const auto k = static_cast<std::size_t>(j);
    ss.A(n - 1, j) = -den[k] * std::pow(a, j - n + 1);
    ss.C(0, j) = (tf.num()[k] - d * den[k]) * std::pow(a, j);
  }
  ss.B(n - 1, 0) = std::pow(a, 1 - n);
  return ss;
}

RationalTF feedback_transform(const RationalTF& tf, double c) {
  if (c == 0.0) return tf;
  Polynomial den = tf.den() - c * tf.num();
  if (den.is_zero()) throw DegenerateLoop("1 - c*tf vanishes identically");
  return RationalTF(tf.num(), std::move(den));
}

bool has_near_cancellation(const RationalTF& tf, double tol) {
  const auto z = zeros(tf);
  const auto p = poles(tf);
  for (const Complex& a : z)
    for (const Complex& b : p)
      if (std::abs(a - b) < tol) return true;
  return false;
}

}  // namespace nggc
