#pragma once

// Rational transfer-function algebra in the Laplace variable s.
//
// Everything here is a value type: a RationalTF never changes after it is
// built, and every free function is a pure function of its arguments.

#include <complex>
#include <initializer_list>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "nggc/errors.hpp"

namespace nggc {

using Complex = std::complex<double>;

/// Coefficients below trim_tol * max|coeff| are dropped from the high end.
inline constexpr double kTrimTol = 1e-12;
/// |den(jw)| below axis_tol * max|den coeff| signals a pole on the jw axis.
inline constexpr double kAxisTol = 1e-12;
/// "Strictly in the left half-plane" means Re(p) < -stab_tol.
inline constexpr double kStabTol = 1e-9;
/// Pole/zero pairs closer than this are flagged (never cancelled).
inline constexpr double kCancelTol = 1e-8;

/// Real polynomial stored with ascending coefficients (c0 + c1 s + ...).
class Polynomial {
 public:
  Polynomial();
  Polynomial(std::initializer_list<double> ascending);
  explicit Polynomial(std::vector<double> ascending);

  static Polynomial constant(double c);
  /// Monic polynomial with the given real roots.
  static Polynomial from_roots(std::span<const double> roots);

  [[nodiscard]] int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  [[nodiscard]] bool is_zero() const { return coeffs_.size() == 1 && coeffs_[0] == 0.0; }
  [[nodiscard]] std::span<const double> coeffs() const { return coeffs_; }
  [[nodiscard]] double operator[](std::size_t k) const { return k < coeffs_.size() ? coeffs_[k] : 0.0; }
  [[nodiscard]] double leading() const { return coeffs_.back(); }
  [[nodiscard]] double max_abs_coeff() const;

  [[nodiscard]] Complex eval(Complex s) const;
  [[nodiscard]] double eval(double s) const;

  /// Roots from the eigenvalues of the companion matrix, sorted by (re, im).
  [[nodiscard]] std::vector<Complex> roots() const;

  friend Polynomial operator+(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator-(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator*(double k, const Polynomial& p);
  friend bool operator==(const Polynomial& a, const Polynomial& b) = default;

 private:
  void trim();
  std::vector<double> coeffs_;
};

/// Real-coefficient rational function num(s)/den(s) with a monic denominator.
class RationalTF {
 public:
  /// Throws InvalidArgument when den is the zero polynomial.
  RationalTF(Polynomial num, Polynomial den);
  RationalTF(std::vector<double> num, std::vector<double> den);
  RationalTF(std::initializer_list<double> num, std::initializer_list<double> den)
      : RationalTF(std::vector<double>(num), std::vector<double>(den)) {}

  static RationalTF constant(double gain);

  [[nodiscard]] const Polynomial& num() const { return num_; }
  [[nodiscard]] const Polynomial& den() const { return den_; }
  [[nodiscard]] int relative_degree() const { return den_.degree() - num_.degree(); }
  [[nodiscard]] bool is_zero() const { return num_.is_zero(); }

  /// Value at an arbitrary complex s (no axis check).
  [[nodiscard]] Complex eval_s(Complex s) const { return num_.eval(s) / den_.eval(s); }

  friend bool operator==(const RationalTF& a, const RationalTF& b) = default;

 private:
  Polynomial num_;
  Polynomial den_;
};

RationalTF operator+(const RationalTF& a, const RationalTF& b);
RationalTF operator*(const RationalTF& a, const RationalTF& b);
RationalTF operator*(double k, const RationalTF& a);
/// 1/tf; throws ZeroNumerator when tf is identically zero.
RationalTF reciprocal(const RationalTF& tf);

/// Log-spaced frequency grid in rad/s.
struct FrequencyGrid {
  double omega_min = 1e-3;
  double omega_max = 1e4;
  int points_per_decade = 60;
  bool include_zero = false;

  /// Throws InvalidArgument on an inconsistent grid.
  void validate() const;
  /// Ascending points; endpoints are always included exactly.
  [[nodiscard]] std::vector<double> points() const;
};

/// Dense real realization x' = A x + B u, y = C x + Dff u.
struct StateSpace {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd C;
  Eigen::MatrixXd Dff;

  [[nodiscard]] Eigen::Index states() const { return A.rows(); }
  [[nodiscard]] Eigen::MatrixXcd response(double omega) const;
  /// Scalar response for a SISO realization.
  [[nodiscard]] Complex siso_response(double omega) const;
};

struct Stability {
  bool stable = false;
  /// Largest real part over all poles (-inf when there are no poles).
  double margin = 0.0;
};

struct HinfResult {
  double norm = 0.0;
  double omega = 0.0;
};

/// tf(jw) by Horner evaluation; throws PoleOnAxis at a jw-axis pole.
Complex eval_response(const RationalTF& tf, double omega);
std::vector<Complex> poles(const RationalTF& tf);
std::vector<Complex> zeros(const RationalTF& tf);
Stability is_stable(const RationalTF& tf, double stab_tol = kStabTol);
bool is_strictly_proper(const RationalTF& tf);
/// |lim jw tf(jw)|: finite for relative degree 1, zero above, +inf below.
double hf_derivative_limit(const RationalTF& tf);
/// |tf(jw)| as w -> inf (zero for strictly proper).
double hf_gain(const RationalTF& tf);
/// num(0)/den(0); signed infinity at an integrator, Indeterminate for 0/0.
double dc_gain(const RationalTF& tf);
/// Grid maximum refined by golden-section search; throws UnstableSystem.
HinfResult hinf_norm(const RationalTF& tf, const FrequencyGrid& grid);
/// Scaled controllable canonical form; throws ImproperSystem if deg num > deg den.
StateSpace to_statespace(const RationalTF& tf);
/// tf / (1 - c tf); throws DegenerateLoop when den - c num vanishes.
RationalTF feedback_transform(const RationalTF& tf, double c);
/// True when some zero lies within tol of some pole (a hidden cancellation).
bool has_near_cancellation(const RationalTF& tf, double tol = kCancelTol);

}  // namespace nggc
