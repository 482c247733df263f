#pragma once

// Quasi-stationary small-signal network model of a Kron-reduced,
// dominantly inductive transmission system.
//
// The pf channel couples bus frequencies to active power through L/s, where
// L is a weighted Laplacian; the qv channel is the static matrix M.  The
// loop-shifting diagonal Gamma (qv only) renders N + Gamma passive, which the
// sweep below checks per instance.

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nggc/tf_core.hpp"

namespace nggc {

struct Line {
  int i = 0;  // 1-based, i < j
  int j = 0;
  double b = 0.0;  // susceptance 1/l_ij, p.u.
};

struct NetworkSpec {
  int n = 0;
  std::vector<Line> lines;
  double rho = 0.0;
  std::vector<double> v0;

  /// Throws InvalidNetwork; returns human-readable warnings (e.g. rho > 0.2).
  std::vector<std::string> validate() const;
  /// Convenience: n buses, flat 1 p.u. voltages, no lines.
  static NetworkSpec flat(int n, double rho = 0.0);
};

inline constexpr double kRhoWarn = 0.2;
inline constexpr double kRhoMax = 0.5;
inline constexpr double kGammaFactor = 0.8;

struct FpLaplacian {
  Eigen::MatrixXd L;
};

struct VqMatrix {
  Eigen::MatrixXd M;
};

struct GammaShift {
  std::vector<double> c;
};

struct PassivityReport {
  /// Smallest eigenvalue of the Hermitian part of N'(jw) over the sweep.
  double min_eigenvalue = 0.0;
  /// Frequency at which the minimum occurred.
  double worst_omega = 0.0;
  /// Smallest eigenvalue of sym(M) + Gamma alone (the qv block).
  double qv_min_eigenvalue = 0.0;
  bool passive(double tol = 1e-9) const { return min_eigenvalue >= -tol; }
};

FpLaplacian build_fp_laplacian(const NetworkSpec& spec);
VqMatrix build_vq_matrix(const NetworkSpec& spec);
GammaShift compute_gamma(const NetworkSpec& spec);

/// Sweeps N'(jw) = blkdiag(L/(jw), M + Gamma) over the grid, skipping w = 0
/// (the pf integrator is lossless and contributes a zero Hermitian part).
PassivityReport verify_shifted_passivity(const NetworkSpec& spec, const FrequencyGrid& grid);

/// Number of connected components of the line graph (isolated buses count).
int connected_components(const NetworkSpec& spec);

}  // namespace nggc
