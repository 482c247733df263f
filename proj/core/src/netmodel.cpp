#include "nggc/netmodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>
#include <utility>

#include <Eigen/Eigenvalues>

namespace nggc {

namespace {

std::string line_tag(std::size_t k) { return "lines[" + std::to_string(k) + "]"; }

double scale(const NetworkSpec& spec) { return 1.0 / (1.0 + spec.rho * spec.rho); }

}  // namespace

std::vector<std::string> NetworkSpec::validate() const {
  std::vector<std::string> warnings;
  if (n < 1) throw InvalidNetwork("network: n must be at least 1");
  if (static_cast<int>(v0.size()) != n)
    throw InvalidNetwork("network: v0 has " + std::to_string(v0.size()) + " entries, expected " + std::to_string(n));
  for (std::size_t k = 0; k < v0.size(); ++k) {
    if (!(v0[k] > 0.0 && v0[k] < 2.0))
      throw InvalidNetwork("network: v0[" + std::to_string(k) + "] must lie in (0, 2)");
  }
  if (!(rho >= 0.0 && rho <= kRhoMax)) throw InvalidNetwork("network: rho must lie in [0, 0.5]");
  if (rho > kRhoWarn) {
    std::ostringstream os;
    os << "network: rho = " << rho << " exceeds " << kRhoWarn << "; the dominantly inductive assumption is weak";
    warnings.push_back(os.str());
  }
  std::set<std::pair<int, int>> seen;
  for (std::size_t k = 0; k < lines.size(); ++k) {
    const Line& l = lines[k];
    if (!(1 <= l.i && l.i < l.j && l.j <= n))
      throw InvalidNetwork("network: " + line_tag(k) + " requires 1 <= i < j <= n");
    if (!(l.b > 0.0) || !std::isfinite(l.b)) throw InvalidNetwork("network: " + line_tag(k) + " susceptance must be positive");
    if (!seen.insert({l.i, l.j}).second) throw InvalidNetwork("network: " + line_tag(k) + " duplicates an earlier line");
  }
  return warnings;
}

NetworkSpec NetworkSpec::flat(int n, double rho) {
  NetworkSpec s;
  s.n = n;
  s.rho = rho;
  s.v0.assign(static_cast<std::size_t>(std::max(n, 0)), 1.0);
  return s;
}

FpLaplacian build_fp_laplacian(const NetworkSpec& spec) {
  spec.validate();
  const double k = 2.0 * std::numbers::pi * scale(spec);
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(spec.n, spec.n);
  for (const Line& l : spec.lines) {
    const int i = l.i - 1;
    const int j = l.j - 1;
    const double w = k * l.b * spec.v0[i] * spec.v0[j];
    L(i, j) -= w;
    L(j, i) -= w;
    L(i, i) += w;
    L(j, j) += w;
  }
  return {std::move(L)};
}

VqMatrix build_vq_matrix(const NetworkSpec& spec) {
  spec.validate();
  const double k = scale(spec);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(spec.n, spec.n);
  for (const Line& l : spec.lines) {
    const int i = l.i - 1;
    const int j = l.j - 1;
    M(i, i) += k * l.b * (2.0 * spec.v0[i] - spec.v0[j]);
    M(j, j) += k * l.b * (2.0 * spec.v0[j] - spec.v0[i]);
    M(i, j) -= k * l.b * spec.v0[i];
    M(j, i) -= k * l.b * spec.v0[j];
  }
  return {std::move(M)};
}

GammaShift compute_gamma(const NetworkSpec& spec) {
  spec.validate();
  GammaShift g;
  g.c.assign(static_cast<std::size_t>(spec.n), 0.0);
  const double k = kGammaFactor * scale(spec);
  for (const Line& l : spec.lines) {
    g.c[static_cast<std::size_t>(l.i - 1)] += k * l.b;
    g.c[static_cast<std::size_t>(l.j - 1)] += k * l.b;
  }
  return g;
}

PassivityReport verify_shifted_passivity(const NetworkSpec& spec, const FrequencyGrid& grid) {
  const Eigen::MatrixXd L = build_fp_laplacian(spec).L;
  const Eigen::MatrixXd M = build_vq_matrix(spec).M;
  const GammaShift gamma = compute_gamma(spec);
  const Eigen::Index n = spec.n;

  Eigen::MatrixXd qv = 0.5 * (M + M.transpose());
  for (Eigen::Index i = 0; i < n; ++i) qv(i, i) += gamma.c[static_cast<std::size_t>(i)];

  PassivityReport rep;
  rep.qv_min_eigenvalue = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(qv, Eigen::EigenvaluesOnly).eigenvalues()(0);
  rep.min_eigenvalue = std::numeric_limits<double>::infinity();

  Eigen::MatrixXcd shifted = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
  Eigen::MatrixXd shifted_qv = M;
  shifted_qv.diagonal() += Eigen::VectorXd::Map(gamma.c.data(), n);
  shifted.bottomRightCorner(n, n) = shifted_qv.cast<Complex>();
  for (double w : grid.points()) {
    if (w == 0.0) continue;
    shifted.topLeftCorner(n, n) = L.cast<Complex>() / Complex(0.0, w);
    const Eigen::MatrixXcd herm = 0.5 * (shifted + shifted.adjoint());
    const double lo = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(herm, Eigen::EigenvaluesOnly).eigenvalues()(0);
    if (lo < rep.min_eigenvalue) {
      rep.min_eigenvalue = lo;
      rep.worst_omega = w;
    }
  }
  return rep;
}

int connected_components(const NetworkSpec& spec) {
  std::vector<int> parent(static_cast<std::size_t>(spec.n));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  int count = spec.n;
  for (const Line& l : spec.lines) {
    const int a = find(l.i - 1);
    const int b = find(l.j - 1);
    if (a != b) {
      parent[a] = b;
      --count;
    }
  }
  return count;
}

}  // namespace nggc
