#include "nggc/simkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>

#include <Eigen/Eigenvalues>

namespace nggc::sim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Block-diagonal stack of the device realizations.
struct DeviceBlock {
  Eigen::MatrixXd A, B, C;
  Eigen::VectorXd d;
};

DeviceBlock stack_devices(std::span<const RationalTF> devices) {
  const auto n = static_cast<Eigen::Index>(devices.size());
  std::vector<StateSpace> parts;
  parts.reserve(devices.size());
  Eigen::Index states = 0;
  for (const RationalTF& tf : devices) {
    parts.push_back(to_statespace(tf));
    states += parts.back().states();
  }
  DeviceBlock blk{Eigen::MatrixXd::Zero(states, states), Eigen::MatrixXd::Zero(states, n),
                  Eigen::MatrixXd::Zero(n, states), Eigen::VectorXd::Zero(n)};
  Eigen::Index off = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const StateSpace& p = parts[static_cast<std::size_t>(i)];
    const Eigen::Index k = p.states();
    blk.A.block(off, off, k, k) = p.A;
    blk.B.block(off, i, k, 1) = p.B;
    blk.C.block(i, off, 1, k) = p.C;
    blk.d(i) = p.Dff(0, 0);
    off += k;
  }
  return blk;
}

// Appends the mean of the per-bus rows as the last output row.
void append_average(StateSpace& ss, Eigen::Index n) {
  const Eigen::Index rows = ss.C.rows();
  ss.C.conservativeResize(rows + 1, Eigen::NoChange);
  ss.Dff.conservativeResize(rows + 1, Eigen::NoChange);
  ss.C.row(rows) = ss.C.topRows(n).colwise().mean();
  ss.Dff.row(rows) = ss.Dff.topRows(n).colwise().mean();
}

// Components from the sparsity pattern of a Laplacian.
std::vector<int> component_labels(const Eigen::MatrixXd& L) {
  const auto n = static_cast<int>(L.rows());
  std::vector<int> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (L(i, j) != 0.0 || L(j, i) != 0.0) parent[find(i)] = find(j);
  std::vector<int> label(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) label[i] = find(i);
  return label;
}

// 1/D(0), with 0 for an integrating device and +inf for a differentiating one.
double dc_admittance(const RationalTF& tf) {
  try {
    const double g = dc_gain(tf);
    if (std::isinf(g)) return 0.0;
    return g == 0.0 ? kInf : 1.0 / g;
  } catch (const Indeterminate&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

// Generic dc gain of the average row: D - C A^-1 B, NaN when A is singular.
std::vector<double> static_avg_gain(const StateSpace& ss, Eigen::Index avg) {
  const Eigen::Index m = ss.B.cols();
  std::vector<double> g(static_cast<std::size_t>(m));
  if (ss.states() == 0) {
    for (Eigen::Index k = 0; k < m; ++k) g[static_cast<std::size_t>(k)] = ss.Dff(avg, k);
    return g;
  }
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(ss.A);
  for (Eigen::Index k = 0; k < m; ++k) {
    g[static_cast<std::size_t>(k)] = lu.isInvertible()
                                         ? ss.Dff(avg, k) - ss.C.row(avg).dot(lu.solve(ss.B.col(k)))
                                         : std::numeric_limits<double>::quiet_NaN();
  }
  return g;
}

void check_devices(std::span<const RationalTF> devices, Eigen::Index n, const char* what) {
  if (devices.empty()) throw InvalidArgument(std::string(what) + ": no devices");
  if (static_cast<Eigen::Index>(devices.size()) != n)
    throw InvalidArgument(std::string(what) + ": device count does not match the network size");
  for (const RationalTF& tf : devices)
    if (tf.relative_degree() < 0) throw ImproperSystem(std::string(what) + ": device law is improper");
}

// Fixed-step RK4 for x' = A x + b (constant input); calls sink(k, x) at every sample.
template <class Sink>
void rk4(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double h, std::size_t steps, Sink&& sink) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(A.rows());
  auto f = [&](const Eigen::VectorXd& y) -> Eigen::VectorXd { return A * y + b; };
  sink(std::size_t{0}, x);
  for (std::size_t k = 1; k <= steps; ++k) {
    const Eigen::VectorXd k1 = f(x);
    const Eigen::VectorXd k2 = f(x + 0.5 * h * k1);
    const Eigen::VectorXd k3 = f(x + 0.5 * h * k2);
    const Eigen::VectorXd k4 = f(x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    sink(k, x);
  }
}

std::size_t step_count(double T, double h) {
  if (!(T > 0.0) || !std::isfinite(T)) throw InvalidArgument("step_response: T must be positive");
  if (!(h > 0.0) || !std::isfinite(h) || h > T) throw InvalidArgument("step_response: h must lie in (0, T]");
  return static_cast<std::size_t>(std::llround(T / h));
}

}  // namespace

RationalTF average_mode(std::span<const RationalTF> devices) {
  if (devices.empty()) throw InvalidArgument("average_mode: no devices");
  // Group identical devices first: k copies of D contribute D/k exactly.
  std::vector<std::pair<RationalTF, int>> groups;
  for (const RationalTF& tf : devices) {
    if (tf.is_zero()) throw ZeroNumerator("average_mode: device transfer function is identically zero");
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == tf; });
    if (it == groups.end())
      groups.emplace_back(tf, 1);
    else
      ++it->second;
  }
  if (groups.size() == 1) return (1.0 / groups.front().second) * groups.front().first;
  RationalTF sum = static_cast<double>(groups.front().second) * reciprocal(groups.front().first);
  for (std::size_t k = 1; k < groups.size(); ++k)
    sum = sum + static_cast<double>(groups[k].second) * reciprocal(groups[k].first);
  return reciprocal(sum);
}

Eigen::VectorXcd ClosedLoopModel::eigenvalues() const {
  if (ss.states() == 0) return {};
  return Eigen::EigenSolver<Eigen::MatrixXd>(ss.A, false).eigenvalues();
}

std::vector<Complex> ClosedLoopModel::dynamic_eigenvalues() const {
  const Eigen::VectorXcd ev = eigenvalues();
  std::vector<Complex> all(ev.data(), ev.data() + ev.size());
  std::sort(all.begin(), all.end(), [](Complex a, Complex b) { return std::abs(a) < std::abs(b); });
  const auto drop = std::min<std::size_t>(static_cast<std::size_t>(structural_zero_count), all.size());
  return {all.begin() + static_cast<std::ptrdiff_t>(drop), all.end()};
}

ClosedLoopModel assemble_pf_loop(std::span<const RationalTF> devices, const FpLaplacian& lap) {
  const Eigen::MatrixXd& L = lap.L;
  const Eigen::Index n = L.rows();
  check_devices(devices, n, "assemble_pf_loop");
  const DeviceBlock dev = stack_devices(devices);
  const Eigen::Index m = dev.A.rows();
  const Eigen::MatrixXd DL = dev.d.asDiagonal() * L;

  // u = -w - L theta;  f = C x + d u;  theta' = f
  ClosedLoopModel model;
  model.channel = Channel::Pf;
  model.n_buses = static_cast<int>(n);
  StateSpace& ss = model.ss;
  ss.A = Eigen::MatrixXd::Zero(m + n, m + n);
  ss.A.topLeftCorner(m, m) = dev.A;
  ss.A.topRightCorner(m, n) = -dev.B * L;
  ss.A.bottomLeftCorner(n, m) = dev.C;
  ss.A.bottomRightCorner(n, n) = -DL;
  ss.B = Eigen::MatrixXd::Zero(m + n, n);
  ss.B.topRows(m) = -dev.B;
  ss.B.bottomRows(n) = -Eigen::MatrixXd(dev.d.asDiagonal());
  ss.C = Eigen::MatrixXd::Zero(n, m + n);
  ss.C.leftCols(m) = dev.C;
  ss.C.rightCols(n) = -DL;
  ss.Dff = -Eigen::MatrixXd(dev.d.asDiagonal());
  append_average(ss, n);

  // Each component settles to a common frequency f* = -w / sum(1/D_i(0)).
  const std::vector<int> comp = component_labels(L);
  model.structural_zero_count =
      static_cast<int>(std::set<int>(comp.begin(), comp.end()).size());
  model.dc_avg_gain.assign(static_cast<std::size_t>(n), 0.0);
  for (Eigen::Index k = 0; k < n; ++k) {
    double admittance = 0.0;
    int members = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (comp[i] != comp[k]) continue;
      admittance += dc_admittance(devices[static_cast<std::size_t>(i)]);
      ++members;
    }
    const double f_star = -1.0 / admittance;
    model.dc_avg_gain[static_cast<std::size_t>(k)] = f_star * members / static_cast<double>(n);
  }
  return model;
}

ClosedLoopModel assemble_qv_loop(std::span<const RationalTF> devices, const VqMatrix& net) {
  const Eigen::MatrixXd& M = net.M;
  const Eigen::Index n = M.rows();
  check_devices(devices, n, "assemble_qv_loop");
  const DeviceBlock dev = stack_devices(devices);

  // u = -(I + M diag(d))^-1 (w + M C x)
  const Eigen::MatrixXd loop = Eigen::MatrixXd::Identity(n, n) + M * dev.d.asDiagonal();
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(loop);
  if (!lu.isInvertible() || lu.rcond() < 1e-12)
    throw IllPosedLoop("assemble_qv_loop: I + M diag(d) is singular");
  const Eigen::MatrixXd K = lu.inverse();
  const Eigen::MatrixXd KMC = K * M * dev.C;

  ClosedLoopModel model;
  model.channel = Channel::Qv;
  model.n_buses = static_cast<int>(n);
  StateSpace& ss = model.ss;
  ss.A = dev.A - dev.B * KMC;
  ss.B = -dev.B * K;
  ss.C = dev.C - dev.d.asDiagonal() * KMC;
  ss.Dff = -(dev.d.asDiagonal() * K);
  append_average(ss, n);
  model.structural_zero_count = 0;
  model.dc_avg_gain = static_avg_gain(ss, model.avg_row());
  return model;
}

ClosedLoopModel assemble_qv_local(std::span<const RationalTF> devices) {
  const auto n = static_cast<Eigen::Index>(devices.size());
  return assemble_qv_loop(devices, VqMatrix{Eigen::MatrixXd::Zero(n, n)});
}

TimeSeries step_response(const ClosedLoopModel& model, int bus, double magnitude, double T, double h) {
  if (bus < 1 || bus > model.n_buses) throw InvalidArgument("step_response: bus out of range");
  if (!std::isfinite(magnitude)) throw InvalidArgument("step_response: magnitude must be finite");
  const std::size_t steps = step_count(T, h);
  const Eigen::VectorXcd ev = model.eigenvalues();
  if (ev.size() > 0) {
    const double fastest = ev.cwiseAbs().maxCoeff();
    if (h * fastest > 0.2)
      throw StepTooCoarse("step_response: h = " + cert::format_number(h) + " exceeds 0.2/|lambda_max| = " +
                          cert::format_number(0.2 / fastest));
  }

  const StateSpace& ss = model.ss;
  const auto col = static_cast<Eigen::Index>(bus - 1);
  const Eigen::VectorXd b = ss.B.col(col) * magnitude;
  const Eigen::VectorXd feed = ss.Dff.col(col) * magnitude;
  const Eigen::Index outs = ss.C.rows();

  TimeSeries ts;
  ts.channel = model.channel;
  ts.n_buses = model.n_buses;
  ts.bus = bus;
  ts.magnitude = magnitude;
  ts.h = h;
  ts.t.resize(steps + 1);
  ts.values.resize(static_cast<Eigen::Index>(steps + 1), outs);
  ts.derivatives.resize(static_cast<Eigen::Index>(steps + 1), outs);
  ts.initial_jump = feed(model.avg_row()) != 0.0;

  rk4(ss.A, b, h, steps, [&](std::size_t k, const Eigen::VectorXd& x) {
    const auto r = static_cast<Eigen::Index>(k);
    ts.t[k] = static_cast<double>(k) * h;
    ts.values.row(r) = (ss.C * x + feed).transpose();
    ts.derivatives.row(r) = (ss.C * (ss.A * x + b)).transpose();
  });
  return ts;
}

std::optional<double> dominant_damping(std::span<const Complex> eigenvalues) {
  std::optional<Complex> dominant;
  for (Complex l : eigenvalues) {
    if (l.imag() <= 1e-9 * std::max(1.0, std::abs(l))) continue;  // one member of each pair
    if (!dominant || l.real() > dominant->real()) dominant = l;
  }
  if (!dominant) return std::nullopt;
  return -dominant->real() / std::abs(*dominant);
}

StepMetrics time_metrics(const TimeSeries& ts, const ClosedLoopModel& model, double scale) {
  StepMetrics m;
  const Eigen::Index avg = ts.n_buses;
  const Eigen::VectorXd y = ts.values.col(avg);
  const Eigen::Index count = y.size();
  if (count == 0) return m;

  m.nadir = scale * y.cwiseAbs().maxCoeff();
  m.rocof = ts.initial_jump ? kInf : scale * ts.derivatives.col(avg).cwiseAbs().maxCoeff();

  const Eigen::Index tail = std::max<Eigen::Index>(1, count / 10);
  const double ss = y.tail(tail).mean();
  m.f_ss = scale * ss;
  m.f_ss_predicted = scale * model.dc_avg_gain[static_cast<std::size_t>(ts.bus - 1)] * ts.magnitude;

  const std::vector<Complex> dyn = model.dynamic_eigenvalues();
  m.unstable_modes = static_cast<int>(
      std::count_if(dyn.begin(), dyn.end(), [](Complex l) { return l.real() >= -kStabTol; }));
  m.damping_ratio = dominant_damping(dyn);

  const double gap = std::abs(m.f_ss - m.f_ss_predicted);
  m.converged = m.unstable_modes == 0 && std::isfinite(m.f_ss_predicted) &&
                gap <= 0.01 * std::abs(m.f_ss_predicted) + 1e-12 * scale;

  const double band = 0.02 * std::abs(ss);
  Eigen::Index last_out = -1;
  for (Eigen::Index k = 0; k < count; ++k)
    if (std::abs(y(k) - ss) > band) last_out = k;
  if (last_out + 1 < count) m.settle_time = ts.t[static_cast<std::size_t>(last_out + 1)];
  return m;
}

std::pair<std::vector<double>, std::vector<double>> siso_step(const RationalTF& tf, double magnitude, double T,
                                                              double h) {
  const std::size_t steps = step_count(T, h);
  const StateSpace ss = to_statespace(tf);
  const Eigen::VectorXd b = ss.B.col(0) * magnitude;
  const double feed = ss.Dff(0, 0) * magnitude;
  std::vector<double> y(steps + 1), dy(steps + 1);
  rk4(ss.A, b, h, steps, [&](std::size_t k, const Eigen::VectorXd& x) {
    y[k] = (ss.C * x)(0) + feed;
    dy[k] = (ss.C * (ss.A * x + b))(0);
  });
  return {std::move(y), std::move(dy)};
}

double average_mode_gap(const TimeSeries& ts, std::span<const RationalTF> devices) {
  const RationalTF agg = average_mode(devices);
  // The aggregate sees the total disturbance with the same leading minus sign.
  const double T = ts.t.back();
  const auto [y, dy] = siso_step(agg, -ts.magnitude, T, ts.h);
  double gap = 0.0;
  for (std::size_t k = 0; k < y.size() && k < ts.t.size(); ++k)
    gap = std::max(gap, std::abs(ts.values(static_cast<Eigen::Index>(k), ts.n_buses) - y[k]));
  return gap;
}

void write_timeseries_csv(std::ostream& os, const TimeSeries& ts, double scale) {
  const bool pf = ts.channel == Channel::Pf;
  const char* unit = pf ? "_hz" : "_pu";
  os << 't' << ',' << (pf ? "f_avg" : "v_avg") << unit;
  for (int i = 1; i <= ts.n_buses; ++i) os << ',' << (pf ? "f_bus_" : "v_bus_") << i << unit;
  os << ',' << (pf ? "rocof_hz_s" : "dvdt_pu_s") << '\n';
  for (std::size_t k = 0; k < ts.t.size(); ++k) {
    const auto r = static_cast<Eigen::Index>(k);
    os << cert::format_number(ts.t[k]) << ',' << cert::format_number(scale * ts.values(r, ts.n_buses));
    for (int i = 0; i < ts.n_buses; ++i) os << ',' << cert::format_number(scale * ts.values(r, i));
    os << ',' << cert::format_number(scale * ts.derivatives(r, ts.n_buses)) << '\n';
  }
}

}  // namespace nggc::sim
