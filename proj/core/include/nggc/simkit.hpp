#pragma once

// Closed-loop interconnection of device laws with the network, the
// average-mode aggregate, fixed-step step responses and the time-domain
// metrics that the performance conditions bound.
//
// Sign convention: a disturbance step enters each device summing junction
// with a minus sign, so a positive (load-increase) step produces a frequency
// dip.  Metrics are reported on magnitudes.

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "nggc/certkit.hpp"
#include "nggc/netmodel.hpp"
#include "nggc/tf_core.hpp"

namespace nggc::sim {

using cert::Channel;

/// (sum_i 1/D_i)^-1.  Devices sharing a denominator after inversion are summed
/// over that common denominator, so n identical devices give D/n.
RationalTF average_mode(std::span<const RationalTF> devices);

/// Interconnected pf or qv subsystem.
///
/// Inputs: one column per bus (the disturbance at that bus).
/// Outputs: rows 0..n-1 are per-bus deviations, row n is their arithmetic mean.
struct ClosedLoopModel {
  Channel channel = Channel::Pf;
  int n_buses = 0;
  StateSpace ss;
  int structural_zero_count = 0;
  /// Steady-state average output per unit step at each bus.
  std::vector<double> dc_avg_gain;

  [[nodiscard]] Eigen::Index avg_row() const { return n_buses; }
  [[nodiscard]] Eigen::VectorXcd eigenvalues() const;
  /// Eigenvalues with the structural_zero_count smallest-magnitude ones removed.
  [[nodiscard]] std::vector<Complex> dynamic_eigenvalues() const;
};

/// States: device realizations followed by n network angle integrators.
ClosedLoopModel assemble_pf_loop(std::span<const RationalTF> devices, const FpLaplacian& L);
/// Static output feedback through M; throws IllPosedLoop when I + M diag(d) is singular.
ClosedLoopModel assemble_qv_loop(std::span<const RationalTF> devices, const VqMatrix& M);
/// The purely local qv approximation (each bus responds to its own disturbance only).
ClosedLoopModel assemble_qv_local(std::span<const RationalTF> devices);

struct TimeSeries {
  Channel channel = Channel::Pf;
  int n_buses = 0;
  int bus = 1;  // 1-based disturbance bus
  double magnitude = 0.0;
  double h = 0.0;
  std::vector<double> t;
  /// samples x outputs (per-bus, then average), p.u.
  Eigen::MatrixXd values;
  /// Exact time derivative of every output, p.u./s.
  Eigen::MatrixXd derivatives;
  /// The average output is discontinuous at t = 0 (device feedthrough).
  bool initial_jump = false;
};

/// Classical RK4 from rest with a step of `magnitude` at `bus` (1-based).
/// Throws StepTooCoarse when h > 0.2 / max|lambda|.
TimeSeries step_response(const ClosedLoopModel& model, int bus, double magnitude, double T, double h);

struct StepMetrics {
  double nadir = 0.0;       // Hz (pf) or p.u. (qv)
  double rocof = 0.0;       // +inf when the response jumps at t = 0
  double f_ss = 0.0;        // signed tail mean
  double f_ss_predicted = 0.0;
  bool converged = true;
  std::optional<double> damping_ratio;
  std::optional<double> settle_time;
  int unstable_modes = 0;
};

/// `scale` converts p.u. to reporting units (f_base for pf, 1 for qv).
StepMetrics time_metrics(const TimeSeries& ts, const ClosedLoopModel& model, double scale);

/// Damping ratio -Re/|lambda| of the slowest-decaying complex pair, if any.
std::optional<double> dominant_damping(std::span<const Complex> eigenvalues);

/// Max |avg output - aggregate prediction| over the series, where the
/// aggregate is the step response of the average-mode law alone.
double average_mode_gap(const TimeSeries& ts, std::span<const RationalTF> devices);

/// Step response of a single-input, average-row-only realization; used for
/// the aggregate and oracle checks.  Returns (values, derivatives).
std::pair<std::vector<double>, std::vector<double>> siso_step(const RationalTF& tf, double magnitude, double T,
                                                              double h);

/// CSV: t, avg, per-bus, derivative of avg.  Scaled by `scale`.
void write_timeseries_csv(std::ostream& os, const TimeSeries& ts, double scale);

}  // namespace nggc::sim
