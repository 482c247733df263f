#pragma once

// Decentralized frequency-domain certificates for grid-forming devices.
//
// Eight conditions constrain the pf law D^pf(jw) (stability: 1-i, 1-ii;
// performance: 1-iii .. 1-viii) and six constrain the qv law D^qv(jw)
// (2-i .. 2-vi).  Every condition is evaluated on a log grid plus the
// analytic w = 0 and w -> inf limits where it refers to them, and reports a
// signed margin (positive = satisfied) so grid-refinement studies are
// reproducible.

#include <array>
#include <iosfwd>
#include <numbers>
#include <span>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nggc/tf_core.hpp"

namespace nggc::cert {

/// Strict inequalities pass only with margin above this.
inline constexpr double kStrictTol = 1e-9;

/// Grid-code limits.  Frequency quantities are in Hz and converted with
/// f_base; voltage and reactive-power quantities are per unit.
struct CertLimits {
  double df_max = 0.8;      // Hz, nadir
  double df_ss_max = 0.2;   // Hz, steady-state deviation
  double rocof_max = 2.0;   // Hz/s
  double dp_step = 0.05;    // p.u., worst-case active-power step per device
  double eps_f = 0.01;      // p.u. roll-off magnitude beyond omega_bw
  double omega_bw = 2.0 * std::numbers::pi * 5.0;  // rad/s
  double rho_f = 1.0;       // output feedback passivity index, pf
  double dv_max = 0.1;      // p.u.
  double dv_ss_max = 0.05;  // p.u.
  double dq_step = 0.1;     // p.u.
  double eps_v = 0.01;      // p.u.
  double rho_v = 1.0;       // output feedback passivity index, qv
  double nadir_factor = 2.5;
  double zeta_min = 0.05;   // damping verdict for simulated responses
  double f_base = 50.0;     // Hz

  void validate() const;

  /// Bounds after unit conversion, in p.u. of the device transfer function.
  [[nodiscard]] double hinf_bound_pf() const { return df_max / (nadir_factor * dp_step * f_base); }
  [[nodiscard]] double dc_bound_pf() const { return df_ss_max / (dp_step * f_base); }
  [[nodiscard]] double hf_bound_pf() const { return rocof_max / (dp_step * f_base); }
  [[nodiscard]] double hinf_bound_qv() const { return dv_max / (nadir_factor * dq_step); }
  [[nodiscard]] double dc_bound_qv() const { return dv_ss_max / dq_step; }
};

/// Name/member table for every limit; `toolkit_default` marks values that are
/// this toolkit's choice rather than a published grid-code figure.
struct LimitField {
  std::string_view name;
  double CertLimits::*member;
  bool toolkit_default;
};
std::span<const LimitField> limit_fields();

enum class ConditionId {
  PfStableProper,   // 1-i
  PfPassive,        // 1-ii
  PfPhaseWedge,     // 1-iii
  PfRollOff,        // 1-iv
  PfPeakGain,       // 1-v
  PfDcGain,         // 1-vi
  PfRocof,          // 1-vii
  PfDamping,        // 1-viii
  QvStableProper,   // 2-i
  QvShiftedPassive, // 2-ii
  QvRollOff,        // 2-iii
  QvPeakGain,       // 2-iv
  QvDcGain,         // 2-v
  QvDamping,        // 2-vi
};

inline constexpr std::array kPfConditions{
    ConditionId::PfStableProper, ConditionId::PfPassive, ConditionId::PfPhaseWedge, ConditionId::PfRollOff,
    ConditionId::PfPeakGain,     ConditionId::PfDcGain,  ConditionId::PfRocof,      ConditionId::PfDamping};
inline constexpr std::array kQvConditions{ConditionId::QvStableProper, ConditionId::QvShiftedPassive,
                                          ConditionId::QvRollOff,      ConditionId::QvPeakGain,
                                          ConditionId::QvDcGain,       ConditionId::QvDamping};

/// "1-i" ... "2-vi".
std::string_view label(ConditionId id);
/// Names of the CertLimits fields a condition's verdict depends on.
std::vector<std::string_view> limits_used(ConditionId id);

struct ConditionResult {
  ConditionId id{};
  bool pass = false;
  double margin = 0.0;
  std::optional<double> worst_omega;
  std::string note;
};

/// Eight results, ordered 1-i .. 1-viii.
std::vector<ConditionResult> certify_pf(const RationalTF& tf, const CertLimits& limits, const FrequencyGrid& grid);

/// Six results, ordered 2-i .. 2-vi.  c_i is the loop-shift of the device bus.
std::vector<ConditionResult> certify_qv(const RationalTF& tf, double c_i, const CertLimits& limits,
                                        const FrequencyGrid& grid);

struct DeviceCompliance {
  std::string device;     // pf device, or the qv device when the bus has no pf device
  std::string qv_device;  // qv device name; empty when the bus has none
  int bus = 0;
  std::vector<ConditionResult> pf;
  std::optional<std::vector<ConditionResult>> qv;

  [[nodiscard]] bool all_pass() const;
  /// Name of the device a given condition was evaluated on.
  [[nodiscard]] const std::string& name_for(ConditionId id) const;
};

struct ComplianceReport {
  CertLimits limits;
  FrequencyGrid grid;
  std::vector<DeviceCompliance> devices;
  /// Names of limits that were filled from toolkit defaults.
  std::vector<std::string> toolkit_defaults;

  [[nodiscard]] bool all_pass() const;
};

/// Demotes every passing verdict that depends on a toolkit-default limit.
void apply_strict(ComplianceReport& report);

// ------------------------------------------------------------------ Nyquist

struct LocusPoint {
  double omega = 0.0;
  Complex value;
};

struct NyquistLocus {
  std::vector<LocusPoint> points;
  /// Grid frequencies skipped because of a jw-axis pole.
  std::vector<double> omitted;
};

/// Ascending locus over the grid; w = 0 is prepended when den(0) != 0.
NyquistLocus nyquist_locus(const RationalTF& tf, const FrequencyGrid& grid);

// ------------------------------------------------------------------ envelope

enum class Channel { Pf, Qv };

/// {z : Re(conj(normal) z) > offset}
struct HalfPlane {
  Complex normal{1.0, 0.0};
  double offset = 0.0;
};

/// Phase sector lo <= arg z <= hi (radians), apex at the origin.
struct Wedge {
  double angle_lo = 0.0;
  double angle_hi = 0.0;
};

struct Disc {
  Complex center;
  double radius = 0.0;
};

struct Primitive {
  ConditionId id{};
  std::variant<HalfPlane, Wedge, Disc> shape;
};

struct EnvelopeGeometry {
  Channel channel = Channel::Pf;
  std::vector<Primitive> primitives;
};

/// Regions the Nyquist locus must stay inside.  Throws MissingShift for the qv
/// channel without c_i.
EnvelopeGeometry envelope_geometry(const CertLimits& limits, Channel channel, std::optional<double> c_i = {});

/// True when z lies in the primitive's closed region.
bool contains(const Primitive& p, Complex z, double tol = 0.0);

// ------------------------------------------------------------------ export

/// Human-readable compliance table (check marks plus margins).
void write_report_table(std::ostream& os, const ComplianceReport& report);
/// One record per (device, condition): device,condition,pass,margin,worst_omega.
void write_report_csv(std::ostream& os, const ComplianceReport& report);
void write_report_json(std::ostream& os, const ComplianceReport& report);
/// omega,re,im
void write_locus_csv(std::ostream& os, const NyquistLocus& locus);
/// condition,kind,a,b,c : half_plane(normal_re,normal_im,offset), wedge(lo,hi,-), disc(center_re,center_im,radius)
void write_envelope_csv(std::ostream& os, const EnvelopeGeometry& env);

/// Shortest round-trip decimal form; "inf", "-inf", "nan" for non-finite values.
std::string format_number(double v);

}  // namespace nggc::cert
