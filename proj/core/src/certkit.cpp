#include "nggc/certkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace nggc::cert {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = std::numbers::pi;

struct Sample {
  double omega;
  Complex value;
};

// Grid evaluation plus w = 0; jw-axis poles are collected instead of thrown.
struct Sweep {
  std::vector<Sample> samples;
  std::vector<double> axis_poles;
};

Sweep sweep(const RationalTF& tf, const FrequencyGrid& grid) {
  Sweep out;
  std::vector<double> pts = grid.points();
  if (pts.empty() || pts.front() != 0.0) pts.insert(pts.begin(), 0.0);
  out.samples.reserve(pts.size());
  for (double w : pts) {
    try {
      out.samples.push_back({w, eval_response(tf, w)});
    } catch (const PoleOnAxis&) {
      out.axis_poles.push_back(w);
    }
  }
  return out;
}

double magnitude_floor(const RationalTF& tf) { return kAxisTol * std::max(1.0, tf.num().max_abs_coeff()); }

ConditionResult start(ConditionId id) {
  ConditionResult r;
  r.id = id;
  return r;
}

std::string fmt(double v) { return format_number(v); }

std::string axis_note(const Sweep& s) {
  std::ostringstream os;
  os << "jw-axis pole near w = " << fmt(s.axis_poles.front());
  if (s.axis_poles.size() > 1) os << " (" << s.axis_poles.size() << " grid points)";
  return os.str();
}

// Strict inequality: pass above kStrictTol, and a failing margin never reads positive.
void finish_strict(ConditionResult& r) {
  r.pass = r.margin > kStrictTol;
  if (!r.pass) r.margin = std::min(r.margin, 0.0);
}

void finish_closed(ConditionResult& r) { r.pass = r.margin >= 0.0; }

ConditionResult stable_proper(ConditionId id, const RationalTF& tf, const Sweep& s) {
  ConditionResult r = start(id);
  if (!is_strictly_proper(tf)) {
    r.margin = -1.0;
    r.note = "not strictly proper (relative degree " + std::to_string(tf.relative_degree()) + ")";
    return r;
  }
  const Stability st = is_stable(tf);
  r.margin = -st.margin - kStabTol;
  if (!s.axis_poles.empty()) {
    r.margin = std::min(r.margin, 0.0);
    r.note = axis_note(s);
  } else if (!st.stable) {
    r.note = "pole with real part " + fmt(st.margin);
  }
  r.pass = r.margin > 0.0;
  if (!r.pass) r.margin = std::min(r.margin, 0.0);
  return r;
}

// Limit of Re[1/D(jw)] as w -> inf for relative degree 0 or 1; nullopt otherwise.
std::optional<double> inverse_real_at_infinity(const RationalTF& tf) {
  const Polynomial& n = tf.num();
  const Polynomial& d = tf.den();
  if (tf.is_zero()) return std::nullopt;
  const int m = n.degree();
  if (tf.relative_degree() == 0) return d.leading() / n.leading();
  if (tf.relative_degree() == 1) {
    // den/num = s/n_m + (d_m - n_{m-1}/n_m)/n_m + O(1/s)
    const double nm = n.leading();
    const double nm1 = m >= 1 ? n[static_cast<std::size_t>(m - 1)] : 0.0;
    return (d[static_cast<std::size_t>(m)] - nm1 / nm) / nm;
  }
  return std::nullopt;
}

// min over the sweep of Re[1/D] = Re[D]/|D|^2 (plus the analytic tail) minus `shift`.
ConditionResult inverse_real(ConditionId id, const RationalTF& tf, const Sweep& s, double shift, bool strict) {
  ConditionResult r = start(id);
  const double floor = magnitude_floor(tf);
  double best = kInf;
  std::optional<double> at;
  std::size_t skipped = 0;
  for (const Sample& p : s.samples) {
    const double mag = std::abs(p.value);
    if (mag < floor) {
      ++skipped;
      continue;
    }
    const double v = p.value.real() / (mag * mag);
    if (v < best) {
      best = v;
      at = p.omega;
    }
  }
  if (auto tail = inverse_real_at_infinity(tf); tail && *tail < best) {
    best = *tail;
    at = kInf;
  }
  if (!at) {
    r.margin = -kInf;
    r.note = "no evaluable grid point";
    return r;
  }
  r.margin = best - shift;
  r.worst_omega = at;
  if (skipped > 0) r.note = std::to_string(skipped) + " grid point(s) with |D| below axis_tol skipped";
  if (!s.axis_poles.empty()) {
    r.margin = std::min(r.margin, 0.0);
    r.note = axis_note(s);
  }
  if (strict)
    finish_strict(r);
  else
    finish_closed(r);
  if (!s.axis_poles.empty()) r.pass = false;
  return r;
}

ConditionResult positive_real(const RationalTF& tf, const Sweep& s) {
  // Normalized by |D| so the verdict does not hinge on how fast D rolls off.
  ConditionResult r = start(ConditionId::PfPassive);
  const double floor = magnitude_floor(tf);
  double best = kInf;
  std::optional<double> at;
  for (const Sample& p : s.samples) {
    const double mag = std::abs(p.value);
    const double v = mag < floor ? p.value.real() : p.value.real() / mag;
    if (v < best) {
      best = v;
      at = p.omega;
    }
  }
  if (!at) {
    r.margin = -kInf;
    r.note = "no evaluable grid point";
    return r;
  }
  r.margin = best;
  r.worst_omega = at;
  finish_strict(r);
  if (!s.axis_poles.empty()) {
    r.pass = false;
    r.margin = std::min(r.margin, 0.0);
    r.note = axis_note(s);
  }
  return r;
}

double wrap(double a) {
  a = std::remainder(a, 2.0 * kPi);
  return a;
}

ConditionResult phase_wedge(const RationalTF& tf, const Sweep& s) {
  constexpr double lo = -kPi / 2.0;
  constexpr double hi = kPi / 6.0;
  ConditionResult r = start(ConditionId::PfPhaseWedge);
  const double floor = magnitude_floor(tf);
  double best = kInf;
  std::optional<double> at;
  for (const Sample& p : s.samples) {
    if (std::abs(p.value) < floor) continue;
    const double th = std::arg(p.value);
    const double d = (th >= lo && th <= hi) ? std::min(th - lo, hi - th)
                                            : -std::min(std::abs(wrap(th - lo)), std::abs(wrap(th - hi)));
    if (d < best) {
      best = d;
      at = p.omega;
    }
  }
  if (!at) {
    r.margin = 0.0;
    r.pass = true;
    r.note = "locus stays at the origin";
    return r;
  }
  r.margin = best;
  r.worst_omega = at;
  finish_closed(r);
  if (!s.axis_poles.empty()) r.note = axis_note(s);
  return r;
}

ConditionResult roll_off(ConditionId id, const RationalTF& tf, const Sweep& s, double eps, double omega_bw) {
  ConditionResult r = start(id);
  double peak = -kInf;
  std::optional<double> at;
  for (const Sample& p : s.samples) {
    if (p.omega < omega_bw) continue;
    const double mag = std::abs(p.value);
    if (mag > peak) {
      peak = mag;
      at = p.omega;
    }
  }
  // The band edge itself is rarely a grid point; sample it exactly.
  try {
    const double edge = std::abs(eval_response(tf, omega_bw));
    if (edge > peak) {
      peak = edge;
      at = omega_bw;
    }
  } catch (const PoleOnAxis&) {
    peak = kInf;
    at = omega_bw;
  }
  const double tail = hf_gain(tf);
  if (tail > peak) {
    peak = tail;
    at = kInf;
  }
  if (!s.axis_poles.empty() &&
      std::any_of(s.axis_poles.begin(), s.axis_poles.end(), [&](double w) { return w >= omega_bw; })) {
    peak = kInf;
    r.note = axis_note(s);
  }
  r.margin = eps - peak;
  r.worst_omega = at;
  finish_closed(r);
  return r;
}

ConditionResult peak_gain(ConditionId id, const RationalTF& tf, const FrequencyGrid& grid, double bound) {
  ConditionResult r = start(id);
  try {
    const HinfResult h = hinf_norm(tf, grid);
    r.margin = bound - h.norm;
    r.worst_omega = h.omega;
  } catch (const UnstableSystem& e) {
    r.margin = -kInf;
    r.note = "unbounded peak gain: " + std::string(e.what());
  }
  finish_closed(r);
  return r;
}

ConditionResult dc_bound(ConditionId id, const RationalTF& tf, double bound) {
  ConditionResult r = start(id);
  r.worst_omega = 0.0;
  try {
    r.margin = bound - std::abs(dc_gain(tf));
  } catch (const Indeterminate& e) {
    r.margin = -kInf;
    r.note = e.what();
  }
  if (std::isinf(r.margin)) r.note = r.note.empty() ? "integrator: unbounded dc gain" : r.note;
  finish_closed(r);
  return r;
}

ConditionResult rocof(const RationalTF& tf, double bound) {
  ConditionResult r = start(ConditionId::PfRocof);
  const double lim = hf_derivative_limit(tf);
  r.margin = bound - lim;
  r.worst_omega = kInf;
  if (std::isinf(lim)) r.note = "feedthrough: initial RoCoF unbounded";
  finish_closed(r);
  return r;
}

}  // namespace

void CertLimits::validate() const {
  for (const LimitField& f : limit_fields()) {
    const double v = this->*f.member;
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument("limits: " + std::string(f.name) + " must be positive");
  }
}

std::span<const LimitField> limit_fields() {
  static const std::array<LimitField, 15> fields{{
      {"df_max", &CertLimits::df_max, false},
      {"df_ss_max", &CertLimits::df_ss_max, false},
      {"rocof_max", &CertLimits::rocof_max, false},
      {"dp_step", &CertLimits::dp_step, true},
      {"eps_f", &CertLimits::eps_f, true},
      {"omega_bw", &CertLimits::omega_bw, true},
      {"rho_f", &CertLimits::rho_f, true},
      {"dv_max", &CertLimits::dv_max, true},
      {"dv_ss_max", &CertLimits::dv_ss_max, true},
      {"dq_step", &CertLimits::dq_step, true},
      {"eps_v", &CertLimits::eps_v, true},
      {"rho_v", &CertLimits::rho_v, true},
      {"nadir_factor", &CertLimits::nadir_factor, false},
      {"zeta_min", &CertLimits::zeta_min, true},
      {"f_base", &CertLimits::f_base, false},
  }};
  return fields;
}

std::string_view label(ConditionId id) {
  switch (id) {
    case ConditionId::PfStableProper: return "1-i";
    case ConditionId::PfPassive: return "1-ii";
    case ConditionId::PfPhaseWedge: return "1-iii";
    case ConditionId::PfRollOff: return "1-iv";
    case ConditionId::PfPeakGain: return "1-v";
    case ConditionId::PfDcGain: return "1-vi";
    case ConditionId::PfRocof: return "1-vii";
    case ConditionId::PfDamping: return "1-viii";
    case ConditionId::QvStableProper: return "2-i";
    case ConditionId::QvShiftedPassive: return "2-ii";
    case ConditionId::QvRollOff: return "2-iii";
    case ConditionId::QvPeakGain: return "2-iv";
    case ConditionId::QvDcGain: return "2-v";
    case ConditionId::QvDamping: return "2-vi";
  }
  return "?";
}

std::vector<std::string_view> limits_used(ConditionId id) {
  switch (id) {
    case ConditionId::PfRollOff: return {"eps_f", "omega_bw"};
    case ConditionId::PfPeakGain: return {"df_max", "nadir_factor", "dp_step", "f_base"};
    case ConditionId::PfDcGain: return {"df_ss_max", "dp_step", "f_base"};
    case ConditionId::PfRocof: return {"rocof_max", "dp_step", "f_base"};
    case ConditionId::PfDamping: return {"rho_f"};
    case ConditionId::QvRollOff: return {"eps_v", "omega_bw"};
    case ConditionId::QvPeakGain: return {"dv_max", "nadir_factor", "dq_step"};
    case ConditionId::QvDcGain: return {"dv_ss_max", "dq_step"};
    case ConditionId::QvDamping: return {"rho_v"};
    default: return {};
  }
}

std::vector<ConditionResult> certify_pf(const RationalTF& tf, const CertLimits& limits, const FrequencyGrid& grid) {
  limits.validate();
  grid.validate();
  const Sweep s = sweep(tf, grid);
  std::vector<ConditionResult> out;
  out.reserve(kPfConditions.size());
  out.push_back(stable_proper(ConditionId::PfStableProper, tf, s));
  out.push_back(positive_real(tf, s));
  out.push_back(phase_wedge(tf, s));
  out.push_back(roll_off(ConditionId::PfRollOff, tf, s, limits.eps_f, limits.omega_bw));
  out.push_back(peak_gain(ConditionId::PfPeakGain, tf, grid, limits.hinf_bound_pf()));
  out.push_back(dc_bound(ConditionId::PfDcGain, tf, limits.dc_bound_pf()));
  out.push_back(rocof(tf, limits.hf_bound_pf()));
  out.push_back(inverse_real(ConditionId::PfDamping, tf, s, limits.rho_f, false));
  return out;
}

std::vector<ConditionResult> certify_qv(const RationalTF& tf, double c_i, const CertLimits& limits,
                                        const FrequencyGrid& grid) {
  limits.validate();
  grid.validate();
  if (!std::isfinite(c_i) || c_i < 0.0) throw InvalidArgument("certify_qv: c_i must be finite and non-negative");
  const Sweep s = sweep(tf, grid);
  std::vector<ConditionResult> out;
  out.reserve(kQvConditions.size());
  out.push_back(stable_proper(ConditionId::QvStableProper, tf, s));
  out.push_back(inverse_real(ConditionId::QvShiftedPassive, tf, s, c_i, true));
  out.push_back(roll_off(ConditionId::QvRollOff, tf, s, limits.eps_v, limits.omega_bw));
  out.push_back(peak_gain(ConditionId::QvPeakGain, tf, grid, limits.hinf_bound_qv()));
  out.push_back(dc_bound(ConditionId::QvDcGain, tf, limits.dc_bound_qv()));
  out.push_back(inverse_real(ConditionId::QvDamping, tf, s, limits.rho_v, false));
  return out;
}

bool DeviceCompliance::all_pass() const {
  auto ok = [](const std::vector<ConditionResult>& v) {
    return std::all_of(v.begin(), v.end(), [](const ConditionResult& r) { return r.pass; });
  };
  return ok(pf) && (!qv || ok(*qv));
}

const std::string& DeviceCompliance::name_for(ConditionId id) const {
  const bool is_qv = std::find(kQvConditions.begin(), kQvConditions.end(), id) != kQvConditions.end();
  return is_qv && !qv_device.empty() ? qv_device : device;
}

bool ComplianceReport::all_pass() const {
  return std::all_of(devices.begin(), devices.end(), [](const DeviceCompliance& d) { return d.all_pass(); });
}

void apply_strict(ComplianceReport& report) {
  auto demote = [&](ConditionResult& r) {
    if (!r.pass) return;
    for (std::string_view used : limits_used(r.id)) {
      if (std::find(report.toolkit_defaults.begin(), report.toolkit_defaults.end(), used) !=
          report.toolkit_defaults.end()) {
        r.pass = false;
        r.margin = std::min(r.margin, 0.0);
        r.note = "strict: depends on toolkit default " + std::string(used);
        return;
      }
    }
  };
  for (DeviceCompliance& d : report.devices) {
    for (ConditionResult& r : d.pf) demote(r);
    if (d.qv)
      for (ConditionResult& r : *d.qv) demote(r);
  }
}

NyquistLocus nyquist_locus(const RationalTF& tf, const FrequencyGrid& grid) {
  grid.validate();
  NyquistLocus locus;
  std::vector<double> pts = grid.points();
  if ((pts.empty() || pts.front() != 0.0) && tf.den().eval(0.0) != 0.0) pts.insert(pts.begin(), 0.0);
  locus.points.reserve(pts.size());
  for (double w : pts) {
    try {
      locus.points.push_back({w, eval_response(tf, w)});
    } catch (const PoleOnAxis&) {
      locus.omitted.push_back(w);
    }
  }
  return locus;
}

namespace {

// Closed disc through the origin {Re[1/z] >= rho}; rho = 0 degenerates to Re z >= 0.
Primitive index_disc(ConditionId id, double rho) {
  if (rho <= 0.0) return {id, HalfPlane{{1.0, 0.0}, 0.0}};
  const double r = 1.0 / (2.0 * rho);
  return {id, Disc{{r, 0.0}, r}};
}

}  // namespace

EnvelopeGeometry envelope_geometry(const CertLimits& limits, Channel channel, std::optional<double> c_i) {
  EnvelopeGeometry g;
  g.channel = channel;
  if (channel == Channel::Pf) {
    g.primitives = {
        {ConditionId::PfPassive, HalfPlane{{1.0, 0.0}, 0.0}},
        {ConditionId::PfPhaseWedge, Wedge{-kPi / 2.0, kPi / 6.0}},
        {ConditionId::PfRollOff, Disc{{0.0, 0.0}, limits.eps_f}},
        {ConditionId::PfPeakGain, Disc{{0.0, 0.0}, limits.hinf_bound_pf()}},
        {ConditionId::PfDcGain, Disc{{0.0, 0.0}, limits.dc_bound_pf()}},
        index_disc(ConditionId::PfDamping, limits.rho_f),
    };
    return g;
  }
  if (!c_i) throw MissingShift("envelope_geometry: qv channel requires the bus loop-shift c_i");
  g.primitives = {
      index_disc(ConditionId::QvShiftedPassive, *c_i),
      {ConditionId::QvRollOff, Disc{{0.0, 0.0}, limits.eps_v}},
      {ConditionId::QvPeakGain, Disc{{0.0, 0.0}, limits.hinf_bound_qv()}},
      {ConditionId::QvDcGain, Disc{{0.0, 0.0}, limits.dc_bound_qv()}},
      index_disc(ConditionId::QvDamping, limits.rho_v),
  };
  return g;
}

bool contains(const Primitive& p, Complex z, double tol) {
  struct Visitor {
    Complex z;
    double tol;
    bool operator()(const HalfPlane& h) const { return (std::conj(h.normal) * z).real() >= h.offset - tol; }
    bool operator()(const Wedge& w) const {
      if (std::abs(z) <= tol) return true;
      const double th = std::arg(z);
      return th >= w.angle_lo - tol && th <= w.angle_hi + tol;
    }
    bool operator()(const Disc& d) const { return std::abs(z - d.center) <= d.radius + tol; }
  };
  return std::visit(Visitor{z, tol}, p.shape);
}

}  // namespace nggc::cert
