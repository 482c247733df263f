#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nggc/certkit.hpp"

namespace nggc::cert {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

namespace {

nlohmann::json number(double v) {
  if (std::isfinite(v)) return v;
  return format_number(v);
}

nlohmann::json omega_json(const std::optional<double>& w) { return w ? number(*w) : nlohmann::json(nullptr); }

std::string omega_text(const std::optional<double>& w) { return w ? format_number(*w) : ""; }

// CSV field quoting for device labels supplied by users.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

template <class F>
void for_each_result(const ComplianceReport& report, F&& f) {
  for (const DeviceCompliance& d : report.devices) {
    for (const ConditionResult& r : d.pf) f(d, r);
    if (d.qv)
      for (const ConditionResult& r : *d.qv) f(d, r);
  }
}

constexpr int kCol = 11;

std::string short_number(double v) {
  if (!std::isfinite(v)) return format_number(v);
  std::ostringstream os;
  os << std::setprecision(4) << v;
  return os.str();
}

}  // namespace

void write_report_table(std::ostream& os, const ComplianceReport& report) {
  os << "Compliance report (f_base = " << format_number(report.limits.f_base) << " Hz; grid "
     << format_number(report.grid.omega_min) << " .. " << format_number(report.grid.omega_max) << " rad/s, "
     << report.grid.points_per_decade << " points/decade)\n";
  if (!report.toolkit_defaults.empty()) {
    os << "Toolkit defaults in effect:";
    for (const std::string& name : report.toolkit_defaults) os << ' ' << name;
    os << '\n';
  }
  os << '\n';

  std::size_t width = 6;
  for (const DeviceCompliance& d : report.devices) width = std::max({width, d.device.size(), d.qv_device.size()});

  auto header = [&](auto ids) {
    os << std::left << std::setw(static_cast<int>(width) + 2) << "device" << std::setw(5) << "bus";
    for (ConditionId id : ids) os << std::setw(kCol) << label(id);
    os << '\n';
  };
  auto row = [&](const DeviceCompliance& d, const std::vector<ConditionResult>& rs) {
    os << std::left << std::setw(static_cast<int>(width) + 2) << d.name_for(rs.front().id) << std::setw(5) << d.bus;
    // check marks are multi-byte; pad by hand
    for (const ConditionResult& r : rs) os << (r.pass ? "✓" : "×") << std::string(kCol - 1, ' ');
    os << '\n';
    os << std::left << std::setw(static_cast<int>(width) + 7) << "  margin";
    for (const ConditionResult& r : rs) os << std::setw(kCol) << short_number(r.margin);
    os << '\n';
  };

  header(kPfConditions);
  for (const DeviceCompliance& d : report.devices)
    if (!d.pf.empty()) row(d, d.pf);

  const bool any_qv = std::any_of(report.devices.begin(), report.devices.end(),
                                  [](const DeviceCompliance& d) { return d.qv.has_value(); });
  if (any_qv) {
    os << '\n';
    header(kQvConditions);
    for (const DeviceCompliance& d : report.devices)
      if (d.qv) row(d, *d.qv);
  }

  bool notes = false;
  for_each_result(report, [&](const DeviceCompliance& d, const ConditionResult& r) {
    if (r.note.empty()) return;
    if (!notes) os << "\nNotes:\n";
    notes = true;
    os << "  " << d.name_for(r.id) << " (" << label(r.id) << "): " << r.note << '\n';
  });
  os << "\nOverall: " << (report.all_pass() ? "PASS" : "FAIL") << '\n';
}

void write_report_csv(std::ostream& os, const ComplianceReport& report) {
  os << "device,condition,pass,margin,worst_omega\n";
  for_each_result(report, [&](const DeviceCompliance& d, const ConditionResult& r) {
    os << csv_field(d.name_for(r.id)) << ',' << label(r.id) << ',' << (r.pass ? "true" : "false") << ','
       << format_number(r.margin) << ',' << omega_text(r.worst_omega) << '\n';
  });
}

void write_report_json(std::ostream& os, const ComplianceReport& report) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json limits;
  for (const LimitField& f : limit_fields()) limits[std::string(f.name)] = report.limits.*f.member;
  j["limits"] = limits;
  j["grid"] = {{"omega_min", report.grid.omega_min},
               {"omega_max", report.grid.omega_max},
               {"points_per_decade", report.grid.points_per_decade}};
  j["toolkit_defaults"] = report.toolkit_defaults;
  nlohmann::ordered_json records = nlohmann::ordered_json::array();
  for_each_result(report, [&](const DeviceCompliance& d, const ConditionResult& r) {
    nlohmann::ordered_json rec;
    rec["device"] = d.name_for(r.id);
    rec["bus"] = d.bus;
    rec["condition"] = label(r.id);
    rec["pass"] = r.pass;
    rec["margin"] = number(r.margin);
    rec["worst_omega"] = omega_json(r.worst_omega);
    if (!r.note.empty()) rec["note"] = r.note;
    records.push_back(std::move(rec));
  });
  j["records"] = std::move(records);
  j["all_pass"] = report.all_pass();
  os << j.dump(2) << '\n';
}

void write_locus_csv(std::ostream& os, const NyquistLocus& locus) {
  os << "omega,re,im\n";
  for (const LocusPoint& p : locus.points)
    os << format_number(p.omega) << ',' << format_number(p.value.real()) << ',' << format_number(p.value.imag())
       << '\n';
}

void write_envelope_csv(std::ostream& os, const EnvelopeGeometry& env) {
  os << "condition,kind,a,b,c\n";
  for (const Primitive& p : env.primitives) {
    os << label(p.id) << ',';
    if (const auto* h = std::get_if<HalfPlane>(&p.shape)) {
      os << "half_plane," << format_number(h->normal.real()) << ',' << format_number(h->normal.imag()) << ','
         << format_number(h->offset);
    } else if (const auto* w = std::get_if<Wedge>(&p.shape)) {
      os << "wedge," << format_number(w->angle_lo) << ',' << format_number(w->angle_hi) << ',';
    } else {
      const auto& d = std::get<Disc>(p.shape);
      os << "disc," << format_number(d.center.real()) << ',' << format_number(d.center.imag()) << ','
         << format_number(d.radius);
    }
    os << '\n';
  }
}

}  // namespace nggc::cert
