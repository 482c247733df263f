#include "nggc/runner.hpp"

#include <charconv>
#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nggc/certkit.hpp"
#include "nggc/netmodel.hpp"
#include "nggc/scenario.hpp"
#include "nggc/simkit.hpp"

namespace nggc {

namespace {

using ojson = nlohmann::ordered_json;
using cert::format_number;

constexpr std::string_view kToolVersion = "0.3.0";

// Collects artifacts in memory order and hashes exactly the bytes written.
class Writer {
 public:
  explicit Writer(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

  void put(const std::string& rel, const std::string& content) {
    const std::filesystem::path p = dir_ / rel;
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + p.string());
    out << content;
    out.close();
    if (!out) throw Error("write failed for " + p.string());
    files_.push_back({rel, sha256_hex(content), content.size()});
  }

  [[nodiscard]] const std::vector<OutputFile>& files() const { return files_; }
  [[nodiscard]] const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::vector<OutputFile> files_;
};

std::string slug(std::size_t index, const std::string& name) {
  std::string s = std::to_string(index + 1) + "_";
  for (char c : name) {
    const auto u = static_cast<unsigned char>(c);
    s += std::isalnum(u) ? static_cast<char>(std::tolower(u)) : '_';
  }
  return s;
}

std::string_view format_ext(OutputFormat f) { return f == OutputFormat::Json ? "json" : "csv"; }

// Five significant digits for console lines; files keep full precision.
std::string brief(double v) {
  if (!std::isfinite(v)) return format_number(v);
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 5);
  return {buf, res.ptr};
}

ojson json_number(double v) { return std::isfinite(v) ? ojson(v) : ojson(format_number(v)); }

template <class T>
ojson json_optional(const std::optional<T>& v) {
  return v ? json_number(*v) : ojson(nullptr);
}

struct Context {
  Scenario scenario;
  ojson notices = ojson::array();
};

Context prepare(const RunOptions& opts) {
  Context ctx{load_scenario(opts.scenario)};
  if (opts.grid_ppd) {
    if (*opts.grid_ppd < 1) throw SchemaError("--grid-ppd: must be a positive integer");
    ctx.scenario.grid.points_per_decade = *opts.grid_ppd;
    ctx.scenario.effective["grid"]["points_per_decade"] = *opts.grid_ppd;
  }
  for (const std::string& w : ctx.scenario.warnings) ctx.notices.push_back(w);
  return ctx;
}

void write_manifest(Writer& w, std::string_view command, const RunOptions& opts, const Context& ctx, int exit_code,
                    RunOutput& out) {
  ojson m;
  m["tool"] = "nggc";
  m["version"] = kToolVersion;
  m["command"] = command;
  std::ifstream in(opts.scenario, std::ios::binary);
  const std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  m["scenario"] = {{"file", opts.scenario.filename().string()}, {"sha256", sha256_hex(raw)}};
  m["options"] = {{"grid_ppd", opts.grid_ppd ? ojson(*opts.grid_ppd) : ojson(nullptr)},
                  {"strict", opts.strict},
                  {"format", format_ext(opts.format)}};
  m["effective_scenario"] = ctx.scenario.effective;
  m["toolkit_defaults"] = ctx.scenario.toolkit_defaults;
  m["notices"] = ctx.notices;
  m["exit_code"] = exit_code;
  ojson files = ojson::array();
  for (const OutputFile& f : w.files()) files.push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  m["files"] = std::move(files);

  const std::filesystem::path p = w.dir() / "manifest.json";
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  os << m.dump(2) << '\n';
  if (!os) throw Error("cannot write " + p.string());
  out.files = w.files();
  out.manifest = p;
}

template <class Body>
RunOutput guarded(std::string_view command, const RunOptions& opts, std::ostream& err, Body&& body) {
  RunOutput out;
  try {
    Context ctx = prepare(opts);
    Writer w(opts.out);
    const int code = body(ctx, w);
    write_manifest(w, command, opts, ctx, code, out);
    out.exit_code = code;
  } catch (const std::exception& e) {
    err << "nggc " << command << ": error: " << e.what() << '\n';
    out.exit_code = kExitError;
  }
  return out;
}

// ------------------------------------------------------------------ certify

cert::ComplianceReport certify(const Context& ctx, bool strict, std::ostream& log, ojson& notices) {
  const Scenario& s = ctx.scenario;
  std::set<int> buses;
  for (const Experiment& e : s.experiments)
    if (e.type == Experiment::Type::Certify) buses.insert(e.bus ? *e.bus : 0);
  const bool all = buses.empty() || buses.count(0) > 0;

  const GammaShift gamma = compute_gamma(s.network);
  cert::ComplianceReport report;
  report.limits = s.limits;
  report.grid = s.grid;
  report.toolkit_defaults = s.toolkit_defaults;

  for (int bus = 1; bus <= s.network.n; ++bus) {
    if (!all && !buses.count(bus)) continue;
    const DeviceEntry* pf = s.device_at(bus, cert::Channel::Pf);
    const DeviceEntry* qv = s.device_at(bus, cert::Channel::Qv);
    if (!pf && !qv) continue;
    cert::DeviceCompliance dc;
    dc.bus = bus;
    dc.device = pf ? pf->name : qv->name;
    if (qv) dc.qv_device = qv->name;
    if (pf) dc.pf = cert::certify_pf(pf->tf, s.limits, s.grid);
    if (qv) {
      dc.qv = cert::certify_qv(qv->tf, gamma.c[static_cast<std::size_t>(bus - 1)], s.limits, s.grid);
    } else {
      const std::string msg = "bus " + std::to_string(bus) + ": no qv device, qv conditions skipped";
      log << msg << '\n';
      notices.push_back(msg);
    }
    report.devices.push_back(std::move(dc));
  }
  // The qv certificate (2-ii) rests on the shifted network being passive.
  const bool any_qv = std::any_of(report.devices.begin(), report.devices.end(),
                                  [](const cert::DeviceCompliance& d) { return d.qv.has_value(); });
  if (any_qv) {
    const PassivityReport pr = verify_shifted_passivity(s.network, s.grid);
    if (!pr.passive()) {
      const std::string msg = "shifted network not passive (min eigenvalue " + brief(pr.min_eigenvalue) +
                              "): qv stability certificate not established";
      log << msg << '\n';
      notices.push_back(msg);
      for (cert::DeviceCompliance& d : report.devices) {
        if (!d.qv) continue;
        cert::ConditionResult& r = (*d.qv)[1];
        r.pass = false;
        r.margin = std::min(r.margin, 0.0);
        r.note = "not established: shifted network not passive";
      }
    }
  }
  if (strict) cert::apply_strict(report);
  return report;
}

// ------------------------------------------------------------------ simulate

struct Verdict {
  std::optional<bool> nadir, steady, rocof, damping;
  [[nodiscard]] bool pass() const {
    for (const auto& v : {nadir, steady, rocof, damping})
      if (v && !*v) return false;
    return true;
  }
};

struct StepRecord {
  std::size_t index = 0;
  Experiment exp;
  sim::StepMetrics metrics;
  double avg_gap = 0.0;
  Verdict verdict;
  std::string damping_note;
};

std::vector<RationalTF> fleet(const Scenario& s, cert::Channel ch) {
  std::vector<RationalTF> tfs;
  for (int bus = 1; bus <= s.network.n; ++bus) {
    const DeviceEntry* d = s.device_at(bus, ch);
    if (!d)
      throw SchemaError("devices: bus " + std::to_string(bus) + " has no " + std::string(channel_name(ch)) +
                        " device, required for simulation");
    tfs.push_back(d->tf);
  }
  return tfs;
}

StepRecord simulate_one(const Scenario& s, std::size_t index, const Experiment& e, bool strict, Writer& w) {
  StepRecord rec;
  rec.index = index;
  rec.exp = e;
  const bool pf = e.channel == cert::Channel::Pf;
  const double scale = pf ? s.limits.f_base : 1.0;
  const std::vector<RationalTF> tfs = fleet(s, e.channel);
  const sim::ClosedLoopModel model = pf ? sim::assemble_pf_loop(tfs, build_fp_laplacian(s.network))
                                        : sim::assemble_qv_loop(tfs, build_vq_matrix(s.network));
  const sim::TimeSeries ts = sim::step_response(model, *e.bus, e.magnitude, e.T, e.h);
  rec.metrics = sim::time_metrics(ts, model, scale);

  std::ostringstream csv;
  sim::write_timeseries_csv(csv, ts, scale);
  const std::string stem = "timeseries_" + std::to_string(index + 1);
  w.put(stem + ".csv", csv.str());

  if (pf) {
    rec.avg_gap = scale * sim::average_mode_gap(ts, tfs);
  } else {
    // side-by-side purely local response
    const sim::ClosedLoopModel local = sim::assemble_qv_local(tfs);
    const sim::TimeSeries lts = sim::step_response(local, *e.bus, e.magnitude, e.T, e.h);
    std::ostringstream lcsv;
    sim::write_timeseries_csv(lcsv, lts, scale);
    w.put(stem + "_local.csv", lcsv.str());
    double gap = 0.0;
    for (Eigen::Index k = 0; k < ts.values.rows(); ++k)
      gap = std::max(gap, (ts.values.row(k) - lts.values.row(k)).cwiseAbs().maxCoeff());
    rec.avg_gap = gap;
  }

  const sim::StepMetrics& m = rec.metrics;
  const double tol = 1e-12;
  if (pf) {
    rec.verdict.nadir = m.nadir <= s.limits.df_max + tol;
    rec.verdict.steady = std::abs(m.f_ss) <= s.limits.df_ss_max + tol;
    rec.verdict.rocof = m.rocof <= s.limits.rocof_max + tol;
  } else {
    rec.verdict.nadir = m.nadir <= s.limits.dv_max + tol;
    rec.verdict.steady = std::abs(m.f_ss) <= s.limits.dv_ss_max + tol;
  }
  const bool zeta_default = std::find(s.toolkit_defaults.begin(), s.toolkit_defaults.end(), "zeta_min") !=
                            s.toolkit_defaults.end();
  rec.verdict.damping = m.unstable_modes == 0 && (!m.damping_ratio || *m.damping_ratio >= s.limits.zeta_min);
  if (m.unstable_modes > 0) rec.damping_note = std::to_string(m.unstable_modes) + " unstable mode(s)";
  if (strict && zeta_default && *rec.verdict.damping) {
    rec.verdict.damping = false;
    rec.damping_note = "strict: depends on toolkit default zeta_min";
  }
  return rec;
}

std::string yes_no(const std::optional<bool>& v) { return v ? (*v ? "true" : "false") : ""; }

std::string opt_text(const std::optional<double>& v) { return v ? format_number(*v) : ""; }


void write_metrics(Writer& w, OutputFormat fmt, const std::vector<StepRecord>& recs) {
  if (fmt == OutputFormat::Csv) {
    std::ostringstream os;
    os << "experiment,channel,bus,magnitude,nadir,rocof,f_ss,f_ss_predicted,converged,damping_ratio,settle_time,"
          "unstable_modes,avg_mode_gap,nadir_ok,f_ss_ok,rocof_ok,damping_ok,pass\n";
    for (const StepRecord& r : recs) {
      const sim::StepMetrics& m = r.metrics;
      os << r.index + 1 << ',' << channel_name(r.exp.channel) << ',' << *r.exp.bus << ','
         << format_number(r.exp.magnitude) << ',' << format_number(m.nadir) << ',' << format_number(m.rocof) << ','
         << format_number(m.f_ss) << ',' << format_number(m.f_ss_predicted) << ','
         << (m.converged ? "true" : "false") << ',' << opt_text(m.damping_ratio) << ',' << opt_text(m.settle_time)
         << ',' << m.unstable_modes << ',' << format_number(r.avg_gap) << ',' << yes_no(r.verdict.nadir) << ','
         << yes_no(r.verdict.steady) << ',' << yes_no(r.verdict.rocof) << ',' << yes_no(r.verdict.damping) << ','
         << (r.verdict.pass() ? "true" : "false") << '\n';
    }
    w.put("metrics.csv", os.str());
    return;
  }
  ojson arr = ojson::array();
  for (const StepRecord& r : recs) {
    const sim::StepMetrics& m = r.metrics;
    ojson j;
    j["experiment"] = r.index + 1;
    j["channel"] = channel_name(r.exp.channel);
    j["bus"] = *r.exp.bus;
    j["magnitude"] = r.exp.magnitude;
    j["nadir"] = json_number(m.nadir);
    j["rocof"] = json_number(m.rocof);
    j["f_ss"] = json_number(m.f_ss);
    j["f_ss_predicted"] = json_number(m.f_ss_predicted);
    j["converged"] = m.converged;
    j["damping_ratio"] = json_optional(m.damping_ratio);
    j["settle_time"] = json_optional(m.settle_time);
    j["unstable_modes"] = m.unstable_modes;
    j["avg_mode_gap"] = json_number(r.avg_gap);
    ojson v;
    auto put = [&](const char* k, const std::optional<bool>& b) { v[k] = b ? ojson(*b) : ojson(nullptr); };
    put("nadir", r.verdict.nadir);
    put("f_ss", r.verdict.steady);
    put("rocof", r.verdict.rocof);
    put("damping", r.verdict.damping);
    j["verdicts"] = std::move(v);
    if (!r.damping_note.empty()) j["note"] = r.damping_note;
    j["pass"] = r.verdict.pass();
    arr.push_back(std::move(j));
  }
  w.put("metrics.json", arr.dump(2) + "\n");
}

// ------------------------------------------------------------------ export

void export_device(Writer& w, OutputFormat fmt, const Scenario& s, std::size_t index, const DeviceEntry& d,
                   ExportWhat what, const GammaShift& gamma) {
  const std::string stem = slug(index, d.name) + "_" + std::string(channel_name(d.channel));
  const bool json = fmt == OutputFormat::Json;
  if (what != ExportWhat::Envelope) {
    const cert::NyquistLocus locus = cert::nyquist_locus(d.tf, s.grid);
    std::ostringstream os;
    if (json) {
      ojson j;
      j["device"] = d.name;
      j["channel"] = channel_name(d.channel);
      ojson pts = ojson::array();
      for (const cert::LocusPoint& p : locus.points) pts.push_back({p.omega, p.value.real(), p.value.imag()});
      j["columns"] = {"omega", "re", "im"};
      j["points"] = std::move(pts);
      j["omitted"] = locus.omitted;
      os << j.dump(2) << '\n';
    } else {
      cert::write_locus_csv(os, locus);
    }
    w.put("nyquist_" + stem + "." + std::string(format_ext(fmt)), os.str());
  }
  if (what != ExportWhat::Nyquist) {
    const std::optional<double> c =
        d.channel == cert::Channel::Qv ? std::optional(gamma.c[static_cast<std::size_t>(d.bus - 1)]) : std::nullopt;
    const cert::EnvelopeGeometry env = cert::envelope_geometry(s.limits, d.channel, c);
    std::ostringstream os;
    if (json) {
      ojson prims = ojson::array();
      for (const cert::Primitive& p : env.primitives) {
        ojson j;
        j["condition"] = cert::label(p.id);
        if (const auto* h = std::get_if<cert::HalfPlane>(&p.shape)) {
          j["kind"] = "half_plane";
          j["normal"] = {h->normal.real(), h->normal.imag()};
          j["offset"] = h->offset;
        } else if (const auto* wd = std::get_if<cert::Wedge>(&p.shape)) {
          j["kind"] = "wedge";
          j["angle_lo"] = wd->angle_lo;
          j["angle_hi"] = wd->angle_hi;
        } else {
          const auto& dc = std::get<cert::Disc>(p.shape);
          j["kind"] = "disc";
          j["center"] = {dc.center.real(), dc.center.imag()};
          j["radius"] = dc.radius;
        }
        prims.push_back(std::move(j));
      }
      os << ojson{{"device", d.name}, {"channel", channel_name(d.channel)}, {"primitives", prims}}.dump(2) << '\n';
    } else {
      cert::write_envelope_csv(os, env);
    }
    w.put("envelope_" + stem + "." + std::string(format_ext(fmt)), os.str());
  }
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
    throw Error("SHA-256 computation failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int k = 0; k < len; ++k) {
    out += hex[digest[k] >> 4];
    out += hex[digest[k] & 0xF];
  }
  return out;
}

RunOutput run_certify(const RunOptions& opts, std::ostream& log, std::ostream& err) {
  return guarded("certify", opts, err, [&](Context& ctx, Writer& w) {
    const cert::ComplianceReport report = certify(ctx, opts.strict, log, ctx.notices);
    std::ostringstream table, machine;
    cert::write_report_table(table, report);
    if (opts.format == OutputFormat::Json)
      cert::write_report_json(machine, report);
    else
      cert::write_report_csv(machine, report);
    w.put("report.txt", table.str());
    w.put("report." + std::string(format_ext(opts.format)), machine.str());
    log << table.str();
    return report.all_pass() ? kExitPass : kExitFail;
  });
}

RunOutput run_simulate(const RunOptions& opts, std::ostream& log, std::ostream& err) {
  return guarded("simulate", opts, err, [&](Context& ctx, Writer& w) {
    const Scenario& s = ctx.scenario;
    std::vector<StepRecord> recs;
    for (std::size_t k = 0; k < s.experiments.size(); ++k)
      if (s.experiments[k].type == Experiment::Type::Step) recs.push_back(simulate_one(s, k, s.experiments[k], opts.strict, w));
    if (recs.empty()) throw SchemaError("experiments: simulate needs at least one step experiment");
    write_metrics(w, opts.format, recs);

    bool all = true;
    for (const StepRecord& r : recs) {
      const bool pf = r.exp.channel == cert::Channel::Pf;
      const char* unit = pf ? " Hz" : " p.u.";
      log << "experiment " << r.index + 1 << " (" << channel_name(r.exp.channel) << ", bus " << *r.exp.bus
          << ", step " << brief(r.exp.magnitude) << "): nadir " << brief(r.metrics.nadir) << unit
          << ", steady state " << brief(r.metrics.f_ss) << unit;
      if (pf) log << ", RoCoF " << brief(r.metrics.rocof) << " Hz/s";
      log << ", damping " << (r.metrics.damping_ratio ? brief(*r.metrics.damping_ratio) : std::string("none")) << (r.metrics.converged ? "" : " [not converged]")
          << " -> " << (r.verdict.pass() ? "PASS" : "FAIL") << '\n';
      all = all && r.verdict.pass();
    }
    return all ? kExitPass : kExitFail;
  });
}

RunOutput run_export(const RunOptions& opts, std::ostream& log, std::ostream& err) {
  return guarded("export", opts, err, [&](Context& ctx, Writer& w) {
    const Scenario& s = ctx.scenario;
    const GammaShift gamma = compute_gamma(s.network);
    for (std::size_t k = 0; k < s.devices.size(); ++k)
      export_device(w, opts.format, s, k, s.devices[k], opts.what, gamma);
    log << "exported " << w.files().size() << " file(s) to " << w.dir().string() << '\n';
    return kExitPass;
  });
}

}  // namespace nggc
