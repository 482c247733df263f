#include "nggc/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <set>

#include "nggc/devlib.hpp"

namespace nggc {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& what) { throw SchemaError(path + ": " + what); }

const json* find(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
}

void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; }))
      fail(path + "." + it.key(), "unknown field");
  }
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<int>();
}

std::vector<double> number_array(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array of numbers");
  std::vector<double> v;
  for (std::size_t k = 0; k < j.size(); ++k) v.push_back(number(j[k], path + "[" + std::to_string(k) + "]"));
  return v;
}

double number_or(const json& obj, const char* key, double fallback, const std::string& path) {
  const json* v = find(obj, key);
  return v ? number(*v, path + "." + key) : fallback;
}

cert::Channel parse_channel(const json& j, const std::string& path) {
  if (j == "pf") return cert::Channel::Pf;
  if (j == "qv") return cert::Channel::Qv;
  fail(path, "expected \"pf\" or \"qv\"");
}

// ------------------------------------------------------------------ devices

template <class P>
using Fields = std::vector<std::pair<const char*, double P::*>>;

template <class P>
P read_params(const json* params, const Fields<P>& fields, const std::string& path, ojson& echo) {
  P p{};
  if (params) {
    require_object(*params, path);
    for (auto it = params->begin(); it != params->end(); ++it) {
      if (std::none_of(fields.begin(), fields.end(), [&](const auto& f) { return it.key() == f.first; }))
        fail(path + "." + it.key(), "unknown parameter");
    }
  }
  for (const auto& [key, member] : fields) {
    if (params) p.*member = number_or(*params, key, p.*member, path);
    echo[key] = p.*member;
  }
  return p;
}

struct PfKind {
  std::function<dev::DeviceParams(const json*, const std::string&, ojson&)> read;
};

template <class P>
PfKind pf_kind(Fields<P> fields) {
  return {[fields](const json* j, const std::string& path, ojson& echo) -> dev::DeviceParams {
    return read_params<P>(j, fields, path, echo);
  }};
}

const std::map<std::string, PfKind, std::less<>>& pf_kinds() {
  using namespace dev;
  static const std::map<std::string, PfKind, std::less<>> kinds{
      {"droop", pf_kind<Droop>({{"d_p", &Droop::d_p}})},
      {"voc", pf_kind<VOC>({{"d_p", &VOC::d_p}})},
      {"vsm", pf_kind<VSM>({{"M", &VSM::M}, {"D_d", &VSM::D_d}})},
      {"sodroop", pf_kind<SecondOrderDroop>({{"d_p", &SecondOrderDroop::d_p},
                                             {"omega_n", &SecondOrderDroop::omega_n},
                                             {"zeta", &SecondOrderDroop::zeta},
                                             {"T_z", &SecondOrderDroop::T_z}})},
      {"sg_nonreheat", pf_kind<SGNonReheat>({{"H", &SGNonReheat::H},
                                             {"K_D", &SGNonReheat::K_D},
                                             {"R", &SGNonReheat::R},
                                             {"T_g", &SGNonReheat::T_g},
                                             {"T_ch", &SGNonReheat::T_ch}})},
      {"sg_reheat", pf_kind<SGReheat>({{"H", &SGReheat::H},
                                       {"K_D", &SGReheat::K_D},
                                       {"R", &SGReheat::R},
                                       {"T_g", &SGReheat::T_g},
                                       {"T_ch", &SGReheat::T_ch},
                                       {"T_rh", &SGReheat::T_rh},
                                       {"F_hp", &SGReheat::F_hp}})},
      {"sg_hydro", pf_kind<SGHydro>({{"H", &SGHydro::H},
                                     {"K_D", &SGHydro::K_D},
                                     {"R", &SGHydro::R},
                                     {"T_g", &SGHydro::T_g},
                                     {"T_w", &SGHydro::T_w},
                                     {"R_t", &SGHydro::R_t},
                                     {"T_r", &SGHydro::T_r}})},
  };
  return kinds;
}

std::optional<dev::QvDeviceParams> read_qv(std::string_view kind, const json* params, const std::string& path,
                                           ojson& echo) {
  using namespace dev;
  if (kind == "qdroop_static") return read_params<StaticQDroop>(params, {{"d_q", &StaticQDroop::d_q}}, path, echo);
  if (kind == "qdroop_filtered")
    return read_params<FilteredQDroop>(params, {{"d_q", &FilteredQDroop::d_q}, {"T_v", &FilteredQDroop::T_v}}, path,
                                       echo);
  return std::nullopt;
}

DeviceEntry parse_device(const json& j, std::size_t index, int n_buses, ojson& echo) {
  std::string path = "devices[" + std::to_string(index) + "]";
  require_object(j, path);
  DeviceEntry d;
  d.name = "device " + std::to_string(index + 1);
  if (const json* name = find(j, "name")) {
    if (!name->is_string()) fail(path + ".name", "expected a string");
    d.name = name->get<std::string>();
    path += " (" + d.name + ")";
  }
  reject_unknown(j, path, {"name", "bus", "channel", "kind", "params", "num", "den"});

  const json* bus = find(j, "bus");
  if (!bus) fail(path, "missing field \"bus\"");
  d.bus = integer(*bus, path + ".bus");
  if (d.bus < 1 || d.bus > n_buses) fail(path + ".bus", "no such bus (network has " + std::to_string(n_buses) + ")");

  const json* channel = find(j, "channel");
  const json* kind = find(j, "kind");
  const json* num = find(j, "num");
  const json* den = find(j, "den");
  echo["name"] = d.name;
  echo["bus"] = d.bus;

  try {
    if (kind) {
      if (num || den) fail(path, "give either \"kind\" or \"num\"/\"den\", not both");
      if (!kind->is_string()) fail(path + ".kind", "expected a string");
      d.kind = kind->get<std::string>();
      const json* params = find(j, "params");
      ojson pecho = ojson::object();
      if (auto it = pf_kinds().find(d.kind); it != pf_kinds().end()) {
        d.channel = cert::Channel::Pf;
        d.tf = dev::pf_transfer(it->second.read(params, path + ".params", pecho));
      } else if (auto qv = read_qv(d.kind, params, path + ".params", pecho)) {
        d.channel = cert::Channel::Qv;
        d.tf = dev::qv_transfer(*qv);
      } else {
        fail(path + ".kind", "unknown device kind \"" + d.kind + "\"");
      }
      if (channel && parse_channel(*channel, path + ".channel") != d.channel)
        fail(path + ".channel", "does not match the channel of kind \"" + d.kind + "\"");
      echo["channel"] = channel_name(d.channel);
      echo["kind"] = d.kind;
      echo["params"] = std::move(pecho);
    } else {
      if (!num && !den) fail(path, "missing \"kind\" or \"num\"/\"den\"");
      if (!num) fail(path, "missing field \"num\"");
      if (!den) fail(path, "missing field \"den\"");
      d.kind = "tf";
      d.channel = channel ? parse_channel(*channel, path + ".channel") : cert::Channel::Pf;
      d.tf = RationalTF(number_array(*num, path + ".num"), number_array(*den, path + ".den"));
      echo["channel"] = channel_name(d.channel);
      echo["num"] = std::vector<double>(d.tf.num().coeffs().begin(), d.tf.num().coeffs().end());
      echo["den"] = std::vector<double>(d.tf.den().coeffs().begin(), d.tf.den().coeffs().end());
    }
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    fail(path, e.what());
  }
  return d;
}

// ------------------------------------------------------------------ sections

NetworkSpec parse_network(const json& j, std::vector<std::string>& warnings, ojson& echo) {
  const std::string path = "network";
  require_object(j, path);
  reject_unknown(j, path, {"n", "rho", "v0", "lines"});
  NetworkSpec net;
  const json* n = find(j, "n");
  if (!n) fail(path, "missing field \"n\"");
  net.n = integer(*n, path + ".n");
  if (net.n < 1) fail(path + ".n", "must be at least 1");
  net.rho = number_or(j, "rho", 0.0, path);
  if (const json* v0 = find(j, "v0"))
    net.v0 = number_array(*v0, path + ".v0");
  else
    net.v0.assign(static_cast<std::size_t>(net.n), 1.0);
  if (const json* lines = find(j, "lines")) {
    if (!lines->is_array()) fail(path + ".lines", "expected an array");
    for (std::size_t k = 0; k < lines->size(); ++k) {
      const std::string lp = path + ".lines[" + std::to_string(k) + "]";
      const json& l = (*lines)[k];
      require_object(l, lp);
      reject_unknown(l, lp, {"i", "j", "b"});
      for (const char* key : {"i", "j", "b"})
        if (!find(l, key)) fail(lp, std::string("missing field \"") + key + "\"");
      net.lines.push_back({integer(l["i"], lp + ".i"), integer(l["j"], lp + ".j"), number(l["b"], lp + ".b")});
    }
  }
  try {
    for (std::string& w : net.validate()) warnings.push_back(std::move(w));
  } catch (const InvalidNetwork& e) {
    throw SchemaError(e.what());
  }
  echo = {{"n", net.n}, {"rho", net.rho}, {"v0", net.v0}, {"lines", ojson::array()}};
  for (const Line& l : net.lines) echo["lines"].push_back({{"i", l.i}, {"j", l.j}, {"b", l.b}});
  return net;
}

Experiment parse_experiment(const json& j, std::size_t index, int n_buses, ojson& echo) {
  const std::string path = "experiments[" + std::to_string(index) + "]";
  require_object(j, path);
  reject_unknown(j, path, {"type", "bus", "magnitude", "T", "h", "channel"});
  Experiment e;
  const json* type = find(j, "type");
  if (!type) fail(path, "missing field \"type\"");
  if (*type == "certify")
    e.type = Experiment::Type::Certify;
  else if (*type == "step")
    e.type = Experiment::Type::Step;
  else
    fail(path + ".type", "expected \"certify\" or \"step\"");
  if (const json* bus = find(j, "bus")) {
    e.bus = integer(*bus, path + ".bus");
    if (*e.bus < 1 || *e.bus > n_buses) fail(path + ".bus", "no such bus");
  }
  if (const json* ch = find(j, "channel")) e.channel = parse_channel(*ch, path + ".channel");
  echo["type"] = type->get<std::string>();
  if (e.bus) echo["bus"] = *e.bus;
  echo["channel"] = channel_name(e.channel);
  if (e.type == Experiment::Type::Step) {
    if (!e.bus) fail(path, "step experiments need \"bus\"");
    e.magnitude = number_or(j, "magnitude", e.magnitude, path);
    e.T = number_or(j, "T", e.T, path);
    e.h = number_or(j, "h", e.h, path);
    if (!(e.T > 0.0)) fail(path + ".T", "must be positive");
    if (!(e.h > 0.0 && e.h <= e.T)) fail(path + ".h", "must lie in (0, T]");
    echo["magnitude"] = e.magnitude;
    echo["T"] = e.T;
    echo["h"] = e.h;
  }
  return e;
}

}  // namespace

std::string_view channel_name(cert::Channel c) { return c == cert::Channel::Pf ? "pf" : "qv"; }

const DeviceEntry* Scenario::device_at(int bus, cert::Channel channel) const {
  for (const DeviceEntry& d : devices)
    if (d.bus == bus && d.channel == channel) return &d;
  return nullptr;
}

Scenario parse_scenario(const json& doc) {
  require_object(doc, "scenario");
  reject_unknown(doc, "scenario", {"name", "f_base", "network", "devices", "limits", "grid", "experiments"});
  Scenario s;
  ojson& eff = s.effective;

  if (const json* name = find(doc, "name")) {
    if (!name->is_string()) fail("name", "expected a string");
    s.name = name->get<std::string>();
  }
  eff["name"] = s.name;

  const json* net = find(doc, "network");
  if (!net) fail("scenario", "missing field \"network\"");
  ojson net_echo;
  s.network = parse_network(*net, s.warnings, net_echo);

  // limits: explicit overrides, then f_base (top level wins), then defaults
  ojson lim_echo;
  const json* limits = find(doc, "limits");
  if (limits) require_object(*limits, "limits");
  std::set<std::string> given;
  for (const cert::LimitField& f : cert::limit_fields()) {
    const std::string key(f.name);
    if (limits && limits->contains(key)) {
      s.limits.*f.member = number((*limits)[key], "limits." + key);
      given.insert(key);
    }
  }
  if (limits)
    for (auto it = limits->begin(); it != limits->end(); ++it)
      if (!given.count(it.key())) fail("limits." + it.key(), "unknown limit");
  if (const json* fb = find(doc, "f_base")) {
    s.limits.f_base = number(*fb, "f_base");
    given.insert("f_base");
  }
  try {
    s.limits.validate();
  } catch (const InvalidArgument& e) {
    throw SchemaError(e.what());
  }
  for (const cert::LimitField& f : cert::limit_fields()) {
    lim_echo[std::string(f.name)] = s.limits.*f.member;
    if (f.toolkit_default && !given.count(std::string(f.name))) s.toolkit_defaults.emplace_back(f.name);
  }

  if (const json* grid = find(doc, "grid")) {
    require_object(*grid, "grid");
    reject_unknown(*grid, "grid", {"omega_min", "omega_max", "points_per_decade"});
    s.grid.omega_min = number_or(*grid, "omega_min", s.grid.omega_min, "grid");
    s.grid.omega_max = number_or(*grid, "omega_max", s.grid.omega_max, "grid");
    if (const json* ppd = find(*grid, "points_per_decade")) s.grid.points_per_decade = integer(*ppd, "grid.points_per_decade");
  }
  try {
    s.grid.validate();
  } catch (const InvalidArgument& e) {
    throw SchemaError(e.what());
  }

  const json* devices = find(doc, "devices");
  if (!devices) fail("scenario", "missing field \"devices\"");
  if (!devices->is_array() || devices->empty()) fail("devices", "expected a non-empty array");
  ojson dev_echo = ojson::array();
  std::set<std::pair<int, cert::Channel>> occupied;
  for (std::size_t k = 0; k < devices->size(); ++k) {
    ojson e;
    DeviceEntry d = parse_device((*devices)[k], k, s.network.n, e);
    if (!occupied.insert({d.bus, d.channel}).second)
      fail("devices[" + std::to_string(k) + "]",
           "bus " + std::to_string(d.bus) + " already has a " + std::string(channel_name(d.channel)) + " device");
    s.devices.push_back(std::move(d));
    dev_echo.push_back(std::move(e));
  }

  ojson exp_echo = ojson::array();
  if (const json* exps = find(doc, "experiments")) {
    if (!exps->is_array()) fail("experiments", "expected an array");
    for (std::size_t k = 0; k < exps->size(); ++k) {
      ojson e;
      s.experiments.push_back(parse_experiment((*exps)[k], k, s.network.n, e));
      exp_echo.push_back(std::move(e));
    }
  }

  eff["f_base"] = s.limits.f_base;
  eff["network"] = std::move(net_echo);
  eff["devices"] = std::move(dev_echo);
  eff["limits"] = std::move(lim_echo);
  eff["grid"] = {{"omega_min", s.grid.omega_min},
                 {"omega_max", s.grid.omega_max},
                 {"points_per_decade", s.grid.points_per_decade}};
  eff["experiments"] = std::move(exp_echo);
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError(path.string() + ": cannot open scenario file");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(path.string() + ": invalid JSON: " + e.what());
  }
  return parse_scenario(doc);
}

}  // namespace nggc
