#include "nggc/devlib.hpp"

#include <cmath>
#include <initializer_list>
#include <utility>

namespace nggc::dev {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require(bool ok, std::string_view kind, std::string_view what) {
  if (!ok) throw InvalidParameters(std::string(kind) + ": " + std::string(what));
}

using Fields = std::initializer_list<std::pair<double, const char*>>;

void positive(double v, std::string_view kind, std::string_view field) {
  require(v > 0.0 && std::isfinite(v), kind, std::string(field) + " must be positive");
}

// D = 1 / (2H s + K_D + G(s)/R) with G = gn/gd, cleared to gd / ((2Hs+K_D) gd + gn/R).
RationalTF close_swing(double H, double K_D, double R, const RationalTF& mech) {
  const Polynomial swing{K_D, 2.0 * H};
  return RationalTF(mech.den(), swing * mech.den() + (1.0 / R) * mech.num());
}

// First-order lag 1/(1 + sT) as polynomials.
Polynomial lag(double T) { return Polynomial{1.0, T}; }

}  // namespace

void validate(const DeviceParams& params) {
  std::visit(Overloaded{
                 [](const Droop& p) { positive(p.d_p, "droop", "d_p"); },
                 [](const VOC& p) { positive(p.d_p, "voc", "d_p"); },
                 [](const VSM& p) {
                   positive(p.M, "vsm", "M");
                   positive(p.D_d, "vsm", "D_d");
                 },
                 [](const SecondOrderDroop& p) {
                   positive(p.d_p, "sodroop", "d_p");
                   positive(p.omega_n, "sodroop", "omega_n");
                   positive(p.zeta, "sodroop", "zeta");
                   require(p.T_z >= 0.0 && std::isfinite(p.T_z), "sodroop", "T_z must be non-negative");
                 },
                 [](const SGNonReheat& p) {
                   for (auto [v, f] : Fields{{p.H, "H"}, {p.R, "R"}, {p.T_g, "T_g"}, {p.T_ch, "T_ch"}})
                     positive(v, "sg_nonreheat", f);
                   require(p.K_D >= 0.0, "sg_nonreheat", "K_D must be non-negative");
                 },
                 [](const SGReheat& p) {
                   for (auto [v, f] :
                        Fields{{p.H, "H"}, {p.R, "R"}, {p.T_g, "T_g"}, {p.T_ch, "T_ch"}, {p.T_rh, "T_rh"}})
                     positive(v, "sg_reheat", f);
                   require(p.K_D >= 0.0, "sg_reheat", "K_D must be non-negative");
                   require(p.F_hp > 0.0 && p.F_hp < 1.0, "sg_reheat", "F_hp must lie in (0, 1)");
                 },
                 [](const SGHydro& p) {
                   for (auto [v, f] : Fields{{p.H, "H"}, {p.R, "R"}, {p.T_g, "T_g"}, {p.T_w, "T_w"},
                                       {p.R_t, "R_t"}, {p.T_r, "T_r"}})
                     positive(v, "sg_hydro", f);
                   require(p.K_D >= 0.0, "sg_hydro", "K_D must be non-negative");
                 },
             },
             params);
}

void validate(const QvDeviceParams& params) {
  std::visit(Overloaded{
                 [](const StaticQDroop& p) { positive(p.d_q, "qdroop_static", "d_q"); },
                 [](const FilteredQDroop& p) {
                   positive(p.d_q, "qdroop_filtered", "d_q");
                   positive(p.T_v, "qdroop_filtered", "T_v");
                 },
             },
             params);
}

RationalTF sg_mechanical_path(const DeviceParams& params) {
  return std::visit(
      Overloaded{
          [](const SGNonReheat& p) { return RationalTF(Polynomial{1.0}, lag(p.T_g) * lag(p.T_ch)); },
          [](const SGReheat& p) {
            return RationalTF(Polynomial{1.0, p.F_hp * p.T_rh}, lag(p.T_g) * lag(p.T_ch) * lag(p.T_rh));
          },
          [](const SGHydro& p) {
            // transient droop compensation times the water column, behind the governor lag
            const Polynomial num = Polynomial{1.0, p.T_r} * Polynomial{1.0, -p.T_w};
            const Polynomial den = lag(p.R_t / p.R * p.T_r) * lag(0.5 * p.T_w) * lag(p.T_g);
            return RationalTF(num, den);
          },
          [](const auto&) -> RationalTF { throw InvalidArgument("not a synchronous-generator model"); },
      },
      params);
}

RationalTF pf_transfer(const DeviceParams& params) {
  validate(params);
  return std::visit(
      Overloaded{
          [](const Droop& p) { return RationalTF::constant(p.d_p); },
          [](const VOC& p) { return RationalTF::constant(p.d_p); },
          [](const VSM& p) { return RationalTF(Polynomial{1.0}, Polynomial{p.D_d, p.M}); },
          [](const SecondOrderDroop& p) {
            const double wn2 = p.omega_n * p.omega_n;
            return RationalTF(Polynomial{p.d_p * wn2, p.d_p * wn2 * p.T_z},
                              Polynomial{wn2, 2.0 * p.zeta * p.omega_n, 1.0});
          },
          [&](const SGNonReheat& p) { return close_swing(p.H, p.K_D, p.R, sg_mechanical_path(params)); },
          [&](const SGReheat& p) { return close_swing(p.H, p.K_D, p.R, sg_mechanical_path(params)); },
          [&](const SGHydro& p) { return close_swing(p.H, p.K_D, p.R, sg_mechanical_path(params)); },
      },
      params);
}

RationalTF qv_transfer(const QvDeviceParams& params) {
  validate(params);
  return std::visit(Overloaded{
                        [](const StaticQDroop& p) { return RationalTF::constant(p.d_q); },
                        [](const FilteredQDroop& p) { return RationalTF(Polynomial{p.d_q}, lag(p.T_v)); },
                    },
                    params);
}

std::string_view kind_name(const DeviceParams& params) {
  return std::visit(Overloaded{
                        [](const Droop&) { return std::string_view("droop"); },
                        [](const VOC&) { return std::string_view("voc"); },
                        [](const VSM&) { return std::string_view("vsm"); },
                        [](const SecondOrderDroop&) { return std::string_view("sodroop"); },
                        [](const SGNonReheat&) { return std::string_view("sg_nonreheat"); },
                        [](const SGReheat&) { return std::string_view("sg_reheat"); },
                        [](const SGHydro&) { return std::string_view("sg_hydro"); },
                    },
                    params);
}

std::string_view kind_name(const QvDeviceParams& params) {
  return std::holds_alternative<StaticQDroop>(params) ? "qdroop_static" : "qdroop_filtered";
}

std::vector<FleetEntry> reference_fleet() {
  return {
      {"DUT 1", Droop{}},        {"DUT 2", VOC{}},     {"DUT 3", VSM{}},    {"DUT 4", SecondOrderDroop{}},
      {"DUT 5", SGNonReheat{}}, {"DUT 6", SGReheat{}}, {"DUT 7", SGHydro{}},
  };
}

DeviceParams ideal_vsc() { return VSM{10.0, 20.0}; }

}  // namespace nggc::dev
