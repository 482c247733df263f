#pragma once

// Linearized outer-loop control laws of common grid-forming devices.
// Each law maps measured power deviation to a frequency (pf) or voltage
// magnitude (qv) deviation; all quantities are per unit.

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nggc/tf_core.hpp"

namespace nggc::dev {

struct Droop {
  double d_p = 0.05;
};

/// Virtual oscillator control; its linearized pf channel is a droop.
struct VOC {
  double d_p = 0.05;
};

/// Virtual synchronous machine, 1/(M s + D_d).
struct VSM {
  double M = 10.0;
  double D_d = 20.0;
};

/// d_p w_n^2 (1 + T_z s) / (s^2 + 2 zeta w_n s + w_n^2).  T_z = 0 gives the
/// plain low-pass second-order droop; the default lead T_z makes the law
/// relative degree one, so its RoCoF limit is finite but large.
struct SecondOrderDroop {
  double d_p = 0.05;
  double omega_n = 10.0;
  double zeta = 0.7;
  double T_z = 0.2;
};

/// Synchronous generator with a non-reheat steam turbine.
struct SGNonReheat {
  double H = 3.0;
  double K_D = 1.0;
  double R = 0.05;
  double T_g = 0.2;
  double T_ch = 0.5;
};

struct SGReheat {
  double H = 3.0;
  double K_D = 1.0;
  double R = 0.05;
  double T_g = 0.2;
  double T_ch = 0.5;
  double T_rh = 7.0;
  double F_hp = 0.3;
};

struct SGHydro {
  double H = 3.0;
  double K_D = 1.0;
  double R = 0.05;
  double T_g = 0.2;
  double T_w = 1.0;
  double R_t = 0.38;
  double T_r = 5.0;
};

using DeviceParams = std::variant<Droop, VOC, VSM, SecondOrderDroop, SGNonReheat, SGReheat, SGHydro>;

struct StaticQDroop {
  double d_q = 0.1;
};

struct FilteredQDroop {
  double d_q = 0.1;
  double T_v = 0.05;
};

using QvDeviceParams = std::variant<StaticQDroop, FilteredQDroop>;

/// Throws InvalidParameters naming the offending field.
void validate(const DeviceParams& params);
void validate(const QvDeviceParams& params);

RationalTF pf_transfer(const DeviceParams& params);
RationalTF qv_transfer(const QvDeviceParams& params);

/// Governor-turbine path G(s) of a synchronous generator, so that
/// D^pf = 1 / (2H s + K_D + G(s)/R).  Throws InvalidArgument for non-SG laws.
RationalTF sg_mechanical_path(const DeviceParams& params);

/// Scenario-file kind string ("droop", "vsm", "sg_hydro", ...).
std::string_view kind_name(const DeviceParams& params);
std::string_view kind_name(const QvDeviceParams& params);

/// One device under test of the reference fleet.
struct FleetEntry {
  std::string label;  // "DUT 1", ..., "DUT 7"
  DeviceParams params;
};

/// The seven reference control laws, committed defaults.
std::vector<FleetEntry> reference_fleet();

/// Compliant grid-forming converter used as the fixed partner node.
DeviceParams ideal_vsc();

}  // namespace nggc::dev
