#pragma once

// JSON scenario documents: one file drives certify, simulate and export.
//
//   {
//     "name": "two-node, DUT 1",
//     "f_base": 50,
//     "network": {"n": 2, "rho": 0.1, "v0": [1, 1], "lines": [{"i": 1, "j": 2, "b": 2}]},
//     "devices": [
//       {"name": "ideal VSC", "bus": 1, "kind": "vsm", "params": {"M": 10, "D_d": 20}},
//       {"name": "DUT 1", "bus": 2, "kind": "droop"},
//       {"name": "custom", "bus": 2, "channel": "qv", "num": [0.1], "den": [1, 0.05]}
//     ],
//     "limits": {"df_max": 0.8},
//     "grid": {"points_per_decade": 60},
//     "experiments": [{"type": "step", "bus": 2, "magnitude": 0.1, "T": 30, "h": 0.001}]
//   }
//
// Omitted fields take defaults; the fully populated document is kept in
// Scenario::effective so outputs can echo every value that was used.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nggc/certkit.hpp"
#include "nggc/netmodel.hpp"
#include "nggc/tf_core.hpp"

namespace nggc {

struct DeviceEntry {
  std::string name;
  int bus = 0;  // 1-based
  cert::Channel channel = cert::Channel::Pf;
  std::string kind;  // devlib kind name, or "tf" for raw coefficients
  RationalTF tf = RationalTF::constant(0.0);
};

struct Experiment {
  enum class Type { Certify, Step };
  Type type = Type::Step;
  std::optional<int> bus;  // certify: restrict to one bus
  double magnitude = 0.1;
  double T = 30.0;
  double h = 1e-3;
  cert::Channel channel = cert::Channel::Pf;
};

struct Scenario {
  std::string name;
  NetworkSpec network;
  std::vector<DeviceEntry> devices;
  cert::CertLimits limits;
  FrequencyGrid grid;
  std::vector<Experiment> experiments;
  /// Limit names whose values are toolkit defaults rather than user input.
  std::vector<std::string> toolkit_defaults;
  std::vector<std::string> warnings;
  nlohmann::ordered_json effective;

  /// Device for (bus, channel), if any.
  [[nodiscard]] const DeviceEntry* device_at(int bus, cert::Channel channel) const;
};

/// Throws SchemaError with a field path ("devices[1].den: ...").
Scenario parse_scenario(const nlohmann::json& doc);
Scenario load_scenario(const std::filesystem::path& path);

std::string_view channel_name(cert::Channel c);

}  // namespace nggc
