#pragma once

// Batch front-end behind the nggc tool.  Each run reads one scenario, writes
// its artifacts plus manifest.json (SHA-256 of every file) into the output
// directory and returns a deterministic exit code: 0 pass, 1 any failure,
// 2 input or processing error.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nggc {

enum class OutputFormat { Csv, Json };
enum class ExportWhat { Nyquist, Envelope, All };

struct RunOptions {
  std::filesystem::path scenario;
  std::filesystem::path out = "out";
  std::optional<int> grid_ppd;
  bool strict = false;
  OutputFormat format = OutputFormat::Csv;
  ExportWhat what = ExportWhat::All;
};

struct OutputFile {
  std::string path;  // relative to the output directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunOutput {
  int exit_code = 2;
  std::vector<OutputFile> files;  // manifest.json excluded
  std::filesystem::path manifest;
};

inline constexpr int kExitPass = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitError = 2;

/// `log` receives the human-readable summary, `err` diagnostics.
RunOutput run_certify(const RunOptions& opts, std::ostream& log, std::ostream& err);
RunOutput run_simulate(const RunOptions& opts, std::ostream& log, std::ostream& err);
RunOutput run_export(const RunOptions& opts, std::ostream& log, std::ostream& err);

/// Lower-case hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

}  // namespace nggc
