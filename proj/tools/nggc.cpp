// nggc: certify device laws, simulate step experiments and export envelope data.

#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "nggc/runner.hpp"

namespace {

void add_common(CLI::App* cmd, nggc::RunOptions& opts) {
  cmd->add_option("--scenario", opts.scenario, "Scenario JSON file")->required();
  cmd->add_option("--out", opts.out, "Output directory")->capture_default_str();
  cmd->add_option("--grid-ppd", opts.grid_ppd, "Frequency grid points per decade (overrides the scenario)")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--strict", opts.strict, "Treat verdicts that rely on toolkit-default limits as failures");
  const std::map<std::string, nggc::OutputFormat> formats{{"csv", nggc::OutputFormat::Csv},
                                                          {"json", nggc::OutputFormat::Json}};
  cmd->add_option("--format", opts.format, "Machine-readable output format")
      ->transform(CLI::CheckedTransformer(formats, CLI::ignore_case));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized grid-code certification and two-channel grid simulation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "nggc 0.3.0");

  nggc::RunOptions certify_opts, simulate_opts, export_opts;
  auto* certify = app.add_subcommand("certify", "Check every device against the frequency-domain conditions");
  add_common(certify, certify_opts);
  auto* simulate = app.add_subcommand("simulate", "Run the scenario's step experiments");
  add_common(simulate, simulate_opts);
  auto* exporter = app.add_subcommand("export", "Write Nyquist loci and envelope primitives");
  add_common(exporter, export_opts);
  const std::map<std::string, nggc::ExportWhat> whats{
      {"nyquist", nggc::ExportWhat::Nyquist}, {"envelope", nggc::ExportWhat::Envelope}, {"all", nggc::ExportWhat::All}};
  exporter->add_option("--what", export_opts.what, "nyquist, envelope or all")
      ->transform(CLI::CheckedTransformer(whats, CLI::ignore_case));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : nggc::kExitError;
  }

  nggc::RunOutput out;
  if (*certify)
    out = nggc::run_certify(certify_opts, std::cout, std::cerr);
  else if (*simulate)
    out = nggc::run_simulate(simulate_opts, std::cout, std::cerr);
  else
    out = nggc::run_export(export_opts, std::cout, std::cerr);
  return out.exit_code;
}
