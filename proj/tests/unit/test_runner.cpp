#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nggc/runner.hpp"

using namespace nggc;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("nggc_runner_" + name);
  fs::remove_all(p);
  return p;
}

RunOptions opts(const fs::path& scenario, const fs::path& out) {
  RunOptions o;
  o.scenario = scenario;
  o.out = out;
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

nlohmann::json manifest(const RunOutput& r) { return nlohmann::json::parse(slurp(r.manifest)); }

const fs::path kData = NGGC_TEST_DATA_DIR;
const fs::path kScen = NGGC_SCENARIO_DIR;

}  // namespace

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Runner, CertifyVsmPairPasses) {
  std::ostringstream log, err;
  const RunOutput r = run_certify(opts(kData / "vsm_pair.json", scratch("vsm")), log, err);
  EXPECT_EQ(r.exit_code, kExitPass) << err.str();
  ASSERT_EQ(r.files.size(), 2u);
  EXPECT_EQ(r.files[0].path, "report.txt");
  EXPECT_EQ(r.files[1].path, "report.csv");
  EXPECT_TRUE(fs::exists(r.manifest));
  EXPECT_NE(log.str().find("Overall: PASS"), std::string::npos);
}

TEST(Runner, CertifyDroopReportsPublishedRow) {
  std::ostringstream log, err;
  const fs::path out = scratch("dut1");
  const RunOutput r = run_certify(opts(kScen / "exp1_dut1.json", out), log, err);
  EXPECT_EQ(r.exit_code, kExitFail);
  std::istringstream csv(slurp(out / "report.csv"));
  std::string line, row;
  while (std::getline(csv, line))
    if (line.rfind("DUT 1,1-", 0) == 0) row += line.find(",true,") != std::string::npos ? 'v' : 'x';
  EXPECT_EQ(row, "xvvxvvxv");
}

TEST(Runner, SchemaErrorExitsTwoAndNamesDevice) {
  std::ostringstream log, err;
  const RunOutput r = run_certify(opts(kData / "missing_den.json", scratch("bad")), log, err);
  EXPECT_EQ(r.exit_code, kExitError);
  EXPECT_NE(err.str().find("broken DUT"), std::string::npos) << err.str();
}

TEST(Runner, ManifestHashesAreReproducible) {
  std::ostringstream log, err;
  const RunOutput a = run_export(opts(kScen / "two_node_vsm_qv.json", scratch("ex_a")), log, err);
  const RunOutput b = run_export(opts(kScen / "two_node_vsm_qv.json", scratch("ex_b")), log, err);
  ASSERT_EQ(a.exit_code, kExitPass) << err.str();
  ASSERT_EQ(a.files.size(), b.files.size());
  for (std::size_t k = 0; k < a.files.size(); ++k) {
    EXPECT_EQ(a.files[k].path, b.files[k].path);
    EXPECT_EQ(a.files[k].sha256, b.files[k].sha256);
  }
  EXPECT_EQ(slurp(a.manifest), slurp(b.manifest));
}

TEST(Runner, ManifestHashesMatchFileContents) {
  std::ostringstream log, err;
  const fs::path out = scratch("hash");
  const RunOutput r = run_simulate(opts(kData / "zero_step.json", out), log, err);
  ASSERT_EQ(r.exit_code, kExitPass) << err.str();
  const auto m = manifest(r);
  ASSERT_FALSE(m["files"].empty());
  for (const auto& f : m["files"]) {
    const std::string body = slurp(out / f["path"].get<std::string>());
    EXPECT_EQ(f["sha256"], sha256_hex(body));
    EXPECT_EQ(f["bytes"], body.size());
  }
  EXPECT_EQ(m["scenario"]["sha256"], sha256_hex(slurp(kData / "zero_step.json")));
}

TEST(Runner, ManifestEchoesDefaults) {
  std::ostringstream log, err;
  const RunOutput r = run_certify(opts(kData / "vsm_pair.json", scratch("echo")), log, err);
  const auto m = manifest(r);
  EXPECT_EQ(m["effective_scenario"]["limits"]["eps_f"], 0.01);
  EXPECT_EQ(m["effective_scenario"]["devices"][0]["params"]["M"], 10.0);
  EXPECT_FALSE(m["toolkit_defaults"].empty());
  EXPECT_EQ(m["exit_code"], 0);
}

TEST(Runner, StrictModeFailsOnDefaultDependentVerdicts) {
  std::ostringstream log, err;
  RunOptions o = opts(kData / "vsm_pair.json", scratch("strict"));
  o.strict = true;
  EXPECT_EQ(run_certify(o, log, err).exit_code, kExitFail);
}

TEST(Runner, GridOverrideIsRecorded) {
  std::ostringstream log, err;
  RunOptions o = opts(kData / "vsm_pair.json", scratch("ppd"));
  o.grid_ppd = 12;
  const auto m = manifest(run_certify(o, log, err));
  EXPECT_EQ(m["effective_scenario"]["grid"]["points_per_decade"], 12);
  o.grid_ppd = 0;
  EXPECT_EQ(run_certify(o, log, err).exit_code, kExitError);
}

TEST(Runner, SimulateZeroStepWritesZeroMetrics) {
  std::ostringstream log, err;
  const fs::path out = scratch("zero_json");
  RunOptions o = opts(kData / "zero_step.json", out);
  o.format = OutputFormat::Json;
  const RunOutput r = run_simulate(o, log, err);
  ASSERT_EQ(r.exit_code, kExitPass) << err.str();
  const auto metrics = nlohmann::json::parse(slurp(out / "metrics.json"));
  ASSERT_EQ(metrics.size(), 1u);
  EXPECT_EQ(metrics[0]["nadir"], 0.0);
  EXPECT_EQ(metrics[0]["f_ss"], 0.0);
}

TEST(Runner, SimulateExperimentTwoDroopFailsOnRocof) {
  std::ostringstream log, err;
  const RunOutput r = run_simulate(opts(kScen / "exp2_dut1.json", scratch("exp2")), log, err);
  EXPECT_EQ(r.exit_code, kExitFail);
  EXPECT_NE(log.str().find("RoCoF inf"), std::string::npos) << log.str();
}

TEST(Runner, SimulateNeedsStepExperiment) {
  std::ostringstream log, err;
  EXPECT_EQ(run_simulate(opts(kData / "vsm_pair.json", scratch("nostep")), log, err).exit_code, kExitError);
}

TEST(Runner, ExportWritesLociAndEnvelopes) {
  std::ostringstream log, err;
  const fs::path out = scratch("export");
  RunOptions o = opts(kScen / "two_node_vsm_qv.json", out);
  const RunOutput r = run_export(o, log, err);
  ASSERT_EQ(r.exit_code, kExitPass) << err.str();
  int nyq = 0, env = 0;
  for (const auto& f : r.files) {
    nyq += f.path.rfind("nyquist_", 0) == 0;
    env += f.path.rfind("envelope_", 0) == 0;
  }
  EXPECT_EQ(nyq, 4);
  EXPECT_EQ(env, 4);
  o.what = ExportWhat::Nyquist;
  o.out = scratch("export_n");
  EXPECT_EQ(run_export(o, log, err).files.size(), 4u);
}
