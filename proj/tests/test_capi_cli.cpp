#include <doctest.h>

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "shiftlab/shiftlab.h"

using json = nlohmann::json;

namespace {

std::filesystem::path scratch_dir() {
  const char* env = std::getenv("SHIFTLAB_SCRATCH");
  return env != nullptr ? std::filesystem::path(env) : std::filesystem::temp_directory_path();
}

std::string cli_path() {
  const char* env = std::getenv("SHIFTLAB_CLI");
  REQUIRE_MESSAGE(env != nullptr, "SHIFTLAB_CLI must point at the CLI binary");
  return env;
}

const char* kTinyConfig = R"({
  "scenario": "capi_tiny",
  "k": 2,
  "n_grid": [6, 8, 10],
  "reps": 2,
  "noise_variance": 0.04,
  "spectrum": {"rule": "explicit", "eigenvalues": [1.0, 0.8, 0.2, 0.1, 0.05]},
  "target": {"rule": "scaled_random", "norm_T": 2.0, "ratio": 1.5},
  "estimators": [
    {"name": "minnorm"},
    {"name": "ridge", "lambda_rule": "const", "lambda_value": 0.5},
    {"name": "pcr"}
  ],
  "tail_block_size": 2
})";

std::string write_tiny_config() {
  const auto path = scratch_dir() / "capi_tiny_config.json";
  std::ofstream out(path, std::ios::binary);
  out << kTinyConfig;
  return path.string();
}

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

CliResult run_cli(const std::string& args, const std::string& env_prefix = "") {
  const auto out_path = scratch_dir() / "cli_stdout.txt";
  const auto err_path = scratch_dir() / "cli_stderr.txt";
  const std::string command = env_prefix + cli_path() + " " + args + " > " + out_path.string() +
                              " 2> " + err_path.string();
  const int raw = std::system(command.c_str());
  CliResult result;
  result.exit_code = WEXITSTATUS(raw);
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
  };
  result.out = slurp(out_path);
  result.err = slurp(err_path);
  return result;
}

struct Ctx {
  shiftlab_ctx* ptr = shiftlab_ctx_new();
  ~Ctx() { shiftlab_ctx_free(ptr); }
};

}  // namespace

TEST_CASE("capi instance returns the slow-rate spectrum") {
  Ctx ctx;
  char* out = nullptr;
  REQUIRE(shiftlab_instance(ctx.ptr, 100, 2, 1.0, 2.0, &out) == SHIFTLAB_OK);
  const json parsed = json::parse(out);
  shiftlab_string_free(out);
  CHECK(parsed["d"] == 8);
  const auto eigenvalues = parsed["eigenvalues"].get<std::vector<double>>();
  REQUIRE(eigenvalues.size() == 8);
  CHECK(eigenvalues[0] == 1.0);
  CHECK(eigenvalues[2] == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(eigenvalues[7] == 0.0);
}

TEST_CASE("capi instance rejects an empty tail") {
  Ctx ctx;
  char* out = nullptr;
  CHECK(shiftlab_instance(ctx.ptr, 3, 1, 1.0, 2.0, &out) == SHIFTLAB_ERR_CONFIG);
  CHECK(std::string(shiftlab_ctx_error(ctx.ptr)).find("sqrt") != std::string::npos);
}

TEST_CASE("capi simulate + slope round trip") {
  Ctx ctx;
  const std::string config = write_tiny_config();
  const std::string csv = (scratch_dir() / "capi_records.csv").string();
  REQUIRE(shiftlab_simulate(ctx.ptr, config.c_str(), 42, csv.c_str(), 2) == SHIFTLAB_OK);

  std::ifstream in(csv, std::ios::binary);
  std::string header;
  std::getline(in, header);
  CHECK(header ==
        "scenario_id,estimator,n,rep,lambda,excess_risk,bias,variance,samples_used,seed_hex,failed");

  char* out = nullptr;
  REQUIRE(shiftlab_slope(ctx.ptr, csv.c_str(), "ridge", &out) == SHIFTLAB_OK);
  const json parsed = json::parse(out);
  shiftlab_string_free(out);
  CHECK(parsed["estimator"] == "ridge");
  CHECK(parsed["points_used"] == 3);

  char* missing = nullptr;
  CHECK(shiftlab_slope(ctx.ptr, csv.c_str(), "nonexistent", &missing) == SHIFTLAB_ERR_CONFIG);
}

TEST_CASE("capi simulate reports missing configs") {
  Ctx ctx;
  const std::string missing = (scratch_dir() / "missing_config.json").string();
  const std::string csv = (scratch_dir() / "unused.csv").string();
  CHECK(shiftlab_simulate(ctx.ptr, missing.c_str(), 1, csv.c_str(), 1) == SHIFTLAB_ERR_CONFIG);
  CHECK(std::string(shiftlab_ctx_error(ctx.ptr)).find("missing_config.json") != std::string::npos);
}

TEST_CASE("capi diagnose and theory emit parseable JSON") {
  Ctx ctx;
  const std::string config = write_tiny_config();

  char* diag = nullptr;
  REQUIRE(shiftlab_diagnose(ctx.ptr, config.c_str(), 8, 11, &diag) == SHIFTLAB_OK);
  const json diag_json = json::parse(diag);
  shiftlab_string_free(diag);
  CHECK(diag_json["k"] == 2);
  CHECK(diag_json["shift"]["norm_T"].get<double>() == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(diag_json["shift"]["trU_over_trV"].get<double>() == doctest::Approx(1.5).epsilon(1e-9));
  CHECK(diag_json["condnum"].contains("ratio"));

  char* theory = nullptr;
  REQUIRE(shiftlab_theory(ctx.ptr, config.c_str(), 8, 0.05, 1.0, &theory) == SHIFTLAB_OK);
  const json theory_json = json::parse(theory);
  shiftlab_string_free(theory);
  CHECK(theory_json["constants_omitted"] == true);
  CHECK(theory_json["v_bound_major"].get<double>() > 0.0);
  CHECK(theory_json["delta_bound"].get<double>() > 0.0);
}

TEST_CASE("capi diagnose serializes infinite ranks as the string inf") {
  Ctx ctx;
  const auto path = scratch_dir() / "zero_tail_config.json";
  {
    std::ofstream out(path, std::ios::binary);
    out << R"({
      "scenario": "zero_tail", "k": 1, "n_grid": [4, 6, 8], "reps": 1,
      "noise_variance": 0.0,
      "spectrum": {"rule": "explicit", "eigenvalues": [1.0, 0.0, 0.0]},
      "target": {"rule": "identity"},
      "estimators": [{"name": "minnorm"}]
    })";
  }
  char* out = nullptr;
  REQUIRE(shiftlab_diagnose(ctx.ptr, path.string().c_str(), 6, 3, &out) == SHIFTLAB_OK);
  const json parsed = json::parse(out);
  shiftlab_string_free(out);
  CHECK(parsed["effective_ranks"]["r_k"] == "inf");
  CHECK(parsed["effective_ranks"]["R_k"] == "inf");
  CHECK(parsed["shift"]["trU_over_trV"] == "inf");
}

TEST_CASE("slope rejects malformed CSV rows as a config error") {
  Ctx ctx;
  const auto path = scratch_dir() / "malformed.csv";
  {
    std::ofstream out(path, std::ios::binary);
    out << "scenario_id,estimator,n,rep,lambda,excess_risk,bias,variance,samples_used,seed_hex,failed\n"
        << "x,minnorm,not_a_number,0,0,1,0,1,8,00,0\n";
  }
  char* out = nullptr;
  CHECK(shiftlab_slope(ctx.ptr, path.string().c_str(), "minnorm", &out) == SHIFTLAB_ERR_CONFIG);
}

TEST_CASE("cli subcommands: exit codes and stable stdout") {
  const CliResult ok = run_cli("instance --n 100 --k 2 --c1 1 --c2 2");
  CHECK(ok.exit_code == 0);
  CHECK(json::parse(ok.out)["d"] == 8);

  const CliResult rerun = run_cli("instance --n 100 --k 2 --c1 1 --c2 2");
  CHECK(rerun.out == ok.out);  // identical argv -> identical bytes

  const CliResult missing = run_cli("simulate --config /nonexistent.json --seed 1 --out /tmp/x.csv");
  CHECK(missing.exit_code == 2);
  CHECK(missing.err.find("/nonexistent.json") != std::string::npos);

  const CliResult bad_flag = run_cli("simulate --seed 1");
  CHECK(bad_flag.exit_code == 2);

  const CliResult bad_threads = run_cli("instance --n 100 --k 2", "SHIFTLAB_THREADS=abc ");
  CHECK(bad_threads.exit_code == 2);
  CHECK(bad_threads.err.find("SHIFTLAB_THREADS") != std::string::npos);
}

TEST_CASE("cli simulate/diagnose/theory/slope pipeline") {
  const std::string config = write_tiny_config();
  const std::string csv = (scratch_dir() / "cli_records.csv").string();

  const CliResult sim = run_cli("simulate --config " + config + " --seed 42 --out " + csv);
  CHECK(sim.exit_code == 0);
  CHECK(std::filesystem::exists(csv));
  CHECK(sim.out.empty());  // machine output only on stdout; simulate writes a file

  const CliResult slope = run_cli("slope --csv " + csv + " --estimator minnorm");
  CHECK(slope.exit_code == 0);
  CHECK(json::parse(slope.out).contains("slope"));

  const CliResult diag = run_cli("diagnose --config " + config + " --n 8 --seed 11");
  CHECK(diag.exit_code == 0);
  CHECK(json::parse(diag.out)["n"] == 8);

  const CliResult theory = run_cli("theory --config " + config + " --n 8 --delta 0.1 --sigma 1.0");
  CHECK(theory.exit_code == 0);
  CHECK(json::parse(theory.out)["constants_omitted"] == true);
}
