#include "ivtrial/cli.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#ifndef IVTRIAL_TEST_DATA
#error "IVTRIAL_TEST_DATA must point at tests/data"
#endif

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "ivtrial");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = ivtrial::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string data(const char* name) { return std::string(IVTRIAL_TEST_DATA) + "/" + name; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const char* name) {
  const auto dir = fs::temp_directory_path() / ("ivtrial_cli_test_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("simulate is deterministic and round-trips through estimate") {
  const auto a = scratch("a.csv"), b = scratch("b.csv");
  CHECK(run({"simulate", "--model", "A", "--n", "1000", "--seed", "1", "--out", a.string()}).code == 0);
  CHECK(run({"simulate", "--model", "A", "--n", "1000", "--seed", "1", "--out", b.string()}).code == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(a).rfind("r,s,t,y\n", 0) == 0);

  const auto est = run({"estimate", "--data", a.string(), "--estimators", "policy,iv_ratio,extended_tsls"});
  CHECK(est.code == 0);
  CHECK(est.out.find("\"warnings\": [\"") == std::string::npos);

  const auto latent = run({"simulate", "--model", "C", "--n", "5", "--emit-latent"});
  CHECK(latent.out.rfind("t,x,a,y,u,z\n", 0) == 0);
  const auto plain = run({"simulate", "--model", "C", "--n", "5"});
  CHECK(plain.out.rfind("t,x,a,y\n", 0) == 0);
}

TEST_CASE("simulate overrides and config") {
  const auto conf = scratch("sim.conf");
  std::ofstream(conf) << "model = biomarker_b\nn = 20\nseed = 3\nparam.psi_b = 0\n";
  const auto from_conf = run({"simulate", "--config", conf.string()});
  const auto from_flags = run({"simulate", "--model", "B", "--n", "20", "--seed", "3", "--set", "psi_b=0"});
  CHECK(from_conf.code == 0);
  CHECK(from_conf.out == from_flags.out);

  const auto bad = run({"simulate", "--model", "A", "--set", "nope=1"});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("nope") != std::string::npos);
  CHECK(run({"simulate", "--model", "A", "--set", "psi_t"}).code == 2);
  CHECK(run({"simulate", "--model", "Q"}).code == 2);
  const auto unwritable = run({"simulate", "--model", "A", "--out", "/nonexistent/dir/x.csv"});
  CHECK(unwritable.code == 3);
  CHECK(unwritable.err.find("--out") != std::string::npos);
}

TEST_CASE("estimate: constant treatment reports WeakInstrument per estimand") {
  const auto r = run({"estimate", "--data", data("constant_t8.csv")});
  CHECK(r.code == 0);
  CHECK(r.out.find("\"estimate\": 2.750000") != std::string::npos);
  CHECK(r.out.find("WeakInstrument") != std::string::npos);
  CHECK(r.out.find("\"estimate\": null") != std::string::npos);
}

TEST_CASE("estimate: errors name the flag, column or row") {
  const auto missing = run({"estimate", "--data", data("tiny8.csv"), "--y-col", "outcome"});
  CHECK(missing.code == 3);
  CHECK(missing.err.find("'outcome'") != std::string::npos);
  CHECK(missing.err.find("--y-col") != std::string::npos);

  const auto bad_csv = scratch("bad.csv");
  std::ofstream(bad_csv) << "r,t,y\n0,1,2\n1,oops,3\n";
  const auto parse = run({"estimate", "--data", bad_csv.string()});
  CHECK(parse.code == 3);
  CHECK(parse.err.find("line 3") != std::string::npos);
  CHECK(parse.err.find("'t'") != std::string::npos);

  const auto nonbinary = scratch("nonbinary.csv");
  std::ofstream(nonbinary) << "r,t,y\n0,1,2\n1,2,3\n";
  const auto nb = run({"estimate", "--data", nonbinary.string()});
  CHECK(nb.code == 3);
  CHECK(nb.err.find("--t-col") != std::string::npos);
  CHECK(nb.err.find("line 3") != std::string::npos);

  const auto unknown = run({"estimate", "--data", data("tiny8.csv"), "--estimators", "magic"});
  CHECK(unknown.code == 2);
  CHECK(unknown.err.find("magic") != std::string::npos);

  CHECK(run({"estimate", "--data", "/nonexistent.csv"}).code == 3);
  CHECK(run({"estimate", "--data", data("tiny8.csv"), "--link", "probit"}).code == 2);
  CHECK(run({"estimate"}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("estimate: bootstrap standard errors and provenance") {
  const auto csv = scratch("boot.csv");
  CHECK(run({"simulate", "--model", "A", "--n", "300", "--seed", "4", "--out", csv.string()}).code == 0);
  const auto a = run({"estimate", "--data", csv.string(), "--bootstrap", "100", "--seed", "2"});
  const auto b = run({"estimate", "--data", csv.string(), "--bootstrap", "100", "--seed", "2"});
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out.find("\"se\": null") == std::string::npos);
  CHECK(a.out.find("\"config_hash\": \"fnv1a64:") != std::string::npos);
  const auto c = run({"estimate", "--data", csv.string(), "--bootstrap", "100", "--seed", "3"});
  CHECK(c.out != a.out);
  CHECK(run({"estimate", "--data", csv.string(), "--bootstrap", "10"}).code == 2);
}

TEST_CASE("sensitivity: zero-defier slice equals the IV estimate") {
  const auto r = run({"sensitivity", "--data", data("tiny8.csv"), "--dace-range", "-10:10", "--pi-d-range",
                      "0:0.2", "--steps", "3"});
  CHECK(r.code == 0);
  CHECK(r.out.find("dace,pi_d,implied_cace,defined\n-10,0,5.5,1\n") == 0);
  CHECK(r.out.find("\n0,0,5.5,1\n") != std::string::npos);
  CHECK(r.out.find("\n10,0,5.5,1\n") != std::string::npos);
  CHECK(run({"sensitivity", "--data", data("tiny8.csv"), "--dace-range", "5"}).code == 2);
  CHECK(run({"sensitivity", "--data", data("constant_t8.csv")}).code == 4);
}

TEST_CASE("check-iv verdicts") {
  const auto ok = run({"check-iv", "--dag", data("case2.dag")});
  CHECK(ok.code == 0);
  CHECK(ok.out.find("IV1 relevance: PASS") != std::string::npos);
  CHECK(ok.out.find("IV2 randomization: PASS") != std::string::npos);
  CHECK(ok.out.find("IV3 exclusion restriction: PASS") != std::string::npos);

  const auto direct = run({"check-iv", "--dag", data("case2_direct.dag")});
  CHECK(direct.out.find("IV3 exclusion restriction: FAIL\n  open path R -> Y") != std::string::npos);
  const auto confounded = run({"check-iv", "--dag", data("case2_confounded.dag")});
  CHECK(confounded.out.find("IV2 randomization: FAIL\n  open path R <- U") != std::string::npos);

  const auto unknown = run({"check-iv", "--dag", data("case2.dag"), "--outcome", "Q"});
  CHECK(unknown.code == 3);
  CHECK(unknown.err.find("'Q'") != std::string::npos);
  const auto bad = scratch("bad.dag");
  std::ofstream(bad) << "A -> B\nB => C\n";
  const auto parse = run({"check-iv", "--dag", bad.string()});
  CHECK(parse.code == 3);
  CHECK(parse.err.find("line 2") != std::string::npos);
}

TEST_CASE("replicate smoke run") {
  const auto dir = scratch("rep");
  const auto r = run({"replicate", "--study", "section_5_4", "--reps", "10", "--out", dir.string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("INSUFFICIENT_REPS") != std::string::npos);
  CHECK(fs::exists(dir / "per_replication.csv"));
  CHECK(fs::exists(dir / "summary.json"));
  CHECK(fs::exists(dir / "comparison.csv"));
  CHECK(run({"replicate", "--study", "nope", "--out", dir.string()}).code == 2);
}

TEST_CASE("exit code mapping and hashing") {
  using namespace ivtrial;
  CHECK(exit_code_for(ErrorKind::InvalidParam) == 2);
  CHECK(exit_code_for(ErrorKind::MissingColumn) == 3);
  CHECK(exit_code_for(ErrorKind::WeakInstrument) == 4);
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}
