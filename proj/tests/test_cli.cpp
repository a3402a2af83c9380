#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "polytransfer/loss_model.hpp"
#include "polytransfer/zoo.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path& scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("polytransfer_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

// Exit status of the CLI with the given arguments; stdout and stderr go to files.
int run(const std::string& args, const std::string& out = "stdout.txt") {
  const std::string cmd = std::string(POLYTRANSFER_CLI) + " " + args + " > " +
                          (scratch() / out).string() + " 2> " + (scratch() / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& name) {
  std::ifstream in(scratch() / name, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string path(const std::string& name) { return (scratch() / name).string(); }

}  // namespace

TEST_CASE("analyze exit codes") {
  CHECK(run("analyze zoo://hinge_zero_one") == 0);
  const auto j = nlohmann::json::parse(slurp("stdout.txt"));
  CHECK(j["schema_version"] == 1);
  CHECK(j["certificate"]["exact_alpha"] == "1");
  CHECK(j["problem_digest"].get<std::string>().size() == 16);
  CHECK(j["atlas"]["vertex_pool_count"] == 3);

  CHECK(run("analyze zoo://hinge_zero_one --flip-link") == 3);
  const auto f = nlohmann::json::parse(slurp("stdout.txt"));
  CHECK(f["certificate"]["consistent"] == false);
  CHECK(f["certificate"]["witness"]["distance"] == "0");

  CHECK(run("analyze " + path("missing.json")) == 2);
  CHECK(run("analyze zoo://no_such_entry") == 2);
  CHECK(run("analyze zoo://exp_binary") == 2);
}

TEST_CASE("analyze reads problem files with query distributions") {
  auto file = nlohmann::json::parse(
      polytransfer::serialize_problem(polytransfer::builtin("hinge_zero_one").problem));
  file["distributions"] = nlohmann::json::array({nlohmann::json::array({"3/4", "1/4"})});
  std::ofstream(path("hinge.json")) << file.dump();
  CHECK(run("analyze " + path("hinge.json") + " --samples 100") == 0);
  const auto j = nlohmann::json::parse(slurp("stdout.txt"));
  REQUIRE(j["queries"].size() == 1);
  CHECK(j["queries"][0]["surrogate_risk"] == "1/2");
  CHECK(j["queries"][0]["target_risk"] == "1/4");
  CHECK(j["queries"][0]["target_optimal"] == nlohmann::json::array({"-1"}));

  std::ofstream(path("bad.json")) << "{\"labels\": [\"a\"]}";
  CHECK(run("analyze " + path("bad.json")) == 2);
}

TEST_CASE("analyze output is byte-identical across runs and thread counts") {
  CHECK(run("analyze zoo://bep_abstain_4 --samples 200 --seed 3 --threads 1 --out " + path("a1.json")) == 0);
  CHECK(run("analyze zoo://bep_abstain_4 --samples 200 --seed 3 --threads 3 --out " + path("a3.json")) == 0);
  CHECK(run("analyze zoo://bep_abstain_4 --samples 200 --seed 3 --threads 1 --out " + path("a1b.json")) == 0);
  CHECK(slurp("a1.json") == slurp("a3.json"));
  CHECK(slurp("a1.json") == slurp("a1b.json"));
}

TEST_CASE("verify exit codes") {
  CHECK(run("verify zoo://hinge_zero_one --alpha auto --samples 3000 --seed 7") == 0);
  CHECK(run("verify zoo://hinge_zero_one --alpha 9/10 --samples 3000 --seed 7 --csv " + path("v.csv")) == 4);
  const auto j = nlohmann::json::parse(slurp("stdout.txt"));
  CHECK(j["reports"][0]["violation_count"].get<int>() >= 1);
  CHECK(slurp("v.csv").rfind("p,u,lhs,rhs\n", 0) == 0);
  CHECK(run("verify zoo://hinge_zero_one --alpha auto --samples 0") == 2);
  CHECK(run("verify zoo://hinge_zero_one --alpha 0.9 --samples 10") == 2);
  CHECK(run("verify zoo://hinge_zero_one --alpha auto --flip-link --samples 10") == 3);
  CHECK(run("verify zoo://hinge_zero_one") == 2);
}

TEST_CASE("verify output is independent of thread count") {
  CHECK(run("verify zoo://bep_abstain_4 --alpha 9/10 --samples 2000 --seed 5 --threads 1 --out " + path("v1.json")) == 4);
  CHECK(run("verify zoo://bep_abstain_4 --alpha 9/10 --samples 2000 --seed 5 --threads 4 --out " + path("v4.json")) == 4);
  CHECK(slurp("v1.json") == slurp("v4.json"));
}

TEST_CASE("lowerbound exit codes") {
  CHECK(run("lowerbound exp_binary --csv " + path("exp.csv")) == 0);
  const auto j = nlohmann::json::parse(slurp("stdout.txt"));
  CHECK(j["mode"] == "smooth");
  CHECK(j["in_window"] == true);
  CHECK(j["envelope"]["passed"] == true);
  CHECK(slurp("exp.csv").rfind("lambda,target_regret,surrogate_regret,u_lambda_0\n", 0) == 0);

  CHECK(run("lowerbound hinge_control_sweep") == 0);
  const auto c = nlohmann::json::parse(slurp("stdout.txt"));
  CHECK(c["mode"] == "control");
  CHECK(c["regime"] == "linear regime");

  CHECK(run("lowerbound exp_binary --grid 1") == 2);
  CHECK(run("lowerbound exp_binary --grid 0.001:0.1:15") == 0);
  CHECK(run("lowerbound exp_binary --grid abc") == 2);
  CHECK(run("lowerbound hinge_zero_one") == 2);
  // Far from the boundary the surrogate regret is no longer quadratic.
  CHECK(run("lowerbound exp_binary --grid 0.3:0.9:6") == 5);
}

TEST_CASE("zoo commands") {
  CHECK(run("zoo list") == 0);
  CHECK(slurp("stdout.txt").find("hinge_zero_one\t") != std::string::npos);
  CHECK(run("zoo export bep_abstain_4") == 0);
  const auto p = polytransfer::parse_problem(slurp("stdout.txt"));
  CHECK(p.labels.size() == 4);
  CHECK(run("zoo export nope") == 2);
  CHECK(run("zoo") == 2);
  CHECK(run("") == 2);
}
