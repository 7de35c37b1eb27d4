#include <gtest/gtest.h>
#include <sys/wait.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "stochinv/stochinv.hpp"

using namespace stochinv;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("stochinv_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

fs::path write_file(const std::string& name, const std::string& text) {
  const fs::path p = scratch() / name;
  std::ofstream(p) << text;
  return p;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Run {
  int code;
  std::string err;
};

Run cli(const std::string& args) {
  const fs::path err = scratch() / "stderr.txt";
  const std::string cmd = std::string(STOCHINV_CLI_PATH) + " " + args + " > /dev/null 2> " + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_file(err)};
}

const char* kCirGood = R"({"schema_version": 1, "model": {"library": "cir", "params": {"kappa": 1, "theta": 0.5}},
  "checker": {"points": 8}})";
const char* kCirBad = R"({"schema_version": 1, "model": {"library": "cir", "params": {"kappa": 1, "theta": -0.5}},
  "checker": {"points": 8}})";
// theta = 0.2, m = 0.5, lambda = 1 violates the drift condition but jumps are declared truncated
const char* kTruncated = R"({"schema_version": 1,
  "model": {"polynomial": {"dim": 1, "drift": {"constant": [0.2], "linear": [[-1]]},
            "covariance": {"linear": [[[1]]]}, "jumps": [{"node": [0.5], "weight": 1}], "tail_bound": 0.05}},
  "domain": {"kind": "orthant", "dim": 1}, "checker": {"points": 4}})";

}  // namespace

TEST(Cli, ExitCodesFollowAggregate) {
  const auto out = scratch() / "good.json";
  EXPECT_EQ(cli("check --config " + write_file("good_cfg.json", kCirGood).string() + " --out " + out.string()).code, 0);
  EXPECT_EQ(json::parse(read_file(out))["aggregate"], "invariant");
  EXPECT_EQ(cli("check --config " + write_file("bad_cfg.json", kCirBad).string()).code, 2);
  EXPECT_EQ(cli("check --config " + write_file("trunc_cfg.json", kTruncated).string()).code, 3);
}

TEST(Cli, MalformedJsonIsAnError) {
  const auto r = cli("check --config " + write_file("broken.json", "{\"schema_version\": 1,").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("malformed JSON"), std::string::npos);
}

TEST(Cli, UnknownKeyIsNamed) {
  const auto r = cli("check --config " +
                     write_file("typo.json", R"({"schema_version": 1, "model": {"library": "cir"},
                                                 "checker": {"pointz": 3}})")
                         .string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("unknown key 'checker.pointz'"), std::string::npos) << r.err;
}

TEST(Cli, SchemaVersionAndMissingFile) {
  EXPECT_EQ(cli("check --config " + write_file("v2.json", R"({"schema_version": 2, "model": {"library": "cir"}})").string()).code, 1);
  EXPECT_EQ(cli("check --config " + (scratch() / "missing.json").string()).code, 1);
  EXPECT_EQ(cli("frobnicate --config x").code, 1);
}

TEST(Cli, ReportsAreByteIdenticalAcrossRunsAndThreads) {
  const auto cfg = write_file("affine.json", R"({"schema_version": 1,
    "model": {"library": "affine_orthant_2d", "params": {"b1": -0.5}}, "checker": {"points": 24}})");
  const auto a = scratch() / "a.json", b = scratch() / "b.json", c = scratch() / "c.json";
  EXPECT_EQ(cli("check --config " + cfg.string() + " --out " + a.string()).code, 2);
  EXPECT_EQ(cli("check --config " + cfg.string() + " --out " + b.string()).code, 2);
  EXPECT_EQ(cli("check --config " + cfg.string() + " --threads 4 --out " + c.string()).code, 2);
  EXPECT_EQ(read_file(a), read_file(b));
  EXPECT_EQ(read_file(a), read_file(c));
}

TEST(Cli, FlagsOverrideConfig) {
  const auto cfg = write_file("flags.json", kCirGood);
  const auto out = scratch() / "flags_out.json";
  EXPECT_EQ(cli("check --config " + cfg.string() + " --points 3 --tol-drift 1e-4 --out " + out.string()).code, 0);
  const json j = json::parse(read_file(out));
  EXPECT_EQ(j["meta"]["requested_points"], 3);
  EXPECT_EQ(j["config"]["tol_drift"], 1e-4);
}

TEST(Cli, SimulateWritesCsvAndStatistics) {
  const auto csv = scratch() / "path.csv";
  const auto cfg = write_file("sim.json", R"({"schema_version": 1, "model": {"library": "cir_jumps"},
    "simulation": {"T": 0.1, "dt": 0.01, "paths": 20, "x0": [1.0], "csv": ")" + csv.string() + R"("}})");
  const auto out = scratch() / "sim_out.json";
  EXPECT_EQ(cli("simulate --config " + cfg.string() + " --out " + out.string()).code, 0);
  const json j = json::parse(read_file(out));
  EXPECT_EQ(j["statistics"]["paths"], 20);
  const std::string text = read_file(csv);
  EXPECT_EQ(text.substr(0, text.find('\n')), "t,x1,jump_flag");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 12);  // header + 11 grid points
}

TEST(Cli, ConvertRoundTrip) {
  const auto cfg = write_file("conv.json", R"({"schema_version": 1, "model": {"library": "cir_jumps",
    "params": {"m": 1.5, "lambda": 0.5}}, "convert": {"identity_radius": 0.5}})");
  const auto out = scratch() / "triplet.json";
  ASSERT_EQ(cli("convert --config " + cfg.string() + " --out " + out.string()).code, 0);
  json trip = json::parse(read_file(out));
  ASSERT_TRUE(trip.contains("triplet"));
  // m = 1.5 is beyond 2 * 0.5, so h(m) = 0 and b~ = b - lambda m
  EXPECT_NEAR(trip["triplet"]["b_tilde"]["constant"][0].get<double>(), 1.0 - 0.75, 1e-15);

  json back_cfg = {{"schema_version", 1}, {"model", {{"triplet", trip["triplet"]}}}};
  const auto cfg2 = write_file("conv2.json", back_cfg.dump());
  const auto out2 = scratch() / "model.json";
  ASSERT_EQ(cli("convert --config " + cfg2.string() + " --out " + out2.string()).code, 0);
  const json poly = json::parse(read_file(out2));
  const auto original = build("cir_jumps", {{"m", 1.5}, {"lambda", 0.5}}).model;
  const auto restored = model_from_json({{"polynomial", poly["polynomial"]}}).model;
  for (double x : {0.0, 0.3, 2.0}) {
    const Vec v = Vec::Constant(1, x);
    EXPECT_NEAR(restored.drift(v)(0), original.drift(v)(0), 1e-12);
    EXPECT_NEAR(restored.covariance(v)(0, 0), original.covariance(v)(0, 0), 1e-12);
  }
}

TEST(Cli, CrosscheckFlagsNoDisagreementForCir) {
  const auto cfg = write_file("cross.json", R"({"schema_version": 1, "model": {"library": "cir", "params": {"theta": -0.5}},
    "checker": {"points": 4}, "simulation": {"T": 0.5, "dt": 0.01, "paths": 100}})");
  const auto out = scratch() / "cross_out.json";
  EXPECT_EQ(cli("crosscheck --config " + cfg.string() + " --out " + out.string()).code, 2);
  const json j = json::parse(read_file(out));
  EXPECT_FALSE(j["disagreement"].get<bool>());
  EXPECT_GE(j["probe"]["max"].get<double>(), 0.25);
}

TEST(Config, ParseRejectsBadTypes) {
  try {
    parse_config_text(R"({"schema_version": 1, "seed": -3})");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Schema);
  }
  try {
    resolve(parse_config_text(R"({"schema_version": 1, "model": {"polynomial": {"dim": 1,
      "drift": {"constant": [0]}, "covariance": {}}}})"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Schema);
    EXPECT_NE(std::string(e.what()).find("domain"), std::string::npos);
  }
}

TEST(Config, DomainKinds) {
  const std::vector<std::string> docs = {
      R"({"kind": "halfspace", "a": [1, 0], "c": 0})",
      R"({"kind": "box", "lo": [0, 0], "hi": [1, 1]})",
      R"({"kind": "ball", "center": [0, 0], "radius": 1})",
      R"({"kind": "simplex", "dim": 2})",
      R"({"kind": "smooth_sublevel", "P": [[1, 0], [0, 1]], "q": [0, 0], "r": -1})",
      R"({"kind": "product", "factors": [{"kind": "orthant", "dim": 1}, {"kind": "whole_space", "dim": 1}]})"};
  for (const auto& d : docs) {
    const auto D = domain_from_json(json::parse(d));
    EXPECT_EQ(D.dim(), 2) << d;
  }
  EXPECT_THROW(domain_from_json(json::parse(R"({"kind": "torus", "dim": 2})")), Error);
}
