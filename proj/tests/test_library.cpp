#include <gtest/gtest.h>

#include <random>

#include "stochinv/checker.hpp"
#include "stochinv/library.hpp"

using namespace stochinv;

namespace {

// Closed-form invariance conditions, written out independently of the library.
bool oracle(const std::string& name, const ParamMap& p) {
  auto get = [&](const char* k, double dflt) {
    auto it = p.find(k);
    return it == p.end() ? dflt : it->second;
  };
  if (name == "cir") return get("kappa", 1) * get("theta", 1) >= 0;
  if (name == "cir_jumps")
    return get("m", 0.5) >= 0 && get("kappa", 1) * get("theta", 1) >= get("lambda", 1) * get("m", 0.5);
  if (name == "jacobi") {
    const double k = get("kappa", 1), t = get("theta", 0.5);
    return k * t >= 0 && k * (1 - t) >= 0;
  }
  if (name == "affine_orthant_2d")
    return get("b1", 0.5) >= 0 && get("b2", 0.5) >= 0 && get("B12", 0.5) >= 0 && get("B21", 0.5) >= 0;
  if (name == "heston_like") return get("kappa", 1) * get("theta", 0.5) >= 0;
  return true;
}

}  // namespace

TEST(Library, NamesBuildWithDefaults) {
  for (const auto& name : library_names()) {
    const auto lm = build(name);
    EXPECT_EQ(lm.name, name);
    EXPECT_EQ(lm.model.dim, lm.domain.dim()) << name;
    EXPECT_TRUE(lm.oracle) << name;
    EXPECT_FALSE(lm.provenance.empty()) << name;
  }
}

TEST(Library, UnknownNameAndParameterRejected) {
  try {
    build("heston");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
  }
  try {
    build("cir", {{"kapa", 1.0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
    EXPECT_NE(std::string(e.what()).find("kapa"), std::string::npos);
  }
}

TEST(Library, OracleExamples) {
  EXPECT_TRUE(build("cir", {{"kappa", 1}, {"theta", 0.5}}).oracle);
  EXPECT_FALSE(build("cir", {{"kappa", 1}, {"theta", -0.5}}).oracle);
  EXPECT_FALSE(build("jacobi", {{"kappa", 1}, {"theta", 1.5}}).oracle);
  EXPECT_TRUE(build("cir_jumps", {{"kappa", 1}, {"theta", 1}, {"m", 0.5}, {"lambda", 2}}).oracle);
  EXPECT_FALSE(build("cir_jumps", {{"kappa", 1}, {"theta", 1}, {"m", 0.5}, {"lambda", 2.5}}).oracle);
  EXPECT_FALSE(build("affine_orthant_2d", {{"B12", -0.1}}).oracle);
}

TEST(Library, OracleMatchesIndependentConditions) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> U(-1.5, 1.5);
  for (int s = 0; s < 200; ++s) {
    const std::vector<std::pair<std::string, ParamMap>> cases = {
        {"cir", {{"kappa", U(rng)}, {"theta", U(rng)}}},
        {"cir_jumps", {{"kappa", U(rng)}, {"theta", U(rng)}, {"m", U(rng)}, {"lambda", std::abs(U(rng)) + 0.1}}},
        {"jacobi", {{"kappa", U(rng)}, {"theta", U(rng)}}},
        {"affine_orthant_2d", {{"b1", U(rng)}, {"b2", U(rng)}, {"B12", U(rng)}, {"B21", U(rng)}}},
        {"heston_like", {{"kappa", U(rng)}, {"theta", U(rng)}}}};
    for (const auto& [name, params] : cases) EXPECT_EQ(build(name, params).oracle, oracle(name, params)) << name;
  }
}

TEST(Library, CheckerAgreesAwayFromBoundary) {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> U(-1.5, 1.5);
  int compared = 0;
  for (int s = 0; s < 40; ++s) {
    const std::vector<std::pair<std::string, ParamMap>> cases = {
        {"cir", {{"kappa", U(rng)}, {"theta", U(rng)}}},
        {"cir_jumps", {{"kappa", U(rng)}, {"theta", U(rng)}, {"m", U(rng)}, {"lambda", std::abs(U(rng)) + 0.1}}},
        {"jacobi", {{"kappa", U(rng)}, {"theta", U(rng)}}},
        {"affine_orthant_2d", {{"b1", U(rng)}, {"b2", U(rng)}, {"B12", U(rng)}, {"B21", U(rng)}}},
        {"heston_like", {{"kappa", U(rng)}, {"theta", U(rng)}}}};
    for (const auto& [name, params] : cases) {
      const auto lm = build(name, params);
      if (std::abs(lm.oracle_margin) < 1e-6) continue;
      const auto rep = check_domain(lm.model, lm.domain, 16);
      EXPECT_EQ(rep.aggregate == Aggregate::Invariant, oracle(name, params)) << name;
      ++compared;
    }
  }
  EXPECT_GT(compared, 150);
}

TEST(Library, DimensionParameter) {
  EXPECT_EQ(build("bm", {{"d", 4}}).model.dim, 4);
  EXPECT_THROW(build("bm", {{"d", 1.5}}), Error);
  EXPECT_THROW(build("bm", {{"d", 0}}), Error);
}
