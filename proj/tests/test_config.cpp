#include <gtest/gtest.h>

#include "common.hpp"

using namespace kvmms;

namespace {

const std::string kMinimal = "schema_version = 1\n";

}

TEST(Config, ReferenceFileMatchesCompiledScenario)
{
  const RunConfig f = load_run_config(std::string(KVMMS_SOURCE_DIR) + "/configs/ref_small_strain.toml");
  const RunConfig r = reference_config();
  EXPECT_EQ(f.scenario, r.scenario);
  EXPECT_EQ(f.seed, r.seed);
  EXPECT_EQ(nlohmann::json(to_json(f.material)), nlohmann::json(to_json(r.material)));
  EXPECT_EQ(f.grid_n, r.grid_n);
  EXPECT_EQ(f.mms.tau, r.mms.tau);
  EXPECT_EQ(f.mms.T, r.mms.T);
  EXPECT_EQ(f.mms.inner_tol, r.mms.inner_tol);
  EXPECT_EQ(f.mms.inner_max_iters, r.mms.inner_max_iters);
  EXPECT_EQ(f.small_strain.delta, r.small_strain.delta);
  EXPECT_EQ(f.small_strain.M_prime, r.small_strain.M_prime);
  EXPECT_EQ(f.small_strain.uhat.c, r.small_strain.uhat.c);
  EXPECT_EQ(f.small_strain.ftilde.c, r.small_strain.ftilde.c);
  EXPECT_EQ(f.small_strain.u0_bulk.c, r.small_strain.u0_bulk.c);
  EXPECT_EQ(f.slope.tol, r.slope.tol);
  ASSERT_EQ(f.decay.presets.size(), r.decay.presets.size());
  for (std::size_t i = 0; i < f.decay.presets.size(); ++i) {
    EXPECT_EQ(f.decay.presets[i].p_tilde, r.decay.presets[i].p_tilde);
    EXPECT_EQ(f.decay.presets[i].A_scale, r.decay.presets[i].A_scale);
  }
  EXPECT_EQ(f.decay.tau, r.decay.tau);
  EXPECT_EQ(f.decay.T, r.decay.T);
  EXPECT_EQ(f.propcheck.grids, r.propcheck.grids);
  EXPECT_EQ(f.propcheck.samples.count, r.propcheck.samples.count);
  EXPECT_EQ(f.propcheck.samples.amplitude, r.propcheck.samples.amplitude);
  EXPECT_EQ(f.convergence.taus, r.convergence.taus);
}

TEST(Config, MinimalConfigUsesDefaults)
{
  const auto rc = run_config_from(ConfigDoc::parse_string(kMinimal));
  EXPECT_EQ(rc.grid_n, 9);
  EXPECT_EQ(rc.material.p, 4.0);
}

TEST(Config, ValuesAndComments)
{
  const auto doc = ConfigDoc::parse_string(
      "a = 1.5 # trailing\n[s]\nb = \"x # not a comment\"\nc = [1, 2.5, -3e-2]\nd = true\n");
  EXPECT_EQ(doc.number("a"), 1.5);
  EXPECT_EQ(doc.string("s.b"), "x # not a comment");
  EXPECT_EQ(doc.array("s.c"), (std::vector<double>{1, 2.5, -3e-2}));
  EXPECT_TRUE(doc.boolean("s.d"));
  EXPECT_THROW(doc.string("a"), ConfigError);
  EXPECT_THROW(doc.number("missing"), ConfigError);
}

TEST(Config, RejectsUnknownKeys)
{
  EXPECT_THROW(run_config_from(ConfigDoc::parse_string(kMinimal + "[mms]\ntau = 0.1\ntua = 0.2\n")), ConfigError);
  EXPECT_THROW(run_config_from(ConfigDoc::parse_string(kMinimal + "[bogus]\nx = 1\n")), ConfigError);
}

TEST(Config, RejectsSchemaProblems)
{
  EXPECT_THROW(run_config_from(ConfigDoc::parse_string("[grid]\nn = 9\n")), ConfigError);
  EXPECT_THROW(run_config_from(ConfigDoc::parse_string("schema_version = 2\n")), ConfigError);
}

TEST(Config, RejectsMalformedSyntax)
{
  EXPECT_THROW(ConfigDoc::parse_string("[unterminated\n"), ConfigError);
  EXPECT_THROW(ConfigDoc::parse_string("novalue\n"), ConfigError);
  EXPECT_THROW(ConfigDoc::parse_string("a = 1\na = 2\n"), ConfigError);
  EXPECT_THROW(ConfigDoc::parse_string("a = 1x\n"), ConfigError);
  EXPECT_THROW(ConfigDoc::parse_string("a = \"open\n"), ConfigError);
  EXPECT_THROW(ConfigDoc::parse_string("[s]\n[s]\n"), ConfigError);
}

TEST(Config, RejectsInvalidValues)
{
  EXPECT_THROW(run_config_from(ConfigDoc::parse_string(kMinimal + "[material]\nq = 3\n")), ValidationError);
  EXPECT_THROW(run_config_from(ConfigDoc::parse_string(kMinimal + "[grid]\nn = 3\n")), std::invalid_argument);
  EXPECT_THROW(run_config_from(ConfigDoc::parse_string(kMinimal + "[grid]\nn = 9.5\n")), ConfigError);
  EXPECT_THROW(run_config_from(ConfigDoc::parse_string(kMinimal + "[mms]\ntau = -1\n")), ValidationError);
  EXPECT_THROW(run_config_from(ConfigDoc::parse_string(kMinimal + "[material]\nA = [1, 0, 0]\n")), ConfigError);
  EXPECT_THROW(run_config_from(ConfigDoc::parse_string(kMinimal + "[decay]\np_tilde = [2]\nA_scale = [1, 2]\n")),
               ConfigError);
  EXPECT_THROW(run_config_from(ConfigDoc::parse_string(kMinimal + "[small_strain]\nuhat_x = [1, 2]\n")), ConfigError);
}

TEST(Config, MissingFile)
{
  EXPECT_THROW(load_run_config("/nonexistent/kvmms.toml"), ConfigError);
}
