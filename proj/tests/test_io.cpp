#include <gtest/gtest.h>

#include <sstream>

#include "common.hpp"

using namespace kvmms;

TEST(Io, Fmt17RoundTrips)
{
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, static_cast<double>(i % 30 - 15));
    EXPECT_EQ(std::stod(fmt17(v)), v);
  }
}

TEST(Io, CheckpointRoundTripIsBitExact)
{
  const auto s = kvmms::testing::reference_setting();
  std::mt19937_64 rng(72);
  const auto y = kvmms::testing::perturb(s.y0, rng, 0.05);
  std::stringstream ss;
  write_checkpoint(ss, Checkpoint{y, 1.5, 0.25, 25});
  EXPECT_EQ(ss.str().size(), 8u + 4 + 4 + 8 + 8 + 8 + 8 * y.displacement().size());
  EXPECT_EQ(ss.str().substr(0, 8), "KVMSFLD1");
  const auto c = read_checkpoint(ss);
  EXPECT_EQ(c.y.displacement(), y.displacement());
  EXPECT_EQ(c.y.grid(), y.grid());
  EXPECT_EQ(c.p_tilde, 1.5);
  EXPECT_EQ(c.t, 0.25);
  EXPECT_EQ(c.step, 25);
}

TEST(Io, CheckpointRejectsCorruptInput)
{
  std::stringstream bad("NOTAFILE");
  EXPECT_THROW(read_checkpoint(bad), IoError);
  const Grid g(2, 9);
  std::stringstream ss;
  write_checkpoint(ss, Checkpoint{DeformationField::identity(g)});
  std::string s = ss.str();
  s.resize(s.size() - 3);
  std::stringstream cut(s);
  EXPECT_THROW(read_checkpoint(cut), IoError);
}

TEST(Io, TrajectoryCsv)
{
  const auto s = kvmms::testing::reference_setting();
  MmsConfig cfg;
  cfg.tau = 0.1;
  cfg.T = 0.2;
  const auto traj = run(s.adm, s.load, cfg, s.y0);
  std::ostringstream os;
  write_trajectory_csv(os, traj);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "n,t,phi,D_increment,inner_iterations,flag");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, 3);
}

TEST(Io, ParamsJson)
{
  MaterialParams mp;
  mp.A = Mat::diag(2, 3);
  const auto j = to_json(mp);
  EXPECT_EQ(j["p_tilde"], 2.0);
  EXPECT_EQ(j["A"][1][1], 3.0);
  EXPECT_EQ(j.begin().key(), "d");
}
