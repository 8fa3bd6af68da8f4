#include <gtest/gtest.h>

#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "mabo/comm_graph.hpp"
#include "mabo/csv.hpp"
#include "mabo/error.hpp"
#include "mabo/rng.hpp"

namespace mabo {
namespace {

TEST(FormatDouble, RoundTripsExactly) {
  RandomStream rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double x = std::ldexp(rng.uniform(-1, 1), static_cast<int>(rng.next_u64() % 200) - 100);
    const std::string s = format_double(x);
    double back = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), back);
    EXPECT_EQ(back, x) << s;
  }
}

TEST(FormatDouble, SpecialValues) {
  EXPECT_EQ(format_double(0.0), "0");
  EXPECT_EQ(format_double(-0.0), "0");
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(-2.5), "-2.5");
  EXPECT_EQ(format_double(std::numeric_limits<double>::quiet_NaN()), "nan");
  EXPECT_EQ(format_double(-std::numeric_limits<double>::infinity()), "-inf");
}

TEST(CsvWriter, WritesHeaderAndRows) {
  std::ostringstream out;
  CsvWriter csv(out, {"t", "x", "flag", "name"});
  csv.field(std::size_t{3}).field(0.25).field(true).field("a");
  csv.end_row();
  EXPECT_EQ(out.str(), "t,x,flag,name\n3,0.25,1,a\n");
  csv.field(1);
  EXPECT_THROW(csv.end_row(), InternalError);
  csv.field(2).field(3).field(4);
  EXPECT_THROW(csv.field(5), InternalError);
}

TEST(RandomStream, NamedStreamsAreIndependentAndStable) {
  RandomStream a = RandomStream::named(5, "reward_function");
  RandomStream b = RandomStream::named(5, "reward_function");
  RandomStream c = RandomStream::named(5, "observation_noise");
  RandomStream d = RandomStream::named(6, "reward_function");
  const auto first = a.next_u64();
  EXPECT_EQ(first, b.next_u64());
  EXPECT_NE(first, c.next_u64());
  EXPECT_NE(first, d.next_u64());
}

TEST(RandomStream, UniformAndNormalMoments) {
  RandomStream rng(7);
  const int n = 200000;
  double sum = 0.0;
  double sq = 0.0;
  double usum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
    const double u = rng.uniform(2.0, 4.0);
    ASSERT_GE(u, 2.0);
    ASSERT_LT(u, 4.0);
    usum += u;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.01);
  EXPECT_NEAR(usum / n, 3.0, 0.01);
}

TEST(Hashing, KnownValues) {
  EXPECT_EQ(fnv1a64(""), 0xCBF29CE484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xAF63DC4C8601EC8CULL);
  EXPECT_EQ(splitmix64(0), 0xE220A8397B1DCDAFULL);
}

TEST(CommGraph, Topologies) {
  const CommGraph path = CommGraph::path(4);
  EXPECT_EQ(path.num_edges(), 3u);
  EXPECT_EQ(path.closed_neighborhood(1), (std::vector<AgentId>{1, 2}));
  EXPECT_EQ(path.closed_neighborhood(3), (std::vector<AgentId>{2, 3, 4}));
  EXPECT_TRUE(path.connected(2, 3));
  EXPECT_FALSE(path.connected(1, 3));
  EXPECT_EQ(CommGraph::complete(8).num_edges(), 28u);
  EXPECT_EQ(CommGraph::empty(3).closed_neighborhood(2), (std::vector<AgentId>{2}));
  EXPECT_THROW(path.neighbors(5), std::exception);
  CommGraph g(3);
  EXPECT_THROW(g.add_edge(1, 1), std::exception);
}

}  // namespace
}  // namespace mabo
