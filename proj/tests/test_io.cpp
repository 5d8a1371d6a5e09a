#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "helmscat/io.hpp"
#include "helmscat/parallel.hpp"
#include "helmscat/samples.hpp"

using namespace helmscat;

TEST(Digest, KnownSha256Vectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(short_digest("abc"), "ba7816bf8f01cfea");
}

TEST(Numbers, ShortestRoundTrip) {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 1.0, 0.0}) {
    const std::string s = format_double(x);
    EXPECT_EQ(std::stod(s), x) << s;
  }
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(join_doubles({1.0, 0.5, -2.0}), "1,0.5,-2");
}

TEST(Numbers, ParseDoubles) {
  EXPECT_EQ(parse_doubles("1, 2.5,-3e2"), (std::vector<double>{1.0, 2.5, -300.0}));
  EXPECT_THROW(parse_doubles("1,,2"), ConfigError);
  EXPECT_THROW(parse_doubles("1,x"), ConfigError);
  EXPECT_THROW(parse_doubles(""), ConfigError);
}

TEST(Csv, PointValueTable) {
  std::ostringstream os;
  write_point_value_csv(os, "dir_x,dir_y,dir_z,re,im", {Vec3(0, 0, 1), Vec3(1, 0, 0)}, {Complex(0.5, -1), Complex(2, 0)});
  EXPECT_EQ(os.str(), "dir_x,dir_y,dir_z,re,im\n0,0,1,0.5,-1\n1,0,0,2,0\n");
  std::ostringstream bad;
  EXPECT_THROW(write_point_value_csv(bad, "h", {Vec3::Zero()}, {}), InvariantError);
}

TEST(Samples, BindingAndRelativeError) {
  BoundaryField f{Eigen::VectorXcd::Ones(3), "abc"};
  EXPECT_NO_THROW(check_binding(f, "abc", 3, "test"));
  EXPECT_THROW(check_binding(f, "abd", 3, "test"), InvariantError);
  EXPECT_THROW(check_binding(f, "abc", 4, "test"), InvariantError);
  EXPECT_NEAR(max_relative_error({1.0, 2.1}, {1.0, 2.0}), 0.05, 1e-15);
  EXPECT_THROW(max_relative_error({1.0}, {1.0, 2.0}), InvariantError);
}

TEST(Parallel, VisitsEachIndexOnce) {
  for (int threads : {1, 3, 8}) {
    std::vector<std::atomic<int>> hits(101);
    parallel_for(hits.size(), threads, [&](std::size_t i) { hits[i]++; });
    for (auto& h : hits) EXPECT_EQ(h.load(), 1);
  }
  parallel_for(0, 4, [](std::size_t) { FAIL(); });
}

TEST(Parallel, PropagatesWorkerExceptions) {
  EXPECT_THROW(parallel_for(50, 4,
                            [](std::size_t i) {
                              if (i == 37) throw SolverError("boom");
                            }),
               SolverError);
}

TEST(Parallel, EnvironmentFallback) {
  ::setenv("HELM_SCATTER_THREADS", "3", 1);
  EXPECT_EQ(default_thread_count(), 3);
  EXPECT_EQ(resolve_threads(0), 3);
  EXPECT_EQ(resolve_threads(5), 5);
  ::setenv("HELM_SCATTER_THREADS", "zero", 1);
  EXPECT_GE(default_thread_count(), 1);
  ::unsetenv("HELM_SCATTER_THREADS");
  EXPECT_GE(default_thread_count(), 1);
}
