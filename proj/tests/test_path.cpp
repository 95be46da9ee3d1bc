#include <doctest.h>

#include <cmath>

#include "isgd/data_io.hpp"
#include "isgd/path.hpp"

using namespace isgd;
using Obj = Objective<double>;
using Vec = Vector<double>;

TEST_CASE("lambda_grid examples") {
  DataSummary s;
  s.n = 4;
  s.xty = Vec::Constant(1, 30.0);

  PathConfig one;
  one.n_lambda = 1;
  CHECK(lambda_grid(s, 1.0, one) == std::vector<double>{7.5});

  PathConfig three;
  three.n_lambda = 3;
  three.lambda_min_ratio = 0.01;
  const auto g = lambda_grid(s, 1.0, three);
  REQUIRE(g.size() == 3);
  CHECK(g[0] == 7.5);
  CHECK(g[1] == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(g[2] == 7.5 * 0.01);
}

TEST_CASE("lambda_max for the single-column toy") {
  Dataset<double> d;
  d.y = Vec(4);
  d.y << 1, -2, 3, 0.5;
  d.x = d.y;
  MemorySource src(d, 3);
  const auto s = summarize(src);
  PathConfig cfg;
  cfg.n_lambda = 1;
  CHECK(lambda_grid(s, 1.0, cfg)[0] == doctest::Approx(d.y.squaredNorm() / 4));
  CHECK(lambda_grid(s, 0.5, cfg)[0] == doctest::Approx(d.y.squaredNorm() / 2));
}

TEST_CASE("lambda_grid validation and monotonicity") {
  DataSummary s;
  s.n = 10;
  s.xty = Vec::Constant(3, -2.0);
  PathConfig cfg;
  CHECK_THROWS_AS(lambda_grid(s, 0.0, cfg), Error);
  cfg.lambda_max = 3.0;
  const auto g = lambda_grid(s, 0.0, cfg);
  CHECK(g.front() == 3.0);
  CHECK(g.back() == 3.0 * 1e-3);
  CHECK(g.size() == 100);
  for (std::size_t k = 1; k < g.size(); ++k) CHECK(g[k] < g[k - 1]);

  PathConfig bad;
  bad.lambda_min_ratio = 1.0;
  CHECK_THROWS_AS(lambda_grid(s, 1.0, bad), Error);
}

TEST_CASE("path shrinks toward zero at lambda_max") {
  const auto sim = simulate_lasso(1000, 100, 0.0, 3.0, 5);
  auto make = [&] { return MemorySource(sim.data, 1000); };
  PathConfig cfg;
  cfg.n_lambda = 5;
  cfg.lambda_min_ratio = 1e-3;
  FitConfig<double> fc;
  fc.passes = 2;
  fc.shuffle = true;
  ScheduleConfig<double> sched;
  sched.gamma0 = 1.0;
  sched.a = 0.01;
  const auto path = run_path(make, Obj::gaussian(), sched, cfg, fc);
  REQUIRE(path.entries.size() == 5);
  for (const auto& e : path.entries) REQUIRE(e.status == "ok");
  CHECK(path.entries.front().result->estimate.norm() <
        path.entries.back().result->estimate.norm());
  CHECK(format_path_table(path).find("lambda") != std::string::npos);
}

TEST_CASE("single-lambda path reduces to fit") {
  const auto sim = simulate_lasso(300, 5, 0.2, 3.0, 9);
  auto make = [&] { return MemorySource(sim.data, 64); };
  PathConfig cfg;
  cfg.n_lambda = 1;
  FitConfig<double> fc;
  fc.seed = 4;
  fc.shuffle = true;
  ScheduleConfig<double> sched;
  const auto path = run_path(make, Obj::gaussian(), sched, cfg, fc);
  auto src = make();
  const auto direct =
      fit(src, Obj::gaussian(), sched, Penalty<double>(1.0, path.grid[0]), fc);
  CHECK(path.entries[0].result->estimate == direct.estimate);
}

TEST_CASE("warm and cold starts agree on a convex problem") {
  const auto sim = simulate_lasso(2000, 10, 0.0, 3.0, 21);
  auto make = [&] { return MemorySource(sim.data, 2000); };
  PathConfig cfg;
  cfg.n_lambda = 4;
  cfg.lambda_min_ratio = 0.01;
  FitConfig<double> fc;
  fc.passes = 30;
  fc.shuffle = true;
  ScheduleConfig<double> sched;
  sched.gamma0 = 1.0;
  sched.a = 0.01;
  const auto warm = run_path(make, Obj::gaussian(), sched, cfg, fc);
  cfg.warm_start = false;
  const auto cold = run_path(make, Obj::gaussian(), sched, cfg, fc);
  cfg.parallel = 3;
  const auto par = run_path(make, Obj::gaussian(), sched, cfg, fc);
  for (std::size_t k = 0; k < warm.entries.size(); ++k) {
    const Vec& w = warm.entries[k].result->estimate;
    const Vec& c = cold.entries[k].result->estimate;
    CHECK((w - c).norm() / std::max(1.0, c.norm()) < 2e-2);
    CHECK(par.entries[k].result->estimate == c);
  }
}

TEST_CASE("a diverging lambda is recorded and the path continues") {
  const auto sim = simulate_lasso(500, 10, 0.0, 3.0, 2);
  auto make = [&] { return MemorySource(sim.data, 500); };
  PathConfig cfg;
  cfg.n_lambda = 3;
  FitConfig<double> fc;
  fc.method = Method::Esgd;
  ScheduleConfig<double> sched;
  sched.gamma0 = 50.0;
  sched.a = 0.01;
  const auto path = run_path(make, Obj::gaussian(), sched, cfg, fc);
  REQUIRE(path.entries.size() == 3);
  for (const auto& e : path.entries) {
    CHECK(e.status == "divergence");
    CHECK_FALSE(e.result.has_value());
  }
  CHECK(format_path_table(path).find("divergence") != std::string::npos);
}
