#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "isgd/diagnostics.hpp"
#include "scratch.hpp"

using namespace isgd;
using Obj = Objective<double>;
using Vec = Vector<double>;

namespace {
Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}
}  // namespace

TEST_CASE("predict examples") {
  CHECK(predict(Obj::binomial(), Vec(Vec::Zero(3)), vec({4, -1, 2})) == 0.5);
  CHECK(predict(Obj::gaussian(), vec({1, 2}), vec({3, 4})) == 11.0);
  CHECK(predict(Obj::poisson(), Vec(Vec::Zero(2)), vec({7, 7})) == 1.0);
  CHECK(predict(Obj::huber(1.0), vec({1, 2}), vec({3, 4})) == 11.0);
  CHECK_THROWS_AS(predict(Obj::gaussian(), vec({1, 2}), vec({3})), Error);
}

TEST_CASE("predict equals transfer of the linear predictor for GLMs") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd;
  for (const auto& spec : {Obj::gaussian(), Obj::binomial(), Obj::poisson()}) {
    for (int i = 0; i < 200; ++i) {
      Vec t(3), x(3);
      for (Index j = 0; j < 3; ++j) {
        t(j) = nd(rng);
        x(j) = nd(rng);
      }
      CHECK(predict(spec, t, x) == spec.transfer(x.dot(t)));
    }
  }
}

TEST_CASE("mse_to_truth examples") {
  const Vec t = vec({0.3, -2, 5});
  CHECK(mse_to_truth(t, t) == 0.0);
  CHECK(mse_to_truth(vec({1, 1}), vec({0, 0})) == 1.0);
  const Vec z = Vec::Zero(3);
  CHECK(mse_to_truth(Vec(2.5 * t), z) == doctest::Approx(6.25 * mse_to_truth(t, z)));
  CHECK_THROWS_AS(mse_to_truth(t, Vec(Vec::Zero(2))), Error);
}

TEST_CASE("classification_error") {
  Dataset<double> d;
  d.x.resize(4, 1);
  d.x << 1, -1, 2, -3;
  d.y = vec({1, 0, 1, 0});
  const auto spec = Obj::binomial();
  CHECK(classification_error(spec, vec({1}), d) == 0.0);
  CHECK(classification_error(spec, vec({-1}), d) == 1.0);
  CHECK_THROWS_AS(classification_error(Obj::gaussian(), vec({1}), d), Error);

  Dataset<double> empty;
  empty.x.resize(0, 1);
  empty.y.resize(0);
  try {
    classification_error(spec, vec({1}), empty);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidInput);
  }
}

TEST_CASE("classification_error on random labels is near one half and order invariant") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> nd;
  std::bernoulli_distribution coin(0.5);
  Dataset<double> d;
  d.x.resize(10000, 5);
  d.y.resize(10000);
  for (Index i = 0; i < 10000; ++i) {
    for (Index j = 0; j < 5; ++j) d.x(i, j) = nd(rng);
    d.y(i) = coin(rng) ? 1 : 0;
  }
  Vec theta(5);
  for (Index j = 0; j < 5; ++j) theta(j) = nd(rng);
  const double err = classification_error(Obj::binomial(), theta, d);
  CHECK(std::abs(err - 0.5) < 0.05);

  std::vector<Index> perm(10000);
  std::iota(perm.begin(), perm.end(), Index(0));
  std::shuffle(perm.begin(), perm.end(), rng);
  Dataset<double> shuffled = d;
  for (Index i = 0; i < 10000; ++i) {
    shuffled.x.row(i) = d.x.row(perm[std::size_t(i)]);
    shuffled.y(i) = d.y(perm[std::size_t(i)]);
  }
  CHECK(classification_error(Obj::binomial(), theta, shuffled) == err);
}

TEST_CASE("convergence_check examples") {
  std::vector<Vec> constant(6, vec({1, 2}));
  CHECK(convergence_check<double>(constant, 1e-12, 5));

  std::vector<Vec> alternating;
  for (int i = 0; i < 10; ++i) alternating.push_back(vec({i % 2 ? 1.0 : -1.0}));
  CHECK_FALSE(convergence_check<double>(alternating, 1e-3, 3));

  std::vector<Vec> decay;
  int first_true = -1;
  for (int n = 0; n < 40; ++n) {
    decay.push_back(vec({1.0 + std::ldexp(1.0, -n)}));
    if (first_true < 0 && convergence_check<double>(decay, 1e-6, 5)) first_true = n;
  }
  // Steps 2^-(n) fall below 1e-6 relative (norm ~1) from n = 20 on.
  CHECK(first_true == 24);

  CHECK_FALSE(convergence_check<double>(std::vector<Vec>(3, vec({1})), 1e-3, 5));
  CHECK_THROWS_AS(convergence_check<double>(constant, 1e-3, 0), Error);
}

TEST_CASE("ConvergenceMonitor agrees with convergence_check") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  std::vector<Vec> history{vec({0, 0})};
  ConvergenceMonitor mon(1e-3, 4);
  for (int n = 1; n < 300; ++n) {
    const double scale = n < 100 ? 1.0 : 1e-5;
    history.push_back(history.back() + scale * vec({nd(rng), nd(rng)}));
    mon.push(detail::relative_change(history[history.size() - 2], history.back()));
    CHECK(mon.converged() == convergence_check<double>(history, 1e-3, 4));
  }
}

TEST_CASE("trace CSV format") {
  ScratchDir dir("trace");
  const auto path = dir.file("t.csv");
  write_trace_csv(path, {{10, "mse", 0.25}, {20, "mse", 0.1}});
  CHECK(slurp(path) == "update_index,metric,value\n10,mse,0.25\n20,mse,0.1\n");
}
