#include <doctest.h>

#include <cmath>
#include <sstream>

#include "dcftp/error.hpp"
#include "dcftp/stationary_queue.hpp"
#include "support.hpp"

using namespace dcftp;

TEST_CASE("timeline structure") {
  auto qm = make_queue_model(testing::table1(0));
  StationaryQueue sq(qm, 41);
  sq.ensure_horizon(500);
  const auto& tl = sq.timeline();
  REQUIRE(tl.events.size() > 100);
  CHECK(tl.horizon > 500);
  std::vector<std::size_t> arr(2, 0), act(2, 0);
  for (std::size_t k = 0; k < tl.events.size(); ++k) {
    const auto& e = tl.events[k];
    CHECK(e.t < tl.horizon);
    if (k) CHECK(reversed_before(tl.events[k - 1], e));
    if (e.kind == EventKind::Arrival) {
      CHECK(e.index == ++arr[e.station]);
      CHECK(e.t == tl.arrival_epochs[e.station][e.index - 1]);
    } else {
      CHECK(e.index == ++act[e.station]);
      CHECK(e.t == tl.activity_epochs[e.station][e.index - 1]);
      CHECK((e.mark >= 0 && e.mark <= 2));
      CHECK(e.mark != e.station);  // Q has a zero diagonal
      CHECK(e.duration > 0);
    }
  }
  // complete on [0, horizon)
  for (int i = 0; i < 2; ++i) {
    CHECK(tl.arrival_epochs[i].size() > arr[i]);
    CHECK(tl.arrival_epochs[i][arr[i]] >= tl.horizon);
    CHECK(tl.activity_epochs[i][act[i]] >= tl.horizon);
  }
  CHECK(tl.count_until(-1) == 0);
  CHECK(tl.count_until(tl.events[10].t) == 11);
}

TEST_CASE("activity epochs renew at the slowed rate") {
  auto qm = make_queue_model(testing::table1(1));
  StationaryQueue sq(qm, 42);
  const double H = 20000;
  sq.ensure_horizon(H);
  const auto& tl = sq.timeline();
  for (int i = 0; i < 2; ++i) {
    double mu0 = qm->aux.mu0(i);
    double n = static_cast<double>(std::upper_bound(tl.activity_epochs[i].begin(), tl.activity_epochs[i].end(), H) -
                                   tl.activity_epochs[i].begin());
    CHECK(std::abs(n - mu0 * H) < 3 * std::sqrt(mu0 * H));
  }
}

TEST_CASE("reflection identity") {
  RandomStream rng(43);
  for (int seed = 0; seed < 100; ++seed) {
    auto spec = seed % 2 ? testing::table1(seed % 5) : testing::random_stable_spec(rng, 1 + seed % 4);
    auto qm = make_queue_model(spec);
    StationaryQueue sq(qm, static_cast<std::uint64_t>(seed));
    auto p = sq.compute_y_prime(200);
    auto y = StationaryQueue::lindley_from_horizon(p, sq.timeline());
    REQUIRE(y.size() == p.y.size());
    CHECK(y == p.y);
    for (const auto& row : p.y)
      for (long v : row) CHECK(v >= 0);
  }
}

TEST_CASE("backward extension keeps the prefix") {
  auto qm = make_queue_model(testing::table1(2));
  StationaryQueue sq(qm, 44);
  auto p1 = sq.compute_y_prime(100);
  auto p2 = sq.extend_backward(p1, 150);
  CHECK(p2.T == 250);
  REQUIRE(p2.n_events >= p1.n_events);
  for (std::size_t k = 0; k <= p1.n_events; ++k) {
    CHECK(p1.y[k] == p2.y[k]);
    CHECK(p1.x[k] == p2.x[k]);
  }
  StationaryQueue again(qm, 44);
  auto q = again.compute_y_prime(250);
  CHECK(q.y == p2.y);
  CHECK_THROWS_AS(sq.extend_backward(p2, 0), Error);
}

TEST_CASE("value at a fixed time does not depend on the horizon") {
  auto qm = make_queue_model(testing::table1(3));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    StationaryQueue sq(qm, seed);
    auto y0 = sq.y_prime_at(30);
    auto p = sq.compute_y_prime(300);
    std::size_t k = sq.timeline().count_until(30);
    CHECK(p.y[k] == y0);
  }
}

TEST_CASE("starred suprema") {
  auto qm = make_queue_model(testing::table1(0));
  StationaryQueue sq(qm, 45);
  sq.ensure_horizon(400);
  std::vector<double> prev_dep;
  for (double u = 0; u < 300; u += 5) {
    auto s = sq.eval_starred(u);
    for (int i = 0; i < 2; ++i) {
      double sum = s.arrival[i] + s.departure[i];
      for (int j = 0; j < 2; ++j) sum += s.routed[j][i];
      CHECK(s.z[i] == doctest::Approx(sum).epsilon(1e-12));
    }
    if (!prev_dep.empty())
      for (int i = 0; i < 2; ++i) CHECK(s.departure[i] <= prev_dep[i] + 1e-9);
    prev_dep = s.departure;
  }
  CHECK_THROWS_AS(sq.eval_starred(sq.timeline().horizon + 1, Counts(2)), Error);
}

TEST_CASE("single station stationary law") {
  // Poisson arrivals against Poisson potential services: Geometric marginal.
  auto qm = make_queue_model(testing::mm1(0.5, 1.0));
  double rho = 0.5 / qm->aux.mu0(0);
  double want = rho / (1 - rho);
  double sd = std::sqrt(rho) / (1 - rho);
  const int n = 4000;
  double sum = 0;
  for (int seed = 0; seed < n; ++seed) {
    StationaryQueue sq(qm, mix_seed(46, seed));
    sum += static_cast<double>(sq.y_prime_at(0)[0]);
  }
  CHECK(std::abs(sum / n - want) < 3 * sd / std::sqrt(n));
}

TEST_CASE("diagnostic dump") {
  auto qm = make_queue_model(testing::table1(0));
  StationaryQueue sq(qm, 47);
  auto p = sq.compute_y_prime(20);
  std::ostringstream os;
  sq.dump_csv(os, p);
  std::string s = os.str();
  CHECK(s.rfind("k,t,y1,y2,x1,x2,z1,z2\n", 0) == 0);
  CHECK(static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')) == p.n_events + 2);
}
