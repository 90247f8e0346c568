#include <doctest.h>

#include <cmath>

#include "dcftp/error.hpp"
#include "dcftp/vacation.hpp"
#include "support.hpp"

using namespace dcftp;

namespace {

TimelineEvent arrival(double t, int i) { return {t, i, EventKind::Arrival, -1, 0, 0}; }
TimelineEvent activity(double t, int i, int mark, double dur = 1) { return {t, i, EventKind::Activity, mark, 0, dur}; }

VacationState state(std::vector<long> yhat, std::vector<int> s) {
  VacationState st;
  st.yhat = std::move(yhat);
  st.s = std::move(s);
  st.residual.assign(st.yhat.size(), 0.0);
  return st;
}

MarkedEventTimeline make_timeline(int d, std::vector<TimelineEvent> ev) {
  MarkedEventTimeline tl;
  tl.d = d;
  tl.arrival_epochs.assign(d, {});
  tl.activity_epochs.assign(d, {});
  tl.marks.assign(d, {});
  for (const auto& e : ev) {
    if (e.kind == EventKind::Arrival)
      tl.arrival_epochs[e.station].push_back(e.t);
    else
      tl.activity_epochs[e.station].push_back(e.t);
  }
  tl.events = std::move(ev);
  tl.horizon = tl.events.empty() ? 1 : tl.events.back().t + 1;
  return tl;
}

}  // namespace

TEST_CASE("empty system without arrivals stays empty") {
  VacationSystem sys(2, state({0, 0}, {0, 0}));
  for (int k = 0; k < 10; ++k) {
    auto r = sys.apply(activity(-k, k % 2, 2), -k);
    REQUIRE(r);
    CHECK_FALSE(r->service);
    CHECK(sys.state().empty());
  }
}

TEST_CASE("arrival during a vacation waits for the vacation to end") {
  VacationSystem sys(1, state({0}, {0}));
  sys.apply(arrival(3, 0), -3);
  CHECK(sys.state().yhat[0] == 1);
  CHECK(sys.state().s[0] == 0);
  CHECK(sys.state().y(0) == 1);
  auto r = sys.apply(activity(2, 0, 1), -2);
  REQUIRE(r);
  CHECK_FALSE(r->service);
  CHECK(sys.state().s[0] == 1);
  CHECK(sys.state().yhat[0] == 0);
  CHECK(sys.state().y(0) == 1);
  r = sys.apply(activity(1, 0, 1), -1);
  CHECK(r->service);
  CHECK(sys.state().empty());
}

TEST_CASE("service completion routes to the mark") {
  VacationSystem sys(2, state({1, 0}, {1, 0}));
  auto r = sys.apply(activity(1, 0, 1), -1);
  CHECK(r->service);
  CHECK(sys.state().yhat == std::vector<long>{0, 1});
  CHECK(sys.state().s == std::vector<int>{1, 0});
  // a vacation ending does not transfer anyone
  r = sys.apply(activity(0.5, 1, 0), -0.5);
  CHECK_FALSE(r->service);
  CHECK(sys.state().yhat == std::vector<long>{0, 0});
  CHECK(sys.state().s == std::vector<int>{1, 1});
}

TEST_CASE("invalid states are rejected") {
  CHECK_THROWS_AS(VacationSystem(2, state({0}, {0})), Error);
  CHECK_THROWS_AS(VacationSystem(1, state({-1}, {0})), Error);
  CHECK_THROWS_AS(VacationSystem(1, state({0}, {2})), Error);
}

TEST_CASE("initial conditions") {
  auto tl = make_timeline(2, {arrival(0.5, 0), activity(1.0, 1, 2), activity(2.0, 0, 1), arrival(3.0, 1)});
  auto top = init_dominating({3, 0}, tl, 2.5);
  CHECK(top.y(0) == 4);
  CHECK(top.y(1) == 1);
  CHECK(top.residual[0] == doctest::Approx(0.5));
  CHECK(top.residual[1] == doctest::Approx(1.5));
  auto bottom = init_empty(tl, 0.8);
  CHECK(bottom.empty());
  CHECK(std::isinf(bottom.residual[0]));
  CHECK(activity_residual(tl, 1, 0.8) == std::nullopt);
  CHECK_THROWS_AS(init_dominating({0, 0}, tl, 10), Error);
}

TEST_CASE("non-preemption and conservation on a sampled timeline") {
  auto qm = make_queue_model(testing::table1(2));
  StationaryQueue sq(qm, 51);
  sq.ensure_horizon(3000);
  const auto& tl = sq.timeline();
  const double T = 2500;
  const std::size_t k0 = tl.count_until(T);
  auto y = sq.y_prime_at(T);
  VacationSystem sys(2, init_dominating(y, tl, T));
  long present = sys.state().y(0) + sys.state().y(1);
  long arrivals = 0, exits = 0;
  for (std::size_t k = k0; k >= 1; --k) {
    const auto& e = tl.events[k - 1];
    auto before = sys.state();
    auto r = sys.apply(e, -e.t);
    for (int i = 0; i < 2; ++i)
      if (before.s[i] != sys.state().s[i]) CHECK((e.kind == EventKind::Activity && e.station == i));
    if (e.kind == EventKind::Arrival) ++arrivals;
    if (r && r->service && r->mark == 2) ++exits;
  }
  CHECK(present + arrivals == exits + sys.state().y(0) + sys.state().y(1));
}

TEST_CASE("extracted services") {
  auto qm = make_queue_model(testing::table1(0));
  StationaryQueue sq(qm, 52);
  const double T = 30000;
  sq.ensure_horizon(T + 1);
  const auto& tl = sq.timeline();
  auto traj = evolve_vacation(tl, init_empty(tl, T), {tl.count_until(T), 0});
  auto seqs = extract_sequences(tl, traj, -T, 0);
  for (int i = 0; i < 2; ++i) {
    long svc = 0, vac = 0;
    bool first = true;
    for (const auto& r : traj.activities) {
      if (r.station != i) continue;
      if (first) {
        first = false;
        continue;
      }
      (r.service ? svc : vac) += 1;
    }
    CHECK(static_cast<long>(seqs.services[i].size()) == svc);
    CHECK(static_cast<long>(seqs.vacations[i].size()) == vac);
    CHECK(seqs.initial_activity[i] > 0);
    // service durations are unbiased draws of the slowed law
    std::vector<double> d;
    for (const auto& s : seqs.services[i]) d.push_back(s.duration);
    REQUIRE(d.size() > 2000);
    double m = testing::mean_of(d);
    double want = qm->aux.a(i) / 1.0;
    double se = want / std::sqrt(static_cast<double>(d.size()));
    CHECK(std::abs(m - want) < 3 * se);
    std::size_t n_arr = 0;
    for (const auto& e : tl.events)
      if (e.t < T && e.kind == EventKind::Arrival && e.station == i) ++n_arr;
    CHECK(seqs.arrivals[i].size() == n_arr);
  }
}

TEST_CASE("coalescence position") {
  auto tl = make_timeline(1, {activity(1, 0, 1), activity(2, 0, 1), activity(3, 0, 1)});
  auto tr = evolve_vacation(tl, state({1}, {0}), {3, 0});
  REQUIRE(tr.y.size() == 3);
  CHECK(tr.y[0] == std::vector<long>{1});  // vacation ends, the waiting customer starts
  CHECK(tr.y[1] == std::vector<long>{0});
  CHECK(tr.y[2] == std::vector<long>{0});
  REQUIRE(tr.coalescence);
  CHECK(*tr.coalescence == 1);
  CHECK(tr.t[0] == -3);
  CHECK_FALSE(tr.activities[0].service);
  CHECK(tr.activities[1].service);
}

TEST_CASE("dominance reports") {
  std::vector<std::vector<long>> up = {{2, 1}, {1, 1}}, low = {{2, 0}, {2, 1}};
  auto r = check_componentwise(up, low, {0.0, 1.0}, "x");
  CHECK(r.checks == 4);
  CHECK(r.violations.size() == 1);
  CHECK_THROWS_AS(r.require(), Error);
  CHECK(check_componentwise(up, low, {0.0, 1.0}, "x", 1).ok());

  TotalPath a{{0, 1, 2}, {0, 2, 1}}, b{{1.5}, {3}};
  auto t = check_total(a, b, "t");
  CHECK_FALSE(t.ok());
  b.valid_until = 1.5;
  CHECK(check_total(a, b, "t").ok());
}
