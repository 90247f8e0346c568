#include <doctest.h>

#include "dcftp/error.hpp"
#include "dcftp/network.hpp"
#include "support.hpp"

using namespace dcftp;
using dcftp::testing::mm1;
using dcftp::testing::table1;

TEST_CASE("flow of the two-station instances") {
  auto f = solve_flow(table1(0));
  CHECK(f.phi(0) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(f.phi(1) == doctest::Approx(0.75).epsilon(1e-12));
  auto g = solve_flow(table1(4));
  CHECK(g.phi(0) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(g.phi(1) == doctest::Approx(0.86).epsilon(1e-12));
}

TEST_CASE("no feedback gives phi = lambda") {
  NetworkSpec s = table1(1);
  s.Q.setZero();
  auto f = solve_flow(s);
  CHECK(f.phi(0) == doctest::Approx(0.22));
  CHECK(f.phi(1) == doctest::Approx(0.767));
}

TEST_CASE("stability") {
  auto s = table1(0);
  auto st = check_stability(s, solve_flow(s));
  CHECK(st.stable);
  CHECK(st.slack(0) == doctest::Approx(0.7));
  CHECK(st.slack(1) == doctest::Approx(0.25));

  auto edge = mm1(1.0, 1.0);
  CHECK_FALSE(check_stability(edge, solve_flow(edge)).stable);

  NetworkSpec over = table1(0);
  over.arrivals[1] = Distribution(Exponential{1.17});
  auto f = solve_flow(over);
  auto bad = check_stability(over, f);
  CHECK_FALSE(bad.stable);
  REQUIRE(bad.violating.size() == 1);
  CHECK(bad.violating[0] == 1);
  CHECK_THROWS_AS(build_auxiliary(over, f), Error);
}

TEST_CASE("validation") {
  NetworkSpec s = table1(0);
  s.Q(0, 1) = 1.0;
  s.Q(1, 0) = 1.0;
  try {
    s.validate();
    FAIL("closed network accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotOpen);
  }
  NetworkSpec neg = table1(0);
  neg.Q(0, 1) = -0.1;
  CHECK_THROWS_AS(neg.validate(), Error);
  NetworkSpec bounded = table1(0);
  bounded.arrivals[0] = Distribution(UniformShifted{1, 2});
  CHECK_THROWS_AS(bounded.validate(), Error);
  NetworkSpec none = table1(0);
  none.arrivals = {std::nullopt, std::nullopt};
  CHECK_THROWS_AS(none.validate(), Error);
}

TEST_CASE("single queue auxiliary rates") {
  auto s = mm1(0.5, 1.0);
  auto aux = build_auxiliary(s, solve_flow(s), AuxOptions{0.5, 0.5});
  CHECK(aux.mu0(0) == doctest::Approx(0.75));
  CHECK(aux.a(0) == doctest::Approx(4.0 / 3));
}

TEST_CASE("auxiliary invariants") {
  RandomStream rng(11);
  for (int rep = 0; rep < 40; ++rep) {
    int d = 1 + rep % 4;
    NetworkSpec s = testing::random_stable_spec(rng, d);
    auto f = solve_flow(s);
    auto aux = build_auxiliary(s, f);
    Eigen::VectorXd mu = s.service_rates();
    Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
    Eigen::VectorXd lam = s.arrival_rates();
    Eigen::VectorXd net = (I - s.Q.transpose()) * aux.mu0 - lam;
    for (int i = 0; i < d; ++i) {
      CHECK(aux.a(i) >= 1);
      CHECK(aux.mu0(i) < mu(i));
      CHECK(aux.mu0(i) > f.phi(i));
      CHECK(net(i) > 0);
      CHECK(aux.a(i) * aux.mu0(i) == doctest::Approx(mu(i)).epsilon(1e-14));
      CHECK(aux.gamma(i) == doctest::Approx(lam(i) + aux.deltabar));
      double in = 0;
      for (int j = 0; j < d; ++j) in += aux.phi_route(j, i);
      CHECK(aux.beta(i) == doctest::Approx(aux.gamma(i) + in));
      // service coordinates drift downward: beta_i < mu0_i
      CHECK(aux.beta(i) < aux.mu0(i));
    }
  }
}

TEST_CASE("neumann series agrees with the direct inverse") {
  RandomStream rng(12);
  for (int rep = 0; rep < 30; ++rep) {
    int d = 1 + rep % 6;
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) Q(i, j) = rng.uniform() * 0.9 / d;
    CHECK(spectral_radius(Q) < 1);
    CHECK((neumann_inverse(Q) - flow_inverse(Q)).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("markovian detection") {
  CHECK(table1(0).is_markovian());
  NetworkSpec s = table1(0);
  s.services[0] = Erlang{2, 2};
  CHECK_FALSE(s.is_markovian());
}
