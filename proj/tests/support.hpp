#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "dcftp/distributions.hpp"
#include "dcftp/network.hpp"
#include "dcftp/oracle_stats.hpp"
#include "dcftp/random.hpp"

namespace dcftp::testing {

inline NetworkSpec mm1(double lambda, double mu) {
  NetworkSpec s;
  s.d = 1;
  s.arrivals = {Distribution(Exponential{lambda})};
  s.services = {Exponential{mu}};
  s.Q = Eigen::MatrixXd::Zero(1, 1);
  return s;
}

inline NetworkSpec table1(int column) { return table1_spec(table1_columns()[column]); }

inline Distribution random_law(RandomStream& rng, bool bounded_ok) {
  int kind = static_cast<int>(rng.uniform() * (bounded_ok ? 4 : 3));
  switch (kind) {
    case 0:
      return Exponential{1.0};
    case 1:
      return Erlang{1 + static_cast<int>(rng.uniform() * 4), 1.0};
    case 2: {
      double w = 0.2 + 0.6 * rng.uniform();
      return HyperExponential{{w, 1 - w}, {0.5 + rng.uniform(), 2 + 3 * rng.uniform()}};
    }
    default: {
      double lo = rng.uniform();
      return UniformShifted{lo, lo + 0.2 + 2 * rng.uniform()};
    }
  }
}

/// Random open network with d stations, mixed laws and utilizations in
/// [0.25, 0.8] and service slack of at least 0.2; at least one station has external arrivals.
inline NetworkSpec random_stable_spec(RandomStream& rng, int d) {
  NetworkSpec s;
  s.d = d;
  s.Q = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    double budget = 0.6 * rng.uniform();
    for (int j = 0; j < d; ++j) {
      if (j == i || rng.uniform() < 0.4) continue;
      double q = budget * rng.uniform();
      s.Q(i, j) = q;
      budget -= q;
    }
  }
  for (int i = 0; i < d; ++i) {
    bool has = i == 0 || rng.uniform() < 0.75;
    if (has) {
      Distribution a = random_law(rng, false);
      s.arrivals.push_back(a.scaled((0.5 + 1.5 * rng.uniform()) / a.mean()));
    } else {
      s.arrivals.push_back(std::nullopt);
    }
    s.services.push_back(random_law(rng, true));
  }
  auto flow = solve_flow(s);
  for (int i = 0; i < d; ++i) {
    double rho = 0.25 + 0.55 * rng.uniform();
    // keep an absolute slack too: a near-idle station with a tiny service rate
    // starves the common margin of every coordinate
    double mu = std::max(flow.phi(i) / rho, flow.phi(i) + 0.2);
    s.services[i] = s.services[i].scaled(1 / (mu * s.services[i].mean()));
  }
  return s;
}

inline double mean_of(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m += x;
  return m / static_cast<double>(v.size());
}

}  // namespace dcftp::testing
