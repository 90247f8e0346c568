#include "dcftp/network.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "dcftp/error.hpp"

namespace dcftp {

namespace {

void invalid(const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); }

}  // namespace

void NetworkSpec::validate() const {
  if (d < 1) invalid("network needs at least one station");
  if (static_cast<int>(arrivals.size()) != d || static_cast<int>(services.size()) != d)
    invalid("expected " + std::to_string(d) + " arrival and service entries");
  if (Q.rows() != d || Q.cols() != d) invalid("Q must be " + std::to_string(d) + "x" + std::to_string(d));
  bool any_arrival = false;
  for (int i = 0; i < d; ++i) {
    double row = 0;
    for (int j = 0; j < d; ++j) {
      double q = Q(i, j);
      if (!(q >= 0 && q <= 1)) invalid("Q entries must lie in [0,1]");
      row += q;
    }
    if (row > 1 + 1e-12) invalid("row " + std::to_string(i + 1) + " of Q sums above 1");
    if (Q(i, i) != 0) invalid("Q must have a zero diagonal (station " + std::to_string(i + 1) + ")");
    if (arrivals[i]) {
      any_arrival = true;
      if (!arrivals[i]->has_unbounded_support())
        invalid("station " + std::to_string(i + 1) + ": interarrival law must have unbounded support");
    }
  }
  if (!any_arrival) invalid("at least one station needs external arrivals");
  double r = spectral_radius(Q);
  if (!(r < 1 - 1e-10)) throw Error(ErrorCode::NotOpen, "spectral radius of Q is " + std::to_string(r));
}

Eigen::VectorXd NetworkSpec::arrival_rates() const {
  Eigen::VectorXd l = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < d; ++i)
    if (arrivals[i]) l(i) = 1.0 / arrivals[i]->mean();
  return l;
}

Eigen::VectorXd NetworkSpec::service_rates() const {
  Eigen::VectorXd m(d);
  for (int i = 0; i < d; ++i) m(i) = 1.0 / services[i].mean();
  return m;
}

bool NetworkSpec::is_markovian() const {
  for (int i = 0; i < d; ++i) {
    if (!services[i].is_exponential()) return false;
    if (arrivals[i] && !arrivals[i]->is_exponential()) return false;
  }
  return true;
}

double spectral_radius(const Eigen::MatrixXd& Q) {
  if (Q.size() == 0) return 0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(Q, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Eigen::MatrixXd flow_inverse(const Eigen::MatrixXd& Q) {
  const auto n = Q.rows();
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n) - Q.transpose();
  return A.partialPivLu().inverse();
}

Eigen::MatrixXd neumann_inverse(const Eigen::MatrixXd& Q, double tol, int max_terms) {
  const auto n = Q.rows();
  Eigen::MatrixXd Qt = Q.transpose();
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd sum = term;
  for (int k = 1; k < max_terms; ++k) {
    term = term * Qt;
    sum += term;
    if (term.cwiseAbs().maxCoeff() < tol) return sum;
  }
  throw Error(ErrorCode::NotOpen, "Neumann series did not converge");
}

FlowSolution solve_flow(const NetworkSpec& spec) {
  double r = spectral_radius(spec.Q);
  if (!(r < 1 - 1e-10)) throw Error(ErrorCode::NotOpen, "spectral radius of Q is " + std::to_string(r));
  Eigen::VectorXd lambda = spec.arrival_rates();
  const auto n = spec.Q.rows();
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n) - spec.Q.transpose();
  FlowSolution f;
  f.phi = A.partialPivLu().solve(lambda);
  f.rho = f.phi.cwiseQuotient(spec.service_rates());
  return f;
}

StabilityReport check_stability(const NetworkSpec& spec, const FlowSolution& flow) {
  StabilityReport rep;
  rep.slack = spec.service_rates() - flow.phi;
  for (int i = 0; i < rep.slack.size(); ++i)
    if (!(rep.slack(i) > 0)) rep.violating.push_back(i);
  rep.stable = rep.violating.empty();
  return rep;
}

AuxiliaryRates build_auxiliary(const NetworkSpec& spec, const FlowSolution& flow, const AuxOptions& opts) {
  if (!(opts.delta_frac > 0 && opts.delta_frac < 1) || !(opts.deltabar_frac > 0 && opts.deltabar_frac < 1))
    invalid("delta_frac and deltabar_frac must lie in (0,1)");
  auto stab = check_stability(spec, flow);
  if (!stab.stable)
    throw Error(ErrorCode::Unstable, "station " + std::to_string(stab.violating.front() + 1) +
                                         " has flow >= service rate");
  const int d = spec.d;
  Eigen::VectorXd lambda = spec.arrival_rates();
  Eigen::VectorXd mu = spec.service_rates();
  Eigen::MatrixXd inv = flow_inverse(spec.Q);
  Eigen::VectorXd ie = inv * Eigen::VectorXd::Ones(d);

  AuxiliaryRates aux;
  aux.delta = opts.delta_frac * stab.slack.minCoeff() / ie.maxCoeff();
  aux.mu0 = flow.phi + aux.delta * ie;
  aux.a = mu.cwiseQuotient(aux.mu0);

  Eigen::VectorXd margin = aux.mu0 - spec.Q.transpose() * aux.mu0 - lambda;
  double colmax = spec.Q.colwise().sum().maxCoeff();
  aux.deltabar = opts.deltabar_frac * margin.minCoeff() / (1 + colmax);

  aux.gamma = lambda.array() + aux.deltabar;
  aux.phi_route = Eigen::MatrixXd::Zero(d, d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) aux.phi_route(j, i) = spec.Q(j, i) * (aux.mu0(j) + aux.deltabar);
  aux.beta = aux.gamma + aux.phi_route.colwise().sum().transpose();

  for (int i = 0; i < d; ++i) {
    if (!(aux.a(i) >= 1) || !(margin(i) > 0) || !(aux.beta(i) < aux.mu0(i)))
      throw Error(ErrorCode::Unstable, "auxiliary rates degenerate at station " + std::to_string(i + 1));
  }
  return aux;
}

}  // namespace dcftp
