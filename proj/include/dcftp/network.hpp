#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "dcftp/distributions.hpp"

namespace dcftp {

/// Open network of single-server FIFO stations with renewal arrivals and
/// Markovian routing. Stations are 0-based here; configs and output use 1-based.
struct NetworkSpec {
  int d = 0;
  std::vector<std::optional<Distribution>> arrivals;  // empty: no external arrivals
  std::vector<Distribution> services;
  Eigen::MatrixXd Q;  // Q(i, j): probability a customer leaving i joins j

  /// Throws InvalidArgument (shape, probabilities, interarrival support) or
  /// NotOpen (spectral radius of Q >= 1).
  void validate() const;

  Eigen::VectorXd arrival_rates() const;
  Eigen::VectorXd service_rates() const;
  /// True when every arrival and service law is exponential.
  bool is_markovian() const;
};

struct FlowSolution {
  Eigen::VectorXd phi;
  Eigen::VectorXd rho;
};

struct StabilityReport {
  bool stable = false;
  Eigen::VectorXd slack;       // mu - phi
  std::vector<int> violating;  // stations with phi_i >= mu_i
};

struct AuxOptions {
  double delta_frac = 0.9;
  double deltabar_frac = 0.7;
};

struct AuxiliaryRates {
  Eigen::VectorXd a;    // service slow-down factors, >= 1
  Eigen::VectorXd mu0;  // mu / a
  double delta = 0;
  double deltabar = 0;
  Eigen::VectorXd gamma;      // lambda + deltabar
  Eigen::MatrixXd phi_route;  // phi_route(j, i) = Q(j, i) * (mu0_j + deltabar)
  Eigen::VectorXd beta;       // gamma_i + sum_j phi_route(j, i)
};

double spectral_radius(const Eigen::MatrixXd& Q);

/// (I - Q^T)^{-1} by LU with partial pivoting.
Eigen::MatrixXd flow_inverse(const Eigen::MatrixXd& Q);
/// Same matrix as a truncated Neumann series sum_k (Q^T)^k; used as a cross-check.
Eigen::MatrixXd neumann_inverse(const Eigen::MatrixXd& Q, double tol = 1e-14, int max_terms = 100000);

FlowSolution solve_flow(const NetworkSpec& spec);
StabilityReport check_stability(const NetworkSpec& spec, const FlowSolution& flow);
AuxiliaryRates build_auxiliary(const NetworkSpec& spec, const FlowSolution& flow,
                               const AuxOptions& opts = {});

}  // namespace dcftp
