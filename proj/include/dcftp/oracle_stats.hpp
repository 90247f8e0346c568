#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dcftp/network.hpp"

namespace dcftp {

/// Independent Geometric(rho_i) marginals of an exponential Jackson network.
class ProductFormOracle {
 public:
  /// Throws NotMarkovian for non-exponential laws and Unstable when some
  /// rho_i >= 1.
  explicit ProductFormOracle(const NetworkSpec& spec);
  explicit ProductFormOracle(std::vector<double> rho);

  int d() const { return static_cast<int>(rho_.size()); }
  double rho(int i) const { return rho_[i]; }
  double pmf(int i, long k) const;
  double cdf(int i, long k) const;
  double joint_pmf(const std::vector<long>& y) const;

 private:
  std::vector<double> rho_;
};

double oracle_mean(const ProductFormOracle& oracle, int i);

struct ChiSquareResult {
  double statistic = 0;
  int dof = 0;
  double p_value = 1;
  int bins = 0;
};

struct Correlation {
  double r = 0;
  double p_value = 1;
};

struct StationSummary {
  double mean = 0;
  double sd = 0;
  double ci_half_width = 0;
  std::optional<double> true_mean;
  std::optional<ChiSquareResult> gof;
};

struct SampleSummary {
  std::size_t n = 0;
  std::vector<StationSummary> stations;
  std::optional<Correlation> correlation;  // stations 1 and 2; absent when undefined
};

/// Goodness of fit of integer samples against Geometric(rho); upper cells are
/// merged until every expected count is at least 5.
ChiSquareResult chi_square_geometric(const std::vector<long>& values, double rho);

/// Pearson r with a two-sided p-value from the t statistic; nullopt when
/// either sample is constant or n < 3.
std::optional<Correlation> pearson(const std::vector<double>& x, const std::vector<double>& y);

struct KsResult {
  double statistic = 0;
  double p_value = 1;
};

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);
KsResult ks_one_sample(std::vector<double> a, const std::function<double(double)>& cdf);
/// Asymptotic Kolmogorov tail P(K > lambda).
double kolmogorov_tail(double lambda);

/// Throws TooFewSamples with fewer than 2 samples.
SampleSummary summarize(const std::vector<std::vector<long>>& samples, const ProductFormOracle* oracle = nullptr);

struct Table1Column {
  double lambda1, lambda2;
};

/// The five two-station instances with mu = (1, 1) and Q = [[0, 0.11], [0.1, 0]].
const std::vector<Table1Column>& table1_columns();
NetworkSpec table1_spec(const Table1Column& c);

struct Table1Entry {
  Table1Column column;
  std::vector<double> true_mean;
  SampleSummary summary;
  std::vector<bool> covered;  // CI contains the true mean, per station
};

struct Table1Report {
  std::size_t n = 0;
  std::vector<Table1Entry> entries;
};

/// Column c is sampled with master seed mix_seed(seed, c).
Table1Report reproduce_table1(std::size_t n, std::uint64_t seed, int workers = 1);
void print_table1(std::ostream& os, const Table1Report& rep);

/// Joint counts of (y_1, ..., y_d) as CSV.
void write_histogram_csv(std::ostream& os, const std::vector<std::vector<long>>& samples);
void write_summary_csv(std::ostream& os, const SampleSummary& s);

}  // namespace dcftp
