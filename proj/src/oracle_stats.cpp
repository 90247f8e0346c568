#include "dcftp/oracle_stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <string>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "dcftp/batch.hpp"
#include "dcftp/error.hpp"

namespace dcftp {

ProductFormOracle::ProductFormOracle(const NetworkSpec& spec) {
  spec.validate();
  if (!spec.is_markovian())
    throw Error(ErrorCode::NotMarkovian, "product-form oracle needs exponential arrivals and services");
  auto flow = solve_flow(spec);
  auto st = check_stability(spec, flow);
  if (!st.stable) throw Error(ErrorCode::Unstable, "station " + std::to_string(st.violating.front() + 1) + " has rho >= 1");
  rho_.assign(flow.rho.data(), flow.rho.data() + flow.rho.size());
}

ProductFormOracle::ProductFormOracle(std::vector<double> rho) : rho_(std::move(rho)) {
  for (double r : rho_)
    if (!(r >= 0 && r < 1)) throw Error(ErrorCode::InvalidArgument, "utilization must lie in [0, 1)");
}

double ProductFormOracle::pmf(int i, long k) const {
  if (k < 0) return 0;
  return (1 - rho_[i]) * std::pow(rho_[i], static_cast<double>(k));
}

double ProductFormOracle::cdf(int i, long k) const {
  if (k < 0) return 0;
  return 1 - std::pow(rho_[i], static_cast<double>(k + 1));
}

double ProductFormOracle::joint_pmf(const std::vector<long>& y) const {
  if (static_cast<int>(y.size()) != d()) throw Error(ErrorCode::InvalidArgument, "dimension mismatch");
  double p = 1;
  for (int i = 0; i < d(); ++i) p *= pmf(i, y[i]);
  return p;
}

double oracle_mean(const ProductFormOracle& oracle, int i) {
  if (i < 0 || i >= oracle.d()) throw Error(ErrorCode::InvalidArgument, "station out of range");
  return oracle.rho(i) / (1 - oracle.rho(i));
}

ChiSquareResult chi_square_geometric(const std::vector<long>& values, double rho) {
  if (!(rho >= 0 && rho < 1)) throw Error(ErrorCode::InvalidArgument, "rho must lie in [0, 1)");
  ChiSquareResult res;
  const double n = static_cast<double>(values.size());
  if (values.empty()) return res;
  // cells 0..K-1 on their own, then [K, inf)
  long K = 0;
  while (n * (1 - rho) * std::pow(rho, static_cast<double>(K)) >= 5 &&
         n * std::pow(rho, static_cast<double>(K + 1)) >= 5)
    ++K;
  res.bins = static_cast<int>(K) + 1;
  res.dof = res.bins - 1;
  if (res.dof < 1) return res;
  std::vector<double> obs(res.bins, 0);
  for (long v : values) obs[std::min<long>(std::max<long>(v, 0), K)] += 1;
  for (long k = 0; k <= K; ++k) {
    double p = k < K ? (1 - rho) * std::pow(rho, static_cast<double>(k)) : std::pow(rho, static_cast<double>(K));
    double e = n * p;
    res.statistic += (obs[k] - e) * (obs[k] - e) / e;
  }
  boost::math::chi_squared dist(res.dof);
  res.p_value = boost::math::cdf(boost::math::complement(dist, res.statistic));
  return res;
}

std::optional<Correlation> pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw Error(ErrorCode::InvalidArgument, "pearson: length mismatch");
  const std::size_t n = x.size();
  if (n < 3) return std::nullopt;
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < n; ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t k = 0; k < n; ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    syy += (y[k] - my) * (y[k] - my);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  if (!(sxx > 0 && syy > 0)) return std::nullopt;
  Correlation c;
  c.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  if (std::abs(c.r) >= 1) {
    c.p_value = 0;
    return c;
  }
  double dof = static_cast<double>(n - 2);
  double t = c.r * std::sqrt(dof / (1 - c.r * c.r));
  boost::math::students_t dist(dof);
  c.p_value = std::min(1.0, 2 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
  return c;
}

double kolmogorov_tail(double lambda) {
  if (lambda <= 0) return 1;
  if (lambda < 0.2) return 1;
  double s = 0;
  for (int j = 1; j <= 100; ++j) {
    double term = std::exp(-2.0 * j * j * lambda * lambda);
    s += (j % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(s, 0.0, 1.0);
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::TooFewSamples, "ks: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double D = 0;
  while (i < a.size() && j < b.size()) {
    double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    D = std::max(D, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  double ne = na * nb / (na + nb);
  double sq = std::sqrt(ne);
  return {D, kolmogorov_tail((sq + 0.12 + 0.11 / sq) * D)};
}

KsResult ks_one_sample(std::vector<double> a, const std::function<double(double)>& cdf) {
  if (a.empty()) throw Error(ErrorCode::TooFewSamples, "ks: empty sample");
  std::sort(a.begin(), a.end());
  const double n = static_cast<double>(a.size());
  double D = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    double F = cdf(a[k]);
    D = std::max({D, static_cast<double>(k + 1) / n - F, F - static_cast<double>(k) / n});
  }
  double sq = std::sqrt(n);
  return {D, kolmogorov_tail((sq + 0.12 + 0.11 / sq) * D)};
}

SampleSummary summarize(const std::vector<std::vector<long>>& samples, const ProductFormOracle* oracle) {
  if (samples.size() < 2) throw Error(ErrorCode::TooFewSamples, "need at least 2 samples, got " + std::to_string(samples.size()));
  const std::size_t n = samples.size();
  const int d = static_cast<int>(samples.front().size());
  if (oracle && oracle->d() != d) throw Error(ErrorCode::InvalidArgument, "oracle dimension mismatch");
  SampleSummary s;
  s.n = n;
  std::vector<std::vector<double>> cols(d, std::vector<double>(n));
  for (std::size_t k = 0; k < n; ++k) {
    if (static_cast<int>(samples[k].size()) != d) throw Error(ErrorCode::InvalidArgument, "ragged samples");
    for (int i = 0; i < d; ++i) cols[i][k] = static_cast<double>(samples[k][i]);
  }
  for (int i = 0; i < d; ++i) {
    StationSummary st;
    double m = 0;
    for (double v : cols[i]) m += v;
    m /= static_cast<double>(n);
    double ss = 0;
    for (double v : cols[i]) ss += (v - m) * (v - m);
    st.mean = m;
    st.sd = std::sqrt(ss / static_cast<double>(n - 1));
    st.ci_half_width = 1.96 * st.sd / std::sqrt(static_cast<double>(n));
    if (oracle) {
      st.true_mean = oracle_mean(*oracle, i);
      std::vector<long> v(n);
      for (std::size_t k = 0; k < n; ++k) v[k] = samples[k][i];
      st.gof = chi_square_geometric(v, oracle->rho(i));
    }
    s.stations.push_back(st);
  }
  if (d >= 2) s.correlation = pearson(cols[0], cols[1]);
  return s;
}

const std::vector<Table1Column>& table1_columns() {
  static const std::vector<Table1Column> cols = {
      {0.225, 0.717}, {0.220, 0.767}, {0.218, 0.787}, {0.216, 0.807}, {0.214, 0.827}};
  return cols;
}

NetworkSpec table1_spec(const Table1Column& c) {
  NetworkSpec s;
  s.d = 2;
  s.arrivals = {Distribution(Exponential{c.lambda1}), Distribution(Exponential{c.lambda2})};
  s.services = {Exponential{1.0}, Exponential{1.0}};
  s.Q = Eigen::MatrixXd(2, 2);
  s.Q << 0, 0.11, 0.1, 0;
  return s;
}

Table1Report reproduce_table1(std::size_t n, std::uint64_t seed, int workers) {
  Table1Report rep;
  rep.n = n;
  const auto& cols = table1_columns();
  for (std::size_t c = 0; c < cols.size(); ++c) {
    NetworkSpec spec = table1_spec(cols[c]);
    ProductFormOracle oracle(spec);
    auto ctx = SamplerContext::make(spec);
    auto results = run_batch(ctx, n, mix_seed(seed, c), workers);
    std::vector<std::vector<long>> ys;
    ys.reserve(n);
    for (auto& r : results) ys.push_back(std::move(r.state.y));
    Table1Entry e;
    e.column = cols[c];
    e.summary = summarize(ys, &oracle);
    for (int i = 0; i < 2; ++i) {
      e.true_mean.push_back(oracle_mean(oracle, i));
      const auto& st = e.summary.stations[i];
      e.covered.push_back(std::abs(st.mean - e.true_mean[i]) <= st.ci_half_width);
    }
    rep.entries.push_back(std::move(e));
  }
  return rep;
}

namespace {

std::string fmt(const char* f, double a, double b = 0) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

}  // namespace

void print_table1(std::ostream& os, const Table1Report& rep) {
  auto row = [&](const std::string& label, auto cell) {
    os << label;
    for (std::size_t c = 0; c < rep.entries.size(); ++c) {
      std::string s = cell(rep.entries[c]);
      os << std::string(s.size() < 20 ? 20 - s.size() : 1, ' ') << s;
    }
    os << '\n';
  };
  os << "n = " << rep.n << " samples per column; mu = (1, 1), Q = [[0, 0.11], [0.1, 0]]\n";
  row(std::string(22, ' '), [](const Table1Entry& e) { return fmt("(%.3f, %.3f)", e.column.lambda1, e.column.lambda2); });
  for (int i = 0; i < 2; ++i) {
    std::string y = "E[Y" + std::to_string(i + 1) + "]";
    row(("TrueValue  " + y + "        ").substr(0, 22),
        [&](const Table1Entry& e) { return fmt("%.4f", e.true_mean[i]); });
    row(("Simulation " + y + "        ").substr(0, 22), [&](const Table1Entry& e) {
      const auto& st = e.summary.stations[i];
      return fmt("%.4f+-%.4f", st.mean, st.ci_half_width) + (e.covered[i] ? " " : "*");
    });
  }
  row("Correlation r         ", [](const Table1Entry& e) {
    return e.summary.correlation ? fmt("%.4f", e.summary.correlation->r) : std::string("n/a");
  });
  row("p-value               ", [](const Table1Entry& e) {
    return e.summary.correlation ? fmt("%.4f", e.summary.correlation->p_value) : std::string("n/a");
  });
  bool any = false;
  for (const auto& e : rep.entries)
    for (bool c : e.covered) any = any || !c;
  if (any) os << "* 95% CI excludes the true value\n";
}

void write_histogram_csv(std::ostream& os, const std::vector<std::vector<long>>& samples) {
  if (samples.empty()) return;
  const std::size_t d = samples.front().size();
  std::map<std::vector<long>, std::size_t> counts;
  for (const auto& y : samples) ++counts[y];
  for (std::size_t i = 0; i < d; ++i) os << 'y' << i + 1 << ',';
  os << "count\n";
  for (const auto& [y, c] : counts) {
    for (long v : y) os << v << ',';
    os << c << '\n';
  }
}

void write_summary_csv(std::ostream& os, const SampleSummary& s) {
  os << "station,n,mean,sd,ci_half_width,true_mean,chi2,chi2_dof,chi2_p\n";
  for (std::size_t i = 0; i < s.stations.size(); ++i) {
    const auto& st = s.stations[i];
    os << i + 1 << ',' << s.n << ',' << st.mean << ',' << st.sd << ',' << st.ci_half_width << ',';
    if (st.true_mean) os << *st.true_mean;
    os << ',';
    if (st.gof) os << st.gof->statistic << ',' << st.gof->dof << ',' << st.gof->p_value;
    else os << ",,";
    os << '\n';
  }
  if (s.correlation) os << "# pearson_r," << s.correlation->r << ",p_value," << s.correlation->p_value << '\n';
}

}  // namespace dcftp
