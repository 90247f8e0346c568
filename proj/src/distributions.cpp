#include "dcftp/distributions.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "dcftp/error.hpp"

namespace dcftp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::InvalidArgument, what);
}

void validate(const Distribution::Variant& v) {
  std::visit(overloaded{
                 [](const Exponential& d) {
                   require(std::isfinite(d.rate) && d.rate > 0, "exp: rate must be positive");
                 },
                 [](const Erlang& d) {
                   require(d.shape >= 1, "erlang: k must be >= 1");
                   require(std::isfinite(d.rate) && d.rate > 0, "erlang: rate must be positive");
                 },
                 [](const HyperExponential& d) {
                   require(!d.weights.empty() && d.weights.size() == d.rates.size(),
                           "hyperexp: w and rate must be non-empty and equally long");
                   double total = 0;
                   for (std::size_t i = 0; i < d.weights.size(); ++i) {
                     require(d.weights[i] >= 0 && std::isfinite(d.weights[i]),
                             "hyperexp: weights must be non-negative");
                     require(std::isfinite(d.rates[i]) && d.rates[i] > 0,
                             "hyperexp: rates must be positive");
                     total += d.weights[i];
                   }
                   require(std::abs(total - 1.0) < 1e-12, "hyperexp: weights must sum to 1");
                 },
                 [](const UniformShifted& d) {
                   require(std::isfinite(d.lo) && std::isfinite(d.hi) && d.lo >= 0 && d.hi > d.lo,
                           "uniform: need 0 <= lo < hi");
                 },
             },
             v);
}

double erlang_sample(int k, double rate, RandomStream& rng) {
  double s = 0;
  for (int i = 0; i < k; ++i) s += rng.exponential(rate);
  return s;
}

// log(sum_i w_i exp(x_i)) over entries with w_i > 0.
double log_weighted_sum_exp(const std::vector<double>& w, const std::vector<double>& x) {
  double mx = -kInf;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (w[i] > 0) mx = std::max(mx, x[i]);
  double s = 0;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (w[i] > 0) s += w[i] * std::exp(x[i] - mx);
  return mx + std::log(s);
}

std::string fmt(double x) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  std::string s(buf, r.ptr);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

}  // namespace

Distribution::Distribution(Variant v) : v_(std::move(v)) { validate(v_); }

double Distribution::mean() const {
  return std::visit(overloaded{
                        [](const Exponential& d) { return 1.0 / d.rate; },
                        [](const Erlang& d) { return d.shape / d.rate; },
                        [](const HyperExponential& d) {
                          double m = 0;
                          for (std::size_t i = 0; i < d.weights.size(); ++i) m += d.weights[i] / d.rates[i];
                          return m;
                        },
                        [](const UniformShifted& d) { return 0.5 * (d.lo + d.hi); },
                    },
                    v_);
}

double Distribution::second_moment() const {
  return std::visit(overloaded{
                        [](const Exponential& d) { return 2.0 / (d.rate * d.rate); },
                        [](const Erlang& d) { return d.shape * (d.shape + 1.0) / (d.rate * d.rate); },
                        [](const HyperExponential& d) {
                          double m = 0;
                          for (std::size_t i = 0; i < d.weights.size(); ++i)
                            m += 2.0 * d.weights[i] / (d.rates[i] * d.rates[i]);
                          return m;
                        },
                        [](const UniformShifted& d) {
                          return (d.lo * d.lo + d.lo * d.hi + d.hi * d.hi) / 3.0;
                        },
                    },
                    v_);
}

double Distribution::mgf_abscissa() const {
  return std::visit(overloaded{
                        [](const Exponential& d) { return d.rate; },
                        [](const Erlang& d) { return d.rate; },
                        [](const HyperExponential& d) {
                          double a = kInf;
                          for (std::size_t i = 0; i < d.weights.size(); ++i)
                            if (d.weights[i] > 0) a = std::min(a, d.rates[i]);
                          return a;
                        },
                        [](const UniformShifted&) { return kInf; },
                    },
                    v_);
}

double Distribution::log_mgf(double s) const {
  if (!(s < mgf_abscissa()))
    throw Error(ErrorCode::Divergent, "mgf diverges at s=" + fmt(s) + " for " + to_string());
  return std::visit(overloaded{
                        [s](const Exponential& d) { return std::log(d.rate) - std::log(d.rate - s); },
                        [s](const Erlang& d) {
                          return d.shape * (std::log(d.rate) - std::log(d.rate - s));
                        },
                        [s](const HyperExponential& d) {
                          std::vector<double> x(d.rates.size());
                          for (std::size_t i = 0; i < x.size(); ++i)
                            x[i] = std::log(d.rates[i]) - std::log(d.rates[i] - s);
                          return log_weighted_sum_exp(d.weights, x);
                        },
                        [s](const UniformShifted& d) {
                          double w = d.hi - d.lo;
                          double sw = s * w;
                          if (std::abs(sw) < 1e-12) return s * (d.lo + 0.5 * w);
                          if (s > 0) return s * d.hi + std::log(-std::expm1(-sw) / sw);
                          return s * d.lo + std::log(std::expm1(sw) / sw);
                        },
                    },
                    v_);
}

double Distribution::mgf(double s) const { return std::exp(log_mgf(s)); }

double Distribution::cdf(double x) const {
  if (x <= 0) return 0.0;
  return std::visit(overloaded{
                        [x](const Exponential& d) { return -std::expm1(-d.rate * x); },
                        [x](const Erlang& d) {
                          double rx = d.rate * x;
                          double term = std::exp(-rx);
                          double tail = 0;
                          for (int n = 0; n < d.shape; ++n) {
                            tail += term;
                            term *= rx / (n + 1);
                          }
                          return std::clamp(1.0 - tail, 0.0, 1.0);
                        },
                        [x](const HyperExponential& d) {
                          double tail = 0;
                          for (std::size_t i = 0; i < d.weights.size(); ++i)
                            tail += d.weights[i] * std::exp(-d.rates[i] * x);
                          return std::clamp(1.0 - tail, 0.0, 1.0);
                        },
                        [x](const UniformShifted& d) {
                          return std::clamp((x - d.lo) / (d.hi - d.lo), 0.0, 1.0);
                        },
                    },
                    v_);
}

double Distribution::sample(RandomStream& rng) const {
  return std::visit(overloaded{
                        [&](const Exponential& d) { return rng.exponential(d.rate); },
                        [&](const Erlang& d) { return erlang_sample(d.shape, d.rate, rng); },
                        [&](const HyperExponential& d) {
                          return rng.exponential(d.rates[rng.categorical(d.weights)]);
                        },
                        [&](const UniformShifted& d) { return d.lo + (d.hi - d.lo) * rng.uniform(); },
                    },
                    v_);
}

double Distribution::tilted_sample(double s, RandomStream& rng) const {
  if (s == 0) return sample(rng);
  if (!(s < mgf_abscissa()))
    throw Error(ErrorCode::Divergent, "tilt s=" + fmt(s) + " outside the mgf domain of " + to_string());
  return std::visit(overloaded{
                        [&](const Exponential& d) { return rng.exponential(d.rate - s); },
                        [&](const Erlang& d) { return erlang_sample(d.shape, d.rate - s, rng); },
                        [&](const HyperExponential& d) {
                          std::vector<double> w(d.weights.size());
                          for (std::size_t i = 0; i < w.size(); ++i)
                            w[i] = d.weights[i] * d.rates[i] / (d.rates[i] - s);
                          std::size_t k = rng.categorical(w);
                          return rng.exponential(d.rates[k] - s);
                        },
                        [&](const UniformShifted& d) {
                          double w = d.hi - d.lo;
                          double u = rng.uniform();
                          if (s > 0) return d.hi + std::log(u + (1 - u) * std::exp(-s * w)) / s;
                          return d.lo + std::log1p(u * std::expm1(s * w)) / s;
                        },
                    },
                    v_);
}

double Distribution::equilibrium_sample(RandomStream& rng) const {
  return std::visit(overloaded{
                        [&](const Exponential& d) { return rng.exponential(d.rate); },
                        [&](const Erlang& d) {
                          int j = 1 + static_cast<int>(rng.uniform() * d.shape);
                          return erlang_sample(std::min(j, d.shape), d.rate, rng);
                        },
                        [&](const HyperExponential& d) {
                          std::vector<double> w(d.weights.size());
                          for (std::size_t i = 0; i < w.size(); ++i) w[i] = d.weights[i] / d.rates[i];
                          return rng.exponential(d.rates[rng.categorical(w)]);
                        },
                        [&](const UniformShifted& d) {
                          double w = d.hi - d.lo;
                          double v = rng.uniform() * 0.5 * (d.lo + d.hi);
                          if (v < d.lo) return v;
                          double r = 2 * w * (v - d.lo);
                          return d.lo + r / (w + std::sqrt(std::max(0.0, w * w - r)));
                        },
                    },
                    v_);
}

double Distribution::residual_given_age(double age, RandomStream& rng) const {
  require(age >= 0, "residual_given_age: age must be non-negative");
  return std::visit(overloaded{
                        [&](const Exponential& d) { return rng.exponential(d.rate); },
                        [&](const Erlang& d) {
                          // phases already completed by time `age`, conditioned on fewer than k
                          double ra = d.rate * age;
                          std::vector<double> lw(d.shape);
                          double lf = 0;
                          for (int n = 0; n < d.shape; ++n) {
                            if (n > 0) lf += std::log(static_cast<double>(n));
                            lw[n] = (ra > 0 ? n * std::log(ra) : (n == 0 ? 0.0 : -kInf)) - lf;
                          }
                          double mx = *std::max_element(lw.begin(), lw.end());
                          std::vector<double> w(d.shape);
                          for (int n = 0; n < d.shape; ++n) w[n] = std::exp(lw[n] - mx);
                          int done = static_cast<int>(rng.categorical(w));
                          return erlang_sample(d.shape - done, d.rate, rng);
                        },
                        [&](const HyperExponential& d) {
                          std::vector<double> lw(d.weights.size(), -kInf);
                          double mx = -kInf;
                          for (std::size_t i = 0; i < lw.size(); ++i)
                            if (d.weights[i] > 0) {
                              lw[i] = std::log(d.weights[i]) - d.rates[i] * age;
                              mx = std::max(mx, lw[i]);
                            }
                          std::vector<double> w(lw.size());
                          for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(lw[i] - mx);
                          return rng.exponential(d.rates[rng.categorical(w)]);
                        },
                        [&](const UniformShifted& d) {
                          require(age < d.hi, "residual_given_age: age beyond the support");
                          double lo = std::max(0.0, d.lo - age);
                          double hi = d.hi - age;
                          return lo + (hi - lo) * rng.uniform();
                        },
                    },
                    v_);
}

std::optional<Distribution> Distribution::tilted_law(double s) const {
  if (!(s < mgf_abscissa()))
    throw Error(ErrorCode::Divergent, "tilt s=" + fmt(s) + " outside the mgf domain of " + to_string());
  return std::visit(overloaded{
                        [s](const Exponential& d) -> std::optional<Distribution> {
                          return Distribution(Exponential{d.rate - s});
                        },
                        [s](const Erlang& d) -> std::optional<Distribution> {
                          return Distribution(Erlang{d.shape, d.rate - s});
                        },
                        [s](const HyperExponential& d) -> std::optional<Distribution> {
                          HyperExponential h;
                          double total = 0;
                          for (std::size_t i = 0; i < d.weights.size(); ++i) {
                            h.weights.push_back(d.weights[i] * d.rates[i] / (d.rates[i] - s));
                            h.rates.push_back(d.rates[i] - s);
                            total += h.weights.back();
                          }
                          for (double& w : h.weights) w /= total;
                          return Distribution(std::move(h));
                        },
                        [](const UniformShifted&) -> std::optional<Distribution> { return std::nullopt; },
                    },
                    v_);
}

Distribution Distribution::scaled(double c) const {
  require(std::isfinite(c) && c > 0, "scale factor must be positive");
  return std::visit(overloaded{
                        [c](const Exponential& d) -> Distribution { return Exponential{d.rate / c}; },
                        [c](const Erlang& d) -> Distribution { return Erlang{d.shape, d.rate / c}; },
                        [c](const HyperExponential& d) -> Distribution {
                          HyperExponential h = d;
                          for (double& r : h.rates) r /= c;
                          return h;
                        },
                        [c](const UniformShifted& d) -> Distribution {
                          return UniformShifted{d.lo * c, d.hi * c};
                        },
                    },
                    v_);
}

std::string Distribution::to_string() const {
  auto list = [](const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
    return s + "]";
  };
  return std::visit(overloaded{
                        [](const Exponential& d) { return "exp(rate=" + fmt(d.rate) + ")"; },
                        [](const Erlang& d) {
                          return "erlang(k=" + std::to_string(d.shape) + ", rate=" + fmt(d.rate) + ")";
                        },
                        [&](const HyperExponential& d) {
                          return "hyperexp(w=" + list(d.weights) + ", rate=" + list(d.rates) + ")";
                        },
                        [](const UniformShifted& d) {
                          return "uniform(lo=" + fmt(d.lo) + ", hi=" + fmt(d.hi) + ")";
                        },
                    },
                    v_);
}

namespace {

class LiteralParser {
 public:
  explicit LiteralParser(std::string_view s) : s_(s) {}

  Distribution parse() {
    std::string name = ident();
    expect('(');
    while (true) {
      skip_ws();
      if (peek() == ')') break;
      std::string key = ident();
      expect('=');
      skip_ws();
      if (peek() == '[') {
        lists_.emplace_back(key, list());
      } else {
        scalars_.emplace_back(key, number());
      }
      skip_ws();
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      if (peek() != ')') fail("expected ',' or ')'");
    }
    expect(')');
    skip_ws();
    if (pos_ != s_.size()) fail("trailing characters");

    try {
      if (name == "exp" || name == "exponential") {
        only({"rate"}, {});
        return Exponential{scalar("rate")};
      }
      if (name == "erlang") {
        only({"k", "rate"}, {});
        double k = scalar("k");
        if (k != std::floor(k) || k < 1) fail("erlang: k must be a positive integer");
        return Erlang{static_cast<int>(k), scalar("rate")};
      }
      if (name == "hyperexp") {
        only({}, {"w", "rate"});
        return HyperExponential{vec("w"), vec("rate")};
      }
      if (name == "uniform") {
        only({"lo", "hi"}, {});
        return UniformShifted{scalar("lo"), scalar("hi")};
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ConfigError) throw;
      throw Error(ErrorCode::ConfigError, std::string(s_) + ": " + e.what());
    }
    fail("unknown distribution '" + name + "'");
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::ConfigError,
                "cannot parse distribution '" + std::string(s_) + "' at column " + std::to_string(pos_ + 1) +
                    ": " + what);
  }
  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  void expect(char c) {
    skip_ws();
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  std::string ident() {
    skip_ws();
    std::size_t b = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    if (b == pos_) fail("expected a name");
    return std::string(s_.substr(b, pos_ - b));
  }
  double number() {
    skip_ws();
    double v = 0;
    auto r = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), v);
    if (r.ec != std::errc()) fail("expected a number");
    pos_ = static_cast<std::size_t>(r.ptr - s_.data());
    return v;
  }
  std::vector<double> list() {
    expect('[');
    std::vector<double> out;
    skip_ws();
    if (peek() == ']') {
      ++pos_;
      return out;
    }
    while (true) {
      out.push_back(number());
      skip_ws();
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      expect(']');
      return out;
    }
  }
  double scalar(const std::string& key) {
    for (auto& [k, v] : scalars_)
      if (k == key) return v;
    fail("missing parameter '" + key + "'");
  }
  std::vector<double> vec(const std::string& key) {
    for (auto& [k, v] : lists_)
      if (k == key) return v;
    fail("missing parameter '" + key + "'");
  }
  void only(std::initializer_list<const char*> sc, std::initializer_list<const char*> ls) {
    for (auto& [k, v] : scalars_)
      if (std::none_of(sc.begin(), sc.end(), [&](const char* n) { return k == n; }))
        fail("unexpected scalar parameter '" + k + "'");
    for (auto& [k, v] : lists_)
      if (std::none_of(ls.begin(), ls.end(), [&](const char* n) { return k == n; }))
        fail("unexpected list parameter '" + k + "'");
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::vector<std::pair<std::string, double>> scalars_;
  std::vector<std::pair<std::string, std::vector<double>>> lists_;
};

}  // namespace

Distribution parse_distribution(std::string_view text) { return LiteralParser(text).parse(); }

}  // namespace dcftp
