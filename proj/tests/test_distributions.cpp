#include <doctest.h>

#include <cmath>

#include "dcftp/distributions.hpp"
#include "dcftp/error.hpp"
#include "dcftp/oracle_stats.hpp"
#include "support.hpp"

using namespace dcftp;

namespace {

double erlang_cdf(int k, double r, double x) {
  if (x <= 0) return 0;
  double term = 1, sum = 1;
  for (int n = 1; n < k; ++n) {
    term *= r * x / n;
    sum += term;
  }
  return 1 - std::exp(-r * x) * sum;
}

std::vector<double> draws(const std::function<double()>& f, int n) {
  std::vector<double> v(n);
  for (auto& x : v) x = f();
  return v;
}

}  // namespace

TEST_CASE("means") {
  CHECK(Distribution(Exponential{2}).mean() == doctest::Approx(0.5));
  CHECK(Distribution(Erlang{3, 6}).mean() == doctest::Approx(0.5));
  CHECK(Distribution(HyperExponential{{0.5, 0.5}, {1, 4}}).mean() == doctest::Approx(0.625));
  CHECK(Distribution(UniformShifted{1, 2}).mean() == doctest::Approx(1.5));
}

TEST_CASE("invalid parameters are rejected") {
  CHECK_THROWS_AS(Distribution(Exponential{0}), Error);
  CHECK_THROWS_AS(Distribution(Erlang{0, 1}), Error);
  CHECK_THROWS_AS(Distribution(HyperExponential{{0.5, 0.6}, {1, 2}}), Error);
  CHECK_THROWS_AS(Distribution(UniformShifted{2, 1}), Error);
}

TEST_CASE("mgf") {
  CHECK(Distribution(Exponential{1}).mgf(0.5) == doctest::Approx(2.0));
  try {
    Distribution(Exponential{1}).mgf(1.0);
    FAIL("expected divergence");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Divergent);
  }
  CHECK(Distribution(Erlang{2, 3}).mgf(1) == doctest::Approx(2.25));
  Distribution u = UniformShifted{0, 1};
  CHECK(u.mgf(1.0) == doctest::Approx(std::exp(1.0) - 1));
  CHECK(std::isinf(u.mgf_abscissa()));
}

TEST_CASE("log mgf derivative at zero is the mean") {
  for (Distribution d : {Distribution(Exponential{2}), Distribution(Erlang{3, 2}),
                         Distribution(HyperExponential{{0.3, 0.7}, {1, 5}}), Distribution(UniformShifted{0.5, 2})}) {
    const double h = 1e-5;
    double fd = (d.log_mgf(h) - d.log_mgf(-h)) / (2 * h);
    CHECK(std::abs(fd - d.mean()) < 1e-8);
    CHECK(d.log_mgf(0) == doctest::Approx(0).epsilon(1e-15));
  }
}

TEST_CASE("second moments") {
  CHECK(Distribution(Erlang{2, 3}).second_moment() == doctest::Approx(6.0 / 9.0));
  CHECK(Distribution(UniformShifted{0, 1}).variance() == doctest::Approx(1.0 / 12));
}

TEST_CASE("exponential sample mean") {
  RandomStream rng(1);
  Distribution d = Exponential{2.5};
  auto v = draws([&] { return d.sample(rng); }, 1000000);
  double m = testing::mean_of(v);
  CHECK(std::abs(m - 0.4) < 4 * 0.4 / std::sqrt(1e6));
}

TEST_CASE("erlang samples match the convolution law") {
  RandomStream rng(2);
  Distribution d = Erlang{3, 2};
  auto v = draws([&] { return d.sample(rng); }, 100000);
  CHECK(ks_one_sample(v, [](double x) { return erlang_cdf(3, 2, x); }).p_value > 0.01);
}

TEST_CASE("uniform support") {
  RandomStream rng(3);
  Distribution d = UniformShifted{1, 2};
  for (int k = 0; k < 10000; ++k) {
    double x = d.sample(rng);
    CHECK((x >= 1 && x <= 2));
  }
}

TEST_CASE("tilting") {
  RandomStream rng(4);
  SUBCASE("exponential is rate shifted") {
    Distribution d = Exponential{3};
    auto v = draws([&] { return d.tilted_sample(1.2, rng); }, 20000);
    CHECK(ks_one_sample(v, [](double x) { return 1 - std::exp(-1.8 * x); }).p_value > 0.01);
    auto law = d.tilted_law(1.2);
    REQUIRE(law);
    CHECK(law->mean() == doctest::Approx(1 / 1.8));
  }
  SUBCASE("erlang keeps its shape") {
    Distribution d = Erlang{2, 3};
    auto v = draws([&] { return d.tilted_sample(1.0, rng); }, 20000);
    CHECK(ks_one_sample(v, [](double x) { return erlang_cdf(2, 2, x); }).p_value > 0.01);
  }
  SUBCASE("negative tilt of a hyperexponential") {
    Distribution d = HyperExponential{{0.5, 0.5}, {1, 4}};
    auto law = d.tilted_law(-0.5);
    REQUIRE(law);
    // E_s[X] = d/ds log mgf
    const double h = 1e-6;
    double fd = (d.log_mgf(-0.5 + h) - d.log_mgf(-0.5 - h)) / (2 * h);
    CHECK(law->mean() == doctest::Approx(fd).epsilon(1e-6));
  }
  SUBCASE("uniform tilt") {
    Distribution d = UniformShifted{0, 1};
    CHECK_FALSE(d.tilted_law(1.0));
    const double s = 2.0;
    auto v = draws([&] { return d.tilted_sample(s, rng); }, 20000);
    CHECK(ks_one_sample(v, [&](double x) { return std::expm1(s * x) / std::expm1(s); }).p_value > 0.01);
  }
  SUBCASE("zero tilt is the identity") {
    Distribution d = Erlang{3, 1};
    auto v = draws([&] { return d.tilted_sample(0.0, rng); }, 20000);
    CHECK(ks_one_sample(v, [](double x) { return erlang_cdf(3, 1, x); }).p_value > 0.01);
  }
}

TEST_CASE("equilibrium laws") {
  RandomStream rng(5);
  SUBCASE("exponential is memoryless") {
    Distribution d = Exponential{2};
    auto v = draws([&] { return d.equilibrium_sample(rng); }, 20000);
    CHECK(ks_one_sample(v, [](double x) { return 1 - std::exp(-2 * x); }).p_value > 0.01);
  }
  SUBCASE("erlang mean is E[X^2] / 2E[X]") {
    Distribution d = Erlang{2, 3};
    auto v = draws([&] { return d.equilibrium_sample(rng); }, 100000);
    double m = testing::mean_of(v);
    double ss = 0;
    for (double x : v) ss += (x - m) * (x - m);
    double se = std::sqrt(ss / v.size() / v.size());
    CHECK(std::abs(m - 0.5) < 4 * se);
  }
  SUBCASE("uniform has density 2(1 - x)") {
    Distribution d = UniformShifted{0, 1};
    auto v = draws([&] { return d.equilibrium_sample(rng); }, 20000);
    CHECK(ks_one_sample(v, [](double x) { return 2 * x - x * x; }).p_value > 0.01);
  }
  SUBCASE("hyperexponential") {
    Distribution d = HyperExponential{{0.4, 0.6}, {0.5, 3}};
    auto v = draws([&] { return d.equilibrium_sample(rng); }, 20000);
    // (1 - F) / mean integrates to a mixture of exponentials with weights w_k / (r_k mean)
    double m = d.mean();
    CHECK(ks_one_sample(v, [&](double x) {
            return 1 - (0.4 / 0.5 * std::exp(-0.5 * x) + 0.6 / 3 * std::exp(-3 * x)) / m;
          }).p_value > 0.01);
  }
}

TEST_CASE("residual given age") {
  RandomStream rng(6);
  Distribution u = UniformShifted{1, 3};
  for (int k = 0; k < 1000; ++k) {
    double r = u.residual_given_age(2.0, rng);
    CHECK((r >= 0 && r <= 1));
  }
  Distribution e = Exponential{1.5};
  auto v = draws([&] { return e.residual_given_age(7.0, rng); }, 20000);
  CHECK(ks_one_sample(v, [](double x) { return 1 - std::exp(-1.5 * x); }).p_value > 0.01);
}

TEST_CASE("scaling") {
  Distribution d = Erlang{2, 4};
  CHECK(d.scaled(3).mean() == doctest::Approx(1.5));
  CHECK(Distribution(UniformShifted{1, 2}).scaled(2).mean() == doctest::Approx(3));
  CHECK(Distribution(HyperExponential{{0.5, 0.5}, {1, 4}}).scaled(0.5).mean() == doctest::Approx(0.3125));
}

TEST_CASE("literals") {
  CHECK(parse_distribution("exp(rate=1.0)").mean() == doctest::Approx(1));
  CHECK(parse_distribution("exponential(rate=4)").mean() == doctest::Approx(0.25));
  CHECK(parse_distribution("erlang(k=2, rate=3.0)").mean() == doctest::Approx(2.0 / 3));
  CHECK(parse_distribution("hyperexp(w=[0.5,0.5], rate=[1,4])").mean() == doctest::Approx(0.625));
  CHECK(parse_distribution(" uniform( lo=0 , hi=1 ) ").mean() == doctest::Approx(0.5));
  for (Distribution d : {Distribution(Exponential{2}), Distribution(Erlang{3, 1.5}),
                         Distribution(HyperExponential{{0.25, 0.75}, {1, 4}}), Distribution(UniformShifted{0.5, 2})})
    CHECK(parse_distribution(d.to_string()).mean() == doctest::Approx(d.mean()));

  for (const char* bad : {"exp(rate=)", "gamma(k=1)", "erlang(k=1.5, rate=1)", "exp(rate=1", "uniform(lo=1)",
                          "hyperexp(w=[0.5,0.4], rate=[1,2])", "exp(rate=-1)", "exp(rate=1) junk"}) {
    CAPTURE(bad);
    try {
      parse_distribution(bad);
      FAIL("accepted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ConfigError);
    }
  }
}
