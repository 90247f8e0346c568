#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "dcftp/random.hpp"

namespace dcftp {

struct Exponential {
  double rate;
};

struct Erlang {
  int shape;
  double rate;
};

struct HyperExponential {
  std::vector<double> weights;
  std::vector<double> rates;
};

/// Uniform on [lo, hi]. Bounded support, so it is only admissible as a
/// service law.
struct UniformShifted {
  double lo;
  double hi;
};

/// Light-tailed positive law with a density and a closed-form moment
/// generating function, exponential tilt, equilibrium (stationary-excess) law
/// and conditional excess law.
class Distribution {
 public:
  using Variant = std::variant<Exponential, Erlang, HyperExponential, UniformShifted>;

  /// Throws Error(InvalidArgument) when parameters violate the invariants.
  Distribution(Variant v);  // NOLINT(google-explicit-constructor)
  template <class T>
    requires std::is_constructible_v<Variant, T> && (!std::is_same_v<std::decay_t<T>, Variant>) &&
             (!std::is_same_v<std::decay_t<T>, Distribution>)
  Distribution(T&& v) : Distribution(Variant(std::forward<T>(v))) {}  // NOLINT(google-explicit-constructor)

  const Variant& variant() const { return v_; }

  double mean() const;
  double second_moment() const;
  double variance() const { return second_moment() - mean() * mean(); }

  /// Supremum of the arguments at which the mgf is finite (+inf for bounded
  /// support). The mgf diverges at and beyond this value.
  double mgf_abscissa() const;

  /// E[exp(sX)]; throws Error(Divergent) when s >= mgf_abscissa().
  double mgf(double s) const;
  /// log E[exp(sX)], computed without forming large intermediate values.
  double log_mgf(double s) const;

  double cdf(double x) const;

  double sample(RandomStream& rng) const;
  /// Draw from the density exp(s x) f(x) / mgf(s).
  double tilted_sample(double s, RandomStream& rng) const;
  /// Draw from the equilibrium density (1 - F(x)) / mean.
  double equilibrium_sample(RandomStream& rng) const;
  /// Draw of X - age conditional on X > age.
  double residual_given_age(double age, RandomStream& rng) const;

  /// Closed-form tilted law when the family is closed under tilting
  /// (exp, erlang, hyperexp); empty for uniform.
  std::optional<Distribution> tilted_law(double s) const;

  /// Law of c * X.
  Distribution scaled(double c) const;

  bool has_unbounded_support() const { return !std::holds_alternative<UniformShifted>(v_); }
  bool is_exponential() const { return std::holds_alternative<Exponential>(v_); }

  /// Config literal, e.g. `erlang(k=2, rate=3)`.
  std::string to_string() const;

 private:
  Variant v_;
};

/// Parses `exp(rate=1.0)`, `erlang(k=2, rate=3.0)`,
/// `hyperexp(w=[0.5,0.5], rate=[1,4])`, `uniform(lo=0, hi=1)`.
/// Throws Error(ConfigError) with a description of the offending token.
Distribution parse_distribution(std::string_view text);

}  // namespace dcftp
