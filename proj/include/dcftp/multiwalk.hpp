#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "dcftp/distributions.hpp"
#include "dcftp/network.hpp"
#include "dcftp/random.hpp"

namespace dcftp {

enum class CoordKind { ExternalGap, ServiceGap, RoutedGap };

/// One walk coordinate W = offset + coef * gap + [mark of `source` == target].
struct Coordinate {
  CoordKind kind;
  int station;  // station whose bound this coordinate enters
  int source;   // station whose primitive drives it
  double rate;  // gamma_i, beta_i or phi_{j,i}
  double q = 0; // Q(j, i) for routed coordinates
};

/// Per-step primitives: arrival gap of every station (0 when it has no
/// arrivals), activity gap of every station, and the routing mark of every
/// station's activity (d = leaves the network).
struct IncrementModel {
  int d = 0;
  std::vector<Coordinate> coords;
  std::vector<double> shift;  // a', per coordinate
  std::vector<std::optional<Distribution>> arrival;
  std::vector<Distribution> activity;        // slowed service laws
  std::vector<std::vector<double>> route;    // Q row then exit probability
  std::vector<int> ext_coord;                // station -> coordinate or -1
  std::vector<int> svc_coord;                // station -> coordinate
  std::vector<std::vector<int>> routed_coord;  // [j][i] -> coordinate or -1

  int l() const { return static_cast<int>(coords.size()); }
  /// Primitive slot (0..2d) of the gap that drives coordinate c.
  int gap_slot(int c) const;
  /// Nominal mean of coordinate c including its shift.
  double mean(int c) const;
};

/// Throws NonNegativeDrift when a retained coordinate does not drift down.
IncrementModel build_increment_model(const NetworkSpec& spec, const AuxiliaryRates& aux);

/// log E exp(theta W_c), including the shift. Throws Divergent outside the domain.
double psi(const IncrementModel& model, int c, double theta);
/// Supremum of theta at which psi(c, .) is finite.
double psi_abscissa(const IncrementModel& model, int c);

struct TiltParameters {
  std::vector<double> theta;
  std::vector<double> w;
  double m = 0;
};

/// Positive roots of psi. When a coordinate has no root inside the mgf
/// domain, its shift is raised (doubling, keeping the mean negative) until
/// one exists; throws NoRoot if that fails.
std::vector<double> find_theta_star(IncrementModel& model);
/// m with sum_c exp(-theta_c m) = 1/2.
double choose_m(const std::vector<double>& theta);
TiltParameters make_tilt(IncrementModel& model, std::optional<double> m_override = std::nullopt);

/// Initial increment built from equilibrium first epochs.
struct WalkOrigin {
  std::vector<double> w0;              // per coordinate
  std::vector<double> first_arrival;   // per station, 0 when no arrivals
  std::vector<double> first_activity;  // per station
};
WalkOrigin sample_w0(const IncrementModel& model, RandomStream& rng);

struct JointPath {
  std::vector<std::vector<double>> S;  // S[k][c], k = 0..n, W0 included
  std::vector<std::vector<double>> M;  // future maxima
  std::vector<double> W0;
};

/// Segment produced by one Algorithm-3 style pass, relative to its start.
struct Segment {
  std::vector<double> points;  // (len + 1) * l, row 0 is the origin
  std::vector<double> gaps;    // len * 2d
  std::vector<std::int16_t> marks;  // len * d
  std::vector<double> max;     // l
  std::size_t length() const;
  int l = 0;
};

/// Resumable exact sampler of the joint path of the walk and its future
/// maxima. Path index 0 is the origin; step k >= 1 consumes primitive row k.
class WalkSampler {
 public:
  WalkSampler(std::shared_ptr<const IncrementModel> model, TiltParameters tilt, RandomStream rng);

  const IncrementModel& model() const { return *model_; }
  const TiltParameters& tilt() const { return tilt_; }

  /// Returns J; when true `out` holds the path up to the first exit above m.
  bool sample_crossing_attempt(Segment& out, double* accept_prob = nullptr);
  /// Fresh segment from 0 to its Delta, with its all-time maximum.
  Segment sample_segment_to_delta();

  /// Append one accepted segment (rejection on the conditional upper bound).
  void extend_once();
  /// Extend until M is exact on 0..n.
  void extend_joint_path(std::size_t n);
  /// Extend until at least n steps are stored.
  void extend_steps(std::size_t n);

  std::size_t end() const { return end_; }
  /// Largest index at which the stored M values are exact.
  std::size_t settled() const { return starts_.empty() ? 0 : starts_.back(); }
  const std::vector<std::size_t>& milestones() const { return starts_; }
  const std::vector<double>& c_ub() const { return cub_; }

  /// Walk value without W0 and without shift.
  double s(std::size_t k, int c) const {
    return path_[k * l_ + c] - model_->shift[c] * static_cast<double>(k);
  }
  /// Upper bound on sup_{j >= k} s(j, c); exact for k <= settled() when the
  /// coordinate is unshifted. Requires k <= end().
  double m_upper(std::size_t k, int c) const {
    double v = sufmax_[k * l_ + c];
    if (cub_[c] > v) v = cub_[c];
    return v - model_->shift[c] * static_cast<double>(k);
  }

  double gap(std::size_t k, int slot) const { return gaps_[(k - 1) * g_ + slot]; }
  int mark(std::size_t k, int station) const { return marks_[(k - 1) * model_->d + station]; }

  JointPath joint_path(std::size_t n, const std::vector<double>& w0);
  std::uint64_t draws() const { return rng_.draws(); }

  void dump_csv(std::ostream& os) const;

 private:
  void draw_step(int tilted, double* gaps, std::int16_t* marks);
  void increments(const double* gaps, const std::int16_t* marks, double* w) const;

  std::shared_ptr<const IncrementModel> model_;
  TiltParameters tilt_;
  RandomStream rng_;
  int l_;
  int g_;

  // coordinate increment layout
  std::vector<int> slot_;
  std::vector<double> coef_, offset_;
  std::vector<int> mark_src_, mark_tgt_;
  // tilted primitive per coordinate
  std::vector<std::optional<Distribution>> tilted_law_;
  std::vector<double> tilt_s_;
  std::vector<std::vector<double>> tilted_route_;
  std::vector<double> log_w_;

  std::vector<double> path_, sufmax_, gaps_;
  std::vector<std::int16_t> marks_;
  std::vector<double> cub_;
  std::vector<std::size_t> starts_;
  std::size_t end_ = 0;
};

}  // namespace dcftp
