#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

#include "dcftp/multiwalk.hpp"
#include "dcftp/network.hpp"

namespace dcftp {

/// Everything derived from a NetworkSpec that sampling needs; immutable and
/// shared by all samples of a batch.
struct QueueModel {
  NetworkSpec spec;
  FlowSolution flow;
  AuxiliaryRates aux;
  std::shared_ptr<const IncrementModel> inc;
  TiltParameters tilt;
};

std::shared_ptr<const QueueModel> make_queue_model(const NetworkSpec& spec, const AuxOptions& aux = {},
                                                   std::optional<double> milestone_m = std::nullopt);

enum class EventKind : std::uint8_t { Arrival = 0, Activity = 1 };

/// An epoch in reversed time. For activities, `duration` is the length of the
/// activity ending at this epoch and `mark` its routing target (d = exit).
struct TimelineEvent {
  double t;
  int station;
  EventKind kind;
  int mark = -1;
  std::uint32_t index = 0;  // 1-based epoch number within its process
  double duration = 0;
};

/// Real-forward order of simultaneous epochs is (station asc, activity first);
/// the reversed list is its mirror image.
inline bool reversed_before(const TimelineEvent& a, const TimelineEvent& b) {
  if (a.t != b.t) return a.t < b.t;
  if (a.station != b.station) return a.station > b.station;
  return a.kind < b.kind;
}

/// Reversed-time stationary renewal epochs with routing marks, complete on
/// [0, horizon).
struct MarkedEventTimeline {
  int d = 0;
  std::vector<std::vector<double>> arrival_epochs;   // [i][n-1]
  std::vector<std::vector<double>> activity_epochs;  // [i][n-1]
  std::vector<std::vector<int>> marks;               // [i][n-1]
  std::vector<TimelineEvent> events;                 // sorted by reversed_before
  double horizon = 0;
  std::size_t steps = 0;  // walk steps incorporated
  std::vector<std::size_t> emitted_arrivals, emitted_activities;

  /// Number of events with t <= u.
  std::size_t count_until(double u) const;
};

/// Builds or extends `tl` with the walk steps not yet incorporated. Throws
/// InconsistentIncrements when stored primitives disagree with the path.
void timeline_from_walk(MarkedEventTimeline& tl, const WalkSampler& walk, const WalkOrigin& origin);

/// Arrival, departure and routed counts on [0, u].
struct Counts {
  std::vector<long> n, dep;  // per station
  std::vector<long> routed;  // routed[j * d + i]
  explicit Counts(int d = 0) : n(d, 0), dep(d, 0), routed(static_cast<std::size_t>(d) * d, 0) {}
  void apply(const TimelineEvent& e, int d);
  long x(int i, int d) const;
};

struct StarredValues {
  std::vector<double> arrival;              // N*_i
  std::vector<double> departure;            // D*_i
  std::vector<std::vector<double>> routed;  // D*_{j,i}; 0 where Q(j,i) = 0
  std::vector<double> z;                    // per station bound
};

/// Piecewise-constant stationary autonomous queue on reversed [0, T]:
/// value k holds on [e_k, e_{k+1}) with e_0 = 0.
struct StationaryQueuePath {
  double T = 0;
  std::size_t n_events = 0;          // events in [0, T]
  std::vector<std::vector<long>> x;  // [k][i], k = 0..n_events
  std::vector<std::vector<long>> y;  // Ybar'
  std::vector<long> x_star_T;
  /// Values at real time 0.
  std::vector<long> at_zero() const { return y.front(); }
  std::vector<long> at_horizon() const { return y.back(); }
};

/// Per-sample state: walk, origin, timeline. Extension reuses all randomness.
class StationaryQueue {
 public:
  StationaryQueue(std::shared_ptr<const QueueModel> qm, std::uint64_t seed);

  const QueueModel& model() const { return *qm_; }
  const MarkedEventTimeline& timeline() const { return tl_; }
  const WalkSampler& walk() const { return *walk_; }
  const WalkOrigin& origin() const { return origin_; }

  /// Extend until the timeline is complete beyond t.
  void ensure_horizon(double t);
  /// Extend until at least n events are known.
  void ensure_events(std::size_t n);

  /// Starred suprema at u given the counts on [0, u]; throws Unsettled when
  /// u is beyond the timeline.
  StarredValues eval_starred(double u, const Counts& c) const;
  StarredValues eval_starred(double u);
  double z_bound(int i, double u, const Counts& c) const;

  /// Settled Ybar'(T) (reversed time T), extending the walk as needed.
  std::vector<long> y_prime_at(double T, std::vector<long>* x_star = nullptr);
  StationaryQueuePath compute_y_prime(double T);
  StationaryQueuePath extend_backward(const StationaryQueuePath& old, double c_t);

  /// Integrates the reflected dynamics forward in real time from the horizon
  /// value; must agree with the max formula.
  static std::vector<std::vector<long>> lindley_from_horizon(const StationaryQueuePath& p,
                                                             const MarkedEventTimeline& tl);

  void dump_csv(std::ostream& os, const StationaryQueuePath& p);

  std::uint64_t draws() const { return walk_->draws() + w0_draws_; }

 private:
  void extend_once();

  std::shared_ptr<const QueueModel> qm_;
  std::unique_ptr<WalkSampler> walk_;
  WalkOrigin origin_;
  std::uint64_t w0_draws_ = 0;
  MarkedEventTimeline tl_;
};

}  // namespace dcftp
