#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dcftp/stationary_queue.hpp"

namespace dcftp {

/// Vacation dominating system: waiting counts and in-service indicators.
/// `residual` is the time to each station's next activity epoch at the moment
/// the state was initialized.
struct VacationState {
  std::vector<long> yhat;
  std::vector<int> s;
  std::vector<double> residual;

  long y(int i) const { return yhat[i] + s[i]; }
  bool empty() const;
};

/// One activity completion as seen by the vacation system.
struct ActivityRecord {
  int station;
  double t;  // real time
  double duration;
  int mark;
  bool service;  // in service just before the epoch
};

/// Event-driven integration of the vacation SDE.
class VacationSystem {
 public:
  VacationSystem(int d, VacationState init);

  /// Applies one epoch at real time t; returns the activity record for
  /// activity epochs.
  std::optional<ActivityRecord> apply(const TimelineEvent& e, double t);

  const VacationState& state() const { return st_; }
  int d() const { return d_; }

 private:
  int d_;
  VacationState st_;
};

/// Reversed events from_event - 1 down to to_event are processed.
struct VacationWindow {
  std::size_t from_event;
  std::size_t to_event = 0;
};

struct VacationTrajectory {
  std::vector<std::vector<long>> y;  // after each processed event, in real order
  std::vector<double> t;             // real times
  std::vector<ActivityRecord> activities;
  std::optional<std::size_t> coalescence;  // position in y of the first all-empty state
  VacationState final_state;
};

struct EvolveOptions {
  bool record_path = true;
  std::ostream* trace = nullptr;
};

/// Runs the vacation system in real-forward order over the reversed events
/// (from_event - 1) down to to_event.
VacationTrajectory evolve_vacation(const MarkedEventTimeline& tl, const VacationState& init,
                                   const VacationWindow& w, const EvolveOptions& opt = {});

/// Residual time at reversed time T until the next activity epoch of i in
/// real-forward time; nullopt when that epoch lies after real time 0.
std::optional<double> activity_residual(const MarkedEventTimeline& tl, int i, double T);

/// Yhat = Ybar'(T), every server busy.
VacationState init_dominating(const std::vector<long>& y_prime, const MarkedEventTimeline& tl, double T);
VacationState init_empty(const MarkedEventTimeline& tl, double T);

struct ServiceDraw {
  double duration;
  int mark;
};

/// Driving sequences extracted from a vacation run.
struct DrivingSequences {
  int d = 0;
  double t_begin = 0, t_end = 0;  // real time window
  std::vector<std::vector<double>> arrivals;       // real arrival times per station
  std::vector<std::vector<ServiceDraw>> services;  // per station, in order
  std::vector<std::vector<double>> vacations;      // complete vacations, in order
  std::vector<double> initial_activity;            // time from t_begin to the first epoch
};

/// Classifies the activities of `traj` completing in (t_begin, t_end]. The
/// first activity of each station straddles t_begin and is reported only as
/// initial_activity.
DrivingSequences extract_sequences(const MarkedEventTimeline& tl, const VacationTrajectory& traj, double t_begin,
                                   double t_end);

struct DominanceReport {
  std::size_t checks = 0;
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
  void merge(const DominanceReport& o);
  /// Throws DominanceViolation carrying the first violation.
  void require() const;
};

/// Per-station upper >= lower at every index.
DominanceReport check_componentwise(const std::vector<std::vector<long>>& upper,
                                    const std::vector<std::vector<long>>& lower, const std::vector<double>& t,
                                    const std::string& label, long slack = 0);

/// Step functions of the total occupancy; upper >= lower after every change.
struct TotalPath {
  std::vector<double> t;
  std::vector<long> total;
  double valid_until = std::numeric_limits<double>::infinity();  // comparison stops before this time
};
DominanceReport check_total(const TotalPath& upper, const TotalPath& lower, const std::string& label);

}  // namespace dcftp
