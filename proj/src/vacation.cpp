#include "dcftp/vacation.hpp"

#include <algorithm>
#include <limits>
#include <ostream>
#include <sstream>

#include "dcftp/error.hpp"

namespace dcftp {

bool VacationState::empty() const {
  for (std::size_t i = 0; i < yhat.size(); ++i)
    if (yhat[i] + s[i] != 0) return false;
  return true;
}

VacationSystem::VacationSystem(int d, VacationState init) : d_(d), st_(std::move(init)) {
  if (static_cast<int>(st_.yhat.size()) != d || static_cast<int>(st_.s.size()) != d)
    throw Error(ErrorCode::InvalidArgument, "vacation state has the wrong dimension");
  for (int i = 0; i < d; ++i)
    if (st_.yhat[i] < 0 || (st_.s[i] != 0 && st_.s[i] != 1))
      throw Error(ErrorCode::InvalidArgument, "vacation state out of range");
}

std::optional<ActivityRecord> VacationSystem::apply(const TimelineEvent& e, double t) {
  if (e.kind == EventKind::Arrival) {
    ++st_.yhat[e.station];
    return std::nullopt;
  }
  const int j = e.station;
  const bool service = st_.s[j] == 1;
  if (service && e.mark < d_) ++st_.yhat[e.mark];
  if (st_.yhat[j] > 0) {
    --st_.yhat[j];
    st_.s[j] = 1;
  } else {
    st_.s[j] = 0;
  }
  return ActivityRecord{j, t, e.duration, e.mark, service};
}

VacationTrajectory evolve_vacation(const MarkedEventTimeline& tl, const VacationState& init, const VacationWindow& w,
                                   const EvolveOptions& opt) {
  const int d = tl.d;
  VacationSystem sys(d, init);
  VacationTrajectory tr;
  if (w.from_event > tl.events.size())
    throw Error(ErrorCode::Unsettled, "vacation window beyond the timeline");
  long nonzero = 0;
  for (int i = 0; i < d; ++i) nonzero += sys.state().y(i) != 0;
  for (std::size_t k = w.from_event; k > w.to_event; --k) {
    const auto& e = tl.events[k - 1];
    double t = -e.t;
    auto rec = sys.apply(e, t);
    if (rec) tr.activities.push_back(*rec);
    const auto& st = sys.state();
    if (opt.record_path || !tr.coalescence) {
      nonzero = 0;
      for (int i = 0; i < d; ++i) nonzero += st.y(i) != 0;
    }
    if (opt.record_path) {
      std::vector<long> y(d);
      for (int i = 0; i < d; ++i) y[i] = st.y(i);
      tr.y.push_back(std::move(y));
      tr.t.push_back(t);
    }
    if (!tr.coalescence && nonzero == 0) tr.coalescence = w.from_event - k;
    if (opt.trace) {
      *opt.trace << t << ',' << e.station + 1 << ',' << (e.kind == EventKind::Arrival ? "arrival" : "activity");
      for (int i = 0; i < d; ++i) *opt.trace << ',' << st.y(i);
      *opt.trace << '\n';
    }
  }
  tr.final_state = sys.state();
  return tr;
}

std::optional<double> activity_residual(const MarkedEventTimeline& tl, int i, double T) {
  const auto& ep = tl.activity_epochs[i];
  auto it = std::upper_bound(ep.begin(), ep.end(), T);
  if (it == ep.begin()) return std::nullopt;
  return T - *(it - 1);
}

namespace {

VacationState make_state(const MarkedEventTimeline& tl, double T) {
  VacationState st;
  st.yhat.assign(tl.d, 0);
  st.s.assign(tl.d, 0);
  for (int i = 0; i < tl.d; ++i)
    st.residual.push_back(activity_residual(tl, i, T).value_or(std::numeric_limits<double>::infinity()));
  return st;
}

}  // namespace

VacationState init_dominating(const std::vector<long>& y_prime, const MarkedEventTimeline& tl, double T) {
  if (static_cast<int>(y_prime.size()) != tl.d) throw Error(ErrorCode::InvalidArgument, "dimension mismatch");
  if (!(T < tl.horizon)) throw Error(ErrorCode::Unsettled, "initial time beyond the sampled horizon");
  VacationState st = make_state(tl, T);
  for (int i = 0; i < tl.d; ++i) {
    st.yhat[i] = y_prime[i];
    st.s[i] = 1;
  }
  return st;
}

VacationState init_empty(const MarkedEventTimeline& tl, double T) { return make_state(tl, T); }

DrivingSequences extract_sequences(const MarkedEventTimeline& tl, const VacationTrajectory& traj, double t_begin,
                                   double t_end) {
  const int d = tl.d;
  DrivingSequences ds;
  ds.d = d;
  ds.t_begin = t_begin;
  ds.t_end = t_end;
  ds.arrivals.assign(d, {});
  ds.services.assign(d, {});
  ds.vacations.assign(d, {});
  ds.initial_activity.assign(d, std::numeric_limits<double>::infinity());
  auto count_below = [&](double u) {
    return static_cast<std::size_t>(
        std::lower_bound(tl.events.begin(), tl.events.end(), u,
                         [](const TimelineEvent& e, double v) { return e.t < v; }) -
        tl.events.begin());
  };
  std::size_t lo = count_below(-t_end);
  std::size_t hi = count_below(-t_begin);
  for (std::size_t k = hi; k > lo; --k) {
    const auto& e = tl.events[k - 1];
    if (e.kind == EventKind::Arrival) ds.arrivals[e.station].push_back(-e.t);
  }
  std::vector<char> seen(d, 0);
  for (const auto& r : traj.activities) {
    if (!(r.t > t_begin && r.t <= t_end)) continue;
    if (!seen[r.station]) {
      seen[r.station] = 1;
      ds.initial_activity[r.station] = r.t - t_begin;
      continue;
    }
    if (r.service)
      ds.services[r.station].push_back({r.duration, r.mark});
    else
      ds.vacations[r.station].push_back(r.duration);
  }
  return ds;
}

void DominanceReport::merge(const DominanceReport& o) {
  checks += o.checks;
  violations.insert(violations.end(), o.violations.begin(), o.violations.end());
}

void DominanceReport::require() const {
  if (!ok()) throw Error(ErrorCode::DominanceViolation, violations.front());
}

DominanceReport check_componentwise(const std::vector<std::vector<long>>& upper,
                                    const std::vector<std::vector<long>>& lower, const std::vector<double>& t,
                                    const std::string& label, long slack) {
  DominanceReport r;
  std::size_t n = std::min(upper.size(), lower.size());
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < upper[k].size(); ++i) {
      ++r.checks;
      if (lower[k][i] > upper[k][i] + slack && r.violations.size() < 10) {
        std::ostringstream os;
        os << label << ": station " << i + 1 << " at t=" << (k < t.size() ? t[k] : 0.0) << " has " << lower[k][i]
           << " > " << upper[k][i] << " + " << slack;
        r.violations.push_back(os.str());
      }
    }
  return r;
}

DominanceReport check_total(const TotalPath& upper, const TotalPath& lower, const std::string& label) {
  DominanceReport r;
  double stop = std::min(upper.valid_until, lower.valid_until);
  std::size_t a = 0, b = 0;
  long ua = 0, lb = 0;
  const double inf = std::numeric_limits<double>::infinity();
  while (a < upper.t.size() || b < lower.t.size()) {
    double ta = a < upper.t.size() ? upper.t[a] : inf;
    double tb = b < lower.t.size() ? lower.t[b] : inf;
    double now = std::min(ta, tb);
    if (!(now < stop)) break;
    while (a < upper.t.size() && upper.t[a] == now) ua = upper.total[a++];
    while (b < lower.t.size() && lower.t[b] == now) lb = lower.total[b++];
    ++r.checks;
    if (lb > ua && r.violations.size() < 10) {
      std::ostringstream os;
      os << label << ": total " << lb << " > " << ua << " at t=" << now;
      r.violations.push_back(os.str());
    }
  }
  return r;
}

}  // namespace dcftp
