#include "dcftp/stationary_queue.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "dcftp/error.hpp"

namespace dcftp {

std::shared_ptr<const QueueModel> make_queue_model(const NetworkSpec& spec, const AuxOptions& aux,
                                                   std::optional<double> milestone_m) {
  spec.validate();
  auto qm = std::make_shared<QueueModel>();
  qm->spec = spec;
  qm->flow = solve_flow(spec);
  qm->aux = build_auxiliary(spec, qm->flow, aux);
  auto inc = std::make_shared<IncrementModel>(build_increment_model(spec, qm->aux));
  qm->tilt = make_tilt(*inc, milestone_m);
  qm->inc = inc;
  return qm;
}

std::size_t MarkedEventTimeline::count_until(double u) const {
  auto it = std::upper_bound(events.begin(), events.end(), u,
                             [](double v, const TimelineEvent& e) { return v < e.t; });
  return static_cast<std::size_t>(it - events.begin());
}

void timeline_from_walk(MarkedEventTimeline& tl, const WalkSampler& walk, const WalkOrigin& origin) {
  const auto& m = walk.model();
  const int d = m.d;
  if (tl.d == 0) {
    tl.d = d;
    tl.arrival_epochs.assign(d, {});
    tl.activity_epochs.assign(d, {});
    tl.marks.assign(d, {});
    tl.emitted_arrivals.assign(d, 0);
    tl.emitted_activities.assign(d, 0);
    for (int i = 0; i < d; ++i) {
      if (m.arrival[i]) tl.arrival_epochs[i].push_back(origin.first_arrival[i]);
      tl.activity_epochs[i].push_back(origin.first_activity[i]);
    }
  }
  const int l = m.l();
  for (std::size_t k = tl.steps + 1; k <= walk.end(); ++k) {
    for (int i = 0; i < d; ++i) {
      if (m.arrival[i]) tl.arrival_epochs[i].push_back(tl.arrival_epochs[i].back() + walk.gap(k, i));
      tl.activity_epochs[i].push_back(tl.activity_epochs[i].back() + walk.gap(k, d + i));
      tl.marks[i].push_back(walk.mark(k, i));
    }
    for (int c = 0; c < l; ++c) {
      const auto& co = m.coords[c];
      double g = walk.gap(k, m.gap_slot(c));
      double w = 0;
      switch (co.kind) {
        case CoordKind::ExternalGap:
          w = 1 - co.rate * g;
          break;
        case CoordKind::ServiceGap:
          w = co.rate * g - 1;
          break;
        case CoordKind::RoutedGap:
          w = (walk.mark(k, co.source) == co.station ? 1.0 : 0.0) - co.rate * g;
          break;
      }
      double diff = walk.s(k, c) - walk.s(k - 1, c);
      double tol = 1e-9 * (1 + std::abs(walk.s(k, c)) + std::abs(walk.s(k - 1, c)));
      if (!(std::abs(diff - w) <= tol))
        throw Error(ErrorCode::InconsistentIncrements,
                    "step " + std::to_string(k) + " coordinate " + std::to_string(c) + ": path increment " +
                        std::to_string(diff) + " vs primitive " + std::to_string(w));
    }
  }
  tl.steps = walk.end();

  double H = std::numeric_limits<double>::infinity();
  for (int i = 0; i < d; ++i) {
    if (m.arrival[i]) H = std::min(H, tl.arrival_epochs[i][tl.steps]);
    H = std::min(H, tl.activity_epochs[i][tl.steps]);
  }
  // each process is already in order; merge the per-process runs
  struct Run {
    int station;
    EventKind kind;
    std::size_t next, end;
  };
  std::vector<Run> runs;
  for (int i = 0; i < d; ++i) {
    if (m.arrival[i]) {
      auto& e = tl.emitted_arrivals[i];
      const auto& ep = tl.arrival_epochs[i];
      std::size_t stop = e;
      while (stop < ep.size() && ep[stop] < H) ++stop;
      runs.push_back({i, EventKind::Arrival, e, stop});
      e = stop;
    }
    auto& e = tl.emitted_activities[i];
    const auto& ep = tl.activity_epochs[i];
    std::size_t stop = e;
    while (stop < ep.size() && ep[stop] < H) ++stop;
    runs.push_back({i, EventKind::Activity, e, stop});
    e = stop;
  }
  auto head = [&](const Run& r) {
    const int i = r.station;
    if (r.kind == EventKind::Arrival)
      return TimelineEvent{tl.arrival_epochs[i][r.next], i, EventKind::Arrival, -1,
                           static_cast<std::uint32_t>(r.next + 1), 0.0};
    return TimelineEvent{tl.activity_epochs[i][r.next], i, EventKind::Activity, tl.marks[i][r.next],
                         static_cast<std::uint32_t>(r.next + 1), walk.gap(r.next + 1, d + i)};
  };
  while (true) {
    int best = -1;
    TimelineEvent be{};
    for (std::size_t r = 0; r < runs.size(); ++r) {
      if (runs[r].next == runs[r].end) continue;
      TimelineEvent e = head(runs[r]);
      if (best < 0 || reversed_before(e, be)) {
        best = static_cast<int>(r);
        be = e;
      }
    }
    if (best < 0) break;
    tl.events.push_back(be);
    ++runs[best].next;
  }
  tl.horizon = H;
}

void Counts::apply(const TimelineEvent& e, int d) {
  if (e.kind == EventKind::Arrival) {
    ++n[e.station];
  } else {
    ++dep[e.station];
    if (e.mark < d) ++routed[static_cast<std::size_t>(e.station) * d + e.mark];
  }
}

long Counts::x(int i, int d) const {
  long v = n[i] - dep[i];
  for (int j = 0; j < d; ++j) v += routed[static_cast<std::size_t>(j) * d + i];
  return v;
}

StationaryQueue::StationaryQueue(std::shared_ptr<const QueueModel> qm, std::uint64_t seed) : qm_(std::move(qm)) {
  RandomStream master(seed);
  RandomStream orng = master.child(stream_tag::origin);
  origin_ = sample_w0(*qm_->inc, orng);
  w0_draws_ = orng.draws();
  walk_ = std::make_unique<WalkSampler>(qm_->inc, qm_->tilt, master.child(stream_tag::walk));
  timeline_from_walk(tl_, *walk_, origin_);
}

void StationaryQueue::extend_once() {
  walk_->extend_once();
  timeline_from_walk(tl_, *walk_, origin_);
}

void StationaryQueue::ensure_horizon(double t) {
  while (!(tl_.horizon > t)) extend_once();
}

void StationaryQueue::ensure_events(std::size_t n) {
  while (tl_.events.size() < n) extend_once();
}

double StationaryQueue::z_bound(int i, double u, const Counts& c) const {
  const auto& m = *qm_->inc;
  const int d = m.d;
  const auto& w0 = origin_.w0;
  double z = 0;
  int ce = m.ext_coord[i];
  if (ce >= 0)
    z += std::max(c.n[i] - qm_->aux.gamma(i) * u, 1 + w0[ce] + walk_->m_upper(c.n[i], ce));
  else
    z -= qm_->aux.gamma(i) * u;
  int cs = m.svc_coord[i];
  z += w0[cs] + walk_->m_upper(c.dep[i], cs);
  for (int j = 0; j < d; ++j) {
    int cr = m.routed_coord[j][i];
    if (cr < 0) continue;
    z += std::max(c.routed[static_cast<std::size_t>(j) * d + i] - qm_->aux.phi_route(j, i) * u,
                  1 + w0[cr] + walk_->m_upper(c.dep[j], cr));
  }
  return z;
}

StarredValues StationaryQueue::eval_starred(double u, const Counts& c) const {
  if (!(u < tl_.horizon) || u < 0)
    throw Error(ErrorCode::Unsettled, "time " + std::to_string(u) + " outside the sampled horizon " +
                                          std::to_string(tl_.horizon));
  const auto& m = *qm_->inc;
  const int d = m.d;
  const auto& w0 = origin_.w0;
  StarredValues sv;
  sv.routed.assign(d, std::vector<double>(d, 0.0));
  for (int i = 0; i < d; ++i) {
    int ce = m.ext_coord[i];
    sv.arrival.push_back(ce >= 0 ? std::max(c.n[i] - qm_->aux.gamma(i) * u, 1 + w0[ce] + walk_->m_upper(c.n[i], ce))
                                 : -qm_->aux.gamma(i) * u);
    int cs = m.svc_coord[i];
    sv.departure.push_back(w0[cs] + walk_->m_upper(c.dep[i], cs));
    for (int j = 0; j < d; ++j) {
      int cr = m.routed_coord[j][i];
      if (cr < 0) continue;
      sv.routed[j][i] = std::max(c.routed[static_cast<std::size_t>(j) * d + i] - qm_->aux.phi_route(j, i) * u,
                                 1 + w0[cr] + walk_->m_upper(c.dep[j], cr));
    }
    sv.z.push_back(z_bound(i, u, c));
  }
  return sv;
}

StarredValues StationaryQueue::eval_starred(double u) {
  ensure_horizon(u);
  Counts c(tl_.d);
  std::size_t k = tl_.count_until(u);
  for (std::size_t e = 0; e < k; ++e) c.apply(tl_.events[e], tl_.d);
  return eval_starred(u, c);
}

std::vector<long> StationaryQueue::y_prime_at(double T, std::vector<long>* x_star) {
  const int d = tl_.d;
  ensure_horizon(T);
  std::size_t k0 = tl_.count_until(T);
  Counts c(d);
  for (std::size_t e = 0; e < k0; ++e) c.apply(tl_.events[e], d);
  std::vector<long> x0(d), run(d);
  for (int i = 0; i < d; ++i) x0[i] = run[i] = c.x(i, d);
  std::vector<char> settled(d, 0);
  int open = d;
  auto check = [&](double u) {
    for (int i = 0; i < d; ++i) {
      if (settled[i]) continue;
      if (z_bound(i, u, c) <= static_cast<double>(run[i])) {
        settled[i] = 1;
        --open;
      }
    }
  };
  check(T);
  for (std::size_t l = k0; open > 0; ++l) {
    while (l >= tl_.events.size()) extend_once();
    const auto& e = tl_.events[l];
    c.apply(e, d);
    if (e.kind == EventKind::Arrival) {
      run[e.station] = std::max(run[e.station], c.x(e.station, d));
    } else if (e.mark < d) {
      run[e.mark] = std::max(run[e.mark], c.x(e.mark, d));
    }
    check(e.t);
  }
  std::vector<long> y(d);
  for (int i = 0; i < d; ++i) y[i] = run[i] - x0[i];
  if (x_star) *x_star = run;
  return y;
}

StationaryQueuePath StationaryQueue::compute_y_prime(double T) {
  const int d = tl_.d;
  StationaryQueuePath p;
  p.T = T;
  std::vector<long> xs;
  y_prime_at(T, &xs);
  p.x_star_T = xs;
  p.n_events = tl_.count_until(T);
  Counts c(d);
  p.x.reserve(p.n_events + 1);
  p.x.emplace_back(d, 0);
  for (std::size_t k = 0; k < p.n_events; ++k) {
    c.apply(tl_.events[k], d);
    std::vector<long> row(d);
    for (int i = 0; i < d; ++i) row[i] = c.x(i, d);
    p.x.push_back(std::move(row));
  }
  p.y.assign(p.n_events + 1, std::vector<long>(d));
  std::vector<long> run = xs;
  for (std::size_t k = p.n_events + 1; k-- > 0;) {
    for (int i = 0; i < d; ++i) {
      run[i] = std::max(run[i], p.x[k][i]);
      p.y[k][i] = run[i] - p.x[k][i];
    }
  }
  return p;
}

StationaryQueuePath StationaryQueue::extend_backward(const StationaryQueuePath& old, double c_t) {
  if (!(c_t > 0)) throw Error(ErrorCode::InvalidArgument, "C_T must be positive");
  return compute_y_prime(old.T + c_t);
}

std::vector<std::vector<long>> StationaryQueue::lindley_from_horizon(const StationaryQueuePath& p,
                                                                     const MarkedEventTimeline& tl) {
  const int d = tl.d;
  std::vector<std::vector<long>> y(p.n_events + 1);
  y[p.n_events] = p.y[p.n_events];
  for (std::size_t k = p.n_events; k >= 1; --k) {
    std::vector<long> v = y[k];
    const auto& e = tl.events[k - 1];
    if (e.kind == EventKind::Arrival) {
      ++v[e.station];
    } else {
      if (e.mark < d) ++v[e.mark];
      v[e.station] = std::max(0L, v[e.station] - 1);
    }
    y[k - 1] = std::move(v);
  }
  return y;
}

void StationaryQueue::dump_csv(std::ostream& os, const StationaryQueuePath& p) {
  const int d = tl_.d;
  os << "k,t";
  for (int i = 0; i < d; ++i) os << ",y" << i + 1;
  for (int i = 0; i < d; ++i) os << ",x" << i + 1;
  for (int i = 0; i < d; ++i) os << ",z" << i + 1;
  os << '\n';
  Counts c(d);
  for (std::size_t k = 0; k <= p.n_events; ++k) {
    double u = 0;
    if (k > 0) {
      c.apply(tl_.events[k - 1], d);
      u = tl_.events[k - 1].t;
    }
    os << k << ',' << u;
    for (int i = 0; i < d; ++i) os << ',' << p.y[k][i];
    for (int i = 0; i < d; ++i) os << ',' << p.x[k][i];
    for (int i = 0; i < d; ++i) os << ',' << z_bound(i, u, c);
    os << '\n';
  }
}

}  // namespace dcftp
