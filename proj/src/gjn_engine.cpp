#include "dcftp/gjn_engine.hpp"

#include <algorithm>
#include <string>

#include "dcftp/error.hpp"

namespace dcftp {

double ServiceSource::next_vacation(int station) {
  throw Error(ErrorCode::SequenceExhausted, "no vacation sequence for station " + std::to_string(station + 1));
}

SequenceSource::SequenceSource(const DrivingSequences& seqs)
    : seqs_(seqs), si_(seqs.d, 0), vi_(seqs.d, 0) {}

ServiceDraw SequenceSource::next_service(int station) {
  const auto& v = seqs_.services[station];
  if (si_[station] >= v.size())
    throw Error(ErrorCode::SequenceExhausted, "station " + std::to_string(station + 1) + " has no service " +
                                                  std::to_string(si_[station] + 1));
  return v[si_[station]++];
}

double SequenceSource::next_vacation(int station) {
  const auto& v = seqs_.vacations[station];
  if (vi_[station] >= v.size())
    throw Error(ErrorCode::SequenceExhausted, "station " + std::to_string(station + 1) + " has no vacation " +
                                                  std::to_string(vi_[station] + 1));
  return v[vi_[station]++];
}

IidSource::IidSource(const NetworkSpec& spec, RandomStream& rng) : spec_(spec), rng_(rng) {
  for (int i = 0; i < spec.d; ++i) {
    std::vector<double> r(spec.d + 1);
    double row = 0;
    for (int j = 0; j < spec.d; ++j) row += (r[j] = spec.Q(i, j));
    r[spec.d] = std::max(0.0, 1 - row);
    route_.push_back(std::move(r));
  }
}

ServiceDraw IidSource::next_service(int station) {
  double s = spec_.services[station].sample(rng_);
  const auto& r = route_[station];
  int mark = r[spec_.d] >= 1 ? spec_.d : static_cast<int>(rng_.categorical(r));
  return {s, mark};
}

namespace {

enum class Phase { Idle, Service, Vacation };

struct Station {
  long q = 0;
  Phase phase = Phase::Idle;
  double done = 0;
  int mark = 0;
};

}  // namespace

EngineResult run_fifo(int d, double t_start, double t_end, const std::vector<ArrivalEvent>& arrivals,
                      ServiceSource& src, const EngineOptions& opt) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<Station> st(d);
  EngineResult res;
  bool stopped = false;

  auto scale = [&](int i) { return opt.scale.empty() ? 1.0 : opt.scale[i]; };
  auto start_service = [&](int i, double now) {
    try {
      ServiceDraw s = src.next_service(i);
      st[i].phase = Phase::Service;
      st[i].done = now + s.duration * scale(i);
      st[i].mark = s.mark;
      ++res.services_started;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SequenceExhausted) throw;
      res.exhausted_at = now;
      stopped = true;
    }
  };
  auto start_vacation = [&](int i, double now) {
    try {
      st[i].phase = Phase::Vacation;
      st[i].done = now + src.next_vacation(i);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SequenceExhausted) throw;
      res.exhausted_at = now;
      stopped = true;
    }
  };
  auto idle = [&](int i, double now) {
    if (opt.vacations)
      start_vacation(i, now);
    else
      st[i].phase = Phase::Idle;
  };
  auto join = [&](int i, double now) {
    ++st[i].q;
    if (st[i].phase == Phase::Idle) start_service(i, now);
  };

  if (opt.vacations)
    for (int i = 0; i < d; ++i) {
      st[i].phase = Phase::Vacation;
      st[i].done = t_start + (opt.initial_vacation.empty() ? 0.0 : opt.initial_vacation[i]);
    }

  std::size_t ai = 0;
  while (ai < arrivals.size() && arrivals[ai].t <= t_start) ++ai;
  std::size_t oi = 0;
  auto snapshot = [&]() {
    std::vector<long> y(d);
    for (int i = 0; i < d; ++i) y[i] = st[i].q;
    return y;
  };

  while (!stopped) {
    int ci = -1;
    double ct = inf;
    for (int i = 0; i < d; ++i)
      if (st[i].phase != Phase::Idle && st[i].done < ct) {
        ct = st[i].done;
        ci = i;
      }
    double at = ai < arrivals.size() ? arrivals[ai].t : inf;
    bool completion = ci >= 0 && (ct < at || (ct == at && ci <= arrivals[ai].station));
    double now = completion ? ct : at;
    while (oi < opt.observe.size() && opt.observe[oi] < std::min(now, t_end)) {
      res.observed.push_back(snapshot());
      ++oi;
    }
    if (!(now <= t_end)) break;
    if (completion) {
      Station& s = st[ci];
      if (s.phase == Phase::Service) {
        --s.q;
        if (s.mark < d) join(s.mark, now);
      }
      if (stopped) break;
      if (s.q > 0)
        start_service(ci, now);
      else
        idle(ci, now);
    } else {
      join(arrivals[ai].station, now);
      ++ai;
    }
    ++res.events;
    if (opt.record && !stopped) {
      res.t.push_back(now);
      res.path.push_back(snapshot());
    }
  }
  while (oi < opt.observe.size() && opt.observe[oi] <= t_end && !stopped) {
    res.observed.push_back(snapshot());
    ++oi;
  }
  res.y = snapshot();
  res.residual_service.assign(d, 0.0);
  for (int i = 0; i < d; ++i)
    if (st[i].phase == Phase::Service) res.residual_service[i] = st[i].done - t_end;
  return res;
}

}  // namespace dcftp
