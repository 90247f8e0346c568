#include "dcftp/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <ostream>
#include <string>

#include "dcftp/error.hpp"

namespace dcftp {

std::shared_ptr<const SamplerContext> SamplerContext::make(const NetworkSpec& spec, const SamplerOptions& opt) {
  if (!(opt.ct_growth >= 1)) throw Error(ErrorCode::InvalidArgument, "ct_growth must be >= 1");
  if (opt.ct_initial && !(*opt.ct_initial > 0)) throw Error(ErrorCode::InvalidArgument, "ct_initial must be positive");
  auto ctx = std::make_shared<SamplerContext>();
  ctx->qm = make_queue_model(spec, opt.aux, opt.milestone_m);
  ctx->opt = opt;
  ctx->ct_initial = opt.ct_initial ? *opt.ct_initial : 2.0 / (ctx->qm->aux.mu0 - ctx->qm->flow.phi).minCoeff();
  return ctx;
}

FutureTimeline::FutureTimeline(const IncrementModel& m, const WalkOrigin& origin, const RandomStream& rng) : m_(m) {
  const int d = m.d;
  first_arrival_.assign(d, std::nullopt);
  for (int i = 0; i < d; ++i) {
    if (m.arrival[i]) {
      Proc p{i, EventKind::Arrival, rng.child(2 * static_cast<std::uint64_t>(i)), 0};
      p.next = m.arrival[i]->residual_given_age(origin.first_arrival[i], p.rng);
      first_arrival_[i] = p.next;
      procs_.push_back(std::move(p));
    }
    Proc p{i, EventKind::Activity, rng.child(2 * static_cast<std::uint64_t>(i) + 1), 0};
    double r = m.activity[i].residual_given_age(origin.first_activity[i], p.rng);
    p.next = r;
    p.duration = origin.first_activity[i] + r;
    draw_mark(p);
    procs_.push_back(std::move(p));
  }
}

void FutureTimeline::draw_mark(Proc& p) {
  const auto& r = m_.route[p.station];
  p.mark = r[m_.d] >= 1 ? m_.d : static_cast<int>(p.rng.categorical(r));
}

TimelineEvent FutureTimeline::next() {
  std::size_t best = 0;
  for (std::size_t k = 1; k < procs_.size(); ++k) {
    const auto& a = procs_[k];
    const auto& b = procs_[best];
    if (a.next < b.next || (a.next == b.next && (a.station < b.station ||
                                                 (a.station == b.station && a.kind == EventKind::Activity))))
      best = k;
  }
  Proc& p = procs_[best];
  TimelineEvent e{p.next, p.station, p.kind, p.kind == EventKind::Activity ? p.mark : -1, p.index, p.duration};
  ++p.index;
  if (p.kind == EventKind::Arrival) {
    p.next += m_.arrival[p.station]->sample(p.rng);
  } else {
    double g = m_.activity[p.station].sample(p.rng);
    p.next += g;
    p.duration = g;
    draw_mark(p);
  }
  ++consumed_;
  return e;
}

std::uint64_t FutureTimeline::draws() const {
  std::uint64_t s = 0;
  for (const auto& p : procs_) s += p.rng.draws();
  return s;
}

namespace {

// Services of the dominating system after coalescence, continued past time 0
// on the future timeline when the replay asks for more.
class DominatingServices : public ServiceSource {
 public:
  DominatingServices(int d, VacationSystem& sys, FutureTimeline& fut) : q_(d), sys_(sys), fut_(fut) {}

  void push(const ActivityRecord& r) {
    if (r.service) q_[r.station].push_back({r.duration, r.mark});
  }

  ServiceDraw next_service(int station) override {
    while (q_[station].empty()) {
      TimelineEvent e = fut_.next();
      auto rec = sys_.apply(e, e.t);
      if (rec) push(*rec);
    }
    ServiceDraw s = q_[station].front();
    q_[station].pop_front();
    return s;
  }

 private:
  std::vector<std::deque<ServiceDraw>> q_;
  VacationSystem& sys_;
  FutureTimeline& fut_;
};

}  // namespace

PerfectSampler::PerfectSampler(std::shared_ptr<const SamplerContext> ctx, std::uint64_t seed)
    : ctx_(std::move(ctx)),
      seed_(seed),
      sq_(ctx_->qm, seed),
      C_(ctx_->ct_initial),
      max_rounds_(ctx_->opt.max_rounds),
      max_events_(ctx_->opt.max_events) {}

void PerfectSampler::set_caps(std::size_t max_rounds, std::size_t max_events) {
  max_rounds_ = max_rounds;
  max_events_ = max_events;
}

PerfectSampler::Status PerfectSampler::run() {
  while (true) {
    if (max_rounds_ && rounds_ >= max_rounds_) return Status::BudgetExceeded;
    double T = T_ + C_;
    if (max_events_) {
      sq_.ensure_horizon(T);
      if (sq_.timeline().count_until(T) > max_events_) return Status::BudgetExceeded;
    }
    T_ = T;
    C_ *= ctx_->opt.ct_growth;
    ++rounds_;
    if (attempt()) return Status::Done;
  }
}

bool PerfectSampler::attempt() {
  const auto& qm = *ctx_->qm;
  const int d = qm.spec.d;
  std::vector<long> ybar = sq_.y_prime_at(T_);
  const auto& tl = sq_.timeline();
  const std::size_t k0 = tl.count_until(T_);
  VacationSystem sys(d, init_dominating(ybar, tl, T_));
  FutureTimeline fut(*qm.inc, sq_.origin(), RandomStream(seed_).child(stream_tag::future));
  DominatingServices services(d, sys, fut);

  if (trace) *trace << "# round " << rounds_ << " T=" << T_ << '\n';
  std::optional<std::size_t> tau_k;
  for (std::size_t k = k0; k >= 1; --k) {
    const auto& e = tl.events[k - 1];
    auto rec = sys.apply(e, -e.t);
    if (tau_k) {
      if (rec) services.push(*rec);
    } else if (sys.state().empty()) {
      tau_k = k;
    }
    if (trace) {
      *trace << -e.t << ',' << e.station + 1 << ',' << (e.kind == EventKind::Arrival ? "arrival" : "activity");
      for (int i = 0; i < d; ++i) *trace << ',' << sys.state().y(i);
      *trace << '\n';
    }
  }
  if (!tau_k) return false;

  const double tau = -tl.events[*tau_k - 1].t;
  std::vector<ArrivalEvent> arrivals;
  for (std::size_t k = *tau_k - 1; k >= 1; --k) {
    const auto& e = tl.events[k - 1];
    if (e.kind == EventKind::Arrival) arrivals.push_back({-e.t, e.station});
  }
  EngineOptions eo;
  for (int i = 0; i < d; ++i) eo.scale.push_back(1.0 / qm.aux.a(i));
  EngineResult r = run_fifo(d, tau, 0.0, arrivals, services, eo);
  if (std::isfinite(r.exhausted_at)) throw std::logic_error("replay ran out of services");

  result_.state.y = r.y;
  result_.state.residual_service = r.residual_service;
  result_.state.residual_arrival.assign(d, std::nullopt);
  for (int i = 0; i < d; ++i) result_.state.residual_arrival[i] = fut.first_arrival(i);
  result_.record.tau = tau;
  result_.record.rounds = rounds_;
  result_.record.events = k0 + fut.consumed();
  result_.record.draws = sq_.draws() + fut.draws();
  result_.record.horizon = T_;
  return true;
}

SampleResult sample_stationary(std::shared_ptr<const SamplerContext> ctx, std::uint64_t seed, std::ostream* trace) {
  PerfectSampler s(std::move(ctx), seed);
  s.trace = trace;
  if (s.run() == PerfectSampler::Status::BudgetExceeded)
    throw Error(ErrorCode::ResourceBudgetExceeded, "no coalescence within the configured caps (horizon " +
                                                       std::to_string(s.horizon()) + ", " +
                                                       std::to_string(s.rounds()) + " rounds)");
  return s.result();
}

std::optional<std::size_t> detect_coalescence(const std::vector<std::vector<long>>& traj) {
  for (std::size_t k = 0; k < traj.size(); ++k)
    if (std::all_of(traj[k].begin(), traj[k].end(), [](long v) { return v == 0; })) return k;
  return std::nullopt;
}

namespace {

std::vector<ArrivalEvent> merged_arrivals(const DrivingSequences& seqs) {
  std::vector<ArrivalEvent> out;
  for (int i = 0; i < seqs.d; ++i)
    for (double t : seqs.arrivals[i]) out.push_back({t, i});
  std::sort(out.begin(), out.end(), [](const ArrivalEvent& a, const ArrivalEvent& b) {
    return a.t != b.t ? a.t < b.t : a.station < b.station;
  });
  return out;
}

TotalPath totals(const EngineResult& r, double t0) {
  TotalPath p;
  p.t.push_back(t0);
  p.total.push_back(0);
  for (std::size_t k = 0; k < r.t.size(); ++k) {
    long s = 0;
    for (long v : r.path[k]) s += v;
    p.t.push_back(r.t[k]);
    p.total.push_back(s);
  }
  p.valid_until = r.exhausted_at;
  return p;
}

}  // namespace

EngineResult replay_gjn_forward(const DrivingSequences& seqs, const std::vector<double>& a, double from, double to,
                                bool record) {
  SequenceSource src(seqs);
  EngineOptions eo;
  for (double ai : a) eo.scale.push_back(1.0 / ai);
  eo.record = record;
  EngineResult r = run_fifo(seqs.d, from, to, merged_arrivals(seqs), src, eo);
  if (std::isfinite(r.exhausted_at))
    throw Error(ErrorCode::SequenceExhausted, "driving sequences ran out at t=" + std::to_string(r.exhausted_at));
  return r;
}

std::vector<std::vector<long>> naive_steady_state_sim(const NetworkSpec& spec, double burn_in, double horizon,
                                                      std::uint64_t seed, double spacing) {
  spec.validate();
  auto flow = solve_flow(spec);
  if (!check_stability(spec, flow).stable) throw Error(ErrorCode::Unstable, "network is not stable");
  if (!(spacing > 0) || burn_in < 0 || horizon < 0)
    throw Error(ErrorCode::InvalidArgument, "burn_in, horizon must be >= 0 and spacing > 0");
  if (horizon == 0) return {};
  RandomStream master(seed);
  RandomStream arr = master.child(1), svc = master.child(2);
  const double end = burn_in + horizon;
  std::vector<ArrivalEvent> arrivals;
  for (int i = 0; i < spec.d; ++i) {
    if (!spec.arrivals[i]) continue;
    for (double t = spec.arrivals[i]->sample(arr); t < end; t += spec.arrivals[i]->sample(arr))
      arrivals.push_back({t, i});
  }
  std::sort(arrivals.begin(), arrivals.end(), [](const ArrivalEvent& a, const ArrivalEvent& b) {
    return a.t != b.t ? a.t < b.t : a.station < b.station;
  });
  EngineOptions eo;
  for (double t = burn_in; t < end; t += spacing) eo.observe.push_back(t);
  IidSource src(spec, svc);
  return run_fifo(spec.d, 0.0, end, arrivals, src, eo).observed;
}

DominanceReport coupled_dominance_check(std::shared_ptr<const SamplerContext> ctx, std::uint64_t seed,
                                        std::size_t n_events) {
  const auto& qm = *ctx->qm;
  const int d = qm.spec.d;
  StationaryQueue sq(ctx->qm, seed);
  sq.ensure_events(n_events + 1);
  const auto& tl0 = sq.timeline();
  const double T = 0.5 * (tl0.events[n_events - 1].t + tl0.events[n_events].t);
  StationaryQueuePath stat = sq.compute_y_prime(T);
  const auto& tl = sq.timeline();
  const std::size_t k0 = stat.n_events;
  DominanceReport rep;

  // vacation system from empty
  VacationTrajectory plus = evolve_vacation(tl, init_empty(tl, T), {k0, 0});

  // (ii) autonomous queue from empty, and the stationary one
  std::vector<std::vector<long>> auto_empty;
  std::vector<long> y(d, 0);
  for (std::size_t k = k0; k >= 1; --k) {
    const auto& e = tl.events[k - 1];
    if (e.kind == EventKind::Arrival) {
      ++y[e.station];
    } else {
      if (e.mark < d) ++y[e.mark];
      y[e.station] = std::max(0L, y[e.station] - 1);
    }
    auto_empty.push_back(y);
  }
  rep.merge(check_componentwise(auto_empty, plus.y, plus.t, "(ii) empty start", 1));

  std::vector<std::vector<long>> stat_path;
  for (std::size_t k = k0; k >= 1; --k) stat_path.push_back(stat.y[k - 1]);
  VacationTrajectory top = evolve_vacation(tl, init_dominating(stat.at_horizon(), tl, T), {k0, 0});
  rep.merge(check_componentwise(stat_path, top.y, top.t, "(ii) stationary", 1));

  // (iii) ordered initial conditions
  RandomStream rng = RandomStream(seed).child(stream_tag::debug);
  VacationState mid = init_empty(tl, T);
  for (int i = 0; i < d; ++i) {
    mid.yhat[i] = static_cast<long>(rng.uniform() * static_cast<double>(stat.at_horizon()[i] + 1));
    mid.s[i] = rng.uniform() < 0.5 ? 1 : 0;
  }
  VacationTrajectory middle = evolve_vacation(tl, mid, {k0, 0});
  rep.merge(check_componentwise(top.y, middle.y, top.t, "(iii) top >= middle"));
  rep.merge(check_componentwise(middle.y, plus.y, top.t, "(iii) middle >= bottom"));

  // (i) true, slowed and vacation systems on the extracted sequences
  DrivingSequences seqs = extract_sequences(tl, plus, -T, 0.0);
  auto arrivals = merged_arrivals(seqs);
  EngineOptions ev;
  ev.vacations = true;
  ev.initial_vacation = seqs.initial_activity;
  ev.record = true;
  SequenceSource s_plus(seqs);
  EngineResult r_plus = run_fifo(d, -T, 0.0, arrivals, s_plus, ev);
  EngineOptions e0;
  e0.record = true;
  SequenceSource s_zero(seqs);
  EngineResult r_zero = run_fifo(d, -T, 0.0, arrivals, s_zero, e0);
  EngineOptions e1 = e0;
  for (int i = 0; i < d; ++i) e1.scale.push_back(1.0 / qm.aux.a(i));
  SequenceSource s_true(seqs);
  EngineResult r_true = run_fifo(d, -T, 0.0, arrivals, s_true, e1);
  TotalPath tp = totals(r_plus, -T), t0 = totals(r_zero, -T), t1 = totals(r_true, -T);
  double stop = std::min({tp.valid_until, t0.valid_until, t1.valid_until});
  tp.valid_until = t0.valid_until = t1.valid_until = stop;
  rep.merge(check_total(tp, t0, "(i) slowed <= vacation"));
  rep.merge(check_total(t0, t1, "(i) true <= slowed"));
  return rep;
}

}  // namespace dcftp
