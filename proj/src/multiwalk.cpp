#include "dcftp/multiwalk.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include "dcftp/error.hpp"

namespace dcftp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_route_factor(double q, double theta) {
  // log(q e^theta + 1 - q)
  if (theta > 0) return theta + std::log(q + (1 - q) * std::exp(-theta));
  return std::log1p(q * std::expm1(theta));
}

std::optional<double> positive_root(const IncrementModel& model, int c) {
  auto f = [&](double th) { return psi(model, c, th); };
  double a = psi_abscissa(model, c);
  double hi = 0;
  bool found = false;
  if (std::isfinite(a)) {
    for (int k = 1; k < 60 && !found; ++k) {
      double th = a * (1 - std::ldexp(1.0, -k));
      if (!(th < a)) break;
      if (f(th) > 0) {
        hi = th;
        found = true;
      }
    }
  } else {
    for (int k = -10; k < 200 && !found; ++k) {
      double th = std::ldexp(1.0, k);
      double v = f(th);
      if (!std::isfinite(v)) break;
      if (v > 0) {
        hi = th;
        found = true;
      }
    }
  }
  if (!found) return std::nullopt;
  double lo = 0;
  while (true) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (f(mid) > 0)
      hi = mid;
    else
      lo = mid;
  }
  if (lo > 0 && std::abs(f(lo)) < std::abs(f(hi))) return lo;
  return hi;
}

}  // namespace

int IncrementModel::gap_slot(int c) const {
  const auto& k = coords[c];
  return k.kind == CoordKind::ExternalGap ? k.source : d + k.source;
}

double IncrementModel::mean(int c) const {
  const auto& k = coords[c];
  double m = 0;
  switch (k.kind) {
    case CoordKind::ExternalGap:
      m = 1 - k.rate * arrival[k.source]->mean();
      break;
    case CoordKind::ServiceGap:
      m = k.rate * activity[k.source].mean() - 1;
      break;
    case CoordKind::RoutedGap:
      m = k.q - k.rate * activity[k.source].mean();
      break;
  }
  return m + shift[c];
}

IncrementModel build_increment_model(const NetworkSpec& spec, const AuxiliaryRates& aux) {
  IncrementModel m;
  const int d = spec.d;
  m.d = d;
  m.arrival = spec.arrivals;
  m.ext_coord.assign(d, -1);
  m.svc_coord.assign(d, -1);
  m.routed_coord.assign(d, std::vector<int>(d, -1));
  for (int i = 0; i < d; ++i) {
    m.activity.push_back(spec.services[i].scaled(aux.a(i)));
    std::vector<double> r(d + 1);
    double row = 0;
    for (int j = 0; j < d; ++j) {
      r[j] = spec.Q(i, j);
      row += r[j];
    }
    r[d] = std::max(0.0, 1 - row);
    m.route.push_back(std::move(r));
  }
  for (int i = 0; i < d; ++i) {
    if (!spec.arrivals[i]) continue;
    m.ext_coord[i] = m.l();
    m.coords.push_back({CoordKind::ExternalGap, i, i, aux.gamma(i)});
  }
  for (int i = 0; i < d; ++i) {
    m.svc_coord[i] = m.l();
    m.coords.push_back({CoordKind::ServiceGap, i, i, aux.beta(i)});
  }
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) {
      if (!(spec.Q(j, i) > 0)) continue;
      m.routed_coord[j][i] = m.l();
      m.coords.push_back({CoordKind::RoutedGap, i, j, aux.phi_route(j, i), spec.Q(j, i)});
    }
  m.shift.assign(m.l(), 0.0);
  for (int c = 0; c < m.l(); ++c)
    if (!(m.mean(c) < 0))
      throw Error(ErrorCode::NonNegativeDrift,
                  "coordinate " + std::to_string(c) + " has mean " + std::to_string(m.mean(c)));
  return m;
}

double psi_abscissa(const IncrementModel& model, int c) {
  const auto& k = model.coords[c];
  if (k.kind == CoordKind::ServiceGap) return model.activity[k.source].mgf_abscissa() / k.rate;
  return kInf;
}

double psi(const IncrementModel& model, int c, double theta) {
  const auto& k = model.coords[c];
  double sh = model.shift[c] * theta;
  switch (k.kind) {
    case CoordKind::ExternalGap:
      return sh + theta + model.arrival[k.source]->log_mgf(-k.rate * theta);
    case CoordKind::ServiceGap:
      return sh - theta + model.activity[k.source].log_mgf(k.rate * theta);
    case CoordKind::RoutedGap:
      return sh + log_route_factor(k.q, theta) + model.activity[k.source].log_mgf(-k.rate * theta);
  }
  return 0;
}

std::vector<double> find_theta_star(IncrementModel& model) {
  std::vector<double> theta(model.l());
  for (int c = 0; c < model.l(); ++c) {
    auto r = positive_root(model, c);
    if (!r) {
      double base = model.mean(c) - model.shift[c];
      double cap = 0.9 * std::abs(base);
      for (double ap = cap / 1024; !r; ap *= 2) {
        model.shift[c] = std::min(ap, cap);
        r = positive_root(model, c);
        if (ap >= cap) break;
      }
      if (!r) {
        model.shift[c] = 0;
        throw Error(ErrorCode::NoRoot, "coordinate " + std::to_string(c) + " (mean " + std::to_string(base) +
                                           ") has no positive root of psi even with drift shift " +
                                           std::to_string(cap));
      }
    }
    theta[c] = *r;
  }
  return theta;
}

double choose_m(const std::vector<double>& theta) {
  if (theta.empty()) throw Error(ErrorCode::InvalidArgument, "choose_m: no coordinates");
  auto f = [&](double m) {
    double s = 0;
    for (double t : theta) s += std::exp(-t * m);
    return s - 0.5;
  };
  double lo = 0, hi = 1;
  while (f(hi) > 0) hi *= 2;
  while (true) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (f(mid) > 0)
      lo = mid;
    else
      hi = mid;
  }
  return hi;
}

TiltParameters make_tilt(IncrementModel& model, std::optional<double> m_override) {
  TiltParameters t;
  t.theta = find_theta_star(model);
  t.m = m_override ? *m_override : choose_m(t.theta);
  double total = 0;
  for (double th : t.theta) total += std::exp(-th * t.m);
  if (!(t.m > 0) || !(total < 1))
    throw Error(ErrorCode::InvalidArgument, "milestone_m too small: sum exp(-theta m) = " + std::to_string(total));
  for (double th : t.theta) t.w.push_back(std::exp(-th * t.m) / total);
  return t;
}

WalkOrigin sample_w0(const IncrementModel& model, RandomStream& rng) {
  WalkOrigin o;
  const int d = model.d;
  o.first_arrival.assign(d, 0.0);
  o.first_activity.assign(d, 0.0);
  for (int i = 0; i < d; ++i) {
    if (model.arrival[i]) o.first_arrival[i] = model.arrival[i]->equilibrium_sample(rng);
    o.first_activity[i] = model.activity[i].equilibrium_sample(rng);
  }
  o.w0.resize(model.l());
  for (int c = 0; c < model.l(); ++c) {
    const auto& k = model.coords[c];
    switch (k.kind) {
      case CoordKind::ExternalGap:
        o.w0[c] = -k.rate * o.first_arrival[k.source];
        break;
      case CoordKind::ServiceGap:
        o.w0[c] = k.rate * o.first_activity[k.source];
        break;
      case CoordKind::RoutedGap:
        o.w0[c] = -k.rate * o.first_activity[k.source];
        break;
    }
  }
  return o;
}

std::size_t Segment::length() const { return l ? points.size() / l - 1 : 0; }

WalkSampler::WalkSampler(std::shared_ptr<const IncrementModel> model, TiltParameters tilt, RandomStream rng)
    : model_(std::move(model)), tilt_(std::move(tilt)), rng_(std::move(rng)) {
  const auto& m = *model_;
  l_ = m.l();
  g_ = 2 * m.d;
  for (int c = 0; c < l_; ++c) {
    const auto& k = m.coords[c];
    slot_.push_back(m.gap_slot(c));
    double th = tilt_.theta[c];
    std::vector<double> troute;
    switch (k.kind) {
      case CoordKind::ExternalGap:
        coef_.push_back(-k.rate);
        offset_.push_back(1 + m.shift[c]);
        mark_src_.push_back(-1);
        tilt_s_.push_back(-th * k.rate);
        tilted_law_.push_back(m.arrival[k.source]->tilted_law(tilt_s_.back()));
        break;
      case CoordKind::ServiceGap:
        coef_.push_back(k.rate);
        offset_.push_back(-1 + m.shift[c]);
        mark_src_.push_back(-1);
        tilt_s_.push_back(th * k.rate);
        tilted_law_.push_back(m.activity[k.source].tilted_law(tilt_s_.back()));
        break;
      case CoordKind::RoutedGap:
        coef_.push_back(-k.rate);
        offset_.push_back(m.shift[c]);
        mark_src_.push_back(k.source);
        tilt_s_.push_back(-th * k.rate);
        tilted_law_.push_back(m.activity[k.source].tilted_law(tilt_s_.back()));
        troute = m.route[k.source];
        troute[k.station] *= std::exp(th);
        break;
    }
    mark_tgt_.push_back(k.station);
    tilted_route_.push_back(std::move(troute));
    log_w_.push_back(std::log(tilt_.w[c]));
  }
  path_.assign(l_, 0.0);
  sufmax_.assign(l_, 0.0);
  cub_.assign(l_, kInf);
}

void WalkSampler::draw_step(int tilted, double* gaps, std::int16_t* marks) {
  const auto& m = *model_;
  const int d = m.d;
  int tslot = tilted >= 0 ? slot_[tilted] : -1;
  for (int i = 0; i < d; ++i) {
    if (!m.arrival[i]) {
      gaps[i] = 0;
    } else if (i == tslot) {
      gaps[i] = tilted_law_[tilted] ? tilted_law_[tilted]->sample(rng_)
                                    : m.arrival[i]->tilted_sample(tilt_s_[tilted], rng_);
    } else {
      gaps[i] = m.arrival[i]->sample(rng_);
    }
  }
  for (int j = 0; j < d; ++j) {
    if (d + j == tslot) {
      gaps[d + j] = tilted_law_[tilted] ? tilted_law_[tilted]->sample(rng_)
                                        : m.activity[j].tilted_sample(tilt_s_[tilted], rng_);
      if (!tilted_route_[tilted].empty()) {
        marks[j] = static_cast<std::int16_t>(rng_.categorical(tilted_route_[tilted]));
        continue;
      }
    } else {
      gaps[d + j] = m.activity[j].sample(rng_);
    }
    const auto& r = m.route[j];
    marks[j] = r[d] >= 1 ? static_cast<std::int16_t>(d) : static_cast<std::int16_t>(rng_.categorical(r));
  }
}

void WalkSampler::increments(const double* gaps, const std::int16_t* marks, double* w) const {
  for (int c = 0; c < l_; ++c) {
    double v = offset_[c] + coef_[c] * gaps[slot_[c]];
    if (mark_src_[c] >= 0 && marks[mark_src_[c]] == mark_tgt_[c]) v += 1;
    w[c] = v;
  }
}

bool WalkSampler::sample_crossing_attempt(Segment& out, double* accept_prob) {
  const int d = model_->d;
  out.l = l_;
  out.points.assign(l_, 0.0);
  out.gaps.clear();
  out.marks.clear();
  int idx = static_cast<int>(rng_.categorical(tilt_.w));
  std::vector<double> w(l_), cur(l_, 0.0);
  std::vector<double> g(g_);
  std::vector<std::int16_t> mk(d);
  const double m = tilt_.m;
  while (true) {
    draw_step(idx, g.data(), mk.data());
    increments(g.data(), mk.data(), w.data());
    bool crossed = false;
    for (int c = 0; c < l_; ++c) {
      cur[c] += w[c];
      if (cur[c] > m) crossed = true;
    }
    out.points.insert(out.points.end(), cur.begin(), cur.end());
    out.gaps.insert(out.gaps.end(), g.begin(), g.end());
    out.marks.insert(out.marks.end(), mk.begin(), mk.end());
    if (crossed) break;
  }
  double mx = -kInf;
  for (int c = 0; c < l_; ++c) mx = std::max(mx, log_w_[c] + tilt_.theta[c] * cur[c]);
  double s = 0;
  for (int c = 0; c < l_; ++c) s += std::exp(log_w_[c] + tilt_.theta[c] * cur[c] - mx);
  double p = std::exp(-(mx + std::log(s)));
  if (!(p > 0 && p <= 1)) throw std::logic_error("crossing acceptance probability outside (0,1]: " + std::to_string(p));
  if (accept_prob) *accept_prob = p;
  return rng_.uniform() < p;
}

Segment WalkSampler::sample_segment_to_delta() {
  const int d = model_->d;
  const double m = tilt_.m;
  Segment seg;
  seg.l = l_;
  seg.points.assign(l_, 0.0);
  std::vector<double> cur(l_, 0.0), anchor(l_), w(l_), g(g_);
  std::vector<std::int16_t> mk(d);
  Segment att;
  while (true) {
    anchor = cur;
    while (true) {
      draw_step(-1, g.data(), mk.data());
      increments(g.data(), mk.data(), w.data());
      bool below = true;
      for (int c = 0; c < l_; ++c) {
        cur[c] += w[c];
        if (!(cur[c] < anchor[c] - 2 * m)) below = false;
      }
      seg.points.insert(seg.points.end(), cur.begin(), cur.end());
      seg.gaps.insert(seg.gaps.end(), g.begin(), g.end());
      seg.marks.insert(seg.marks.end(), mk.begin(), mk.end());
      if (below) break;
    }
    if (!sample_crossing_attempt(att)) break;
    std::size_t n = att.length();
    for (std::size_t k = 1; k <= n; ++k)
      for (int c = 0; c < l_; ++c) seg.points.push_back(cur[c] + att.points[k * l_ + c]);
    for (int c = 0; c < l_; ++c) cur[c] += att.points[n * l_ + c];
    seg.gaps.insert(seg.gaps.end(), att.gaps.begin(), att.gaps.end());
    seg.marks.insert(seg.marks.end(), att.marks.begin(), att.marks.end());
  }
  seg.max.assign(l_, -kInf);
  for (std::size_t i = 0; i < seg.points.size(); ++i) {
    double& mx = seg.max[i % l_];
    mx = std::max(mx, seg.points[i]);
  }
  return seg;
}

void WalkSampler::extend_once() {
  std::vector<double> L(path_.end() - l_, path_.end());
  Segment seg;
  while (true) {
    seg = sample_segment_to_delta();
    bool ok = true;
    for (int c = 0; c < l_; ++c)
      if (!(seg.max[c] <= cub_[c] - L[c])) ok = false;
    if (ok) break;
  }
  std::size_t n = seg.length();
  std::size_t prev_start = starts_.empty() ? 0 : starts_.back();
  for (std::size_t k = 1; k <= n; ++k)
    for (int c = 0; c < l_; ++c) path_.push_back(L[c] + seg.points[k * l_ + c]);
  gaps_.insert(gaps_.end(), seg.gaps.begin(), seg.gaps.end());
  marks_.insert(marks_.end(), seg.marks.begin(), seg.marks.end());
  starts_.push_back(end_);
  end_ += n;
  for (int c = 0; c < l_; ++c) cub_[c] = path_[end_ * l_ + c] + tilt_.m;

  // Values appended now stay below the old bound, which the suffix maxima
  // before the previous segment start already exceed; only that tail changes.
  sufmax_.resize(path_.size());
  for (int c = 0; c < l_; ++c) sufmax_[end_ * l_ + c] = path_[end_ * l_ + c];
  for (std::size_t k = end_; k-- > prev_start;)
    for (int c = 0; c < l_; ++c)
      sufmax_[k * l_ + c] = std::max(path_[k * l_ + c], sufmax_[(k + 1) * l_ + c]);
}

void WalkSampler::extend_joint_path(std::size_t n) {
  while (starts_.empty() || starts_.back() < n) extend_once();
}

void WalkSampler::extend_steps(std::size_t n) {
  while (end_ < n) extend_once();
}

JointPath WalkSampler::joint_path(std::size_t n, const std::vector<double>& w0) {
  extend_joint_path(n);
  JointPath jp;
  jp.W0 = w0;
  for (std::size_t k = 0; k <= n; ++k) {
    std::vector<double> s(l_), mm(l_);
    for (int c = 0; c < l_; ++c) {
      s[c] = w0[c] + this->s(k, c);
      mm[c] = w0[c] + m_upper(k, c);
    }
    jp.S.push_back(std::move(s));
    jp.M.push_back(std::move(mm));
  }
  return jp;
}

void WalkSampler::dump_csv(std::ostream& os) const {
  os << "k,milestone";
  for (int c = 0; c < l_; ++c) os << ",s" << c;
  for (int c = 0; c < l_; ++c) os << ",m" << c;
  for (int c = 0; c < l_; ++c) os << ",cub" << c;
  os << '\n';
  std::size_t mi = 0;
  for (std::size_t k = 0; k <= end_; ++k) {
    bool ms = mi < starts_.size() && starts_[mi] == k;
    if (ms) ++mi;
    os << k << ',' << (ms ? 1 : 0);
    for (int c = 0; c < l_; ++c) os << ',' << s(k, c);
    for (int c = 0; c < l_; ++c) os << ',' << m_upper(k, c);
    for (int c = 0; c < l_; ++c) os << ',' << cub_[c];
    os << '\n';
  }
}

}  // namespace dcftp
