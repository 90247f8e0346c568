#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

#include "dcftp/gjn_engine.hpp"
#include "dcftp/stationary_queue.hpp"
#include "dcftp/vacation.hpp"

namespace dcftp {

struct SamplerOptions {
  AuxOptions aux;
  std::optional<double> milestone_m;
  std::optional<double> ct_initial;  // default 2 / min_i (mu0_i - phi_i)
  double ct_growth = 2.0;
  std::size_t max_rounds = 0;  // 0: unlimited
  std::size_t max_events = 0;  // 0: unlimited
};

struct SamplerContext {
  std::shared_ptr<const QueueModel> qm;
  SamplerOptions opt;
  double ct_initial = 0;

  static std::shared_ptr<const SamplerContext> make(const NetworkSpec& spec, const SamplerOptions& opt = {});
};

struct StationaryNetworkState {
  std::vector<long> y;
  std::vector<double> residual_service;                  // 0 when idle
  std::vector<std::optional<double>> residual_arrival;   // empty without external arrivals
};

struct CoalescenceRecord {
  double tau = 0;  // real time, in (-T, 0]
  std::size_t rounds = 0;
  std::size_t events = 0;
  std::uint64_t draws = 0;
  double horizon = 0;
};

struct SampleResult {
  StationaryNetworkState state;
  CoalescenceRecord record;
};

/// Real-future continuation of the stationary timelines after time 0. The
/// first epoch of each process is the excess of the interval straddling 0
/// given its age; later gaps are fresh.
class FutureTimeline {
 public:
  FutureTimeline(const IncrementModel& m, const WalkOrigin& origin, const RandomStream& rng);

  std::optional<double> first_arrival(int i) const { return first_arrival_[i]; }
  /// Next epoch in real-forward order; `t` is the real time.
  TimelineEvent next();
  std::size_t consumed() const { return consumed_; }
  std::uint64_t draws() const;

 private:
  struct Proc {
    int station;
    EventKind kind;
    RandomStream rng;
    double next;
    double duration = 0;
    int mark = 0;
    std::uint32_t index = 1;
  };
  void draw_mark(Proc& p);

  const IncrementModel& m_;
  std::vector<Proc> procs_;
  std::vector<std::optional<double>> first_arrival_;
  std::size_t consumed_ = 0;
};

/// Resumable dominated CFTP run for one seed. Every round reuses all the
/// randomness of the previous ones and only reaches further into the past.
class PerfectSampler {
 public:
  enum class Status { Done, BudgetExceeded };

  PerfectSampler(std::shared_ptr<const SamplerContext> ctx, std::uint64_t seed);

  Status run();
  void set_caps(std::size_t max_rounds, std::size_t max_events);
  const SampleResult& result() const { return result_; }
  StationaryQueue& queue() { return sq_; }
  double horizon() const { return T_; }
  std::size_t rounds() const { return rounds_; }

  std::ostream* trace = nullptr;

 private:
  bool attempt();

  std::shared_ptr<const SamplerContext> ctx_;
  std::uint64_t seed_;
  StationaryQueue sq_;
  double T_ = 0, C_ = 0;
  std::size_t rounds_ = 0;
  std::size_t max_rounds_, max_events_;
  SampleResult result_;
};

/// Throws ResourceBudgetExceeded when a configured cap is reached.
SampleResult sample_stationary(std::shared_ptr<const SamplerContext> ctx, std::uint64_t seed,
                               std::ostream* trace = nullptr);

/// Position of the first all-zero state, if any.
std::optional<std::size_t> detect_coalescence(const std::vector<std::vector<long>>& traj);

/// Empty-start FIFO replay on [from, to]: the k-th service at station i takes
/// sigma0_i(k) / a_i and routes by r_i(k).
EngineResult replay_gjn_forward(const DrivingSequences& seqs, const std::vector<double>& a, double from, double to,
                                bool record = false);

/// Plain forward simulation from empty with burn-in; queue lengths sampled
/// every `spacing` time units over [burn_in, burn_in + horizon). Biased
/// baseline only.
std::vector<std::vector<long>> naive_steady_state_sim(const NetworkSpec& spec, double burn_in, double horizon,
                                                      std::uint64_t seed, double spacing = 1.0);

/// Coupled debug run over the first n_events reversed epochs checking the
/// ordering of the true, slowed, vacation and autonomous systems.
DominanceReport coupled_dominance_check(std::shared_ptr<const SamplerContext> ctx, std::uint64_t seed,
                                        std::size_t n_events);

}  // namespace dcftp
