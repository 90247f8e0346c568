#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "dcftp/vacation.hpp"

namespace dcftp {

/// Supplies the k-th service (and vacation) of each station in order. Throws
/// Error(SequenceExhausted) when it has nothing left.
class ServiceSource {
 public:
  virtual ~ServiceSource() = default;
  virtual ServiceDraw next_service(int station) = 0;
  virtual double next_vacation(int station);
};

/// Replays fixed per-station lists.
class SequenceSource : public ServiceSource {
 public:
  explicit SequenceSource(const DrivingSequences& seqs);
  ServiceDraw next_service(int station) override;
  double next_vacation(int station) override;

 private:
  const DrivingSequences& seqs_;
  std::vector<std::size_t> si_, vi_;
};

/// Fresh i.i.d. draws from the network's laws.
class IidSource : public ServiceSource {
 public:
  IidSource(const NetworkSpec& spec, RandomStream& rng);
  ServiceDraw next_service(int station) override;

 private:
  const NetworkSpec& spec_;
  RandomStream& rng_;
  std::vector<std::vector<double>> route_;
};

struct ArrivalEvent {
  double t;
  int station;
};

struct EngineOptions {
  std::vector<double> scale;  // service duration multiplier per station (empty: 1)
  bool vacations = false;
  std::vector<double> initial_vacation;  // remaining first vacation when vacations are on
  bool record = false;
  std::vector<double> observe;  // sorted times at which to snapshot the queue lengths
};

struct EngineResult {
  std::vector<long> y;                  // at t_end
  std::vector<double> residual_service; // completion - t_end for busy stations, 0 otherwise
  std::vector<double> t;                // event times (record)
  std::vector<std::vector<long>> path;  // queue lengths after each event (record)
  std::vector<std::vector<long>> observed;
  double exhausted_at = std::numeric_limits<double>::infinity();
  std::size_t events = 0;
  std::size_t services_started = 0;
};

/// Single-server FIFO network driven by external arrivals and a service
/// source, started empty at t_start. Simultaneous events run in the order
/// (time, station asc, completion before arrival). A customer routed at a
/// completion joins its target at the same instant. When the source runs
/// out, the run stops at that time and `exhausted_at` records it.
EngineResult run_fifo(int d, double t_start, double t_end, const std::vector<ArrivalEvent>& arrivals,
                      ServiceSource& src, const EngineOptions& opt = {});

}  // namespace dcftp
