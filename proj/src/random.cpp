#include "dcftp/random.hpp"

#include <cmath>
#include <numeric>

#include "dcftp/error.hpp"

namespace dcftp {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Divergent: return "Divergent";
    case ErrorCode::NotOpen: return "NotOpen";
    case ErrorCode::Unstable: return "Unstable";
    case ErrorCode::NonNegativeDrift: return "NonNegativeDrift";
    case ErrorCode::NoRoot: return "NoRoot";
    case ErrorCode::InconsistentIncrements: return "InconsistentIncrements";
    case ErrorCode::Unsettled: return "Unsettled";
    case ErrorCode::SequenceExhausted: return "SequenceExhausted";
    case ErrorCode::DominanceViolation: return "DominanceViolation";
    case ErrorCode::NotMarkovian: return "NotMarkovian";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::ResourceBudgetExceeded: return "ResourceBudgetExceeded";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(a) ^ (b + 0x632be59bd9b4e019ULL + (a << 6) + (a >> 2)));
}

RandomStream::RandomStream(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

double RandomStream::exponential(double rate) { return -std::log(uniform()) / rate; }

std::size_t RandomStream::categorical(std::span<const double> weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double u = uniform() * total;
  std::size_t last_positive = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] <= 0.0) continue;
    if (u < weights[k]) return k;
    u -= weights[k];
    last_positive = k;
  }
  return last_positive;
}

}  // namespace dcftp
