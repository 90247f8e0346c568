#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "dcftp/sampler.hpp"

namespace dcftp {

/// Seed of sample `index` under `master`; independent of how the batch is split
/// across workers.
inline std::uint64_t sample_seed(std::uint64_t master, std::uint64_t index) { return mix_seed(master, index); }

/// Draws n samples on a pool of `workers` threads (0: hardware concurrency).
/// Results are in index order. The first exception raised by any sample is
/// rethrown after the pool drains.
std::vector<SampleResult> run_batch(const std::shared_ptr<const SamplerContext>& ctx, std::size_t n,
                                    std::uint64_t master_seed, int workers = 1,
                                    const std::function<void(std::size_t)>& on_done = {});

/// Generic index-ordered parallel map used by the batch runner.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& body);

}  // namespace dcftp
