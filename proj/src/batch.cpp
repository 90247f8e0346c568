#include "dcftp/batch.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace dcftp {

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& body) {
  if (workers <= 0) workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(workers), std::max<std::size_t>(n, 1)));
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first;
  std::mutex mu;
  auto work = [&]() {
    while (!failed.load()) {
      std::size_t k = next.fetch_add(1);
      if (k >= n) return;
      try {
        body(k);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!first) first = std::current_exception();
        failed = true;
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (first) std::rethrow_exception(first);
}

std::vector<SampleResult> run_batch(const std::shared_ptr<const SamplerContext>& ctx, std::size_t n,
                                    std::uint64_t master_seed, int workers,
                                    const std::function<void(std::size_t)>& on_done) {
  std::vector<SampleResult> out(n);
  std::mutex mu;
  parallel_for(n, workers, [&](std::size_t k) {
    out[k] = sample_stationary(ctx, sample_seed(master_seed, k));
    if (on_done) {
      std::lock_guard<std::mutex> lock(mu);
      on_done(k);
    }
  });
  return out;
}

}  // namespace dcftp
