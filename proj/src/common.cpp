#include "rigidity/common.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "rigidity/parallel.hpp"

namespace rigidity {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotUnimodular: return "NotUnimodular";
    case ErrorCode::NotHyperbolic: return "NotHyperbolic";
    case ErrorCode::DegenerateProjection: return "DegenerateProjection";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonZeroAtOrigin: return "NonZeroAtOrigin";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::CertificationFailed: return "CertificationFailed";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::NonHyperbolicOrbit: return "NonHyperbolicOrbit";
    case ErrorCode::DepthExceeded: return "DepthExceeded";
    case ErrorCode::NoIntersectionInWindow: return "NoIntersectionInWindow";
    case ErrorCode::OffLeaf: return "OffLeaf";
    case ErrorCode::NonMonotoneBlend: return "NonMonotoneBlend";
    case ErrorCode::MonotonicityViolation: return "MonotonicityViolation";
    case ErrorCode::ToleranceNotReached: return "ToleranceNotReached";
    case ErrorCode::IdentityViolation: return "IdentityViolation";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::NonMonotone: return "NonMonotone";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

namespace {
std::atomic<int> g_threads{1};
}

void set_thread_count(int threads) { g_threads.store(std::max(1, threads)); }
int thread_count() { return g_threads.load(); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const auto workers = static_cast<std::size_t>(std::min<std::size_t>(
      static_cast<std::size_t>(thread_count()), std::max<std::size_t>(n, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t block = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * block;
    const std::size_t end = std::min(n, begin + block);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace rigidity
