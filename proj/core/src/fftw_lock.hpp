#pragma once

#include <mutex>

namespace sbe::detail {

// FFTW plan creation and destruction are not thread-safe; every call site
// must serialize on this single lock (execution of distinct plans is fine).
inline std::mutex& fftw_plan_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace sbe::detail
