#ifndef UCS_PARALLEL_HPP
#define UCS_PARALLEL_HPP

#include <cstdint>
#include <functional>

namespace ucs {

/// Worker count used by parallel loops. 0 restores the default
/// (UCS_THREADS if set, otherwise hardware concurrency).
void set_num_threads(int n);
int num_threads();

inline constexpr std::int64_t kDefaultGrain = 256;

/// Runs body(begin, end) over [0, n) cut into fixed blocks of `grain` items.
///
/// Block boundaries depend only on n and grain, never on the worker count.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& body,
                  std::int64_t grain = kDefaultGrain);

}  // namespace ucs

#endif  // UCS_PARALLEL_HPP
