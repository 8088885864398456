#ifndef RDSMA_RANDOM_HPP
#define RDSMA_RANDOM_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <random>

namespace rdsma {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t x);

/// Seed for a sub-stream identified by a path of indices below `master`.
/// Pure function of its arguments, so task streams do not depend on
/// scheduling or thread count.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

inline Rng make_rng(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    return Rng(derive_seed(master, path));
}

double uniform01(Rng& rng);

/// Index in [0, n).
std::size_t uniform_index(Rng& rng, std::size_t n);

/// Runs body(i) for i in [0, count) on up to `threads` workers. Each index
/// runs exactly once; callers write results into slot i so the merged
/// output is independent of the schedule. The first exception thrown by
/// any body is rethrown after all workers join.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

} // namespace rdsma

#endif
