#pragma once

// Data-parallel kernels used by quadrature, assembly, and the trial-function
// moment integrals. Every kernel has a plain serial loop (the reference kept
// for testing) and an OpenMP variant. The OpenMP variant reduces over fixed
// blocks and sums the block partials in index order, so its result does not
// depend on the thread count.

#include <cstddef>
#include <exception>
#include <mutex>
#include <vector>

namespace twoball::exec {

enum class Policy { Serial, Parallel };

/// Process-wide default, Parallel unless changed.
Policy default_policy() noexcept;
void set_default_policy(Policy policy) noexcept;

/// Number of OpenMP threads the parallel policy will use.
int thread_count() noexcept;

inline constexpr std::size_t kBlock = 256;

template <class T, class Term>
T reduce(Policy policy, std::size_t n, const T& zero, Term&& term)
{
    if (policy == Policy::Serial) {
        T acc = zero;
        for (std::size_t i = 0; i < n; ++i)
            acc += term(i);
        return acc;
    }

    const std::ptrdiff_t nblocks = static_cast<std::ptrdiff_t>((n + kBlock - 1) / kBlock);
    std::vector<T> partial(static_cast<std::size_t>(nblocks), zero);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t b = 0; b < nblocks; ++b) {
        const std::size_t lo = static_cast<std::size_t>(b) * kBlock;
        const std::size_t hi = lo + kBlock < n ? lo + kBlock : n;
        T acc = zero;
        for (std::size_t i = lo; i < hi; ++i)
            acc += term(i);
        partial[static_cast<std::size_t>(b)] = acc;
    }
    T total = zero;
    for (const T& p : partial)
        total += p;
    return total;
}

/// Runs body(i) for i in [0, n). Exceptions thrown inside the parallel region
/// are captured and the first one is rethrown on the calling thread.
template <class Body>
void for_each(Policy policy, std::size_t n, Body&& body)
{
    if (policy == Policy::Serial) {
        for (std::size_t i = 0; i < n; ++i)
            body(i);
        return;
    }

    std::exception_ptr first;
    std::mutex guard;
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
        try {
            body(static_cast<std::size_t>(i));
        } catch (...) {
            std::lock_guard<std::mutex> lock(guard);
            if (!first)
                first = std::current_exception();
        }
    }
    if (first)
        std::rethrow_exception(first);
}

} // namespace twoball::exec
