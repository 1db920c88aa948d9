#include "twoball/exec.hpp"

#include <atomic>

#include <omp.h>

namespace twoball::exec {

namespace {
std::atomic<Policy> g_policy{Policy::Parallel};
}

Policy default_policy() noexcept { return g_policy.load(); }

void set_default_policy(Policy policy) noexcept { g_policy.store(policy); }

int thread_count() noexcept { return omp_get_max_threads(); }

} // namespace twoball::exec
