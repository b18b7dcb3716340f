#pragma once

#include <cstddef>
#include <functional>

namespace bundlemart {

/// Worker count: the set_worker_count value when positive, then BUNDLEMART_THREADS when set and
/// positive, otherwise hardware concurrency.
int worker_count();
/// 0 restores the default.
void set_worker_count(int n);

/// Runs body(i) for i in [0, n) on worker_count() threads. Each index is processed exactly once;
/// results must be written to index-addressed slots so reductions stay in fixed order.
/// The first exception thrown by any worker is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace bundlemart
