#pragma once

#include <cstddef>
#include <functional>

namespace pomap {

// Worker count from POMAP_WORKERS; 1 when unset or invalid.
std::size_t worker_count_from_env();

// Runs body(k) for k in [0, count) on up to `workers` threads. Items are assigned
// statically by index, so results written per index do not depend on `workers`.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& body);

} // namespace pomap
