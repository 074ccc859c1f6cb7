#pragma once

#include <cstddef>
#include <functional>

namespace curation::parallel {

/// Number of worker threads used by `for_blocks`. Defaults to 1.
void set_threads(std::size_t n);
std::size_t threads() noexcept;

/// Work in [0, n) is cut into fixed-size blocks that do not depend on the
/// thread count; `fn(begin, end)` is invoked once per block. Callers write
/// results into per-index slots and reduce afterwards in index order, which
/// keeps every result independent of how many threads ran.
void for_blocks(std::size_t n, std::size_t block, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace curation::parallel
