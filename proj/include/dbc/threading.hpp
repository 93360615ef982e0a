#ifndef DBC_THREADING_HPP
#define DBC_THREADING_HPP

#include <cstddef>
#include <functional>

namespace dbc {

// Worker count: min(hardware_concurrency, DBC_THREADS). DBC_THREADS=1
// forces serial execution.
std::size_t worker_count();

// Splits [begin, end) into contiguous blocks, one worker thread per block.
// Runs inline when a single worker suffices.
void parallel_for_blocks(std::size_t begin, std::size_t end,
                         const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace dbc

#endif
