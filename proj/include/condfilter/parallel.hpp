#pragma once

#include <cstddef>
#include <functional>

namespace condfilter {

// Worker ceiling for all parallel sections. 0 resets to hardware concurrency.
void set_worker_count(unsigned n);
unsigned worker_count();

// Runs fn(chunk_index, begin, end) for [0, count) split into fixed-size
// chunks. Chunk boundaries depend only on (count, chunk_size), never on the
// worker count, so callers that keep one partial accumulator per chunk and
// merge them in chunk order get bitwise-identical results at any worker
// count. Exceptions thrown by fn are rethrown on the calling thread.
void parallel_chunks(
    std::size_t count, std::size_t chunk_size,
    const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

}  // namespace condfilter
