#pragma once

/// @file parallel.hpp
/// Chunked data-parallel loop used by the subset scans and window sweeps.

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace wglab {

/// 0 means "one per hardware thread".
inline unsigned resolve_threads(unsigned requested) noexcept
{
    if (requested != 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

/// Splits [0, count) into `chunks` contiguous ranges and calls
/// fn(chunk_index, begin, end) for each, on up to `threads` workers.
/// Chunk boundaries depend only on (count, chunks), so callers that merge
/// per-chunk results in chunk order get thread-count-independent output.
template <typename Fn>
void parallel_chunks(std::size_t count, std::size_t chunks, unsigned threads, Fn&& fn)
{
    chunks = std::max<std::size_t>(1, std::min(chunks, std::max<std::size_t>(count, 1)));
    auto bounds = [&](std::size_t c) { return count * c / chunks; };
    threads = std::min<unsigned>(resolve_threads(threads), static_cast<unsigned>(chunks));
    if (threads <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) fn(c, bounds(c), bounds(c + 1));
        return;
    }
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t c = t; c < chunks; c += threads) fn(c, bounds(c), bounds(c + 1));
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace wglab
