#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace trde {

/// Rows per work chunk. Fixed so that chunk boundaries, and therefore the
/// order of floating-point reductions, do not depend on the worker count.
inline constexpr std::size_t kChunkRows = 256;

inline std::size_t chunk_count(std::size_t rows) { return (rows + kChunkRows - 1) / kChunkRows; }

/// Runs body(chunk, begin, end) for every chunk of [0, rows). Chunks are
/// dealt round-robin to at most `threads` workers; the first exception is
/// rethrown on the calling thread.
template <typename Body>
void parallel_chunks(std::size_t rows, int threads, Body&& body) {
    const std::size_t chunks = chunk_count(rows);
    const std::size_t workers =
        std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), chunks));
    auto run = [&](std::size_t worker, std::exception_ptr& error) {
        try {
            for (std::size_t c = worker; c < chunks; c += workers) {
                const std::size_t begin = c * kChunkRows;
                body(c, begin, std::min(rows, begin + kChunkRows));
            }
        } catch (...) {
            error = std::current_exception();
        }
    };
    std::vector<std::exception_ptr> errors(workers);
    if (workers == 1) {
        run(0, errors[0]);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back(run, w, std::ref(errors[w]));
        }
        for (auto& t : pool) {
            t.join();
        }
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

}  // namespace trde
