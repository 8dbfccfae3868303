#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <future>
#include <string>
#include <thread>
#include <vector>

namespace mcbif {

/// Worker cap: MCBIF_THREADS if set and positive, else the hardware count.
inline std::size_t worker_count()
{
    if (const char* s = std::getenv("MCBIF_THREADS")) {
        try {
            const long v = std::stol(s);
            if (v > 0) return static_cast<std::size_t>(v);
        } catch (...) {
        }
    }
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Runs f(i) for i in [0, count) with at most worker_count() in flight.
/// Results must be written to per-index slots; exceptions propagate from
/// the first failing index after all tasks of its batch finished.
template <class F>
void parallel_for(std::size_t count, F&& f)
{
    const std::size_t w = worker_count();
    if (w <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) f(i);
        return;
    }
    for (std::size_t start = 0; start < count; start += w) {
        std::vector<std::future<void>> batch;
        for (std::size_t i = start; i < std::min(count, start + w); ++i)
            batch.push_back(std::async(std::launch::async, [&f, i] { f(i); }));
        for (auto& fu : batch) fu.get();
    }
}

} // namespace mcbif
