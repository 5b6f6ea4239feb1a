#pragma once

// Index-addressed fan-out. Results are written by index and any exception is
// rethrown for the lowest failing index, so outcomes never depend on the
// worker count or scheduling.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <span>
#include <thread>
#include <vector>

namespace stoflow {

template <typename Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
    std::vector<std::exception_ptr> errors(count);
    auto body = [&](std::size_t i) {
        try {
            fn(i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    const auto nworkers = static_cast<std::size_t>(std::max(1, workers));
    if (nworkers == 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        pool.reserve(std::min(nworkers, count));
        for (std::size_t w = 0; w < std::min(nworkers, count); ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < count; i = next++) body(i);
            });
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

struct SampleStats {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t count = 0;
};

/// Mean and standard error, summed in index order.
inline SampleStats sample_stats(std::span<const double> xs) {
    SampleStats s;
    s.count = xs.size();
    if (xs.empty()) return s;
    double sum = 0.0;
    for (double x : xs) sum += x;
    s.mean = sum / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - s.mean) * (x - s.mean);
        s.std_error = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
    }
    return s;
}

} // namespace stoflow
