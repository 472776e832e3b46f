#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <random>
#include <thread>
#include <vector>

#include "qcrelax/scenarios.hpp"

namespace qcrelax::detail {

// Runs f(i) for i in [0, count) on up to thread_cap() workers; the lowest-index exception is rethrown.
template <typename F> void parallel_for(int count, F f) {
    const int workers = std::max(1, std::min(thread_cap(), count));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
    auto run = [&](int w) {
        for (int i = w; i < count; i += workers) {
            try {
                f(i);
            } catch (...) {
                errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        run(0);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(run, w);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

inline Rng restart_rng(std::uint64_t seed, int restart) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(restart)};
    return Rng(seq);
}

constexpr int kRetryCap = 3;

template <typename Run, typename Body>
std::vector<Run> run_restarts(const SeesawOptions& opt, Body body) {
    if (opt.restarts < 1) throw Error(ErrorCode::InvalidArgument, "seesaw needs at least one restart");
    std::vector<Run> runs(static_cast<std::size_t>(opt.restarts));
    parallel_for(opt.restarts, [&](int r) {
        for (int attempt = 0;; ++attempt) {
            Rng rng = restart_rng(opt.seed, r + attempt * opt.restarts);
            try {
                runs[static_cast<std::size_t>(r)] = body(rng);
                return;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::SolverFailure || attempt + 1 >= kRetryCap) throw;
            }
        }
    });
    return runs;
}

} // namespace qcrelax::detail
