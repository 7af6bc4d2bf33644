#include "tdpart/executor.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <numeric>
#include <random>
#include <thread>
#include <vector>

namespace tdpart {

namespace {

void rethrow_first(const std::vector<std::exception_ptr>& errors)
{
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

}  // namespace

void SequentialExecutor::run(std::span<const Task> tasks)
{
    for (const auto& task : tasks) {
        task();
    }
}

ThreadPoolExecutor::ThreadPoolExecutor(std::size_t max_parallel) : max_parallel_(std::max<std::size_t>(1, max_parallel))
{
}

void ThreadPoolExecutor::run(std::span<const Task> tasks)
{
    if (tasks.size() <= 1) {
        SequentialExecutor{}.run(tasks);
        return;
    }
    std::vector<std::exception_ptr> errors(tasks.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
            try {
                tasks[i]();
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    {
        std::vector<std::jthread> workers;
        const auto n = std::min(max_parallel_, tasks.size());
        workers.reserve(n);
        for (std::size_t t = 0; t < n; ++t) {
            workers.emplace_back(worker);
        }
    }
    rethrow_first(errors);
}

void ShuffledExecutor::run(std::span<const Task> tasks)
{
    std::vector<std::size_t> order(tasks.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(state_);
    std::shuffle(order.begin(), order.end(), rng);
    state_ = rng();

    std::vector<std::exception_ptr> errors(tasks.size());
    for (auto i : order) {
        try {
            tasks[i]();
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    rethrow_first(errors);
}

}  // namespace tdpart
