#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>

namespace tdpart {

/// Runs the independent calls of one scheduling stage.
///
/// `run` returns once every task has finished. If tasks throw, the exception of
/// the lowest-indexed failing task is rethrown, so failures do not depend on
/// completion order.
class StageExecutor {
public:
    using Task = std::function<void()>;

    virtual ~StageExecutor() = default;
    virtual void run(std::span<const Task> tasks) = 0;
};

class SequentialExecutor final : public StageExecutor {
public:
    void run(std::span<const Task> tasks) override;
};

/// At most `max_parallel` tasks in flight, each on its own worker thread.
class ThreadPoolExecutor final : public StageExecutor {
public:
    explicit ThreadPoolExecutor(std::size_t max_parallel);
    void run(std::span<const Task> tasks) override;

private:
    std::size_t max_parallel_;
};

/// Executes tasks one at a time in a seeded random order. Each `run` draws a
/// fresh order from the same generator.
class ShuffledExecutor final : public StageExecutor {
public:
    explicit ShuffledExecutor(std::uint64_t seed) : state_(seed) {}
    void run(std::span<const Task> tasks) override;

private:
    std::uint64_t state_;
};

}  // namespace tdpart
