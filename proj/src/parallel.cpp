#include "resilinet/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string_view>
#include <thread>
#include <vector>

namespace resilinet {

std::size_t worker_count(std::size_t requested)
{
    std::size_t n = requested != 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("RESILINET_THREADS")) {
        const std::string_view text(env);
        std::size_t cap = 0;
        const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), cap);
        if (ec == std::errc{} && ptr == text.data() + text.size() && cap > 0) n = std::min(n, cap);
    }
    return n;
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn)
{
    workers = std::min(std::max<std::size_t>(workers, 1), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::mutex mu;
    std::size_t failed_index = n;
    std::exception_ptr error;

    const auto work = [&] {
        for (std::size_t i = next++; i < n && !failed.load(); i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(mu);
                if (i < failed_index) {
                    failed_index = i;
                    error = std::current_exception();
                }
                failed = true;
            }
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    pool.clear();
    if (error) std::rethrow_exception(error);
}

}  // namespace resilinet
