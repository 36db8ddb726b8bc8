#include "resilinet/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <doctest.h>
#include <stdexcept>
#include <string>
#include <vector>

using namespace resilinet;

TEST_SUITE("parallel") {

TEST_CASE("every index runs exactly once")
{
    for (const std::size_t workers : {1u, 2u, 5u}) {
        std::vector<std::atomic<int>> hits(257);
        parallel_for(hits.size(), workers, [&](std::size_t i) { hits[i]++; });
        for (const auto& h : hits) CHECK(h.load() == 1);
    }
    parallel_for(0, 3, [](std::size_t) { FAIL("no tasks expected"); });
}

TEST_CASE("the lowest failing index is rethrown")
{
    const auto run = [](std::size_t workers) {
        try {
            parallel_for(100, workers, [](std::size_t i) {
                if (i == 17 || i == 60) throw std::runtime_error(std::to_string(i));
            });
        } catch (const std::runtime_error& e) {
            return std::string(e.what());
        }
        return std::string("none");
    };
    CHECK(run(1) == "17");
    CHECK(run(4) == "17");
}

TEST_CASE("RESILINET_THREADS caps the worker count")
{
    const char* old = std::getenv("RESILINET_THREADS");
    const std::string saved = old ? old : "";
    ::setenv("RESILINET_THREADS", "2", 1);
    CHECK(worker_count(8) == 2);
    CHECK(worker_count(1) == 1);
    ::setenv("RESILINET_THREADS", "junk", 1);
    CHECK(worker_count(8) == 8);
    if (old) ::setenv("RESILINET_THREADS", saved.c_str(), 1);
    else ::unsetenv("RESILINET_THREADS");
    CHECK(worker_count(0) >= 1);
}

}
