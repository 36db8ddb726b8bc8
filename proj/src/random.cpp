#include "resilinet/random.hpp"

#include "resilinet/errors.hpp"

#include <unordered_map>

namespace resilinet {

std::vector<std::uint64_t> sample_without_replacement(Rng& rng, std::uint64_t n, std::uint64_t count)
{
    if (count > n) throw Error("cannot sample more distinct positions than exist");
    // Sparse swap table: position i of the virtual permutation holds swapped[i] if present, else i.
    std::unordered_map<std::uint64_t, std::uint64_t> swapped;
    swapped.reserve(static_cast<std::size_t>(2 * count));
    std::vector<std::uint64_t> out;
    out.reserve(static_cast<std::size_t>(count));
    const auto at = [&](std::uint64_t i) {
        const auto it = swapped.find(i);
        return it == swapped.end() ? i : it->second;
    };
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::uint64_t j = i + uniform_below(rng, n - i);
        const std::uint64_t vj = at(j);
        swapped[j] = at(i);
        out.push_back(vj);
    }
    return out;
}

}  // namespace resilinet
