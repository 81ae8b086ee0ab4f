#include "perfkit/components.hpp"

#include <algorithm>
#include <deque>

namespace perfkit {

namespace {

template <typename Visit>
void for_each_neighbor(const Grid3& grid, const Index3& p, Visit&& visit)
{
    for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                if (dx == 0 && dy == 0 && dz == 0)
                    continue;
                const Index3 q = p + Index3(dx, dy, dz);
                if (grid.contains(q))
                    visit(grid.linear(q));
            }
}

} // namespace

std::vector<Component> connected_components(const Grid3& grid,
                                            const std::function<bool(std::size_t)>& foreground)
{
    const std::size_t n = grid.voxel_count();
    std::vector<char> visited(n, 0);
    std::vector<Component> out;
    std::deque<std::size_t> queue;
    for (std::size_t seed = 0; seed < n; ++seed) {
        if (visited[seed] || !foreground(seed))
            continue;
        Component comp;
        visited[seed] = 1;
        queue.push_back(seed);
        while (!queue.empty()) {
            const std::size_t cur = queue.front();
            queue.pop_front();
            comp.push_back(cur);
            for_each_neighbor(grid, grid.unravel(cur), [&](std::size_t nb) {
                if (!visited[nb] && foreground(nb)) {
                    visited[nb] = 1;
                    queue.push_back(nb);
                }
            });
        }
        std::sort(comp.begin(), comp.end());
        out.push_back(std::move(comp));
    }
    return out;
}

bool is_connected(const Grid3& grid, const std::vector<std::size_t>& voxels)
{
    if (voxels.empty())
        return false;
    std::vector<std::size_t> sorted = voxels;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    auto inside = [&](std::size_t idx) { return std::binary_search(sorted.begin(), sorted.end(), idx); };

    std::deque<std::size_t> queue{sorted.front()};
    std::vector<char> visited(sorted.size(), 0);
    visited[0] = 1;
    std::size_t reached = 1;
    while (!queue.empty()) {
        const std::size_t cur = queue.front();
        queue.pop_front();
        for_each_neighbor(grid, grid.unravel(cur), [&](std::size_t nb) {
            if (!inside(nb))
                return;
            const auto pos = static_cast<std::size_t>(
                std::lower_bound(sorted.begin(), sorted.end(), nb) - sorted.begin());
            if (!visited[pos]) {
                visited[pos] = 1;
                ++reached;
                queue.push_back(nb);
            }
        });
    }
    return reached == sorted.size();
}

} // namespace perfkit
