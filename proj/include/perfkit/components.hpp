#ifndef PERFKIT_COMPONENTS_HPP
#define PERFKIT_COMPONENTS_HPP

#include "perfkit/grid.hpp"

#include <cstddef>
#include <functional>
#include <vector>

namespace perfkit {

using Component = std::vector<std::size_t>;

// 26-connected components of the voxels for which `foreground(idx)` holds.
// Components are ordered by their first voxel in raster order and each holds
// sorted linear indices.
std::vector<Component> connected_components(const Grid3& grid,
                                            const std::function<bool(std::size_t)>& foreground);

// True if the voxel set is nonempty and forms one 26-connected component.
bool is_connected(const Grid3& grid, const std::vector<std::size_t>& voxels);

} // namespace perfkit

#endif // PERFKIT_COMPONENTS_HPP
