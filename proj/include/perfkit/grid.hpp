#ifndef PERFKIT_GRID_HPP
#define PERFKIT_GRID_HPP

#include <Eigen/Core>

#include <cstddef>

namespace perfkit {

using Index3 = Eigen::Vector3i;

/// Regular voxel lattice: dims, spacing (mm) and origin (mm) of voxel (0,0,0).
struct Grid3 {
    Index3 dims{1, 1, 1};
    Eigen::Vector3d spacing{1.0, 1.0, 1.0};
    Eigen::Vector3d origin{0.0, 0.0, 0.0};

    Grid3() = default;
    Grid3(const Index3& d, const Eigen::Vector3d& s,
          const Eigen::Vector3d& o = Eigen::Vector3d::Zero());

    std::size_t voxel_count() const
    {
        return static_cast<std::size_t>(dims.x()) * static_cast<std::size_t>(dims.y()) *
               static_cast<std::size_t>(dims.z());
    }

    bool contains(const Index3& ijk) const
    {
        return (ijk.array() >= 0).all() && (ijk.array() < dims.array()).all();
    }

    // x-fastest linear index
    std::size_t linear(int i, int j, int k) const
    {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(dims.x()) *
                   (static_cast<std::size_t>(j) +
                    static_cast<std::size_t>(dims.y()) * static_cast<std::size_t>(k));
    }
    std::size_t linear(const Index3& ijk) const { return linear(ijk.x(), ijk.y(), ijk.z()); }

    Index3 unravel(std::size_t idx) const
    {
        const auto nx = static_cast<std::size_t>(dims.x());
        const auto ny = static_cast<std::size_t>(dims.y());
        return {static_cast<int>(idx % nx), static_cast<int>((idx / nx) % ny),
                static_cast<int>(idx / (nx * ny))};
    }

    /// Physical position (mm) of a voxel center.
    Eigen::Vector3d physical(const Eigen::Vector3d& continuous_index) const
    {
        return origin + spacing.cwiseProduct(continuous_index);
    }

    /// Physical size covered by the lattice, dims * spacing.
    Eigen::Vector3d extent() const { return dims.cast<double>().cwiseProduct(spacing); }
};

inline constexpr double kGridTolerance = 1e-6;

/// Equal dims, and spacing/origin equal within 1e-6 mm.
bool compatible(const Grid3& a, const Grid3& b);

} // namespace perfkit

#endif // PERFKIT_GRID_HPP
