#ifndef PERFKIT_PREPROCESS_HPP
#define PERFKIT_PREPROCESS_HPP

#include "perfkit/volume.hpp"

#include <Eigen/Core>

#include <span>

namespace perfkit {

struct PreprocessConfig {
    Eigen::Vector3d target_spacing{1.0, 1.0, 3.0};
    Eigen::Vector2i crop_size{96, 96};
    bool normalize = true;

    void validate() const;
};

/// Trilinear resampling over the same physical extent, dims = ceil(extent / spacing).
/// Samples outside the input clamp to the nearest edge voxel.
Volume3 resample_trilinear(const Volume3& volume, const Eigen::Vector3d& target_spacing);

/// In-plane window centered on the image center (offset floor((n - c) / 2)); z untouched.
/// Undersized axes are zero-padded, the odd extra voxel going to the high side.
Volume3 center_crop(const Volume3& volume, const Eigen::Vector2i& crop);

struct NormalizeResult {
    Volume3 volume;
    bool degenerate = false;
};

/// Min-max scaling into [0, 1]; a constant volume maps to zeros and is flagged.
NormalizeResult normalize_minmax(const Volume3& volume);

/// Resample, crop, then normalize (when enabled).
Volume3 preprocess(const Volume3& volume, const PreprocessConfig& config);

/// Early-fusion stack; input order is channel order (T2w, ADC, then perfusion maps).
MultiChannel assemble_channels(std::span<const Volume3> modalities);

} // namespace perfkit

#endif // PERFKIT_PREPROCESS_HPP
