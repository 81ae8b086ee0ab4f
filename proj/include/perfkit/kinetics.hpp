#ifndef PERFKIT_KINETICS_HPP
#define PERFKIT_KINETICS_HPP

#include "perfkit/parallel.hpp"
#include "perfkit/volume.hpp"

#include <cstdint>
#include <optional>

namespace perfkit {

/// Semi-quantitative descriptors of one time-intensity curve.
struct CurveFeatures {
    int onset = 0;
    int tmax = 0;
    double wash_in_slope = 0.0;
    double wash_out_slope = 0.0;
    double percent_enhancement = 0.0;
    bool degenerate = false;
};

// Scalar result plus a flag raised when the curve shape leaves the feature undefined.
struct FlaggedValue {
    double value = 0.0;
    bool degenerate = false;
};

/// First frame reaching the curve maximum.
int tmax(const TimeIntensityCurve& curve);

/// Frame of maximum acceleration in [1, min(tmax, T-2)]; 0 when tmax < 2.
/// Uses plain second differences on uniform timing and second divided
/// differences on non-uniform timing.
int detect_onset(const TimeIntensityCurve& curve);

/// Chord slope from onset to tmax; 0 (degenerate) when they coincide.
FlaggedValue wash_in_slope(const TimeIntensityCurve& curve);

/// Chord slope from tmax to the last frame; 0 (degenerate) when the peak is the last frame.
FlaggedValue wash_out_slope(const TimeIntensityCurve& curve);

/// 100 * (peak - first) / first; 0 (degenerate) when the first sample is below
/// 1e-6 * max|samples| (1e-12 for an all-zero curve).
FlaggedValue percent_enhancement(const TimeIntensityCurve& curve);

CurveFeatures curve_features(const TimeIntensityCurve& curve);

/// Later frame of the first interval with the steepest mean-curve slope.
/// The mean runs over `mask` voxels (nonzero), or the whole volume without a mask.
int max_slope_frame(const DceSeries& series, const Mask* mask = nullptr);

struct PerfusionMapSet {
    Volume3 tmax_map;
    Volume3 wash_in_map;
    Volume3 wash_out_map;
    Volume3 percent_enhancement_map;
    Volume3 max_slope_volume;
    int max_slope_frame_index = 0;
    std::size_t degenerate_voxels = 0;
};

/// Per-voxel maps of the whole series; output is bit-identical for any worker count.
PerfusionMapSet compute_perfusion_maps(const DceSeries& series, const Mask* mask = nullptr,
                                       unsigned workers = default_workers());

/// tmax_map with frame indices replaced by the series acquisition times.
Volume3 tmax_in_time_units(const PerfusionMapSet& maps, const DceSeries& series);

} // namespace perfkit

#endif // PERFKIT_KINETICS_HPP
