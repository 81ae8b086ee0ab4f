#ifndef PERFKIT_VOLUME_HPP
#define PERFKIT_VOLUME_HPP

#include "perfkit/error.hpp"
#include "perfkit/grid.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <type_traits>
#include <vector>

namespace perfkit {

/// Dense scalar volume on a Grid3, voxels stored x-fastest.
template <typename Scalar>
class Volume {
public:
    using Storage = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

    Volume() = default;

    explicit Volume(const Grid3& grid, Scalar fill = Scalar(0))
        : grid_(grid), data_(Storage::Constant(static_cast<Eigen::Index>(grid.voxel_count()), fill))
    {
        validate_grid();
    }

    Volume(const Grid3& grid, Storage data) : grid_(grid), data_(std::move(data))
    {
        validate_grid();
        if (static_cast<std::size_t>(data_.size()) != grid_.voxel_count())
            throw ValidationError("voxel count does not match grid dims");
        if constexpr (std::is_floating_point_v<Scalar>) {
            if (!data_.isFinite().all())
                throw ValidationError("volume contains non-finite voxels");
        }
    }

    const Grid3& grid() const { return grid_; }
    const Storage& data() const { return data_; }
    Storage& data() { return data_; }
    std::size_t size() const { return static_cast<std::size_t>(data_.size()); }

    Scalar operator[](std::size_t idx) const { return data_(static_cast<Eigen::Index>(idx)); }
    Scalar& operator[](std::size_t idx) { return data_(static_cast<Eigen::Index>(idx)); }
    Scalar operator()(int i, int j, int k) const { return (*this)[grid_.linear(i, j, k)]; }
    Scalar& operator()(int i, int j, int k) { return (*this)[grid_.linear(i, j, k)]; }

private:
    void validate_grid() const
    {
        if ((grid_.dims.array() < 1).any())
            throw ValidationError("grid dims must be >= 1");
        if (!((grid_.spacing.array() > 0.0).all()) || !grid_.spacing.allFinite())
            throw ValidationError("grid spacing must be strictly positive");
    }

    Grid3 grid_;
    Storage data_;
};

using Volume3 = Volume<float>;
using Mask = Volume<std::uint8_t>;

// Segmentation classes of the 6-channel model output.
enum class SegClass : std::uint8_t {
    background = 0,
    prostate = 1,
    gs33 = 2,
    gs34 = 3,
    gs43 = 4,
    gs8plus = 5,
};
inline constexpr int kNumClasses = 6;

/// Ordinal Gleason-score group: 0 none, 1 GS 3+3, 2 GS 3+4, 3 GS 4+3, 4 GS >= 8.
class GsGroup {
public:
    constexpr GsGroup() = default;
    explicit GsGroup(int code);
    constexpr int code() const { return code_; }
    friend constexpr auto operator<=>(GsGroup, GsGroup) = default;

    /// Lesion class label (2..5) of a lesion group; code 0 maps to background.
    std::uint8_t label() const { return code_ == 0 ? 0 : static_cast<std::uint8_t>(code_ + 1); }
    static GsGroup from_label(std::uint8_t label);

private:
    int code_ = 0;
};
inline constexpr int kNumGsGroups = 5;

/// Class-coded label map with codes in 0..5.
class LabelVolume : public Volume<std::uint8_t> {
public:
    LabelVolume() = default;
    explicit LabelVolume(const Grid3& grid) : Volume(grid, 0) {}
    LabelVolume(const Grid3& grid, Storage labels);
};

/// Per-voxel distribution over the 6 segmentation classes.
class ProbabilityMap {
public:
    using Matrix = Eigen::Array<float, kNumClasses, Eigen::Dynamic>;

    ProbabilityMap() = default;
    /// probs is classes x voxels; every column must lie in [0,1] and sum to 1 within 1e-5.
    ProbabilityMap(const Grid3& grid, Matrix probs);

    const Grid3& grid() const { return grid_; }
    const Matrix& probs() const { return probs_; }
    std::size_t size() const { return static_cast<std::size_t>(probs_.cols()); }

    /// Most likely class per voxel (first maximum on ties).
    LabelVolume argmax() const;

    /// One-hot distribution reproducing a label map exactly.
    static ProbabilityMap one_hot(const LabelVolume& labels);

private:
    Grid3 grid_;
    Matrix probs_;
};

/// Channel-major stack of grid-compatible volumes.
struct MultiChannel {
    Grid3 grid;
    std::vector<Volume3> channels;
};

/// 4D DCE acquisition: T >= 3 frames on one grid with strictly increasing times.
class DceSeries {
public:
    enum class TimeUnit { seconds, frame_index };

    DceSeries() = default;
    DceSeries(std::vector<Volume3> frames, std::vector<double> times, TimeUnit unit);
    /// Frame-index timing 0..T-1.
    explicit DceSeries(std::vector<Volume3> frames);

    const Grid3& grid() const { return frames_.front().grid(); }
    const std::vector<Volume3>& frames() const { return frames_; }
    const Volume3& frame(std::size_t t) const { return frames_.at(t); }
    const std::vector<double>& times() const { return times_; }
    TimeUnit time_unit() const { return unit_; }
    std::size_t n_frames() const { return frames_.size(); }

private:
    void validate() const;

    std::vector<Volume3> frames_;
    std::vector<double> times_;
    TimeUnit unit_ = TimeUnit::frame_index;
};

std::string to_string(DceSeries::TimeUnit unit);

/// One voxel's samples over the series frames.
struct TimeIntensityCurve {
    Eigen::ArrayXd samples;
    Eigen::ArrayXd times;

    TimeIntensityCurve() = default;
    TimeIntensityCurve(Eigen::ArrayXd s, Eigen::ArrayXd t);
    /// Frame-index timing.
    explicit TimeIntensityCurve(Eigen::ArrayXd s);

    Eigen::Index size() const { return samples.size(); }
};

TimeIntensityCurve extract_curve(const DceSeries& series, const Index3& ijk);
TimeIntensityCurve extract_curve(const DceSeries& series, std::size_t linear_index);

/// Labeled, 26-connected lesion region of one patient.
struct LesionAnnotation {
    int id = 0;
    std::vector<Index3> voxels;
    GsGroup gs;
    std::string patient_id;

    /// Throws ValidationError unless voxels are nonempty, inside grid, 26-connected and gs >= 1.
    void validate(const Grid3& grid) const;
};

/// Binary mask of voxels with label >= 1 (prostate including lesions).
Mask foreground_mask(const LabelVolume& labels);

} // namespace perfkit

#endif // PERFKIT_VOLUME_HPP
