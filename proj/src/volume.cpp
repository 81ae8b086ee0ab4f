#include "perfkit/volume.hpp"

#include "perfkit/components.hpp"

#include <algorithm>
#include <cmath>

namespace perfkit {

Grid3::Grid3(const Index3& d, const Eigen::Vector3d& s, const Eigen::Vector3d& o)
    : dims(d), spacing(s), origin(o)
{
}

bool compatible(const Grid3& a, const Grid3& b)
{
    return a.dims == b.dims &&
           ((a.spacing - b.spacing).cwiseAbs().array() <= kGridTolerance).all() &&
           ((a.origin - b.origin).cwiseAbs().array() <= kGridTolerance).all();
}

GsGroup::GsGroup(int code) : code_(code)
{
    if (code < 0 || code >= kNumGsGroups)
        throw ValidationError("Gleason group code out of range: " + std::to_string(code));
}

GsGroup GsGroup::from_label(std::uint8_t label)
{
    if (label < 2 || label >= kNumClasses)
        return GsGroup(0);
    return GsGroup(label - 1);
}

LabelVolume::LabelVolume(const Grid3& grid, Storage labels) : Volume(grid, std::move(labels))
{
    if ((data().template cast<int>() >= kNumClasses).any())
        throw ValidationError("label codes must lie in 0..5");
}

ProbabilityMap::ProbabilityMap(const Grid3& grid, Matrix probs) : grid_(grid), probs_(std::move(probs))
{
    if (static_cast<std::size_t>(probs_.cols()) != grid_.voxel_count())
        throw ValidationError("probability map voxel count does not match grid");
    if (!probs_.isFinite().all() || (probs_ < 0.0f).any() || (probs_ > 1.0f).any())
        throw ValidationError("probabilities must lie in [0, 1]");
    const Eigen::ArrayXd sums = probs_.cast<double>().colwise().sum().transpose();
    if (((sums - 1.0).abs() > 1e-5).any())
        throw ValidationError("per-voxel class probabilities must sum to 1");
}

LabelVolume ProbabilityMap::argmax() const
{
    LabelVolume out(grid_);
    for (Eigen::Index v = 0; v < probs_.cols(); ++v) {
        Eigen::Index best = 0;
        probs_.col(v).maxCoeff(&best);
        out[static_cast<std::size_t>(v)] = static_cast<std::uint8_t>(best);
    }
    return out;
}

ProbabilityMap ProbabilityMap::one_hot(const LabelVolume& labels)
{
    Matrix probs = Matrix::Zero(kNumClasses, static_cast<Eigen::Index>(labels.size()));
    for (std::size_t v = 0; v < labels.size(); ++v)
        probs(labels[v], static_cast<Eigen::Index>(v)) = 1.0f;
    return ProbabilityMap(labels.grid(), std::move(probs));
}

DceSeries::DceSeries(std::vector<Volume3> frames, std::vector<double> times, TimeUnit unit)
    : frames_(std::move(frames)), times_(std::move(times)), unit_(unit)
{
    validate();
}

void DceSeries::validate() const
{
    if (frames_.size() < 3)
        throw ValidationError("DCE series needs at least 3 frames, got " +
                              std::to_string(frames_.size()));
    if (times_.size() != frames_.size())
        throw ValidationError("DCE series needs one acquisition time per frame");
    for (const auto& f : frames_)
        if (!compatible(f.grid(), frames_.front().grid()))
            throw ValidationError("DCE frames must share one grid");
    for (std::size_t t = 0; t < times_.size(); ++t) {
        if (!std::isfinite(times_[t]))
            throw ValidationError("acquisition times must be finite");
        if (t > 0 && !(times_[t] > times_[t - 1]))
            throw ValidationError("acquisition times must be strictly increasing");
    }
}

namespace {
std::vector<double> frame_indices(std::size_t n)
{
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i)
        t[i] = static_cast<double>(i);
    return t;
}
} // namespace

DceSeries::DceSeries(std::vector<Volume3> frames)
    : frames_(std::move(frames)), times_(frame_indices(frames_.size())), unit_(TimeUnit::frame_index)
{
    validate();
}

std::string to_string(DceSeries::TimeUnit unit)
{
    return unit == DceSeries::TimeUnit::seconds ? "seconds" : "frame-index";
}

TimeIntensityCurve::TimeIntensityCurve(Eigen::ArrayXd s, Eigen::ArrayXd t)
    : samples(std::move(s)), times(std::move(t))
{
    if (samples.size() != times.size())
        throw ValidationError("curve samples and times differ in length");
    if (samples.size() < 3)
        throw ValidationError("time-intensity curve needs at least 3 samples");
}

TimeIntensityCurve::TimeIntensityCurve(Eigen::ArrayXd s)
    : TimeIntensityCurve(s, Eigen::ArrayXd::LinSpaced(s.size(), 0.0, static_cast<double>(s.size() - 1)))
{
}

TimeIntensityCurve extract_curve(const DceSeries& series, std::size_t linear_index)
{
    if (linear_index >= series.grid().voxel_count())
        throw ValidationError("voxel index out of bounds");
    const auto n = static_cast<Eigen::Index>(series.n_frames());
    Eigen::ArrayXd samples(n);
    for (Eigen::Index t = 0; t < n; ++t)
        samples(t) = series.frame(static_cast<std::size_t>(t))[linear_index];
    return {std::move(samples), Eigen::Map<const Eigen::ArrayXd>(series.times().data(), n)};
}

TimeIntensityCurve extract_curve(const DceSeries& series, const Index3& ijk)
{
    if (!series.grid().contains(ijk))
        throw ValidationError("voxel index out of bounds");
    return extract_curve(series, series.grid().linear(ijk));
}

void LesionAnnotation::validate(const Grid3& grid) const
{
    if (voxels.empty())
        throw ValidationError("lesion " + std::to_string(id) + " has no voxels");
    if (gs.code() < 1)
        throw ValidationError("lesion " + std::to_string(id) + " needs a Gleason group >= 1");
    std::vector<std::size_t> linear;
    linear.reserve(voxels.size());
    for (const auto& v : voxels) {
        if (!grid.contains(v))
            throw ValidationError("lesion " + std::to_string(id) + " has a voxel outside the grid");
        linear.push_back(grid.linear(v));
    }
    if (!is_connected(grid, linear))
        throw ValidationError("lesion " + std::to_string(id) + " is not 26-connected");
}

Mask foreground_mask(const LabelVolume& labels)
{
    return Mask(labels.grid(), (labels.data() >= 1).cast<std::uint8_t>());
}

} // namespace perfkit
