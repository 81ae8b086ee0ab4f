#include "perfkit/preprocess.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace perfkit {

void PreprocessConfig::validate() const
{
    if (!target_spacing.allFinite() || (target_spacing.array() <= 0.0).any())
        throw ValidationError("target spacing must be strictly positive");
    if ((crop_size.array() < 1).any())
        throw ValidationError("crop size must be >= 1");
}

namespace {

// Lower sample index and fractional weight along one axis, clamped to the edge.
struct AxisSample {
    int lo = 0;
    int hi = 0;
    double frac = 0.0;
};

AxisSample axis_sample(double ci, int n)
{
    if (n == 1 || ci <= 0.0)
        return {0, 0, 0.0};
    if (ci >= n - 1)
        return {n - 1, n - 1, 0.0};
    const int lo = static_cast<int>(std::floor(ci));
    return {lo, lo + 1, ci - lo};
}

} // namespace

Volume3 resample_trilinear(const Volume3& volume, const Eigen::Vector3d& target_spacing)
{
    if (!target_spacing.allFinite() || (target_spacing.array() <= 0.0).any())
        throw ValidationError("target spacing must be strictly positive");
    const Grid3& in = volume.grid();
    const Eigen::Vector3d ratio = target_spacing.cwiseQuotient(in.spacing);
    Index3 dims;
    for (int a = 0; a < 3; ++a)
        dims(a) = std::max(1, static_cast<int>(std::ceil(in.extent()(a) / target_spacing(a) - 1e-9)));
    // first output center sits half an output voxel inside the input's outer edge
    const Eigen::Vector3d origin = in.origin + 0.5 * (target_spacing - in.spacing);
    const Grid3 out_grid(dims, target_spacing, origin);

    std::array<std::vector<AxisSample>, 3> samples;
    for (int a = 0; a < 3; ++a) {
        auto& axis = samples[static_cast<std::size_t>(a)];
        axis.resize(static_cast<std::size_t>(dims(a)));
        for (int i = 0; i < dims(a); ++i)
            axis[static_cast<std::size_t>(i)] = axis_sample((i + 0.5) * ratio(a) - 0.5, in.dims(a));
    }

    Volume3 out(out_grid);
    for (int k = 0; k < dims.z(); ++k) {
        const AxisSample& sz = samples[2][static_cast<std::size_t>(k)];
        for (int j = 0; j < dims.y(); ++j) {
            const AxisSample& sy = samples[1][static_cast<std::size_t>(j)];
            for (int i = 0; i < dims.x(); ++i) {
                const AxisSample& sx = samples[0][static_cast<std::size_t>(i)];
                auto at = [&](int x, int y, int z) { return static_cast<double>(volume(x, y, z)); };
                const double c00 = at(sx.lo, sy.lo, sz.lo) * (1 - sx.frac) + at(sx.hi, sy.lo, sz.lo) * sx.frac;
                const double c10 = at(sx.lo, sy.hi, sz.lo) * (1 - sx.frac) + at(sx.hi, sy.hi, sz.lo) * sx.frac;
                const double c01 = at(sx.lo, sy.lo, sz.hi) * (1 - sx.frac) + at(sx.hi, sy.lo, sz.hi) * sx.frac;
                const double c11 = at(sx.lo, sy.hi, sz.hi) * (1 - sx.frac) + at(sx.hi, sy.hi, sz.hi) * sx.frac;
                const double c0 = c00 * (1 - sy.frac) + c10 * sy.frac;
                const double c1 = c01 * (1 - sy.frac) + c11 * sy.frac;
                out(i, j, k) = static_cast<float>(c0 * (1 - sz.frac) + c1 * sz.frac);
            }
        }
    }
    return out;
}

Volume3 center_crop(const Volume3& volume, const Eigen::Vector2i& crop)
{
    if ((crop.array() < 1).any())
        throw ValidationError("crop size must be >= 1");
    const Grid3& in = volume.grid();
    Eigen::Vector2i offset;
    for (int a = 0; a < 2; ++a) {
        const int n = in.dims(a);
        const int c = crop(a);
        offset(a) = n >= c ? (n - c) / 2 : -((c - n) / 2);
    }
    Grid3 out_grid = in;
    out_grid.dims.head<2>() = crop;
    out_grid.origin.head<2>() += offset.cast<double>().cwiseProduct(in.spacing.head<2>());

    Volume3 out(out_grid, 0.0f);
    for (int k = 0; k < in.dims.z(); ++k)
        for (int j = 0; j < crop.y(); ++j) {
            const int sj = j + offset.y();
            if (sj < 0 || sj >= in.dims.y())
                continue;
            for (int i = 0; i < crop.x(); ++i) {
                const int si = i + offset.x();
                if (si >= 0 && si < in.dims.x())
                    out(i, j, k) = volume(si, sj, k);
            }
        }
    return out;
}

NormalizeResult normalize_minmax(const Volume3& volume)
{
    const Eigen::ArrayXd values = volume.data().cast<double>();
    const double lo = values.minCoeff();
    const double hi = values.maxCoeff();
    if (!(hi > lo))
        return {Volume3(volume.grid(), 0.0f), true};
    return {Volume3(volume.grid(), ((values - lo) / (hi - lo)).cast<float>()), false};
}

Volume3 preprocess(const Volume3& volume, const PreprocessConfig& config)
{
    config.validate();
    Volume3 out = center_crop(resample_trilinear(volume, config.target_spacing), config.crop_size);
    if (config.normalize)
        out = normalize_minmax(out).volume;
    return out;
}

MultiChannel assemble_channels(std::span<const Volume3> modalities)
{
    if (modalities.size() < 2)
        throw ValidationError("channel stack needs at least 2 modalities");
    const Grid3& grid = modalities.front().grid();
    for (const auto& m : modalities)
        if (!compatible(m.grid(), grid))
            throw ValidationError("modalities must share one grid");
    return {grid, std::vector<Volume3>(modalities.begin(), modalities.end())};
}

} // namespace perfkit
