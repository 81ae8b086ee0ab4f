#include "perfkit/kinetics.hpp"

#include <cmath>
#include <limits>

namespace perfkit {

namespace {

bool uniform_timing(const Eigen::ArrayXd& times)
{
    const Eigen::Index n = times.size();
    const double step = times(1) - times(0);
    for (Eigen::Index k = 2; k < n; ++k)
        if (std::abs((times(k) - times(k - 1)) - step) > 1e-9 * std::abs(step))
            return false;
    return true;
}

// Argmax with first-occurrence tie-break over [first, last].
int first_argmax(const Eigen::ArrayXd& values, Eigen::Index first, Eigen::Index last)
{
    Eigen::Index best = first;
    for (Eigen::Index k = first + 1; k <= last; ++k)
        if (values(k) > values(best))
            best = k;
    return static_cast<int>(best);
}

} // namespace

int tmax(const TimeIntensityCurve& curve)
{
    return first_argmax(curve.samples, 0, curve.size() - 1);
}

int detect_onset(const TimeIntensityCurve& curve)
{
    const Eigen::Index n = curve.size();
    const int peak = tmax(curve);
    if (peak < 2)
        return 0;
    const Eigen::Index last = std::min<Eigen::Index>(peak, n - 2);
    const auto& s = curve.samples;
    const auto& t = curve.times;

    // accel(k) for k in [1, n-2]; slot 0 unused
    Eigen::ArrayXd accel = Eigen::ArrayXd::Zero(n - 1);
    if (uniform_timing(t)) {
        accel.segment(1, n - 2) = s.segment(2, n - 2) - 2.0 * s.segment(1, n - 2) + s.segment(0, n - 2);
    } else {
        for (Eigen::Index k = 1; k <= n - 2; ++k) {
            const double right = (s(k + 1) - s(k)) / (t(k + 1) - t(k));
            const double left = (s(k) - s(k - 1)) / (t(k) - t(k - 1));
            accel(k) = 2.0 * (right - left) / (t(k + 1) - t(k - 1));
        }
    }
    return first_argmax(accel, 1, last);
}

FlaggedValue wash_in_slope(const TimeIntensityCurve& curve)
{
    const int peak = tmax(curve);
    const int onset = detect_onset(curve);
    if (peak == onset)
        return {0.0, true};
    const auto& s = curve.samples;
    const auto& t = curve.times;
    return {(s(peak) - s(onset)) / (t(peak) - t(onset)), false};
}

FlaggedValue wash_out_slope(const TimeIntensityCurve& curve)
{
    const int peak = tmax(curve);
    const Eigen::Index last = curve.size() - 1;
    if (peak == last)
        return {0.0, true};
    const auto& s = curve.samples;
    const auto& t = curve.times;
    return {(s(last) - s(peak)) / (t(last) - t(peak)), false};
}

FlaggedValue percent_enhancement(const TimeIntensityCurve& curve)
{
    const auto& s = curve.samples;
    const double scale = s.abs().maxCoeff();
    const double eps = scale > 0.0 ? 1e-6 * scale : 1e-12;
    if (s(0) < eps)
        return {0.0, true};
    const int peak = tmax(curve);
    return {100.0 * (s(peak) - s(0)) / s(0), false};
}

CurveFeatures curve_features(const TimeIntensityCurve& curve)
{
    CurveFeatures f;
    f.tmax = tmax(curve);
    f.onset = detect_onset(curve);
    const FlaggedValue in = wash_in_slope(curve);
    const FlaggedValue out = wash_out_slope(curve);
    const FlaggedValue pe = percent_enhancement(curve);
    f.wash_in_slope = in.value;
    f.wash_out_slope = out.value;
    f.percent_enhancement = pe.value;
    f.degenerate = in.degenerate || out.degenerate || pe.degenerate;
    return f;
}

int max_slope_frame(const DceSeries& series, const Mask* mask)
{
    const std::size_t n_frames = series.n_frames();
    if (n_frames < 2)
        throw ValidationError("max slope frame needs at least 2 frames");
    Eigen::ArrayXd mean(static_cast<Eigen::Index>(n_frames));
    if (mask) {
        if (!compatible(mask->grid(), series.grid()))
            throw ValidationError("mask grid does not match the series grid");
        const auto selected = (mask->data() != 0);
        const auto count = selected.count();
        if (count == 0)
            throw ValidationError("mask is empty");
        for (std::size_t t = 0; t < n_frames; ++t)
            mean(static_cast<Eigen::Index>(t)) =
                selected.select(series.frame(t).data().cast<double>(), 0.0).sum() /
                static_cast<double>(count);
    } else {
        for (std::size_t t = 0; t < n_frames; ++t)
            mean(static_cast<Eigen::Index>(t)) = series.frame(t).data().cast<double>().mean();
    }
    const Eigen::Index m = static_cast<Eigen::Index>(n_frames) - 1;
    const Eigen::Map<const Eigen::ArrayXd> times(series.times().data(), m + 1);
    const Eigen::ArrayXd slopes = (mean.tail(m) - mean.head(m)) / (times.tail(m) - times.head(m));
    return first_argmax(slopes, 0, m - 1) + 1;
}

PerfusionMapSet compute_perfusion_maps(const DceSeries& series, const Mask* mask, unsigned workers)
{
    const Grid3& grid = series.grid();
    const std::size_t n = grid.voxel_count();
    PerfusionMapSet maps{Volume3(grid), Volume3(grid), Volume3(grid), Volume3(grid), Volume3(grid), 0, 0};

    std::vector<std::uint8_t> degenerate(n, 0);
    parallel_for(n, workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t v = begin; v < end; ++v) {
            const CurveFeatures f = curve_features(extract_curve(series, v));
            maps.tmax_map[v] = static_cast<float>(f.tmax);
            maps.wash_in_map[v] = static_cast<float>(f.wash_in_slope);
            maps.wash_out_map[v] = static_cast<float>(f.wash_out_slope);
            maps.percent_enhancement_map[v] = static_cast<float>(f.percent_enhancement);
            degenerate[v] = f.degenerate ? 1 : 0;
        }
    });
    for (auto d : degenerate)
        maps.degenerate_voxels += d;

    maps.max_slope_frame_index = max_slope_frame(series, mask);
    maps.max_slope_volume = series.frame(static_cast<std::size_t>(maps.max_slope_frame_index));
    return maps;
}

Volume3 tmax_in_time_units(const PerfusionMapSet& maps, const DceSeries& series)
{
    Volume3 out = maps.tmax_map;
    for (std::size_t v = 0; v < out.size(); ++v)
        out[v] = static_cast<float>(series.times().at(static_cast<std::size_t>(maps.tmax_map[v])));
    return out;
}

} // namespace perfkit
