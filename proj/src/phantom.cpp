#include "perfkit/phantom.hpp"

#include "perfkit/kinetics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace perfkit {

void KineticParams::validate() const
{
    if (!(baseline >= 0.0) || !(amplitude >= 0.0) || !(onset_time >= 0.0) ||
        !(time_to_peak > 0.0) || !(shape > 0.0))
        throw ValidationError("kinetic parameters need baseline >= 0, amplitude >= 0, "
                              "onset >= 0, time to peak > 0 and shape > 0");
}

double gamma_variate(double t, const KineticParams& p)
{
    if (t < p.onset_time)
        return p.baseline;
    const double x = (t - p.onset_time) / p.time_to_peak;
    return p.baseline + p.amplitude * std::pow(x, p.shape) * std::exp(p.shape * (1.0 - x));
}

std::vector<std::size_t> PhantomRegion::voxels(const Grid3& grid) const
{
    std::vector<std::size_t> out;
    for (int k = 0; k < grid.dims.z(); ++k)
        for (int j = 0; j < grid.dims.y(); ++j)
            for (int i = 0; i < grid.dims.x(); ++i) {
                const Index3 p(i, j, k);
                const bool inside = shape == Shape::box
                                        ? (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all()
                                        : (p.cast<double>() - center).norm() <= radius;
                if (inside)
                    out.push_back(grid.linear(p));
            }
    return out;
}

std::vector<double> PhantomSpec::times() const
{
    std::vector<double> t(static_cast<std::size_t>(n_frames));
    for (int k = 0; k < n_frames; ++k)
        t[static_cast<std::size_t>(k)] = k * frame_interval;
    return t;
}

void PhantomSpec::validate() const
{
    (void)Volume3(grid); // grid checks
    if (n_frames < 3)
        throw ValidationError("phantom needs at least 3 frames");
    if (!(frame_interval > 0.0))
        throw ValidationError("frame interval must be positive");
    if (!(noise_sigma >= 0.0))
        throw ValidationError("noise sigma must be >= 0");
    const double last_time = (n_frames - 1) * frame_interval;
    auto check_kinetics = [&](const KineticParams& p) {
        p.validate();
        if (p.amplitude > 0.0 && p.peak_time() > last_time)
            throw ValidationError("region " + std::to_string(p.region_id) +
                                  ": peak falls outside the acquisition window");
    };
    check_kinetics(background);
    std::vector<char> used(grid.voxel_count(), 0);
    for (const auto& r : regions) {
        check_kinetics(r.kinetics);
        if (r.role == RegionRole::lesion && r.gs.code() < 1)
            throw ValidationError("lesion regions need a Gleason group >= 1");
        const auto vox = r.voxels(grid);
        if (vox.empty())
            throw ValidationError("region " + std::to_string(r.kinetics.region_id) + " is empty");
        for (std::size_t v : vox) {
            if (used[v])
                throw ValidationError("phantom regions overlap");
            used[v] = 1;
        }
    }
}

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

double unit_open(std::uint64_t bits)
{
    // (0, 1]
    return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

} // namespace

double phantom_noise(std::uint64_t seed, std::uint64_t voxel, std::uint64_t frame)
{
    const std::uint64_t key = splitmix64(splitmix64(seed) ^ splitmix64(voxel * 0x100000001B3ull + frame));
    const double u1 = unit_open(splitmix64(key));
    const double u2 = unit_open(splitmix64(key ^ 0xD1B54A32D192ED03ull));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

RegionTruth region_truth(const KineticParams& p, const std::vector<double>& times)
{
    RegionTruth truth;
    truth.region_id = p.region_id;
    truth.peak_time = p.peak_time();
    if (p.amplitude == 0.0)
        return truth;

    const auto n = static_cast<Eigen::Index>(times.size());
    Eigen::ArrayXd t = Eigen::Map<const Eigen::ArrayXd>(times.data(), n);
    Eigen::ArrayXd s(n);
    for (Eigen::Index k = 0; k < n; ++k)
        s(k) = gamma_variate(t(k), p);
    (t - truth.peak_time).abs().minCoeff(&truth.tmax_frame);
    truth.onset_frame = detect_onset(TimeIntensityCurve(s, t));

    const double peak_value = p.baseline + p.amplitude;
    const double t_onset = t(truth.onset_frame);
    if (t_onset < truth.peak_time)
        truth.wash_in_slope = (peak_value - s(truth.onset_frame)) / (truth.peak_time - t_onset);
    if (t(n - 1) > truth.peak_time)
        truth.wash_out_slope = (s(n - 1) - peak_value) / (t(n - 1) - truth.peak_time);
    if (p.baseline > 0.0)
        truth.percent_enhancement = 100.0 * p.amplitude / p.baseline;
    return truth;
}

Phantom synth_dce(const PhantomSpec& spec)
{
    spec.validate();
    const Grid3& grid = spec.grid;
    const std::size_t n_vox = grid.voxel_count();
    const std::vector<double> times = spec.times();

    // region index per voxel; -1 = background
    std::vector<int> owner(n_vox, -1);
    for (std::size_t r = 0; r < spec.regions.size(); ++r)
        for (std::size_t v : spec.regions[r].voxels(grid))
            owner[v] = static_cast<int>(r);

    Phantom out;
    out.labels = LabelVolume(grid);
    std::vector<Volume3> frames(times.size(), Volume3(grid));
    for (std::size_t v = 0; v < n_vox; ++v) {
        const PhantomRegion* region = owner[v] >= 0 ? &spec.regions[static_cast<std::size_t>(owner[v])] : nullptr;
        const KineticParams& p = region ? region->kinetics : spec.background;
        for (std::size_t t = 0; t < times.size(); ++t) {
            double value = gamma_variate(times[t], p);
            if (spec.noise_sigma > 0.0)
                value += spec.noise_sigma * phantom_noise(spec.seed, v, t);
            frames[t][v] = static_cast<float>(value);
        }
        if (region) {
            if (region->role == RegionRole::prostate)
                out.labels[v] = static_cast<std::uint8_t>(SegClass::prostate);
            else if (region->role == RegionRole::lesion)
                out.labels[v] = region->gs.label();
        }
    }
    out.series = DceSeries(std::move(frames), times, DceSeries::TimeUnit::seconds);

    int lesion_id = 1;
    out.truth.push_back(region_truth(spec.background, times));
    for (const auto& r : spec.regions) {
        out.truth.push_back(region_truth(r.kinetics, times));
        if (r.role != RegionRole::lesion)
            continue;
        LesionAnnotation ann;
        ann.id = lesion_id++;
        ann.gs = r.gs;
        ann.patient_id = spec.patient_id;
        for (std::size_t v : r.voxels(grid))
            ann.voxels.push_back(grid.unravel(v));
        out.lesions.push_back(std::move(ann));
    }
    return out;
}

PhantomSpec default_phantom_spec()
{
    PhantomSpec spec;
    spec.grid = Grid3(Index3(24, 24, 6), Eigen::Vector3d(1.0, 1.0, 3.0));
    spec.n_frames = 20;
    spec.frame_interval = 5.0;
    spec.background = {80.0, 20.0, 20.0, 50.0, 1.5, 0};

    PhantomRegion prostate;
    prostate.lo = Index3(3, 4, 1);
    prostate.hi = Index3(10, 19, 4);
    prostate.kinetics = {110.0, 60.0, 15.0, 40.0, 2.0, 1};
    prostate.role = RegionRole::prostate;

    PhantomRegion lesion_a;
    lesion_a.lo = Index3(13, 5, 2);
    lesion_a.hi = Index3(16, 8, 3);
    lesion_a.kinetics = {100.0, 150.0, 10.0, 20.0, 3.0, 2};
    lesion_a.role = RegionRole::lesion;
    lesion_a.gs = GsGroup(2);

    PhantomRegion lesion_b;
    lesion_b.shape = PhantomRegion::Shape::sphere;
    lesion_b.center = Eigen::Vector3d(18.0, 16.0, 3.0);
    lesion_b.radius = 2.0;
    lesion_b.kinetics = {100.0, 200.0, 10.0, 15.0, 4.0, 3};
    lesion_b.role = RegionRole::lesion;
    lesion_b.gs = GsGroup(4);

    PhantomRegion lesion_c;
    lesion_c.lo = Index3(13, 12, 1);
    lesion_c.hi = Index3(15, 13, 1);
    lesion_c.kinetics = {100.0, 90.0, 12.0, 25.0, 2.5, 4};
    lesion_c.role = RegionRole::lesion;
    lesion_c.gs = GsGroup(1);

    spec.regions = {prostate, lesion_a, lesion_b, lesion_c};
    spec.noise_sigma = 0.0;
    spec.seed = 20220101;
    return spec;
}

} // namespace perfkit
