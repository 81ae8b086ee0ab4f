#ifndef PERFKIT_PHANTOM_HPP
#define PERFKIT_PHANTOM_HPP

#include "perfkit/volume.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace perfkit {

/// Gamma-variate bolus parameters; the curve peaks at onset_time + time_to_peak
/// with value baseline + amplitude.
struct KineticParams {
    double baseline = 0.0;
    double amplitude = 1.0;
    double onset_time = 0.0;
    double time_to_peak = 1.0;
    double shape = 1.0;
    int region_id = 0;

    void validate() const;
    double peak_time() const { return onset_time + time_to_peak; }
};

/// baseline for t < t0, else baseline + A x^alpha exp(alpha (1 - x)) with x = (t - t0) / tp.
double gamma_variate(double t, const KineticParams& p);

enum class RegionRole { tissue, prostate, lesion };

struct PhantomRegion {
    enum class Shape { box, sphere };
    Shape shape = Shape::box;
    Index3 lo{0, 0, 0}; // box: inclusive lower corner
    Index3 hi{0, 0, 0}; // box: inclusive upper corner
    Eigen::Vector3d center{0, 0, 0}; // sphere, voxel units
    double radius = 0.0;              // sphere, voxel units
    KineticParams kinetics;
    RegionRole role = RegionRole::tissue;
    GsGroup gs; // lesions only

    std::vector<std::size_t> voxels(const Grid3& grid) const;
};

struct PhantomSpec {
    Grid3 grid;
    int n_frames = 20;
    double frame_interval = 1.0; // seconds
    KineticParams background;     // voxels outside every region
    std::vector<PhantomRegion> regions;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
    std::string patient_id = "phantom";

    void validate() const;
    std::vector<double> times() const;
};

/// Analytic per-region features derived from the closed-form curve.
struct RegionTruth {
    int region_id = 0;
    double peak_time = 0.0;
    int tmax_frame = 0;  // frame nearest the analytic peak
    int onset_frame = 0; // onset detected on the noise-free sampled curve
    double wash_in_slope = 0.0;
    double wash_out_slope = 0.0;
    double percent_enhancement = 0.0;
};

struct Phantom {
    DceSeries series;
    LabelVolume labels;
    std::vector<LesionAnnotation> lesions;
    std::vector<RegionTruth> truth;
};

RegionTruth region_truth(const KineticParams& p, const std::vector<double>& times);

/// Synthesizes the series with counter-based Gaussian noise (SplitMix64 + Box-Muller),
/// so every (seed, voxel, frame) draw is independent of evaluation order.
Phantom synth_dce(const PhantomSpec& spec);

/// Standard normal draw for one (seed, voxel, frame) counter.
double phantom_noise(std::uint64_t seed, std::uint64_t voxel, std::uint64_t frame);

/// Small multi-lesion exam used by tests and the CLI default.
PhantomSpec default_phantom_spec();

} // namespace perfkit

#endif // PERFKIT_PHANTOM_HPP
