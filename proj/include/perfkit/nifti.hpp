#ifndef PERFKIT_NIFTI_HPP
#define PERFKIT_NIFTI_HPP

#include "perfkit/volume.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace perfkit {

namespace fs = std::filesystem;

// NIfTI-1 single-file images (.nii, .nii.gz). Intensities and maps are written
// as float32, labels as uint8. Readers accept the common integer and float
// datatypes and apply scl_slope/scl_inter.
namespace nifti {

enum class Datatype : short {
    uint8 = 2,
    int16 = 4,
    int32 = 8,
    float32 = 16,
    float64 = 64,
    int8 = 256,
    uint16 = 512,
    uint32 = 768,
};

/// Decoded image: spatial grid, number of volumes along dim 4, and values (x-fastest, then t).
struct Image {
    Grid3 grid;
    int n_volumes = 1;
    int ndim = 3;
    Datatype datatype = Datatype::float32;
    Eigen::ArrayXd values;
};

Image read_image(const fs::path& path);
void write_image(const fs::path& path, const Image& image);

} // namespace nifti

/// 3D file -> Volume3; 4D file -> DceSeries (timing from `timing_path`, else the
/// default sidecar when present, else frame indices).
std::variant<Volume3, DceSeries> read_nifti(const fs::path& path,
                                            const std::optional<fs::path>& timing_path = {});

Volume3 read_volume(const fs::path& path);
DceSeries read_dce(const fs::path& path, const std::optional<fs::path>& timing_path = {});
LabelVolume read_labels(const fs::path& path);
Mask read_mask(const fs::path& path);
ProbabilityMap read_probability_map(const fs::path& path);

void write_nifti(const fs::path& path, const Volume3& volume);
void write_nifti(const fs::path& path, const LabelVolume& labels);
void write_nifti(const fs::path& path, const Mask& mask);
void write_nifti(const fs::path& path, const DceSeries& series);
void write_nifti(const fs::path& path, const MultiChannel& stack);
void write_nifti(const fs::path& path, const ProbabilityMap& probs);

/// File name without .nii / .nii.gz.
std::string nifti_stem(const fs::path& path);

/// `<dir>/<stem>_timing.txt` next to a NIfTI file.
fs::path default_timing_path(const fs::path& nifti_path);

/// One acquisition time (seconds) per line; blank lines ignored.
std::vector<double> read_timing(const fs::path& path);
void write_timing(const fs::path& path, const std::vector<double>& times);

} // namespace perfkit

#endif // PERFKIT_NIFTI_HPP
