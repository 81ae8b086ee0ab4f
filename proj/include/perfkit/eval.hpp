#ifndef PERFKIT_EVAL_HPP
#define PERFKIT_EVAL_HPP

#include "perfkit/volume.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace perfkit {

struct LesionCandidate {
    std::vector<std::size_t> voxels; // sorted linear indices
    double score = 0.0;
    GsGroup predicted_gs;
    std::string patient_id;
};

struct CandidateOptions {
    double theta = 0.5;
    bool cs_only = false;
};

/// Connected regions of lesion probability mass > theta. Lesion classes are
/// labels 2..5, or 3..5 (GS > 6) with cs_only.
std::vector<LesionCandidate> extract_candidates(const ProbabilityMap& probs,
                                                const std::string& patient_id,
                                                const CandidateOptions& options = {});

inline constexpr double kDefaultHitRatio = 0.1;

struct MatchResult {
    std::size_t gt_index = 0;
    double overlap = 0.0; // |cand & gt| / |gt|
};

/// GT lesion maximizing |cand & gt| / |gt| (first on ties), if that ratio reaches hit_ratio.
std::optional<MatchResult> match(const LesionCandidate& candidate,
                                 std::span<const LesionAnnotation> gts, const Grid3& grid,
                                 double hit_ratio = kDefaultHitRatio);

/// Detections and references of one patient on one grid.
struct PatientCase {
    std::string patient_id;
    Grid3 grid;
    std::vector<LesionCandidate> candidates;
    std::vector<LesionAnnotation> lesions;
};

struct FrocPoint {
    double threshold = std::numeric_limits<double>::infinity();
    double fp_per_patient = 0.0;
    double sensitivity = 0.0;
};

struct FrocCurve {
    std::vector<FrocPoint> points;
    std::size_t n_patients = 0;
    std::size_t n_lesions = 0;

    double max_fp() const { return points.empty() ? 0.0 : points.back().fp_per_patient; }
    double max_sensitivity() const { return points.empty() ? 0.0 : points.back().sensitivity; }
};

/// Threshold sweep over distinct candidate scores (descending), starting at +inf.
FrocCurve froc(std::span<const PatientCase> cases, double hit_ratio = kDefaultHitRatio);

/// Sensitivity at a false-positive rate, linearly interpolated along the curve;
/// saturates at the maximum sensitivity beyond the last point.
double sensitivity_at_fp(const FrocCurve& curve, double fp_target);

using ConfusionMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Cohen's kappa with weights (i - j)^2 / (C - 1)^2. Returns 0 when the
/// expected weighted disagreement vanishes.
double quadratic_weighted_kappa(const ConfusionMatrix& matrix);

/// 5x5 lesion-level grading matrix (rows truth, columns prediction, code 0 = none).
ConfusionMatrix lesion_grading_confusion(std::span<const PatientCase> cases,
                                         double hit_ratio = kDefaultHitRatio);

/// 2|a & b| / (|a| + |b|); 1 when both are empty.
double dice(const Mask& a, const Mask& b);

/// Lesion annotations from a label map: 26-connected components of each lesion class.
std::vector<LesionAnnotation> lesions_from_labels(const LabelVolume& labels,
                                                  const std::string& patient_id,
                                                  int first_id = 1);

struct EvalSummary {
    double kappa = 0.0;
    double sensi_1fp = 0.0;
    double sensi_2fp = 0.0;
    double sensi_max = 0.0;
    double max_fp = 0.0;
    double dice_prostate = 0.0;
};

} // namespace perfkit

#endif // PERFKIT_EVAL_HPP
