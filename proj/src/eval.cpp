#include "perfkit/eval.hpp"

#include "perfkit/components.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

namespace perfkit {

namespace {

std::vector<std::size_t> sorted_linear(const LesionAnnotation& gt, const Grid3& grid)
{
    std::vector<std::size_t> out;
    out.reserve(gt.voxels.size());
    for (const auto& v : gt.voxels)
        out.push_back(grid.linear(v));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::size_t intersection_size(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b)
{
    std::size_t n = 0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (*ia < *ib)
            ++ia;
        else if (*ib < *ia)
            ++ib;
        else {
            ++n;
            ++ia;
            ++ib;
        }
    }
    return n;
}

std::optional<MatchResult> best_match(const LesionCandidate& candidate,
                                      const std::vector<std::vector<std::size_t>>& gt_voxels,
                                      double hit_ratio)
{
    std::optional<MatchResult> best;
    for (std::size_t g = 0; g < gt_voxels.size(); ++g) {
        if (gt_voxels[g].empty())
            continue;
        const double ratio = static_cast<double>(intersection_size(candidate.voxels, gt_voxels[g])) /
                             static_cast<double>(gt_voxels[g].size());
        if (ratio >= hit_ratio && (!best || ratio > best->overlap))
            best = MatchResult{g, ratio};
    }
    return best;
}

// Match of every candidate of a case, in candidate order.
std::vector<std::optional<MatchResult>> match_case(const PatientCase& c, double hit_ratio)
{
    std::vector<std::vector<std::size_t>> gt_voxels;
    gt_voxels.reserve(c.lesions.size());
    for (const auto& gt : c.lesions)
        gt_voxels.push_back(sorted_linear(gt, c.grid));
    std::vector<std::optional<MatchResult>> out;
    out.reserve(c.candidates.size());
    for (const auto& cand : c.candidates)
        out.push_back(best_match(cand, gt_voxels, hit_ratio));
    return out;
}

void check_hit_ratio(double hit_ratio)
{
    if (!(hit_ratio > 0.0 && hit_ratio <= 1.0))
        throw ValidationError("hit ratio must lie in (0, 1]");
}

} // namespace

std::vector<LesionCandidate> extract_candidates(const ProbabilityMap& probs,
                                                const std::string& patient_id,
                                                const CandidateOptions& options)
{
    const int first_class = options.cs_only ? static_cast<int>(SegClass::gs34)
                                            : static_cast<int>(SegClass::gs33);
    const int n_lesion = kNumClasses - first_class;
    const auto& p = probs.probs();
    const Eigen::ArrayXd mass =
        p.bottomRows(n_lesion).cast<double>().colwise().sum().transpose().min(1.0);

    const auto components = connected_components(
        probs.grid(), [&](std::size_t v) { return mass(static_cast<Eigen::Index>(v)) > options.theta; });

    std::vector<LesionCandidate> out;
    out.reserve(components.size());
    for (const auto& comp : components) {
        LesionCandidate cand;
        cand.patient_id = patient_id;
        cand.voxels = comp;
        std::array<std::size_t, kNumClasses> votes{};
        double total = 0.0;
        for (std::size_t v : comp) {
            const auto col = static_cast<Eigen::Index>(v);
            total += mass(col);
            Eigen::Index best = 0;
            p.col(col).tail(n_lesion).maxCoeff(&best);
            ++votes[static_cast<std::size_t>(first_class + best)];
        }
        cand.score = std::clamp(total / static_cast<double>(comp.size()), 0.0, 1.0);
        // majority vote; ties resolve to the higher grade
        int winner = first_class;
        for (int c = first_class; c < kNumClasses; ++c)
            if (votes[static_cast<std::size_t>(c)] >= votes[static_cast<std::size_t>(winner)])
                winner = c;
        cand.predicted_gs = GsGroup::from_label(static_cast<std::uint8_t>(winner));
        out.push_back(std::move(cand));
    }
    return out;
}

std::optional<MatchResult> match(const LesionCandidate& candidate,
                                 std::span<const LesionAnnotation> gts, const Grid3& grid,
                                 double hit_ratio)
{
    check_hit_ratio(hit_ratio);
    std::vector<std::vector<std::size_t>> gt_voxels;
    for (const auto& gt : gts)
        gt_voxels.push_back(sorted_linear(gt, grid));
    return best_match(candidate, gt_voxels, hit_ratio);
}

FrocCurve froc(std::span<const PatientCase> cases, double hit_ratio)
{
    check_hit_ratio(hit_ratio);
    if (cases.empty())
        throw ValidationError("FROC needs at least one patient");
    FrocCurve curve;
    curve.n_patients = cases.size();

    // best detecting score per GT lesion, and scores of false positives
    std::vector<double> lesion_hit_score;
    std::vector<double> fp_scores;
    std::vector<double> all_scores;
    for (const auto& c : cases) {
        const auto matches = match_case(c, hit_ratio);
        std::vector<double> hit(c.lesions.size(), -std::numeric_limits<double>::infinity());
        for (std::size_t i = 0; i < c.candidates.size(); ++i) {
            const double s = c.candidates[i].score;
            all_scores.push_back(s);
            if (matches[i])
                hit[matches[i]->gt_index] = std::max(hit[matches[i]->gt_index], s);
            else
                fp_scores.push_back(s);
        }
        lesion_hit_score.insert(lesion_hit_score.end(), hit.begin(), hit.end());
    }
    curve.n_lesions = lesion_hit_score.size();
    if (curve.n_lesions == 0)
        throw ValidationError("FROC needs at least one ground-truth lesion");

    std::sort(all_scores.begin(), all_scores.end(), std::greater<>());
    all_scores.erase(std::unique(all_scores.begin(), all_scores.end()), all_scores.end());
    std::sort(lesion_hit_score.begin(), lesion_hit_score.end(), std::greater<>());
    std::sort(fp_scores.begin(), fp_scores.end(), std::greater<>());

    const double n_pat = static_cast<double>(curve.n_patients);
    const double n_les = static_cast<double>(curve.n_lesions);
    curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    std::size_t hits = 0;
    std::size_t fps = 0;
    for (double tau : all_scores) {
        while (hits < lesion_hit_score.size() && lesion_hit_score[hits] >= tau)
            ++hits;
        while (fps < fp_scores.size() && fp_scores[fps] >= tau)
            ++fps;
        curve.points.push_back(
            {tau, static_cast<double>(fps) / n_pat, static_cast<double>(hits) / n_les});
    }
    return curve;
}

double sensitivity_at_fp(const FrocCurve& curve, double fp_target)
{
    const auto& pts = curve.points;
    if (pts.empty())
        return 0.0;
    const auto upper = std::upper_bound(pts.begin(), pts.end(), fp_target,
                                        [](double fp, const FrocPoint& p) { return fp < p.fp_per_patient; });
    if (upper == pts.end())
        return pts.back().sensitivity;
    if (upper == pts.begin()) {
        if (fp_target <= 0.0)
            return 0.0;
        return upper->sensitivity * fp_target / upper->fp_per_patient;
    }
    const FrocPoint& lo = *std::prev(upper);
    if (lo.fp_per_patient == fp_target)
        return lo.sensitivity;
    const double w = (fp_target - lo.fp_per_patient) / (upper->fp_per_patient - lo.fp_per_patient);
    return lo.sensitivity + w * (upper->sensitivity - lo.sensitivity);
}

double quadratic_weighted_kappa(const ConfusionMatrix& matrix)
{
    const Eigen::Index n = matrix.rows();
    if (n < 2 || matrix.cols() != n)
        throw ValidationError("kappa needs a square matrix with at least 2 categories");
    if ((matrix.array() < 0).any())
        throw ValidationError("confusion counts must be non-negative");
    const std::int64_t total = matrix.sum();
    if (total == 0)
        throw ValidationError("kappa of an empty confusion matrix");

    // Integer form: kappa = 1 - N * sum w O / sum w r c^T with w = (i - j)^2;
    // the (C - 1)^2 normalization cancels.
    using Wide = __int128;
    const Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> rows = matrix.rowwise().sum();
    const Eigen::Matrix<std::int64_t, 1, Eigen::Dynamic> cols = matrix.colwise().sum();
    Wide observed = 0;
    Wide expected = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            const Wide w = static_cast<Wide>((i - j) * (i - j));
            observed += w * matrix(i, j);
            expected += w * rows(i) * cols(j);
        }
    if (expected == 0)
        return 0.0;
    return 1.0 - static_cast<double>(static_cast<long double>(observed * total) /
                                     static_cast<long double>(expected));
}

ConfusionMatrix lesion_grading_confusion(std::span<const PatientCase> cases, double hit_ratio)
{
    check_hit_ratio(hit_ratio);
    ConfusionMatrix m = ConfusionMatrix::Zero(kNumGsGroups, kNumGsGroups);
    for (const auto& c : cases) {
        const auto matches = match_case(c, hit_ratio);
        std::vector<std::optional<std::size_t>> chosen(c.lesions.size());
        for (std::size_t i = 0; i < c.candidates.size(); ++i) {
            if (!matches[i]) {
                ++m(0, c.candidates[i].predicted_gs.code());
                continue;
            }
            auto& slot = chosen[matches[i]->gt_index];
            if (!slot) {
                slot = i;
                continue;
            }
            const double cur = matches[*slot]->overlap;
            const double cand = matches[i]->overlap;
            if (cand > cur || (cand == cur && c.candidates[i].score > c.candidates[*slot].score))
                slot = i;
        }
        for (std::size_t g = 0; g < c.lesions.size(); ++g) {
            const int col = chosen[g] ? c.candidates[*chosen[g]].predicted_gs.code() : 0;
            ++m(c.lesions[g].gs.code(), col);
        }
    }
    return m;
}

double dice(const Mask& a, const Mask& b)
{
    if (!compatible(a.grid(), b.grid()))
        throw ValidationError("dice needs masks on one grid");
    const auto fa = a.data() != 0;
    const auto fb = b.data() != 0;
    const auto na = fa.count();
    const auto nb = fb.count();
    if (na + nb == 0)
        return 1.0;
    const auto both = (fa && fb).count();
    return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

std::vector<LesionAnnotation> lesions_from_labels(const LabelVolume& labels,
                                                  const std::string& patient_id, int first_id)
{
    std::vector<std::pair<std::uint8_t, Component>> found;
    for (int cls = static_cast<int>(SegClass::gs33); cls < kNumClasses; ++cls) {
        auto comps = connected_components(labels.grid(),
                                          [&](std::size_t v) { return labels[v] == cls; });
        for (auto& comp : comps)
            found.emplace_back(static_cast<std::uint8_t>(cls), std::move(comp));
    }
    std::sort(found.begin(), found.end(),
              [](const auto& a, const auto& b) { return a.second.front() < b.second.front(); });

    std::vector<LesionAnnotation> out;
    out.reserve(found.size());
    int id = first_id;
    for (auto& [cls, comp] : found) {
        LesionAnnotation ann;
        ann.id = id++;
        ann.gs = GsGroup::from_label(cls);
        ann.patient_id = patient_id;
        ann.voxels.reserve(comp.size());
        for (std::size_t v : comp)
            ann.voxels.push_back(labels.grid().unravel(v));
        out.push_back(std::move(ann));
    }
    return out;
}

} // namespace perfkit
