// Acceptance run: one PASS/FAIL line per primary criterion, with wall time.
// Exit status is nonzero when any criterion fails.
#include "perfkit/cli.hpp"
#include "perfkit/eval.hpp"
#include "perfkit/json_io.hpp"
#include "perfkit/kinetics.hpp"
#include "perfkit/phantom.hpp"
#include "perfkit/preprocess.hpp"

#include "eval_fixtures.hpp"
#include "kinetics_properties.hpp"
#include "oracles.hpp"
#include "test_helpers.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>

using namespace perfkit;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

int failures = 0;

void criterion(const char* name, double limit_seconds, const std::function<Outcome()>& body)
{
    const auto start = std::chrono::steady_clock::now();
    Outcome r;
    try {
        r = body();
    } catch (const std::exception& e) {
        r = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = limit_seconds <= 0.0 || secs < limit_seconds;
    if (!in_time)
        r.detail += (r.detail.empty() ? "" : "; ") + std::string("over time limit");
    const bool pass = r.pass && in_time;
    failures += !pass;
    if (limit_seconds > 0.0)
        std::printf("%s  %-24s %7.3f s (limit %g s)  %s\n", pass ? "PASS" : "FAIL", name, secs, limit_seconds,
                    r.detail.c_str());
    else
        std::printf("%s  %-24s %7.3f s  %s\n", pass ? "PASS" : "FAIL", name, secs, r.detail.c_str());
    std::fflush(stdout);
}

template <class... Args>
std::string format(const char* fmt, Args... args)
{
    char buf[512];
    std::snprintf(buf, sizeof(buf), fmt, args...);
    return buf;
}

// Random noise-free gamma-variate curves with at least 10 frames inside [t0, t0 + tp].
Outcome kinetics_oracle()
{
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int n_frames = 40;
    int tmax_ok = 0, tmax_argmax_ok = 0, washin_ok = 0, pct_ok = 0, pct_cases = 0;
    double worst_washin = 0.0, worst_pct = 0.0, worst_midpoint = 0.0;
    int longest_failing_run = 0;
    const int n_curves = 1000;
    for (int c = 0; c < n_curves; ++c) {
        PhantomSpec spec;
        spec.grid = Grid3(Index3(1, 1, 1), Eigen::Vector3d::Ones());
        spec.n_frames = n_frames;
        spec.frame_interval = 1.0 + 9.0 * u(rng);
        const double dt = spec.frame_interval;
        KineticParams p;
        std::vector<double> t(n_frames), s(n_frames);
        int onset = 0;
        int wash_in_frames = 0;
        do {
            p.baseline = u(rng) < 0.1 ? 0.0 : 1.0 + 299.0 * u(rng);
            p.amplitude = 5.0 + 795.0 * u(rng);
            p.onset_time = dt * (1.0 + 7.0 * u(rng)); // at least one pre-contrast frame
            p.time_to_peak = dt * (5.0 + 25.0 * u(rng));
            p.shape = 0.5 + 5.5 * u(rng);
            for (int k = 0; k < n_frames; ++k) {
                t[static_cast<std::size_t>(k)] = k * dt;
                s[static_cast<std::size_t>(k)] =
                    oracle::gamma_curve(k * dt, p.baseline, p.amplitude, p.onset_time, p.time_to_peak, p.shape);
            }
            // wash-in runs from the sampled onset to the analytic peak
            onset = oracle::onset(s, t);
            wash_in_frames = 0;
            for (int k = onset; k < n_frames && k * dt <= p.peak_time(); ++k)
                ++wash_in_frames;
        } while (wash_in_frames < 10 || p.peak_time() > (n_frames - 6) * dt);
        spec.background = p;

        const Phantom ph = synth_dce(spec);
        const TimeIntensityCurve curve = extract_curve(ph.series, std::size_t{0});
        const CurveFeatures f = curve_features(curve);

        const int nearest = static_cast<int>(std::lround(p.peak_time() / dt));
        tmax_ok += f.tmax == nearest;
        if (f.tmax != nearest) // distance of the peak from the midpoint between frames
            worst_midpoint = std::max(worst_midpoint, std::abs(p.peak_time() / dt - std::floor(p.peak_time() / dt) - 0.5));
        tmax_argmax_ok += f.tmax == oracle::argmax(s);

        const double peak_value = p.baseline + p.amplitude;
        const double chord = (peak_value - s[static_cast<std::size_t>(onset)]) / (p.peak_time() - t[static_cast<std::size_t>(onset)]);
        const double e_in = std::abs(f.wash_in_slope - chord) / std::abs(chord);
        worst_washin = std::max(worst_washin, e_in);
        washin_ok += e_in <= 0.05;
        if (e_in > 0.05)
            longest_failing_run = std::max(longest_failing_run, wash_in_frames);

        if (p.baseline > 0.0) {
            ++pct_cases;
            const double want = 100.0 * p.amplitude / p.baseline;
            const double e_pct = std::abs(f.percent_enhancement - want) / want;
            worst_pct = std::max(worst_pct, e_pct);
            pct_ok += e_pct <= 0.01;
        }
    }
    Outcome r;
    r.pass = tmax_ok == n_curves && washin_ok == n_curves && pct_ok == pct_cases;
    r.detail = format("tmax=nearest %d/%d (=sampled argmax %d/%d), wash-in<=5%% %d/%d (worst %.3f%%), "
                      "pct<=1%% %d/%d (worst %.3f%%); tmax misses lie within %.4f frame of a midpoint, "
                      "wash-in misses have <= %d onset-to-peak frames",
                      tmax_ok, n_curves, tmax_argmax_ok, n_curves, washin_ok, n_curves, 100 * worst_washin,
                      pct_ok, pct_cases, 100 * worst_pct, worst_midpoint, longest_failing_run);
    return r;
}

Outcome voxelwise_equivalence()
{
    std::mt19937_64 rng(99);
    const Grid3 g(Index3(8, 8, 4), Eigen::Vector3d(1, 1, 3));
    const DceSeries s = testing::random_series(g, 20, rng);
    std::size_t mismatches = 0;
    for (unsigned workers : {1u, 2u, 8u}) {
        const PerfusionMapSet maps = compute_perfusion_maps(s, nullptr, workers);
        for (std::size_t v = 0; v < g.voxel_count(); ++v) {
            const CurveFeatures f = curve_features(extract_curve(s, v));
            mismatches += maps.tmax_map[v] != static_cast<float>(f.tmax);
            mismatches += maps.wash_in_map[v] != static_cast<float>(f.wash_in_slope);
            mismatches += maps.wash_out_map[v] != static_cast<float>(f.wash_out_slope);
            mismatches += maps.percent_enhancement_map[v] != static_cast<float>(f.percent_enhancement);
        }
    }
    return {mismatches == 0, format("%zu mismatching values over 1/2/8 workers", mismatches)};
}

Outcome algebraic_invariants()
{
    std::mt19937_64 rng(31337);
    const int n = 10000;
    int bad = 0;
    std::string first;
    for (int trial = 0; trial < n; ++trial) {
        const auto c = properties::random_case(rng, trial);
        if (auto err = properties::check_curve(c.samples, c.transform, c.exact)) {
            if (bad++ == 0)
                first = *err;
        }
    }
    return {bad == 0, format("%d/%d curves violate%s%s", bad, n, bad ? ": " : "", first.c_str())};
}

std::vector<std::vector<long long>> nested(const ConfusionMatrix& m)
{
    std::vector<std::vector<long long>> out(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            out[static_cast<std::size_t>(i)].push_back(m(i, j));
    return out;
}

Outcome kappa_oracle()
{
    std::mt19937_64 rng(55);
    std::uniform_int_distribution<int> count(0, 60), coin(0, 2);
    int off = 0, asym = 0, diag_bad = 0;
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        ConfusionMatrix m(5, 5);
        for (Eigen::Index i = 0; i < 25; ++i)
            m(i) = coin(rng) ? count(rng) : 0;
        if (m.sum() == 0)
            m(1, 1) = 1;
        const double k = quadratic_weighted_kappa(m);
        const double ref = oracle::weighted_kappa(nested(m));
        worst = std::max(worst, std::abs(k - ref));
        off += std::abs(k - ref) > 1e-12;
        const ConfusionMatrix t = m.transpose();
        asym += quadratic_weighted_kappa(t) != k;

        ConfusionMatrix d = ConfusionMatrix::Zero(5, 5);
        for (Eigen::Index i = 0; i < 5; ++i)
            d(i, i) = m(i, i);
        d(trial % 5, trial % 5) += 1;
        d((trial + 2) % 5, (trial + 2) % 5) += 1; // two populated categories
        diag_bad += quadratic_weighted_kappa(d) != 1.0;
    }
    return {off == 0 && asym == 0 && diag_bad == 0,
            format("oracle mismatches %d (max |diff| %.2e), diagonal != 1: %d, transpose asymmetry %d", off,
                   worst, diag_bad, asym)};
}

Outcome froc_oracle()
{
    const auto f = fixtures::three_patients();
    const FrocCurve curve = froc(f.cases);
    const auto ref = oracle::froc(f.patients, kDefaultHitRatio);
    bool fixture_ok = curve.points.size() == ref.size() && ref.size() == 6;
    for (std::size_t i = 0; fixture_ok && i < ref.size(); ++i)
        fixture_ok = curve.points[i].threshold == ref[i].threshold && curve.points[i].fp_per_patient == ref[i].fp &&
                     curve.points[i].sensitivity == ref[i].sens;
    const double s1 = sensitivity_at_fp(curve, 1.0), s2 = sensitivity_at_fp(curve, 2.0);
    fixture_ok = fixture_ok && s1 == oracle::sens_at(ref, 1.0) && s2 == oracle::sens_at(ref, 2.0) && s1 == 0.75 &&
                 s2 == 0.75;

    std::mt19937_64 rng(404);
    int monotone_bad = 0, oracle_bad = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto rf = fixtures::random_fixture(rng);
        const FrocCurve c = froc(rf.cases);
        for (std::size_t i = 1; i < c.points.size(); ++i)
            if (c.points[i].fp_per_patient < c.points[i - 1].fp_per_patient ||
                c.points[i].sensitivity < c.points[i - 1].sensitivity ||
                !(c.points[i].threshold < c.points[i - 1].threshold)) {
                ++monotone_bad;
                break;
            }
        const auto rr = oracle::froc(rf.patients, kDefaultHitRatio);
        bool same = rr.size() == c.points.size();
        for (std::size_t i = 0; same && i < rr.size(); ++i)
            same = rr[i].fp == c.points[i].fp_per_patient && rr[i].sens == c.points[i].sensitivity;
        oracle_bad += !same;
    }
    return {fixture_ok && monotone_bad == 0 && oracle_bad == 0,
            format("fixture %s (sens@1FP %.4g, sens@2FP %.4g); 1000 random sets: %d non-monotone, %d differ "
                   "from brute force",
                   fixture_ok ? "exact" : "MISMATCH", s1, s2, monotone_bad, oracle_bad)};
}

Outcome preprocessing()
{
    // affine field, 2 mm -> 1 mm
    const Grid3 g(Index3(8, 8, 8), Eigen::Vector3d(2, 2, 2), Eigen::Vector3d(-3.3, 1.7, 2.45));
    auto f = [](const Eigen::Vector3d& p) { return 2.0 * p.x() + 3.0 * p.y() - p.z(); };
    Volume3 v(g);
    for (int k = 0; k < 8; ++k)
        for (int j = 0; j < 8; ++j)
            for (int i = 0; i < 8; ++i)
                v(i, j, k) = static_cast<float>(f(g.physical(Eigen::Vector3d(i, j, k))));
    const Volume3 r = resample_trilinear(v, Eigen::Vector3d(1, 1, 1));
    const Eigen::Vector3d lo = g.physical(Eigen::Vector3d::Zero());
    const Eigen::Vector3d hi = g.physical(Eigen::Vector3d(7, 7, 7));
    double worst = 0.0;
    int interior = 0;
    const Grid3& og = r.grid();
    for (int k = 0; k < og.dims.z(); ++k)
        for (int j = 0; j < og.dims.y(); ++j)
            for (int i = 0; i < og.dims.x(); ++i) {
                const Eigen::Vector3d p = og.physical(Eigen::Vector3d(i, j, k));
                if ((p.array() < lo.array()).any() || (p.array() > hi.array()).any())
                    continue;
                ++interior;
                worst = std::max(worst, std::abs(r(i, j, k) - f(p)));
            }
    const bool affine_ok = interior > 0 && worst <= 1e-5;

    // normalization range and idempotence
    std::mt19937_64 rng(12);
    bool norm_ok = true;
    for (int trial = 0; trial < 100; ++trial) {
        const Volume3 x = testing::random_volume(Grid3(Index3(9, 7, 3), Eigen::Vector3d::Ones()), rng,
                                                 -1000.0f + trial, 50.0f * trial + 1.0f);
        const Volume3 once = normalize_minmax(x).volume;
        const Volume3 twice = normalize_minmax(once).volume;
        norm_ok = norm_ok && once.data().minCoeff() >= 0.0f && once.data().maxCoeff() <= 1.0f &&
                  (once.data() == twice.data()).all();
    }

    // crop rule: offset floor((n - c) / 2), or zero padding of floor((c - n) / 2) before
    bool crop_ok = true;
    for (int n : {192, 96, 90}) {
        const Grid3 cg(Index3(n, n, 2), Eigen::Vector3d::Ones());
        Volume3 src(cg);
        for (std::size_t i = 0; i < src.size(); ++i)
            src[i] = static_cast<float>(i + 1);
        const Volume3 out = center_crop(src, Eigen::Vector2i(96, 96));
        const int offset = n >= 96 ? (n - 96) / 2 : -((96 - n) / 2);
        crop_ok = crop_ok && out.grid().dims == Index3(96, 96, 2);
        for (int k = 0; k < 2; ++k)
            for (int j = 0; j < 96; ++j)
                for (int i = 0; i < 96; ++i) {
                    const int si = i + offset, sj = j + offset;
                    const bool inside = si >= 0 && sj >= 0 && si < n && sj < n;
                    crop_ok = crop_ok && out(i, j, k) == (inside ? src(si, sj, k) : 0.0f);
                }
    }
    return {affine_ok && norm_ok && crop_ok,
            format("affine max err %.2e over %d interior centers; normalize %s; crop 192/96/90 %s", worst,
                   interior, norm_ok ? "ok" : "FAILED", crop_ok ? "ok" : "FAILED")};
}

Outcome end_to_end()
{
    testing::TempDir dir("acceptance");
    const std::string d = dir.path().string();
    auto run = [](std::vector<std::string> args) {
        args.insert(args.begin(), "perfkit");
        return cli::run(args);
    };
    if (run({"phantom", "--perfect-pred", "--out", d}) != 0)
        return {false, "phantom command failed"};
    if (run({"maps", d + "/phantom_dce.nii.gz", "--out", d + "/maps"}) != 0)
        return {false, "maps command failed"};
    if (run({"eval", "--pred", d + "/phantom_prob.nii.gz", "--gt", d + "/phantom_labels.nii.gz", "--out",
             d + "/eval"}) != 0)
        return {false, "eval command failed"};
    const json s = read_json(dir.path() / "eval" / "summary.json");
    const double kappa = s.at("kappa"), sens = s.at("sensi_max"), fp = s.at("max_fp"), dsc = s.at("dice_prostate");
    return {kappa == 1.0 && sens == 1.0 && fp == 0.0 && dsc == 1.0,
            format("kappa %g, sensi_max %g, max_fp %g, dice_prostate %g", kappa, sens, fp, dsc)};
}

} // namespace

int main()
{
    criterion("kinetics-oracle", 5.0, kinetics_oracle);
    criterion("voxelwise-equivalence", 5.0, voxelwise_equivalence);
    criterion("algebraic-invariants", 30.0, algebraic_invariants);
    criterion("kappa-oracle", 0.0, kappa_oracle);
    criterion("froc-oracle", 0.0, froc_oracle);
    criterion("preprocessing", 0.0, preprocessing);
    criterion("end-to-end-phantom", 60.0, end_to_end);
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
