// Independent reference computations used only by tests. Nothing here calls
// into the library routines it is used to check.
#ifndef PERFKIT_TESTS_ORACLES_HPP
#define PERFKIT_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <tuple>
#include <vector>

namespace oracle {

// First index of the maximum.
inline int argmax(const std::vector<double>& v)
{
    int best = 0;
    for (int i = 1; i < static_cast<int>(v.size()); ++i)
        if (v[static_cast<std::size_t>(i)] > v[static_cast<std::size_t>(best)])
            best = i;
    return best;
}

inline bool uniform(const std::vector<double>& t)
{
    for (std::size_t k = 2; k < t.size(); ++k)
        if (std::abs((t[k] - t[k - 1]) - (t[1] - t[0])) > 1e-9 * std::abs(t[1] - t[0]))
            return false;
    return true;
}

inline int onset(const std::vector<double>& s, const std::vector<double>& t)
{
    const int n = static_cast<int>(s.size());
    const int m = argmax(s);
    if (m < 2)
        return 0;
    const bool uni = uniform(t);
    int best = -1;
    double best_a = 0.0;
    for (int k = 1; k <= std::min(m, n - 2); ++k) {
        const auto K = static_cast<std::size_t>(k);
        double a;
        if (uni)
            a = s[K + 1] - 2.0 * s[K] + s[K - 1];
        else
            a = 2.0 * ((s[K + 1] - s[K]) / (t[K + 1] - t[K]) - (s[K] - s[K - 1]) / (t[K] - t[K - 1])) /
                (t[K + 1] - t[K - 1]);
        if (best < 0 || a > best_a) {
            best = k;
            best_a = a;
        }
    }
    return best;
}

struct Features {
    int onset = 0;
    int tmax = 0;
    double wash_in = 0.0;
    double wash_out = 0.0;
    double pct = 0.0;
};

inline Features features(const std::vector<double>& s, const std::vector<double>& t)
{
    Features f;
    const std::size_t last = s.size() - 1;
    f.tmax = argmax(s);
    f.onset = onset(s, t);
    const auto m = static_cast<std::size_t>(f.tmax);
    const auto o = static_cast<std::size_t>(f.onset);
    if (m != o)
        f.wash_in = (s[m] - s[o]) / (t[m] - t[o]);
    if (m != last)
        f.wash_out = (s[last] - s[m]) / (t[last] - t[m]);
    double scale = 0.0;
    for (double x : s)
        scale = std::max(scale, std::abs(x));
    const double eps = scale > 0.0 ? 1e-6 * scale : 1e-12;
    if (!(s[0] < eps)) {
        double peak = s[0];
        for (std::size_t k = 0; k <= m; ++k)
            peak = std::max(peak, s[k]);
        f.pct = 100.0 * (peak - s[0]) / s[0];
    }
    return f;
}

// Kappa straight from the proportion-matrix definition.
inline double weighted_kappa(const std::vector<std::vector<long long>>& m)
{
    const std::size_t c = m.size();
    double total = 0.0;
    for (const auto& row : m)
        for (long long x : row)
            total += static_cast<double>(x);
    std::vector<double> rows(c, 0.0), cols(c, 0.0);
    for (std::size_t i = 0; i < c; ++i)
        for (std::size_t j = 0; j < c; ++j) {
            rows[i] += static_cast<double>(m[i][j]) / total;
            cols[j] += static_cast<double>(m[i][j]) / total;
        }
    double num = 0.0, den = 0.0;
    const double norm = static_cast<double>((c - 1) * (c - 1));
    for (std::size_t i = 0; i < c; ++i)
        for (std::size_t j = 0; j < c; ++j) {
            const double d = static_cast<double>(i) - static_cast<double>(j);
            const double w = d * d / norm;
            num += w * static_cast<double>(m[i][j]) / total;
            den += w * rows[i] * cols[j];
        }
    if (den == 0.0)
        return 0.0;
    return 1.0 - num / den;
}

using Voxel = std::tuple<int, int, int>;

struct Lesion {
    std::set<Voxel> voxels;
};

struct Detection {
    std::set<Voxel> voxels;
    double score = 0.0;
};

struct Patient {
    std::vector<Lesion> lesions;
    std::vector<Detection> detections;
};

// Index of the GT lesion hit by a detection, by exhaustive overlap counting.
inline std::optional<std::size_t> hit(const Detection& d, const std::vector<Lesion>& gts, double ratio)
{
    std::optional<std::size_t> best;
    double best_r = -1.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
        std::size_t common = 0;
        for (const auto& v : d.voxels)
            common += gts[g].voxels.count(v);
        const double r = static_cast<double>(common) / static_cast<double>(gts[g].voxels.size());
        if (r >= ratio && r > best_r) {
            best = g;
            best_r = r;
        }
    }
    return best;
}

struct Point {
    double threshold, fp, sens;
};

// Full recomputation at every threshold.
inline std::vector<Point> froc(const std::vector<Patient>& patients, double ratio)
{
    std::set<double, std::greater<>> taus;
    std::size_t n_lesions = 0;
    for (const auto& p : patients) {
        n_lesions += p.lesions.size();
        for (const auto& d : p.detections)
            taus.insert(d.score);
    }
    std::vector<Point> out{{std::numeric_limits<double>::infinity(), 0.0, 0.0}};
    for (double tau : taus) {
        std::size_t fp = 0, found = 0;
        for (const auto& p : patients) {
            std::set<std::size_t> matched;
            for (const auto& d : p.detections) {
                if (d.score < tau)
                    continue;
                if (auto g = hit(d, p.lesions, ratio))
                    matched.insert(*g);
                else
                    ++fp;
            }
            found += matched.size();
        }
        out.push_back({tau, static_cast<double>(fp) / static_cast<double>(patients.size()),
                       static_cast<double>(found) / static_cast<double>(n_lesions)});
    }
    return out;
}

// Reads the curve at a target FP by scanning segments.
inline double sens_at(const std::vector<Point>& pts, double fp)
{
    if (fp >= pts.back().fp)
        return pts.back().sens;
    double result = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (pts[i].fp == fp)
            result = pts[i].sens; // last point at this FP
        if (pts[i].fp < fp && i + 1 < pts.size() && pts[i + 1].fp > fp)
            return pts[i].sens +
                   (fp - pts[i].fp) / (pts[i + 1].fp - pts[i].fp) * (pts[i + 1].sens - pts[i].sens);
    }
    return result;
}

// 26-connected components by union-find over all neighbor pairs.
inline std::vector<std::vector<std::size_t>> components(int nx, int ny, int nz,
                                                        const std::vector<bool>& fg)
{
    const std::size_t n = fg.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x)
            x = parent[x] = parent[parent[x]];
        return x;
    };
    auto idx = [&](int i, int j, int k) {
        return static_cast<std::size_t>(i + nx * (j + ny * k));
    };
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                if (!fg[idx(i, j, k)])
                    continue;
                for (int dk = -1; dk <= 1; ++dk)
                    for (int dj = -1; dj <= 1; ++dj)
                        for (int di = -1; di <= 1; ++di) {
                            const int a = i + di, b = j + dj, c = k + dk;
                            if (a < 0 || b < 0 || c < 0 || a >= nx || b >= ny || c >= nz)
                                continue;
                            if (fg[idx(a, b, c)])
                                parent[find(idx(a, b, c))] = find(idx(i, j, k));
                        }
            }
    std::map<std::size_t, std::vector<std::size_t>> groups;
    for (std::size_t v = 0; v < n; ++v)
        if (fg[v])
            groups[find(v)].push_back(v);
    std::vector<std::vector<std::size_t>> out;
    for (auto& [root, members] : groups)
        out.push_back(members);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return out;
}

// Closed-form gamma-variate, written out independently of the phantom module.
inline double gamma_curve(double t, double base, double amp, double t0, double tp, double alpha)
{
    if (t < t0)
        return base;
    const double x = (t - t0) / tp;
    return base + amp * std::exp(alpha * std::log(x) + alpha * (1.0 - x));
}

} // namespace oracle

#endif // PERFKIT_TESTS_ORACLES_HPP
