#include "fsgen/scaling.hpp"

#include "fsgen/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace fsgen {

namespace {

constexpr double kLnAlphaLo = -4.605170185988091; // ln 0.01
constexpr double kLnAlphaHi = 1.3862943611198906; // ln 4
constexpr double kLnAlphaTol = 1e-6;
constexpr int kScanPoints = 256;

struct LinearSolution {
    double gamma = 0.0;
    double beta = 0.0;
    double ssr = 0.0;
};

// Closed-form least squares of cof on [R^(-alpha), 1].
LinearSolution solve_linear(std::span<const CofPoint> pts, double alpha) {
    double sxx = 0, sx = 0, sxy = 0, sy = 0;
    const double n = static_cast<double>(pts.size());
    for (const auto& p : pts) {
        const double x = std::pow(p.r, -alpha);
        sxx += x * x;
        sx += x;
        sxy += x * p.cof;
        sy += p.cof;
    }
    const double det = sxx * n - sx * sx;
    LinearSolution sol;
    if (std::abs(det) < 1e-14) {
        // x column is (numerically) constant; fold everything into beta.
        sol.gamma = 0.0;
        sol.beta = sy / n;
    } else {
        sol.gamma = (sxy * n - sx * sy) / det;
        sol.beta = (sxx * sy - sx * sxy) / det;
    }
    for (const auto& p : pts) {
        const double e = sol.gamma * std::pow(p.r, -alpha) + sol.beta - p.cof;
        sol.ssr += e * e;
    }
    return sol;
}

} // namespace

ScalingFit fit_scaling_law(std::span<const CofPoint> points) {
    std::set<double> distinct;
    for (const auto& p : points) {
        if (!(p.r > 0)) throw InvalidRatio("scale ratio must be positive");
        distinct.insert(p.r);
    }
    if (points.size() < 3 || distinct.size() < 3)
        throw Underdetermined("scaling fit needs at least 3 points with 3 distinct R values");

    ScalingFit fit;
    fit.points = points.size();

    const double first = points.front().cof;
    bool constant = std::all_of(points.begin(), points.end(),
                                [&](const CofPoint& p) { return p.cof == first; });
    if (constant) {
        fit.degenerate = true;
        fit.gamma = 0.0;
        fit.alpha = 1.0;
        fit.beta = first;
        fit.rmse = 0.0;
        return fit;
    }

    // Coarse scan over ln(alpha).
    double best_ln = kLnAlphaLo;
    double best_ssr = std::numeric_limits<double>::infinity();
    for (int i = 0; i < kScanPoints; ++i) {
        const double ln_a = kLnAlphaLo + (kLnAlphaHi - kLnAlphaLo) * i / (kScanPoints - 1);
        const double ssr = solve_linear(points, std::exp(ln_a)).ssr;
        if (ssr < best_ssr) {
            best_ssr = ssr;
            best_ln = ln_a;
        }
    }

    // Golden-section refinement inside the bracket around the best sample.
    const double step = (kLnAlphaHi - kLnAlphaLo) / (kScanPoints - 1);
    double lo = std::max(kLnAlphaLo, best_ln - step);
    double hi = std::min(kLnAlphaHi, best_ln + step);
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - gr * (hi - lo);
    double x2 = lo + gr * (hi - lo);
    double f1 = solve_linear(points, std::exp(x1)).ssr;
    double f2 = solve_linear(points, std::exp(x2)).ssr;
    while (hi - lo > kLnAlphaTol) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = solve_linear(points, std::exp(x1)).ssr;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = solve_linear(points, std::exp(x2)).ssr;
        }
    }
    const double ln_alpha = (lo + hi) / 2.0;
    fit.alpha = std::exp(ln_alpha);
    const LinearSolution sol = solve_linear(points, fit.alpha);
    fit.gamma = sol.gamma;
    fit.beta = sol.beta;
    fit.rmse = std::sqrt(sol.ssr / static_cast<double>(points.size()));
    return fit;
}

CofPrediction predict_cof(const ScalingFit& fit, double r) {
    if (!(r > 0)) throw InvalidRatio("scale ratio must be positive");
    CofPrediction p;
    p.raw = fit.gamma * std::pow(r, -fit.alpha) + fit.beta;
    p.clamped = std::clamp(p.raw, 0.0, 1.0);
    return p;
}

} // namespace fsgen
