#pragma once

#include <span>
#include <string>
#include <vector>

namespace fsgen {

// One (scale ratio, collaboration frequency) measurement.
struct CofPoint {
    double r = 1.0;
    double cof = 0.0;
    std::string method;
    std::string task;
    std::uint64_t sequences = 0;
};

// Parameters of cof = gamma * R^(-alpha) + beta.
struct ScalingFit {
    double gamma = 0.0;
    double alpha = 1.0;
    double beta = 0.0;
    double rmse = 0.0;
    std::size_t points = 0;
    // Set when the cof values are constant and alpha is unidentifiable.
    bool degenerate = false;
};

// Least-squares fit. For fixed alpha the model is linear in (gamma, beta)
// and solved in closed form; alpha is located by a coarse scan plus
// golden-section refinement of ln(alpha) over [ln 0.01, ln 4] to 1e-6.
// Needs at least three distinct R values.
ScalingFit fit_scaling_law(std::span<const CofPoint> points);

struct CofPrediction {
    double raw = 0.0;
    double clamped = 0.0; // raw limited to [0, 1]
};

CofPrediction predict_cof(const ScalingFit& fit, double r);

} // namespace fsgen
