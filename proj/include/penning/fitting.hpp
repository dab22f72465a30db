#pragma once

#include <functional>
#include <span>
#include <vector>

namespace penning {

struct LinearFit {
    double intercept = 0.0;
    double slope = 0.0;
    double r_squared = 0.0;
};

LinearFit fit_linear(std::span<const double> x, std::span<const double> y);

/// Model callback: given parameters, fill one prediction per sample.
using FitModel = std::function<void(std::span<const double> params, std::span<double> out)>;

struct LmOptions {
    int max_iterations = 200;
    double tolerance = 1e-10; // relative decrease of chi^2 to stop
};

struct LmResult {
    std::vector<double> params;
    double chi2 = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Dense Levenberg-Marquardt with forward-difference Jacobian. Residuals are
/// (y - model)/sigma; pass empty sigmas for unit weights. Small fixed-size
/// problems only (a handful of parameters, <= a few thousand samples).
LmResult fit_levenberg_marquardt(const FitModel& model,
                                 std::span<const double> y,
                                 std::span<const double> sigma,
                                 std::span<const double> initial,
                                 const LmOptions& opts = {});

/// In-place unwrap: removes 2*pi jumps between consecutive samples.
void unwrap_phases(std::span<double> phases);

} // namespace penning
