#include "penning/fitting.hpp"

#include <cmath>
#include <cstddef>

#include "penning/constants.hpp"
#include "penning/errors.hpp"

namespace penning {

LinearFit fit_linear(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < n; ++i) { sx += x[i]; sy += y[i]; }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    LinearFit f;
    f.slope = (sxx > 0) ? sxy / sxx : 0.0;
    f.intercept = my - f.slope * mx;
    double ss_res = 0, ss_tot = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double pred = f.intercept + f.slope * x[i];
        ss_res += (y[i] - pred) * (y[i] - pred);
        ss_tot += (y[i] - my) * (y[i] - my);
    }
    f.r_squared = (ss_tot > 0) ? 1.0 - ss_res / ss_tot : 1.0;
    return f;
}

namespace {

// Gaussian elimination with partial pivoting; A is p x p row-major.
bool solve_dense(std::vector<double>& a, std::vector<double>& b, std::size_t p) {
    for (std::size_t col = 0; col < p; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < p; ++r)
            if (std::abs(a[r * p + col]) > std::abs(a[piv * p + col])) piv = r;
        if (std::abs(a[piv * p + col]) < 1e-300) return false;
        if (piv != col) {
            for (std::size_t c = 0; c < p; ++c) std::swap(a[col * p + c], a[piv * p + c]);
            std::swap(b[col], b[piv]);
        }
        for (std::size_t r = col + 1; r < p; ++r) {
            const double f = a[r * p + col] / a[col * p + col];
            for (std::size_t c = col; c < p; ++c) a[r * p + c] -= f * a[col * p + c];
            b[r] -= f * b[col];
        }
    }
    for (std::size_t ri = p; ri-- > 0;) {
        double acc = b[ri];
        for (std::size_t c = ri + 1; c < p; ++c) acc -= a[ri * p + c] * b[c];
        b[ri] = acc / a[ri * p + ri];
    }
    return true;
}

double chi2_of(std::span<const double> y, std::span<const double> pred,
               std::span<const double> sigma) {
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double s = sigma.empty() ? 1.0 : sigma[i];
        const double r = (y[i] - pred[i]) / s;
        acc += r * r;
    }
    return acc;
}

} // namespace

LmResult fit_levenberg_marquardt(const FitModel& model,
                                 std::span<const double> y,
                                 std::span<const double> sigma,
                                 std::span<const double> initial,
                                 const LmOptions& opts) {
    const std::size_t n = y.size();
    const std::size_t p = initial.size();
    LmResult res;
    res.params.assign(initial.begin(), initial.end());

    std::vector<double> pred(n), pred_try(n), jac(n * p);
    model(res.params, pred);
    res.chi2 = chi2_of(y, pred, sigma);

    double lambda = 1e-3;
    std::vector<double> trial(p);

    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        res.iterations = iter + 1;
        // Forward-difference Jacobian of the model.
        for (std::size_t j = 0; j < p; ++j) {
            trial = res.params;
            const double h = 1e-7 * std::max(std::abs(trial[j]), 1e-7);
            trial[j] += h;
            model(trial, pred_try);
            for (std::size_t i = 0; i < n; ++i) jac[i * p + j] = (pred_try[i] - pred[i]) / h;
        }
        // Normal equations (J^T W J + lambda diag) step = J^T W r.
        std::vector<double> jtj(p * p, 0.0), jtr(p, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double s = sigma.empty() ? 1.0 : sigma[i];
            const double w = 1.0 / (s * s);
            const double r = y[i] - pred[i];
            for (std::size_t a = 0; a < p; ++a) {
                jtr[a] += w * jac[i * p + a] * r;
                for (std::size_t b = a; b < p; ++b)
                    jtj[a * p + b] += w * jac[i * p + a] * jac[i * p + b];
            }
        }
        for (std::size_t a = 0; a < p; ++a)
            for (std::size_t b = 0; b < a; ++b) jtj[a * p + b] = jtj[b * p + a];

        bool stepped = false;
        for (int attempt = 0; attempt < 12 && !stepped; ++attempt) {
            std::vector<double> lhs = jtj, rhs = jtr;
            for (std::size_t a = 0; a < p; ++a)
                lhs[a * p + a] += lambda * std::max(jtj[a * p + a], 1e-12);
            if (!solve_dense(lhs, rhs, p)) { lambda *= 10.0; continue; }
            for (std::size_t a = 0; a < p; ++a) trial[a] = res.params[a] + rhs[a];
            model(trial, pred_try);
            const double chi2_try = chi2_of(y, pred_try, sigma);
            if (chi2_try < res.chi2) {
                const double rel = (res.chi2 - chi2_try) / std::max(res.chi2, 1e-300);
                res.params = trial;
                pred = pred_try;
                res.chi2 = chi2_try;
                lambda = std::max(lambda * 0.3, 1e-12);
                stepped = true;
                if (rel < opts.tolerance) {
                    res.converged = true;
                    return res;
                }
            } else {
                lambda *= 10.0;
            }
        }
        if (!stepped) {
            // No descent direction left; treat the current point as converged
            // if we made any progress at all.
            res.converged = res.iterations > 1;
            return res;
        }
    }
    res.converged = true;
    return res;
}

void unwrap_phases(std::span<double> phases) {
    for (std::size_t i = 1; i < phases.size(); ++i) {
        double d = phases[i] - phases[i - 1];
        while (d > constants::pi) { phases[i] -= constants::two_pi; d -= constants::two_pi; }
        while (d < -constants::pi) { phases[i] += constants::two_pi; d += constants::two_pi; }
    }
}

} // namespace penning
