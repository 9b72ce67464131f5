#pragma once

// Diagnostics relating EMR to Kullback-Leibler divergence: Monte Carlo KL
// estimates for a mixture against the reference, the 1/(1+e^kappa) lower
// bound, the first-order linear bound check, and the Gaussian location-shift
// study that maps EMR and ESS against KL on a grid of shifts.

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "scenmix/synthesis.hpp"

namespace scenmix {

struct KlEstimates {
    double kl_pf = 0.0;   // divergence of the mixture from the reference
    double kl_fp = 0.0;   // divergence of the reference from the mixture
    double kappa = 0.0;   // min of the two
};

/// Monte Carlo KL estimates over the shared reference sample. A mixture
/// weight of zero at a positive-reference point makes kl_pf infinite (the
/// EMR stays finite regardless).
inline KlEstimates kl_estimates(const ScenarioWeightMatrix& W,
                                const std::vector<double>& alpha) {
    validate_simplex(alpha);
    if (alpha.size() != W.component_count()) {
        throw std::domain_error("kl_estimates: alpha length mismatch");
    }
    auto wf = detail::scaled_mixture(alpha, W);  // density ratio f/p per point
    const std::size_t n = wf.size();
    bool zero_support = false;
    for (double r : wf) {
        if (r <= 0.0) { zero_support = true; break; }
    }
    KlEstimates out;
    if (zero_support) {
        out.kl_pf = std::numeric_limits<double>::infinity();
    } else {
        out.kl_pf = chunked_sum(n, [&](std::size_t i) { return -std::log(wf[i]); }) /
                    static_cast<double>(n);
    }
    out.kl_fp = chunked_sum(n, [&](std::size_t i) {
        return wf[i] > 0.0 ? wf[i] * std::log(wf[i]) : 0.0;
    }) / static_cast<double>(n);
    out.kappa = std::min(out.kl_pf, out.kl_fp);
    return out;
}

/// Lower bound on EMR implied by the symmetrized KL divergence kappa.
inline double emr_lower_bound(double kappa) {
    if (!(kappa >= 0.0)) {
        throw std::domain_error("emr_lower_bound: kappa must be >= 0");
    }
    return 1.0 / (1.0 + std::exp(kappa));
}

struct LinearBoundReport {
    bool lower_bound_holds = true;   // 1/(1+e^k) >= (2-k)/4 on k >= 0
    bool upper_bound_holds = true;   // 1/(1+e^k) <= (2-k)/4 on k <= 0
    double max_abs_error_small_k = 0.0;  // max |error| over |k| <= 0.5
    std::size_t samples_checked = 0;
};

/// Verifies the first-order approximation (2-k)/4 against 1/(1+e^k)
/// pointwise: a lower bound for positive k, an upper bound for negative k,
/// and within 0.68% absolute error for |k| <= 0.5.
inline LinearBoundReport linear_bound_check(const std::vector<double>& k_samples) {
    LinearBoundReport rep;
    for (double k : k_samples) {
        if (!std::isfinite(k)) continue;
        double exact = 1.0 / (1.0 + std::exp(k));
        double approx = (2.0 - k) / 4.0;
        if (k >= 0.0 && exact < approx - 1e-15) rep.lower_bound_holds = false;
        if (k <= 0.0 && exact > approx + 1e-15) rep.upper_bound_holds = false;
        if (std::fabs(k) <= 0.5) {
            rep.max_abs_error_small_k =
                std::max(rep.max_abs_error_small_k, std::fabs(exact - approx));
        }
        ++rep.samples_checked;
    }
    return rep;
}

struct GaussianShiftRow {
    double a = 0.0;
    double emr = 0.0;
    double ess_percent = 0.0;
    double kl = 0.0;           // a^2/2, both directions coincide
    double bound = 0.0;        // 1/(1+exp(kl))
};

/// Location-shift study: reference N(0,1), target N(a,1) per grid point.
/// EMR is the Monte Carlo sum w_i/(1 + n w_i) over normalized importance
/// weights w_i prop to the density ratio.
inline std::vector<GaussianShiftRow> gaussian_shift_study(
    const std::vector<double>& a_grid, std::size_t n, std::uint64_t seed) {
    if (n < 100000) {
        throw std::domain_error("gaussian_shift_study: n must be >= 1e5");
    }
    std::vector<double> draws(n);
    generate_chunked(n, seed, 0, [&](ChunkedRng& rng, std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) draws[i] = rng.normal();
    });
    std::vector<GaussianShiftRow> rows;
    rows.reserve(a_grid.size());
    const double nd = static_cast<double>(n);
    std::vector<double> w(n);
    for (double a : a_grid) {
        if (!(a >= 0.0)) {
            throw std::domain_error("gaussian_shift_study: shifts must be >= 0");
        }
        // log ratio of N(a,1) to N(0,1) is a*y - a^2/2.
        double shift = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            w[i] = a * draws[i] - 0.5 * a * a;
            shift = std::max(shift, w[i]);
        }
        for (std::size_t i = 0; i < n; ++i) w[i] = std::exp(w[i] - shift);
        double total = chunked_sum(n, [&](std::size_t i) { return w[i]; });
        for (std::size_t i = 0; i < n; ++i) w[i] /= total;
        GaussianShiftRow row;
        row.a = a;
        row.emr = chunked_sum(n, [&](std::size_t i) {
            return w[i] / (1.0 + nd * w[i]);
        });
        double sumsq = chunked_sum(n, [&](std::size_t i) { return w[i] * w[i]; });
        row.ess_percent = 100.0 / (nd * sumsq);
        row.kl = 0.5 * a * a;
        row.bound = emr_lower_bound(row.kl);
        rows.push_back(row);
    }
    return rows;
}

} // namespace scenmix
