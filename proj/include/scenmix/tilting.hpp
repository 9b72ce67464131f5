#pragma once

// Entropic tilting of a weighted sample to percentile constraints. Scores
// are threshold indicators s_k(y) = 1{y <= t_k}, so every sample point falls
// into one of q+1 groups between consecutive thresholds and the Newton solve
// runs on group aggregates: the tilted group masses are an exponential
// family in tau, whose moment equations are solved exactly.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "scenmix/sampling.hpp"

namespace scenmix {

/// Percentile constraints as indicator scores with target expectations:
/// E[1{y <= thresholds[k]}] = targets[k].
struct ScoreSpec {
    std::vector<double> thresholds;
    std::vector<double> targets;

    std::size_t size() const { return thresholds.size(); }

    void validate() const {
        if (thresholds.empty() || thresholds.size() != targets.size()) {
            throw std::domain_error("ScoreSpec: need equal-length, nonempty lists");
        }
        for (std::size_t k = 0; k < thresholds.size(); ++k) {
            if (!std::isfinite(thresholds[k])) {
                throw std::domain_error("ScoreSpec: thresholds must be finite");
            }
            if (!(targets[k] > 0.0 && targets[k] < 1.0)) {
                throw std::domain_error("ScoreSpec: targets must lie in (0,1)");
            }
            if (k > 0) {
                if (thresholds[k] <= thresholds[k - 1]) {
                    throw std::domain_error("ScoreSpec: thresholds must be strictly increasing");
                }
                if (targets[k] <= targets[k - 1]) {
                    throw std::domain_error("ScoreSpec: targets must be strictly increasing");
                }
            }
        }
    }
};

/// Solution of one tilt: the tilting vector with convergence and efficiency
/// diagnostics. constraint_residual holds E_tilted[s_k] - target_k.
struct TiltingSolution {
    std::vector<double> tau;
    bool converged = false;
    std::size_t iterations = 0;
    double et_ess_percent = 0.0;
    std::vector<double> constraint_residual;
};

class TiltInfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class TiltConvergenceError : public std::runtime_error {
public:
    TiltConvergenceError(std::string msg, TiltingSolution partial)
        : std::runtime_error(std::move(msg)), partial_(std::move(partial)) {}
    const TiltingSolution& partial() const { return partial_; }

private:
    TiltingSolution partial_;
};

namespace detail {

/// Index of the group a point falls into: number of thresholds below y.
inline std::size_t tilt_group(const std::vector<double>& thresholds, double y) {
    return static_cast<std::size_t>(
        std::lower_bound(thresholds.begin(), thresholds.end(), y) -
        thresholds.begin());
}

/// Per-group exponent: c_g = sum of tau_k over k >= g.
inline std::vector<double> group_exponents(const std::vector<double>& tau) {
    std::vector<double> c(tau.size() + 1, 0.0);
    for (std::size_t g = tau.size(); g-- > 0;) {
        c[g] = c[g + 1] + tau[g];
    }
    return c;
}

/// Solves the small SPD system J x = r in place (Gaussian elimination with
/// partial pivoting; q <= a handful).
inline std::vector<double> solve_dense(std::vector<std::vector<double>> J,
                                       std::vector<double> r) {
    const std::size_t q = r.size();
    for (std::size_t col = 0; col < q; ++col) {
        std::size_t piv = col;
        for (std::size_t i = col + 1; i < q; ++i) {
            if (std::fabs(J[i][col]) > std::fabs(J[piv][col])) piv = i;
        }
        std::swap(J[col], J[piv]);
        std::swap(r[col], r[piv]);
        double d = J[col][col];
        if (std::fabs(d) < 1e-300) {
            throw std::runtime_error("tilting: singular Newton system");
        }
        for (std::size_t i = col + 1; i < q; ++i) {
            double f = J[i][col] / d;
            for (std::size_t j = col; j < q; ++j) J[i][j] -= f * J[col][j];
            r[i] -= f * r[col];
        }
    }
    std::vector<double> x(q, 0.0);
    for (std::size_t i = q; i-- > 0;) {
        double s = r[i];
        for (std::size_t j = i + 1; j < q; ++j) s -= J[i][j] * x[j];
        x[i] = s / J[i][i];
    }
    return x;
}

struct TiltGroups {
    std::vector<double> log_weight;  // log of baseline mass per group
    std::vector<double> count;       // point count per group
    std::size_t n = 0;
};

inline TiltGroups build_groups(const WeightedSample& baseline,
                               const ScoreSpec& spec) {
    const std::size_t q = spec.size();
    std::vector<double> mass(q + 1, 0.0);
    std::vector<double> count(q + 1, 0.0);
    for (std::size_t i = 0; i < baseline.size(); ++i) {
        std::size_t g = tilt_group(spec.thresholds, baseline.points[i]);
        mass[g] += baseline.weights[i];
        count[g] += 1.0;
    }
    TiltGroups out;
    out.n = baseline.size();
    out.count = std::move(count);
    out.log_weight.resize(q + 1);
    for (std::size_t g = 0; g <= q; ++g) {
        out.log_weight[g] = mass[g] > 0.0
                                ? std::log(mass[g])
                                : -std::numeric_limits<double>::infinity();
    }
    return out;
}

/// Cumulative tilted indicator expectations E_tau[s_k] for k = 0..q-1.
inline std::vector<double> tilted_cumulative(const TiltGroups& groups,
                                             const std::vector<double>& c) {
    const std::size_t q = c.size() - 1;
    std::vector<double> lw(q + 1);
    double shift = -std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g <= q; ++g) {
        lw[g] = groups.log_weight[g] + c[g];
        shift = std::max(shift, lw[g]);
    }
    double z = 0.0;
    std::vector<double> mu(q + 1, 0.0);
    for (std::size_t g = 0; g <= q; ++g) {
        mu[g] = std::isfinite(lw[g]) ? std::exp(lw[g] - shift) : 0.0;
        z += mu[g];
    }
    std::vector<double> cum(q, 0.0);
    double acc = 0.0;
    for (std::size_t k = 0; k < q; ++k) {
        acc += mu[k];
        cum[k] = acc / z;
    }
    return cum;
}

} // namespace detail

/// Solves for the tilting vector tau such that the reweighted baseline hits
/// every percentile target. Damped Newton on the exact group moment
/// equations; the solution is unique because the log-partition function is
/// strictly convex. ET efficiency is the ESS of the pure tilt factors
/// u_i = exp(tau's(y_i)) over the solve sample.
inline TiltingSolution solve_tilt(const WeightedSample& baseline,
                                  const ScoreSpec& spec,
                                  const std::vector<double>* tau_start = nullptr) {
    baseline.validate();
    spec.validate();
    const std::size_t q = spec.size();
    const std::size_t n = baseline.size();
    auto groups = detail::build_groups(baseline, spec);

    // Feasibility: every group between thresholds must carry baseline mass,
    // and each target must be achievable with slack 1/n.
    const double slack = 1.0 / static_cast<double>(n);
    for (std::size_t g = 0; g <= q; ++g) {
        if (!std::isfinite(groups.log_weight[g])) {
            throw TiltInfeasibleError(
                "solve_tilt: no baseline mass between thresholds (group " +
                std::to_string(g) + ")");
        }
    }
    for (std::size_t k = 0; k < q; ++k) {
        if (spec.targets[k] < slack || spec.targets[k] > 1.0 - slack) {
            throw TiltInfeasibleError(
                "solve_tilt: target " + std::to_string(spec.targets[k]) +
                " outside achievable range at threshold " +
                std::to_string(spec.thresholds[k]));
        }
    }

    std::vector<double> tau(q, 0.0);
    if (tau_start) {
        if (tau_start->size() != q) {
            throw std::domain_error("solve_tilt: tau_start length must match spec");
        }
        tau = *tau_start;
    }
    auto residual = [&](const std::vector<double>& t) {
        auto cum = detail::tilted_cumulative(groups, detail::group_exponents(t));
        std::vector<double> r(q);
        for (std::size_t k = 0; k < q; ++k) r[k] = cum[k] - spec.targets[k];
        return r;
    };
    auto norm_inf = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m = std::max(m, std::fabs(x));
        return m;
    };

    auto r = residual(tau);
    double rnorm = norm_inf(r);
    std::size_t it = 0;
    const std::size_t max_iter = 200;
    for (; it < max_iter && rnorm > 1e-12; ++it) {
        auto c = detail::group_exponents(tau);
        auto cum = detail::tilted_cumulative(groups, c);
        // Jacobian of E[s] wrt tau: Cov(s_k, s_l) = cum_min(k,l) - cum_k cum_l.
        std::vector<std::vector<double>> J(q, std::vector<double>(q, 0.0));
        for (std::size_t k = 0; k < q; ++k) {
            for (std::size_t l = 0; l < q; ++l) {
                J[k][l] = cum[std::min(k, l)] - cum[k] * cum[l];
            }
        }
        std::vector<double> rhs(q);
        for (std::size_t k = 0; k < q; ++k) rhs[k] = -r[k];
        std::vector<double> step;
        try {
            step = detail::solve_dense(J, rhs);
        } catch (const std::runtime_error&) {
            break;
        }
        double damp = 1.0;
        bool improved = false;
        for (int h = 0; h < 30; ++h) {
            std::vector<double> cand(q);
            for (std::size_t k = 0; k < q; ++k) cand[k] = tau[k] + damp * step[k];
            auto rc = residual(cand);
            double rcn = norm_inf(rc);
            if (rcn < rnorm) {
                tau = std::move(cand);
                r = std::move(rc);
                rnorm = rcn;
                improved = true;
                break;
            }
            damp *= 0.5;
        }
        if (!improved) break;
    }

    TiltingSolution sol;
    sol.tau = tau;
    sol.iterations = it;
    sol.constraint_residual = r;
    sol.converged = rnorm <= 1e-8;

    // ESS of the normalized pure tilt factors over the solve sample.
    auto c = detail::group_exponents(tau);
    double cmax = *std::max_element(c.begin(), c.end());
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t g = 0; g <= q; ++g) {
        double e = std::exp(c[g] - cmax);
        s1 += groups.count[g] * e;
        s2 += groups.count[g] * e * e;
    }
    sol.et_ess_percent = 100.0 * s1 * s1 / (static_cast<double>(n) * s2);

    if (!sol.converged) {
        throw TiltConvergenceError(
            "solve_tilt: Newton did not reach the constraint tolerance", sol);
    }
    return sol;
}

/// Applies a tilting vector to a sample: weights become
/// prior * exp(tau's(y)), renormalized. Points are unchanged.
inline WeightedSample et_weights(const WeightedSample& sample,
                                 const ScoreSpec& spec,
                                 const std::vector<double>& tau) {
    sample.validate();
    spec.validate();
    if (tau.size() != spec.size()) {
        throw std::domain_error("et_weights: tau length must match spec");
    }
    auto c = detail::group_exponents(tau);
    double cmax = *std::max_element(c.begin(), c.end());
    WeightedSample out;
    out.points = sample.points;
    out.weights.resize(sample.size());
    for (std::size_t i = 0; i < sample.size(); ++i) {
        std::size_t g = detail::tilt_group(spec.thresholds, sample.points[i]);
        out.weights[i] = sample.weights[i] * std::exp(c[g] - cmax);
    }
    double total = chunked_sum(out.weights.size(),
                               [&](std::size_t i) { return out.weights[i]; });
    if (!(total > 0.0)) {
        throw std::runtime_error("et_weights: tilt annihilated all weight");
    }
    for (double& w : out.weights) w /= total;
    return out;
}

/// Compound ET-IS weights: elementwise product of two weight systems on the
/// same support, renormalized.
inline WeightedSample compound_weights(const WeightedSample& w0,
                                       const WeightedSample& u) {
    w0.validate();
    u.validate();
    if (w0.points.size() != u.points.size() || w0.points != u.points) {
        throw std::domain_error("compound_weights: point lists differ");
    }
    WeightedSample out;
    out.points = w0.points;
    out.weights.resize(w0.size());
    for (std::size_t i = 0; i < w0.size(); ++i) {
        out.weights[i] = w0.weights[i] * u.weights[i];
    }
    double total = chunked_sum(out.weights.size(),
                               [&](std::size_t i) { return out.weights[i]; });
    if (!(total > 0.0)) {
        throw std::runtime_error("compound_weights: product weights vanish");
    }
    for (double& w : out.weights) w /= total;
    return out;
}

} // namespace scenmix
