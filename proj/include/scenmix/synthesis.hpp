#pragma once

// Expected misclassification rate of a scenario mixture against the
// reference sample, its exact gradient and Hessian, and simplex-constrained
// maximization: the unpenalized maximizer (MLE weights) and the
// Dirichlet-penalized posterior mode (MAP weights). The optimizer is
// proximal gradient ascent with backtracking; the proximal step solves the
// penalized projection onto the (optionally baseline-modal) simplex exactly
// via nested scalar root finds.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "scenmix/sampling.hpp"

namespace scenmix {

/// Per-scenario normalized weight columns on the shared reference sample.
/// Column 0 is the baseline; the backstop, when present, is the last column.
/// Reference weights are uniform 1/n.
struct ScenarioWeightMatrix {
    std::vector<double> points;                // shared reference support
    std::vector<std::vector<double>> columns;  // each sums to 1

    std::size_t n() const { return points.size(); }
    std::size_t component_count() const { return columns.size(); }

    void validate() const {
        if (columns.empty()) {
            throw std::domain_error("ScenarioWeightMatrix: no columns");
        }
        for (const auto& col : columns) {
            if (col.size() != points.size()) {
                throw std::domain_error("ScenarioWeightMatrix: column length mismatch");
            }
            double sum = chunked_sum(col.size(), [&](std::size_t i) { return col[i]; });
            if (std::fabs(sum - 1.0) > 1e-12) {
                throw std::domain_error("ScenarioWeightMatrix: column must sum to 1");
            }
            for (double w : col) {
                if (!(w >= 0.0)) {
                    throw std::domain_error("ScenarioWeightMatrix: negative weight");
                }
            }
        }
        // Full-rank condition needs at least J+2 distinct support points.
        std::size_t needed = columns.size() + 2;
        std::vector<double> seen;
        for (double y : points) {
            if (std::find(seen.begin(), seen.end(), y) == seen.end()) {
                seen.push_back(y);
                if (seen.size() >= needed) break;
            }
        }
        if (seen.size() < needed) {
            throw std::domain_error(
                "ScenarioWeightMatrix: fewer distinct support points than components + 2");
        }
    }
};

inline void validate_simplex(const std::vector<double>& alpha, double tol = 1e-10) {
    if (alpha.empty()) throw std::domain_error("simplex vector is empty");
    double sum = 0.0;
    for (double a : alpha) {
        if (!(a >= 0.0)) throw std::domain_error("simplex entries must be >= 0");
        sum += a;
    }
    if (std::fabs(sum - 1.0) > tol) {
        throw std::domain_error("simplex entries must sum to 1");
    }
}

/// Recommended Dirichlet regularization strength for J+1 mixture components.
inline double default_epsilon(std::size_t j_plus_1) {
    if (j_plus_1 < 1) throw std::domain_error("default_epsilon: need >= 1 component");
    return 0.005 / static_cast<double>(j_plus_1);
}

/// EMR between two normalized weight systems on a shared sample:
/// sum_i u_i v_i / (u_i + v_i), the Monte Carlo form of the expected
/// posterior probability of misclassifying a draw. Symmetric in (u, v).
inline double emr_pairwise(const std::vector<double>& u, const std::vector<double>& v) {
    if (u.size() != v.size() || u.empty()) {
        throw std::domain_error("emr_pairwise: size mismatch");
    }
    return chunked_sum(u.size(), [&](std::size_t i) {
        double s = u[i] + v[i];
        return s > 0.0 ? u[i] * v[i] / s : 0.0;
    });
}

namespace detail {

/// Mixture weights scaled by n (so the uniform reference weight becomes 1).
inline std::vector<double> scaled_mixture(const std::vector<double>& alpha,
                                          const ScenarioWeightMatrix& W) {
    const std::size_t n = W.n();
    const double nd = static_cast<double>(n);
    std::vector<double> wf(n, 0.0);
    for (std::size_t j = 0; j < alpha.size(); ++j) {
        if (alpha[j] == 0.0) continue;
        const auto& col = W.columns[j];
        const double aj = alpha[j] * nd;
        for (std::size_t i = 0; i < n; ++i) wf[i] += aj * col[i];
    }
    return wf;
}

} // namespace detail

/// EMR of the alpha-mixture against the uniform reference weights.
inline double emr(const std::vector<double>& alpha, const ScenarioWeightMatrix& W) {
    if (alpha.size() != W.component_count()) {
        throw std::domain_error("emr: alpha length mismatch");
    }
    auto wf = detail::scaled_mixture(alpha, W);
    const double nd = static_cast<double>(W.n());
    return chunked_sum(wf.size(), [&](std::size_t i) {
        return wf[i] / (1.0 + wf[i]);
    }) / nd;
}

/// Exact Monte Carlo gradient of emr with respect to alpha. Matches central
/// finite differences of emr (free parameterization).
inline std::vector<double> emr_gradient(const std::vector<double>& alpha,
                                        const ScenarioWeightMatrix& W) {
    auto wf = detail::scaled_mixture(alpha, W);
    const std::size_t n = W.n();
    std::vector<double> denom(n);
    for (std::size_t i = 0; i < n; ++i) {
        double d = 1.0 + wf[i];
        denom[i] = 1.0 / (d * d);
    }
    std::vector<double> g(alpha.size());
    for (std::size_t j = 0; j < alpha.size(); ++j) {
        const auto& col = W.columns[j];
        g[j] = chunked_sum(n, [&](std::size_t i) { return col[i] * denom[i]; });
    }
    return g;
}

/// Exact Monte Carlo Hessian: H_jk = -2/n sum_i Wj Wk / (1+wf)^3 in scaled
/// weights. Negative definite whenever the columns are linearly independent.
inline std::vector<std::vector<double>> emr_hessian(const std::vector<double>& alpha,
                                                    const ScenarioWeightMatrix& W) {
    auto wf = detail::scaled_mixture(alpha, W);
    const std::size_t n = W.n();
    const double nd = static_cast<double>(n);
    std::vector<double> denom(n);
    for (std::size_t i = 0; i < n; ++i) {
        double d = 1.0 + wf[i];
        denom[i] = 1.0 / (d * d * d);
    }
    const std::size_t m = alpha.size();
    std::vector<std::vector<double>> H(m, std::vector<double>(m, 0.0));
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t k = j; k < m; ++k) {
            double v = chunked_sum(n, [&](std::size_t i) {
                return W.columns[j][i] * W.columns[k][i] * denom[i];
            });
            H[j][k] = H[k][j] = -2.0 * nd * v;
        }
    }
    return H;
}

/// Mixture weight column for a given alpha, carried on the reference points.
inline WeightedSample synthesis_weights(const std::vector<double>& alpha,
                                        const ScenarioWeightMatrix& W) {
    validate_simplex(alpha);
    if (alpha.size() != W.component_count()) {
        throw std::domain_error("synthesis_weights: alpha length mismatch");
    }
    WeightedSample out;
    out.points = W.points;
    out.weights.assign(W.n(), 0.0);
    for (std::size_t j = 0; j < alpha.size(); ++j) {
        if (alpha[j] == 0.0) continue;
        const auto& col = W.columns[j];
        for (std::size_t i = 0; i < W.n(); ++i) {
            out.weights[i] += alpha[j] * col[i];
        }
    }
    double total = chunked_sum(out.weights.size(),
                               [&](std::size_t i) { return out.weights[i]; });
    for (double& w : out.weights) w /= total;
    return out;
}

namespace detail {

/// Exact proximal step: minimizes 1/2 ||a - y||^2 - c sum_j log a_j over the
/// simplex, optionally restricted to a_0 >= a_j. c = 0 degenerates to plain
/// Euclidean projection. Nested bisections: the outer multiplier enforces
/// sum = 1, the inner one (modal case) solves the baseline-weight equation.
inline std::vector<double> prox_simplex(const std::vector<double>& y, double c,
                                        bool baseline_modal) {
    const std::size_t m = y.size();
    auto root = [&](double v) {
        // argmin over a>0 of (a-v)^2/2 - c log a; max(v,0) when c=0.
        if (c == 0.0) return std::max(v, 0.0);
        return 0.5 * (v + std::sqrt(v * v + 4.0 * c));
    };

    if (!baseline_modal || m == 1) {
        auto sum_at = [&](double lam) {
            double s = 0.0;
            for (double yj : y) s += root(yj - lam);
            return s;
        };
        double lo = -2.0, hi = 2.0;
        for (double yj : y) {
            lo = std::min(lo, yj - 2.0 - 2.0 * std::sqrt(c + 1.0));
            hi = std::max(hi, yj + 1.0);
        }
        while (sum_at(lo) < 1.0) lo -= 1.0 + (hi - lo);
        while (sum_at(hi) > 1.0) hi += 1.0 + (hi - lo);
        for (int it = 0; it < 200; ++it) {
            double mid = 0.5 * (lo + hi);
            if (sum_at(mid) > 1.0) lo = mid; else hi = mid;
        }
        double lam = 0.5 * (lo + hi);
        std::vector<double> a(m);
        double s = 0.0;
        for (std::size_t j = 0; j < m; ++j) { a[j] = root(y[j] - lam); s += a[j]; }
        for (double& v : a) v /= s;
        return a;
    }

    // Baseline-modal case. For a trial multiplier lam, the baseline weight t
    // solves  t - y_0 - c/t + lam = sum_j max(0, y_j + c/t - lam - t),
    // which is strictly increasing in t.
    auto solve_t = [&](double lam) {
        auto phi = [&](double t) {
            double ct = c > 0.0 ? c / t : 0.0;
            double lhs = t - y[0] - ct + lam;
            double mus = 0.0;
            for (std::size_t j = 1; j < m; ++j) {
                mus += std::max(0.0, y[j] + ct - lam - t);
            }
            return lhs - mus;
        };
        double t_lo = 1e-14, t_hi = 1.0;
        for (double yj : y) t_hi = std::max(t_hi, yj - lam + 2.0 * std::sqrt(c + 1.0) + 2.0);
        while (phi(t_hi) < 0.0) t_hi *= 2.0;
        for (int it = 0; it < 200; ++it) {
            double mid = 0.5 * (t_lo + t_hi);
            if (phi(mid) < 0.0) t_lo = mid; else t_hi = mid;
        }
        return 0.5 * (t_lo + t_hi);
    };
    auto weights_at = [&](double lam) {
        double t = solve_t(lam);
        std::vector<double> a(m);
        a[0] = t;
        for (std::size_t j = 1; j < m; ++j) a[j] = std::min(root(y[j] - lam), t);
        return a;
    };
    auto sum_at = [&](double lam) {
        auto a = weights_at(lam);
        double s = 0.0;
        for (double v : a) s += v;
        return s;
    };
    double lo = -2.0, hi = 2.0;
    for (double yj : y) {
        lo = std::min(lo, yj - 2.0 - 2.0 * std::sqrt(c + 1.0));
        hi = std::max(hi, yj + 1.0);
    }
    while (sum_at(lo) < 1.0) lo -= 1.0 + (hi - lo);
    while (sum_at(hi) > 1.0) hi += 1.0 + (hi - lo);
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (sum_at(mid) > 1.0) lo = mid; else hi = mid;
    }
    auto a = weights_at(0.5 * (lo + hi));
    double s = 0.0;
    for (double v : a) s += v;
    for (double& v : a) v /= s;
    return a;
}

} // namespace detail

struct OptimizeResult {
    std::vector<double> alpha;
    double emr_value = 0.0;
    double kkt_residual = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

class OptimizeError : public std::runtime_error {
public:
    OptimizeError(std::string msg, OptimizeResult best)
        : std::runtime_error(std::move(msg)), best_(std::move(best)) {}
    const OptimizeResult& best() const { return best_; }

private:
    OptimizeResult best_;
};

namespace detail {

/// Proximal gradient ascent on log EMR(alpha) + epsilon sum log alpha_j over
/// the (optionally baseline-modal) simplex, with backtracking line search
/// and monotone restarts. epsilon = 0 gives the MLE weights.
inline OptimizeResult maximize_emr_objective(const ScenarioWeightMatrix& W,
                                             double epsilon, bool baseline_modal,
                                             const std::vector<double>* start = nullptr) {
    W.validate();
    const std::size_t m = W.component_count();
    std::vector<double> alpha(m, 1.0 / static_cast<double>(m));
    if (start) {
        if (start->size() != m) {
            throw std::domain_error("optimize: start length mismatch");
        }
        alpha = prox_simplex(*start, std::max(epsilon, 0.0) * 1e-8, baseline_modal);
    }

    auto smooth_value = [&](const std::vector<double>& a) {
        return std::log(emr(a, W));
    };
    auto barrier_value = [&](const std::vector<double>& a) {
        if (epsilon == 0.0) return 0.0;
        double s = 0.0;
        for (double v : a) {
            if (v <= 0.0) return -std::numeric_limits<double>::infinity();
            s += std::log(v);
        }
        return epsilon * s;
    };

    double step = 1.0;
    double f_cur = smooth_value(alpha);
    double obj_cur = f_cur + barrier_value(alpha);
    std::size_t it = 0;
    const std::size_t max_iter = 20000;
    double kkt = std::numeric_limits<double>::infinity();
    std::vector<double> alpha_prev, g_prev;
    for (; it < max_iter; ++it) {
        double e_val = emr(alpha, W);
        auto g = emr_gradient(alpha, W);
        for (double& v : g) v /= e_val;  // gradient of log emr

        // KKT residual at unit step.
        {
            std::vector<double> probe(m);
            for (std::size_t j = 0; j < m; ++j) probe[j] = alpha[j] + g[j];
            auto pa = prox_simplex(probe, epsilon, baseline_modal);
            double r = 0.0;
            for (std::size_t j = 0; j < m; ++j) r += (pa[j] - alpha[j]) * (pa[j] - alpha[j]);
            kkt = std::sqrt(r);
            if (kkt <= 1e-9) break;
        }

        // Barzilai-Borwein trial step from the last accepted move.
        if (!alpha_prev.empty()) {
            double ss = 0.0, sy = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                double s = alpha[j] - alpha_prev[j];
                double y = g_prev[j] - g[j];  // curvature of the concave part
                ss += s * s;
                sy += s * y;
            }
            if (sy > 1e-18 && ss > 0.0) {
                step = std::min(std::max(ss / sy, 1e-8), 1e8);
            }
        }
        alpha_prev = alpha;
        g_prev = g;

        bool moved = false;
        for (int bt = 0; bt < 60; ++bt) {
            std::vector<double> probe(m);
            for (std::size_t j = 0; j < m; ++j) probe[j] = alpha[j] + step * g[j];
            auto cand = prox_simplex(probe, step * epsilon, baseline_modal);
            double f_new = smooth_value(cand);
            double quad = 0.0, lin = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                double d = cand[j] - alpha[j];
                quad += d * d;
                lin += g[j] * d;
            }
            // Ascent form of the proximal sufficient-increase condition.
            if (f_new >= f_cur + lin - quad / (2.0 * step) - 1e-15) {
                double obj_new = f_new + barrier_value(cand);
                if (obj_new >= obj_cur - 1e-15) {
                    alpha = std::move(cand);
                    f_cur = f_new;
                    obj_cur = obj_new;
                    moved = true;
                    break;
                }
            }
            step *= 0.5;
            if (step < 1e-18) break;
        }
        if (!moved) break;
    }

    OptimizeResult res;
    res.alpha = alpha;
    res.emr_value = emr(alpha, W);
    res.kkt_residual = kkt;
    res.iterations = it;
    res.converged = kkt <= 1e-7;
    if (!res.converged) {
        throw OptimizeError("optimize: stationarity tolerance not reached", res);
    }
    return res;
}

} // namespace detail

/// Maximum likelihood weights: the EMR maximizer over the simplex, possibly
/// subject to the baseline carrying the largest weight. May sit on the
/// boundary (sparse).
inline OptimizeResult optimize_mle(const ScenarioWeightMatrix& W, bool baseline_modal,
                                   const std::vector<double>* start = nullptr) {
    return detail::maximize_emr_objective(W, 0.0, baseline_modal, start);
}

/// Posterior-mode weights under the Dir(1+epsilon) prior: maximizes
/// log EMR + epsilon sum log alpha_j; strictly interior and stable.
inline OptimizeResult optimize_map(const ScenarioWeightMatrix& W, double epsilon,
                                   bool baseline_modal,
                                   const std::vector<double>* start = nullptr) {
    if (!(epsilon > 0.0)) {
        throw std::domain_error("optimize_map: epsilon must be positive");
    }
    return detail::maximize_emr_objective(W, epsilon, baseline_modal, start);
}

} // namespace scenmix
