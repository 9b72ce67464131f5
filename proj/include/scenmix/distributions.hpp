#pragma once

// Skew-t distribution primitives: density, CDF, quantile, sampling, and
// least-squares fitting of the four parameters to a set of percentiles.
//
// The density is the two-piece form 2/sc * t_nu(z) * T_{nu+1}(slant * z *
// sqrt((nu+1)/(nu+z^2))) with z = (y - lc)/sc. The CDF has no closed form;
// it is anchored at the location, where F(lc) = 1/2 - atan(slant)/pi holds
// exactly, and evaluated by adaptive quadrature of the density. Far tails
// (|z| > 30) integrate under the substitution u = -1/z so heavy-tailed cases
// stay accurate.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "scenmix/math_special.hpp"
#include "scenmix/rng.hpp"

namespace scenmix {

struct SkewTParams {
    double location = 0.0;
    double scale = 1.0;
    double slant = 0.0;
    double dof = 1.0;

    void validate() const {
        if (!std::isfinite(location) || !std::isfinite(scale) ||
            !std::isfinite(slant) || !std::isfinite(dof)) {
            throw std::domain_error("SkewTParams: parameters must be finite");
        }
        if (scale <= 0.0) throw std::domain_error("SkewTParams: scale must be > 0");
        if (dof <= 0.0) throw std::domain_error("SkewTParams: dof must be > 0");
    }
};

/// One (probability, value) pair; lists of these encode percentile targets.
struct PercentilePoint {
    double prob = 0.0;
    double value = 0.0;
};

inline void validate_percentile_points(const std::vector<PercentilePoint>& pts) {
    if (pts.empty()) throw std::domain_error("percentile list is empty");
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (!(pts[i].prob > 0.0 && pts[i].prob < 1.0)) {
            throw std::domain_error("percentile prob must lie in (0,1)");
        }
        if (!std::isfinite(pts[i].value)) {
            throw std::domain_error("percentile value must be finite");
        }
        if (i > 0) {
            if (pts[i].prob <= pts[i - 1].prob) {
                throw std::domain_error("percentile probs must be strictly increasing");
            }
            if (pts[i].value < pts[i - 1].value) {
                throw std::domain_error("percentile values must be nondecreasing");
            }
        }
    }
}

namespace detail {

/// Parameter-cached evaluator; all public skew-t functions route through it.
class SkewTCore {
public:
    explicit SkewTCore(const SkewTParams& p)
        : lc_(p.location), sc_(p.scale), slant_(p.slant), nu_(p.dof) {
        p.validate();
        nu1_ = nu_ + 1.0;
        log_t_norm_ = std::lgamma(0.5 * nu1_) - std::lgamma(0.5 * nu_) -
                      0.5 * std::log(nu_ * pi_const);
        lnB_t1_ = std::lgamma(0.5 * nu1_) + std::lgamma(0.5) -
                  std::lgamma(0.5 * (nu1_ + 1.0));
        log_tail_c1_ = std::lgamma(0.5 * (nu1_ + 1.0)) - std::lgamma(0.5 * nu1_) -
                       0.5 * std::log(pi_const) + 0.5 * nu1_ * std::log(nu1_) -
                       std::log(nu1_);
        cdf0_ = 0.5 - std::atan(slant_) / pi_const;
        sqrt_nu1_ = std::sqrt(nu1_);
    }

    double z_of(double y) const { return (y - lc_) / sc_; }
    double y_of(double z) const { return lc_ + sc_ * z; }
    double scale() const { return sc_; }
    double location() const { return lc_; }
    double slant() const { return slant_; }
    double dof() const { return nu_; }

    /// CDF of Student-t with nu+1 dof, cached beta normalization.
    double t1_cdf(double x) const {
        if (x == 0.0) return 0.5;
        double xb = nu1_ / (nu1_ + x * x);
        double cxb = x * x / (nu1_ + x * x);
        double p = 0.5 * incomplete_beta_ln(0.5 * nu1_, 0.5, xb, cxb, lnB_t1_);
        return x > 0.0 ? 1.0 - p : p;
    }

    double t1_log_cdf(double x) const {
        double p = t1_cdf(x);
        if (p > 1e-280) return std::log(p);
        return log_tail_c1_ - nu1_ * std::log(-x);
    }

    /// Log density in z units (excludes the 1/sc Jacobian).
    double log_pdf_z(double z) const {
        double log_t = log_t_norm_ - 0.5 * nu1_ * std::log1p(z * z / nu_);
        double w = slant_ * z * sqrt_nu1_ / std::sqrt(nu_ + z * z);
        return std::log(2.0) + log_t + t1_log_cdf(w);
    }

    double pdf_z(double z) const { return std::exp(log_pdf_z(z)); }

    double log_pdf(double y) const {
        if (!std::isfinite(y)) throw std::domain_error("skew_t pdf: y must be finite");
        return log_pdf_z(z_of(y)) - std::log(sc_);
    }

    /// CDF in z units. Small tail values are recomputed by direct tail
    /// integration, which keeps them positive, accurate and monotone where
    /// the anchored difference would be dominated by cancellation noise.
    double cdf_z(double z) const {
        const double z_switch = 30.0;
        if (z < -z_switch) return tail_below(z);
        if (z > z_switch) return 1.0 - mirrored().tail_below(-z);
        double inc = integrate([this](double s) { return pdf_z(s); }, 0.0, z, 1e-13);
        double f = std::min(1.0, std::max(0.0, cdf0_ + inc));
        if (f < 1e-10 && z < 0.0) return tail_below(z);
        if (f > 1.0 - 1e-10 && z > 0.0) return 1.0 - mirrored().tail_below(-z);
        return f;
    }

    double cdf(double y) const {
        if (std::isnan(y)) throw std::domain_error("skew_t cdf: y must not be NaN");
        if (y == std::numeric_limits<double>::infinity()) return 1.0;
        if (y == -std::numeric_limits<double>::infinity()) return 0.0;
        return cdf_z(z_of(y));
    }

    /// P(Z <= z) for z < -30 via the u = -1/z substitution.
    double tail_below(double z) const {
        double ub = -1.0 / z;
        auto g = [this](double u) {
            if (u <= 0.0) return 0.0;
            double s = -1.0 / u;
            return pdf_z(s) / (u * u);
        };
        return integrate(g, 0.0, ub, 1e-18);
    }

    /// Core with mirrored slant; P(Z > z) = mirrored P(Z < -z).
    SkewTCore mirrored() const {
        SkewTParams q{-lc_, sc_, -slant_, nu_};
        return SkewTCore(q);
    }

    /// Rolling CDF state: after the first full evaluation, later values are
    /// advanced by integrating only the increment between query points.
    struct CdfTracker {
        const SkewTCore* core = nullptr;
        double z_ref = 0.0;
        double f_ref = 0.0;
        bool primed = false;

        double at(double zt) {
            if (!primed || std::fabs(zt) > 30.0 || std::fabs(z_ref) > 30.0) {
                f_ref = core->cdf_z(zt);
                primed = true;
            } else {
                double span = std::fabs(zt - z_ref);
                int depth = span > 4.0 ? 3 : (span > 0.5 ? 2 : 1);
                f_ref += integrate([this](double s) { return core->pdf_z(s); },
                                   z_ref, zt, 5e-14, 22, depth);
                f_ref = std::min(1.0, std::max(0.0, f_ref));
            }
            z_ref = zt;
            return f_ref;
        }
    };

    /// Inverse CDF in z units. An optional initial guess and a shared
    /// tracker make repeated solves (fitting, several probs on the same
    /// distribution) cheap: cost is proportional to distance traveled.
    double quantile_z(double q, const double* init = nullptr,
                      CdfTracker* shared = nullptr) const {
        if (!(q > 0.0 && q < 1.0)) {
            throw std::domain_error("skew_t quantile: q must lie in (0,1)");
        }
        CdfTracker local{this};
        CdfTracker& track = shared ? *shared : local;
        if (shared && !shared->core) shared->core = this;
        double z_cur = (init && std::isfinite(*init)) ? *init
                                                      : student_t_quantile(q, nu_);
        double f_cur = track.at(z_cur);
        // The distribution itself supplies the outermost bracket
        // (F(-inf)=0 < q < 1=F(inf)); finite bounds tighten as evaluations
        // accumulate, and a damped Newton step works inside them.
        double lo = -std::numeric_limits<double>::infinity();
        double hi = std::numeric_limits<double>::infinity();
        for (int it = 0; it < 200; ++it) {
            if (f_cur > q) { hi = z_cur; } else { lo = z_cur; }
            if (std::fabs(f_cur - q) <= 1e-12) break;
            double dens = pdf_z(z_cur);
            double z_next;
            double max_step = 2.0 * (1.0 + std::fabs(z_cur));
            if (dens > 0.0) {
                double delta = -(f_cur - q) / dens;
                if (std::fabs(delta) > max_step) {
                    delta = delta > 0.0 ? max_step : -max_step;
                }
                z_next = z_cur + delta;
            } else {
                z_next = f_cur > q ? z_cur - max_step : z_cur + max_step;
            }
            if (!(z_next > lo && z_next < hi)) {
                if (std::isfinite(lo) && std::isfinite(hi)) {
                    z_next = 0.5 * (lo + hi);
                } else if (std::isfinite(lo)) {
                    z_next = z_cur + max_step;
                } else {
                    z_next = z_cur - max_step;
                }
            }
            if (std::fabs(z_next - z_cur) < 1e-15 * (1.0 + std::fabs(z_cur))) {
                z_cur = z_next;
                break;
            }
            f_cur = track.at(z_next);
            z_cur = z_next;
        }
        return z_cur;
    }

    double quantile(double q) const { return y_of(quantile_z(q)); }

private:
    double lc_, sc_, slant_, nu_;
    double nu1_ = 0.0;
    double log_t_norm_ = 0.0;
    double lnB_t1_ = 0.0;
    double log_tail_c1_ = 0.0;
    double cdf0_ = 0.0;
    double sqrt_nu1_ = 0.0;
};

} // namespace detail

inline double skew_t_log_pdf(const SkewTParams& p, double y) {
    return detail::SkewTCore(p).log_pdf(y);
}

inline double skew_t_pdf(const SkewTParams& p, double y) {
    return std::exp(detail::SkewTCore(p).log_pdf(y));
}

inline double skew_t_cdf(const SkewTParams& p, double y) {
    return detail::SkewTCore(p).cdf(y);
}

inline double skew_t_quantile(const SkewTParams& p, double q) {
    return detail::SkewTCore(p).quantile(q);
}

/// i.i.d. draws, deterministic for fixed seed and independent of chunking.
/// Uses the scale-mixture representation: a skew-normal variate divided by
/// sqrt(chi^2_nu / nu).
inline std::vector<double> skew_t_sample(const SkewTParams& p, std::size_t n,
                                         std::uint64_t seed) {
    p.validate();
    if (n == 0) throw std::domain_error("skew_t_sample: n must be >= 1");
    double delta = p.slant / std::sqrt(1.0 + p.slant * p.slant);
    double comp = std::sqrt(1.0 - delta * delta);
    std::vector<double> out(n);
    generate_chunked(n, seed, /*stream=*/0,
                     [&](ChunkedRng& rng, std::size_t begin, std::size_t end) {
                         for (std::size_t i = begin; i < end; ++i) {
                             double n0 = rng.normal();
                             double n1 = rng.normal();
                             double zsn = delta * std::fabs(n0) + comp * n1;
                             double w = 2.0 * rng.gamma(0.5 * p.dof) / p.dof;
                             out[i] = p.location + p.scale * zsn / std::sqrt(w);
                         }
                     });
    return out;
}

struct SkewTFit {
    SkewTParams params;
    double residual = 0.0;   // sum of squared quantile errors at the optimum
    bool converged = false;
};

/// Thrown when the percentile fit fails to converge; carries the best
/// iterate seen so far.
class FitError : public std::runtime_error {
public:
    FitError(std::string msg, SkewTFit best)
        : std::runtime_error(std::move(msg)), best_(best) {}
    const SkewTFit& best() const { return best_; }

private:
    SkewTFit best_;
};

namespace detail {

inline double fit_objective(const SkewTParams& p,
                            const std::vector<PercentilePoint>& pts,
                            std::vector<double>* z_hints = nullptr) {
    SkewTCore core(p);
    SkewTCore::CdfTracker track{&core};
    double ss = 0.0;
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const double* init = nullptr;
        if (z_hints && k < z_hints->size() && std::isfinite((*z_hints)[k])) {
            init = &(*z_hints)[k];
        }
        double zq = core.quantile_z(pts[k].prob, init, &track);
        if (z_hints && k < z_hints->size()) (*z_hints)[k] = zq;
        double d = core.y_of(zq) - pts[k].value;
        ss += d * d;
    }
    return ss;
}

/// Nelder-Mead in transformed coordinates. Returns best point found.
template <class F>
inline std::pair<std::vector<double>, double>
nelder_mead(const F& f, std::vector<double> x0, double init_step,
            int max_iter, double f_tol) {
    const std::size_t d = x0.size();
    std::vector<std::vector<double>> pts(d + 1, x0);
    std::vector<double> fv(d + 1);
    for (std::size_t i = 0; i < d; ++i) pts[i + 1][i] += init_step;
    for (std::size_t i = 0; i <= d; ++i) fv[i] = f(pts[i]);
    auto order = [&]() {
        std::vector<std::size_t> idx(d + 1);
        for (std::size_t i = 0; i <= d; ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(),
                  [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        std::vector<std::vector<double>> p2(d + 1);
        std::vector<double> f2(d + 1);
        for (std::size_t i = 0; i <= d; ++i) { p2[i] = pts[idx[i]]; f2[i] = fv[idx[i]]; }
        pts.swap(p2);
        fv.swap(f2);
    };
    order();
    for (int it = 0; it < max_iter; ++it) {
        if (std::fabs(fv[d] - fv[0]) <= f_tol * (1.0 + std::fabs(fv[0]))) break;
        double diam = 0.0;
        for (std::size_t i = 1; i <= d; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                diam = std::max(diam, std::fabs(pts[i][j] - pts[0][j]));
            }
        }
        if (diam < 1e-9) break;
        std::vector<double> centroid(d, 0.0);
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < d; ++j) centroid[j] += pts[i][j];
        }
        for (std::size_t j = 0; j < d; ++j) centroid[j] /= static_cast<double>(d);
        auto blend = [&](double t) {
            std::vector<double> p(d);
            for (std::size_t j = 0; j < d; ++j) {
                p[j] = centroid[j] + t * (pts[d][j] - centroid[j]);
            }
            return p;
        };
        auto xr = blend(-1.0);
        double fr = f(xr);
        if (fr < fv[0]) {
            auto xe = blend(-2.0);
            double fe = f(xe);
            if (fe < fr) { pts[d] = xe; fv[d] = fe; }
            else { pts[d] = xr; fv[d] = fr; }
        } else if (fr < fv[d - 1]) {
            pts[d] = xr;
            fv[d] = fr;
        } else {
            auto xc = blend(fr < fv[d] ? -0.5 : 0.5);
            double fc = f(xc);
            if (fc < std::min(fr, fv[d])) { pts[d] = xc; fv[d] = fc; }
            else {
                for (std::size_t i = 1; i <= d; ++i) {
                    for (std::size_t j = 0; j < d; ++j) {
                        pts[i][j] = pts[0][j] + 0.5 * (pts[i][j] - pts[0][j]);
                    }
                    fv[i] = f(pts[i]);
                }
            }
        }
        order();
    }
    return {pts[0], fv[0]};
}

} // namespace detail

/// Least-squares skew-t fit to percentile targets: minimizes
/// sum_k (quantile(prob_k) - value_k)^2 by derivative-free simplex search
/// over (lc, log sc, slant, log dof), restarted 20 times from jittered
/// moment-based initial values. When fixed_dof is supplied the dof stays at
/// that value. dof is capped at 200 during the search.
inline SkewTFit fit_to_percentiles(const std::vector<PercentilePoint>& pts,
                                   double fixed_dof = 0.0) {
    validate_percentile_points(pts);
    bool dof_free = fixed_dof <= 0.0;
    std::size_t min_pts = dof_free ? 4 : 3;
    if (pts.size() < min_pts) {
        throw std::domain_error("fit_to_percentiles: need at least " +
                                std::to_string(min_pts) + " percentile points");
    }
    if (!dof_free && fixed_dof > 200.0) {
        throw std::domain_error("fit_to_percentiles: fixed_dof must be <= 200");
    }

    const double dof_lo = 0.8, dof_hi = 200.0;

    // Moment-style initial values from the percentile geometry.
    auto interp_value = [&](double prob) {
        if (prob <= pts.front().prob) return pts.front().value;
        if (prob >= pts.back().prob) return pts.back().value;
        for (std::size_t i = 1; i < pts.size(); ++i) {
            if (prob <= pts[i].prob) {
                double t = (prob - pts[i - 1].prob) / (pts[i].prob - pts[i - 1].prob);
                return pts[i - 1].value + t * (pts[i].value - pts[i - 1].value);
            }
        }
        return pts.back().value;
    };
    double med0 = interp_value(0.5);
    double z_lo = normal_quantile(pts.front().prob);
    double z_hi = normal_quantile(pts.back().prob);
    double spread = pts.back().value - pts.front().value;
    double sc0 = spread > 0.0 ? spread / (z_hi - z_lo) : 1.0;
    double up = pts.back().value - med0;
    double dn = med0 - pts.front().value;
    double slant0 = (up + dn) > 0.0 ? 2.0 * (up - dn) / (up + dn) : 0.0;
    double dof0 = dof_free ? 8.0 : std::min(fixed_dof, dof_hi);

    auto unpack = [&](const std::vector<double>& x) {
        SkewTParams p;
        p.location = x[0];
        p.scale = std::exp(x[1]);
        p.slant = x[2];
        p.dof = dof_free ? std::exp(x[3]) : std::min(fixed_dof, dof_hi);
        return p;
    };
    std::vector<double> z_hints;
    auto objective = [&](const std::vector<double>& x) {
        SkewTParams p = unpack(x);
        if (p.scale < 1e-8 || p.scale > 1e8 || std::fabs(p.slant) > 60.0 ||
            p.dof < dof_lo || p.dof > dof_hi) {
            return 1e100;
        }
        return detail::fit_objective(p, pts, &z_hints);
    };

    SkewTFit best;
    best.residual = std::numeric_limits<double>::infinity();
    std::mt19937_64 jitter_rng(0x5eedf17ULL);
    auto jitter = [&](double lo, double hi) {
        double u = static_cast<double>(jitter_rng() >> 11) * 0x1.0p-53;
        return lo + (hi - lo) * u;
    };

    const int restarts = 20;
    for (int r = 0; r < restarts; ++r) {
        z_hints.assign(pts.size(), std::numeric_limits<double>::quiet_NaN());
        std::vector<double> x0{med0, std::log(sc0), slant0};
        if (dof_free) x0.push_back(std::log(dof0));
        if (r > 0) {
            x0[0] += sc0 * jitter(-0.5, 0.5);
            x0[1] += jitter(-0.7, 0.7);
            x0[2] = slant0 + jitter(-2.0, 2.0);
            if (dof_free) x0[3] = jitter(std::log(2.0), std::log(150.0));
        }
        auto [xb, fb] = detail::nelder_mead(objective, x0, 0.25, 400, 1e-14);
        // Local polish from the incumbent.
        auto [xp, fp] = detail::nelder_mead(objective, xb, 0.02, 200, 1e-15);
        if (fp < fb) { xb = xp; fb = fp; }
        if (fb < best.residual) {
            best.residual = fb;
            best.params = unpack(xb);
            best.converged = true;
        }
    }
    if (!best.converged || !std::isfinite(best.residual) || best.residual >= 1e100) {
        best.converged = false;
        throw FitError("fit_to_percentiles: simplex search did not converge", best);
    }
    return best;
}

} // namespace scenmix
