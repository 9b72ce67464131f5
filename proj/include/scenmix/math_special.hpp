#pragma once

// Scalar special functions and quadrature used by the distribution layer:
// regularized incomplete beta, Student-t pdf/cdf/quantile, standard normal
// pdf/cdf/quantile, and an adaptive Gauss-Kronrod integrator.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

namespace scenmix {

inline constexpr double pi_const = 3.14159265358979323846;

inline double normal_pdf(double x) {
    return 0.39894228040143267794 * std::exp(-0.5 * x * x);
}

inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x * 0.70710678118654752440);
}

/// Inverse standard normal CDF, Acklam's rational approximation polished
/// with one Halley step against erfc. Accurate to ~1e-15 on (0,1).
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error("normal_quantile: p must lie in (0,1)");
    }
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        double q = p - 0.5;
        double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // Halley polish
    double e = normal_cdf(x) - p;
    double u = e * std::sqrt(2.0 * pi_const) * std::exp(0.5 * x * x);
    x = x - u / (1.0 + 0.5 * x * u);
    return x;
}

namespace detail {

/// Continued fraction for the incomplete beta function (modified Lentz).
inline double beta_cont_frac(double a, double b, double x) {
    const double tiny = 1e-300;
    const double eps = 1e-16;
    double qab = a + b;
    double qap = a + 1.0;
    double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 400; ++m) {
        double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) break;
    }
    return h;
}

} // namespace detail

/// Regularized incomplete beta I_x(a, b) given ln Beta(a, b) and the exact
/// complement cx = 1 - x. Passing the complement explicitly avoids the
/// cancellation that otherwise contaminates x near 1 (e.g. the Student-t CDF
/// close to its median).
inline double incomplete_beta_ln(double a, double b, double x, double cx,
                                 double ln_beta) {
    if (!(a > 0.0 && b > 0.0)) {
        throw std::domain_error("incomplete_beta: a and b must be positive");
    }
    if (x <= 0.0) return 0.0;
    if (cx <= 0.0) return 1.0;
    double front = std::exp(a * std::log(x) + b * std::log(cx) - ln_beta);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * detail::beta_cont_frac(a, b, x) / a;
    }
    return 1.0 - front * detail::beta_cont_frac(b, a, cx) / b;
}

/// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
    double ln_beta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
    return incomplete_beta_ln(a, b, x, 1.0 - x, ln_beta);
}

/// Student-t log density with dof > 0.
inline double student_t_log_pdf(double x, double dof) {
    return std::lgamma(0.5 * (dof + 1.0)) - std::lgamma(0.5 * dof) -
           0.5 * std::log(dof * pi_const) -
           0.5 * (dof + 1.0) * std::log1p(x * x / dof);
}

inline double student_t_pdf(double x, double dof) {
    return std::exp(student_t_log_pdf(x, dof));
}

/// Student-t CDF via the incomplete beta representation. The beta argument
/// and its complement are formed independently so no precision is lost when
/// |x| is small.
inline double student_t_cdf(double x, double dof) {
    if (x == 0.0) return 0.5;
    double xb = dof / (dof + x * x);
    double cxb = x * x / (dof + x * x);
    double ln_beta = std::lgamma(0.5 * dof) + std::lgamma(0.5) -
                     std::lgamma(0.5 * (dof + 1.0));
    double p = 0.5 * incomplete_beta_ln(0.5 * dof, 0.5, xb, cxb, ln_beta);
    return x > 0.0 ? 1.0 - p : p;
}

/// log P(T <= x); switches to the polynomial tail expansion when the CDF
/// underflows (x very negative).
inline double student_t_log_cdf(double x, double dof) {
    double p = student_t_cdf(x, dof);
    if (p > 1e-280) return std::log(p);
    // Leading tail term: P(T <= x) ~ c(dof) * |x|^-dof for x -> -inf.
    double log_c = std::lgamma(0.5 * (dof + 1.0)) - std::lgamma(0.5 * dof) -
                   0.5 * std::log(pi_const) + 0.5 * dof * std::log(dof) -
                   std::log(dof);
    return log_c - dof * std::log(-x);
}

/// Student-t quantile: normal-based initial guess refined by safeguarded
/// Newton iteration on the CDF.
inline double student_t_quantile(double p, double dof) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error("student_t_quantile: p must lie in (0,1)");
    }
    if (p == 0.5) return 0.0;
    double z = normal_quantile(p);
    double g1 = (z * z * z + z) / 4.0;
    double g2 = (5.0 * std::pow(z, 5) + 16.0 * z * z * z + 3.0 * z) / 96.0;
    double x = z + g1 / dof + g2 / (dof * dof);
    if (dof < 3.0) {
        // Series above degrades for tiny dof; fall back to a tail-based seed.
        double tail = p < 0.5 ? p : 1.0 - p;
        double sgn = p < 0.5 ? -1.0 : 1.0;
        double log_c = std::lgamma(0.5 * (dof + 1.0)) - std::lgamma(0.5 * dof) -
                       0.5 * std::log(pi_const) + 0.5 * dof * std::log(dof) -
                       std::log(dof);
        double xt = std::exp((log_c - std::log(tail)) / dof);
        if (xt > 2.0) x = sgn * xt;
    }
    // Bracket then Newton with bisection safeguard.
    double lo = x, hi = x;
    double step = std::fabs(x) + 1.0;
    while (student_t_cdf(lo, dof) > p) { lo -= step; step *= 2.0; }
    step = std::fabs(x) + 1.0;
    while (student_t_cdf(hi, dof) < p) { hi += step; step *= 2.0; }
    for (int it = 0; it < 100; ++it) {
        double f = student_t_cdf(x, dof) - p;
        if (f > 0.0) hi = x; else lo = x;
        double dfdx = student_t_pdf(x, dof);
        double x_new = (dfdx > 0.0) ? x - f / dfdx : 0.5 * (lo + hi);
        if (!(x_new > lo && x_new < hi)) x_new = 0.5 * (lo + hi);
        if (std::fabs(x_new - x) < 1e-14 * (1.0 + std::fabs(x_new))) {
            return x_new;
        }
        x = x_new;
    }
    return x;
}

namespace detail {

// Gauss-Kronrod 7-15 nodes/weights on [-1,1].
inline constexpr double gk_nodes[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.0};
inline constexpr double gk_wk[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728};
inline constexpr double gk_wg[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469};

template <class F>
inline void gk15(const F& f, double a, double b, double& result, double& err) {
    double c = 0.5 * (a + b);
    double h = 0.5 * (b - a);
    double fc = f(c);
    double res_k = gk_wk[7] * fc;
    double res_g = gk_wg[3] * fc;
    for (int i = 0; i < 7; ++i) {
        double x = h * gk_nodes[i];
        double f1 = f(c - x);
        double f2 = f(c + x);
        res_k += gk_wk[i] * (f1 + f2);
        if (i % 2 == 1) res_g += gk_wg[i / 2] * (f1 + f2);
    }
    result = res_k * h;
    err = std::fabs((res_k - res_g) * h);
}

} // namespace detail

/// Adaptive Gauss-Kronrod integration of f over the finite interval [a, b].
/// The error budget is distributed proportionally to segment length, so the
/// accumulated error stays below abs_tol.
template <class F>
inline double integrate(const F& f, double a, double b, double abs_tol = 1e-12,
                        int max_depth = 22, int min_depth = 3) {
    if (a == b) return 0.0;
    const double span = std::fabs(b - a);
    struct Seg { double a, b, val, err; int depth; };
    double v, e;
    detail::gk15(f, a, b, v, e);
    std::vector<Seg> stack{{a, b, v, e, 0}};
    double total = 0.0;
    while (!stack.empty()) {
        Seg s = stack.back();
        stack.pop_back();
        double budget = abs_tol * std::fabs(s.b - s.a) / span;
        if ((s.depth >= min_depth && s.err <= budget) || s.depth >= max_depth) {
            total += s.val;
            continue;
        }
        double m = 0.5 * (s.a + s.b);
        double v1, e1, v2, e2;
        detail::gk15(f, s.a, m, v1, e1);
        detail::gk15(f, m, s.b, v2, e2);
        stack.push_back({s.a, m, v1, e1, s.depth + 1});
        stack.push_back({m, s.b, v2, e2, s.depth + 1});
    }
    return total;
}

} // namespace scenmix
