#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "scenmix/distributions.hpp"

using namespace scenmix;

namespace {

// Case-study parameter sets used across the suite.
const SkewTParams ref2007{2.7, 2.2, -0.5, 3.4};
const SkewTParams base2007{1.3, 1.1, 0.0, 50.0};
const SkewTParams ref2018{2.5, 1.3, -0.3, 3.0};

double integrate_pdf(const SkewTParams& p, double lo, double hi) {
    return integrate([&](double y) { return skew_t_pdf(p, y); }, lo, hi, 1e-10, 48, 5);
}

} // namespace

TEST_CASE("pdf: Cauchy center, normalization, symmetry at zero slant") {
    CHECK(skew_t_pdf({0.0, 1.0, 0.0, 1.0}, 0.0) ==
          doctest::Approx(1.0 / pi_const).epsilon(1e-12));

    // Quadrature oracle: density integrates to one. Tails handled by the
    // 1/y substitution beyond the finite window.
    double core = integrate_pdf(ref2007, 2.7 - 60 * 2.2, 2.7 + 60 * 2.2);
    auto tail = [&](double sign) {
        return integrate([&](double u) {
            if (u <= 0.0) return 0.0;
            double y = 2.7 + sign / u;
            return skew_t_pdf(ref2007, y) / (u * u);
        }, 0.0, 1.0 / (60 * 2.2), 1e-12);
    };
    double total = core + tail(-1.0) + tail(1.0);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-6));

    SkewTParams sym{0.7, 1.9, 0.0, 6.0};
    for (double d : {0.1, 0.9, 2.4, 7.7}) {
        CHECK(skew_t_pdf(sym, 0.7 + d) ==
              doctest::Approx(skew_t_pdf(sym, 0.7 - d)).epsilon(1e-13));
    }

    CHECK_THROWS_AS(skew_t_pdf(ref2007, std::nan("")), std::domain_error);
    CHECK_THROWS_AS(skew_t_pdf({0, -1, 0, 3}, 0.0), std::domain_error);
}

TEST_CASE("cdf: anchor, round trip, tail limit") {
    CHECK(skew_t_cdf(base2007, 1.3) == doctest::Approx(0.5).epsilon(1e-12));

    for (double q = 0.05; q < 0.99; q += 0.1) {
        double y = skew_t_quantile(ref2007, q);
        CHECK(skew_t_cdf(ref2007, y) == doctest::Approx(q).epsilon(1e-8));
    }

    double eps_tail = 1.0 - skew_t_cdf({0.0, 1.0, -0.5, 3.4}, 1e6);
    CHECK(eps_tail >= 0.0);
    CHECK(eps_tail < 1e-9);

    // Monotone, with correct limits.
    double prev = -1.0;
    for (double y = -30.0; y <= 30.0; y += 1.5) {
        double c = skew_t_cdf(ref2007, y);
        CHECK(c >= prev);
        prev = c;
    }
    CHECK(skew_t_cdf(ref2007, -1e7) < 1e-9);
}

TEST_CASE("quantile: case-study medians and symmetric special case") {
    // Table medians for the fitted reference parameter sets.
    CHECK(skew_t_quantile(ref2007, 0.5) == doctest::Approx(1.8).epsilon(0.06));
    CHECK(std::fabs(skew_t_quantile(ref2018, 0.10) - 0.0) < 0.15);
    CHECK(skew_t_quantile({4.2, 1.7, 0.0, 9.0}, 0.5) ==
          doctest::Approx(4.2).epsilon(1e-10));
    CHECK_THROWS_AS(skew_t_quantile(ref2007, 0.0), std::domain_error);
    CHECK_THROWS_AS(skew_t_quantile(ref2007, 1.0), std::domain_error);

    // Strictly increasing in q.
    double prev = -1e300;
    for (double q = 0.02; q < 1.0; q += 0.07) {
        double y = skew_t_quantile(ref2007, q);
        CHECK(y > prev);
        prev = y;
    }
}

TEST_CASE("slant=0 reduces to location-scale Student-t on a grid") {
    const double lc = 0.4, sc = 2.3, dof = 5.5;
    SkewTParams p{lc, sc, 0.0, dof};
    for (double z : {-6.0, -2.5, -0.8, 0.0, 0.3, 1.9, 4.4}) {
        double y = lc + sc * z;
        CHECK(skew_t_pdf(p, y) ==
              doctest::Approx(student_t_pdf(z, dof) / sc).epsilon(1e-11));
        CHECK(skew_t_cdf(p, y) ==
              doctest::Approx(student_t_cdf(z, dof)).epsilon(1e-10));
    }
    for (double q : {0.03, 0.2, 0.5, 0.77, 0.99}) {
        CHECK(skew_t_quantile(p, q) ==
              doctest::Approx(lc + sc * student_t_quantile(q, dof)).epsilon(1e-9));
    }
}

TEST_CASE("pdf mass within +/- 50 scale units is nearly one for moderate dof") {
    for (double dof : {3.0, 3.4, 5.0, 50.0}) {
        SkewTParams p{1.0, 2.0, -0.7, dof};
        double mass = integrate_pdf(p, 1.0 - 50 * 2.0, 1.0 + 50 * 2.0);
        CHECK(mass <= 1.0 + 1e-9);
        CHECK(mass >= 1.0 - 1e-4);
    }
}

TEST_CASE("sample: determinism, empirical quantiles, binomial band") {
    SkewTParams p = ref2018;
    auto a = skew_t_sample(p, 5000, 77);
    auto b = skew_t_sample(p, 5000, 77);
    CHECK(a == b);
    auto c = skew_t_sample(p, 5000, 78);
    CHECK(a != c);
    CHECK_THROWS_AS(skew_t_sample(p, 0, 1), std::domain_error);

    // Empirical median of 1e6 draws matches the model median. The fitted
    // 2018 reference was built to put its median at the published 2.1.
    auto big = skew_t_sample(p, 1000000, 20181219);
    std::nth_element(big.begin(), big.begin() + big.size() / 2, big.end());
    double med = big[big.size() / 2];
    CHECK(med == doctest::Approx(skew_t_quantile(p, 0.5)).epsilon(0.01));
    CHECK(std::fabs(med - 2.1) < 0.1);

    // Binomial oracle: fraction below the 0.25 quantile within 3 sigma.
    double q25 = skew_t_quantile(p, 0.25);
    std::size_t n = 100000;
    auto draws = skew_t_sample(p, n, 4242);
    double frac = 0.0;
    for (double y : draws) frac += (y <= q25) ? 1.0 : 0.0;
    frac /= static_cast<double>(n);
    double sigma = std::sqrt(0.25 * 0.75 / static_cast<double>(n));
    CHECK(std::fabs(frac - 0.25) < 3.0 * sigma);
}

TEST_CASE("fit: recovers a symmetric generator from its own quantiles") {
    SkewTParams gen{1.1, 0.9, 0.0, 7.0};
    std::vector<PercentilePoint> pts;
    for (double q : {0.1, 0.25, 0.5, 0.75, 0.9}) {
        pts.push_back({q, skew_t_quantile(gen, q)});
    }
    auto fit = fit_to_percentiles(pts);
    CHECK(fit.converged);
    for (const auto& pt : pts) {
        CHECK(skew_t_quantile(fit.params, pt.prob) ==
              doctest::Approx(pt.value).epsilon(1e-4));
    }
    CHECK(std::fabs(fit.params.slant) < 0.05);
}

TEST_CASE("fit: NY Fed 2007 reference percentiles") {
    std::vector<PercentilePoint> pts{
        {0.10, -1.7}, {0.25, 0.2}, {0.50, 1.8}, {0.75, 3.3}, {0.90, 4.8}};
    auto fit = fit_to_percentiles(pts);
    // Residual no worse than at the published parameter values.
    double published = 0.0;
    for (const auto& pt : pts) {
        double d = skew_t_quantile(ref2007, pt.prob) - pt.value;
        published += d * d;
    }
    CHECK(fit.residual <= published + 1e-9);
    for (const auto& pt : pts) {
        CHECK(std::fabs(skew_t_quantile(fit.params, pt.prob) - pt.value) < 0.15);
    }
}

TEST_CASE("fit: 2007 baseline construction with fixed dof") {
    std::vector<PercentilePoint> pts{{0.15, 0.1}, {0.50, 1.3}, {0.85, 2.5}};
    auto fit = fit_to_percentiles(pts, 50.0);
    CHECK(fit.params.dof == doctest::Approx(50.0));
    CHECK(fit.params.location == doctest::Approx(1.3).epsilon(0.02));
    CHECK(fit.params.scale == doctest::Approx(1.1).epsilon(0.1));
    CHECK(std::fabs(fit.params.slant) <= 0.1);
    CHECK(fit.residual < 1e-10);
}

TEST_CASE("fit: local optimality spot check") {
    std::vector<PercentilePoint> pts{
        {0.10, -1.7}, {0.25, 0.2}, {0.50, 1.8}, {0.75, 3.3}, {0.90, 4.8}};
    auto fit = fit_to_percentiles(pts);
    auto objective = [&](const SkewTParams& p) {
        double ss = 0.0;
        for (const auto& pt : pts) {
            double d = skew_t_quantile(p, pt.prob) - pt.value;
            ss += d * d;
        }
        return ss;
    };
    double at_fit = objective(fit.params);
    std::mt19937_64 rng(99);
    auto u = [&](double lo, double hi) {
        return lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53;
    };
    for (int k = 0; k < 100; ++k) {
        SkewTParams p = fit.params;
        p.location += u(-0.05, 0.05);
        p.scale *= std::exp(u(-0.05, 0.05));
        p.slant += u(-0.05, 0.05);
        p.dof = std::min(200.0, std::max(0.9, p.dof * std::exp(u(-0.05, 0.05))));
        CHECK(objective(p) >= at_fit - 1e-10);
    }
}

TEST_CASE("fit: input validation") {
    std::vector<PercentilePoint> three{{0.15, 0.1}, {0.50, 1.3}, {0.85, 2.5}};
    CHECK_THROWS_AS(fit_to_percentiles(three), std::domain_error); // needs 4 when dof free
    std::vector<PercentilePoint> bad{{0.5, 1.0}, {0.2, 2.0}, {0.8, 3.0}};
    CHECK_THROWS_AS(fit_to_percentiles(bad, 50.0), std::domain_error);
    std::vector<PercentilePoint> dec{{0.2, 1.0}, {0.5, 0.5}, {0.8, 3.0}};
    CHECK_THROWS_AS(fit_to_percentiles(dec, 50.0), std::domain_error);
}
