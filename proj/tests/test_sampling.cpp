#include <doctest.h>

#include <cmath>

#include "scenmix/sampling.hpp"

using namespace scenmix;

namespace {

double normal_logpdf(double x, double mean) {
    return -0.5 * (x - mean) * (x - mean) - 0.9189385332046727;
}

} // namespace

TEST_CASE("draw_reference: uniform weights, determinism, size guard") {
    SkewTParams ref{2.7, 2.2, -0.5, 3.4};
    auto s = draw_reference(ref, 5000, 11);
    for (double w : s.weights) CHECK(w == 1.0 / 5000.0);
    auto s2 = draw_reference(ref, 5000, 11);
    CHECK(s.points.front() == s2.points.front());
    CHECK(s.points.back() == s2.points.back());
    CHECK_THROWS_AS(draw_reference(ref, 10, 1), std::domain_error);

    // Empirical P10 of the 2007 reference sample sits near the published
    // percentile input.
    auto big = draw_reference(ref, 400000, 2007);
    double p10 = weighted_percentile(big, 0.10);
    CHECK(p10 == doctest::Approx(-1.7).epsilon(0.05));
}

TEST_CASE("is_weights: identity ratio leaves weights unchanged") {
    SkewTParams ref{0.0, 1.0, 0.0, 20.0};
    auto s = draw_reference(ref, 2000, 3);
    auto logf = [&](double y) { return skew_t_log_pdf(ref, y); };
    auto w = is_weights(s, logf, logf);
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(w.weights[i] == doctest::Approx(s.weights[i]).epsilon(1e-12));
    }
}

TEST_CASE("is_weights: shift invariance in both log densities") {
    SkewTParams ref{0.0, 1.0, 0.0, 5.0};
    auto s = draw_reference(ref, 2000, 5);
    auto lt = [](double y) { return normal_logpdf(y, 0.4); };
    auto lp = [](double y) { return normal_logpdf(y, 0.0); };
    auto lt_shift = [&](double y) { return lt(y) + 123.0; };
    auto lp_shift = [&](double y) { return lp(y) + 123.0; };
    auto a = is_weights(s, lt, lp);
    auto b = is_weights(s, lt_shift, lp_shift);
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(a.weights[i] == doctest::Approx(b.weights[i]).epsilon(1e-12));
    }
}

TEST_CASE("is_weights: gross mismatch raises degeneracy error") {
    SkewTParams ref{0.0, 1.0, 0.0, 50.0};
    auto s = draw_reference(ref, 1000, 7);
    auto far_target = [](double y) { return normal_logpdf(y, 1000.0); };
    auto prop = [](double y) { return normal_logpdf(y, 0.0); };
    CHECK_THROWS_AS(is_weights(s, far_target, prop), std::runtime_error);
}

TEST_CASE("ess_percent: boundary cases and the Gaussian closed form") {
    WeightedSample uniform;
    uniform.points = {1, 2, 3, 4, 5};
    uniform.weights.assign(5, 0.2);
    CHECK(ess_percent(uniform) == doctest::Approx(100.0).epsilon(1e-12));

    WeightedSample spike;
    spike.points.resize(1000);
    spike.weights.assign(1000, 0.0);
    for (std::size_t i = 0; i < 1000; ++i) spike.points[i] = double(i);
    spike.weights[17] = 1.0;
    CHECK(ess_percent(spike) == doctest::Approx(0.1).epsilon(1e-12));

    // Closed-form oracle: weights prop to phi(y-a)/phi(y) on N(0,1) draws
    // have asymptotic ESS = 100 exp(-a^2).
    const double a = 1.0;
    const std::size_t n = 400000;
    WeightedSample s;
    s.points.resize(n);
    s.weights.assign(n, 1.0 / double(n));
    generate_chunked(n, 99, 0, [&](ChunkedRng& rng, std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) s.points[i] = rng.normal();
    });
    auto w = is_weights(
        s, [&](double y) { return normal_logpdf(y, a); },
        [&](double y) { return normal_logpdf(y, 0.0); });
    double oracle = 100.0 * std::exp(-a * a);
    CHECK(ess_percent(w) == doctest::Approx(oracle).epsilon(0.014));
}

TEST_CASE("weighted_percentile: uniform grid, boundaries, monotonicity") {
    WeightedSample s;
    s.points = {5, 3, 1, 4, 2};
    s.weights.assign(5, 0.2);
    CHECK(weighted_percentile(s, 0.5) == 3.0);
    CHECK(weighted_percentile(s, 0.1999999) == 1.0);
    CHECK(weighted_percentile(s, 0.01) == 1.0);
    CHECK(weighted_percentile(s, 0.99) == 5.0);
    CHECK_THROWS_AS(weighted_percentile(s, 0.0), std::domain_error);
    CHECK_THROWS_AS(weighted_percentile(s, 1.0), std::domain_error);

    double prev = -1e300;
    for (double q = 0.05; q < 1.0; q += 0.05) {
        double v = weighted_percentile(s, q);
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("weighted_percentile matches order statistics under uniform weights") {
    SkewTParams ref{1.0, 2.0, 0.7, 9.0};
    auto s = draw_reference(ref, 4000, 123);
    auto sorted = s.points;
    std::sort(sorted.begin(), sorted.end());
    for (double q : {0.1, 0.25, 0.5, 0.75, 0.9}) {
        std::size_t k = static_cast<std::size_t>(std::ceil(q * 4000.0)) - 1;
        CHECK(weighted_percentile(s, q) == sorted[k]);
    }
}

TEST_CASE("ess_percent equals 100 only for uniform weights") {
    WeightedSample s;
    s.points = {1, 2, 3, 4};
    s.weights = {0.2500001, 0.2499999, 0.25, 0.25};
    CHECK(ess_percent(s) < 100.0);
    s.weights = {0.25, 0.25, 0.25, 0.25};
    CHECK(ess_percent(s) == doctest::Approx(100.0).epsilon(1e-13));
}
