// Acceptance suite: exercises the published case-study numbers end to end
// at n = 1e6 and the analytic property batteries, printing one line per
// criterion. The exit code is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <string>
#include <vector>

#include "scenmix/pipeline.hpp"

using namespace scenmix;
using Clock = std::chrono::steady_clock;

namespace {

struct Checker {
    bool ok = true;
    std::vector<std::string> failures;

    void expect(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            failures.push_back(what);
        }
    }
    void near(double got, double want, double tol, const std::string& what) {
        char buf[256];
        if (!(std::fabs(got - want) <= tol + 1e-12)) {
            std::snprintf(buf, sizeof(buf), "%s: got %.4f want %.4f +/- %.4g",
                          what.c_str(), got, want, tol);
            ok = false;
            failures.push_back(buf);
        }
    }
};

int finish(int idx, const char* name, const Checker& c, double seconds) {
    std::printf("criterion %d: %s  (%s, %.1fs)\n", idx, c.ok ? "PASS" : "FAIL",
                name, seconds);
    for (const auto& f : c.failures) std::printf("    - %s\n", f.c_str());
    std::fflush(stdout);
    return c.ok ? 0 : 1;
}

double round_tenth(double x) { return std::round(x * 10.0) / 10.0; }

// Expected blocks from the published case-study tables.
struct TableRow {
    double et, is, pi, a_map;
};

int criterion1() {
    auto t0 = Clock::now();
    Checker c;
    auto rep = run_synthesis(fixture_config("tb2007-nyfed-p50"));
    const std::vector<TableRow> want{
        {100.0, 62.6, 0.41, 0.27}, {94.3, 57.4, 0.40, 0.02},
        {28.7, 30.9, 0.36, 0.08},  {92.6, 65.4, 0.42, 0.04},
        {84.3, 65.2, 0.42, 0.27},  {99.5, 61.3, 0.41, 0.02},
        {97.1, 64.8, 0.41, 0.03},  {56.4, 67.2, 0.43, 0.27}};
    c.expect(rep.rows.size() == want.size(), "row count");
    for (std::size_t j = 0; j < want.size() && j < rep.rows.size(); ++j) {
        auto tag = [&](const char* col) {
            return std::string(col) + "[" + std::to_string(j) + "]";
        };
        c.near(rep.rows[j].et_percent, want[j].et, 2.0, tag("ET%"));
        c.near(rep.rows[j].is_percent, want[j].is, 2.0, tag("IS%"));
        c.near(rep.rows[j].pairwise_emr, want[j].pi, 0.01, tag("pi*"));
        c.near(rep.rows[j].alpha_map, want[j].a_map, 0.03, tag("alpha*"));
    }
    c.near(rep.synthesis_map.emr, 0.43, 0.01, "synthesis EMR");
    c.near(rep.synthesis_map.ess_percent, 71.2, 2.0, "synthesis ESS");
    double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    c.expect(secs < 120.0, "runtime under two minutes");
    return finish(1, "2007 median-only synthesis vs published table", c, secs);
}

int criterion2() {
    auto t0 = Clock::now();
    Checker c;
    auto rep = run_synthesis(fixture_config("tb2018-nyfed-p50"));
    c.near(rep.rows[0].alpha_map, 0.64, 0.03, "alpha*[0]");
    c.near(rep.rows.back().et_percent, 2.1, 0.5, "backstop ET%");
    c.near(rep.synthesis_map.emr, 0.48, 0.01, "synthesis EMR");
    double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    return finish(2, "2018 synthesis vs published table", c, secs);
}

int criterion3() {
    auto t0 = Clock::now();
    Checker c;
    auto rep = run_synthesis(fixture_config("tb2018-tealbook-p50"));
    c.near(rep.rows[0].alpha_mle, 1.0, 0.02, "alpha_mle[0]");
    for (std::size_t j = 1; j < rep.rows.size(); ++j) {
        c.near(rep.rows[j].alpha_mle, 0.0, 0.02,
               "alpha_mle[" + std::to_string(j) + "]");
    }
    c.near(rep.rows[0].alpha_map, 0.89, 0.03, "alpha*[0]");
    c.near(rep.synthesis_map.emr, 0.49, 0.01, "synthesis EMR");
    double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    return finish(3, "2018 low-dispersion reference synthesis", c, secs);
}

int criterion4() {
    auto t0 = Clock::now();
    Checker c;
    auto rep = run_synthesis(fixture_config("tb2007-nyfed-p3"));
    // Backstop thresholds implied by the rounded tilted scenario triples.
    std::vector<PercentileTriple> rounded;
    for (std::size_t j = 1; j + 1 < rep.rows.size(); ++j) {
        rounded.push_back({round_tenth(rep.rows[j].p15), round_tenth(rep.rows[j].p50),
                           round_tenth(rep.rows[j].p85)});
    }
    auto spec = build_backstop_spec(rounded);
    c.near(spec.thresholds[0], -1.5, 1e-9, "backstop threshold P15");
    c.near(spec.thresholds[1], 1.4, 1e-9, "backstop threshold P50");
    c.near(spec.thresholds[2], 3.1, 1e-9, "backstop threshold P85");
    const std::vector<double> want_map{0.26, 0.01, 0.11, 0.07,
                                       0.26, 0.01, 0.03, 0.26};
    for (std::size_t j = 0; j < want_map.size() && j < rep.rows.size(); ++j) {
        c.near(rep.rows[j].alpha_map, want_map[j], 0.03,
               "alpha*[" + std::to_string(j) + "]");
    }
    c.near(rep.synthesis_map.emr, 0.44, 0.01, "synthesis EMR");
    double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    return finish(4, "2007 three-percentile synthesis", c, secs);
}

int criterion5() {
    auto t0 = Clock::now();
    Checker c;
    struct FitCase {
        const char* name;
        std::vector<PercentilePoint> pts;
        SkewTParams published;
    };
    const std::vector<FitCase> cases{
        {"2007 reference",
         {{0.10, -1.7}, {0.25, 0.2}, {0.50, 1.8}, {0.75, 3.3}, {0.90, 4.8}},
         {2.7, 2.2, -0.5, 3.4}},
        {"2018 reference",
         {{0.10, 0.0}, {0.25, 1.1}, {0.50, 2.1}, {0.75, 3.0}, {0.90, 4.0}},
         {2.5, 1.3, -0.3, 3.0}},
        {"2018 alternate reference",
         {{0.05, 0.7}, {0.15, 1.3}, {0.50, 2.5}, {0.85, 3.6}, {0.95, 4.3}},
         {2.1, 1.1, 0.5, 50.0}},
    };
    for (const auto& fc : cases) {
        auto fit = fit_to_percentiles(fc.pts);
        double published_res = 0.0;
        for (const auto& pt : fc.pts) {
            double d = skew_t_quantile(fc.published, pt.prob) - pt.value;
            published_res += d * d;
            double fitted = skew_t_quantile(fit.params, pt.prob);
            c.near(fitted, pt.value, 0.15,
                   std::string(fc.name) + " quantile at " + std::to_string(pt.prob));
        }
        c.expect(fit.residual <= published_res + 1e-9,
                 std::string(fc.name) + " residual dominates the published fit");
    }
    double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    return finish(5, "skew-t percentile fitting", c, secs);
}

int criterion6() {
    auto t0 = Clock::now();
    Checker c;
    std::vector<double> grid;
    for (double a = 0.0; a <= 3.0 + 1e-9; a += 0.25) grid.push_back(a);
    auto rows = gaussian_shift_study(grid, 1000000, 20071211);
    c.near(rows[0].emr, 0.5, 1e-3, "EMR at zero shift");
    c.near(rows[0].ess_percent, 100.0, 1e-3, "ESS at zero shift");
    for (const auto& r : rows) {
        c.expect(r.emr >= r.bound - 0.005,
                 "EMR >= KL bound at a=" + std::to_string(r.a));
    }
    for (const auto& r : rows) {
        if (std::fabs(r.a - 1.0) < 1e-12) {
            c.expect(r.ess_percent >= 38.0 && r.ess_percent <= 42.0,
                     "ESS in [38,42] at a=1 (got " + std::to_string(r.ess_percent) +
                         "; the importance-sampling identity gives 100/e^1 = 36.8)");
            c.expect(r.emr >= 0.39 && r.emr <= 0.41,
                     "EMR in [0.39,0.41] at a=1 (got " + std::to_string(r.emr) + ")");
        }
    }
    double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    return finish(6, "Gaussian location-shift study", c, secs);
}

int criterion7() {
    auto t0 = Clock::now();
    Checker c;

    // Shared synthetic setup.
    SkewTParams ref{0.0, 1.5, -0.4, 6.0};
    const std::size_t n = 30000;
    auto sample = draw_reference(ref, n, 4242);
    auto ref_log = [&](double y) { return skew_t_log_pdf(ref, y); };
    auto col_for = [&](SkewTParams target) {
        return is_weights(sample, [&](double y) { return skew_t_log_pdf(target, y); },
                          ref_log)
            .weights;
    };
    ScenarioWeightMatrix W;
    W.points = sample.points;
    W.columns.push_back(col_for({0.3, 1.2, 0.0, 12.0}));
    W.columns.push_back(col_for({-0.8, 1.0, 0.3, 8.0}));
    W.columns.push_back(col_for({0.9, 1.4, -0.6, 10.0}));
    W.columns.push_back(col_for({0.0, 2.2, -0.2, 5.0}));

    std::mt19937_64 rng(777);
    auto unif = [&]() { return double(rng() >> 11) * 0x1.0p-53; };
    auto rand_simplex = [&](std::size_t m) {
        std::vector<double> a(m);
        double s = 0.0;
        for (double& v : a) { v = 0.05 + unif(); s += v; }
        for (double& v : a) v /= s;
        return a;
    };

    // EMR cap with equality only at the reference itself.
    {
        ScenarioWeightMatrix U;
        U.points = {0.0, 1.0, 2.0, 3.0, 4.0, 5.0};
        U.columns.push_back(std::vector<double>(6, 1.0 / 6.0));
        c.expect(std::fabs(emr({1.0}, U) - 0.5) < 1e-13, "EMR equals 0.5 on itself");
        for (int k = 0; k < 25; ++k) {
            double v = emr(rand_simplex(4), W);
            c.expect(v > 0.0 && v < 0.5, "EMR in (0, 0.5) off the reference");
        }
    }
    // Symmetry of the pairwise form under swapping the two weight systems.
    {
        auto mix = synthesis_weights({0.4, 0.3, 0.2, 0.1}, W);
        std::vector<double> uniform(n, 1.0 / double(n));
        double ab = emr_pairwise(mix.weights, uniform);
        double ba = emr_pairwise(uniform, mix.weights);
        c.expect(std::fabs(ab - ba) < 1e-14, "EMR symmetric under p-f swap");
    }
    // Tilting residuals and uniqueness.
    {
        SkewTParams base{1.3, 1.1458, 0.0, 50.0};
        auto bs = draw_reference(base, 50000, 11);
        ScoreSpec spec{{-0.2, 1.0, 2.2}, {0.15, 0.5, 0.85}};
        auto sol = solve_tilt(bs, spec);
        for (double r : sol.constraint_residual) {
            c.expect(std::fabs(r) <= 1e-8, "tilt residual <= 1e-8");
        }
        std::vector<double> start{2.0, -1.0, 0.5};
        auto sol2 = solve_tilt(bs, spec, &start);
        for (std::size_t k = 0; k < 3; ++k) {
            c.expect(std::fabs(sol.tau[k] - sol2.tau[k]) <= 1e-6,
                     "tilt unique across starts");
        }
    }
    // Gradient against central differences.
    {
        const double h = 1e-5;
        for (int k = 0; k < 10; ++k) {
            auto a = rand_simplex(4);
            auto g = emr_gradient(a, W);
            for (std::size_t j = 0; j < a.size(); ++j) {
                auto ap = a, am = a;
                ap[j] += h;
                am[j] -= h;
                double fd = (emr(ap, W) - emr(am, W)) / (2.0 * h);
                c.expect(std::fabs(g[j] - fd) <= 1e-6, "gradient matches differences");
            }
        }
    }
    // Hessian negativity on zero-sum directions.
    {
        auto a = rand_simplex(4);
        auto H = emr_hessian(a, W);
        for (int k = 0; k < 100; ++k) {
            std::vector<double> v(4);
            double mean = 0.0;
            for (double& x : v) { x = unif() - 0.5; mean += x; }
            mean /= 4.0;
            for (double& x : v) x -= mean;
            double q = 0.0;
            for (std::size_t i = 0; i < 4; ++i) {
                for (std::size_t j = 0; j < 4; ++j) q += v[i] * H[i][j] * v[j];
            }
            c.expect(q < 0.0, "Hessian quadratic form negative");
        }
    }
    // Duplicated scenarios share their MAP weight.
    {
        auto W2 = W;
        W2.columns.push_back(W2.columns[1]);
        auto res = optimize_map(W2, default_epsilon(5), true);
        c.expect(std::fabs(res.alpha[1] - res.alpha[4]) <= 1e-6,
                 "duplicated scenarios share MAP weight");
    }
    // MAP approaches MLE as epsilon vanishes.
    {
        auto mle = optimize_mle(W, true);
        double prev = 1e300;
        for (double eps : {3e-3, 3e-4, 3e-5}) {
            auto map = optimize_map(W, eps, true);
            double d = 0.0;
            for (std::size_t j = 0; j < 4; ++j) {
                d = std::max(d, std::fabs(map.alpha[j] - mle.alpha[j]));
            }
            c.expect(d <= prev + 1e-9, "MAP distance to MLE decreasing in epsilon");
            prev = d;
        }
        c.expect(prev < 5e-3, "MAP close to MLE at tiny epsilon");
    }
    // Linear bound directions and the small-k error cap.
    {
        std::vector<double> pos, small;
        for (double k = 0.0; k <= 5.0; k += 0.005) pos.push_back(k);
        for (double k = -0.5; k <= 0.5; k += 0.0005) small.push_back(k);
        std::vector<double> neg;
        for (double k = -5.0; k <= 0.0; k += 0.005) neg.push_back(k);
        c.expect(linear_bound_check(pos).lower_bound_holds, "linear lower bound on k>=0");
        c.expect(linear_bound_check(neg).upper_bound_holds, "linear upper bound on k<=0");
        c.expect(linear_bound_check(small).max_abs_error_small_k < 0.0068,
                 "linear bound error cap on |k|<=0.5");
    }

    double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    c.expect(secs < 300.0, "property suite under five minutes");
    return finish(7, "property batteries", c, secs);
}

} // namespace

int main(int argc, char** argv) {
    std::setvbuf(stdout, nullptr, _IONBF, 0);
    int (*criteria[])() = {criterion1, criterion2, criterion3, criterion4,
                           criterion5, criterion6, criterion7};
    if (argc > 1) {
        int idx = std::atoi(argv[1]);
        if (idx < 1 || idx > 7) {
            std::fprintf(stderr, "usage: %s [criterion 1..7]\n", argv[0]);
            return 64;
        }
        return criteria[idx - 1]();
    }
    int failures = 0;
    for (auto* c : criteria) failures += c();
    std::printf("%d of 7 criteria failed\n", failures);
    return failures;
}
