#pragma once

// Monte Carlo carriers: the reference random sample, importance-sampling
// weights against it, effective-sample-size diagnostics, and weighted
// percentile extraction. All reductions run in fixed chunked order so
// results do not depend on how work is scheduled.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "scenmix/distributions.hpp"
#include "scenmix/rng.hpp"

namespace scenmix {

/// Discrete distribution: support points with normalized probability weights.
struct WeightedSample {
    std::vector<double> points;
    std::vector<double> weights;

    std::size_t size() const { return points.size(); }

    void validate() const {
        if (points.size() != weights.size()) {
            throw std::domain_error("WeightedSample: points/weights length mismatch");
        }
        if (points.empty()) {
            throw std::domain_error("WeightedSample: empty sample");
        }
        double sum = chunked_sum(weights.size(), [&](std::size_t i) { return weights[i]; });
        if (std::fabs(sum - 1.0) > 1e-12) {
            throw std::domain_error("WeightedSample: weights must sum to 1");
        }
        for (double w : weights) {
            if (!(w >= 0.0)) {
                throw std::domain_error("WeightedSample: weights must be nonnegative");
            }
        }
    }
};

/// Uniformly weighted i.i.d. sample from the reference density.
inline WeightedSample draw_reference(const SkewTParams& ref, std::size_t n,
                                     std::uint64_t seed) {
    if (n < 1000) {
        throw std::domain_error("draw_reference: n must be >= 1000");
    }
    WeightedSample s;
    s.points = skew_t_sample(ref, n, seed);
    s.weights.assign(n, 1.0 / static_cast<double>(n));
    return s;
}

/// Normalized importance weights: prior weight times the density ratio
/// target/proposal at each point. Computed in log space with a max shift.
inline WeightedSample is_weights(const WeightedSample& sample,
                                 const std::function<double(double)>& target_logpdf,
                                 const std::function<double(double)>& proposal_logpdf) {
    sample.validate();
    const std::size_t n = sample.size();
    std::vector<double> logw(n);
    double max_ratio = -std::numeric_limits<double>::infinity();
    double max_logw = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        double lt = target_logpdf(sample.points[i]);
        double lp = proposal_logpdf(sample.points[i]);
        if (std::isnan(lt) || std::isnan(lp)) {
            throw std::domain_error("is_weights: log-density is NaN at a sample point");
        }
        double ratio = lt - lp;
        max_ratio = std::max(max_ratio, ratio);
        double prior = sample.weights[i];
        logw[i] = prior > 0.0 ? std::log(prior) + ratio
                              : -std::numeric_limits<double>::infinity();
        max_logw = std::max(max_logw, logw[i]);
    }
    // All ratios underflowing to zero in plain arithmetic signals a gross
    // target/proposal mismatch rather than a usable reweighting.
    if (!(max_ratio > -700.0)) {
        throw std::runtime_error(
            "is_weights: weight degeneracy (target has no mass on the sample)");
    }
    WeightedSample out;
    out.points = sample.points;
    out.weights.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.weights[i] = std::exp(logw[i] - max_logw);
    }
    double total = chunked_sum(n, [&](std::size_t i) { return out.weights[i]; });
    for (double& w : out.weights) w /= total;
    return out;
}

/// Effective sample size as a percentage: 100 / (n * sum of squared
/// normalized weights). 100 for uniform weights, 100/n when one point
/// carries everything.
inline double ess_percent(const WeightedSample& sample) {
    sample.validate();
    const std::size_t n = sample.size();
    double sumsq = chunked_sum(n, [&](std::size_t i) {
        return sample.weights[i] * sample.weights[i];
    });
    return 100.0 / (static_cast<double>(n) * sumsq);
}

/// ESS of a plain weight vector normalized to sum one (helper for weights
/// that are not carried by a WeightedSample).
inline double ess_percent_of_weights(const std::vector<double>& w) {
    const std::size_t n = w.size();
    if (n == 0) throw std::domain_error("ess_percent_of_weights: empty");
    double total = chunked_sum(n, [&](std::size_t i) { return w[i]; });
    double sumsq = chunked_sum(n, [&](std::size_t i) { return w[i] * w[i]; });
    return 100.0 * total * total / (static_cast<double>(n) * sumsq);
}

/// Ordering of sample points, reusable across repeated percentile queries
/// on the same support.
inline std::vector<std::uint32_t> sort_order(const std::vector<double>& points) {
    std::vector<std::uint32_t> idx(points.size());
    std::iota(idx.begin(), idx.end(), 0u);
    std::sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) {
        return points[a] < points[b];
    });
    return idx;
}

/// Left-continuous inverse CDF: smallest point whose cumulative weight
/// reaches q. `order` must be a sort order of sample.points.
inline double weighted_percentile_sorted(const WeightedSample& sample, double q,
                                         const std::vector<std::uint32_t>& order) {
    if (!(q > 0.0 && q < 1.0)) {
        throw std::domain_error("weighted_percentile: q must lie in (0,1)");
    }
    // Tolerance absorbs accumulated rounding when q falls exactly on an
    // atom boundary of a long weight sum.
    double cum = 0.0;
    for (std::uint32_t i : order) {
        cum += sample.weights[i];
        if (cum >= q - 1e-11) return sample.points[i];
    }
    return sample.points[order.back()];
}

inline double weighted_percentile(const WeightedSample& sample, double q) {
    sample.validate();
    return weighted_percentile_sorted(sample, q, sort_order(sample.points));
}

} // namespace scenmix
