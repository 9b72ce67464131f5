#pragma once

// Synthetic backstop scenario: an over-dispersed composite built from the
// tilted scenarios' percentiles. Its median is the median of the scenario
// medians (midpoint for even counts), its P15 the scenario minimum, its P85
// the scenario maximum; the baseline is then tilted to those three targets.

#include <algorithm>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "scenmix/tilting.hpp"

namespace scenmix {

struct PercentileTriple {
    double p15 = 0.0;
    double p50 = 0.0;
    double p85 = 0.0;
};

/// Backstop percentile constraints from the scenarios' (P15, P50, P85)
/// triples: thresholds (min P15, median of P50s, max P85) at targets
/// (0.15, 0.5, 0.85).
inline ScoreSpec build_backstop_spec(const std::vector<PercentileTriple>& triples) {
    if (triples.empty()) {
        throw std::domain_error("build_backstop_spec: need at least one triple");
    }
    std::vector<double> medians;
    double lo = triples.front().p15;
    double hi = triples.front().p85;
    for (const auto& t : triples) {
        if (!(t.p15 < t.p50 && t.p50 < t.p85)) {
            throw std::domain_error("build_backstop_spec: triple must be strictly increasing");
        }
        medians.push_back(t.p50);
        lo = std::min(lo, t.p15);
        hi = std::max(hi, t.p85);
    }
    std::sort(medians.begin(), medians.end());
    std::size_t m = medians.size();
    double med = (m % 2 == 1) ? medians[m / 2]
                              : 0.5 * (medians[m / 2 - 1] + medians[m / 2]);
    if (!(lo < med && med < hi)) {
        throw std::domain_error("build_backstop_spec: degenerate thresholds");
    }
    return ScoreSpec{{lo, med, hi}, {0.15, 0.5, 0.85}};
}

/// Tilts the baseline sample to the backstop constraints. Returns the solve
/// diagnostics together with the tilted sample.
inline std::pair<TiltingSolution, WeightedSample>
backstop_scenario(const WeightedSample& baseline, const ScoreSpec& spec) {
    auto sol = solve_tilt(baseline, spec);
    auto tilted = et_weights(baseline, spec, sol.tau);
    return {std::move(sol), std::move(tilted)};
}

} // namespace scenmix
