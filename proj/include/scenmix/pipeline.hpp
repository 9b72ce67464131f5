#pragma once

// End-to-end orchestration: configuration, the four-step synthesis flow
// (reference sample, baseline IS weights, per-scenario tilts re-applied to
// the reference support, mixture-weight optimization), embedded case-study
// fixtures, and report/grid emission.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <future>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "scenmix/backstop.hpp"
#include "scenmix/distributions.hpp"
#include "scenmix/sampling.hpp"
#include "scenmix/synthesis.hpp"
#include "scenmix/theory.hpp"
#include "scenmix/tilting.hpp"

namespace scenmix {

using ordered_json = nlohmann::ordered_json;

struct ScenarioConfig {
    std::string name;
    std::vector<PercentilePoint> constraints;  // one median or three percentiles
};

struct RunConfig {
    std::optional<SkewTParams> reference_params;
    std::vector<PercentilePoint> reference_percentiles;
    std::optional<SkewTParams> baseline_params;
    std::vector<PercentilePoint> baseline_percentiles;
    double baseline_fixed_dof = 50.0;
    std::vector<ScenarioConfig> scenarios;
    bool include_backstop = true;
    bool baseline_modal = true;
    std::size_t n = 1000000;
    std::uint64_t seed = 20071211;
    std::optional<double> epsilon;
    std::string output_dir;

    void validate() const {
        if (!reference_params && reference_percentiles.empty()) {
            throw std::domain_error("RunConfig: reference needs params or percentiles");
        }
        if (!baseline_params && baseline_percentiles.empty()) {
            throw std::domain_error("RunConfig: baseline needs params or percentiles");
        }
        if (reference_params) reference_params->validate();
        if (baseline_params) baseline_params->validate();
        if (!reference_percentiles.empty()) validate_percentile_points(reference_percentiles);
        if (!baseline_percentiles.empty()) validate_percentile_points(baseline_percentiles);
        for (std::size_t i = 0; i < scenarios.size(); ++i) {
            const auto& sc = scenarios[i];
            if (sc.name.empty()) throw std::domain_error("RunConfig: scenario without a name");
            if (sc.constraints.size() != 1 && sc.constraints.size() != 3) {
                throw std::domain_error("RunConfig: scenario '" + sc.name +
                                        "' needs 1 or 3 percentile constraints");
            }
            validate_percentile_points(sc.constraints);
            for (std::size_t j = 0; j < i; ++j) {
                if (scenarios[j].name == sc.name) {
                    throw std::domain_error("RunConfig: duplicate scenario name '" +
                                            sc.name + "'");
                }
            }
        }
        if (n < 1000) throw std::domain_error("RunConfig: n must be >= 1000");
        if (epsilon && !(*epsilon > 0.0)) {
            throw std::domain_error("RunConfig: epsilon must be positive");
        }
    }
};

struct ReportRow {
    std::string name;
    double p15 = 0.0, p50 = 0.0, p85 = 0.0;  // measured on the reference sample
    double et_percent = 0.0;
    double is_percent = 0.0;
    double pairwise_emr = 0.0;
    double alpha_mle = 0.0;
    double alpha_map = 0.0;
};

struct SynthesisRow {
    double p15 = 0.0, p50 = 0.0, p85 = 0.0;
    double ess_percent = 0.0;
    double emr = 0.0;
};

struct RunReport {
    SkewTParams reference;
    double reference_fit_residual = 0.0;
    SkewTParams baseline;
    double baseline_fit_residual = 0.0;
    std::vector<ReportRow> rows;
    SynthesisRow synthesis_mle;
    SynthesisRow synthesis_map;
    std::vector<double> alpha_mle;
    std::vector<double> alpha_map;
    double epsilon = 0.0;
    bool baseline_modal = true;
    bool include_backstop = true;
    std::uint64_t seed = 0;
    std::size_t n = 0;
};

/// Everything a downstream consumer (density grids, diagnostics) may need
/// beyond the report itself.
struct SynthesisArtifacts {
    RunReport report;
    ScenarioWeightMatrix matrix;       // shared points plus all weight columns
    std::vector<double> mixture_map;   // synthesis weights at the MAP alphas
};

/// Pipeline failures carry the stage (and scenario, when applicable) where
/// they occurred.
class PipelineError : public std::runtime_error {
public:
    PipelineError(std::string stage, const std::string& what)
        : std::runtime_error("[" + stage + "] " + what), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

namespace detail {

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t s = seed ^ (0xa0761d6478bd642fULL * (stream + 1));
    return splitmix64(s);
}

inline double round_tenth(double x) {
    return std::round(x * 10.0) / 10.0;
}

template <class F>
inline auto stage(const std::string& name, F&& body) {
    try {
        return body();
    } catch (const PipelineError&) {
        throw;
    } catch (const std::exception& e) {
        throw PipelineError(name, e.what());
    }
}

} // namespace detail

/// Runs the full synthesis flow for one configuration and keeps the weight
/// matrix for downstream emission.
inline SynthesisArtifacts run_synthesis_full(const RunConfig& config) {
    config.validate();
    SynthesisArtifacts art;
    RunReport& rep = art.report;
    rep.n = config.n;
    rep.seed = config.seed;
    rep.baseline_modal = config.baseline_modal;
    rep.include_backstop = config.include_backstop;

    // Reference and baseline densities (accepted or fitted to percentiles).
    detail::stage("fit-reference", [&] {
        if (config.reference_params) {
            rep.reference = *config.reference_params;
            rep.reference_fit_residual = 0.0;
        } else {
            auto fit = fit_to_percentiles(config.reference_percentiles);
            rep.reference = fit.params;
            rep.reference_fit_residual = fit.residual;
        }
        return 0;
    });
    detail::stage("fit-baseline", [&] {
        if (config.baseline_params) {
            rep.baseline = *config.baseline_params;
            rep.baseline_fit_residual = 0.0;
        } else {
            auto fit = fit_to_percentiles(config.baseline_percentiles,
                                          config.baseline_fixed_dof);
            rep.baseline = fit.params;
            rep.baseline_fit_residual = fit.residual;
        }
        return 0;
    });

    // Reference random sample and baseline IS weights on it.
    WeightedSample ref_sample = detail::stage("draw-reference", [&] {
        return draw_reference(rep.reference, config.n,
                              detail::derive_seed(config.seed, 1));
    });
    auto order = sort_order(ref_sample.points);
    WeightedSample w0 = detail::stage("baseline-weights", [&] {
        return is_weights(
            ref_sample, [&](double y) { return skew_t_log_pdf(rep.baseline, y); },
            [&](double y) { return skew_t_log_pdf(rep.reference, y); });
    });

    // Scenario tilts are solved on a sample drawn from the baseline itself,
    // then re-applied to the reference support as compound ET-IS weights.
    WeightedSample base_sample = detail::stage("draw-baseline", [&] {
        return draw_reference(rep.baseline, config.n,
                              detail::derive_seed(config.seed, 2));
    });
    WeightedSample uniform_ref;
    uniform_ref.points = ref_sample.points;
    uniform_ref.weights.assign(config.n, 1.0 / static_cast<double>(config.n));

    ScenarioWeightMatrix& W = art.matrix;
    W.points = ref_sample.points;
    W.columns.push_back(w0.weights);

    rep.rows.push_back({});
    {
        auto& row = rep.rows.back();
        row.name = "Baseline";
        row.et_percent = 100.0;
        row.is_percent = ess_percent(w0);
        row.p15 = weighted_percentile_sorted(w0, 0.15, order);
        row.p50 = weighted_percentile_sorted(w0, 0.50, order);
        row.p85 = weighted_percentile_sorted(w0, 0.85, order);
    }

    auto tilt_column = [&](const std::string& name, const ScoreSpec& spec) {
        auto sol = solve_tilt(base_sample, spec);
        auto u = et_weights(uniform_ref, spec, sol.tau);
        auto compound = compound_weights(w0, u);
        ReportRow row;
        row.name = name;
        row.et_percent = sol.et_ess_percent;
        row.is_percent = ess_percent(compound);
        row.p15 = weighted_percentile_sorted(compound, 0.15, order);
        row.p50 = weighted_percentile_sorted(compound, 0.50, order);
        row.p85 = weighted_percentile_sorted(compound, 0.85, order);
        return std::make_pair(row, std::move(compound.weights));
    };
    auto add_tilted_column = [&](const std::string& name, const ScoreSpec& spec) {
        auto [row, weights] = tilt_column(name, spec);
        rep.rows.push_back(row);
        W.columns.push_back(std::move(weights));
        return PercentileTriple{row.p15, row.p50, row.p85};
    };

    // Per-scenario solves are independent and run concurrently; results are
    // collected in configuration order, so the report is deterministic.
    std::vector<std::future<std::pair<ReportRow, std::vector<double>>>> tilt_jobs;
    for (const auto& sc : config.scenarios) {
        tilt_jobs.push_back(std::async(std::launch::async, [&, name = sc.name,
                                                            constraints = sc.constraints] {
            ScoreSpec spec;
            for (const auto& pt : constraints) {
                spec.thresholds.push_back(pt.value);
                spec.targets.push_back(pt.prob);
            }
            return tilt_column(name, spec);
        }));
    }
    std::vector<PercentileTriple> tilted_triples;
    for (std::size_t k = 0; k < tilt_jobs.size(); ++k) {
        detail::stage("tilt:" + config.scenarios[k].name, [&] {
            auto [row, weights] = tilt_jobs[k].get();
            tilted_triples.push_back({row.p15, row.p50, row.p85});
            rep.rows.push_back(row);
            W.columns.push_back(std::move(weights));
            return 0;
        });
    }

    if (config.include_backstop && !config.scenarios.empty()) {
        detail::stage("backstop", [&] {
            // Tilted percentiles are rounded to 0.1 before the envelope is
            // taken, matching how the published constraints are stated.
            std::vector<PercentileTriple> rounded;
            for (const auto& t : tilted_triples) {
                rounded.push_back({detail::round_tenth(t.p15),
                                   detail::round_tenth(t.p50),
                                   detail::round_tenth(t.p85)});
            }
            add_tilted_column("Backstop", build_backstop_spec(rounded));
            return 0;
        });
    }

    detail::stage("pairwise-emr", [&] {
        W.validate();
        for (std::size_t j = 0; j < W.component_count(); ++j) {
            std::vector<double> unit(W.component_count(), 0.0);
            unit[j] = 1.0;
            rep.rows[j].pairwise_emr = emr(unit, W);
        }
        return 0;
    });

    rep.epsilon = config.epsilon ? *config.epsilon
                                 : default_epsilon(W.component_count());
    detail::stage("optimize", [&] {
        auto mle = optimize_mle(W, config.baseline_modal);
        auto map = optimize_map(W, rep.epsilon, config.baseline_modal);
        rep.alpha_mle = mle.alpha;
        rep.alpha_map = map.alpha;
        for (std::size_t j = 0; j < W.component_count(); ++j) {
            rep.rows[j].alpha_mle = mle.alpha[j];
            rep.rows[j].alpha_map = map.alpha[j];
        }
        auto fill = [&](const std::vector<double>& alpha, SynthesisRow& out) {
            auto mix = synthesis_weights(alpha, W);
            out.ess_percent = ess_percent(mix);
            out.emr = emr(alpha, W);
            out.p15 = weighted_percentile_sorted(mix, 0.15, order);
            out.p50 = weighted_percentile_sorted(mix, 0.50, order);
            out.p85 = weighted_percentile_sorted(mix, 0.85, order);
            return mix;
        };
        fill(mle.alpha, rep.synthesis_mle);
        art.mixture_map = fill(map.alpha, rep.synthesis_map).weights;
        return 0;
    });
    return art;
}

inline RunReport run_synthesis(const RunConfig& config) {
    return run_synthesis_full(config).report;
}

// ---------------------------------------------------------------------------
// Fixtures

inline std::vector<std::string> list_fixtures() {
    return {"tb2007-nyfed-p50", "tb2007-nyfed-p3", "tb2018-nyfed-p50",
            "tb2018-tealbook-p50", "gaussian-shift-study"};
}

/// Embedded case-study configurations. The reference densities use the
/// published parameter values directly; the baseline is constructed from its
/// three stated percentiles with 50 degrees of freedom.
inline RunConfig fixture_config(const std::string& name) {
    RunConfig cfg;
    auto scenario = [](std::string nm, std::vector<PercentilePoint> c) {
        return ScenarioConfig{std::move(nm), std::move(c)};
    };
    auto median_only = [&](const std::string& nm, double p50) {
        return scenario(nm, {{0.5, p50}});
    };
    if (name == "tb2007-nyfed-p50" || name == "tb2007-nyfed-p3") {
        cfg.reference_params = SkewTParams{2.7, 2.2, -0.5, 3.4};
        cfg.baseline_percentiles = {{0.15, 0.1}, {0.50, 1.3}, {0.85, 2.5}};
        cfg.baseline_fixed_dof = 50.0;
        const std::vector<std::pair<std::string, double>> medians{
            {"Greater housing correction", 1.0}, {"Credit crunch", -0.4},
            {"Stronger domestic demand", 1.7},   {"Better export performance", 1.9},
            {"Greater cost pressure", 1.2},      {"Market-based Fed Funds rate", 1.6}};
        if (name == "tb2007-nyfed-p50") {
            for (const auto& [nm, p50] : medians) cfg.scenarios.push_back(median_only(nm, p50));
        } else {
            // Tail percentiles assume the same distances from the median as
            // the baseline: P50 - 1.2 and P50 + 1.2.
            for (const auto& [nm, p50] : medians) {
                cfg.scenarios.push_back(scenario(
                    nm, {{0.15, p50 - 1.2}, {0.50, p50}, {0.85, p50 + 1.2}}));
            }
        }
        return cfg;
    }
    if (name == "tb2018-nyfed-p50" || name == "tb2018-tealbook-p50") {
        cfg.reference_params = (name == "tb2018-nyfed-p50")
                                   ? SkewTParams{2.5, 1.3, -0.3, 3.0}
                                   : SkewTParams{2.1, 1.1, 0.5, 50.0};
        cfg.baseline_percentiles = {{0.15, 1.2}, {0.50, 2.4}, {0.85, 3.9}};
        cfg.baseline_fixed_dof = 50.0;
        cfg.scenarios.push_back(median_only("Financial-based recession", -0.7));
        cfg.scenarios.push_back(median_only("Stronger supply side", 3.1));
        cfg.scenarios.push_back(median_only("Greater interest rate sensitivity", 1.5));
        cfg.scenarios.push_back(median_only("Foreign slowdown", 1.6));
        return cfg;
    }
    throw std::domain_error("unknown fixture '" + name + "'");
}

// ---------------------------------------------------------------------------
// Serialization

inline ordered_json config_to_json(const RunConfig& cfg) {
    ordered_json j;
    auto params_json = [](const SkewTParams& p) {
        return ordered_json{{"location", p.location},
                            {"scale", p.scale},
                            {"slant", p.slant},
                            {"dof", p.dof}};
    };
    auto pts_json = [](const std::vector<PercentilePoint>& pts) {
        ordered_json a = ordered_json::array();
        for (const auto& pt : pts) a.push_back({{"prob", pt.prob}, {"value", pt.value}});
        return a;
    };
    if (cfg.reference_params) {
        j["reference"] = {{"params", params_json(*cfg.reference_params)}};
    } else {
        j["reference"] = {{"percentiles", pts_json(cfg.reference_percentiles)}};
    }
    if (cfg.baseline_params) {
        j["baseline"] = {{"params", params_json(*cfg.baseline_params)}};
    } else {
        j["baseline"] = {{"percentiles", pts_json(cfg.baseline_percentiles)},
                         {"fixed_dof", cfg.baseline_fixed_dof}};
    }
    j["scenarios"] = ordered_json::array();
    for (const auto& sc : cfg.scenarios) {
        j["scenarios"].push_back(
            {{"name", sc.name}, {"constraints", pts_json(sc.constraints)}});
    }
    j["include_backstop"] = cfg.include_backstop;
    j["baseline_modal"] = cfg.baseline_modal;
    j["n"] = cfg.n;
    j["seed"] = cfg.seed;
    if (cfg.epsilon) j["epsilon"] = *cfg.epsilon;
    return j;
}

inline RunConfig config_from_json(const ordered_json& j) {
    RunConfig cfg;
    auto parse_params = [](const ordered_json& pj) {
        SkewTParams p;
        p.location = pj.at("location").get<double>();
        p.scale = pj.at("scale").get<double>();
        p.slant = pj.at("slant").get<double>();
        p.dof = pj.at("dof").get<double>();
        return p;
    };
    auto parse_pts = [](const ordered_json& a) {
        std::vector<PercentilePoint> pts;
        for (const auto& e : a) {
            pts.push_back({e.at("prob").get<double>(), e.at("value").get<double>()});
        }
        return pts;
    };
    const auto& ref = j.at("reference");
    if (ref.contains("params")) cfg.reference_params = parse_params(ref.at("params"));
    else cfg.reference_percentiles = parse_pts(ref.at("percentiles"));
    const auto& base = j.at("baseline");
    if (base.contains("params")) cfg.baseline_params = parse_params(base.at("params"));
    else {
        cfg.baseline_percentiles = parse_pts(base.at("percentiles"));
        if (base.contains("fixed_dof")) {
            cfg.baseline_fixed_dof = base.at("fixed_dof").get<double>();
        }
    }
    if (j.contains("scenarios")) {
        for (const auto& s : j.at("scenarios")) {
            cfg.scenarios.push_back(
                {s.at("name").get<std::string>(), parse_pts(s.at("constraints"))});
        }
    }
    if (j.contains("include_backstop")) cfg.include_backstop = j.at("include_backstop").get<bool>();
    if (j.contains("baseline_modal")) cfg.baseline_modal = j.at("baseline_modal").get<bool>();
    if (j.contains("n")) cfg.n = j.at("n").get<std::size_t>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("epsilon")) cfg.epsilon = j.at("epsilon").get<double>();
    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
    cfg.validate();
    return cfg;
}

inline ordered_json report_to_json(const RunReport& rep) {
    ordered_json j;
    j["schema"] = "scenmix-report-v1";
    j["n"] = rep.n;
    j["seed"] = rep.seed;
    j["epsilon"] = rep.epsilon;
    j["baseline_modal"] = rep.baseline_modal;
    j["include_backstop"] = rep.include_backstop;
    auto params_json = [](const SkewTParams& p, double residual) {
        return ordered_json{{"location", p.location},
                            {"scale", p.scale},
                            {"slant", p.slant},
                            {"dof", p.dof},
                            {"fit_residual", residual}};
    };
    j["reference"] = params_json(rep.reference, rep.reference_fit_residual);
    j["baseline"] = params_json(rep.baseline, rep.baseline_fit_residual);
    j["rows"] = ordered_json::array();
    for (const auto& r : rep.rows) {
        j["rows"].push_back({{"name", r.name},
                             {"p15", r.p15},
                             {"p50", r.p50},
                             {"p85", r.p85},
                             {"et_percent", r.et_percent},
                             {"is_percent", r.is_percent},
                             {"pairwise_emr", r.pairwise_emr},
                             {"alpha_mle", r.alpha_mle},
                             {"alpha_map", r.alpha_map}});
    }
    auto syn_json = [](const SynthesisRow& s) {
        return ordered_json{{"p15", s.p15},
                            {"p50", s.p50},
                            {"p85", s.p85},
                            {"ess_percent", s.ess_percent},
                            {"emr", s.emr}};
    };
    j["synthesis_mle"] = syn_json(rep.synthesis_mle);
    j["synthesis_map"] = syn_json(rep.synthesis_map);
    return j;
}

/// Table-style plain text: percentages to one decimal, EMR and weights to
/// two. Weight components below 1e-6 print as 0.00.
inline std::string report_to_table(const RunReport& rep) {
    std::ostringstream os;
    char buf[256];
    os << "  j  scenario                              P15    P50    P85     ET%"
          "     IS%    pi*  a_mle  a_map\n";
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        const auto& r = rep.rows[i];
        double amle = r.alpha_mle < 1e-6 ? 0.0 : r.alpha_mle;
        double amap = r.alpha_map < 1e-6 ? 0.0 : r.alpha_map;
        std::snprintf(buf, sizeof(buf),
                      "%3zu  %-34s %6.1f %6.1f %6.1f  %6.1f  %6.1f   %4.2f   %4.2f   %4.2f\n",
                      i, r.name.c_str(), r.p15, r.p50, r.p85, r.et_percent,
                      r.is_percent, r.pairwise_emr, amle, amap);
        os << buf;
    }
    auto syn_line = [&](const char* label, const SynthesisRow& s) {
        std::snprintf(buf, sizeof(buf),
                      "     %-34s %6.1f %6.1f %6.1f  %6s  %6.1f   %4.2f\n", label,
                      s.p15, s.p50, s.p85, "", s.ess_percent, s.emr);
        os << buf;
    };
    syn_line("synthesis (MLE weights)", rep.synthesis_mle);
    syn_line("synthesis (MAP weights)", rep.synthesis_map);
    std::snprintf(buf, sizeof(buf),
                  "     n=%zu seed=%llu epsilon=%.8g baseline_modal=%d\n", rep.n,
                  static_cast<unsigned long long>(rep.seed), rep.epsilon,
                  rep.baseline_modal ? 1 : 0);
    os << buf;
    return os.str();
}

// ---------------------------------------------------------------------------
// Density/CDF grid emission

struct GridSpec {
    double min = -10.0;
    double max = 10.0;
    double step = 0.05;
};

/// CSV over the grid: analytic reference/baseline pdf and cdf plus the MAP
/// synthesis mixture, binned at the grid resolution (bin centers at the grid
/// points). The synthesis cdf accumulates mixture weight up to each bin's
/// right edge.
inline std::string density_grid_csv(const SynthesisArtifacts& art,
                                    const GridSpec& grid) {
    if (!(grid.step > 0.0)) {
        throw std::domain_error("density grid: step must be > 0");
    }
    if (!(grid.max > grid.min)) {
        throw std::domain_error("density grid: max must exceed min");
    }
    const auto& points = art.matrix.points;
    const auto& mix = art.mixture_map;
    std::size_t n_bins = static_cast<std::size_t>(
        std::floor((grid.max - grid.min) / grid.step + 0.5)) + 1;
    std::vector<double> bin_mass(n_bins, 0.0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        double pos = (points[i] - grid.min) / grid.step;
        long b = std::lround(pos);
        if (b >= 0 && b < static_cast<long>(n_bins)) {
            bin_mass[static_cast<std::size_t>(b)] += mix[i];
        }
    }
    detail::SkewTCore ref_core(art.report.reference);
    detail::SkewTCore base_core(art.report.baseline);
    auto sorted = sort_order(points);
    std::ostringstream os;
    os << "y,reference_pdf,baseline_pdf,synthesis_pdf,reference_cdf,"
          "baseline_cdf,synthesis_cdf\n";
    std::size_t cursor = 0;
    double cum = 0.0;
    char buf[256];
    for (std::size_t b = 0; b < n_bins; ++b) {
        double y = grid.min + static_cast<double>(b) * grid.step;
        double edge = y + 0.5 * grid.step;
        while (cursor < sorted.size() && points[sorted[cursor]] <= edge) {
            cum += mix[sorted[cursor]];
            ++cursor;
        }
        std::snprintf(buf, sizeof(buf),
                      "%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n", y,
                      std::exp(ref_core.log_pdf(y)), std::exp(base_core.log_pdf(y)),
                      bin_mass[b] / grid.step, ref_core.cdf(y), base_core.cdf(y),
                      cum);
        os << buf;
    }
    return os.str();
}

/// CSV for the Gaussian location-shift study.
inline std::string gaussian_shift_csv(const std::vector<GaussianShiftRow>& rows) {
    std::ostringstream os;
    os << "a,emr,ess_percent,kl,bound\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g,%.10g,%.10g\n", r.a,
                      r.emr, r.ess_percent, r.kl, r.bound);
        os << buf;
    }
    return os.str();
}

} // namespace scenmix
