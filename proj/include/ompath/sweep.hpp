#pragma once

// End-to-end shooting pipeline on the carbon model and the nu / T sweeps.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "ompath/carbon.hpp"
#include "ompath/rng.hpp"
#include "ompath/shooting.hpp"
#include "ompath/structure.hpp"

namespace ompath {

struct PipelineResult {
    CarbonStructure structure;
    ShootDataset dataset;
    ShootModel model;
    SelectionResult selection;
};

/// Structure analysis, dataset, training and selection for one (params, T).
/// The stable cycle sampled at n_targets points provides the targets.
inline PipelineResult run_pipeline(const CarbonParams& params, double horizon, const ShootConfig& cfg,
                                   std::uint64_t seed)
{
    const CarbonModel model(params);
    PipelineResult r;
    r.structure = carbon_structure(model, cfg.n_targets);
    const State z_star = r.structure.fixed_point.location;
    const auto& targets = r.structure.stable_cycle.points;
    r.dataset = generate_dataset(model, z_star, horizon, params.nu, targets, cfg, derive_seed(seed, 0));
    r.model = train_shoot_net(r.dataset, derive_seed(seed, 1), cfg.epochs, cfg.learning_rate);
    r.selection = most_probable_path(model, z_star, targets, r.model.net, horizon, cfg);
    return r;
}

enum class SweepAxis { Nu, Time };

inline const char* to_string(SweepAxis a) { return a == SweepAxis::Nu ? "nu" : "time"; }

struct SweepRow {
    double axis = 0.0;
    State endpoint{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
    double action = std::numeric_limits<double>::quiet_NaN();
    long target_index = -1;
    std::size_t reachable_count = 0;
    double validation_loss = std::numeric_limits<double>::quiet_NaN();
    std::string error;  // empty on success
};

/// Values "A:B:STEP" expanded inclusively; the end point is kept when it lies
/// within STEP/1000 of the last multiple.
inline std::vector<double> parse_range(const std::string& text)
{
    std::vector<double> parts;
    std::size_t start = 0;
    while (true) {
        const std::size_t colon = text.find(':', start);
        const std::string tok = text.substr(start, colon == std::string::npos ? std::string::npos : colon - start);
        try {
            std::size_t used = 0;
            parts.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw ConfigError("bad number '" + tok + "' in range '" + text + "'");
        }
        if (colon == std::string::npos) break;
        start = colon + 1;
    }
    if (parts.size() == 1) return parts;
    if (parts.size() != 3) throw ConfigError("range must be A:B:STEP, got '" + text + "'");
    const double a = parts[0], b = parts[1], step = parts[2];
    if (!(step > 0.0) || b < a) throw ConfigError("range needs STEP > 0 and B >= A, got '" + text + "'");
    const auto n = static_cast<long>(std::floor((b - a) / step + 1e-3));
    std::vector<double> out;
    for (long i = 0; i <= n; ++i) out.push_back(a + static_cast<double>(i) * step);
    return out;
}

/// Re-runs the full pipeline per axis value. Failures are recorded in the
/// row and the sweep moves on.
inline std::vector<SweepRow> sweep(const CarbonParams& base, SweepAxis axis, const std::vector<double>& values,
                                   double horizon, const ShootConfig& cfg, std::uint64_t seed)
{
    std::vector<SweepRow> rows;
    for (std::size_t i = 0; i < values.size(); ++i) {
        SweepRow row;
        row.axis = values[i];
        CarbonParams p = base;
        double T = horizon;
        if (axis == SweepAxis::Nu) {
            p.nu = values[i];
        } else {
            T = values[i];
        }
        try {
            const PipelineResult r = run_pipeline(p, T, cfg, derive_seed(seed, i));
            row.endpoint = r.selection.winner.path.back();
            row.action = r.selection.winner.action;
            row.target_index = static_cast<long>(r.selection.winner.target_index);
            row.reachable_count = r.selection.reachable_count;
            row.validation_loss = r.model.report.validation_loss;
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace ompath
