#include "landtsir/epi.hpp"
#include "landtsir/error.hpp"

#include <algorithm>
#include <cmath>

namespace landtsir::epi {

namespace {

std::vector<std::size_t> select_units(const EpidemicPanel& panel, const std::vector<std::string>& wanted)
{
    std::vector<std::size_t> picked;
    for (const auto& id : wanted) {
        (void)panel.unit(id); // throws for unknown ids
    }
    for (std::size_t i = 0; i < panel.units.size(); ++i) {
        if (wanted.empty() || std::find(wanted.begin(), wanted.end(), panel.units[i].id) != wanted.end()) {
            picked.push_back(i);
        }
    }
    return picked;
}

} // namespace

Design build_design(const EpidemicPanel& panel, const geo::CoverageMatrix& coverage,
                    std::span<const LandscapeClass> classes, std::span<const int> lags, const DesignOptions& options)
{
    if (lags.size() != panel.covariates.size()) {
        throw UsageError("expected " + std::to_string(panel.covariates.size()) + " lags, got " +
                         std::to_string(lags.size()));
    }
    int max_lag = 0;
    for (int l : lags) {
        if (l < 0) {
            throw UsageError("lags must be non-negative");
        }
        max_lag = std::max(max_lag, l);
    }

    const auto unit_idx = select_units(panel, options.units);
    std::vector<std::size_t> class_idx;
    for (auto cls : classes) {
        class_idx.push_back(coverage.class_index(cls));
    }
    std::vector<std::size_t> cov_row(panel.units.size());
    for (auto i : unit_idx) {
        const auto r = coverage.unit_index(panel.units[i].id);
        if (!r) {
            throw DataError("no landscape coverage for unit '" + panel.units[i].id + "'");
        }
        cov_row[i] = *r;
    }

    const bool smooth = options.zero_policy == ZeroPolicy::smooth;
    auto log_count = [smooth](double v) { return std::log(smooth ? v + 1.0 : v); };
    const std::size_t first_t = std::max<std::size_t>(static_cast<std::size_t>(max_lag), options.first_t);

    Design d;
    d.classes.assign(classes.begin(), classes.end());
    for (const auto& c : panel.covariates) {
        d.covariates.push_back(c.name);
    }
    d.lags.assign(lags.begin(), lags.end());
    d.alpha_mode = options.alpha_mode;
    d.zero_policy = options.zero_policy;

    // Collect surviving rows first; the alpha block only spans units with rows.
    for (auto i : unit_idx) {
        const auto& u = panel.units[i];
        for (std::size_t t = first_t; t + 1 < panel.n_biweeks; ++t) {
            if (!smooth && (u.infected[t] <= 0.0 || u.infected[t + 1] <= 0.0)) {
                ++d.dropped_zero_rows;
                continue;
            }
            if (u.susceptible[t] <= 0.0) {
                throw DataError("unit '" + u.id + "' has no susceptibles at biweek " + std::to_string(t));
            }
            d.rows.push_back({i, t});
        }
    }
    if (d.rows.empty()) {
        throw InsufficientRowsError("insufficient rows: no (unit, biweek) pair survives filtering");
    }

    std::vector<std::ptrdiff_t> alpha_col(panel.units.size(), -1);
    const std::size_t n_fixed = classes.size() + lags.size() + 1;
    std::size_t n_alpha = 0;
    if (options.alpha_mode == AlphaMode::per_unit) {
        for (const auto& r : d.rows) {
            if (alpha_col[r.unit] < 0) {
                alpha_col[r.unit] = static_cast<std::ptrdiff_t>(n_fixed + n_alpha++);
                d.alpha_units.push_back(panel.units[r.unit].id);
            }
        }
    } else {
        n_alpha = 1;
    }

    for (auto cls : classes) {
        d.column_names.push_back("theta_" + std::string(raster::to_string(cls)));
    }
    for (const auto& c : panel.covariates) {
        d.column_names.push_back("theta_" + c.name);
    }
    d.column_names.emplace_back("theta_density");
    if (options.alpha_mode == AlphaMode::per_unit) {
        for (const auto& id : d.alpha_units) {
            d.column_names.push_back("alpha_" + id);
        }
    } else {
        d.column_names.emplace_back("alpha");
    }

    const auto n = static_cast<Eigen::Index>(d.rows.size());
    d.X = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(n_fixed + n_alpha));
    d.y.resize(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto [i, t] = d.rows[static_cast<std::size_t>(r)];
        const auto& u = panel.units[i];
        Eigen::Index col = 0;
        for (auto c : class_idx) {
            d.X(r, col++) = coverage.value(cov_row[i], c);
        }
        for (std::size_t j = 0; j < lags.size(); ++j) {
            d.X(r, col++) = panel.covariates[j].values[t - static_cast<std::size_t>(lags[j])];
        }
        d.X(r, col++) = u.density[t];
        const Eigen::Index a = options.alpha_mode == AlphaMode::per_unit ? alpha_col[i] : col;
        d.X(r, a) = log_count(u.infected[t]);
        d.y(r) = log_count(u.infected[t + 1]) + std::log(u.population[t]) - std::log(u.susceptible[t]);
    }
    return d;
}

} // namespace landtsir::epi
