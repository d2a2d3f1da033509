#include "landtsir/epi.hpp"
#include "landtsir/error.hpp"

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>

namespace landtsir::epi {

Strata stratify_units(const geo::CoverageMatrix& coverage)
{
    const std::size_t b = coverage.class_index(LandscapeClass::buildings);
    const auto& units = coverage.units();
    if (units.empty()) {
        throw DataError("cannot stratify an empty coverage matrix");
    }
    double mean = 0.0;
    for (std::size_t i = 0; i < units.size(); ++i) {
        mean += coverage.value(i, b);
    }
    mean /= static_cast<double>(units.size());

    Strata s;
    for (std::size_t i = 0; i < units.size(); ++i) {
        (coverage.value(i, b) > mean ? s.more_urban : s.less_urban).push_back(units[i]);
    }
    return s;
}

std::string_view to_string(FeatureSet set) noexcept
{
    switch (set) {
    case FeatureSet::environment_only:
        return "environment_only";
    case FeatureSet::all_landscape:
        return "all_landscape";
    case FeatureSet::building:
        return "building";
    case FeatureSet::road:
        return "road";
    case FeatureSet::trees:
        return "trees";
    case FeatureSet::crops:
        return "crops";
    case FeatureSet::waterway:
        return "waterway";
    case FeatureSet::standing_water:
        return "standing_water";
    }
    return "unknown";
}

std::vector<LandscapeClass> feature_classes(FeatureSet set)
{
    switch (set) {
    case FeatureSet::environment_only:
        return {};
    case FeatureSet::all_landscape:
        return {raster::all_classes.begin(), raster::all_classes.end()};
    case FeatureSet::building:
        return {LandscapeClass::buildings};
    case FeatureSet::road:
        return {LandscapeClass::roads};
    case FeatureSet::trees:
        return {LandscapeClass::trees};
    case FeatureSet::crops:
        return {LandscapeClass::crops};
    case FeatureSet::waterway:
        return {LandscapeClass::waterway};
    case FeatureSet::standing_water:
        return {LandscapeClass::standing_water};
    }
    return {};
}

bool is_single_feature(FeatureSet set) noexcept
{
    return set != FeatureSet::environment_only && set != FeatureSet::all_landscape;
}

std::string_view to_string(Stratum stratum) noexcept
{
    switch (stratum) {
    case Stratum::all:
        return "all_towns";
    case Stratum::more_urban:
        return "more_urban";
    case Stratum::less_urban:
        return "less_urban";
    }
    return "unknown";
}

const AblationCell& AblationTable::at(FeatureSet set, Stratum stratum) const
{
    return cells[static_cast<std::size_t>(set)][static_cast<std::size_t>(stratum)];
}

std::optional<FeatureSet> AblationTable::best(Stratum stratum, bool single_only) const
{
    std::optional<FeatureSet> winner;
    double top = 0.0;
    for (auto set : all_feature_sets) {
        if (single_only && !is_single_feature(set)) {
            continue;
        }
        const auto& cell = at(set, stratum);
        if (cell.adjusted_r2 && (!winner || *cell.adjusted_r2 > top)) {
            winner = set;
            top = *cell.adjusted_r2;
        }
    }
    return winner;
}

AblationTable ablate(const EpidemicPanel& panel, const geo::CoverageMatrix& coverage, std::span<const int> lags,
                     const AblationOptions& options)
{
    for (auto cls : raster::all_classes) {
        (void)coverage.class_index(cls);
    }

    AblationTable table;
    // Strata are drawn from units present in both the panel and the coverage.
    std::vector<std::string> base_units = options.design.units.empty() ? panel.unit_ids() : options.design.units;
    std::erase_if(base_units, [&](const std::string& id) { return !coverage.unit_index(id); });
    if (options.stratify) {
        const Strata full = stratify_units(coverage);
        auto keep = [&](const std::vector<std::string>& ids) {
            std::vector<std::string> out;
            for (const auto& id : ids) {
                if (std::find(base_units.begin(), base_units.end(), id) != base_units.end()) {
                    out.push_back(id);
                }
            }
            return out;
        };
        table.strata = {keep(full.more_urban), keep(full.less_urban)};
    }

    const auto run_cell = [&](std::size_t task) {
        const auto set = all_feature_sets[task / all_strata.size()];
        const auto stratum = all_strata[task % all_strata.size()];
        AblationCell& cell = table.cells[static_cast<std::size_t>(set)][static_cast<std::size_t>(stratum)];

        DesignOptions design = options.design;
        if (stratum == Stratum::all) {
            design.units = base_units;
        } else if (!options.stratify) {
            cell.note = "stratification disabled";
            return;
        } else {
            design.units = stratum == Stratum::more_urban ? table.strata.more_urban : table.strata.less_urban;
        }
        if (design.units.empty()) {
            cell.note = "empty stratum";
            return;
        }
        try {
            const auto classes = feature_classes(set);
            const Design d = build_design(panel, coverage, classes, lags, design);
            const OlsResult r = fit_ols(d.X, d.y, d.column_names);
            cell.adjusted_r2 = r.adjusted_r2;
            cell.n = r.n;
            cell.p = r.p;
        } catch (const DataError& e) {
            cell.note = e.what();
        }
    };

    const std::size_t n_tasks = all_feature_sets.size() * all_strata.size();
    const int threads = std::clamp(options.threads, 1, static_cast<int>(n_tasks));
    if (threads == 1) {
        for (std::size_t t = 0; t < n_tasks; ++t) {
            run_cell(t);
        }
    } else {
        std::exception_ptr failure;
        std::mutex failure_mutex;
        {
            std::vector<std::jthread> workers;
            for (int w = 0; w < threads; ++w) {
                workers.emplace_back([&, w] {
                    for (std::size_t t = static_cast<std::size_t>(w); t < n_tasks; t += threads) {
                        try {
                            run_cell(t);
                        } catch (...) {
                            std::lock_guard lock(failure_mutex);
                            if (!failure) {
                                failure = std::current_exception();
                            }
                        }
                    }
                });
            }
        }
        if (failure) {
            std::rethrow_exception(failure);
        }
    }
    return table;
}

namespace {

// Odometer step with the last covariate fastest, i.e. lexicographic order.
bool advance(std::vector<std::size_t>& pos, const std::vector<std::vector<int>>& sets)
{
    for (std::size_t j = sets.size(); j-- > 0;) {
        if (++pos[j] < sets[j].size()) {
            return true;
        }
        pos[j] = 0;
    }
    return false;
}

} // namespace

LagSearchResult lag_search(const EpidemicPanel& panel, const geo::CoverageMatrix& coverage,
                           std::span<const std::vector<int>> grid, const DesignOptions& options)
{
    if (grid.size() != panel.covariates.size()) {
        throw UsageError("lag grid needs one lag set per covariate");
    }
    int grid_max = 0;
    std::vector<std::vector<int>> sets;
    for (const auto& g : grid) {
        if (g.empty()) {
            throw UsageError("lag grid contains an empty lag set");
        }
        auto s = g;
        std::sort(s.begin(), s.end());
        s.erase(std::unique(s.begin(), s.end()), s.end());
        if (s.front() < 0) {
            throw UsageError("lags must be non-negative");
        }
        grid_max = std::max(grid_max, s.back());
        sets.push_back(std::move(s));
    }

    DesignOptions opts = options;
    opts.first_t = std::max<std::size_t>(opts.first_t, static_cast<std::size_t>(grid_max));
    const auto& classes = coverage.classes();

    std::optional<LagSearchResult> best;
    std::optional<std::string> last_error;
    std::vector<std::size_t> pos(sets.size(), 0);
    do {
        std::vector<int> lags(sets.size());
        for (std::size_t j = 0; j < sets.size(); ++j) {
            lags[j] = sets[j][pos[j]];
        }
        try {
            const Design d = build_design(panel, coverage, classes, lags, opts);
            const double score = fit_ols(d.X, d.y, d.column_names).adjusted_r2;
            if (!best || score > best->adjusted_r2) {
                best = LagSearchResult{lags, score};
            }
        } catch (const DataError& e) {
            last_error = e.what();
        }
    } while (advance(pos, sets));
    if (!best) {
        throw DataError("no lag combination could be fitted" + (last_error ? ": " + *last_error : std::string()));
    }
    return *best;
}

} // namespace landtsir::epi
