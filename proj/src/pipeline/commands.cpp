#include "landtsir/error.hpp"
#include "landtsir/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <iostream>
#include <map>

namespace landtsir::pipeline {

using nlohmann::json;
using raster::LandscapeClass;

namespace {

void warn(const std::string& message) { std::cerr << "warning: " << message << "\n"; }

std::vector<fs::path> sorted_files(const fs::path& dir, const std::string& extension, bool recursive)
{
    std::vector<fs::path> files;
    auto take = [&](const fs::directory_entry& e) {
        if (e.is_regular_file() && e.path().extension() == extension) {
            files.push_back(e.path());
        }
    };
    if (recursive) {
        for (const auto& e : fs::recursive_directory_iterator(dir)) {
            take(e);
        }
    } else {
        for (const auto& e : fs::directory_iterator(dir)) {
            take(e);
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

std::vector<epi::UnitArea> unit_areas(std::span<const geo::SpatialUnit> units)
{
    std::vector<epi::UnitArea> out;
    for (const auto& u : units) {
        out.push_back({u.id(), u.area_km2()});
    }
    return out;
}

json estimate_json(const epi::Estimate& e) { return {{"estimate", e.value}, {"std_error", e.std_error}}; }

// Units that the pipeline can model: present in the coverage file and in the
// optional subset.
std::vector<std::string> modeled_units(const PipelineConfig& config, const epi::EpidemicPanel& panel,
                                       const geo::CoverageMatrix& coverage, std::vector<std::string>& dropped)
{
    std::vector<std::string> out;
    for (const auto& id : config.unit_subset) {
        (void)panel.unit(id);
    }
    for (const auto& u : panel.units) {
        if (!config.unit_subset.empty() &&
            std::find(config.unit_subset.begin(), config.unit_subset.end(), u.id) == config.unit_subset.end()) {
            continue;
        }
        if (!coverage.unit_index(u.id)) {
            warn("unit '" + u.id + "' has no landscape coverage and is excluded");
            dropped.push_back(u.id);
            continue;
        }
        out.push_back(u.id);
    }
    return out;
}

struct LoadedInputs {
    std::vector<geo::SpatialUnit> units;
    geo::CoverageMatrix coverage;
    epi::EpidemicPanel panel;
    std::vector<std::string> modeled;
    std::vector<std::string> dropped;
};

LoadedInputs load_model_inputs(const PipelineConfig& config, Command command)
{
    validate_paths(config, command);
    LoadedInputs in;
    in.units = geo::load_units(config.units);
    in.coverage = read_coverage_csv(config.coverage_path(), config.coverage_mode);
    in.panel = load_panel(config, in.units);
    in.modeled = modeled_units(config, in.panel, in.coverage, in.dropped);
    if (in.modeled.empty()) {
        throw InsufficientRowsError("insufficient rows: no unit has both case data and landscape coverage");
    }
    return in;
}

std::vector<int> resolve_lags(const PipelineConfig& config, const LoadedInputs& in, const epi::DesignOptions& opts)
{
    if (!config.lag_grid) {
        return config.lags;
    }
    return epi::lag_search(in.panel, in.coverage, *config.lag_grid, opts).lags;
}

} // namespace

geo::RastersByClass load_rasters(const fs::path& dir, std::span<const LandscapeClass> classes)
{
    geo::RastersByClass out;
    for (auto cls : classes) {
        const fs::path class_dir = dir / std::string(raster::to_string(cls));
        if (!fs::is_directory(class_dir)) {
            throw MissingClassError(std::string(raster::to_string(cls)));
        }
        auto& list = out[cls];
        for (const auto& pgm : sorted_files(class_dir, ".pgm", false)) {
            auto r = raster::load_raster(pgm, raster::sidecar_for(pgm));
            if (r.landscape_class() != cls) {
                throw DataError(pgm.string() + ": sidecar class '" + std::string(raster::to_string(r.landscape_class())) +
                                "' does not match directory '" + std::string(raster::to_string(cls)) + "'");
            }
            list.push_back(std::move(r));
        }
        if (list.empty()) {
            throw MissingClassError(std::string(raster::to_string(cls)));
        }
    }
    return out;
}

std::string coverage_csv(const geo::CoverageMatrix& coverage)
{
    std::string out = "unit_id,class,fraction,positive_px,total_px\n";
    for (std::size_t i = 0; i < coverage.units().size(); ++i) {
        for (std::size_t a = 0; a < coverage.classes().size(); ++a) {
            const auto& cell = coverage.cell(i, a);
            out += coverage.units()[i] + "," + std::string(raster::to_string(coverage.classes()[a])) + "," +
                   io::format_fixed6(cell.fraction) + "," + std::to_string(cell.positive) + "," +
                   std::to_string(cell.total) + "\n";
        }
    }
    return out;
}

geo::CoverageMatrix read_coverage_csv(const fs::path& path, geo::CoverageMode mode)
{
    const auto table = io::read_csv(path, {"unit_id", "class", "fraction", "positive_px", "total_px"});
    std::vector<std::string> units;
    std::vector<LandscapeClass> classes;
    std::map<std::pair<std::string, LandscapeClass>, geo::Coverage> cells;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        try {
            const auto cls = raster::parse_class(row[1]);
            geo::Coverage c;
            c.positive = io::parse_int(row[3], "positive_px");
            c.total = io::parse_int(row[4], "total_px");
            if (c.total <= 0 || c.positive < 0 || c.positive > c.total) {
                throw DataError("pixel tallies must satisfy 0 <= positive <= total, total > 0");
            }
            // Threshold fractions are rebuilt from the integer tallies; the
            // printed fraction is rounded to six decimals.
            c.fraction = mode == geo::CoverageMode::threshold
                             ? static_cast<double>(c.positive) / static_cast<double>(c.total)
                             : io::parse_double(row[2], "fraction");
            if (std::find(units.begin(), units.end(), row[0]) == units.end()) {
                units.push_back(row[0]);
            }
            if (std::find(classes.begin(), classes.end(), cls) == classes.end()) {
                classes.push_back(cls);
            }
            if (!cells.emplace(std::make_pair(row[0], cls), c).second) {
                throw DataError("duplicate entry");
            }
        } catch (const DataError& e) {
            throw DataError(table.where(r) + ": " + e.what());
        }
    }
    geo::CoverageMatrix m(units, classes);
    for (std::size_t i = 0; i < units.size(); ++i) {
        for (std::size_t a = 0; a < classes.size(); ++a) {
            const auto it = cells.find({units[i], classes[a]});
            if (it == cells.end()) {
                throw DataError(path.string() + ": no '" + std::string(raster::to_string(classes[a])) +
                                "' entry for unit '" + units[i] + "'");
            }
            m.set(i, a, it->second);
        }
    }
    return m;
}

epi::EpidemicPanel load_panel(const PipelineConfig& config, std::span<const geo::SpatialUnit> units)
{
    const auto weather = io::read_csv(config.weather, {"date", "mean_temp_c", "precip_mm"});
    std::vector<epi::DailyValue> temp;
    std::vector<epi::DailyValue> rain;
    for (std::size_t r = 0; r < weather.rows.size(); ++r) {
        try {
            const auto& row = weather.rows[r];
            const auto date = io::parse_date(row[0]);
            temp.push_back({date, io::parse_double(row[1], "mean_temp_c")});
            const double mm = io::parse_double(row[2], "precip_mm");
            if (mm < 0.0) {
                throw DataError("precipitation must be >= 0");
            }
            rain.push_back({date, mm});
        } catch (const DataError& e) {
            throw DataError(weather.where(r) + ": " + e.what());
        }
    }
    if (temp.empty()) {
        throw DataError(config.weather.string() + ": no weather records");
    }
    const auto [first, last] = std::minmax_element(temp.begin(), temp.end(),
                                                   [](const auto& a, const auto& b) { return a.date < b.date; });
    const io::Date start = config.start.value_or(first->date);
    const io::Date end = config.end.value_or(last->date);

    std::vector<std::string> ids;
    for (const auto& u : units) {
        ids.push_back(u.id());
    }
    const auto cases_table = io::read_csv(config.cases, {"unit_id", "date", "count"});
    std::vector<epi::CaseEvent> events;
    for (std::size_t r = 0; r < cases_table.rows.size(); ++r) {
        try {
            const auto& row = cases_table.rows[r];
            events.push_back({row[0], io::parse_date(row[1]), io::parse_double(row[2], "count")});
        } catch (const DataError& e) {
            throw DataError(cases_table.where(r) + ": " + e.what());
        }
    }
    epi::BinnedCases binned;
    try {
        binned = epi::bin_cases(events, ids, start, end);
    } catch (const DataError& e) {
        throw DataError(config.cases.string() + ": " + e.what());
    }
    if (binned.dropped > 0.0) {
        warn(io::format_exact(binned.dropped) + " cases fall in the trailing partial biweek and are ignored");
    }
    const auto bins = epi::bin_weather(temp, rain, start, end);

    const auto pop_table = io::read_csv(config.population, {"unit_id", "date", "population"});
    std::vector<epi::PopulationRecord> pop;
    for (std::size_t r = 0; r < pop_table.rows.size(); ++r) {
        try {
            const auto& row = pop_table.rows[r];
            pop.push_back({row[0], io::parse_date(row[1]), io::parse_double(row[2], "population")});
        } catch (const DataError& e) {
            throw DataError(pop_table.where(r) + ": " + e.what());
        }
    }
    return epi::assemble_panel(unit_areas(units), binned, bins, pop, start, config.susceptibles);
}

std::string fit_report_json(const epi::TsirFit& fit, const epi::EpidemicPanel& panel,
                            const PipelineConfig& config, const std::vector<std::string>& dropped_units,
                            std::size_t dropped_zero_rows, const std::string& residuals_file)
{
    json coeffs;
    coeffs["theta_landscape"] = json::object();
    for (std::size_t a = 0; a < fit.classes.size(); ++a) {
        coeffs["theta_landscape"][std::string(raster::to_string(fit.classes[a]))] =
            estimate_json(fit.theta_landscape[a]);
    }
    json lags = json::object();
    for (std::size_t j = 0; j < fit.covariates.size(); ++j) {
        auto e = estimate_json(fit.theta_weather[j]);
        e["lag"] = fit.lags[j];
        coeffs["theta_weather"][fit.covariates[j]] = e;
        lags[fit.covariates[j]] = fit.lags[j];
    }
    coeffs["theta_density"] = estimate_json(fit.theta_density);
    coeffs["alpha"] = json::object();
    for (std::size_t k = 0; k < fit.alpha_units.size(); ++k) {
        coeffs["alpha"][fit.alpha_units[k]] = estimate_json(fit.alpha[k]);
    }

    std::vector<std::string> fitted_units;
    for (const auto& r : fit.rows) {
        const auto& id = panel.units[r.unit].id;
        if (fitted_units.empty() || fitted_units.back() != id) {
            fitted_units.push_back(id);
        }
    }

    const json doc = {
        {"coefficients", coeffs},
        {"lags", lags},
        {"r2", fit.r2},
        {"adjusted_r2", fit.adjusted_r2},
        {"n", fit.n_rows},
        {"p", fit.n_params},
        {"residuals", residuals_file},
        {"alpha_mode", fit.alpha_mode == epi::AlphaMode::per_unit ? "per_unit" : "shared"},
        {"zero_policy", fit.zero_policy == epi::ZeroPolicy::drop ? "drop" : "smooth"},
        {"dropped_zero_rows", dropped_zero_rows},
        {"units", fitted_units},
        {"dropped_units", dropped_units},
        {"start_date", io::format_date(panel.start)},
        {"n_biweeks", panel.n_biweeks},
        {"s0", config.susceptibles.s0},
        {"seed", config.seed},
    };
    return doc.dump(2) + "\n";
}

std::string residuals_csv(const epi::TsirFit& fit, const epi::EpidemicPanel& panel)
{
    std::string out = "unit_id,date,biweek,observed,fitted,residual\n";
    for (std::size_t r = 0; r < fit.rows.size(); ++r) {
        const auto [unit, t] = fit.rows[r];
        out += panel.units[unit].id + "," +
               io::format_date(panel.start + std::chrono::days(static_cast<int>(t) * epi::biweek_days)) + "," +
               std::to_string(t) + "," + io::format_fixed6(fit.observed[r]) + "," +
               io::format_fixed6(fit.fitted[r]) + "," + io::format_fixed6(fit.residuals[r]) + "\n";
    }
    return out;
}

std::string ablation_csv(const epi::AblationTable& table)
{
    std::string out = "feature_set";
    for (auto s : epi::all_strata) {
        out += "," + std::string(epi::to_string(s));
    }
    for (auto s : epi::all_strata) {
        out += ",best_" + std::string(epi::to_string(s));
    }
    for (auto s : epi::all_strata) {
        out += ",best_single_" + std::string(epi::to_string(s));
    }
    out += "\n";
    for (auto set : epi::all_feature_sets) {
        out += std::string(epi::to_string(set));
        for (auto s : epi::all_strata) {
            const auto& cell = table.at(set, s);
            out += "," + (cell.adjusted_r2 ? io::format_fixed6(*cell.adjusted_r2) : std::string("NA"));
        }
        for (bool single : {false, true}) {
            for (auto s : epi::all_strata) {
                const auto best = table.best(s, single);
                const bool eligible = !single || epi::is_single_feature(set);
                out += (eligible && best && *best == set) ? ",1" : ",0";
            }
        }
        out += "\n";
    }
    return out;
}

fs::path cmd_aggregate(const PipelineConfig& config)
{
    validate_paths(config, Command::aggregate);
    const auto units = geo::load_units(config.units);
    const auto rasters = load_rasters(config.rasters, config.classes);
    geo::CoverageOptions opts;
    opts.threshold = config.threshold;
    opts.mode = config.coverage_mode;
    opts.threads = config.threads;
    const auto matrix = geo::coverage_matrix(rasters, units, config.classes, opts);
    for (const auto& id : matrix.dropped_units) {
        warn("unit '" + id + "' intersects no raster pixel and is dropped");
    }
    const fs::path out = config.output / "coverage.csv";
    io::write_text(out, coverage_csv(matrix));
    return out;
}

FitOutputs cmd_fit(const PipelineConfig& config)
{
    const auto in = load_model_inputs(config, Command::fit);
    epi::DesignOptions opts;
    opts.zero_policy = config.zero_policy;
    opts.alpha_mode = config.alpha_mode;
    opts.units = in.modeled;
    const auto lags = resolve_lags(config, in, opts);
    const auto design = epi::build_design(in.panel, in.coverage, config.classes, lags, opts);

    FitOutputs out;
    out.fit = epi::fit(design);
    out.report = config.output / "fit_report.json";
    out.residuals = config.output / "residuals.csv";
    io::write_text(out.residuals, residuals_csv(out.fit, in.panel));
    io::write_text(out.report, fit_report_json(out.fit, in.panel, config, in.dropped, design.dropped_zero_rows,
                                               out.residuals.filename().string()));
    return out;
}

fs::path cmd_ablate(const PipelineConfig& config)
{
    const auto in = load_model_inputs(config, Command::ablate);
    epi::AblationOptions opts;
    opts.design.zero_policy = config.zero_policy;
    opts.design.alpha_mode = config.alpha_mode;
    opts.design.units = in.modeled;
    opts.stratify = config.stratify;
    opts.threads = config.threads;
    const auto lags = resolve_lags(config, in, opts.design);
    const auto table = epi::ablate(in.panel, in.coverage, lags, opts);
    const fs::path out = config.output / "ablation.csv";
    io::write_text(out, ablation_csv(table));
    return out;
}

void cmd_simulate(const synth::ScenarioConfig& scenario, const fs::path& out_dir)
{
    synth::write_bundle(scenario, out_dir);
}

fs::path cmd_evaluate_seg(const fs::path& pred_dir, const fs::path& truth_dir, const fs::path& out_dir,
                          double threshold)
{
    for (const auto& d : {pred_dir, truth_dir}) {
        if (!fs::is_directory(d)) {
            throw UsageError("not a directory: " + d.string());
        }
    }
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
        throw UsageError("threshold must lie in [0, 1]");
    }
    std::vector<fs::path> pred;
    std::vector<fs::path> truth;
    for (const auto& p : sorted_files(pred_dir, ".pgm", true)) {
        pred.push_back(fs::relative(p, pred_dir));
    }
    for (const auto& p : sorted_files(truth_dir, ".pgm", true)) {
        truth.push_back(fs::relative(p, truth_dir));
    }
    std::vector<fs::path> paired;
    std::vector<std::string> unpaired;
    std::set_intersection(pred.begin(), pred.end(), truth.begin(), truth.end(), std::back_inserter(paired));
    for (const auto& p : pred) {
        if (!std::binary_search(truth.begin(), truth.end(), p)) {
            unpaired.push_back("prediction without truth: " + p.string());
        }
    }
    for (const auto& p : truth) {
        if (!std::binary_search(pred.begin(), pred.end(), p)) {
            unpaired.push_back("truth without prediction: " + p.string());
        }
    }
    if (!unpaired.empty()) {
        std::string msg = "unpaired raster files:";
        for (const auto& u : unpaired) {
            msg += "\n  " + u;
        }
        throw DataError(msg);
    }
    if (paired.empty()) {
        throw DataError("no raster pairs found");
    }

    struct Pooled {
        std::size_t pairs = 0;
        std::vector<double> pred;
        std::vector<double> pred_binary;
        std::vector<double> truth_binary;
    };
    std::map<LandscapeClass, Pooled> pools;
    for (const auto& rel : paired) {
        const auto p = raster::load_raster(pred_dir / rel, raster::sidecar_for(pred_dir / rel));
        const auto t = raster::load_raster(truth_dir / rel, raster::sidecar_for(truth_dir / rel));
        if (p.landscape_class() != t.landscape_class()) {
            throw DataError(rel.string() + ": prediction and truth disagree on the landscape class");
        }
        if (p.width() != t.width() || p.height() != t.height()) {
            throw DimensionError(rel.string() + ": prediction and truth dimensions differ");
        }
        auto& pool = pools[p.landscape_class()];
        ++pool.pairs;
        const auto pb = raster::binarize(p, threshold);
        const auto tb = raster::binarize(t, threshold);
        pool.pred.insert(pool.pred.end(), p.values().begin(), p.values().end());
        pool.pred_binary.insert(pool.pred_binary.end(), pb.values().begin(), pb.values().end());
        pool.truth_binary.insert(pool.truth_binary.end(), tb.values().begin(), tb.values().end());
    }

    std::string out = "class,pairs,pixels,jaccard_hard,bce,loss\n";
    for (const auto& [cls, pool] : pools) {
        const double j = raster::jaccard(pool.pred_binary, pool.truth_binary, raster::JaccardMode::hard);
        const double bce = raster::binary_cross_entropy(pool.pred, pool.truth_binary);
        const double loss = raster::segmentation_loss(pool.pred, pool.truth_binary);
        out += std::string(raster::to_string(cls)) + "," + std::to_string(pool.pairs) + "," +
               std::to_string(pool.pred.size()) + "," + io::format_fixed6(j) + "," + io::format_fixed6(bce) + "," +
               io::format_fixed6(loss) + "\n";
    }
    const fs::path path = out_dir / "segmentation_metrics.csv";
    io::write_text(path, out);
    return path;
}

} // namespace landtsir::pipeline
