#include "landtsir/error.hpp"
#include "landtsir/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <set>

namespace landtsir::pipeline {

using nlohmann::json;

fs::path PipelineConfig::coverage_path() const { return coverage.empty() ? output / "coverage.csv" : coverage; }

namespace {

const std::set<std::string> known_keys{
    "units",  "rasters",  "cases",      "weather",     "population", "coverage", "output",
    "start_date", "end_date", "threshold", "coverage_mode", "s0",   "birth_rate", "lags",
    "lag_grid", "zero_policy", "alpha_mode", "stratify", "classes", "unit_subset", "seed", "threads",
};

const std::vector<std::string> covariate_names{epi::mean_temp_name, epi::rain_days_name};

template <typename T>
std::vector<T> per_covariate(const json& obj, const char* key)
{
    if (!obj.is_object()) {
        throw UsageError(std::string("'") + key + "' must be an object keyed by covariate");
    }
    for (const auto& [name, _] : obj.items()) {
        if (std::find(covariate_names.begin(), covariate_names.end(), name) == covariate_names.end()) {
            throw UsageError(std::string("'") + key + "' names unknown covariate '" + name + "'");
        }
    }
    std::vector<T> out;
    for (const auto& name : covariate_names) {
        if (!obj.contains(name)) {
            throw UsageError(std::string("'") + key + "' is missing covariate '" + name + "'");
        }
        out.push_back(obj.at(name).get<T>());
    }
    return out;
}

} // namespace

PipelineConfig parse_config(std::string_view json_text, const fs::path& base_dir, const Overrides& overrides)
{
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw UsageError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) {
        throw UsageError("config must be a JSON object");
    }
    for (const auto& [key, _] : doc.items()) {
        if (!known_keys.contains(key)) {
            throw UsageError("unknown config key '" + key + "'");
        }
    }

    PipelineConfig c;
    c.base_dir = base_dir;
    auto path = [&](const char* key, fs::path& dst) {
        if (doc.contains(key)) {
            const fs::path p = doc.at(key).get<std::string>();
            dst = p.is_absolute() ? p : base_dir / p;
        }
    };
    try {
        path("units", c.units);
        path("rasters", c.rasters);
        path("cases", c.cases);
        path("weather", c.weather);
        path("population", c.population);
        path("coverage", c.coverage);
        c.output = base_dir / "out";
        path("output", c.output);
        if (doc.contains("start_date")) {
            c.start = io::parse_date(doc.at("start_date").get<std::string>());
        }
        if (doc.contains("end_date")) {
            c.end = io::parse_date(doc.at("end_date").get<std::string>());
        }
        c.threshold = doc.value("threshold", c.threshold);
        if (doc.contains("coverage_mode")) {
            const auto m = doc.at("coverage_mode").get<std::string>();
            if (m == "threshold") c.coverage_mode = geo::CoverageMode::threshold;
            else if (m == "mean_probability") c.coverage_mode = geo::CoverageMode::mean_probability;
            else throw UsageError("coverage_mode must be 'threshold' or 'mean_probability'");
        }
        c.susceptibles.s0 = doc.value("s0", c.susceptibles.s0);
        c.susceptibles.birth_rate = doc.value("birth_rate", c.susceptibles.birth_rate);
        if (doc.contains("lags")) {
            c.lags = per_covariate<int>(doc.at("lags"), "lags");
        }
        if (doc.contains("lag_grid")) {
            c.lag_grid = per_covariate<std::vector<int>>(doc.at("lag_grid"), "lag_grid");
        }
        if (doc.contains("zero_policy")) {
            const auto z = doc.at("zero_policy").get<std::string>();
            if (z == "drop") c.zero_policy = epi::ZeroPolicy::drop;
            else if (z == "smooth") c.zero_policy = epi::ZeroPolicy::smooth;
            else throw UsageError("zero_policy must be 'drop' or 'smooth'");
        }
        if (doc.contains("alpha_mode")) {
            const auto a = doc.at("alpha_mode").get<std::string>();
            if (a == "per_unit") c.alpha_mode = epi::AlphaMode::per_unit;
            else if (a == "shared") c.alpha_mode = epi::AlphaMode::shared;
            else throw UsageError("alpha_mode must be 'per_unit' or 'shared'");
        }
        c.stratify = doc.value("stratify", c.stratify);
        if (doc.contains("classes")) {
            c.classes.clear();
            for (const auto& name : doc.at("classes").get<std::vector<std::string>>()) {
                c.classes.push_back(raster::parse_class(name));
            }
        }
        if (doc.contains("unit_subset")) {
            c.unit_subset = doc.at("unit_subset").get<std::vector<std::string>>();
        }
        c.seed = doc.value("seed", c.seed);
        c.threads = doc.value("threads", c.threads);
    } catch (const json::exception& e) {
        throw UsageError(std::string("config has a value of the wrong type: ") + e.what());
    } catch (const DataError& e) {
        throw UsageError(std::string("invalid config: ") + e.what());
    }

    if (overrides.output) {
        c.output = *overrides.output;
    }
    if (overrides.seed) {
        c.seed = *overrides.seed;
    }
    if (overrides.threads) {
        c.threads = *overrides.threads;
    }

    if (!(c.threshold >= 0.0 && c.threshold <= 1.0)) {
        throw UsageError("threshold must lie in [0, 1]");
    }
    if (!(c.susceptibles.s0 > 0.0 && c.susceptibles.s0 <= 1.0)) {
        throw UsageError("s0 must lie in (0, 1]");
    }
    if (!(c.susceptibles.birth_rate >= 0.0)) {
        throw UsageError("birth_rate must be >= 0");
    }
    for (int l : c.lags) {
        if (l < 0) {
            throw UsageError("lags must be >= 0");
        }
    }
    if (c.lag_grid) {
        for (const auto& g : *c.lag_grid) {
            if (g.empty()) {
                throw UsageError("lag_grid sets must be non-empty");
            }
            for (int l : g) {
                if (l < 0) {
                    throw UsageError("lag_grid values must be >= 0");
                }
            }
        }
    }
    if (c.classes.empty()) {
        throw UsageError("classes must not be empty");
    }
    if (c.threads < 1) {
        throw UsageError("threads must be >= 1");
    }
    if (c.start && c.end && *c.end < *c.start) {
        throw UsageError("end_date precedes start_date");
    }
    return c;
}

PipelineConfig load_config(const fs::path& path, const Overrides& overrides)
{
    std::string text;
    try {
        text = io::read_text(path);
    } catch (const DataError&) {
        throw UsageError("cannot read config " + path.string());
    }
    const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
    return parse_config(text, base, overrides);
}

void validate_paths(const PipelineConfig& c, Command command)
{
    auto need = [](const fs::path& p, const char* key) {
        if (p.empty()) {
            throw UsageError(std::string("config is missing '") + key + "'");
        }
        if (!fs::exists(p)) {
            throw UsageError(std::string("'") + key + "' does not exist: " + p.string());
        }
    };
    need(c.units, "units");
    if (command == Command::aggregate) {
        need(c.rasters, "rasters");
        return;
    }
    need(c.cases, "cases");
    need(c.weather, "weather");
    need(c.population, "population");
    if (!fs::exists(c.coverage_path())) {
        throw UsageError("coverage file " + c.coverage_path().string() + " does not exist; run aggregate first");
    }
}

} // namespace landtsir::pipeline
