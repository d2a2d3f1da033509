#include "landtsir/error.hpp"
#include "landtsir/synth.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <set>

namespace landtsir::synth {

using nlohmann::json;

void ScenarioConfig::validate() const
{
    auto require = [](bool ok, const std::string& what) {
        if (!ok) {
            throw UsageError("invalid scenario: " + what);
        }
    };
    require(n_units >= 1, "n_units must be >= 1");
    require(n_biweeks >= 8, "n_biweeks must be >= 8");
    require(noise_sigma >= 0.0, "noise_sigma must be >= 0");
    require(s0 > 0.0 && s0 <= 1.0, "s0 must lie in (0, 1]");
    require(birth_rate >= 0.0, "birth_rate must be >= 0");
    require(lag_temp >= 0 && lag_rain >= 0, "lags must be >= 0");
    require(static_cast<std::size_t>(std::max(lag_temp, lag_rain)) + 2 <= n_biweeks, "lags leave no rows");
    require(alpha.empty() || alpha.size() == n_units, "alpha must list one value per unit");
    require(alpha_min <= alpha_max, "alpha_min must be <= alpha_max");
    require(initial_infected_fraction > 0.0 && initial_infected_fraction <= 1.0,
            "initial_infected_fraction must lie in (0, 1]");
    require(population_min >= 1.0 && population_min <= population_max, "population range invalid");
    require(population_growth > -1.0, "population_growth must be > -1");
    require(area_min_km2 > 0.0 && area_min_km2 <= area_max_km2, "area range invalid");
    for (std::size_t a = 0; a < 6; ++a) {
        require(coverage_min[a] >= 0.0 && coverage_min[a] <= coverage_max[a] && coverage_max[a] <= 1.0,
                "coverage range for " + std::string(raster::to_string(raster::all_classes[a])) +
                    " must satisfy 0 <= min <= max <= 1");
    }
    require(tile_pixels >= 1 && tile_pixels <= 4096, "tile_pixels must lie in [1, 4096]");
    require(tile_degrees > 0.0, "tile_degrees must be positive");
    require(weather.temp_noise_sd >= 0.0, "temp_noise_sd must be >= 0");
    require(weather.rain_probability >= 0.0 && weather.rain_probability <= 1.0,
            "rain_probability must lie in [0, 1]");
    require(weather.rain_mean_mm > 0.0, "rain_mean_mm must be positive");
}

namespace {

std::array<double, 6> class_array(const json& j, const char* key)
{
    std::array<double, 6> out{};
    if (!j.is_object()) {
        throw UsageError(std::string("scenario key '") + key + "' must be an object keyed by class name");
    }
    std::set<std::string> seen;
    for (const auto& [name, value] : j.items()) {
        const auto cls = raster::parse_class(name);
        out[static_cast<std::size_t>(cls)] = value.get<double>();
        seen.insert(name);
    }
    if (seen.size() != 6) {
        throw UsageError(std::string("scenario key '") + key + "' must name all six classes");
    }
    return out;
}

json class_object(const std::array<double, 6>& values)
{
    json out = json::object();
    for (std::size_t a = 0; a < 6; ++a) {
        out[std::string(raster::to_string(raster::all_classes[a]))] = values[a];
    }
    return out;
}

} // namespace

ScenarioConfig parse_scenario(std::string_view json_text)
{
    ScenarioConfig c;
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw UsageError(std::string("scenario is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) {
        throw UsageError("scenario must be a JSON object");
    }
    try {
        for (const auto& [key, v] : doc.items()) {
            if (key == "n_units") c.n_units = v.get<std::size_t>();
            else if (key == "n_biweeks") c.n_biweeks = v.get<std::size_t>();
            else if (key == "start_date") c.start = io::parse_date(v.get<std::string>());
            else if (key == "theta_landscape") c.theta_landscape = class_array(v, "theta_landscape");
            else if (key == "theta_temp") c.theta_temp = v.get<double>();
            else if (key == "theta_rain") c.theta_rain = v.get<double>();
            else if (key == "theta_density") c.theta_density = v.get<double>();
            else if (key == "lag_temp") c.lag_temp = v.get<int>();
            else if (key == "lag_rain") c.lag_rain = v.get<int>();
            else if (key == "alpha") c.alpha = v.get<std::vector<double>>();
            else if (key == "alpha_min") c.alpha_min = v.get<double>();
            else if (key == "alpha_max") c.alpha_max = v.get<double>();
            else if (key == "s0") c.s0 = v.get<double>();
            else if (key == "birth_rate") c.birth_rate = v.get<double>();
            else if (key == "noise_sigma") c.noise_sigma = v.get<double>();
            else if (key == "round_counts") c.round_counts = v.get<bool>();
            else if (key == "initial_infected_fraction") c.initial_infected_fraction = v.get<double>();
            else if (key == "seed") c.seed = v.get<std::uint64_t>();
            else if (key == "population_min") c.population_min = v.get<double>();
            else if (key == "population_max") c.population_max = v.get<double>();
            else if (key == "population_growth") c.population_growth = v.get<double>();
            else if (key == "area_min_km2") c.area_min_km2 = v.get<double>();
            else if (key == "area_max_km2") c.area_max_km2 = v.get<double>();
            else if (key == "coverage_min") c.coverage_min = class_array(v, "coverage_min");
            else if (key == "coverage_max") c.coverage_max = class_array(v, "coverage_max");
            else if (key == "tile_pixels") c.tile_pixels = v.get<int>();
            else if (key == "tile_degrees") c.tile_degrees = v.get<double>();
            else if (key == "origin_lon") c.origin_lon = v.get<double>();
            else if (key == "origin_lat") c.origin_lat = v.get<double>();
            else if (key == "weather") {
                for (const auto& [wk, wv] : v.items()) {
                    if (wk == "temp_mean") c.weather.temp_mean = wv.get<double>();
                    else if (wk == "temp_amplitude") c.weather.temp_amplitude = wv.get<double>();
                    else if (wk == "temp_phase_days") c.weather.temp_phase_days = wv.get<double>();
                    else if (wk == "temp_noise_sd") c.weather.temp_noise_sd = wv.get<double>();
                    else if (wk == "rain_probability") c.weather.rain_probability = wv.get<double>();
                    else if (wk == "rain_mean_mm") c.weather.rain_mean_mm = wv.get<double>();
                    else throw UsageError("unknown scenario key 'weather." + wk + "'");
                }
            } else {
                throw UsageError("unknown scenario key '" + key + "'");
            }
        }
    } catch (const json::exception& e) {
        throw UsageError(std::string("scenario has a value of the wrong type: ") + e.what());
    } catch (const DataError& e) {
        throw UsageError(std::string("invalid scenario: ") + e.what());
    }
    c.validate();
    return c;
}

std::string scenario_to_json(const ScenarioConfig& c)
{
    json doc = {
        {"n_units", c.n_units},
        {"n_biweeks", c.n_biweeks},
        {"start_date", io::format_date(c.start)},
        {"theta_landscape", class_object(c.theta_landscape)},
        {"theta_temp", c.theta_temp},
        {"theta_rain", c.theta_rain},
        {"theta_density", c.theta_density},
        {"lag_temp", c.lag_temp},
        {"lag_rain", c.lag_rain},
        {"alpha", c.alpha},
        {"alpha_min", c.alpha_min},
        {"alpha_max", c.alpha_max},
        {"s0", c.s0},
        {"birth_rate", c.birth_rate},
        {"noise_sigma", c.noise_sigma},
        {"round_counts", c.round_counts},
        {"initial_infected_fraction", c.initial_infected_fraction},
        {"seed", c.seed},
        {"population_min", c.population_min},
        {"population_max", c.population_max},
        {"population_growth", c.population_growth},
        {"area_min_km2", c.area_min_km2},
        {"area_max_km2", c.area_max_km2},
        {"coverage_min", class_object(c.coverage_min)},
        {"coverage_max", class_object(c.coverage_max)},
        {"tile_pixels", c.tile_pixels},
        {"tile_degrees", c.tile_degrees},
        {"origin_lon", c.origin_lon},
        {"origin_lat", c.origin_lat},
        {"weather",
         {{"temp_mean", c.weather.temp_mean},
          {"temp_amplitude", c.weather.temp_amplitude},
          {"temp_phase_days", c.weather.temp_phase_days},
          {"temp_noise_sd", c.weather.temp_noise_sd},
          {"rain_probability", c.weather.rain_probability},
          {"rain_mean_mm", c.weather.rain_mean_mm}}},
    };
    return doc.dump(2) + "\n";
}

std::string unit_id(std::size_t index, std::size_t n_units)
{
    const std::size_t width = std::to_string(n_units).size();
    std::string digits = std::to_string(index + 1);
    return "u" + std::string(width > digits.size() ? width - digits.size() : 0, '0') + digits;
}

} // namespace landtsir::synth
