#pragma once

#include "landtsir/epi.hpp"
#include "landtsir/geo.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace landtsir::synth {

struct WeatherModel {
    double temp_mean = 25.0;
    double temp_amplitude = 3.0;
    /// Day of the year at which the seasonal sinusoid crosses its mean upwards.
    double temp_phase_days = 100.0;
    double temp_noise_sd = 1.0;
    double rain_probability = 0.2;
    double rain_mean_mm = 8.0;
};

/// Ground truth and knobs for one synthetic city. Every output is a pure
/// function of this struct, seed included.
struct ScenarioConfig {
    std::size_t n_units = 14;
    std::size_t n_biweeks = 130;
    io::Date start = io::parse_date("2015-01-01");

    /// Indexed like raster::all_classes.
    std::array<double, 6> theta_landscape{1.0, 0.5, -0.4, 0.3, 0.6, 0.8};
    double theta_temp = 0.1;
    double theta_rain = 0.05;
    double theta_density = 5e-6;
    int lag_temp = 1;
    int lag_rain = 1;

    /// Explicit per-unit alpha; when empty, alpha is drawn from
    /// U(alpha_min, alpha_max) per unit.
    std::vector<double> alpha;
    double alpha_min = 0.6;
    double alpha_max = 0.75;

    double s0 = 0.1;
    double birth_rate = 0.0;
    double noise_sigma = 0.0;
    /// Round realized incidence to whole cases. Noiseless recovery to 1e-6
    /// needs this off: rounding alone perturbs log I by up to 0.5 / I.
    bool round_counts = true;
    double initial_infected_fraction = 0.001;
    std::uint64_t seed = 1;

    WeatherModel weather;

    double population_min = 1.5e6;
    double population_max = 3.0e6;
    double population_growth = 0.001;
    double area_min_km2 = 20.0;
    double area_max_km2 = 60.0;

    std::array<double, 6> coverage_min{0.05, 0.05, 0.05, 0.05, 0.05, 0.05};
    std::array<double, 6> coverage_max{0.6, 0.6, 0.6, 0.6, 0.6, 0.6};

    int tile_pixels = 64;
    double tile_degrees = 1.0 / 64.0;
    double origin_lon = 73.0;
    double origin_lat = 33.5;

    /// Throws UsageError.
    void validate() const;
};

/// Parses a scenario JSON document; absent keys keep their defaults and
/// unknown keys are rejected.
ScenarioConfig parse_scenario(std::string_view json_text);
std::string scenario_to_json(const ScenarioConfig& config);

std::string unit_id(std::size_t index, std::size_t n_units);

struct Landscape {
    std::vector<geo::SpatialUnit> units;
    geo::CoverageMatrix coverage;
    /// Empty unless rasters were requested.
    geo::RastersByClass rasters;
};

/// Coverage fractions are drawn per (unit, class) and quantized to whole
/// pixels of a tile_pixels^2 tile, so the raster mode reproduces them exactly.
Landscape gen_landscape(const ScenarioConfig& config, bool with_rasters);

struct DailyWeather {
    std::vector<epi::DailyValue> temperature;
    std::vector<epi::DailyValue> precipitation;
};

DailyWeather gen_weather(const ScenarioConfig& config);

struct Population {
    std::vector<std::vector<double>> series; ///< per unit, per biweek
};

Population gen_population(const ScenarioConfig& config);

struct Simulation {
    epi::EpidemicPanel panel;
    std::vector<double> alpha;
    /// Steps where I(t+1) was capped at S(t+1).
    std::size_t truncations = 0;
};

/// Runs I(t+1) = beta S/N I^alpha eps forward per unit, with log beta from
/// the landscape, lagged weather and density terms. Lagged weather before
/// the first biweek reads biweek 0; those rows never enter a fit.
Simulation simulate_tsir(const ScenarioConfig& config, const Landscape& landscape,
                         std::span<const epi::WeatherBin> weather, const Population& population);

/// Everything an in-memory consumer needs, generated consistently.
struct Scenario {
    Landscape landscape;
    DailyWeather daily;
    std::vector<epi::WeatherBin> weather;
    Population population;
    Simulation simulation;
};

Scenario generate(const ScenarioConfig& config, bool with_rasters);

/// Writes units.geojson, rasters/<class>/<unit>.{pgm,json}, cases.csv,
/// weather.csv, population.csv, scenario.json, truth.json and a ready-to-run
/// pipeline.json into `dir`.
void write_bundle(const ScenarioConfig& config, const std::filesystem::path& dir);

} // namespace landtsir::synth
