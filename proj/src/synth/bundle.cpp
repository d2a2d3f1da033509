#include "landtsir/synth.hpp"

#include <nlohmann/json.hpp>

namespace landtsir::synth {

namespace fs = std::filesystem;
using nlohmann::json;

void write_bundle(const ScenarioConfig& config, const fs::path& dir)
{
    const Scenario s = generate(config, true);
    const auto& panel = s.simulation.panel;
    fs::create_directories(dir);

    io::write_text(dir / "units.geojson", geo::units_to_geojson(s.landscape.units));

    for (const auto& [cls, rasters] : s.landscape.rasters) {
        const fs::path class_dir = dir / "rasters" / std::string(raster::to_string(cls));
        for (std::size_t k = 0; k < rasters.size(); ++k) {
            const fs::path pgm = class_dir / (s.landscape.units[k].id() + ".pgm");
            raster::save_raster(rasters[k], pgm, raster::sidecar_for(pgm));
        }
    }

    std::string cases = "unit_id,date,count\n";
    std::string population = "unit_id,date,population\n";
    for (const auto& u : panel.units) {
        for (std::size_t t = 0; t < panel.n_biweeks; ++t) {
            const auto date = io::format_date(panel.start + std::chrono::days(static_cast<int>(t) * epi::biweek_days));
            if (u.infected[t] > 0.0) {
                cases += u.id + "," + date + "," + io::format_exact(u.infected[t]) + "\n";
            }
            population += u.id + "," + date + "," + io::format_exact(u.population[t]) + "\n";
        }
    }
    io::write_text(dir / "cases.csv", cases);
    io::write_text(dir / "population.csv", population);

    std::string weather = "date,mean_temp_c,precip_mm\n";
    for (std::size_t d = 0; d < s.daily.temperature.size(); ++d) {
        weather += io::format_date(s.daily.temperature[d].date) + "," +
                   io::format_exact(s.daily.temperature[d].value) + "," +
                   io::format_exact(s.daily.precipitation[d].value) + "\n";
    }
    io::write_text(dir / "weather.csv", weather);

    io::write_text(dir / "scenario.json", scenario_to_json(config));

    json truth;
    for (std::size_t a = 0; a < raster::all_classes.size(); ++a) {
        truth["theta_landscape"][std::string(raster::to_string(raster::all_classes[a]))] = config.theta_landscape[a];
    }
    truth["theta_weather"] = {{epi::mean_temp_name, config.theta_temp}, {epi::rain_days_name, config.theta_rain}};
    truth["theta_density"] = config.theta_density;
    truth["lags"] = {{epi::mean_temp_name, config.lag_temp}, {epi::rain_days_name, config.lag_rain}};
    for (std::size_t k = 0; k < panel.units.size(); ++k) {
        truth["alpha"][panel.units[k].id] = s.simulation.alpha[k];
    }
    truth["truncations"] = s.simulation.truncations;
    io::write_text(dir / "truth.json", truth.dump(2) + "\n");

    const io::Date end = config.start + std::chrono::days(static_cast<int>(config.n_biweeks * epi::biweek_days - 1));
    const json pipeline = {
        {"units", "units.geojson"},
        {"rasters", "rasters"},
        {"cases", "cases.csv"},
        {"weather", "weather.csv"},
        {"population", "population.csv"},
        {"output", "out"},
        {"start_date", io::format_date(config.start)},
        {"end_date", io::format_date(end)},
        {"s0", config.s0},
        {"birth_rate", config.birth_rate},
        {"lags", {{epi::mean_temp_name, config.lag_temp}, {epi::rain_days_name, config.lag_rain}}},
        {"seed", config.seed},
    };
    io::write_text(dir / "pipeline.json", pipeline.dump(2) + "\n");
}

} // namespace landtsir::synth
