#include "landtsir/error.hpp"
#include "landtsir/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

namespace landtsir::synth {

namespace {

enum class Stream : std::uint32_t { coverage = 1, pixels, weather, demography, alpha, noise };

std::mt19937_64 make_rng(std::uint64_t seed, Stream stream)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    return std::mt19937_64(seq);
}

// Rounds through the decimal text form so the value written to CSV parses
// back to the identical double the simulation used.
double quantize(double value, int decimals)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
    return io::parse_double(buf, "quantized value");
}

} // namespace

Landscape gen_landscape(const ScenarioConfig& config, bool with_rasters)
{
    config.validate();
    const std::size_t n = config.n_units;
    const int px = config.tile_pixels;
    const auto total = static_cast<std::int64_t>(px) * px;
    const auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));

    auto cov_rng = make_rng(config.seed, Stream::coverage);
    auto demo_rng = make_rng(config.seed, Stream::demography);
    auto pix_rng = make_rng(config.seed, Stream::pixels);
    std::uniform_real_distribution<double> unit01(0.0, 1.0);

    Landscape out;
    std::vector<std::string> ids;
    std::vector<raster::GeoReference> refs;
    for (std::size_t k = 0; k < n; ++k) {
        const double lon_min = config.origin_lon + static_cast<double>(k % cols) * config.tile_degrees;
        const double lat_max = config.origin_lat - static_cast<double>(k / cols) * config.tile_degrees;
        const raster::GeoReference ref{lon_min, lat_max - config.tile_degrees, lon_min + config.tile_degrees,
                                       lat_max, px, px};
        const double area =
            quantize(config.area_min_km2 + (config.area_max_km2 - config.area_min_km2) * unit01(demo_rng), 3);
        geo::Ring ring{{ref.lon_min, ref.lat_min},
                       {ref.lon_max, ref.lat_min},
                       {ref.lon_max, ref.lat_max},
                       {ref.lon_min, ref.lat_max}};
        ids.push_back(unit_id(k, n));
        out.units.emplace_back(ids.back(), std::vector<geo::Ring>{std::move(ring)}, area);
        refs.push_back(ref);
    }

    out.coverage = geo::CoverageMatrix(ids, {raster::all_classes.begin(), raster::all_classes.end()});
    std::vector<int> pixel_order(static_cast<std::size_t>(total));
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t a = 0; a < raster::all_classes.size(); ++a) {
            const double f = config.coverage_min[a] + (config.coverage_max[a] - config.coverage_min[a]) * unit01(cov_rng);
            const auto positive = static_cast<std::int64_t>(std::llround(f * static_cast<double>(total)));
            out.coverage.set(k, a,
                             {static_cast<double>(positive) / static_cast<double>(total), positive, total});

            if (!with_rasters) {
                continue;
            }
            // Positive pixels get bytes 128..255 and negatives 0..127, so the
            // 0.5 threshold survives the 8-bit round trip.
            std::iota(pixel_order.begin(), pixel_order.end(), 0);
            std::shuffle(pixel_order.begin(), pixel_order.end(), pix_rng);
            std::uniform_int_distribution<int> hi(128, 255);
            std::uniform_int_distribution<int> lo(0, 127);
            std::vector<double> values(static_cast<std::size_t>(total));
            for (std::int64_t i = 0; i < total; ++i) {
                const int byte = i < positive ? hi(pix_rng) : lo(pix_rng);
                values[static_cast<std::size_t>(pixel_order[static_cast<std::size_t>(i)])] = byte / 255.0;
            }
            out.rasters[raster::all_classes[a]].emplace_back(raster::ImageTensor(px, px, 1, std::move(values)),
                                                             refs[k], raster::all_classes[a]);
        }
    }
    return out;
}

DailyWeather gen_weather(const ScenarioConfig& config)
{
    config.validate();
    auto rng = make_rng(config.seed, Stream::weather);
    std::normal_distribution<double> temp_noise(0.0, 1.0);
    std::uniform_real_distribution<double> unit01(0.0, 1.0);
    std::exponential_distribution<double> rain_amount(1.0 / config.weather.rain_mean_mm);
    const auto& w = config.weather;

    DailyWeather out;
    const std::size_t days = config.n_biweeks * epi::biweek_days;
    const std::chrono::year_month_day ymd{config.start};
    const auto new_year = std::chrono::sys_days{ymd.year() / std::chrono::January / 1};
    for (std::size_t d = 0; d < days; ++d) {
        const io::Date date = config.start + std::chrono::days(static_cast<int>(d));
        const double day_of_year = static_cast<double>(io::days_between(new_year, date));
        const double seasonal =
            w.temp_amplitude * std::sin(2.0 * std::numbers::pi * (day_of_year - w.temp_phase_days) / 365.25);
        // Draw unconditionally so each stream position maps to a fixed day.
        const double noise = temp_noise(rng);
        const double wet = unit01(rng);
        const double amount = rain_amount(rng);
        out.temperature.push_back({date, quantize(w.temp_mean + seasonal + w.temp_noise_sd * noise, 2)});
        out.precipitation.push_back({date, wet < w.rain_probability ? quantize(0.1 + amount, 1) : 0.0});
    }
    return out;
}

Population gen_population(const ScenarioConfig& config)
{
    config.validate();
    // Areas come first on the demography stream (gen_landscape); skip past them.
    auto rng = make_rng(config.seed, Stream::demography);
    std::uniform_real_distribution<double> unit01(0.0, 1.0);
    for (std::size_t k = 0; k < config.n_units; ++k) {
        (void)unit01(rng);
    }
    Population out;
    for (std::size_t k = 0; k < config.n_units; ++k) {
        const double n0 =
            std::round(config.population_min + (config.population_max - config.population_min) * unit01(rng));
        std::vector<double> series(config.n_biweeks);
        for (std::size_t t = 0; t < config.n_biweeks; ++t) {
            series[t] = std::round(n0 * std::pow(1.0 + config.population_growth, static_cast<double>(t)));
        }
        out.series.push_back(std::move(series));
    }
    return out;
}

Simulation simulate_tsir(const ScenarioConfig& config, const Landscape& landscape,
                         std::span<const epi::WeatherBin> weather, const Population& population)
{
    config.validate();
    const std::size_t n = config.n_units;
    const std::size_t T = config.n_biweeks;
    if (landscape.units.size() != n || landscape.coverage.units().size() != n || population.series.size() != n ||
        weather.size() != T) {
        throw DimensionError("simulation inputs do not match the scenario dimensions");
    }

    Simulation sim;
    sim.alpha = config.alpha;
    if (sim.alpha.empty()) {
        auto rng = make_rng(config.seed, Stream::alpha);
        std::uniform_real_distribution<double> draw(config.alpha_min, config.alpha_max);
        for (std::size_t k = 0; k < n; ++k) {
            sim.alpha.push_back(config.alpha_min == config.alpha_max ? config.alpha_min : draw(rng));
        }
    }
    auto noise_rng = make_rng(config.seed, Stream::noise);
    std::normal_distribution<double> log_eps(0.0, 1.0);

    auto& panel = sim.panel;
    panel.start = config.start;
    panel.n_biweeks = T;
    panel.covariates = epi::weather_covariates(weather);
    const auto& temp = panel.covariates[0].values;
    const auto& rain = panel.covariates[1].values;
    const auto lagged = [](const std::vector<double>& v, std::size_t t, int lag) {
        return v[t >= static_cast<std::size_t>(lag) ? t - static_cast<std::size_t>(lag) : 0];
    };

    for (std::size_t k = 0; k < n; ++k) {
        epi::UnitSeries u;
        u.id = landscape.units[k].id();
        u.area_km2 = landscape.units[k].area_km2();
        u.population = population.series[k];
        u.density.resize(T);
        for (std::size_t t = 0; t < T; ++t) {
            u.density[t] = u.population[t] / u.area_km2;
        }

        double landscape_term = 0.0;
        for (std::size_t a = 0; a < raster::all_classes.size(); ++a) {
            landscape_term += config.theta_landscape[a] * landscape.coverage.value(k, a);
        }

        u.infected.assign(T, 0.0);
        u.susceptible.assign(T, 0.0);
        u.susceptible[0] = std::round(config.s0 * u.population[0]);
        u.infected[0] =
            std::min(u.susceptible[0], std::max(1.0, std::round(config.initial_infected_fraction * u.population[0])));
        for (std::size_t t = 0; t + 1 < T; ++t) {
            // Same update as epi::reconstruct_susceptibles, term for term.
            u.susceptible[t + 1] = u.susceptible[t] - u.infected[t] + config.birth_rate * u.population[t];

            const double log_beta = landscape_term + config.theta_temp * lagged(temp, t, config.lag_temp) +
                                    config.theta_rain * lagged(rain, t, config.lag_rain) +
                                    config.theta_density * u.density[t];
            double next = std::exp(log_beta) * (u.susceptible[t] / u.population[t]) *
                          std::pow(u.infected[t], sim.alpha[k]);
            const double z = log_eps(noise_rng);
            if (config.noise_sigma > 0.0) {
                next *= std::exp(config.noise_sigma * z);
            }
            if (config.round_counts) {
                next = std::round(next);
            }
            if (next > u.susceptible[t + 1]) {
                next = std::max(0.0, u.susceptible[t + 1]);
                ++sim.truncations;
            }
            u.infected[t + 1] = next;
        }
        panel.units.push_back(std::move(u));
    }
    panel.validate();
    return sim;
}

Scenario generate(const ScenarioConfig& config, bool with_rasters)
{
    Scenario s;
    s.landscape = gen_landscape(config, with_rasters);
    s.daily = gen_weather(config);
    const io::Date end = config.start + std::chrono::days(static_cast<int>(config.n_biweeks * epi::biweek_days - 1));
    s.weather = epi::bin_weather(s.daily.temperature, s.daily.precipitation, config.start, end);
    s.population = gen_population(config);
    s.simulation = simulate_tsir(config, s.landscape, s.weather, s.population);
    return s;
}

} // namespace landtsir::synth
