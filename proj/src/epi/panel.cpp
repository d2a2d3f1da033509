#include "landtsir/epi.hpp"
#include "landtsir/error.hpp"

#include <algorithm>
#include <cmath>

namespace landtsir::epi {

std::vector<double> reconstruct_susceptibles(std::span<const double> infected, std::span<const double> population,
                                             const SusceptibleOptions& options, const std::string& unit_id)
{
    if (!(options.s0 > 0.0 && options.s0 <= 1.0)) {
        throw UsageError("s0 must lie in (0, 1]");
    }
    if (!(options.birth_rate >= 0.0)) {
        throw UsageError("birth rate must be non-negative");
    }
    if (infected.size() != population.size()) {
        throw DimensionError("infected and population series differ in length");
    }
    std::vector<double> s(infected.size());
    if (s.empty()) {
        return s;
    }
    s[0] = std::round(options.s0 * population[0]);
    for (std::size_t t = 0; t < s.size(); ++t) {
        if (s[t] < infected[t]) {
            throw DepletionError(unit_id, t);
        }
        if (t + 1 < s.size()) {
            s[t + 1] = s[t] - infected[t] + options.birth_rate * population[t];
        }
    }
    return s;
}

void EpidemicPanel::validate() const
{
    for (const auto& c : covariates) {
        if (c.values.size() != n_biweeks) {
            throw DataError("covariate '" + c.name + "' is not aligned with the panel");
        }
    }
    for (const auto& u : units) {
        if (u.infected.size() != n_biweeks || u.susceptible.size() != n_biweeks ||
            u.population.size() != n_biweeks || u.density.size() != n_biweeks) {
            throw DataError("series of unit '" + u.id + "' are not aligned with the panel");
        }
        for (std::size_t t = 0; t < n_biweeks; ++t) {
            if (!(u.population[t] > 0.0)) {
                throw DataError("unit '" + u.id + "' has non-positive population at biweek " + std::to_string(t));
            }
            if (u.infected[t] < 0.0) {
                throw DataError("unit '" + u.id + "' has negative incidence at biweek " + std::to_string(t));
            }
            if (u.susceptible[t] > u.population[t]) {
                throw DataError("unit '" + u.id + "' has more susceptibles than people at biweek " +
                                std::to_string(t));
            }
        }
    }
}

const UnitSeries& EpidemicPanel::unit(const std::string& id) const
{
    for (const auto& u : units) {
        if (u.id == id) {
            return u;
        }
    }
    throw DataError("unit '" + id + "' is not in the panel");
}

std::vector<std::string> EpidemicPanel::unit_ids() const
{
    std::vector<std::string> ids;
    for (const auto& u : units) {
        ids.push_back(u.id);
    }
    return ids;
}

std::vector<Covariate> weather_covariates(std::span<const WeatherBin> bins)
{
    Covariate temp{mean_temp_name, {}};
    Covariate rain{rain_days_name, {}};
    for (const auto& b : bins) {
        temp.values.push_back(b.mean_temp);
        rain.values.push_back(static_cast<double>(b.rain_days));
    }
    return {std::move(temp), std::move(rain)};
}

std::vector<double> population_series(std::span<const PopulationRecord> records, const std::string& unit_id,
                                      Date start, std::size_t n_biweeks)
{
    std::vector<const PopulationRecord*> mine;
    for (const auto& r : records) {
        if (r.unit_id == unit_id) {
            mine.push_back(&r);
        }
    }
    std::stable_sort(mine.begin(), mine.end(), [](const auto* a, const auto* b) { return a->date < b->date; });

    std::vector<double> out(n_biweeks);
    std::size_t next = 0;
    const PopulationRecord* current = nullptr;
    for (std::size_t t = 0; t < n_biweeks; ++t) {
        const Date last_day = start + std::chrono::days(static_cast<int>((t + 1) * biweek_days - 1));
        while (next < mine.size() && mine[next]->date <= last_day) {
            current = mine[next++];
        }
        if (!current) {
            throw DataError("no population record for unit '" + unit_id + "' on or before " +
                            io::format_date(last_day));
        }
        if (!(current->population > 0.0)) {
            throw DataError("population of unit '" + unit_id + "' must be positive");
        }
        out[t] = current->population;
    }
    return out;
}

EpidemicPanel assemble_panel(std::span<const UnitArea> units, const BinnedCases& cases,
                             std::span<const WeatherBin> weather, std::span<const PopulationRecord> population,
                             Date start, const SusceptibleOptions& options)
{
    if (weather.size() != cases.n_biweeks) {
        throw DataError("weather covers " + std::to_string(weather.size()) + " biweeks, cases cover " +
                        std::to_string(cases.n_biweeks));
    }
    EpidemicPanel panel;
    panel.start = start;
    panel.n_biweeks = cases.n_biweeks;
    panel.covariates = weather_covariates(weather);
    for (const auto& ua : units) {
        if (!(ua.area_km2 > 0.0)) {
            throw DataError("unit '" + ua.id + "' must have positive area");
        }
        UnitSeries s;
        s.id = ua.id;
        s.area_km2 = ua.area_km2;
        s.infected = cases.series(ua.id);
        s.population = population_series(population, ua.id, start, panel.n_biweeks);
        s.susceptible = reconstruct_susceptibles(s.infected, s.population, options, ua.id);
        s.density.resize(panel.n_biweeks);
        for (std::size_t t = 0; t < panel.n_biweeks; ++t) {
            s.density[t] = s.population[t] / ua.area_km2;
        }
        panel.units.push_back(std::move(s));
    }
    panel.validate();
    return panel;
}

} // namespace landtsir::epi
