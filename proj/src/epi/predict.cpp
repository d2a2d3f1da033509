#include "landtsir/epi.hpp"
#include "landtsir/error.hpp"

#include <cmath>

namespace landtsir::epi {

double predict_next(const TsirFit& fit, const PredictionState& state)
{
    if (state.landscape.size() != fit.classes.size() || state.weather.size() != fit.covariates.size()) {
        throw DimensionError("prediction state does not match the fitted covariates");
    }
    if (!(state.susceptible > 0.0) || !(state.population > 0.0)) {
        throw DataError("prediction needs positive susceptibles and population");
    }
    const bool smooth = fit.zero_policy == ZeroPolicy::smooth;
    const double infected = smooth ? state.infected + 1.0 : state.infected;
    if (!(infected > 0.0)) {
        throw DataError("prediction needs I(t) > 0");
    }

    double log_beta = fit.theta_density.value * state.density;
    for (std::size_t a = 0; a < fit.classes.size(); ++a) {
        log_beta += fit.theta_landscape[a].value * state.landscape[a];
    }
    for (std::size_t j = 0; j < fit.covariates.size(); ++j) {
        log_beta += fit.theta_weather[j].value * state.weather[j];
    }
    const double alpha = fit.alpha_for(state.unit_id);
    const double next =
        std::exp(log_beta + alpha * std::log(infected) + std::log(state.susceptible) - std::log(state.population));
    return smooth ? next - 1.0 : next;
}

double predict_next(const TsirFit& fit, const EpidemicPanel& panel, const geo::CoverageMatrix& coverage,
                    const std::string& unit_id, std::size_t t)
{
    const auto& u = panel.unit(unit_id);
    if (t >= panel.n_biweeks) {
        throw DataError("biweek " + std::to_string(t) + " is outside the panel");
    }
    PredictionState state;
    state.unit_id = unit_id;
    for (auto cls : fit.classes) {
        state.landscape.push_back(coverage.value(unit_id, cls));
    }
    for (std::size_t j = 0; j < fit.covariates.size(); ++j) {
        const Covariate* cov = nullptr;
        for (const auto& c : panel.covariates) {
            if (c.name == fit.covariates[j]) {
                cov = &c;
            }
        }
        if (!cov) {
            throw DataError("panel lacks covariate '" + fit.covariates[j] + "'");
        }
        const auto lag = static_cast<std::size_t>(fit.lags[j]);
        if (t < lag) {
            throw DataError("missing covariate '" + fit.covariates[j] + "' at lag " + std::to_string(lag) +
                            " for biweek " + std::to_string(t));
        }
        state.weather.push_back(cov->values[t - lag]);
    }
    state.density = u.density[t];
    state.infected = u.infected[t];
    state.susceptible = u.susceptible[t];
    state.population = u.population[t];
    return predict_next(fit, state);
}

} // namespace landtsir::epi
