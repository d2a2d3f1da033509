#pragma once

#include "landtsir/geo.hpp"
#include "landtsir/io.hpp"

#include <Eigen/Dense>

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace landtsir::epi {

using io::Date;
using raster::LandscapeClass;

inline constexpr int biweek_days = 14;

/// Number of whole biweeks in the inclusive day range [start, end]; a
/// trailing partial interval is not counted.
std::size_t biweek_count(Date start, Date end);

// ---------------------------------------------------------------------------
// Binning

struct CaseEvent {
    std::string unit_id;
    Date date;
    double count = 1.0;
};

struct BinnedCases {
    std::size_t n_biweeks = 0;
    /// One series per known unit, in the order the unit ids were given.
    std::vector<std::string> unit_ids;
    std::vector<std::vector<double>> counts;
    /// Cases that fell in the dropped trailing partial biweek.
    double dropped = 0.0;

    const std::vector<double>& series(const std::string& unit_id) const;
};

/// Biweek k covers days [start + 14k, start + 14(k+1)). Throws DataError for
/// events outside [start, end] or naming an unknown unit.
BinnedCases bin_cases(std::span<const CaseEvent> events, std::span<const std::string> unit_ids, Date start,
                      Date end);

struct DailyValue {
    Date date;
    double value = 0.0;
};

struct WeatherBin {
    double mean_temp = 0.0;
    int rain_days = 0;
};

/// Mean of the 14 daily temperatures and the number of days with
/// precipitation > 0 mm, per retained biweek. Throws DataError when a day of
/// a retained biweek is missing.
std::vector<WeatherBin> bin_weather(std::span<const DailyValue> daily_temp, std::span<const DailyValue> daily_rain,
                                    Date start, Date end);

// ---------------------------------------------------------------------------
// Panel

struct SusceptibleOptions {
    /// Initial susceptible fraction of the population.
    double s0 = 0.1;
    /// Per-biweek replenishment as a fraction of N(t).
    double birth_rate = 0.0;
};

/// S(0) = round(s0 * N(0)); S(t+1) = S(t) - I(t) + birth_rate * N(t).
/// Throws DepletionError at the first t with S(t) < I(t).
std::vector<double> reconstruct_susceptibles(std::span<const double> infected, std::span<const double> population,
                                             const SusceptibleOptions& options, const std::string& unit_id = "");

struct UnitSeries {
    std::string id;
    double area_km2 = 0.0;
    std::vector<double> infected;
    std::vector<double> susceptible;
    std::vector<double> population;
    /// population / area_km2
    std::vector<double> density;
};

/// Covariate names used for the binned weather series.
inline constexpr const char* mean_temp_name = "mean_temp";
inline constexpr const char* rain_days_name = "rain_days";

struct Covariate {
    std::string name;
    std::vector<double> values;
};

struct EpidemicPanel {
    Date start{};
    std::size_t n_biweeks = 0;
    std::vector<UnitSeries> units;
    std::vector<Covariate> covariates;

    /// Throws DataError when a series is misaligned or S > N, N <= 0, I < 0.
    void validate() const;
    const UnitSeries& unit(const std::string& id) const;
    std::vector<std::string> unit_ids() const;
};

std::vector<Covariate> weather_covariates(std::span<const WeatherBin> bins);

struct PopulationRecord {
    std::string unit_id;
    Date date;
    double population = 0.0;
};

/// Population for biweek t is the latest record dated on or before the last
/// day of that biweek.
std::vector<double> population_series(std::span<const PopulationRecord> records, const std::string& unit_id,
                                      Date start, std::size_t n_biweeks);

struct UnitArea {
    std::string id;
    double area_km2 = 0.0;
};

EpidemicPanel assemble_panel(std::span<const UnitArea> units, const BinnedCases& cases,
                             std::span<const WeatherBin> weather, std::span<const PopulationRecord> population,
                             Date start, const SusceptibleOptions& options);

// ---------------------------------------------------------------------------
// Design matrix and fitting

enum class ZeroPolicy {
    /// Rows with I = 0 at t or t+1 are dropped.
    drop,
    /// log(I + 1) everywhere.
    smooth,
};

enum class AlphaMode { per_unit, shared };

struct DesignOptions {
    ZeroPolicy zero_policy = ZeroPolicy::drop;
    AlphaMode alpha_mode = AlphaMode::per_unit;
    /// Restrict to these units; empty means every panel unit.
    std::vector<std::string> units;
    /// Earliest t considered, on top of the max-lag constraint.
    std::size_t first_t = 0;
};

struct RowKey {
    std::size_t unit = 0; ///< index into EpidemicPanel::units
    std::size_t t = 0;
};

struct Design {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    std::vector<RowKey> rows;
    std::vector<std::string> column_names;

    std::vector<LandscapeClass> classes;
    std::vector<std::string> covariates;
    std::vector<int> lags;
    /// Units owning an alpha column (per-unit mode), in column order.
    std::vector<std::string> alpha_units;
    AlphaMode alpha_mode = AlphaMode::per_unit;
    ZeroPolicy zero_policy = ZeroPolicy::drop;
    std::size_t dropped_zero_rows = 0;
};

/// One row per (i, t) with t >= max lag and t + 1 in range:
///   y = log I(t+1) + log N(t) - log S(t)
///   X = [L(i, a) for a in classes] ++ [E_j(t - l_j)] ++ [D(t)] ++ alpha block
/// The alpha block holds log I(t) in unit i's column (or one shared column).
/// There is no global intercept. `lags` aligns with panel.covariates.
Design build_design(const EpidemicPanel& panel, const geo::CoverageMatrix& coverage,
                    std::span<const LandscapeClass> classes, std::span<const int> lags,
                    const DesignOptions& options = {});

struct OlsResult {
    Eigen::VectorXd coefficients;
    Eigen::VectorXd std_errors;
    Eigen::VectorXd fitted;
    Eigen::VectorXd residuals;
    double rss = 0.0;
    double r2 = 0.0;
    double adjusted_r2 = 0.0;
    std::size_t n = 0;
    std::size_t p = 0;
};

/// Least squares through a column-pivoted Householder QR on unit-norm
/// columns. Throws InsufficientRowsError when n < p + 2 and
/// RankDeficientError naming the first dependent column.
OlsResult fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::span<const std::string> column_names);

/// 1 - (1 - r2)(n - 1)/(n - p - 1). Throws DataError when n <= p + 1.
double adjusted_r2(double r2, std::size_t n, std::size_t p);

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
};

struct TsirFit {
    std::vector<LandscapeClass> classes;
    std::vector<Estimate> theta_landscape;
    std::vector<std::string> covariates;
    std::vector<int> lags;
    std::vector<Estimate> theta_weather;
    Estimate theta_density;
    AlphaMode alpha_mode = AlphaMode::per_unit;
    ZeroPolicy zero_policy = ZeroPolicy::drop;
    /// Per-unit mode: one entry per alpha unit. Shared mode: single entry "*".
    std::vector<std::string> alpha_units;
    std::vector<Estimate> alpha;

    double r2 = 0.0;
    double adjusted_r2 = 0.0;
    std::size_t n_rows = 0;
    std::size_t n_params = 0;
    std::vector<RowKey> rows;
    std::vector<double> observed;
    std::vector<double> fitted;
    std::vector<double> residuals;

    /// Alpha for a unit; throws DataError when the unit had no rows.
    double alpha_for(const std::string& unit_id) const;
};

TsirFit fit(const Design& design);

// ---------------------------------------------------------------------------
// Prediction

struct PredictionState {
    std::string unit_id;
    /// Aligned with fit.classes.
    std::vector<double> landscape;
    /// Aligned with fit.covariates, already taken at t - l_j.
    std::vector<double> weather;
    double density = 0.0;
    double infected = 0.0;
    double susceptible = 0.0;
    double population = 0.0;
};

/// Conditional median of I(t+1): exp(log beta + alpha log I + log S - log N).
double predict_next(const TsirFit& fit, const PredictionState& state);

/// Builds the state for (unit, t) from the panel. Throws DataError when a
/// covariate would be read before the first biweek.
double predict_next(const TsirFit& fit, const EpidemicPanel& panel, const geo::CoverageMatrix& coverage,
                    const std::string& unit_id, std::size_t t);

// ---------------------------------------------------------------------------
// Evaluation

struct Strata {
    std::vector<std::string> more_urban;
    std::vector<std::string> less_urban;
};

/// more_urban iff building coverage is strictly above the mean over units.
Strata stratify_units(const geo::CoverageMatrix& coverage);

enum class FeatureSet { environment_only, all_landscape, building, road, trees, crops, waterway, standing_water };
inline constexpr std::array<FeatureSet, 8> all_feature_sets{
    FeatureSet::environment_only, FeatureSet::all_landscape, FeatureSet::building, FeatureSet::road,
    FeatureSet::trees,            FeatureSet::crops,         FeatureSet::waterway, FeatureSet::standing_water,
};
std::string_view to_string(FeatureSet set) noexcept;
std::vector<LandscapeClass> feature_classes(FeatureSet set);
bool is_single_feature(FeatureSet set) noexcept;

enum class Stratum { all, more_urban, less_urban };
inline constexpr std::array<Stratum, 3> all_strata{Stratum::all, Stratum::more_urban, Stratum::less_urban};
std::string_view to_string(Stratum stratum) noexcept;

struct AblationCell {
    std::optional<double> adjusted_r2;
    std::size_t n = 0;
    std::size_t p = 0;
    /// Why the cell is missing.
    std::string note;
};

struct AblationTable {
    std::array<std::array<AblationCell, 3>, 8> cells;
    Strata strata;

    const AblationCell& at(FeatureSet set, Stratum stratum) const;
    /// Feature set with the highest adjusted R^2 in the column, optionally
    /// among single-feature rows only. First in row order wins ties.
    std::optional<FeatureSet> best(Stratum stratum, bool single_only) const;
};

struct AblationOptions {
    DesignOptions design;
    bool stratify = true;
    int threads = 1;
};

/// Refits every (feature set, stratum) cell on that stratum's units.
AblationTable ablate(const EpidemicPanel& panel, const geo::CoverageMatrix& coverage, std::span<const int> lags,
                     const AblationOptions& options = {});

struct LagSearchResult {
    std::vector<int> lags;
    double adjusted_r2 = 0.0;
};

/// Exhaustive search over the Cartesian product of per-covariate lag sets,
/// maximizing adjusted R^2 of the all-landscape model. Every candidate is
/// fitted on the same rows (t >= largest lag in the grid). Ties go to the
/// lexicographically smallest lag vector.
LagSearchResult lag_search(const EpidemicPanel& panel, const geo::CoverageMatrix& coverage,
                           std::span<const std::vector<int>> grid, const DesignOptions& options = {});

} // namespace landtsir::epi
