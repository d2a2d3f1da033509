#include "landtsir/epi.hpp"
#include "landtsir/error.hpp"
#include "landtsir/synth.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace landtsir;
using namespace landtsir::epi;
using io::parse_date;

namespace {

const Date day0 = parse_date("2020-01-01");

Date day(int d) { return day0 + std::chrono::days(d); }

/// One-class coverage matrix over the given units.
geo::CoverageMatrix coverage_of(const std::vector<std::string>& units, const std::vector<LandscapeClass>& classes,
                                const std::vector<std::vector<double>>& values)
{
    geo::CoverageMatrix m(units, classes);
    for (std::size_t i = 0; i < units.size(); ++i) {
        for (std::size_t a = 0; a < classes.size(); ++a) {
            m.set(i, a, {values[i][a], 0, 1});
        }
    }
    return m;
}

UnitSeries series(const std::string& id, std::vector<double> infected, double n, double s0_fraction = 0.5)
{
    UnitSeries u;
    u.id = id;
    u.area_km2 = 10.0;
    const auto T = infected.size();
    u.population.assign(T, n);
    u.density.assign(T, n / u.area_km2);
    SusceptibleOptions o;
    o.s0 = s0_fraction;
    u.susceptible = reconstruct_susceptibles(infected, u.population, o, id);
    u.infected = std::move(infected);
    return u;
}

synth::ScenarioConfig small_scenario(std::uint64_t seed)
{
    synth::ScenarioConfig c;
    c.n_units = 8;
    c.n_biweeks = 60;
    c.seed = seed;
    c.round_counts = false;
    return c;
}

const std::vector<LandscapeClass> all6(raster::all_classes.begin(), raster::all_classes.end());

} // namespace

// ---------------------------------------------------------------------------
// Binning

TEST_CASE("biweek boundaries")
{
    CHECK(biweek_count(day(0), day(13)) == 1);
    CHECK(biweek_count(day(0), day(12)) == 0);
    CHECK(biweek_count(day(0), day(27)) == 2);
    CHECK(biweek_count(day(0), day(30)) == 2);

    const std::vector<std::string> ids{"a"};
    const std::vector<CaseEvent> events{{"a", day(0), 1}, {"a", day(13), 1}, {"a", day(14), 1}};
    const auto b = bin_cases(events, ids, day(0), day(41));
    REQUIRE(b.n_biweeks == 3);
    CHECK(b.series("a") == std::vector<double>{2, 1, 0});
}

TEST_CASE("no events give all-zero series")
{
    const std::vector<std::string> ids{"a", "b"};
    const auto b = bin_cases({}, ids, day(0), day(27));
    CHECK(b.series("a") == std::vector<double>{0, 0});
    CHECK(b.series("b") == std::vector<double>{0, 0});
}

TEST_CASE("bin_cases matches a naive per-event loop")
{
    std::mt19937_64 rng(41);
    const std::vector<std::string> ids{"a", "b", "c"};
    std::uniform_int_distribution<int> d(0, 99);
    std::uniform_int_distribution<std::size_t> u(0, 2);
    std::vector<CaseEvent> events;
    for (int k = 0; k < 500; ++k) {
        events.push_back({ids[u(rng)], day(d(rng)), 1.0});
    }
    const auto b = bin_cases(events, ids, day(0), day(99));
    REQUIRE(b.n_biweeks == 7);
    std::vector<std::vector<double>> naive(3, std::vector<double>(7, 0.0));
    double dropped = 0.0;
    for (const auto& e : events) {
        const auto offset = io::days_between(day(0), e.date);
        const auto unit = static_cast<std::size_t>(std::find(ids.begin(), ids.end(), e.unit_id) - ids.begin());
        if (offset / 14 < 7) {
            naive[unit][static_cast<std::size_t>(offset / 14)] += 1.0;
        } else {
            dropped += 1.0;
        }
    }
    double total = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(b.series(ids[i]) == naive[i]);
        for (double v : b.series(ids[i])) {
            total += v;
        }
    }
    CHECK(b.dropped == dropped);
    CHECK(total + b.dropped == 500.0);
}

TEST_CASE("bin_cases errors")
{
    const std::vector<std::string> ids{"a"};
    const std::vector<CaseEvent> unknown{{"z", day(1), 1}};
    CHECK_THROWS_AS(bin_cases(unknown, ids, day(0), day(27)), DataError);
    const std::vector<CaseEvent> early{{"a", day(-1), 1}};
    CHECK_THROWS_AS(bin_cases(early, ids, day(0), day(27)), DataError);
    const std::vector<CaseEvent> late{{"a", day(28), 1}};
    CHECK_THROWS_AS(bin_cases(late, ids, day(0), day(27)), DataError);
    CHECK_THROWS_AS(bin_cases({}, ids, day(5), day(0)), UsageError);
}

TEST_CASE("bin_weather worked examples")
{
    std::vector<DailyValue> temp;
    std::vector<DailyValue> rain;
    for (int d = 0; d < 14; ++d) {
        temp.push_back({day(d), 30.0});
        rain.push_back({day(d), d % 2 == 0 ? 0.0 : 5.0});
    }
    const auto bins = bin_weather(temp, rain, day(0), day(13));
    REQUIRE(bins.size() == 1);
    CHECK(bins[0].mean_temp == 30.0);
    CHECK(bins[0].rain_days == 7);

    for (auto& r : rain) {
        r.value = 0.0;
    }
    CHECK(bin_weather(temp, rain, day(0), day(13))[0].rain_days == 0);
}

TEST_CASE("bin_weather equals a per-window recomputation")
{
    std::mt19937_64 rng(42);
    std::normal_distribution<double> t(27.0, 4.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<DailyValue> temp;
    std::vector<DailyValue> rain;
    for (int d = 0; d < 80; ++d) {
        temp.push_back({day(d), t(rng)});
        rain.push_back({day(d), u(rng) < 0.3 ? 10.0 * u(rng) : 0.0});
    }
    // Shuffled input order must not matter.
    std::shuffle(temp.begin(), temp.end(), rng);
    const auto bins = bin_weather(temp, rain, day(0), day(79));
    REQUIRE(bins.size() == 5);
    std::sort(temp.begin(), temp.end(), [](const auto& a, const auto& b) { return a.date < b.date; });
    for (std::size_t k = 0; k < 5; ++k) {
        double sum = 0.0;
        int wet = 0;
        for (std::size_t d = 14 * k; d < 14 * (k + 1); ++d) {
            sum += temp[d].value;
            wet += rain[d].value > 0.0 ? 1 : 0;
        }
        CHECK(bins[k].mean_temp == doctest::Approx(sum / 14.0).epsilon(1e-12));
        CHECK(bins[k].rain_days == wet);
    }
}

TEST_CASE("bin_weather rejects a missing day in a retained biweek")
{
    std::vector<DailyValue> temp;
    std::vector<DailyValue> rain;
    for (int d = 0; d < 14; ++d) {
        if (d != 6) {
            temp.push_back({day(d), 30.0});
        }
        rain.push_back({day(d), 0.0});
    }
    CHECK_THROWS_AS(bin_weather(temp, rain, day(0), day(13)), DataError);
    // Missing days in the dropped partial biweek are fine.
    temp.insert(temp.begin() + 6, DailyValue{day(6), 30.0});
    CHECK(bin_weather(temp, rain, day(0), day(20)).size() == 1);
}

// ---------------------------------------------------------------------------
// Susceptibles and panel

TEST_CASE("susceptible reconstruction")
{
    SusceptibleOptions o;
    o.s0 = 0.1;
    const std::vector<double> n(4, 10000.0);
    CHECK(reconstruct_susceptibles(std::vector<double>(4, 0.0), n, o) == std::vector<double>(4, 1000.0));

    const std::vector<double> infected{50, 30, 20, 10};
    const auto s = reconstruct_susceptibles(infected, n, o);
    double cumulative = 0.0;
    for (std::size_t t = 0; t < infected.size(); ++t) {
        CHECK(s[t] == 1000.0 - cumulative);
        cumulative += infected[t];
    }
    CHECK(s[1] == 950.0);
    CHECK(s[2] == 920.0);

    const std::vector<double> too_many{1001, 0, 0, 0};
    CHECK_THROWS_AS(reconstruct_susceptibles(too_many, n, o, "u"), DepletionError);
    try {
        reconstruct_susceptibles(too_many, n, o, "u7");
    } catch (const DepletionError& e) {
        CHECK(std::string(e.what()).find("u7") != std::string::npos);
    }
}

TEST_CASE("birth replenishment adds a fraction of N each biweek")
{
    SusceptibleOptions o;
    o.s0 = 0.1;
    o.birth_rate = 0.01;
    const std::vector<double> n(3, 1000.0);
    const auto s = reconstruct_susceptibles(std::vector<double>{10, 5, 0}, n, o);
    CHECK(s == std::vector<double>{100, 100, 105});
}

TEST_CASE("population series is a step function over records")
{
    const std::vector<PopulationRecord> recs{{"a", day(0), 100}, {"a", day(20), 200}, {"b", day(0), 5}};
    // Biweek 1 ends on day 27, so the day-20 record applies from biweek 1.
    CHECK(population_series(recs, "a", day(0), 3) == std::vector<double>{100, 200, 200});
    CHECK_THROWS_AS(population_series(recs, "a", day(-14), 2), DataError);
}

TEST_CASE("assembled panel has exact density and S <= N")
{
    const std::vector<UnitArea> units{{"a", 4.0}};
    const std::vector<std::string> ids{"a"};
    const std::vector<CaseEvent> events{{"a", day(0), 3}, {"a", day(15), 2}};
    const auto cases = bin_cases(events, ids, day(0), day(41));
    const std::vector<WeatherBin> weather(3, WeatherBin{25.0, 2});
    const std::vector<PopulationRecord> pop{{"a", day(0), 1000}};
    const auto panel = assemble_panel(units, cases, weather, pop, day(0), {});
    const auto& u = panel.unit("a");
    CHECK(u.infected == std::vector<double>{3, 2, 0});
    CHECK(u.susceptible == std::vector<double>{100, 97, 95});
    for (std::size_t t = 0; t < 3; ++t) {
        CHECK(u.density[t] == 1000.0 / 4.0);
        CHECK(u.susceptible[t] <= u.population[t]);
    }
    REQUIRE(panel.covariates.size() == 2);
    CHECK(panel.covariates[0].name == mean_temp_name);
    CHECK(panel.covariates[1].values == std::vector<double>{2, 2, 2});
}

// ---------------------------------------------------------------------------
// Design

TEST_CASE("design hand example")
{
    EpidemicPanel p;
    p.start = day(0);
    p.n_biweeks = 2;
    UnitSeries u;
    u.id = "u";
    u.area_km2 = 10.0;
    u.infected = {10, 20};
    u.population = {1000, 1000};
    u.susceptible = {500, 490};
    u.density = {100, 100};
    p.units.push_back(u);
    p.covariates.push_back({"mean_temp", {25.0, 26.0}});
    const auto cov = coverage_of({"u"}, {LandscapeClass::buildings}, {{0.3}});
    const std::vector<LandscapeClass> classes{LandscapeClass::buildings};
    const std::vector<int> lags{0};
    const auto d = build_design(p, cov, classes, lags);
    REQUIRE(d.X.rows() == 1);
    REQUIRE(d.X.cols() == 4);
    CHECK(d.y(0) == doctest::Approx(std::log(40.0)).epsilon(1e-14));
    CHECK(d.X(0, 0) == 0.3);
    CHECK(d.X(0, 1) == 25.0);
    CHECK(d.X(0, 2) == 100.0);
    CHECK(d.X(0, 3) == doctest::Approx(std::log(10.0)).epsilon(1e-14));
    CHECK(d.column_names == std::vector<std::string>{"theta_buildings", "theta_mean_temp", "theta_density", "alpha_u"});
}

TEST_CASE("design drops zero rows and respects lags")
{
    EpidemicPanel p;
    p.start = day(0);
    p.n_biweeks = 6;
    p.units.push_back(series("u", {5, 4, 0, 6, 7, 8}, 1000));
    p.covariates.push_back({"mean_temp", {20, 21, 22, 23, 24, 25}});
    const auto cov = coverage_of({"u"}, {LandscapeClass::buildings}, {{0.5}});
    const std::vector<LandscapeClass> none;

    const std::vector<int> lag0{0};
    const auto d0 = build_design(p, cov, none, lag0);
    // Pairs (0,1) (3,4) (4,5) survive; (1,2) and (2,3) touch the zero.
    CHECK(d0.rows.size() == 3);
    CHECK(d0.dropped_zero_rows == 2);

    const std::vector<int> lag2{2};
    const auto d2 = build_design(p, cov, none, lag2);
    for (const auto& r : d2.rows) {
        CHECK(r.t >= 2);
    }
    CHECK(d2.rows.size() == 2);
    CHECK(d2.X(0, 0) == 21.0); // t = 3 reads the covariate at t = 1

    DesignOptions smooth;
    smooth.zero_policy = ZeroPolicy::smooth;
    const auto ds = build_design(p, cov, none, lag0, smooth);
    CHECK(ds.rows.size() == 5);
    CHECK(ds.y(1) == doctest::Approx(std::log(1.0) + std::log(1000.0) - std::log(p.units[0].susceptible[1])));
}

TEST_CASE("design row count matches a naive double loop")
{
    std::mt19937_64 rng(43);
    std::uniform_int_distribution<int> cases(0, 4);
    EpidemicPanel p;
    p.start = day(0);
    p.n_biweeks = 30;
    std::vector<std::string> ids;
    std::vector<std::vector<double>> cov_values;
    for (int i = 0; i < 6; ++i) {
        std::vector<double> inf(30);
        for (auto& v : inf) {
            v = cases(rng);
        }
        ids.push_back("u" + std::to_string(i));
        p.units.push_back(series(ids.back(), inf, 100000));
        cov_values.push_back({0.1 * i});
    }
    p.covariates.push_back({"mean_temp", std::vector<double>(30, 25.0)});
    p.covariates.push_back({"rain_days", std::vector<double>(30, 3.0)});
    const auto cov = coverage_of(ids, {LandscapeClass::buildings}, cov_values);
    for (const std::vector<int>& lags : {std::vector<int>{0, 0}, {1, 3}, {2, 0}}) {
        const auto d = build_design(p, cov, std::vector<LandscapeClass>{}, lags);
        std::size_t naive = 0;
        const auto max_lag = static_cast<std::size_t>(std::max(lags[0], lags[1]));
        for (const auto& u : p.units) {
            for (std::size_t t = 0; t + 1 < 30; ++t) {
                naive += t >= max_lag && u.infected[t] > 0 && u.infected[t + 1] > 0;
            }
        }
        CHECK(static_cast<std::size_t>(d.X.rows()) == naive);
    }
}

TEST_CASE("design column layout for per-unit and shared alpha")
{
    const auto s = synth::generate(small_scenario(3), false);
    const std::vector<int> lags{1, 1};
    const auto d = build_design(s.simulation.panel, s.landscape.coverage, all6, lags);
    CHECK(d.X.cols() == 6 + 2 + 1 + 8);
    DesignOptions shared;
    shared.alpha_mode = AlphaMode::shared;
    const auto ds = build_design(s.simulation.panel, s.landscape.coverage, all6, lags, shared);
    CHECK(ds.X.cols() == 6 + 2 + 1 + 1);
    CHECK(ds.column_names.back() == "alpha");
    // Every row has exactly one nonzero entry in the alpha block.
    for (Eigen::Index r = 0; r < d.X.rows(); ++r) {
        int nonzero = 0;
        for (Eigen::Index c = 9; c < d.X.cols(); ++c) {
            nonzero += d.X(r, c) != 0.0;
        }
        CHECK(nonzero <= 1);
        CHECK(d.X.row(r).tail(8).sum() == doctest::Approx(ds.X(r, 9)));
    }
}

TEST_CASE("design errors")
{
    EpidemicPanel p;
    p.start = day(0);
    p.n_biweeks = 3;
    p.units.push_back(series("u", {0, 0, 0}, 1000));
    p.covariates.push_back({"mean_temp", {1, 2, 3}});
    const auto cov = coverage_of({"u"}, {LandscapeClass::buildings}, {{0.5}});
    const std::vector<int> lag0{0};
    CHECK_THROWS_AS(build_design(p, cov, std::vector<LandscapeClass>{}, lag0), InsufficientRowsError);
    const std::vector<int> two{0, 0};
    CHECK_THROWS_AS(build_design(p, cov, std::vector<LandscapeClass>{}, two), UsageError);
    const std::vector<LandscapeClass> crops{LandscapeClass::crops};
    p.units[0] = series("u", {5, 5, 5}, 1000);
    CHECK_THROWS_AS(build_design(p, cov, crops, lag0), MissingClassError);
}

// ---------------------------------------------------------------------------
// OLS

TEST_CASE("hand-sized least squares")
{
    Eigen::MatrixXd X(3, 1);
    X << 1, 2, 3;
    Eigen::VectorXd y(3);
    y << 2, 4, 6;
    const auto r = fit_ols(X, y, std::vector<std::string>{"slope"});
    CHECK(r.coefficients(0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(r.r2 == doctest::Approx(1.0));
}

TEST_CASE("exact linear recovery")
{
    std::mt19937_64 rng(44);
    std::normal_distribution<double> z(0.0, 1.0);
    Eigen::MatrixXd X(50, 5);
    for (Eigen::Index i = 0; i < X.size(); ++i) {
        X.data()[i] = z(rng);
    }
    X.col(3) *= 1e4; // badly scaled column
    Eigen::VectorXd beta(5);
    beta << 1.5, -2.0, 0.25, 3e-4, 7.0;
    const Eigen::VectorXd y = X * beta;
    const auto r = fit_ols(X, y, std::vector<std::string>{"a", "b", "c", "d", "e"});
    for (int j = 0; j < 5; ++j) {
        CHECK(std::abs(r.coefficients(j) - beta(j)) <= 1e-8 * std::abs(beta(j)));
    }
    CHECK(r.r2 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("least squares agrees with the normal equations")
{
    std::mt19937_64 rng(45);
    std::normal_distribution<double> z(0.0, 1.0);
    Eigen::MatrixXd X(40, 4);
    for (Eigen::Index i = 0; i < X.size(); ++i) {
        X.data()[i] = z(rng);
    }
    Eigen::VectorXd y(40);
    for (Eigen::Index i = 0; i < 40; ++i) {
        y(i) = z(rng);
    }
    const auto r = fit_ols(X, y, std::vector<std::string>{"a", "b", "c", "d"});

    const Eigen::MatrixXd xtx = X.transpose() * X;
    const Eigen::VectorXd beta = xtx.ldlt().solve(X.transpose() * y);
    const Eigen::VectorXd resid = y - X * beta;
    const double sigma2 = resid.squaredNorm() / (40.0 - 4.0);
    const Eigen::MatrixXd cov = sigma2 * xtx.inverse();
    const double tss = (y.array() - y.mean()).square().sum();
    for (int j = 0; j < 4; ++j) {
        CHECK(r.coefficients(j) == doctest::Approx(beta(j)).epsilon(1e-10));
        CHECK(r.std_errors(j) == doctest::Approx(std::sqrt(cov(j, j))).epsilon(1e-10));
    }
    CHECK(r.rss == doctest::Approx(resid.squaredNorm()).epsilon(1e-10));
    CHECK(r.r2 == doctest::Approx(1.0 - resid.squaredNorm() / tss).epsilon(1e-10));
    CHECK(r.adjusted_r2 == doctest::Approx(adjusted_r2(r.r2, 40, 4)));
    CHECK(r.adjusted_r2 <= r.r2);
    CHECK((r.fitted + r.residuals - y).norm() < 1e-12);
}

TEST_CASE("noisy least squares covers the truth at 3 standard errors")
{
    std::mt19937_64 rng(46);
    std::normal_distribution<double> z(0.0, 1.0);
    Eigen::VectorXd beta(3);
    beta << 1.0, -0.5, 2.0;
    std::array<int, 3> hits{};
    for (int rep = 0; rep < 100; ++rep) {
        Eigen::MatrixXd X(60, 3);
        for (Eigen::Index i = 0; i < X.size(); ++i) {
            X.data()[i] = z(rng);
        }
        Eigen::VectorXd y = X * beta;
        for (Eigen::Index i = 0; i < 60; ++i) {
            y(i) += 0.3 * z(rng);
        }
        const auto r = fit_ols(X, y, std::vector<std::string>{"a", "b", "c"});
        for (int j = 0; j < 3; ++j) {
            hits[static_cast<std::size_t>(j)] += std::abs(r.coefficients(j) - beta(j)) <= 3.0 * r.std_errors(j);
        }
    }
    for (int h : hits) {
        CHECK(h >= 99);
    }
}

TEST_CASE("least squares error reporting")
{
    Eigen::MatrixXd X(6, 3);
    X << 1, 2, 3, 2, 1, 3, 3, 5, 8, 4, 1, 5, 5, 0, 5, 6, 2, 8;
    Eigen::VectorXd y(6);
    y << 1, 2, 3, 4, 5, 7;
    try {
        fit_ols(X, y, std::vector<std::string>{"a", "b", "a_plus_b"});
        FAIL("expected a rank-deficiency error");
    } catch (const RankDeficientError& e) {
        CHECK(std::string(e.what()).find("a_plus_b") != std::string::npos);
    }
    Eigen::MatrixXd Z = Eigen::MatrixXd::Ones(6, 2);
    Z.col(1).setZero();
    CHECK_THROWS_AS(fit_ols(Z, y, std::vector<std::string>{"one", "zero"}), RankDeficientError);

    Eigen::MatrixXd small(3, 2);
    small << 1, 2, 3, 4, 5, 7;
    try {
        fit_ols(small, y.head(3), std::vector<std::string>{"a", "b"});
        FAIL("expected insufficient rows");
    } catch (const InsufficientRowsError& e) {
        CHECK(std::string(e.what()).find("insufficient rows") != std::string::npos);
    }
}

TEST_CASE("adjusted R^2 formula")
{
    CHECK(adjusted_r2(0.728, 100, 9) == doctest::Approx(0.7008).epsilon(1e-4));
    CHECK(std::abs(adjusted_r2(0.728, 100, 9) - (1.0 - 0.272 * 99.0 / 90.0)) < 1e-12);
    CHECK(adjusted_r2(1.0, 20, 5) == 1.0);
    CHECK(adjusted_r2(0.4, 20, 0) == doctest::Approx(0.4));
    CHECK_THROWS_AS(adjusted_r2(0.5, 10, 9), DataError);
    for (std::size_t p = 1; p < 10; ++p) {
        CHECK(adjusted_r2(0.6, 30, p) <= 0.6);
    }
}

// ---------------------------------------------------------------------------
// Fit properties on simulated data

TEST_CASE("noiseless simulated panel recovers every coefficient")
{
    const auto cfg = small_scenario(5);
    const auto s = synth::generate(cfg, false);
    const std::vector<int> lags{cfg.lag_temp, cfg.lag_rain};
    const auto f = fit(build_design(s.simulation.panel, s.landscape.coverage, all6, lags));
    for (std::size_t a = 0; a < 6; ++a) {
        CHECK(f.theta_landscape[a].value == doctest::Approx(cfg.theta_landscape[a]).epsilon(1e-6));
    }
    CHECK(f.theta_weather[0].value == doctest::Approx(cfg.theta_temp).epsilon(1e-6));
    CHECK(f.theta_weather[1].value == doctest::Approx(cfg.theta_rain).epsilon(1e-6));
    CHECK(f.theta_density.value == doctest::Approx(cfg.theta_density).epsilon(1e-6));
    for (std::size_t k = 0; k < cfg.n_units; ++k) {
        CHECK(f.alpha[k].value == doctest::Approx(s.simulation.alpha[k]).epsilon(1e-6));
        CHECK(f.alpha_for(f.alpha_units[k]) == f.alpha[k].value);
    }
    CHECK(f.n_params == 6 + 2 + 1 + cfg.n_units);
    CHECK(f.adjusted_r2 <= f.r2);
}

TEST_CASE("rescaling a landscape column rescales only its coefficient")
{
    auto cfg = small_scenario(6);
    cfg.noise_sigma = 0.2;
    const auto s = synth::generate(cfg, false);
    const std::vector<int> lags{1, 1};
    const auto base = fit(build_design(s.simulation.panel, s.landscape.coverage, all6, lags));

    auto scaled_cov = s.landscape.coverage;
    const double c = 7.5;
    for (std::size_t i = 0; i < scaled_cov.units().size(); ++i) {
        auto cell = scaled_cov.cell(i, 2);
        cell.fraction *= c;
        scaled_cov.set(i, 2, cell);
    }
    const auto scaled = fit(build_design(s.simulation.panel, scaled_cov, all6, lags));
    CHECK(scaled.theta_landscape[2].value == doctest::Approx(base.theta_landscape[2].value / c).epsilon(1e-9));
    CHECK(scaled.r2 == doctest::Approx(base.r2).epsilon(1e-9));
    CHECK(scaled.adjusted_r2 == doctest::Approx(base.adjusted_r2).epsilon(1e-9));
    for (std::size_t r = 0; r < base.fitted.size(); ++r) {
        CHECK(std::abs(scaled.fitted[r] - base.fitted[r]) < 1e-9);
        CHECK(std::abs(scaled.residuals[r] - base.residuals[r]) < 1e-9);
    }
}

TEST_CASE("adding a landscape feature never lowers R^2")
{
    auto cfg = small_scenario(7);
    cfg.noise_sigma = 0.3;
    const auto s = synth::generate(cfg, false);
    const std::vector<int> lags{1, 1};
    std::vector<LandscapeClass> classes;
    double previous = fit(build_design(s.simulation.panel, s.landscape.coverage, classes, lags)).r2;
    for (auto cls : raster::all_classes) {
        classes.push_back(cls);
        const double r2 = fit(build_design(s.simulation.panel, s.landscape.coverage, classes, lags)).r2;
        CHECK(r2 >= previous - 1e-12);
        previous = r2;
    }
}

// ---------------------------------------------------------------------------
// Prediction

TEST_CASE("prediction inverts a noiseless simulation")
{
    const auto cfg = small_scenario(8);
    const auto s = synth::generate(cfg, false);
    const std::vector<int> lags{cfg.lag_temp, cfg.lag_rain};
    const auto& panel = s.simulation.panel;
    const auto f = fit(build_design(panel, s.landscape.coverage, all6, lags));
    for (const auto& u : panel.units) {
        for (std::size_t t = 1; t + 1 < panel.n_biweeks; t += 7) {
            const double got = predict_next(f, panel, s.landscape.coverage, u.id, t);
            CHECK(got == doctest::Approx(u.infected[t + 1]).epsilon(1e-6));
        }
    }
    CHECK_THROWS_AS(predict_next(f, panel, s.landscape.coverage, panel.units[0].id, 0), DataError);
}

TEST_CASE("prediction fixed point and S/N invariance")
{
    TsirFit f;
    f.classes = {LandscapeClass::buildings};
    f.theta_landscape = {{0.0, 0.0}};
    f.covariates = {"mean_temp"};
    f.lags = {0};
    f.theta_weather = {{0.0, 0.0}};
    f.theta_density = {0.0, 0.0};
    f.alpha_units = {"u"};
    f.alpha = {{1.0, 0.0}};
    PredictionState st{"u", {0.4}, {25.0}, 100.0, 37.0, 500.0, 500.0};
    CHECK(predict_next(f, st) == doctest::Approx(37.0).epsilon(1e-14));

    f.theta_landscape = {{0.7, 0.0}};
    f.theta_weather = {{0.02, 0.0}};
    f.alpha = {{0.8, 0.0}};
    st.susceptible = 120.0;
    const double a = predict_next(f, st);
    st.susceptible *= 2.0;
    st.population *= 2.0;
    CHECK(predict_next(f, st) == doctest::Approx(a).epsilon(1e-14));
}

// ---------------------------------------------------------------------------
// Evaluation

TEST_CASE("stratification by mean building coverage")
{
    const std::vector<LandscapeClass> b{LandscapeClass::buildings};
    auto s = stratify_units(coverage_of({"one", "two"}, b, {{0.8}, {0.2}}));
    CHECK(s.more_urban == std::vector<std::string>{"one"});
    CHECK(s.less_urban == std::vector<std::string>{"two"});

    s = stratify_units(coverage_of({"a", "b", "c"}, b, {{0.3}, {0.3}, {0.3}}));
    CHECK(s.more_urban.empty());
    CHECK(s.less_urban.size() == 3);

    CHECK_THROWS_AS(stratify_units(coverage_of({"a"}, {LandscapeClass::roads}, {{0.3}})), MissingClassError);
}

TEST_CASE("stratification matches a mean-comparison oracle and partitions the units")
{
    std::mt19937_64 rng(47);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + trial % 12;
        std::vector<std::string> ids;
        std::vector<std::vector<double>> v;
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            ids.push_back("u" + std::to_string(i));
            v.push_back({u(rng), u(rng)});
            mean += v.back()[1];
        }
        mean /= static_cast<double>(n);
        const auto s =
            stratify_units(coverage_of(ids, {LandscapeClass::roads, LandscapeClass::buildings}, v));
        CHECK(s.more_urban.size() + s.less_urban.size() == n);
        for (std::size_t i = 0; i < n; ++i) {
            const bool more = std::find(s.more_urban.begin(), s.more_urban.end(), ids[i]) != s.more_urban.end();
            const bool less = std::find(s.less_urban.begin(), s.less_urban.end(), ids[i]) != s.less_urban.end();
            CHECK(more != less);
            CHECK(more == (v[i][1] > mean));
        }
    }
}

TEST_CASE("ablation cells equal independent fits")
{
    auto cfg = small_scenario(9);
    cfg.n_units = 10;
    cfg.noise_sigma = 0.1;
    const auto s = synth::generate(cfg, false);
    const std::vector<int> lags{1, 1};
    AblationOptions opts;
    opts.threads = 3;
    const auto table = ablate(s.simulation.panel, s.landscape.coverage, lags, opts);
    const auto strata = stratify_units(s.landscape.coverage);
    CHECK(table.strata.more_urban == strata.more_urban);

    for (auto set : all_feature_sets) {
        for (auto stratum : all_strata) {
            DesignOptions d;
            d.units = stratum == Stratum::all        ? s.simulation.panel.unit_ids()
                      : stratum == Stratum::more_urban ? strata.more_urban
                                                       : strata.less_urban;
            const auto& cell = table.at(set, stratum);
            try {
                const auto f = fit(build_design(s.simulation.panel, s.landscape.coverage, feature_classes(set), lags, d));
                REQUIRE(cell.adjusted_r2.has_value());
                CHECK(*cell.adjusted_r2 == f.adjusted_r2);
                CHECK(cell.p == f.n_params);
            } catch (const DataError&) {
                CHECK_FALSE(cell.adjusted_r2.has_value());
            }
        }
    }
    // The environment-only model carries no landscape columns.
    CHECK(table.at(FeatureSet::environment_only, Stratum::all).p == 2 + 1 + cfg.n_units);
    CHECK(table.at(FeatureSet::all_landscape, Stratum::all).p == 6 + 2 + 1 + cfg.n_units);

    opts.stratify = false;
    const auto flat = ablate(s.simulation.panel, s.landscape.coverage, lags, opts);
    CHECK_FALSE(flat.at(FeatureSet::building, Stratum::more_urban).adjusted_r2.has_value());
    CHECK(flat.at(FeatureSet::building, Stratum::all).adjusted_r2 ==
          table.at(FeatureSet::building, Stratum::all).adjusted_r2);
}

TEST_CASE("buildings-only scenario: building row wins, crops row tracks environment")
{
    synth::ScenarioConfig cfg;
    cfg.theta_landscape = {5.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    cfg.weather.temp_amplitude = 6.0;
    cfg.noise_sigma = 0.1;
    const auto s = synth::generate(cfg, false);
    const std::vector<int> lags{1, 1};
    const auto table = ablate(s.simulation.panel, s.landscape.coverage, lags);
    const double env = *table.at(FeatureSet::environment_only, Stratum::all).adjusted_r2;
    CHECK(*table.at(FeatureSet::building, Stratum::all).adjusted_r2 > env);
    CHECK(std::abs(*table.at(FeatureSet::crops, Stratum::all).adjusted_r2 - env) < 0.01);
    CHECK(table.best(Stratum::all, true) == FeatureSet::building);
}

TEST_CASE("lag search")
{
    auto cfg = small_scenario(10);
    cfg.lag_temp = 2;
    cfg.noise_sigma = 0.05;
    cfg.weather.temp_amplitude = 6.0;
    const auto s = synth::generate(cfg, false);
    const auto& panel = s.simulation.panel;

    const std::vector<std::vector<int>> zero{{0}, {0}};
    CHECK(lag_search(panel, s.landscape.coverage, zero).lags == std::vector<int>{0, 0});

    const std::vector<std::vector<int>> grid{{0, 1, 2, 3}, {0, 1, 2, 3}};
    const auto found = lag_search(panel, s.landscape.coverage, grid);
    CHECK(found.lags == std::vector<int>{2, 1});

    const std::vector<std::vector<int>> empty{{}, {0}};
    CHECK_THROWS_AS(lag_search(panel, s.landscape.coverage, empty), UsageError);
}

TEST_CASE("lag search breaks ties toward the smaller lag")
{
    // A covariate with period 2 gives identical columns at lags 0 and 2.
    auto cfg = small_scenario(11);
    cfg.noise_sigma = 0.1;
    const auto s = synth::generate(cfg, false);
    auto panel = s.simulation.panel;
    for (std::size_t t = 0; t < panel.n_biweeks; ++t) {
        panel.covariates[1].values[t] = t % 2 == 0 ? 2.0 : 5.0;
    }
    const std::vector<std::vector<int>> grid{{1}, {2, 0}};
    CHECK(lag_search(panel, s.landscape.coverage, grid).lags == std::vector<int>{1, 0});
}
