#include "landtsir/epi.hpp"
#include "landtsir/error.hpp"

#include <Eigen/QR>

#include <cmath>

namespace landtsir::epi {

namespace {

// |R_kk| below this fraction of the largest pivot marks a dependent column.
constexpr double rank_tolerance = 1e-10;

std::string column_label(std::span<const std::string> names, Eigen::Index j)
{
    if (static_cast<std::size_t>(j) < names.size()) {
        return names[static_cast<std::size_t>(j)];
    }
    return "column " + std::to_string(j);
}

} // namespace

double adjusted_r2(double r2, std::size_t n, std::size_t p)
{
    if (n <= p + 1) {
        throw InsufficientRowsError("insufficient rows: adjusted R^2 needs n > p + 1 (n = " + std::to_string(n) +
                                    ", p = " + std::to_string(p) + ")");
    }
    const double nd = static_cast<double>(n);
    const double pd = static_cast<double>(p);
    return 1.0 - (1.0 - r2) * (nd - 1.0) / (nd - pd - 1.0);
}

OlsResult fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::span<const std::string> column_names)
{
    const auto n = X.rows();
    const auto p = X.cols();
    if (y.size() != n) {
        throw DimensionError("design has " + std::to_string(n) + " rows but response has " +
                             std::to_string(y.size()));
    }
    if (p == 0) {
        throw UsageError("design has no columns");
    }
    if (n < p + 2) {
        throw InsufficientRowsError("insufficient rows: " + std::to_string(n) + " rows for " + std::to_string(p) +
                                    " parameters");
    }

    // Equilibrate columns to unit norm; the QR then sees comparable scales and
    // the result is invariant to rescaling any predictor.
    Eigen::VectorXd scale(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        scale(j) = X.col(j).norm();
        if (scale(j) == 0.0) {
            throw RankDeficientError(column_label(column_names, j));
        }
    }
    const Eigen::MatrixXd Xs = X * scale.cwiseInverse().asDiagonal();

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xs);
    qr.setThreshold(rank_tolerance);
    if (qr.rank() < p) {
        throw RankDeficientError(column_label(column_names, qr.colsPermutation().indices()(qr.rank())));
    }

    OlsResult out;
    out.n = static_cast<std::size_t>(n);
    out.p = static_cast<std::size_t>(p);
    const Eigen::VectorXd beta_scaled = qr.solve(y);
    out.coefficients = beta_scaled.cwiseQuotient(scale);
    out.fitted = Xs * beta_scaled;
    out.residuals = y - out.fitted;
    out.rss = out.residuals.squaredNorm();

    const double tss = (y.array() - y.mean()).square().sum();
    if (!(tss > 0.0)) {
        throw DataError("response is constant; R^2 is undefined");
    }
    out.r2 = 1.0 - out.rss / tss;
    out.adjusted_r2 = adjusted_r2(out.r2, out.n, out.p);

    // cov(beta_scaled) = sigma^2 P (R^T R)^{-1} P^T
    const double sigma2 = out.rss / static_cast<double>(n - p);
    const Eigen::MatrixXd R = qr.matrixR().topLeftCorner(p, p).template triangularView<Eigen::Upper>();
    const Eigen::MatrixXd Rinv =
        R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
    const Eigen::VectorXd diag_perm = Rinv.rowwise().squaredNorm();
    out.std_errors.resize(p);
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index k = 0; k < p; ++k) {
        const Eigen::Index j = perm(k);
        out.std_errors(j) = std::sqrt(sigma2 * diag_perm(k)) / scale(j);
    }
    return out;
}

double TsirFit::alpha_for(const std::string& unit_id) const
{
    if (alpha_mode == AlphaMode::shared) {
        return alpha.front().value;
    }
    for (std::size_t k = 0; k < alpha_units.size(); ++k) {
        if (alpha_units[k] == unit_id) {
            return alpha[k].value;
        }
    }
    throw DataError("no fitted alpha for unit '" + unit_id + "'");
}

TsirFit fit(const Design& design)
{
    const OlsResult ols = fit_ols(design.X, design.y, design.column_names);

    TsirFit f;
    f.classes = design.classes;
    f.covariates = design.covariates;
    f.lags = design.lags;
    f.alpha_mode = design.alpha_mode;
    f.zero_policy = design.zero_policy;

    Eigen::Index col = 0;
    auto take = [&] {
        const Estimate e{ols.coefficients(col), ols.std_errors(col)};
        ++col;
        return e;
    };
    for (std::size_t a = 0; a < design.classes.size(); ++a) {
        f.theta_landscape.push_back(take());
    }
    for (std::size_t j = 0; j < design.covariates.size(); ++j) {
        f.theta_weather.push_back(take());
    }
    f.theta_density = take();
    if (design.alpha_mode == AlphaMode::per_unit) {
        f.alpha_units = design.alpha_units;
    } else {
        f.alpha_units = {"*"};
    }
    for (std::size_t k = 0; k < f.alpha_units.size(); ++k) {
        f.alpha.push_back(take());
    }

    f.r2 = ols.r2;
    f.adjusted_r2 = ols.adjusted_r2;
    f.n_rows = ols.n;
    f.n_params = ols.p;
    f.rows = design.rows;
    f.observed.assign(design.y.data(), design.y.data() + design.y.size());
    f.fitted.assign(ols.fitted.data(), ols.fitted.data() + ols.fitted.size());
    f.residuals.assign(ols.residuals.data(), ols.residuals.data() + ols.residuals.size());
    return f;
}

} // namespace landtsir::epi
