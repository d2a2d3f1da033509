#include "landtsir/error.hpp"
#include "landtsir/raster.hpp"

#include <algorithm>
#include <cmath>

namespace landtsir::raster {

namespace {

void check_sizes(std::span<const double> pred, std::span<const double> truth)
{
    if (pred.size() != truth.size()) {
        throw DimensionError("prediction has " + std::to_string(pred.size()) + " pixels, truth has " +
                             std::to_string(truth.size()));
    }
    if (pred.empty()) {
        throw DimensionError("empty maps");
    }
}

void check_same_grid(const ProbabilityRaster& pred, const ProbabilityRaster& truth)
{
    if (pred.width() != truth.width() || pred.height() != truth.height()) {
        throw DimensionError("raster dimensions differ: " + std::to_string(pred.width()) + "x" +
                             std::to_string(pred.height()) + " vs " + std::to_string(truth.width()) + "x" +
                             std::to_string(truth.height()));
    }
}

bool is_binary(double v) { return v == 0.0 || v == 1.0; }

} // namespace

double jaccard(std::span<const double> pred, std::span<const double> truth, JaccardMode mode)
{
    check_sizes(pred, truth);
    if (mode == JaccardMode::hard) {
        std::size_t inter = 0;
        std::size_t uni = 0;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            if (!is_binary(pred[i]) || !is_binary(truth[i])) {
                throw DataError("hard Jaccard requires binarized maps");
            }
            const bool a = pred[i] == 1.0;
            const bool b = truth[i] == 1.0;
            inter += (a && b) ? 1 : 0;
            uni += (a || b) ? 1 : 0;
        }
        return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
    }

    double sp = 0.0;
    double sy = 0.0;
    double spy = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        sp += pred[i];
        sy += truth[i];
        spy += pred[i] * truth[i];
    }
    const double denom = sp + sy - spy;
    return denom == 0.0 ? 1.0 : spy / denom;
}

double jaccard(const ProbabilityRaster& pred, const ProbabilityRaster& truth, JaccardMode mode)
{
    check_same_grid(pred, truth);
    return jaccard(pred.values(), truth.values(), mode);
}

double binary_cross_entropy(std::span<const double> pred, std::span<const double> truth)
{
    check_sizes(pred, truth);
    double total = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!is_binary(truth[i])) {
            throw DataError("cross-entropy truth must be binary");
        }
        const double p = std::clamp(pred[i], probability_epsilon, 1.0 - probability_epsilon);
        total -= truth[i] == 1.0 ? std::log(p) : std::log1p(-p);
    }
    return total / static_cast<double>(pred.size());
}

double binary_cross_entropy(const ProbabilityRaster& pred, const ProbabilityRaster& truth)
{
    check_same_grid(pred, truth);
    return binary_cross_entropy(pred.values(), truth.values());
}

double segmentation_loss(std::span<const double> pred, std::span<const double> truth)
{
    const double bce = binary_cross_entropy(pred, truth);
    const double j = std::max(jaccard(pred, truth, JaccardMode::soft), probability_epsilon);
    return bce - std::log(j);
}

double segmentation_loss(const ProbabilityRaster& pred, const ProbabilityRaster& truth)
{
    check_same_grid(pred, truth);
    return segmentation_loss(pred.values(), truth.values());
}

} // namespace landtsir::raster
