#include "landtsir/error.hpp"
#include "landtsir/geo.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>
#include <tuple>

namespace landtsir::geo {

namespace {

std::string describe(const ProbabilityRaster& r, std::size_t index)
{
    const auto& g = r.georef();
    char buf[200];
    std::snprintf(buf, sizeof buf, "#%zu %s [%.9g, %.9g, %.9g, %.9g]", index,
                  std::string(raster::to_string(r.landscape_class())).c_str(), g.lon_min, g.lat_min, g.lon_max,
                  g.lat_max);
    return buf;
}

auto bbox_key(const raster::GeoReference& g)
{
    return std::make_tuple(g.lon_min, g.lat_min, g.lon_max, g.lat_max, g.width, g.height);
}

// Canonical processing order so floating accumulation is order independent.
std::vector<const ProbabilityRaster*> canonical_order(std::span<const ProbabilityRaster> rasters)
{
    std::vector<const ProbabilityRaster*> order;
    order.reserve(rasters.size());
    for (const auto& r : rasters) {
        order.push_back(&r);
    }
    std::stable_sort(order.begin(), order.end(), [](const auto* a, const auto* b) {
        return bbox_key(a->georef()) < bbox_key(b->georef());
    });
    return order;
}

} // namespace

void detect_overlap(std::span<const ProbabilityRaster> rasters)
{
    if (rasters.empty()) {
        throw DataError("no rasters supplied");
    }
    for (std::size_t i = 0; i < rasters.size(); ++i) {
        const auto& a = rasters[i].georef();
        for (std::size_t j = i + 1; j < rasters.size(); ++j) {
            const auto& b = rasters[j].georef();
            const double w = std::min(a.lon_max, b.lon_max) - std::max(a.lon_min, b.lon_min);
            const double h = std::min(a.lat_max, b.lat_max) - std::max(a.lat_min, b.lat_min);
            if (w > 0.0 && h > 0.0) {
                throw OverlapError(describe(rasters[i], i), describe(rasters[j], j));
            }
        }
    }
}

Coverage coverage(std::span<const ProbabilityRaster> rasters, const SpatialUnit& unit, double threshold,
                  CoverageMode mode)
{
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
        throw UsageError("threshold must lie in [0, 1]");
    }
    detect_overlap(rasters);

    Coverage out;
    double probability_sum = 0.0;
    for (const ProbabilityRaster* r : canonical_order(rasters)) {
        const auto& g = r->georef();
        if (g.lon_max < unit.lon_min() || g.lon_min > unit.lon_max() || g.lat_max < unit.lat_min() ||
            g.lat_min > unit.lat_max()) {
            continue;
        }
        const auto& grid = r->grid();
        for (int row = 0; row < g.height; ++row) {
            for (int col = 0; col < g.width; ++col) {
                if (!unit.contains(g.pixel_center(col, row))) {
                    continue;
                }
                const double p = grid.at(col, row);
                ++out.total;
                if (p >= threshold) {
                    ++out.positive;
                }
                probability_sum += p;
            }
        }
    }
    if (out.total == 0) {
        throw EmptyUnitError(unit.id());
    }
    out.fraction = mode == CoverageMode::threshold
                       ? static_cast<double>(out.positive) / static_cast<double>(out.total)
                       : probability_sum / static_cast<double>(out.total);
    return out;
}

CoverageMatrix::CoverageMatrix(std::vector<std::string> units, std::vector<LandscapeClass> classes)
    : units_(std::move(units))
    , classes_(std::move(classes))
    , cells_(units_.size() * classes_.size())
{
}

std::optional<std::size_t> CoverageMatrix::unit_index(const std::string& id) const
{
    const auto it = std::find(units_.begin(), units_.end(), id);
    if (it == units_.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - units_.begin());
}

std::size_t CoverageMatrix::class_index(LandscapeClass cls) const
{
    const auto it = std::find(classes_.begin(), classes_.end(), cls);
    if (it == classes_.end()) {
        throw MissingClassError(std::string(raster::to_string(cls)));
    }
    return static_cast<std::size_t>(it - classes_.begin());
}

bool CoverageMatrix::has_class(LandscapeClass cls) const
{
    return std::find(classes_.begin(), classes_.end(), cls) != classes_.end();
}

double CoverageMatrix::value(const std::string& unit_id, LandscapeClass cls) const
{
    const auto u = unit_index(unit_id);
    if (!u) {
        throw DataError("no coverage for unit '" + unit_id + "'");
    }
    return value(*u, class_index(cls));
}

CoverageMatrix coverage_matrix(const RastersByClass& rasters, std::span<const SpatialUnit> units,
                               std::span<const LandscapeClass> classes, const CoverageOptions& options)
{
    if (classes.empty()) {
        throw UsageError("no landscape classes requested");
    }
    std::vector<std::vector<std::tuple<double, double, double, double, int, int>>> keys;
    for (auto cls : classes) {
        const auto it = rasters.find(cls);
        if (it == rasters.end() || it->second.empty()) {
            throw MissingClassError(std::string(raster::to_string(cls)));
        }
        detect_overlap(it->second);
        auto& k = keys.emplace_back();
        for (const auto& r : it->second) {
            k.push_back(bbox_key(r.georef()));
        }
        std::sort(k.begin(), k.end());
        if (k != keys.front()) {
            throw DataError("class '" + std::string(raster::to_string(cls)) + "' rasters do not share the georeferences of class '" +
                            std::string(raster::to_string(classes.front())) + "'");
        }
    }

    const std::size_t n_units = units.size();
    const std::size_t n_classes = classes.size();
    std::vector<Coverage> cells(n_units * n_classes);
    std::vector<char> empty(n_units * n_classes, 0);

    const std::size_t n_tasks = n_units * n_classes;
    const auto run_task = [&](std::size_t task) {
        const std::size_t u = task / n_classes;
        const std::size_t c = task % n_classes;
        const auto& class_rasters = rasters.at(classes[c]);
        try {
            cells[task] = coverage(class_rasters, units[u], options.threshold, options.mode);
        } catch (const EmptyUnitError&) {
            empty[task] = 1;
        }
    };

    const int threads = std::max(1, std::min<int>(options.threads, static_cast<int>(n_tasks)));
    if (threads == 1) {
        for (std::size_t t = 0; t < n_tasks; ++t) {
            run_task(t);
        }
    } else {
        std::exception_ptr failure;
        std::mutex failure_mutex;
        std::vector<std::jthread> workers;
        for (int w = 0; w < threads; ++w) {
            workers.emplace_back([&, w] {
                for (std::size_t t = static_cast<std::size_t>(w); t < n_tasks; t += threads) {
                    try {
                        run_task(t);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) {
                            failure = std::current_exception();
                        }
                        return;
                    }
                }
            });
        }
        workers.clear();
        if (failure) {
            std::rethrow_exception(failure);
        }
    }

    std::vector<std::string> kept;
    std::vector<std::size_t> kept_index;
    std::vector<std::string> dropped;
    for (std::size_t u = 0; u < n_units; ++u) {
        // Same georeferences across classes, so emptiness agrees across a row.
        if (empty[u * n_classes]) {
            dropped.push_back(units[u].id());
        } else {
            kept.push_back(units[u].id());
            kept_index.push_back(u);
        }
    }

    CoverageMatrix matrix(std::move(kept), std::vector<LandscapeClass>(classes.begin(), classes.end()));
    for (std::size_t k = 0; k < kept_index.size(); ++k) {
        for (std::size_t c = 0; c < n_classes; ++c) {
            matrix.set(k, c, cells[kept_index[k] * n_classes + c]);
        }
    }
    matrix.dropped_units = std::move(dropped);
    return matrix;
}

} // namespace landtsir::geo
