#pragma once

#include "landtsir/raster.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace landtsir::geo {

using raster::LandscapeClass;
using raster::LonLat;
using raster::ProbabilityRaster;

using Ring = std::vector<LonLat>;

/// Named polygon with one or more rings. Containment uses the even-odd rule
/// over all rings together, so holes and disjoint parts need no tagging.
class SpatialUnit {
public:
    /// Throws GeometryError for rings with fewer than 3 distinct vertices or
    /// for non-positive area.
    SpatialUnit(std::string id, std::vector<Ring> rings, double area_km2);

    const std::string& id() const noexcept { return id_; }
    const std::vector<Ring>& rings() const noexcept { return rings_; }
    double area_km2() const noexcept { return area_km2_; }

    /// Even-odd ray cast towards +lon. A point on an edge counts as inside
    /// iff it is on a left or bottom edge of the region (half-open), so
    /// adjacent units that share an edge never both claim a point.
    bool contains(LonLat p) const noexcept;

    double lon_min() const noexcept { return lon_min_; }
    double lon_max() const noexcept { return lon_max_; }
    double lat_min() const noexcept { return lat_min_; }
    double lat_max() const noexcept { return lat_max_; }

private:
    std::string id_;
    std::vector<Ring> rings_;
    double area_km2_;
    double lon_min_;
    double lon_max_;
    double lat_min_;
    double lat_max_;
};

bool contains(const SpatialUnit& unit, LonLat p);

/// Throws OverlapError naming the first pair (by input order) whose bounding
/// boxes intersect with positive area. Shared edges are fine.
void detect_overlap(std::span<const ProbabilityRaster> rasters);

enum class CoverageMode {
    /// positive / total with positive = pixels at or above the threshold.
    threshold,
    /// Mean probability over the unit's pixels.
    mean_probability,
};

struct Coverage {
    double fraction = 0.0;
    std::int64_t positive = 0;
    std::int64_t total = 0;
};

/// Pixel-center containment tally for one class. Throws OverlapError and
/// EmptyUnitError.
Coverage coverage(std::span<const ProbabilityRaster> rasters, const SpatialUnit& unit, double threshold,
                  CoverageMode mode = CoverageMode::threshold);

class CoverageMatrix {
public:
    CoverageMatrix() = default;
    CoverageMatrix(std::vector<std::string> units, std::vector<LandscapeClass> classes);

    const std::vector<std::string>& units() const noexcept { return units_; }
    const std::vector<LandscapeClass>& classes() const noexcept { return classes_; }

    std::optional<std::size_t> unit_index(const std::string& id) const;
    /// Throws MissingClassError.
    std::size_t class_index(LandscapeClass cls) const;
    bool has_class(LandscapeClass cls) const;

    double value(std::size_t unit, std::size_t cls) const { return cells_[unit * classes_.size() + cls].fraction; }
    const Coverage& cell(std::size_t unit, std::size_t cls) const { return cells_[unit * classes_.size() + cls]; }
    void set(std::size_t unit, std::size_t cls, Coverage c) { cells_[unit * classes_.size() + cls] = c; }

    /// Convenience lookup by id/class; throws DataError when absent.
    double value(const std::string& unit_id, LandscapeClass cls) const;

    /// Units that were dropped because they intersect no raster pixel.
    std::vector<std::string> dropped_units;

private:
    std::vector<std::string> units_;
    std::vector<LandscapeClass> classes_;
    std::vector<Coverage> cells_;
};

using RastersByClass = std::map<LandscapeClass, std::vector<ProbabilityRaster>>;

struct CoverageOptions {
    double threshold = raster::default_threshold;
    CoverageMode mode = CoverageMode::threshold;
    /// Worker threads for the (unit, class) grid; results do not depend on it.
    int threads = 1;
};

/// Coverage for every (unit, class). Every class in `classes` must be present
/// in `rasters` and all classes must share the same set of georeferences.
/// Units that intersect no pixel are dropped and listed in dropped_units.
CoverageMatrix coverage_matrix(const RastersByClass& rasters, std::span<const SpatialUnit> units,
                               std::span<const LandscapeClass> classes, const CoverageOptions& options = {});

/// GeoJSON FeatureCollection of Polygon/MultiPolygon features whose
/// properties carry {id, area_km2}.
std::vector<SpatialUnit> load_units(const std::filesystem::path& path);
std::string units_to_geojson(std::span<const SpatialUnit> units);

} // namespace landtsir::geo
