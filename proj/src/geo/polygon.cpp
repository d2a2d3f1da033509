#include "landtsir/error.hpp"
#include "landtsir/geo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <utility>

namespace landtsir::geo {

namespace {

bool same_point(LonLat a, LonLat b) { return a.lon == b.lon && a.lat == b.lat; }

} // namespace

SpatialUnit::SpatialUnit(std::string id, std::vector<Ring> rings, double area_km2)
    : id_(std::move(id))
    , rings_(std::move(rings))
    , area_km2_(area_km2)
    , lon_min_(std::numeric_limits<double>::infinity())
    , lon_max_(-std::numeric_limits<double>::infinity())
    , lat_min_(std::numeric_limits<double>::infinity())
    , lat_max_(-std::numeric_limits<double>::infinity())
{
    if (rings_.empty()) {
        throw GeometryError("unit '" + id_ + "' has no rings");
    }
    if (!(area_km2_ > 0.0) || !std::isfinite(area_km2_)) {
        throw GeometryError("unit '" + id_ + "' must have positive area");
    }
    for (auto& ring : rings_) {
        // Store rings open; an explicit closing vertex is redundant.
        if (ring.size() > 1 && same_point(ring.front(), ring.back())) {
            ring.pop_back();
        }
        std::set<std::pair<double, double>> distinct;
        for (const auto& p : ring) {
            if (!std::isfinite(p.lon) || !std::isfinite(p.lat)) {
                throw GeometryError("unit '" + id_ + "' has a non-finite vertex");
            }
            distinct.emplace(p.lon, p.lat);
            lon_min_ = std::min(lon_min_, p.lon);
            lon_max_ = std::max(lon_max_, p.lon);
            lat_min_ = std::min(lat_min_, p.lat);
            lat_max_ = std::max(lat_max_, p.lat);
        }
        if (distinct.size() < 3) {
            throw GeometryError("unit '" + id_ + "' has a degenerate ring (fewer than 3 distinct vertices)");
        }
    }
}

bool SpatialUnit::contains(LonLat p) const noexcept
{
    if (p.lon < lon_min_ || p.lon > lon_max_ || p.lat < lat_min_ || p.lat > lat_max_) {
        return false;
    }
    bool inside = false;
    for (const auto& ring : rings_) {
        const std::size_t n = ring.size();
        for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
            const LonLat a = ring[i];
            const LonLat b = ring[j];
            // Half-open in lat: an edge counts when exactly one endpoint lies
            // strictly above the ray.
            if ((a.lat > p.lat) != (b.lat > p.lat)) {
                const double x = a.lon + (p.lat - a.lat) * (b.lon - a.lon) / (b.lat - a.lat);
                if (p.lon < x) {
                    inside = !inside;
                }
            }
        }
    }
    return inside;
}

bool contains(const SpatialUnit& unit, LonLat p) { return unit.contains(p); }

} // namespace landtsir::geo
