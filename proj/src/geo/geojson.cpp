#include "landtsir/error.hpp"
#include "landtsir/geo.hpp"
#include "landtsir/io.hpp"

#include <nlohmann/json.hpp>

#include <set>

namespace landtsir::geo {

using nlohmann::json;

namespace {

Ring parse_ring(const json& coords)
{
    Ring ring;
    for (const auto& pt : coords) {
        if (!pt.is_array() || pt.size() < 2) {
            throw FormatError("ring vertex must be [lon, lat]");
        }
        ring.push_back({pt[0].get<double>(), pt[1].get<double>()});
    }
    return ring;
}

void append_polygon(const json& polygon, std::vector<Ring>& rings)
{
    for (const auto& ring : polygon) {
        rings.push_back(parse_ring(ring));
    }
}

json ring_to_json(const Ring& ring)
{
    json out = json::array();
    for (const auto& p : ring) {
        out.push_back({p.lon, p.lat});
    }
    // GeoJSON rings are explicitly closed.
    out.push_back({ring.front().lon, ring.front().lat});
    return out;
}

} // namespace

std::vector<SpatialUnit> load_units(const std::filesystem::path& path)
{
    std::vector<SpatialUnit> units;
    std::set<std::string> seen;
    try {
        const json doc = json::parse(io::read_text(path));
        if (doc.at("type") != "FeatureCollection") {
            throw FormatError(path.string() + ": expected a FeatureCollection");
        }
        for (const auto& feature : doc.at("features")) {
            const auto& props = feature.at("properties");
            const auto id = props.at("id").get<std::string>();
            const double area = props.at("area_km2").get<double>();
            const auto& geom = feature.at("geometry");
            const auto type = geom.at("type").get<std::string>();
            std::vector<Ring> rings;
            if (type == "Polygon") {
                append_polygon(geom.at("coordinates"), rings);
            } else if (type == "MultiPolygon") {
                for (const auto& polygon : geom.at("coordinates")) {
                    append_polygon(polygon, rings);
                }
            } else {
                throw FormatError(path.string() + ": unit '" + id + "' has unsupported geometry " + type);
            }
            if (!seen.insert(id).second) {
                throw FormatError(path.string() + ": duplicate unit id '" + id + "'");
            }
            units.emplace_back(id, std::move(rings), area);
        }
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": malformed GeoJSON: " + e.what());
    }
    if (units.empty()) {
        throw DataError(path.string() + ": no spatial units");
    }
    return units;
}

std::string units_to_geojson(std::span<const SpatialUnit> units)
{
    json features = json::array();
    for (const auto& unit : units) {
        json geometry;
        if (unit.rings().size() == 1) {
            geometry["type"] = "Polygon";
            geometry["coordinates"] = json::array({ring_to_json(unit.rings().front())});
        } else {
            // Each ring becomes its own polygon; even-odd containment is unchanged.
            geometry["type"] = "MultiPolygon";
            json polys = json::array();
            for (const auto& ring : unit.rings()) {
                polys.push_back(json::array({ring_to_json(ring)}));
            }
            geometry["coordinates"] = std::move(polys);
        }
        features.push_back({{"type", "Feature"},
                            {"properties", {{"id", unit.id()}, {"area_km2", unit.area_km2()}}},
                            {"geometry", std::move(geometry)}});
    }
    const json doc = {{"type", "FeatureCollection"}, {"features", std::move(features)}};
    return doc.dump(2) + "\n";
}

} // namespace landtsir::geo
