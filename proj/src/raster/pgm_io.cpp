#include "landtsir/error.hpp"
#include "landtsir/io.hpp"
#include "landtsir/raster.hpp"

#include <nlohmann/json.hpp>

#include <cctype>
#include <cmath>

namespace landtsir::raster {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string next_token(const std::string& data, std::size_t& pos, const fs::path& path)
{
    while (pos < data.size()) {
        const auto c = static_cast<unsigned char>(data[pos]);
        if (c == '#') {
            while (pos < data.size() && data[pos] != '\n') {
                ++pos;
            }
        } else if (std::isspace(c)) {
            ++pos;
        } else {
            break;
        }
    }
    const std::size_t start = pos;
    while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos])) && data[pos] != '#') {
        ++pos;
    }
    if (start == pos) {
        throw FormatError(path.string() + ": truncated PGM header");
    }
    return data.substr(start, pos - start);
}

int header_int(const std::string& token, const fs::path& path)
{
    try {
        const auto v = io::parse_int(token, "PGM header");
        if (v <= 0 || v > 1'000'000) {
            throw FormatError("");
        }
        return static_cast<int>(v);
    } catch (const FormatError&) {
        throw FormatError(path.string() + ": bad PGM header value '" + token + "'");
    }
}

GeoReference parse_sidecar(const fs::path& path, LandscapeClass& cls)
{
    json doc;
    try {
        doc = json::parse(io::read_text(path));
        const auto& bbox = doc.at("bbox");
        if (!bbox.is_array() || bbox.size() != 4) {
            throw FormatError(path.string() + ": bbox must be [lon_min, lat_min, lon_max, lat_max]");
        }
        GeoReference ref;
        ref.lon_min = bbox[0].get<double>();
        ref.lat_min = bbox[1].get<double>();
        ref.lon_max = bbox[2].get<double>();
        ref.lat_max = bbox[3].get<double>();
        ref.width = doc.at("width").get<int>();
        ref.height = doc.at("height").get<int>();
        cls = parse_class(doc.at("class_name").get<std::string>());
        ref.validate();
        return ref;
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": malformed sidecar: " + e.what());
    }
}

} // namespace

fs::path sidecar_for(const fs::path& raster_path)
{
    fs::path p = raster_path;
    p.replace_extension(".json");
    return p;
}

ProbabilityRaster load_raster(const fs::path& raster_path, const fs::path& sidecar_path)
{
    const std::string data = io::read_text(raster_path);
    std::size_t pos = 0;
    if (next_token(data, pos, raster_path) != "P5") {
        throw FormatError(raster_path.string() + ": not a binary PGM (P5)");
    }
    const int width = header_int(next_token(data, pos, raster_path), raster_path);
    const int height = header_int(next_token(data, pos, raster_path), raster_path);
    const int maxval = header_int(next_token(data, pos, raster_path), raster_path);
    if (maxval != 255) {
        throw FormatError(raster_path.string() + ": only maxval 255 is supported");
    }
    // Exactly one whitespace byte separates the header from the pixel data.
    if (pos >= data.size() || !std::isspace(static_cast<unsigned char>(data[pos]))) {
        throw FormatError(raster_path.string() + ": truncated PGM header");
    }
    ++pos;
    const std::size_t n = static_cast<std::size_t>(width) * height;
    if (data.size() - pos != n) {
        throw FormatError(raster_path.string() + ": expected " + std::to_string(n) + " pixel bytes, found " +
                          std::to_string(data.size() - pos));
    }

    LandscapeClass cls{};
    const GeoReference ref = parse_sidecar(sidecar_path, cls);
    if (ref.width != width || ref.height != height) {
        throw DimensionError(raster_path.string() + " is " + std::to_string(width) + "x" + std::to_string(height) +
                             " but sidecar says " + std::to_string(ref.width) + "x" + std::to_string(ref.height));
    }

    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) {
        values[i] = static_cast<unsigned char>(data[pos + i]) / 255.0;
    }
    return {ImageTensor(width, height, 1, std::move(values)), ref, cls};
}

void save_raster(const ProbabilityRaster& raster, const fs::path& raster_path, const fs::path& sidecar_path)
{
    std::string out = "P5\n" + std::to_string(raster.width()) + " " + std::to_string(raster.height()) + "\n255\n";
    const auto values = raster.values();
    out.reserve(out.size() + values.size());
    for (double p : values) {
        out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(p * 255.0))));
    }
    io::write_text(raster_path, out);

    const auto& g = raster.georef();
    json doc;
    doc["bbox"] = {g.lon_min, g.lat_min, g.lon_max, g.lat_max};
    doc["width"] = g.width;
    doc["height"] = g.height;
    doc["class_name"] = std::string(to_string(raster.landscape_class()));
    io::write_text(sidecar_path, doc.dump(2) + "\n");
}

} // namespace landtsir::raster
