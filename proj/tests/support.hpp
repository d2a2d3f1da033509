#pragma once

#include "landtsir/geo.hpp"
#include "landtsir/raster.hpp"

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

namespace support {

namespace fs = std::filesystem;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag)
    {
        std::random_device rd;
        path_ = fs::temp_directory_path() / ("landtsir-" + tag + "-" + std::to_string(rd()));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { std::error_code ec; fs::remove_all(path_, ec); }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    fs::path path_;
};

inline std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void spit(const fs::path& p, const std::string& text)
{
    fs::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << text;
}

/// Runs the CLI with stdout/stderr captured into `log`; returns its exit code.
inline int run_cli(const std::string& args, const fs::path& log)
{
    const std::string cmd = std::string("\"") + LANDTSIR_CLI + "\" " + args + " >\"" + log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

/// Every regular file under `dir` keyed by relative path, with contents.
inline std::vector<std::pair<std::string, std::string>> tree(const fs::path& dir)
{
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) {
            out.emplace_back(fs::relative(e.path(), dir).string(), slurp(e.path()));
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

// Independent containment oracle: nonzero winding number per ring, combined
// with parity across rings.
inline int winding(const landtsir::geo::Ring& ring, landtsir::raster::LonLat p)
{
    int w = 0;
    for (std::size_t i = 0; i < ring.size(); ++i) {
        const auto& a = ring[i];
        const auto& b = ring[(i + 1) % ring.size()];
        const double cross = (b.lon - a.lon) * (p.lat - a.lat) - (p.lon - a.lon) * (b.lat - a.lat);
        if (a.lat <= p.lat) {
            if (b.lat > p.lat && cross > 0) {
                ++w;
            }
        } else if (b.lat <= p.lat && cross < 0) {
            --w;
        }
    }
    return w;
}

inline bool oracle_contains(const std::vector<landtsir::geo::Ring>& rings, landtsir::raster::LonLat p)
{
    int inside = 0;
    for (const auto& r : rings) {
        inside += winding(r, p) != 0 ? 1 : 0;
    }
    return inside % 2 == 1;
}

/// Naive tally: visit every pixel of every raster and test its center.
inline landtsir::geo::Coverage oracle_coverage(const std::vector<landtsir::raster::ProbabilityRaster>& rasters,
                                               const std::vector<landtsir::geo::Ring>& rings, double threshold)
{
    landtsir::geo::Coverage c;
    for (const auto& r : rasters) {
        const auto& g = r.georef();
        for (int row = 0; row < g.height; ++row) {
            for (int col = 0; col < g.width; ++col) {
                const double lon = g.lon_min + (col + 0.5) * (g.lon_max - g.lon_min) / g.width;
                const double lat = g.lat_max - (row + 0.5) * (g.lat_max - g.lat_min) / g.height;
                if (oracle_contains(rings, {lon, lat})) {
                    ++c.total;
                    if (r.values()[static_cast<std::size_t>(row) * g.width + col] >= threshold) {
                        ++c.positive;
                    }
                }
            }
        }
    }
    if (c.total > 0) {
        c.fraction = static_cast<double>(c.positive) / static_cast<double>(c.total);
    }
    return c;
}

/// Star-shaped ring around (cx, cy) with `n` vertices at radii in [rmin, rmax].
inline landtsir::geo::Ring star_ring(std::mt19937_64& rng, double cx, double cy, int n, double rmin, double rmax)
{
    std::uniform_real_distribution<double> radius(rmin, rmax);
    std::uniform_real_distribution<double> jitter(-0.3, 0.3);
    landtsir::geo::Ring ring;
    for (int k = 0; k < n; ++k) {
        const double theta = (k + 0.5 + jitter(rng)) * 2.0 * M_PI / n;
        const double r = radius(rng);
        ring.push_back({cx + r * std::cos(theta), cy + r * std::sin(theta)});
    }
    return ring;
}

/// A random instance: a row of adjacent rasters and a polygon (optionally
/// with a hole) centered somewhere over them.
struct ZonalInstance {
    std::vector<landtsir::raster::ProbabilityRaster> rasters;
    std::vector<landtsir::geo::Ring> rings;
};

inline ZonalInstance random_zonal_instance(std::mt19937_64& rng)
{
    using namespace landtsir;
    std::uniform_int_distribution<int> n_tiles(1, 3);
    std::uniform_int_distribution<int> size(5, 40);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    ZonalInstance inst;
    const int tiles = n_tiles(rng);
    const int height = size(rng);
    const double deg_per_px = 0.001 * (0.5 + unit(rng));
    const double lat_min = 30.0 + unit(rng);
    double lon = 70.0 + unit(rng);
    for (int k = 0; k < tiles; ++k) {
        const int width = size(rng);
        const raster::GeoReference g{lon, lat_min, lon + width * deg_per_px, lat_min + height * deg_per_px, width,
                                     height};
        std::vector<double> values(static_cast<std::size_t>(width) * height);
        for (auto& v : values) {
            v = unit(rng);
        }
        inst.rasters.emplace_back(raster::ImageTensor(width, height, 1, std::move(values)), g,
                                  raster::LandscapeClass::buildings);
        lon = g.lon_max;
    }
    const double lon0 = inst.rasters.front().georef().lon_min;
    const double lon1 = inst.rasters.back().georef().lon_max;
    const double lat1 = lat_min + height * deg_per_px;
    const double cx = lon0 + (lon1 - lon0) * unit(rng);
    const double cy = lat_min + (lat1 - lat_min) * unit(rng);
    const double span = std::max(lon1 - lon0, lat1 - lat_min);
    std::uniform_int_distribution<int> verts(3, 12);
    const int n = verts(rng);
    const double rmin = span * (0.05 + 0.3 * unit(rng));
    const double rmax = rmin * (1.0 + 2.0 * unit(rng));
    inst.rings.push_back(star_ring(rng, cx, cy, n, rmin, rmax));
    if (unit(rng) < 0.3 && n >= 5) {
        // With n >= 5 and this jitter the largest angular gap is under 0.65 pi,
        // so the outer ring contains the disk of radius 0.5 * rmin.
        inst.rings.push_back(star_ring(rng, cx, cy, 3, 0.1 * rmin, 0.3 * rmin));
    }
    return inst;
}

} // namespace support
