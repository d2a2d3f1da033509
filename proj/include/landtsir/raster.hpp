#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace landtsir::raster {

/// Dense image, row-major with interleaved channels: value(x, y, c) lives at
/// ((y * width) + x) * channels + c.
class ImageTensor {
public:
    ImageTensor(int width, int height, int channels);
    ImageTensor(int width, int height, int channels, std::vector<double> values);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int channels() const noexcept { return channels_; }
    std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width_) * height_; }

    double at(int x, int y, int c = 0) const { return values_[index(x, y, c)]; }
    double& at(int x, int y, int c = 0) { return values_[index(x, y, c)]; }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    friend bool operator==(const ImageTensor&, const ImageTensor&) = default;

private:
    std::size_t index(int x, int y, int c) const noexcept
    {
        return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
    }

    int width_;
    int height_;
    int channels_;
    std::vector<double> values_;
};

enum class LandscapeClass { buildings, roads, trees, crops, waterway, standing_water };

inline constexpr std::array<LandscapeClass, 6> all_classes{
    LandscapeClass::buildings, LandscapeClass::roads,    LandscapeClass::trees,
    LandscapeClass::crops,     LandscapeClass::waterway, LandscapeClass::standing_water,
};

std::string_view to_string(LandscapeClass cls) noexcept;
/// Throws DataError for names outside the six-class set.
LandscapeClass parse_class(std::string_view name);

struct LonLat {
    double lon = 0.0;
    double lat = 0.0;
};

/// Axis-aligned linear mapping between pixels and lon/lat. Pixel (0, 0) is the
/// north-west corner.
struct GeoReference {
    double lon_min = 0.0;
    double lat_min = 0.0;
    double lon_max = 0.0;
    double lat_max = 0.0;
    int width = 0;
    int height = 0;

    void validate() const;
    LonLat pixel_center(int col, int row) const noexcept;

    friend bool operator==(const GeoReference&, const GeoReference&) = default;
};

class ProbabilityRaster {
public:
    /// grid must be single-channel with values in [0, 1] and match georef's size.
    ProbabilityRaster(ImageTensor grid, GeoReference georef, LandscapeClass cls);

    const ImageTensor& grid() const noexcept { return grid_; }
    const GeoReference& georef() const noexcept { return georef_; }
    LandscapeClass landscape_class() const noexcept { return class_; }
    int width() const noexcept { return grid_.width(); }
    int height() const noexcept { return grid_.height(); }
    std::span<const double> values() const noexcept { return grid_.values(); }

private:
    ImageTensor grid_;
    GeoReference georef_;
    LandscapeClass class_;
};

struct ChannelStats {
    std::vector<double> mean;
    std::vector<double> std;
};

/// Splits into non-overlapping square tiles in row-major tile order.
/// Throws DimensionError when either side is not a multiple of tile_size.
std::vector<ImageTensor> tile(const ImageTensor& image, int tile_size);

/// Inverse of tile(); grid is (rows, cols) of tiles.
ImageTensor untile(std::span<const ImageTensor> tiles, int rows, int cols);

/// Population mean/std per channel over every pixel of every image jointly.
ChannelStats compute_stats(std::span<const ImageTensor> images);

inline constexpr double normalize_epsilon = 1e-8;
ImageTensor normalize(const ImageTensor& image, const ChannelStats& stats);

inline constexpr double default_threshold = 0.5;
/// 1 where probability >= threshold, else 0.
ProbabilityRaster binarize(const ProbabilityRaster& raster, double threshold = default_threshold);

enum class JaccardMode { soft, hard };

/// Soft: sum(p*y) / (sum p + sum y - sum(p*y)). Hard: |A and B| / |A or B| on
/// binary maps. Both-empty returns 1.
double jaccard(std::span<const double> pred, std::span<const double> truth, JaccardMode mode);
double jaccard(const ProbabilityRaster& pred, const ProbabilityRaster& truth, JaccardMode mode);

inline constexpr double probability_epsilon = 1e-7;

double binary_cross_entropy(std::span<const double> pred, std::span<const double> truth);
double binary_cross_entropy(const ProbabilityRaster& pred, const ProbabilityRaster& truth);

/// C = B - log(J) with soft J floored at probability_epsilon.
double segmentation_loss(std::span<const double> pred, std::span<const double> truth);
double segmentation_loss(const ProbabilityRaster& pred, const ProbabilityRaster& truth);

/// Reads an 8-bit P5 PGM plus its JSON georeference sidecar.
ProbabilityRaster load_raster(const std::filesystem::path& raster_path,
                              const std::filesystem::path& sidecar_path);

/// Writes raster_path (P5, byte = round(p * 255)) and sidecar_path.
void save_raster(const ProbabilityRaster& raster, const std::filesystem::path& raster_path,
                 const std::filesystem::path& sidecar_path);

/// Sidecar path convention used across the pipeline: foo.pgm -> foo.json.
std::filesystem::path sidecar_for(const std::filesystem::path& raster_path);

} // namespace landtsir::raster
