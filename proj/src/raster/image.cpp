#include "landtsir/raster.hpp"

#include "landtsir/error.hpp"

#include <algorithm>
#include <cmath>

namespace landtsir::raster {

namespace {

void check_shape(int width, int height, int channels)
{
    if (width <= 0 || height <= 0) {
        throw DimensionError("image dimensions must be positive, got " + std::to_string(width) + "x" +
                             std::to_string(height));
    }
    if (channels != 1 && channels != 3) {
        throw DimensionError("image must have 1 or 3 channels, got " + std::to_string(channels));
    }
}

} // namespace

ImageTensor::ImageTensor(int width, int height, int channels)
    : width_(width)
    , height_(height)
    , channels_(channels)
{
    check_shape(width, height, channels);
    values_.assign(static_cast<std::size_t>(width) * height * channels, 0.0);
}

ImageTensor::ImageTensor(int width, int height, int channels, std::vector<double> values)
    : width_(width)
    , height_(height)
    , channels_(channels)
    , values_(std::move(values))
{
    check_shape(width, height, channels);
    if (values_.size() != static_cast<std::size_t>(width) * height * channels) {
        throw DimensionError("value count " + std::to_string(values_.size()) + " does not match " +
                             std::to_string(width) + "x" + std::to_string(height) + "x" +
                             std::to_string(channels));
    }
}

std::string_view to_string(LandscapeClass cls) noexcept
{
    switch (cls) {
    case LandscapeClass::buildings:
        return "buildings";
    case LandscapeClass::roads:
        return "roads";
    case LandscapeClass::trees:
        return "trees";
    case LandscapeClass::crops:
        return "crops";
    case LandscapeClass::waterway:
        return "waterway";
    case LandscapeClass::standing_water:
        return "standing_water";
    }
    return "unknown";
}

LandscapeClass parse_class(std::string_view name)
{
    for (auto cls : all_classes) {
        if (to_string(cls) == name) {
            return cls;
        }
    }
    throw DataError("unknown landscape class '" + std::string(name) + "'");
}

void GeoReference::validate() const
{
    if (!(lon_min < lon_max) || !(lat_min < lat_max)) {
        throw GeometryError("georeference bbox must satisfy lon_min < lon_max and lat_min < lat_max");
    }
    if (width <= 0 || height <= 0) {
        throw DimensionError("georeference width/height must be positive");
    }
}

LonLat GeoReference::pixel_center(int col, int row) const noexcept
{
    const double dx = (lon_max - lon_min) / width;
    const double dy = (lat_max - lat_min) / height;
    return {lon_min + (col + 0.5) * dx, lat_max - (row + 0.5) * dy};
}

ProbabilityRaster::ProbabilityRaster(ImageTensor grid, GeoReference georef, LandscapeClass cls)
    : grid_(std::move(grid))
    , georef_(georef)
    , class_(cls)
{
    if (grid_.channels() != 1) {
        throw DimensionError("probability raster must have exactly one channel");
    }
    georef_.validate();
    if (georef_.width != grid_.width() || georef_.height != grid_.height()) {
        throw DimensionError("georeference size " + std::to_string(georef_.width) + "x" +
                             std::to_string(georef_.height) + " does not match grid " +
                             std::to_string(grid_.width()) + "x" + std::to_string(grid_.height()));
    }
    for (double v : grid_.values()) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw DataError("probability out of [0, 1]: " + std::to_string(v));
        }
    }
}

std::vector<ImageTensor> tile(const ImageTensor& image, int tile_size)
{
    if (tile_size <= 0) {
        throw DimensionError("tile size must be positive");
    }
    if (image.width() % tile_size != 0 || image.height() % tile_size != 0) {
        throw DimensionError("image " + std::to_string(image.width()) + "x" + std::to_string(image.height()) +
                             " is not divisible by tile size " + std::to_string(tile_size));
    }
    const int rows = image.height() / tile_size;
    const int cols = image.width() / tile_size;
    const int ch = image.channels();
    const auto src = image.values();
    const std::size_t row_span = static_cast<std::size_t>(tile_size) * ch;

    std::vector<ImageTensor> tiles;
    tiles.reserve(static_cast<std::size_t>(rows) * cols);
    for (int tr = 0; tr < rows; ++tr) {
        for (int tc = 0; tc < cols; ++tc) {
            ImageTensor out(tile_size, tile_size, ch);
            auto dst = out.values();
            for (int y = 0; y < tile_size; ++y) {
                const std::size_t from =
                    (static_cast<std::size_t>(tr * tile_size + y) * image.width() + tc * tile_size) * ch;
                std::copy_n(src.begin() + from, row_span, dst.begin() + y * row_span);
            }
            tiles.push_back(std::move(out));
        }
    }
    return tiles;
}

ImageTensor untile(std::span<const ImageTensor> tiles, int rows, int cols)
{
    if (rows <= 0 || cols <= 0 || tiles.size() != static_cast<std::size_t>(rows) * cols) {
        throw DimensionError("expected " + std::to_string(rows) + "x" + std::to_string(cols) + " tiles, got " +
                             std::to_string(tiles.size()));
    }
    const int tw = tiles.front().width();
    const int th = tiles.front().height();
    const int ch = tiles.front().channels();
    for (const auto& t : tiles) {
        if (t.width() != tw || t.height() != th || t.channels() != ch) {
            throw DimensionError("tiles do not share one shape");
        }
    }

    ImageTensor out(tw * cols, th * rows, ch);
    auto dst = out.values();
    const std::size_t row_span = static_cast<std::size_t>(tw) * ch;
    for (int tr = 0; tr < rows; ++tr) {
        for (int tc = 0; tc < cols; ++tc) {
            const auto src = tiles[static_cast<std::size_t>(tr) * cols + tc].values();
            for (int y = 0; y < th; ++y) {
                const std::size_t to = (static_cast<std::size_t>(tr * th + y) * out.width() + tc * tw) * ch;
                std::copy_n(src.begin() + y * row_span, row_span, dst.begin() + to);
            }
        }
    }
    return out;
}

ChannelStats compute_stats(std::span<const ImageTensor> images)
{
    if (images.empty()) {
        throw DataError("compute_stats needs at least one image");
    }
    const int ch = images.front().channels();
    std::size_t count = 0;
    std::vector<double> sum(ch, 0.0);
    for (const auto& img : images) {
        if (img.channels() != ch) {
            throw DimensionError("images have mixed channel counts");
        }
        const auto v = img.values();
        for (std::size_t i = 0; i < v.size(); ++i) {
            sum[i % ch] += v[i];
        }
        count += img.pixel_count();
    }

    ChannelStats stats;
    stats.mean.resize(ch);
    for (int c = 0; c < ch; ++c) {
        stats.mean[c] = sum[c] / static_cast<double>(count);
    }

    // Second pass about the mean; more stable than E[x^2] - E[x]^2.
    std::vector<double> sq(ch, 0.0);
    for (const auto& img : images) {
        const auto v = img.values();
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double d = v[i] - stats.mean[i % ch];
            sq[i % ch] += d * d;
        }
    }
    stats.std.resize(ch);
    for (int c = 0; c < ch; ++c) {
        stats.std[c] = std::sqrt(sq[c] / static_cast<double>(count));
    }
    return stats;
}

ImageTensor normalize(const ImageTensor& image, const ChannelStats& stats)
{
    const auto ch = static_cast<std::size_t>(image.channels());
    if (stats.mean.size() != ch || stats.std.size() != ch) {
        throw DimensionError("channel stats do not match image channel count");
    }
    ImageTensor out = image;
    auto v = out.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
        const std::size_t c = i % ch;
        v[i] = (v[i] - stats.mean[c]) / std::max(stats.std[c], normalize_epsilon);
    }
    return out;
}

ProbabilityRaster binarize(const ProbabilityRaster& raster, double threshold)
{
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
        throw UsageError("threshold must lie in [0, 1]");
    }
    ImageTensor grid = raster.grid();
    for (double& v : grid.values()) {
        v = v >= threshold ? 1.0 : 0.0;
    }
    return {std::move(grid), raster.georef(), raster.landscape_class()};
}

} // namespace landtsir::raster
