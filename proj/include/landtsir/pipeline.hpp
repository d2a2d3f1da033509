#pragma once

#include "landtsir/epi.hpp"
#include "landtsir/geo.hpp"
#include "landtsir/synth.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace landtsir::pipeline {

namespace fs = std::filesystem;

/// Parameters shared by aggregate/fit/ablate. Relative paths in the JSON
/// document resolve against the directory holding it.
///
/// Schema (all keys optional unless a subcommand needs them):
///   units        path   GeoJSON FeatureCollection of spatial units
///   rasters      path   directory with one subdirectory per class of *.pgm + *.json
///   cases        path   CSV unit_id,date,count
///   weather      path   CSV date,mean_temp_c,precip_mm
///   population   path   CSV unit_id,date,population
///   coverage     path   coverage CSV for fit/ablate (default <output>/coverage.csv)
///   output       path   output directory (default "out")
///   start_date, end_date   YYYY-MM-DD (default: first/last weather date)
///   threshold    number in [0, 1]                      (0.5)
///   coverage_mode "threshold" | "mean_probability"     ("threshold")
///   s0           number in (0, 1]                      (0.1)
///   birth_rate   number >= 0                           (0)
///   lags         {mean_temp: int >= 0, rain_days: int >= 0}   ({1, 1})
///   lag_grid     {mean_temp: [int...], rain_days: [int...]}  (absent: no search)
///   zero_policy  "drop" | "smooth"                     ("drop")
///   alpha_mode   "per_unit" | "shared"                 ("per_unit")
///   stratify     bool                                  (true)
///   classes      [class name...]  landscape columns for fit (all six)
///   unit_subset  [unit id...]     restrict fit to these units (all)
///   seed         unsigned integer                      (0)
///   threads      integer >= 1                          (1)
struct PipelineConfig {
    fs::path base_dir;
    fs::path units;
    fs::path rasters;
    fs::path cases;
    fs::path weather;
    fs::path population;
    fs::path coverage;
    fs::path output = "out";
    std::optional<io::Date> start;
    std::optional<io::Date> end;
    double threshold = raster::default_threshold;
    geo::CoverageMode coverage_mode = geo::CoverageMode::threshold;
    epi::SusceptibleOptions susceptibles;
    std::vector<int> lags{1, 1};
    std::optional<std::vector<std::vector<int>>> lag_grid;
    epi::ZeroPolicy zero_policy = epi::ZeroPolicy::drop;
    epi::AlphaMode alpha_mode = epi::AlphaMode::per_unit;
    bool stratify = true;
    std::vector<raster::LandscapeClass> classes{raster::all_classes.begin(), raster::all_classes.end()};
    std::vector<std::string> unit_subset;
    std::uint64_t seed = 0;
    int threads = 1;

    fs::path coverage_path() const;
};

struct Overrides {
    std::optional<fs::path> output;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
};

/// Parses and range-checks the document. Throws UsageError.
PipelineConfig parse_config(std::string_view json_text, const fs::path& base_dir, const Overrides& overrides = {});
PipelineConfig load_config(const fs::path& path, const Overrides& overrides = {});

enum class Command { aggregate, fit, ablate };

/// Checks that every input the command reads exists. Throws UsageError.
void validate_paths(const PipelineConfig& config, Command command);

/// Loads rasters/<class>/*.pgm for each requested class, sorted by file name.
/// Throws MissingClassError when a class directory is absent or empty.
geo::RastersByClass load_rasters(const fs::path& dir, std::span<const raster::LandscapeClass> classes);

std::string coverage_csv(const geo::CoverageMatrix& coverage);
geo::CoverageMatrix read_coverage_csv(const fs::path& path, geo::CoverageMode mode);

/// Cases, weather and population from CSV, binned and aligned.
epi::EpidemicPanel load_panel(const PipelineConfig& config, std::span<const geo::SpatialUnit> units);

std::string fit_report_json(const epi::TsirFit& fit, const epi::EpidemicPanel& panel,
                            const PipelineConfig& config, const std::vector<std::string>& dropped_units,
                            std::size_t dropped_zero_rows, const std::string& residuals_file);
std::string residuals_csv(const epi::TsirFit& fit, const epi::EpidemicPanel& panel);
std::string ablation_csv(const epi::AblationTable& table);

struct FitOutputs {
    fs::path report;
    fs::path residuals;
    epi::TsirFit fit;
};

fs::path cmd_aggregate(const PipelineConfig& config);
FitOutputs cmd_fit(const PipelineConfig& config);
fs::path cmd_ablate(const PipelineConfig& config);
void cmd_simulate(const synth::ScenarioConfig& scenario, const fs::path& out_dir);
fs::path cmd_evaluate_seg(const fs::path& pred_dir, const fs::path& truth_dir, const fs::path& out_dir,
                          double threshold = raster::default_threshold);

} // namespace landtsir::pipeline
