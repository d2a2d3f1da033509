#include "landtsir/error.hpp"
#include "landtsir/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

namespace fs = std::filesystem;
using namespace landtsir;

struct GlobalFlags {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
};

pipeline::Overrides overrides_from(const GlobalFlags& g)
{
    pipeline::Overrides o;
    if (!g.out.empty()) {
        o.output = g.out;
    }
    o.seed = g.seed;
    o.threads = g.threads;
    return o;
}

pipeline::PipelineConfig require_config(const GlobalFlags& g)
{
    if (g.config.empty()) {
        throw UsageError("--config is required");
    }
    return pipeline::load_config(g.config, overrides_from(g));
}

int run_simulate(const GlobalFlags& g)
{
    synth::ScenarioConfig scenario;
    if (!g.config.empty()) {
        std::string text;
        try {
            text = io::read_text(g.config);
        } catch (const DataError&) {
            throw UsageError("cannot read scenario " + g.config);
        }
        scenario = synth::parse_scenario(text);
    }
    if (g.seed) {
        scenario.seed = *g.seed;
    }
    if (g.out.empty()) {
        throw UsageError("--out is required for simulate");
    }
    pipeline::cmd_simulate(scenario, g.out);
    std::cout << "wrote bundle to " << g.out << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Landscape-informed TSIR pipeline"};
    app.require_subcommand(1);
    GlobalFlags g;
    app.add_option("--config", g.config, "pipeline config (aggregate/fit/ablate) or scenario JSON (simulate)");
    app.add_option("--out", g.out, "output directory");
    app.add_option("--seed", g.seed, "random seed");
    app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);

    auto* aggregate = app.add_subcommand("aggregate", "zonal landscape coverage per unit and class");
    auto* fit = app.add_subcommand("fit", "fit the full TSIR regression");
    auto* ablate = app.add_subcommand("ablate", "adjusted R2 table over feature sets and urban strata");
    auto* simulate = app.add_subcommand("simulate", "write a synthetic input bundle");
    auto* evaluate = app.add_subcommand("evaluate-seg", "segmentation metrics for predicted rasters");
    std::string pred_dir;
    std::string truth_dir;
    double threshold = landtsir::raster::default_threshold;
    evaluate->add_option("--pred", pred_dir, "predicted raster directory")->required();
    evaluate->add_option("--truth", truth_dir, "ground-truth raster directory")->required();
    evaluate->add_option("--threshold", threshold, "binarization threshold");
    for (auto* sub : app.get_subcommands({})) {
        sub->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (aggregate->parsed()) {
            std::cout << "wrote " << pipeline::cmd_aggregate(require_config(g)).string() << "\n";
        } else if (fit->parsed()) {
            const auto out = pipeline::cmd_fit(require_config(g));
            std::cout << "wrote " << out.report.string() << " and " << out.residuals.string() << "\n";
        } else if (ablate->parsed()) {
            std::cout << "wrote " << pipeline::cmd_ablate(require_config(g)).string() << "\n";
        } else if (simulate->parsed()) {
            return run_simulate(g);
        } else if (evaluate->parsed()) {
            const fs::path out = g.out.empty() ? fs::path(".") : fs::path(g.out);
            std::cout << "wrote " << pipeline::cmd_evaluate_seg(pred_dir, truth_dir, out, threshold).string() << "\n";
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
