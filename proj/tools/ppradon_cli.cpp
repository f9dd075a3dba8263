// Command-line front end for the cone-beam Radon reconstruction pipeline.

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "ppradon/pipeline.hpp"

namespace {

struct CliOptions {
    std::string config_path;
    std::string out_dir;
    int nx = 0, nu = 0, n_proj = 0;
    double sx = 0, su = 0, sp = 0, so = 0;
    std::string shadow, far_source, stages, phantom, projector;
    int workers = 0;
};

void add_common_flags(CLI::App* app, CliOptions& o) {
    app->add_option("--config", o.config_path, "JSON config file; flags override its values");
    app->add_option("--out", o.out_dir, "output directory");
    app->add_option("--nx", o.nx, "object voxels per side (even)");
    app->add_option("--nu", o.nu, "detector pixels per side (even)");
    app->add_option("--n-proj", o.n_proj, "number of projection angles");
    app->add_option("--sx", o.sx, "object side length, mm");
    app->add_option("--su", o.su, "physical detector side, mm");
    app->add_option("--sp", o.sp, "source-to-detector distance, mm");
    app->add_option("--so", o.so, "source-to-origin distance, mm");
    app->add_option("--shadow", o.shadow, "shadow-zone fill: zero|linear|oracle");
    app->add_option("--far-source", o.far_source, "far-source approximation: on|off (default auto)");
    app->add_option("--projector", o.projector, "forward projector: analytic|voxel");
    app->add_option("--phantom", o.phantom,
                    "phantom: shepp-logan, json:<path> or volume:<path>");
    app->add_option("--workers", o.workers, "worker thread cap (default: hardware)");
}

ppr::RunConfig build_config(const CliOptions& o, const std::vector<ppr::Stage>& stages) {
    ppr::RunConfig c;
    if (!o.config_path.empty()) c = ppr::load_config(o.config_path);
    if (!o.out_dir.empty()) c.out_dir = o.out_dir;
    if (o.nx) c.geometry.nx = o.nx;
    if (o.nu) c.geometry.nu = o.nu;
    if (o.n_proj) c.geometry.n_proj = o.n_proj;
    if (o.sx) c.geometry.sx = o.sx;
    if (o.su) c.geometry.su = o.su;
    if (o.sp) c.geometry.sp = o.sp;
    if (o.so) c.geometry.so = o.so;
    if (!o.shadow.empty()) c.shadow = ppr::shadow_from_name(o.shadow);
    if (!o.projector.empty()) {
        if (o.projector == "analytic") c.projector = ppr::RunConfig::Projector::analytic;
        else if (o.projector == "voxel") c.projector = ppr::RunConfig::Projector::voxel;
        else throw std::invalid_argument("--projector must be analytic|voxel");
    }
    if (!o.far_source.empty()) {
        if (o.far_source == "on") c.far_source = ppr::RunConfig::FarSource::on;
        else if (o.far_source == "off") c.far_source = ppr::RunConfig::FarSource::off;
        else if (o.far_source == "auto") c.far_source = ppr::RunConfig::FarSource::automatic;
        else throw std::invalid_argument("--far-source must be on|off|auto");
    }
    if (!o.phantom.empty()) {
        if (o.phantom == "shepp-logan") {
            c.phantom_source = {ppr::PhantomSource::Kind::builtin_shepp_logan, ""};
        } else if (o.phantom.rfind("json:", 0) == 0) {
            c.phantom_source = {ppr::PhantomSource::Kind::json_file, o.phantom.substr(5)};
        } else if (o.phantom.rfind("volume:", 0) == 0) {
            c.phantom_source = {ppr::PhantomSource::Kind::volume_file, o.phantom.substr(7)};
        } else {
            throw std::invalid_argument("--phantom must be shepp-logan, json:<path> or volume:<path>");
        }
    }
    c.workers = o.workers > 0 ? o.workers
                              : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    if (!stages.empty()) c.stages = stages;
    return c;
}

std::vector<ppr::Stage> parse_stage_list(const std::string& s) {
    std::vector<ppr::Stage> stages;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) stages.push_back(ppr::stage_from_name(item));
    }
    return stages;
}

int run(const ppr::RunConfig& config) {
    const auto report = ppr::run_pipeline(config);
    std::cout << "run " << report.run_id << " -> " << config.out_dir << "\n";
    for (const auto& [name, secs] : report.stage_seconds)
        std::printf("  %-12s %8.2f s\n", name.c_str(), secs);
    for (const auto& m : report.metrics)
        std::printf("  %-12s %12.6g  (%s)\n", m.metric.c_str(), m.value, m.parameters.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cone-beam CT reconstruction through pseudo-polar Radon space"};
    app.require_subcommand(1);
    CliOptions o;

    std::string stages_arg;
    auto* pipeline = app.add_subcommand("pipeline", "run all stages (or --stages subset)");
    add_common_flags(pipeline, o);
    pipeline->add_option("--stages", stages_arg,
                         "comma list from: phantom,project,radon,reconstruct,metrics");

    auto* phantom = app.add_subcommand("phantom", "voxelize the phantom only");
    auto* project = app.add_subcommand("project", "cone-beam projections (resumes from volume)");
    auto* radon = app.add_subcommand("radon", "detector derivatives, rebinning, radial integral");
    auto* reconstruct = app.add_subcommand("reconstruct", "inverse 3D DRT (resumes from radon)");
    auto* metrics = app.add_subcommand("metrics", "PSNR / CNR / MSSIM against the phantom");
    for (auto* sub : {phantom, project, radon, reconstruct, metrics}) add_common_flags(sub, o);

    CLI11_PARSE(app, argc, argv);

    try {
        std::vector<ppr::Stage> stages;
        if (pipeline->parsed()) {
            stages = stages_arg.empty()
                         ? std::vector<ppr::Stage>{ppr::Stage::phantom, ppr::Stage::project,
                                                   ppr::Stage::radon, ppr::Stage::reconstruct,
                                                   ppr::Stage::metrics}
                         : parse_stage_list(stages_arg);
        } else if (phantom->parsed()) {
            stages = {ppr::Stage::phantom};
        } else if (project->parsed()) {
            stages = {ppr::Stage::project};
        } else if (radon->parsed()) {
            stages = {ppr::Stage::radon};
        } else if (reconstruct->parsed()) {
            stages = {ppr::Stage::reconstruct};
        } else if (metrics->parsed()) {
            stages = {ppr::Stage::metrics};
        }
        return run(build_config(o, stages));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
