#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "drt.hpp"
#include "geometry.hpp"
#include "grangeat.hpp"
#include "io.hpp"
#include "metrics.hpp"
#include "phantom.hpp"

namespace ppr {

// ---------------------------------------------------------------------------
// Pipeline orchestration: phantom -> project -> radon -> reconstruct ->
// metrics, with every intermediate persisted in the raw container format so
// any contiguous stage range can resume from a previous run. The run is
// deterministic for a given config; the config hash is embedded in every
// artifact header and checked on resume.
// ---------------------------------------------------------------------------

enum class Stage { phantom = 0, project, radon, reconstruct, metrics };

inline const char* stage_name(Stage s) {
    switch (s) {
        case Stage::phantom: return "phantom";
        case Stage::project: return "project";
        case Stage::radon: return "radon";
        case Stage::reconstruct: return "reconstruct";
        case Stage::metrics: return "metrics";
    }
    return "?";
}

inline Stage stage_from_name(const std::string& s) {
    for (int i = 0; i <= static_cast<int>(Stage::metrics); ++i)
        if (s == stage_name(static_cast<Stage>(i))) return static_cast<Stage>(i);
    throw std::invalid_argument("unknown stage: " + s);
}

struct PhantomSource {
    enum class Kind { builtin_shepp_logan, json_file, volume_file } kind =
        Kind::builtin_shepp_logan;
    std::string path;  // for json_file / volume_file
};

struct RunConfig {
    Geometry geometry;
    PhantomSource phantom_source;
    ShadowFill shadow = ShadowFill::linear_theta;
    enum class FarSource { automatic, on, off } far_source = FarSource::automatic;
    // analytic: exact chords through the ellipsoid description;
    // voxel: ray marching through the voxelized phantom volume
    enum class Projector { analytic, voxel } projector = Projector::analytic;
    std::string out_dir = "run";
    std::vector<Stage> stages = {Stage::phantom, Stage::project, Stage::radon, Stage::reconstruct,
                                 Stage::metrics};
    int workers = 1;

    bool far_source_resolved() const {
        if (far_source == FarSource::on) return true;
        if (far_source == FarSource::off) return false;
        return geometry.so >= 10.0 * geometry.sx;  // SA/SO within ~0.4% over the cone
    }
};

inline const char* shadow_name(ShadowFill s) {
    switch (s) {
        case ShadowFill::zero: return "zero";
        case ShadowFill::linear_theta: return "linear";
        case ShadowFill::oracle: return "oracle";
    }
    return "?";
}

inline ShadowFill shadow_from_name(const std::string& s) {
    if (s == "zero") return ShadowFill::zero;
    if (s == "linear" || s == "linear_theta") return ShadowFill::linear_theta;
    if (s == "oracle") return ShadowFill::oracle;
    throw std::invalid_argument("unknown shadow fill: " + s);
}

// FNV-1a over the canonical physics config (stage list, output dir and worker
// count excluded so resumed runs hash identically).
inline std::string config_hash(const RunConfig& c) {
    nlohmann::json j;
    j["geometry"] = geometry_to_json(c.geometry);
    j["shadow"] = shadow_name(c.shadow);
    j["far_source"] = c.far_source_resolved();
    j["projector"] = c.projector == RunConfig::Projector::voxel ? "voxel" : "analytic";
    switch (c.phantom_source.kind) {
        case PhantomSource::Kind::builtin_shepp_logan: j["phantom"] = "shepp-logan"; break;
        case PhantomSource::Kind::json_file: j["phantom"] = {{"json", c.phantom_source.path}}; break;
        case PhantomSource::Kind::volume_file: j["phantom"] = {{"volume", c.phantom_source.path}}; break;
    }
    const std::string s = j.dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

inline RunConfig config_from_json(const nlohmann::json& j) {
    RunConfig c;
    if (j.contains("geometry")) c.geometry = geometry_from_json(j.at("geometry"));
    if (j.contains("phantom")) {
        const auto& p = j.at("phantom");
        if (p.is_string()) {
            if (p.get<std::string>() != "shepp-logan")
                throw std::invalid_argument("unknown builtin phantom: " + p.get<std::string>());
            c.phantom_source.kind = PhantomSource::Kind::builtin_shepp_logan;
        } else if (p.contains("json")) {
            c.phantom_source.kind = PhantomSource::Kind::json_file;
            c.phantom_source.path = p.at("json").get<std::string>();
        } else if (p.contains("volume")) {
            c.phantom_source.kind = PhantomSource::Kind::volume_file;
            c.phantom_source.path = p.at("volume").get<std::string>();
        } else {
            throw std::invalid_argument("phantom must be a builtin name or {json|volume: path}");
        }
    }
    if (j.contains("shadow")) c.shadow = shadow_from_name(j.at("shadow").get<std::string>());
    if (j.contains("projector")) {
        const std::string p = j.at("projector").get<std::string>();
        if (p == "analytic") c.projector = RunConfig::Projector::analytic;
        else if (p == "voxel") c.projector = RunConfig::Projector::voxel;
        else throw std::invalid_argument("projector must be analytic|voxel");
    }
    if (j.contains("far_source")) {
        if (j.at("far_source").is_boolean())
            c.far_source = j.at("far_source").get<bool>() ? RunConfig::FarSource::on
                                                          : RunConfig::FarSource::off;
        else {
            const std::string f = j.at("far_source").get<std::string>();
            if (f == "auto") c.far_source = RunConfig::FarSource::automatic;
            else if (f == "on") c.far_source = RunConfig::FarSource::on;
            else if (f == "off") c.far_source = RunConfig::FarSource::off;
            else throw std::invalid_argument("far_source must be auto|on|off");
        }
    }
    if (j.contains("out")) c.out_dir = j.at("out").get<std::string>();
    if (j.contains("workers")) c.workers = j.at("workers").get<int>();
    if (j.contains("stages")) {
        c.stages.clear();
        for (const auto& s : j.at("stages")) c.stages.push_back(stage_from_name(s.get<std::string>()));
    }
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    nlohmann::json j;
    in >> j;
    return config_from_json(j);
}

struct StageError : std::runtime_error {
    StageError(Stage stage, const std::string& what)
        : std::runtime_error(std::string("[stage:") + stage_name(stage) + "] " + what) {}
};

struct RunReport {
    std::string run_id;
    std::vector<std::pair<std::string, double>> stage_seconds;
    std::vector<MetricRow> metrics;
};

// Windowed 8-bit slice export along one axis; returns written paths.
inline std::vector<std::string> export_slices(const Volume& vol, int axis,
                                              const std::vector<int>& indices,
                                              const std::string& dir,
                                              const std::string& basename) {
    const int n = vol.n();
    std::vector<std::string> paths;
    for (int idx : indices) {
        if (idx < 0 || idx >= n) throw std::invalid_argument("export_slices: index out of range");
        Grid2<double> img(n, n);
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                double v = 0.0;
                if (axis == 0) v = vol.data(idx, a, b);
                else if (axis == 1) v = vol.data(a, idx, b);
                else v = vol.data(a, b, idx);
                img(a, b) = v;
            }
        double lo = img.data()[0], hi = img.data()[0];
        for (std::size_t i = 0; i < img.size(); ++i) {
            lo = std::min(lo, img.data()[i]);
            hi = std::max(hi, img.data()[i]);
        }
        std::ostringstream name;
        name << dir << "/" << basename << "_" << "xyz"[axis] << std::setw(3) << std::setfill('0')
             << idx << ".pgm";
        write_pgm8(name.str(), img, lo, hi);
        paths.push_back(name.str());
    }
    return paths;
}

namespace detail {

inline void check_hash(const std::string& artifact, const std::string& found,
                       const std::string& expected, Stage stage) {
    if (found != expected)
        throw StageError(stage, "config hash mismatch on " + artifact + " (found " +
                                    (found.empty() ? "<none>" : found) + ", expected " + expected +
                                    "); refusing to resume");
}

}  // namespace detail

inline RunReport run_pipeline(const RunConfig& config) {
    namespace fs = std::filesystem;
    config.geometry.validate();
    if (config.stages.empty()) throw std::invalid_argument("run_pipeline: no stages requested");
    // stages must be a contiguous run of the canonical order
    for (std::size_t i = 1; i < config.stages.size(); ++i)
        if (static_cast<int>(config.stages[i]) != static_cast<int>(config.stages[i - 1]) + 1)
            throw std::invalid_argument("run_pipeline: stages must be contiguous and in order");

    set_workers(config.workers);
    const std::string hash = config_hash(config);
    fs::create_directories(config.out_dir);
    auto path = [&](const char* name) { return config.out_dir + "/" + name; };

    RunReport report;
    report.run_id = hash;
    const bool far = config.far_source_resolved();
    const Geometry& g = config.geometry;

    auto runs = [&](Stage s) {
        for (Stage t : config.stages)
            if (t == s) return true;
        return false;
    };
    auto timer = [&](const char* name, auto&& fn) {
        report.stage_seconds.emplace_back(name, 0.0);
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        report.stage_seconds.back().second =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    // Stages communicate only through the persisted artifacts: every stage
    // reloads its inputs from the float32 container, so a resumed run sees
    // bit-identical data to a single full run.
    std::optional<Phantom> phantom;  // analytic description when available
    std::optional<Volume> volume;    // cache of the persisted phantom volume

    auto need_phantom_desc = [&]() -> const Phantom* {
        if (phantom) return &*phantom;
        switch (config.phantom_source.kind) {
            case PhantomSource::Kind::builtin_shepp_logan:
                phantom = shepp_logan_phantom(g.sx);
                return &*phantom;
            case PhantomSource::Kind::json_file:
                phantom = load_phantom(config.phantom_source.path);
                return &*phantom;
            case PhantomSource::Kind::volume_file:
                return nullptr;
        }
        return nullptr;
    };
    auto need_volume = [&](Stage stage) -> const Volume& {
        if (!volume) {
            std::string h;
            try {
                volume = load_volume(path("volume.f32"), &h);
            } catch (const std::exception& e) {
                throw StageError(stage, std::string("missing phantom volume: ") + e.what());
            }
            detail::check_hash("volume.f32", h, hash, stage);
        }
        return *volume;
    };

    try {
        if (runs(Stage::phantom)) {
            timer("phantom", [&] {
                Volume built;
                if (config.phantom_source.kind == PhantomSource::Kind::volume_file) {
                    built = load_volume(config.phantom_source.path);
                    if (built.n() != g.nx)
                        throw std::runtime_error("volume side does not match geometry nx");
                } else {
                    built = voxelize(*need_phantom_desc(), g.nx);
                }
                save_volume(path("volume.f32"), built, hash);
            });
        }
        if (runs(Stage::project)) {
            timer("project", [&] {
                const Volume& vol = need_volume(Stage::project);
                const Phantom* desc = config.projector == RunConfig::Projector::analytic
                                          ? need_phantom_desc()
                                          : nullptr;
                ProjectionSet projections =
                    desc ? cone_beam_project(*desc, g) : cone_beam_project(vol, g);
                save_stack(path("projections.f32"), projections.views, projections.du_virtual,
                           hash);
            });
        }
        if (runs(Stage::radon)) {
            timer("radon", [&] {
                double du = 0.0;
                std::string h;
                std::vector<Grid2<double>> views;
                try {
                    views = load_stack(path("projections.f32"), &du, &h);
                } catch (const std::exception& e) {
                    throw StageError(Stage::radon, std::string("missing projections: ") + e.what());
                }
                detail::check_hash("projections.f32", h, hash, Stage::radon);
                if (static_cast<int>(views.size()) != g.n_proj)
                    throw StageError(Stage::radon, "projection count does not match geometry");

                std::vector<Drt2Result> derivs(g.n_proj);
                parallel_for(0, static_cast<std::size_t>(g.n_proj), [&](std::size_t t) {
                    WeightedProjection wp =
                        preweight(views[t], g, g.psi_of(static_cast<int>(t)), far);
                    derivs[t] = detector_radon_derivative(wp);
                });
                RadonDerivative4D deriv = rebin(derivs, g, g.nx, g.dm());
                save_grid4(path("radon_deriv.f32"), deriv.values, deriv.du, "radon_derivative",
                           hash);
                RadonSpace4D integrated = integrate_radial(deriv);
                // rebin's flags extend the geometric shadow zone with the
                // points its radial integral cannot reach
                const Grid4<unsigned char>& mask = deriv.shadow;
                std::optional<RadonSpace4D> oracle_radon;
                if (config.shadow == ShadowFill::oracle) {
                    const Volume& vol = need_volume(Stage::radon);
                    oracle_radon = drt3(vol.data, vol.voxel_mm);
                }
                RadonSpace4D radon = fill_shadow_zone(integrated, mask, config.shadow,
                                                      oracle_radon ? &*oracle_radon : nullptr);
                save_grid4(path("radon.f32"), radon.values, radon.du, "radon", hash);
            });
        }
        if (runs(Stage::reconstruct)) {
            timer("reconstruct", [&] {
                double du = 0.0;
                std::string h;
                Grid4<double> v;
                try {
                    v = load_grid4(path("radon.f32"), &du, &h);
                } catch (const std::exception& e) {
                    throw StageError(Stage::reconstruct, std::string("missing radon: ") + e.what());
                }
                detail::check_hash("radon.f32", h, hash, Stage::reconstruct);
                RadonSpace4D radon{g.nx, du, std::move(v)};
                Volume recon;
                recon.voxel_mm = g.dm();
                recon.data = idrt3(radon);
                save_volume(path("recon.f32"), recon, hash);
                export_slices(recon, 2, {g.nx / 2}, config.out_dir, "recon");
            });
        }
        if (runs(Stage::metrics)) {
            timer("metrics", [&] {
                const Volume& vol = need_volume(Stage::metrics);
                std::string h;
                Volume recon;
                try {
                    recon = load_volume(path("recon.f32"), &h);
                } catch (const std::exception& e) {
                    throw StageError(Stage::metrics, std::string("missing recon: ") + e.what());
                }
                detail::check_hash("recon.f32", h, hash, Stage::metrics);

                double mu_max = 1.0;
                if (const Phantom* desc = need_phantom_desc()) mu_max = desc->mu_max;
                else {
                    for (std::size_t i = 0; i < vol.data.size(); ++i)
                        mu_max = std::max(mu_max, vol.data.data()[i]);
                }
                std::ostringstream params;
                params << "nx=" << g.nx << ";nu=" << g.nu << ";n_proj=" << g.n_proj
                       << ";shadow=" << shadow_name(config.shadow);
                report.metrics.push_back(
                    {hash, "psnr", psnr(recon.data, vol.data, mu_max), params.str()});
                report.metrics.push_back(
                    {hash, "mssim", mssim(recon.data, vol.data, SsimParams{8, mu_max}),
                     params.str()});
                // ROI: central box; reference: air outside the phantom, inside the cube
                const int n = g.nx;
                RegionSpec reg;
                const int c = n / 2, r8 = std::max(1, n / 8);
                reg.roi_lo[0] = c - r8; reg.roi_hi[0] = c + r8;
                reg.roi_lo[1] = c - r8; reg.roi_hi[1] = c + r8;
                reg.roi_lo[2] = c - r8; reg.roi_hi[2] = c + r8;
                reg.ref_lo[0] = n - std::max(2, n / 16) - 1; reg.ref_hi[0] = n - 1;
                reg.ref_lo[1] = c - r8; reg.ref_hi[1] = c + r8;
                reg.ref_lo[2] = c - r8; reg.ref_hi[2] = c + r8;
                try {
                    report.metrics.push_back({hash, "cnr", cnr(recon.data, reg), params.str()});
                } catch (const std::exception&) {
                    // degenerate regions (tiny volumes): skip the row
                }
                write_metrics_csv(path("metrics.csv"), report.metrics);
            });
        }
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        // tag whatever stage was running last
        const std::string last =
            report.stage_seconds.empty() ? "phantom" : report.stage_seconds.back().first;
        throw std::runtime_error("[stage:" + last + "] " + e.what());
    }
    return report;
}

}  // namespace ppr
