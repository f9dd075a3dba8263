#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <vector>

#include "ppradon/pipeline.hpp"

using namespace ppr;
namespace fs = std::filesystem;

namespace {

RunConfig tiny_config(const std::string& out) {
    RunConfig c;
    c.geometry.sx = 8; c.geometry.nx = 8; c.geometry.su = 48; c.geometry.nu = 16;
    c.geometry.sp = 1500; c.geometry.so = 1000; c.geometry.n_proj = 30;
    c.out_dir = out;
    c.workers = 2;
    return c;
}

std::vector<char> slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::vector<char>((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
}

void wipe(const std::string& dir) { fs::remove_all(dir); }

}  // namespace

TEST_CASE("phantom-only run writes just the volume") {
    const std::string out = "pipe_phantom_only";
    wipe(out);
    RunConfig c = tiny_config(out);
    c.stages = {Stage::phantom};
    run_pipeline(c);
    CHECK(fs::exists(out + "/volume.f32"));
    CHECK(fs::exists(out + "/volume.f32.json"));
    CHECK_FALSE(fs::exists(out + "/projections.f32"));
    CHECK_FALSE(fs::exists(out + "/radon.f32"));
    CHECK_FALSE(fs::exists(out + "/recon.f32"));
    wipe(out);
}

TEST_CASE("identical configurations give bit-identical artifacts") {
    const std::string a = "pipe_det_a", b = "pipe_det_b";
    wipe(a); wipe(b);
    RunConfig ca = tiny_config(a), cb = tiny_config(b);
    run_pipeline(ca);
    run_pipeline(cb);
    for (const char* f : {"volume.f32", "projections.f32", "radon_deriv.f32", "radon.f32",
                          "recon.f32", "metrics.csv"}) {
        INFO(f);
        const bool identical = slurp(a + "/" + f) == slurp(b + "/" + f);
        CHECK(identical);
    }
    wipe(a); wipe(b);
}

TEST_CASE("staged runs resume to the same outputs as a single full run") {
    const std::string full = "pipe_full", staged = "pipe_staged";
    wipe(full); wipe(staged);
    RunConfig c = tiny_config(full);
    run_pipeline(c);

    RunConfig s1 = tiny_config(staged);
    s1.stages = {Stage::phantom, Stage::project, Stage::radon};
    run_pipeline(s1);
    RunConfig s2 = tiny_config(staged);
    s2.stages = {Stage::reconstruct, Stage::metrics};
    run_pipeline(s2);

    for (const char* f : {"radon.f32", "recon.f32", "metrics.csv"}) {
        INFO(f);
        const bool identical = slurp(full + "/" + f) == slurp(staged + "/" + f);
        CHECK(identical);
    }
    wipe(full); wipe(staged);
}

TEST_CASE("resume with a different configuration is refused") {
    const std::string out = "pipe_mismatch";
    wipe(out);
    RunConfig c = tiny_config(out);
    c.stages = {Stage::phantom, Stage::project};
    run_pipeline(c);

    RunConfig other = tiny_config(out);
    other.geometry.so = 900;  // different physics, different hash
    other.stages = {Stage::radon};
    try {
        run_pipeline(other);
        FAIL("expected a config-hash mismatch");
    } catch (const std::exception& e) {
        CHECK(std::string(e.what()).find("hash mismatch") != std::string::npos);
        CHECK(std::string(e.what()).find("[stage:radon]") != std::string::npos);
    }
    wipe(out);
}

TEST_CASE("missing upstream artifacts abort with a stage tag") {
    const std::string out = "pipe_missing";
    wipe(out);
    RunConfig c = tiny_config(out);
    c.stages = {Stage::reconstruct};
    try {
        run_pipeline(c);
        FAIL("expected a missing-artifact error");
    } catch (const std::exception& e) {
        CHECK(std::string(e.what()).find("[stage:reconstruct]") != std::string::npos);
    }
    wipe(out);
}

TEST_CASE("stage lists must be contiguous") {
    RunConfig c = tiny_config("pipe_bad_stages");
    c.stages = {Stage::phantom, Stage::radon};
    CHECK_THROWS(run_pipeline(c));
    c.stages = {};
    CHECK_THROWS(run_pipeline(c));
}

TEST_CASE("slice export reproduces the windowing map") {
    const std::string out = "pipe_slices";
    wipe(out);
    fs::create_directories(out);
    const int n = 8;
    Volume vol;
    vol.voxel_mm = 1.0;
    vol.data = Grid3<double>(n, n, n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) vol.data(i, j, k) = i + 10.0 * j + 0.25 * k;
    auto paths = export_slices(vol, 2, {3}, out, "slice");
    REQUIRE(paths.size() == 1);

    // re-read and check every byte against the recorded window
    std::ifstream side(sidecar_path(paths[0]));
    nlohmann::json h;
    side >> h;
    const double lo = h["window"]["lo"].get<double>();
    const double hi = h["window"]["hi"].get<double>();
    std::ifstream img(paths[0], std::ios::binary);
    std::string line;
    std::getline(img, line);  // P5
    std::getline(img, line);  // dims
    std::getline(img, line);  // maxval
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            char b;
            img.read(&b, 1);
            const double expect = (vol.data(i, j, 3) - lo) / (hi - lo) * 255.0;
            CHECK(static_cast<int>(static_cast<unsigned char>(b)) ==
                  static_cast<int>(std::lround(expect)));
        }
    CHECK_THROWS(export_slices(vol, 2, {99}, out, "slice"));

    // a uniform slice exports as a uniform image
    Volume flat;
    flat.voxel_mm = 1.0;
    flat.data = Grid3<double>(n, n, n, 4.2);
    auto fp = export_slices(flat, 0, {0}, out, "flat");
    std::ifstream fimg(fp[0], std::ios::binary);
    std::getline(fimg, line);
    std::getline(fimg, line);
    std::getline(fimg, line);
    char b0;
    fimg.read(&b0, 1);
    for (int i = 1; i < n * n; ++i) {
        char b;
        fimg.read(&b, 1);
        CHECK(b == b0);
    }
    wipe(out);
}

TEST_CASE("run config parses from JSON with flag-style overrides") {
    nlohmann::json j = {
        {"geometry", {{"sx", 8}, {"nx", 8}, {"su", 48}, {"nu", 16}, {"SP", 1500}, {"SO", 1000},
                      {"n_proj", 30}}},
        {"phantom", "shepp-logan"},
        {"shadow", "oracle"},
        {"far_source", "off"},
        {"projector", "voxel"},
        {"out", "cfgdir"},
        {"workers", 3},
        {"stages", {"phantom", "project"}}};
    RunConfig c = config_from_json(j);
    CHECK(c.geometry.nu == 16);
    CHECK(c.shadow == ShadowFill::oracle);
    CHECK(c.far_source == RunConfig::FarSource::off);
    CHECK(c.projector == RunConfig::Projector::voxel);
    CHECK(c.out_dir == "cfgdir");
    CHECK(c.workers == 3);
    REQUIRE(c.stages.size() == 2);
    CHECK(c.stages[1] == Stage::project);
    CHECK_FALSE(c.far_source_resolved());

    // metrics stage emits the CSV schema
    const std::string out = "pipe_metrics";
    fs::remove_all(out);
    RunConfig full = tiny_config(out);
    run_pipeline(full);
    std::ifstream csv(out + "/metrics.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header == "run_id,metric,value,parameters");
    int rows = 0;
    std::string row;
    while (std::getline(csv, row))
        if (!row.empty()) ++rows;
    CHECK(rows >= 2);  // psnr + mssim at least
    fs::remove_all(out);
}
