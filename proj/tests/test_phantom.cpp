#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <random>

#include "ppradon/phantom.hpp"

using namespace ppr;

namespace {

Geometry small_geometry(double sx, int nx) {
    Geometry g;
    g.sx = sx; g.nx = nx; g.su = 48; g.nu = 32; g.sp = 1500; g.so = 1000; g.n_proj = 8;
    return g;
}

Phantom unit_ball(double radius, double sx, double density = 1.0) {
    Phantom ph;
    ph.sx = sx;
    ph.mu_max = density;
    ph.ellipsoids.push_back(Ellipsoid{{0, 0, 0}, {radius, radius, radius}, 0.0, density});
    return ph;
}

}  // namespace

TEST_CASE("shepp-logan densities at landmark points") {
    // at the origin only the outer shell (+1) and the big inner (-0.8) overlap
    const Phantom ph = shepp_logan_phantom(64.0);
    CHECK(density_at(ph, 0, 0, 0) == Catch::Approx(0.2));
    // outside the outer ellipsoid
    CHECK(density_at(ph, 31.0, 0, 0) == 0.0);

    const int n = 64;
    Volume vol = shepp_logan_3d(n, 64.0);
    CHECK(vol.data(slot_of(0, n), slot_of(0, n), slot_of(0, n)) == Catch::Approx(0.2));
    CHECK(vol.data(n - 1, n - 1, n - 1) == 0.0);
}

TEST_CASE("voxelized mass approaches the analytic ellipsoid volumes") {
    const double sx = 64.0;
    const Phantom ph = shepp_logan_phantom(sx);
    double analytic = 0.0;
    for (const auto& e : ph.ellipsoids)
        analytic += e.density * 4.0 / 3.0 * kPi * e.semi_axes[0] * e.semi_axes[1] * e.semi_axes[2];
    const int n = 64;
    Volume vol = shepp_logan_3d(n, sx);
    double voxel_sum = 0.0;
    for (double v : vol.data.raw()) voxel_sum += v;
    voxel_sum *= vol.voxel_mm * vol.voxel_mm * vol.voxel_mm;
    CHECK(std::abs(voxel_sum - analytic) <= 0.02 * std::abs(analytic));
}

TEST_CASE("zero phantom projects to zero") {
    Phantom empty;
    empty.sx = 16.0;
    Geometry g = small_geometry(16.0, 16);
    auto ps = cone_beam_project(empty, g);
    REQUIRE(ps.views.size() == 8);
    for (const auto& view : ps.views)
        for (double v : view.raw()) CHECK(v == 0.0);
}

TEST_CASE("central ray through a ball integrates to the diameter") {
    const double r = 5.0;
    Geometry g = small_geometry(16.0, 16);
    auto ps = cone_beam_project(unit_ball(r, 16.0), g);
    // pixel at the detector center: ray passes straight through the origin
    const int c = g.nu / 2;
    for (const auto& view : ps.views)
        CHECK(view(c, c) == Catch::Approx(2.0 * r).epsilon(1e-12));
}

TEST_CASE("off-center rays match the analytic chord length") {
    const double r = 5.0;
    Geometry g = small_geometry(16.0, 16);
    auto ps = cone_beam_project(unit_ball(r, 16.0), g);
    const double du = ps.du_virtual;
    const Grid2<double>& view = ps.views[0];
    const double psi = 0.0;
    const double cp = std::cos(psi), sp = std::sin(psi);
    for (int iu = 0; iu < g.nu; iu += 3)
        for (int iv = 0; iv < g.nu; iv += 3) {
            const double u = index_of(iu, g.nu) * du;
            const double v = index_of(iv, g.nu) * du;
            const double src[3] = {g.so * cp, g.so * sp, 0.0};
            const double q[3] = {-u * sp, u * cp, v};
            double d[3] = {q[0] - src[0], q[1] - src[1], q[2] - src[2]};
            const double len = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
            for (double& x : d) x /= len;
            // distance from the origin to the ray
            const double t = -(src[0] * d[0] + src[1] * d[1] + src[2] * d[2]);
            const double px = src[0] + t * d[0], py = src[1] + t * d[1], pz = src[2] + t * d[2];
            const double dist2 = px * px + py * py + pz * pz;
            const double expect = dist2 < r * r ? 2.0 * std::sqrt(r * r - dist2) : 0.0;
            CHECK(view(iu, iv) == Catch::Approx(expect).margin(1e-10));
        }
}

TEST_CASE("projections of a centered ball are invariant in the view angle") {
    Geometry g = small_geometry(16.0, 16);
    g.n_proj = 24;
    auto ps = cone_beam_project(unit_ball(5.0, 16.0), g);
    for (std::size_t t = 1; t < ps.views.size(); ++t)
        for (std::size_t i = 0; i < ps.views[0].size(); ++i)
            CHECK(std::abs(ps.views[t].raw()[i] - ps.views[0].raw()[i]) <= 1e-9);
}

TEST_CASE("analytic and ray-marched projectors agree on the voxelized phantom") {
    // a generically placed ball; grid-aligned boundaries are the worst case
    // for voxelization and exceed this bound slightly
    const int n = 32;
    const double sx = 32.0;
    Geometry g;
    g.sx = sx; g.nx = n; g.su = 96; g.nu = 32; g.sp = 1500; g.so = 1000; g.n_proj = 4;
    Phantom ph;
    ph.sx = sx;
    ph.mu_max = 1.0;
    ph.ellipsoids.push_back(Ellipsoid{{1.3, -1.3, 1.3}, {13.0, 13.0, 13.0}, 0.0, 1.0});
    auto analytic = cone_beam_project(ph, g);
    auto marched = cone_beam_project(voxelize(ph, n), g);
    double num = 0.0, den = 0.0;
    for (std::size_t t = 0; t < analytic.views.size(); ++t)
        for (std::size_t i = 0; i < analytic.views[t].size(); ++i) {
            const double a = analytic.views[t].raw()[i];
            const double b = marched.views[t].raw()[i];
            num += (a - b) * (a - b);
            den += a * a;
        }
    CHECK(std::sqrt(num / den) <= 0.02);
}

TEST_CASE("projector rejects a source inside the object") {
    Geometry g = small_geometry(16.0, 16);
    g.so = 13;  // below sx * sqrt(3) / 2
    g.sp = 20;
    CHECK_THROWS(cone_beam_project(unit_ball(5.0, 16.0), g));
}

TEST_CASE("volume save/load round trip is bit exact") {
    const int n = 8;
    Volume vol;
    vol.voxel_mm = 0.5;
    vol.data = Grid3<double>(n, n, n);
    std::mt19937 rng(9);
    std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
    for (auto& v : vol.data.raw()) v = dist(rng);  // exact float32 values

    const char* path = "vol_test.f32";
    save_volume(path, vol, "cafe");
    std::string hash;
    Volume back = load_volume(path, &hash);
    CHECK(hash == "cafe");
    CHECK(back.voxel_mm == 0.5);
    REQUIRE(back.n() == n);
    for (std::size_t i = 0; i < vol.data.size(); ++i)
        CHECK(back.data.raw()[i] == vol.data.raw()[i]);

    // a second save of the loaded volume produces identical bytes
    save_volume("vol_test2.f32", back, "cafe");
    std::ifstream a(path, std::ios::binary), b("vol_test2.f32", std::ios::binary);
    std::vector<char> ba((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    std::vector<char> bb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    CHECK(ba == bb);
    std::remove(path);
    std::remove(sidecar_path(path).c_str());
    std::remove("vol_test2.f32");
    std::remove(sidecar_path("vol_test2.f32").c_str());
}

TEST_CASE("truncated payload is rejected") {
    const int n = 4;
    Volume vol;
    vol.data = Grid3<double>(n, n, n, 1.0);
    const char* path = "vol_trunc.f32";
    save_volume(path, vol);
    // chop the payload
    std::filesystem::resize_file(path, 10);
    CHECK_THROWS(load_volume(path));
    std::remove(path);
    std::remove(sidecar_path(path).c_str());
}

TEST_CASE("phantom JSON round trip") {
    const char* path = "phantom_test.json";
    {
        std::ofstream out(path);
        out << R"({"sx": 32, "ellipsoids": [
                {"center": [0,0,0], "semi_axes": [10,8,6], "rot_z_deg": 15, "density": 1.0},
                {"center": [2,1,0], "semi_axes": [3,3,3], "density": -0.5}]})";
    }
    Phantom ph = load_phantom(path);
    CHECK(ph.sx == 32.0);
    REQUIRE(ph.ellipsoids.size() == 2);
    CHECK(ph.ellipsoids[0].rot_z == Catch::Approx(15.0 * kPi / 180.0));
    CHECK(ph.ellipsoids[1].density == -0.5);
    // mu_max falls back to the densest sampled point (both ellipsoids overlap at (2,1,0))
    CHECK(ph.mu_max == Catch::Approx(1.0).margin(0.51));
    std::remove(path);
}
