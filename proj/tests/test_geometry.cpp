#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <random>

#include "ppradon/geometry.hpp"

using namespace ppr;

namespace {

Geometry table_geometry() {
    Geometry g;
    g.sx = 64; g.nx = 64; g.su = 256; g.nu = 128; g.sp = 1500; g.so = 1000; g.n_proj = 360;
    return g;
}

}  // namespace

TEST_CASE("virtual detector scaling") {
    Geometry g = table_geometry();
    DetectorImage d{Grid2<double>(g.nu, g.nu, 1.0), g.su};
    auto v = virtualize_detector(d, g);
    CHECK(v.side_mm == Catch::Approx(256.0 * 1000.0 / 1500.0));  // 170.666...
    CHECK(v.samples.size0() == d.samples.size0());

    Geometry unit = g;
    unit.so = 1200;
    unit.sp = 1200.0000001;  // SO < SP required; same scale to 1e-10
    DetectorImage d2{Grid2<double>(g.nu, g.nu, 0.0), g.su};
    CHECK(virtualize_detector(d2, unit).side_mm == Catch::Approx(g.su));

    Geometry head = table_geometry();
    head.su = 64;
    DetectorImage d3{Grid2<double>(head.nu, head.nu, 0.0), head.su};
    CHECK(virtualize_detector(d3, head).side_mm == Catch::Approx(64.0 * 1000.0 / 1500.0));
}

TEST_CASE("radon_to_detector closed forms") {
    Geometry g = table_geometry();

    auto d0 = radon_to_detector(RadonPoint{0.0, 1.1, 2.0}, g);
    REQUIRE(d0.has_value());
    CHECK(d0->s == Catch::Approx(0.0).margin(1e-12));
    CHECK(d0->psi == Catch::Approx(wrap_angle_2pi(2.0 - kPi / 2.0)));

    const double rho = g.so / std::sqrt(2.0);
    auto d1 = radon_to_detector(RadonPoint{rho, kPi / 2.0, 1.0}, g);
    REQUIRE(d1.has_value());
    CHECK(d1->s == Catch::Approx(g.so).epsilon(1e-12));
    CHECK(d1->psi == Catch::Approx(wrap_angle_2pi(1.0 - kPi / 4.0)));
}

TEST_CASE("radon_to_detector rejects out-of-reach points and shadow points") {
    Geometry g = table_geometry();
    CHECK_THROWS(radon_to_detector(RadonPoint{g.so, kPi / 2, 0.0}, g));
    CHECK_THROWS(radon_to_detector(RadonPoint{g.so + 5, kPi / 2, 0.0}, g));
    // theta near pole with sizable rho: unmappable
    CHECK_FALSE(radon_to_detector(RadonPoint{10.0, 0.0, 0.0}, g).has_value());
}

TEST_CASE("mapped points keep the source on the integration plane") {
    Geometry g = table_geometry();
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> th(0.15, kPi - 0.15);
    std::uniform_real_distribution<double> ph(0.0, 2.0 * kPi);
    std::uniform_real_distribution<double> rr(0.0, 1.0);
    for (int i = 0; i < 500; ++i) {
        const double theta = th(rng);
        const double rho = rr(rng) * 0.95 * g.so * std::sin(theta);
        const double phi = ph(rng);
        auto d = radon_to_detector(RadonPoint{rho, theta, phi}, g);
        REQUIRE(d.has_value());
        const double x = rho * std::sin(theta) * std::cos(phi);
        const double y = rho * std::sin(theta) * std::sin(phi);
        const double z = rho * std::cos(theta);
        const double residual =
            x * x + y * y + z * z - g.so * (x * std::cos(d->psi) + y * std::sin(d->psi));
        CHECK(std::abs(residual) <= 1e-9 * g.so * g.so);
        // alpha changes sign across the equator
        if (theta < kPi / 2 - 1e-6) CHECK(d->alpha > 0.0);
        if (theta > kPi / 2 + 1e-6) CHECK(d->alpha < 0.0);
    }
}

TEST_CASE("s grows strictly with rho") {
    Geometry g = table_geometry();
    double prev = -1.0;
    for (double rho = 0.0; rho < g.so * 0.999; rho += g.so / 64.0) {
        auto d = radon_to_detector(RadonPoint{rho, kPi / 2, 0.0}, g);
        REQUIRE(d.has_value());
        CHECK(d->s > prev);
        prev = d->s;
    }
}

TEST_CASE("line_to_polar closed forms") {
    double s, alpha;
    line_to_polar(LineFamily::horizontal, -1.0, 0.0, s, alpha);
    CHECK(s == 0.0);
    CHECK(alpha == Catch::Approx(kPi / 4));

    line_to_polar(LineFamily::vertical, 0.0, 4.0, s, alpha);
    CHECK(s == Catch::Approx(4.0));
    CHECK(alpha == Catch::Approx(0.0).margin(1e-15));

    line_to_polar(LineFamily::horizontal, 0.5, 3.0, s, alpha);
    CHECK(s == Catch::Approx(3.0 / std::sqrt(1.25)));
    CHECK(alpha == Catch::Approx(std::atan(-2.0)));

    line_to_polar(LineFamily::horizontal, 0.0, 2.0, s, alpha);
    CHECK(alpha == Catch::Approx(kPi / 2));
}

TEST_CASE("polar_to_line closed forms and round trip") {
    // the 45-degree line sits on the shared |q| = 1 boundary of the two
    // families; floating pi/4 resolves the tie to either side, both of which
    // name the same line
    auto lc = polar_to_line(0.0, kPi / 4);
    CHECK(lc.q == Catch::Approx(-1.0));
    CHECK(lc.p == Catch::Approx(0.0).margin(1e-15));

    lc = polar_to_line(1.0, kPi / 3);  // clearly basically horizontal
    CHECK(lc.family == LineFamily::horizontal);
    CHECK(lc.q == Catch::Approx(-std::cos(kPi / 3) / std::sin(kPi / 3)));

    lc = polar_to_line(4.0, 0.0);
    CHECK(lc.family == LineFamily::vertical);
    CHECK(lc.q == Catch::Approx(0.0).margin(1e-15));
    CHECK(lc.p == Catch::Approx(4.0));

    std::mt19937 rng(17);
    std::uniform_real_distribution<double> sd(0.0, 50.0);
    std::uniform_real_distribution<double> ad(-kPi, kPi);
    for (int i = 0; i < 1000; ++i) {
        const double s = sd(rng);
        const double alpha = ad(rng);
        const LineCoords c = polar_to_line(s, alpha);
        CHECK(std::abs(c.q) <= 1.0 + 1e-14);
        double s2, alpha2;
        line_to_polar(c.family, c.q, c.p, s2, alpha2);
        CHECK(s2 == Catch::Approx(s).margin(1e-12));
        // angles agree modulo pi
        double da = std::fmod(std::abs(alpha2 - alpha), kPi);
        da = std::min(da, kPi - da);
        CHECK(da < 1e-12);
    }
}

TEST_CASE("plane_to_spherical closed forms") {
    auto z5 = plane_to_spherical(2, 0.0, 0.0, 5.0);
    CHECK(z5.point.rho == Catch::Approx(5.0));
    CHECK(z5.point.theta == Catch::Approx(0.0).margin(1e-12));

    auto x5 = plane_to_spherical(0, 0.0, 0.0, 5.0);
    CHECK(x5.point.rho == Catch::Approx(5.0));
    CHECK(x5.point.theta == Catch::Approx(kPi / 2));
    CHECK(x5.point.phi == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("plane normals are unit length and orthogonal to in-plane directions") {
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> qd(-1.0, 1.0);
    std::uniform_real_distribution<double> pd(-20.0, 20.0);
    for (int i = 0; i < 600; ++i) {
        const int fam = static_cast<int>(rng() % 3);
        const double q1 = qd(rng), q2 = qd(rng), p = pd(rng);
        const auto sp = plane_to_spherical(fam, q1, q2, p);
        const double st = std::sin(sp.point.theta), ct = std::cos(sp.point.theta);
        const double nx_ = st * std::cos(sp.point.phi);
        const double ny_ = st * std::sin(sp.point.phi);
        const double nz_ = ct;
        CHECK(std::abs(nx_ * nx_ + ny_ * ny_ + nz_ * nz_ - 1.0) <= 1e-12);
        // two in-plane basis vectors of the plane axis_f = q1 a + q2 b + p
        double v1[3], v2[3];
        if (fam == 0) {
            v1[0] = q1; v1[1] = 1; v1[2] = 0;
            v2[0] = q2; v2[1] = 0; v2[2] = 1;
        } else if (fam == 1) {
            v1[0] = 1; v1[1] = q1; v1[2] = 0;
            v2[0] = 0; v2[1] = q2; v2[2] = 1;
        } else {
            v1[0] = 1; v1[1] = 0; v1[2] = q1;
            v2[0] = 0; v2[1] = 1; v2[2] = q2;
        }
        CHECK(std::abs(nx_ * v1[0] + ny_ * v1[1] + nz_ * v1[2]) <= 1e-12 * (1 + std::abs(p)));
        CHECK(std::abs(nx_ * v2[0] + ny_ * v2[1] + nz_ * v2[2]) <= 1e-12 * (1 + std::abs(p)));
        // the canonical point (rho >= 0 along the flipped normal) is the same
        // foot of perpendicular, so it satisfies the plane equation
        const double nrm = std::sqrt(1.0 + q1 * q1 + q2 * q2);
        CHECK(sp.rho_signed == Catch::Approx(p / nrm));
        const double px = sp.point.rho * nx_;
        const double py = sp.point.rho * ny_;
        const double pz = sp.point.rho * nz_;
        const double lhs = (fam == 0) ? px : (fam == 1) ? py : pz;
        const double rhs = (fam == 0)   ? q1 * py + q2 * pz + p
                           : (fam == 1) ? q1 * px + q2 * pz + p
                                        : q1 * px + q2 * py + p;
        CHECK(std::abs(lhs - rhs) <= 1e-10 * (1 + std::abs(p)));
    }
}

TEST_CASE("shadow predicate basics") {
    Geometry g = table_geometry();
    CHECK_FALSE(in_shadow_zone(0.0, 0.7, g));
    CHECK(in_shadow_zone(1.0, 0.0, g));  // horizontal plane off the source circle
}

TEST_CASE("shadow mask matches a direct scan") {
    Geometry g;
    g.sx = 16; g.nx = 16; g.su = 48; g.nu = 64; g.sp = 1500; g.so = 1000; g.n_proj = 90;
    const int n = g.nx, m = 3 * n + 1, ns = n + 1;
    const double dm = g.dm();
    auto mask = shadow_mask(n, dm, g);
    std::size_t shadow_count = 0;
    for (int fam = 0; fam < 3; ++fam)
        for (int ps = 0; ps < m; ++ps)
            for (int ls = 0; ls < ns; ++ls)
                for (int js = 0; js < ns; ++js) {
                    // independent evaluation from the plane normal
                    const double q1 = 2.0 * index_of(ls, ns) / n;
                    const double q2 = 2.0 * index_of(js, ns) / n;
                    const double nrm = std::sqrt(1 + q1 * q1 + q2 * q2);
                    const double rho = std::abs(index_of(ps, m)) * dm / nrm;
                    double nz_ = 0;
                    if (fam == 2) nz_ = 1.0 / nrm;
                    else nz_ = -q2 / nrm;
                    const double sin_theta = std::sqrt(std::max(0.0, 1.0 - nz_ * nz_));
                    const bool expect = rho > g.so * sin_theta;
                    CHECK(static_cast<bool>(mask(fam, ps, ls, js)) == expect);
                    if (expect) ++shadow_count;
                }
    // only the near-axial z-planes are unreachable at this scale
    CHECK(shadow_count > 0);
    CHECK(shadow_count < mask.size() / 100);
}

TEST_CASE("geometry loads from JSON with the documented keys") {
    const char* path = "geom_test.json";
    {
        std::ofstream out(path);
        out << R"({"sx": 64, "nx": 64, "su": 256, "nu": 128, "SP": 1500, "SO": 1000, "n_proj": 360})";
    }
    Geometry g = load_geometry(path);
    CHECK(g.sx == 64.0);
    CHECK(g.nx == 64);
    CHECK(g.su == 256.0);
    CHECK(g.nu == 128);
    CHECK(g.sp == 1500.0);
    CHECK(g.so == 1000.0);
    CHECK(g.n_proj == 360);
    CHECK(g.dm() == Catch::Approx(1.0));
    CHECK(g.du_virtual() == Catch::Approx(256.0 * (1000.0 / 1500.0) / 128.0));
    std::remove(path);
}

TEST_CASE("geometry invariants are enforced") {
    Geometry g = table_geometry();
    g.so = 2000;  // SO > SP
    CHECK_THROWS(g.validate());
    g = table_geometry();
    g.so = 40;  // source inside the object's reach
    CHECK_THROWS(g.validate());
    g = table_geometry();
    g.nx = 63;
    CHECK_THROWS(g.validate());
}
