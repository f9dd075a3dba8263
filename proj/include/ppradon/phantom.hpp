#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "array.hpp"
#include "geometry.hpp"
#include "io.hpp"
#include "parallel.hpp"

namespace ppr {

// ---------------------------------------------------------------------------
// Analytic ellipsoid phantoms and the cone-beam forward projector.
// ---------------------------------------------------------------------------

struct Ellipsoid {
    std::array<double, 3> center;     // mm
    std::array<double, 3> semi_axes;  // mm, > 0
    double rot_z;                     // rotation about z, rad
    double density;                   // additive attenuation
};

struct Phantom {
    std::vector<Ellipsoid> ellipsoids;
    double sx = 0.0;      // bounding cube side, mm
    double mu_max = 1.0;  // analytic maximum of the density map
};

inline double density_at(const Phantom& ph, double x, double y, double z) {
    double d = 0.0;
    for (const auto& e : ph.ellipsoids) {
        const double px = x - e.center[0];
        const double py = y - e.center[1];
        const double pz = z - e.center[2];
        const double c = std::cos(e.rot_z), s = std::sin(e.rot_z);
        const double rx = c * px + s * py;
        const double ry = -s * px + c * py;
        const double fx = rx / e.semi_axes[0];
        const double fy = ry / e.semi_axes[1];
        const double fz = pz / e.semi_axes[2];
        if (fx * fx + fy * fy + fz * fz <= 1.0) d += e.density;
    }
    return d;
}

// Standard ten-ellipsoid 3D Shepp-Logan table (modified densities), given in
// the unit cube and scaled to the requested physical side. The analytic
// maximum of the map is the outer-shell value 1.
inline Phantom shepp_logan_phantom(double sx) {
    // density   a      b      c      x0      y0      z0     rot_z (deg)
    static constexpr double T[10][8] = {
        {1.0,  0.6900, 0.920, 0.810,  0.00,   0.000,  0.00,   0.0},
        {-0.8, 0.6624, 0.874, 0.780,  0.00,  -0.0184, 0.00,   0.0},
        {-0.2, 0.1100, 0.310, 0.220,  0.22,   0.000,  0.00, -18.0},
        {-0.2, 0.1600, 0.410, 0.280, -0.22,   0.000,  0.00,  18.0},
        {0.1,  0.2100, 0.250, 0.410,  0.00,   0.350, -0.15,   0.0},
        {0.1,  0.0460, 0.046, 0.050,  0.00,   0.100,  0.25,   0.0},
        {0.1,  0.0460, 0.046, 0.050,  0.00,  -0.100,  0.25,   0.0},
        {0.1,  0.0460, 0.023, 0.050, -0.08,  -0.605,  0.00,   0.0},
        {0.1,  0.0230, 0.023, 0.020,  0.00,  -0.606,  0.00,   0.0},
        {0.1,  0.0230, 0.046, 0.020,  0.06,  -0.605,  0.00,   0.0},
    };
    Phantom ph;
    ph.sx = sx;
    ph.mu_max = 1.0;
    const double r = sx / 2.0;
    for (const auto& row : T) {
        Ellipsoid e;
        e.density = row[0];
        e.semi_axes = {row[1] * r, row[2] * r, row[3] * r};
        e.center = {row[4] * r, row[5] * r, row[6] * r};
        e.rot_z = row[7] * kPi / 180.0;
        ph.ellipsoids.push_back(e);
    }
    return ph;
}

// Ellipsoid list from JSON: {"sx": mm, "mu_max": optional,
//  "ellipsoids": [{"center": [x,y,z], "semi_axes": [a,b,c],
//                  "rot_z_deg": d, "density": v}, ...]}
inline Phantom phantom_from_json(const nlohmann::json& j) {
    Phantom ph;
    ph.sx = j.at("sx").get<double>();
    for (const auto& ej : j.at("ellipsoids")) {
        Ellipsoid e;
        const auto c = ej.at("center");
        const auto a = ej.at("semi_axes");
        e.center = {c[0].get<double>(), c[1].get<double>(), c[2].get<double>()};
        e.semi_axes = {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
        if (e.semi_axes[0] <= 0 || e.semi_axes[1] <= 0 || e.semi_axes[2] <= 0)
            throw std::invalid_argument("phantom: semi-axes must be positive");
        e.rot_z = ej.value("rot_z_deg", 0.0) * kPi / 180.0;
        e.density = ej.at("density").get<double>();
        ph.ellipsoids.push_back(e);
    }
    if (j.contains("mu_max")) {
        ph.mu_max = j.at("mu_max").get<double>();
    } else {
        double m = 0.0;
        for (const auto& e : ph.ellipsoids)
            m = std::max(m, density_at(ph, e.center[0], e.center[1], e.center[2]));
        ph.mu_max = m;
    }
    return ph;
}

inline Phantom load_phantom(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("phantom: cannot open " + path);
    nlohmann::json j;
    in >> j;
    return phantom_from_json(j);
}

// Voxelization at voxel positions (i - n/2) * dm per axis, so the index
// origin is a sample point.
inline Volume voxelize(const Phantom& ph, int n) {
    if (n < 2 || n % 2 != 0) throw std::invalid_argument("voxelize: n must be even and >= 2");
    Volume vol;
    vol.voxel_mm = ph.sx / n;
    vol.data = Grid3<double>(n, n, n);
    const double dm = vol.voxel_mm;
    parallel_for(0, static_cast<std::size_t>(n), [&](std::size_t is) {
        const double x = index_of(static_cast<int>(is), n) * dm;
        for (int js = 0; js < n; ++js) {
            const double y = index_of(js, n) * dm;
            for (int ks = 0; ks < n; ++ks) {
                const double z = index_of(ks, n) * dm;
                vol.data(is, js, ks) = density_at(ph, x, y, z);
            }
        }
    });
    return vol;
}

inline Volume shepp_logan_3d(int n, double sx) { return voxelize(shepp_logan_phantom(sx), n); }

// Cone-beam projections on the virtual detector (one nu x nu image per
// source angle). Pixel (iu, iv) sits at
//   Q = u * e1(psi) + v * z,  u = (iu - nu/2) du_v,  v = (iv - nu/2) du_v,
// with e1 = (-sin psi, cos psi, 0); the source is at SO (cos psi, sin psi, 0).
struct ProjectionSet {
    std::vector<Grid2<double>> views;
    double du_virtual = 1.0;  // virtual-detector pixel size, mm
    double side_mm = 0.0;     // virtual-detector side, mm
};

namespace detail {

// Chord length of a unit-direction ray through one ellipsoid. The origin is
// first advanced to the closest approach of the ellipsoid center; the chord
// is unchanged and the quadratic stays well conditioned for distant sources.
inline double ellipsoid_chord(const Ellipsoid& e, const std::array<double, 3>& origin,
                              const std::array<double, 3>& dir) {
    const double t0 = (e.center[0] - origin[0]) * dir[0] + (e.center[1] - origin[1]) * dir[1] +
                      (e.center[2] - origin[2]) * dir[2];
    const std::array<double, 3> near{origin[0] + t0 * dir[0], origin[1] + t0 * dir[1],
                                     origin[2] + t0 * dir[2]};
    const double c = std::cos(e.rot_z), s = std::sin(e.rot_z);
    auto to_frame = [&](double x, double y, double z, bool translate) {
        if (translate) {
            x -= e.center[0]; y -= e.center[1]; z -= e.center[2];
        }
        return std::array<double, 3>{(c * x + s * y) / e.semi_axes[0],
                                     (-s * x + c * y) / e.semi_axes[1], z / e.semi_axes[2]};
    };
    const auto A = to_frame(near[0], near[1], near[2], true);
    const auto B = to_frame(dir[0], dir[1], dir[2], false);
    const double bb = B[0] * B[0] + B[1] * B[1] + B[2] * B[2];
    const double ab = A[0] * B[0] + A[1] * B[1] + A[2] * B[2];
    const double aa = A[0] * A[0] + A[1] * A[1] + A[2] * A[2] - 1.0;
    const double disc = ab * ab - bb * aa;
    if (disc <= 0.0 || bb == 0.0) return 0.0;
    return 2.0 * std::sqrt(disc) / bb;
}

}  // namespace detail

// Analytic projector: exact chord-length integral per ellipsoid.
inline ProjectionSet cone_beam_project(const Phantom& ph, const Geometry& g) {
    g.validate();
    if (!(g.so > ph.sx * std::sqrt(3.0) / 2.0))
        throw std::invalid_argument("cone_beam_project: source inside object reach");
    ProjectionSet ps;
    ps.du_virtual = g.du_virtual();
    ps.side_mm = g.virtual_side();
    ps.views.assign(g.n_proj, Grid2<double>(g.nu, g.nu));
    const int nu = g.nu;
    parallel_for(0, static_cast<std::size_t>(g.n_proj), [&](std::size_t t) {
        const double psi = g.psi_of(static_cast<int>(t));
        const double cp = std::cos(psi), sp = std::sin(psi);
        const std::array<double, 3> src{g.so * cp, g.so * sp, 0.0};
        Grid2<double>& view = ps.views[t];
        for (int iu = 0; iu < nu; ++iu) {
            const double u = index_of(iu, nu) * ps.du_virtual;
            for (int iv = 0; iv < nu; ++iv) {
                const double v = index_of(iv, nu) * ps.du_virtual;
                const std::array<double, 3> q{-u * sp, u * cp, v};
                std::array<double, 3> d{q[0] - src[0], q[1] - src[1], q[2] - src[2]};
                const double len = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
                d = {d[0] / len, d[1] / len, d[2] / len};
                double val = 0.0;
                for (const auto& e : ph.ellipsoids) val += e.density * detail::ellipsoid_chord(e, src, d);
                view(iu, iv) = val;
            }
        }
    });
    return ps;
}

// Ray-driven projector over a voxelized volume: trilinear sampling at steps
// of half a voxel.
inline ProjectionSet cone_beam_project(const Volume& vol, const Geometry& g) {
    g.validate();
    const int n = vol.n();
    const double dm = vol.voxel_mm;
    const double half = 0.5 * n * dm;
    if (!(g.so > half * std::sqrt(3.0)))
        throw std::invalid_argument("cone_beam_project: source inside object reach");
    ProjectionSet ps;
    ps.du_virtual = g.du_virtual();
    ps.side_mm = g.virtual_side();
    ps.views.assign(g.n_proj, Grid2<double>(g.nu, g.nu));
    const int nu = g.nu;
    const double step = dm / 2.0;

    auto sample = [&](double x, double y, double z) -> double {
        const double fx = x / dm + n / 2, fy = y / dm + n / 2, fz = z / dm + n / 2;
        const int x0 = static_cast<int>(std::floor(fx));
        const int y0 = static_cast<int>(std::floor(fy));
        const int z0 = static_cast<int>(std::floor(fz));
        if (x0 < -1 || x0 >= n || y0 < -1 || y0 >= n || z0 < -1 || z0 >= n) return 0.0;
        const double tx = fx - x0, ty = fy - y0, tz = fz - z0;
        double acc = 0.0;
        for (int dx = 0; dx <= 1; ++dx)
            for (int dy = 0; dy <= 1; ++dy)
                for (int dz = 0; dz <= 1; ++dz) {
                    const int xi = x0 + dx, yi = y0 + dy, zi = z0 + dz;
                    if (xi < 0 || xi >= n || yi < 0 || yi >= n || zi < 0 || zi >= n) continue;
                    const double w = (dx ? tx : 1.0 - tx) * (dy ? ty : 1.0 - ty) * (dz ? tz : 1.0 - tz);
                    acc += w * vol.data(xi, yi, zi);
                }
        return acc;
    };

    parallel_for(0, static_cast<std::size_t>(g.n_proj), [&](std::size_t t) {
        const double psi = g.psi_of(static_cast<int>(t));
        const double cp = std::cos(psi), sp = std::sin(psi);
        const std::array<double, 3> src{g.so * cp, g.so * sp, 0.0};
        Grid2<double>& view = ps.views[t];
        for (int iu = 0; iu < nu; ++iu) {
            const double u = index_of(iu, nu) * ps.du_virtual;
            for (int iv = 0; iv < nu; ++iv) {
                const double v = index_of(iv, nu) * ps.du_virtual;
                const std::array<double, 3> q{-u * sp, u * cp, v};
                std::array<double, 3> d{q[0] - src[0], q[1] - src[1], q[2] - src[2]};
                const double len = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
                d = {d[0] / len, d[1] / len, d[2] / len};
                // slab clip against the bounding cube
                double t0 = 0.0, t1 = len + 2.0 * half;
                bool miss = false;
                for (int ax = 0; ax < 3 && !miss; ++ax) {
                    const double o = src[ax], dd = d[ax];
                    if (std::abs(dd) < 1e-12) {
                        if (std::abs(o) > half) miss = true;
                        continue;
                    }
                    double ta = (-half - o) / dd, tb = (half - o) / dd;
                    if (ta > tb) std::swap(ta, tb);
                    t0 = std::max(t0, ta);
                    t1 = std::min(t1, tb);
                }
                double val = 0.0;
                if (!miss && t1 > t0) {
                    const int steps = static_cast<int>(std::ceil((t1 - t0) / step));
                    const double h = (t1 - t0) / steps;
                    for (int i = 0; i < steps; ++i) {
                        const double tt = t0 + (i + 0.5) * h;
                        val += sample(src[0] + tt * d[0], src[1] + tt * d[1], src[2] + tt * d[2]) * h;
                    }
                }
                view(iu, iv) = val;
            }
        }
    });
    return ps;
}

}  // namespace ppr
