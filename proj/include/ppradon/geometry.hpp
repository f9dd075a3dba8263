#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "array.hpp"

namespace ppr {

// ---------------------------------------------------------------------------
// Scanner geometry. The source orbits the origin on a circle of radius SO in
// the z = 0 plane; the physical detector sits at distance SP from the source.
// All detector-domain work happens on the virtual detector: the physical one
// rescaled by SO/SP onto the plane through the rotation axis, same pixel
// count.
// ---------------------------------------------------------------------------
struct Geometry {
    double sx = 32.0;   // object side length, mm
    int nx = 32;        // object voxels per side
    double su = 96.0;   // physical detector side, mm
    int nu = 64;        // detector pixels per side
    double sp = 1500.0; // source-to-detector distance, mm
    double so = 1000.0; // source-to-origin distance, mm
    int n_proj = 360;   // projection angles, equally spaced on [0, 2pi)

    double dm() const { return sx / nx; }                    // object pixel size
    double virtual_side() const { return su * so / sp; }     // virtual detector side
    double du_virtual() const { return virtual_side() / nu; }
    double psi_of(int t) const { return 2.0 * kPi * t / n_proj; }

    void validate() const {
        if (!(so < sp)) throw std::invalid_argument("geometry: SO must be < SP");
        if (!(so > sx * std::sqrt(3.0) / 2.0))
            throw std::invalid_argument("geometry: source inside object reach");
        if (nx < 2 || nx % 2 != 0) throw std::invalid_argument("geometry: nx must be even");
        if (nu < 2 || nu % 2 != 0) throw std::invalid_argument("geometry: nu must be even");
        if (n_proj < 1) throw std::invalid_argument("geometry: n_proj must be >= 1");
    }
};

inline Geometry geometry_from_json(const nlohmann::json& j) {
    Geometry g;
    g.sx = j.at("sx").get<double>();
    g.nx = j.at("nx").get<int>();
    g.su = j.at("su").get<double>();
    g.nu = j.at("nu").get<int>();
    g.sp = j.at("SP").get<double>();
    g.so = j.at("SO").get<double>();
    g.n_proj = j.at("n_proj").get<int>();
    g.validate();
    return g;
}

inline nlohmann::json geometry_to_json(const Geometry& g) {
    return nlohmann::json{{"sx", g.sx}, {"nx", g.nx}, {"su", g.su}, {"nu", g.nu},
                          {"SP", g.sp}, {"SO", g.so}, {"n_proj", g.n_proj}};
}

inline Geometry load_geometry(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("geometry: cannot open " + path);
    nlohmann::json j;
    in >> j;
    return geometry_from_json(j);
}

// A plane in Radon space: signed distance rho (mm) along the unit normal
// (sin t cos f, sin t sin f, cos t).
struct RadonPoint {
    double rho;
    double theta;  // [0, pi]
    double phi;    // [0, 2 pi)
};

// A point on the virtual detector at source angle psi, in the in-detector
// polar form: distance s from the detector center along the direction at
// angle alpha from the horizontal detector axis.
struct DetectorPoint {
    double s;
    double alpha;
    double psi;
};

// Detector image plus its physical side length.
struct DetectorImage {
    Grid2<double> samples;
    double side_mm = 0.0;
};

// Rescales the physical detector onto the plane through the rotation axis.
// Sample values are untouched; only the side length changes.
inline DetectorImage virtualize_detector(const DetectorImage& proj, const Geometry& g) {
    return DetectorImage{proj.samples, proj.side_mm * g.so / g.sp};
}

inline double wrap_angle_2pi(double a) {
    a = std::fmod(a, 2.0 * kPi);
    if (a < 0.0) a += 2.0 * kPi;
    return a;
}

// Shadow-zone predicate: planes with |rho| > SO |sin theta| never contain a
// source position on the circular orbit.
inline bool in_shadow_zone(double rho, double theta, const Geometry& g) {
    return std::abs(rho) > g.so * std::abs(std::sin(theta));
}

// Maps a Radon characteristic point to the virtual-detector point whose
// Grangeat line integrates the same plane.
//   s     = rho SO / sqrt(SO^2 - rho^2)
//   alpha = atan2(cos theta, sin theta sin c)
//   psi   = phi - c,   c = acos(rho / (SO sin theta)) in [0, pi]
// alpha's sign follows sign(cos theta): the printed sign factor theta/|theta|
// is degenerate for theta in [0, pi], and the equatorial flip is what the
// detector geometry produces. Each plane lies on two Radon shells; the
// psi = phi - c branch is used throughout and the phi + c alternative is
// dropped. Shadow-zone points are unmappable and come back empty.
inline std::optional<DetectorPoint> radon_to_detector(const RadonPoint& c, const Geometry& g) {
    if (!(std::abs(c.rho) < g.so))
        throw std::invalid_argument("radon_to_detector: |rho| must be < SO");
    if (in_shadow_zone(c.rho, c.theta, g)) return std::nullopt;
    const double st = std::sin(c.theta);
    const double ct = std::cos(c.theta);
    double cosc = (st == 0.0) ? 0.0 : c.rho / (g.so * st);
    cosc = std::clamp(cosc, -1.0, 1.0);
    const double cc = std::acos(cosc);  // [0, pi]
    DetectorPoint d;
    d.s = c.rho * g.so / std::sqrt(g.so * g.so - c.rho * c.rho);
    d.alpha = std::atan2(ct, st * std::sin(cc));
    d.psi = wrap_angle_2pi(c.phi - cc);
    return d;
}

// Line families on the detector, matching the 2D DRT layout.
enum class LineFamily { horizontal = 0, vertical = 1 };

// Slope/intercept -> polar normal form, Cartesian line coordinates as used
// by the 2D DRT. Returns s >= 0 and the principal-value angle; the sign of p
// is not recoverable from this form (see polar_to_line for the inverse used
// in rebinning).
inline void line_to_polar(LineFamily family, double q, double p, double& s, double& alpha) {
    s = std::abs(p) / std::sqrt(1.0 + q * q);
    if (family == LineFamily::horizontal)
        alpha = (q == 0.0) ? kPi / 2.0 : std::atan(-1.0 / q);
    else
        alpha = std::atan(-q);
}

struct LineCoords {
    LineFamily family;
    double q;  // |q| <= 1
    double p;  // signed intercept, same units as s
};

// Polar normal form -> slope/intercept, choosing the family that keeps
// |q| <= 1 (horizontal when |tan alpha| >= 1). Exact right inverse of
// line_to_polar up to the angle's pi-periodicity.
inline LineCoords polar_to_line(double s, double alpha) {
    const double sa = std::sin(alpha);
    const double ca = std::cos(alpha);
    LineCoords lc;
    if (std::abs(sa) >= std::abs(ca)) {
        lc.family = LineFamily::horizontal;
        lc.q = -ca / sa;
        lc.p = s / sa;
    } else {
        lc.family = LineFamily::vertical;
        lc.q = -sa / ca;
        lc.p = s / ca;
    }
    return lc;
}

// Plane families of the 3D DRT: family f has unit slope on volume axis f.
// Slopes (q1, q2) attach to the remaining axes in increasing order, and p is
// the physical intercept along the family axis (mm). The normal is
//   family 0 (x-planes): (1, -q1, -q2) / N
//   family 1 (y-planes): (-q1, 1, -q2) / N
//   family 2 (z-planes): (-q1, -q2, 1) / N,  N = sqrt(1 + q1^2 + q2^2),
// with signed distance p / N. (rho, theta, phi) and (-rho, pi-theta, phi+pi)
// name the same plane; the returned point is the canonical rho >= 0
// representative, with the sign reported separately for radial ordering.
struct SphericalPlane {
    RadonPoint point;   // canonical, rho >= 0
    double rho_signed;  // p / N before canonicalization
};

inline SphericalPlane plane_to_spherical(int family, double q1, double q2, double p) {
    if (family < 0 || family > 2) throw std::invalid_argument("plane_to_spherical: bad family");
    const double nrm = std::sqrt(1.0 + q1 * q1 + q2 * q2);
    double nx_ = 0, ny_ = 0, nz_ = 0;
    if (family == 0) {
        nx_ = 1.0; ny_ = -q1; nz_ = -q2;
    } else if (family == 1) {
        nx_ = -q1; ny_ = 1.0; nz_ = -q2;
    } else {
        nx_ = -q1; ny_ = -q2; nz_ = 1.0;
    }
    nx_ /= nrm; ny_ /= nrm; nz_ /= nrm;
    double rho = p / nrm;
    SphericalPlane out;
    out.rho_signed = rho;
    if (rho < 0.0) {
        rho = -rho; nx_ = -nx_; ny_ = -ny_; nz_ = -nz_;
    }
    out.point.rho = rho;
    out.point.theta = std::acos(std::clamp(nz_, -1.0, 1.0));
    out.point.phi = (nx_ == 0.0 && ny_ == 0.0) ? 0.0 : wrap_angle_2pi(std::atan2(ny_, nx_));
    return out;
}

// Boolean mask over the RadonSpace4D grid of an n^3 object with pixel size
// dm: true exactly where the plane is in the shadow zone.
inline Grid4<unsigned char> shadow_mask(int n, double dm, const Geometry& g) {
    const int m = 3 * n + 1;
    const int ns = n + 1;
    Grid4<unsigned char> mask(3, m, ns, ns, 0);
    for (int fam = 0; fam < 3; ++fam)
        for (int ps = 0; ps < m; ++ps)
            for (int ls = 0; ls < ns; ++ls)
                for (int js = 0; js < ns; ++js) {
                    const double q1 = 2.0 * index_of(ls, ns) / n;
                    const double q2 = 2.0 * index_of(js, ns) / n;
                    const double p = index_of(ps, m) * dm;
                    const SphericalPlane sp = plane_to_spherical(fam, q1, q2, p);
                    mask(fam, ps, ls, js) =
                        in_shadow_zone(sp.point.rho, sp.point.theta, g) ? 1 : 0;
                }
    return mask;
}

}  // namespace ppr
