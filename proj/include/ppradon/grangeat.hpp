#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "array.hpp"
#include "drt.hpp"
#include "geometry.hpp"
#include "parallel.hpp"
#include "phantom.hpp"

namespace ppr {

// ---------------------------------------------------------------------------
// Discrete Grangeat pipeline: weighted projections -> per-projection detector
// Radon derivatives -> rebinned 3D Radon derivative on the pseudo-polar grid
// -> radial integration -> shadow-zone fill.
// ---------------------------------------------------------------------------

// Global scale relating the rebinned derivative to the unitless 3D DRT
// convention. The per-line weights below carry all q-, slope- and
// beta-dependence; this constant was calibrated once against drt3 of a
// uniform ball and is 1 by construction of those weights.
inline constexpr double kGrangeatScale = 1.0;

struct WeightedProjection {
    Grid2<double> values;     // X_psi * SO / SA per pixel
    double psi = 0.0;         // source angle, rad
    double du_virtual = 1.0;  // virtual-detector pixel size, mm
};

// Pre-weighting of one virtual-detector view by SO/SA, SA the source-to-pixel
// distance. With a far source SA ~ SO and the weight collapses to 1.
inline WeightedProjection preweight(const Grid2<double>& proj, const Geometry& g, double psi,
                                    bool far_source) {
    const int nu = static_cast<int>(proj.size0());
    if (proj.size0() != proj.size1()) throw std::invalid_argument("preweight: view must be square");
    WeightedProjection wp;
    wp.psi = psi;
    wp.du_virtual = g.du_virtual();
    wp.values = proj;
    if (!far_source) {
        for (int iu = 0; iu < nu; ++iu) {
            const double u = index_of(iu, nu) * wp.du_virtual;
            for (int iv = 0; iv < nu; ++iv) {
                const double v = index_of(iv, nu) * wp.du_virtual;
                const double sa = std::sqrt(u * u + v * v + g.so * g.so);
                wp.values(iu, iv) *= g.so / sa;
            }
        }
    }
    return wp;
}

// 2D DRT of the weighted view followed by the first difference along the
// intercept within each (family, slope) line: the discrete d/ds in the
// normal direction of the integration lines. First intercept slot is zero.
inline Drt2Result detector_radon_derivative(const WeightedProjection& wp) {
    Drt2Result r = drt2(wp.values, wp.du_virtual);
    const int m = static_cast<int>(r.values.size1());
    const int ns = static_cast<int>(r.values.size2());
    Grid3<double> diff(2, m, ns);
    for (int fam = 0; fam < 2; ++fam)
        for (int q = 0; q < ns; ++q) {
            diff(fam, 0, q) = 0.0;
            for (int p = 1; p < m; ++p)
                diff(fam, p, q) = r.values(fam, p, q) - r.values(fam, p - 1, q);
        }
    r.values = std::move(diff);
    return r;
}

struct RadonDerivative4D {
    int n = 0;
    double du = 1.0;                  // object pixel size, mm
    Grid4<double> values;             // same layout as RadonSpace4D
    Grid4<unsigned char> shadow;      // 1 where the grid point is unmappable
};

// Rebinning: evaluates the discrete Grangeat relation at every non-shadow
// pseudo-polar Radon grid point of an n^3 object with pixel size dm.
//
// The stored sample at intercept index p approximates the difference quotient
// of the Radon line between planes p-1 and p, so the mapping is evaluated at
// the midpoint plane (p - 1/2): map it to its spherical normal form, then to
// the detector point (s, alpha, psi), then to detector line coordinates
// (q, p'); fetch the detector Radon derivative bilinearly in (q, p') -- whose
// samples likewise live at intercept-cell midpoints, hence the half-slot
// offset -- and linearly across the two nearest projection angles; scale by
//   (1 + q^2) / (cos^2(beta) * dm^2 * sqrt(1 + q1^2 + q2^2)),
// cos^2(beta) = SO^2/(SO^2 + s^2). The factor bundles the detector line
// spacing du/sqrt(1+q^2) and sample spacing du*sqrt(1+q^2) (whose du cancels)
// with the plane-to-sample-sum Jacobian dm^2*sqrt(1+q1^2+q2^2) of the
// unitless DRT, so the radial integral of the result lands directly in drt3
// units.
//
// Two orientation signs enter. The detector difference runs along the
// intercept index, which runs against increasing s wherever the fetched
// intercept is negative: sign(p'). The radial difference runs along signed
// p, which runs against the canonical (rho >= 0) orientation on the negative
// side: sign(rho_signed).
inline RadonDerivative4D rebin(const std::vector<Drt2Result>& derivs, const Geometry& g, int n,
                               double dm) {
    if (derivs.empty()) throw std::invalid_argument("rebin: empty projection stack");
    if (static_cast<int>(derivs.size()) != g.n_proj)
        throw std::invalid_argument("rebin: stack size does not match geometry");
    const int nu = derivs[0].n;
    if (nu != g.nu) throw std::invalid_argument("rebin: detector size does not match geometry");
    const double du_v = g.du_virtual();
    const int m = 3 * n + 1;
    const int ns = n + 1;
    const int md = 2 * nu + 1;   // detector intercept count
    const int nsd = nu + 1;      // detector slope count

    RadonDerivative4D out;
    out.n = n;
    out.du = dm;
    out.values = Grid4<double>(3, m, ns, ns, 0.0);
    out.shadow = Grid4<unsigned char>(3, m, ns, ns, 0);

    // bilinear fetch from one family plane of a detector derivative
    auto fetch = [&](const Grid3<double>& d, int fam, double pf, double qf) -> double {
        // fractional slots
        const double pslot = pf + md / 2;
        const double qslot = qf + nsd / 2;
        const int p0 = static_cast<int>(std::floor(pslot));
        const int q0 = static_cast<int>(std::floor(qslot));
        if (p0 < -1 || p0 >= md || q0 < -1 || q0 >= nsd) return 0.0;
        const double tp = pslot - p0, tq = qslot - q0;
        double acc = 0.0;
        for (int dp = 0; dp <= 1; ++dp)
            for (int dq = 0; dq <= 1; ++dq) {
                const int pi = p0 + dp, qi = q0 + dq;
                if (pi < 0 || pi >= md || qi < 0 || qi >= nsd) continue;
                acc += (dp ? tp : 1.0 - tp) * (dq ? tq : 1.0 - tq) * d(fam, pi, qi);
            }
        return acc;
    };

    parallel_for(0, static_cast<std::size_t>(3) * m, [&](std::size_t fp) {
        const int fam = static_cast<int>(fp) / m;
        const int ps = static_cast<int>(fp) % m;
        const int p = index_of(ps, m);
        for (int ls = 0; ls < ns; ++ls) {
            const double q1 = 2.0 * index_of(ls, ns) / n;
            for (int js = 0; js < ns; ++js) {
                const double q2 = 2.0 * index_of(js, ns) / n;
                // shadow flag belongs to the stored grid plane
                const SphericalPlane grid_plane = plane_to_spherical(fam, q1, q2, p * dm);
                if (in_shadow_zone(grid_plane.point.rho, grid_plane.point.theta, g) ||
                    grid_plane.point.rho >= g.so) {
                    out.shadow(fam, ps, ls, js) = 1;
                    continue;  // value stays 0
                }
                // the difference sample lives at the midpoint plane
                const SphericalPlane sp = plane_to_spherical(fam, q1, q2, (p - 0.5) * dm);
                if (in_shadow_zone(sp.point.rho, sp.point.theta, g) || sp.point.rho >= g.so)
                    continue;
                const auto det = radon_to_detector(sp.point, g);
                if (!det) continue;
                const LineCoords lc = polar_to_line(det->s, det->alpha);
                const double pf = lc.p / du_v + 0.5;
                const double qf = lc.q * (nu / 2);
                // projection-angle interpolation
                const double tpsi = det->psi / (2.0 * kPi / g.n_proj);
                int t0 = static_cast<int>(std::floor(tpsi));
                const double ft = tpsi - t0;
                t0 = ((t0 % g.n_proj) + g.n_proj) % g.n_proj;
                const int t1 = (t0 + 1) % g.n_proj;
                const int dfam = static_cast<int>(lc.family);
                const double v0 = fetch(derivs[t0].values, dfam, pf, qf);
                const double v1 = fetch(derivs[t1].values, dfam, pf, qf);
                const double val = (1.0 - ft) * v0 + ft * v1;

                const double s = det->s;
                const double cos2b = g.so * g.so / (g.so * g.so + s * s);
                const double q = lc.q;
                const double nrm = std::sqrt(1.0 + q1 * q1 + q2 * q2);
                double w = kGrangeatScale * (1.0 + q * q) / (cos2b * dm * dm * nrm);
                if (sp.rho_signed < 0.0) w = -w;
                if (lc.p < 0.0) w = -w;
                out.values(fam, ps, ls, js) = val * w;
            }
        }
    });

    // both ends of every radial line lie outside the object: pin the
    // integration start exactly
    for (int fam = 0; fam < 3; ++fam)
        for (int ls = 0; ls < ns; ++ls)
            for (int js = 0; js < ns; ++js) out.values(fam, 0, ls, js) = 0.0;

    // A measurable point bracketed by shadow on both sides of its radial
    // line cannot be reached by the integral from either end; flag it too,
    // so the fill treats the whole broken stretch consistently.
    for (int fam = 0; fam < 3; ++fam)
        for (int ls = 0; ls < ns; ++ls)
            for (int js = 0; js < ns; ++js) {
                int first = -1, last = -1;
                for (int ps = 0; ps < m; ++ps)
                    if (out.shadow(fam, ps, ls, js)) {
                        if (first < 0) first = ps;
                        last = ps;
                    }
                if (first < 0) continue;
                for (int ps = first; ps <= last; ++ps) {
                    if (!out.shadow(fam, ps, ls, js)) {
                        out.shadow(fam, ps, ls, js) = 1;
                        out.values(fam, ps, ls, js) = 0.0;
                    }
                }
            }
    return out;
}

// Cumulative trapezoidal integration along the signed intercept, starting at
// zero at the most-negative p (outside the support). The derivative samples
// are consecutive-difference quotients, so the cumulative rule telescopes
// exactly: integrating the first difference of a line divided by its spacing
// reproduces the line minus its start value.
inline RadonSpace4D integrate_radial(const RadonDerivative4D& deriv) {
    const int n = deriv.n;
    const int m = 3 * n + 1;
    const int ns = n + 1;
    RadonSpace4D out;
    out.n = n;
    out.du = deriv.du;
    out.values = Grid4<double>(3, m, ns, ns);
    for (int fam = 0; fam < 3; ++fam)
        for (int ls = 0; ls < ns; ++ls)
            for (int js = 0; js < ns; ++js) {
                const double q1 = 2.0 * index_of(ls, ns) / n;
                const double q2 = 2.0 * index_of(js, ns) / n;
                const double drho = deriv.du / std::sqrt(1.0 + q1 * q1 + q2 * q2);
                double acc = 0.0;
                for (int ps = 0; ps < m; ++ps) {
                    acc += drho * deriv.values(fam, ps, ls, js);
                    out.values(fam, ps, ls, js) = acc;
                }
            }
    return out;
}

enum class ShadowFill { zero, linear_theta, oracle };

// Fills shadow-zone entries. zero: leave 0. linear_theta: 1D linear
// interpolation along the first slope index between the nearest unmasked
// neighbors (the slope radius plays the role of theta near the pole).
// oracle: copy from a ground-truth Radon space. Unmasked entries are never
// touched.
inline RadonSpace4D fill_shadow_zone(const RadonSpace4D& radon, const Grid4<unsigned char>& mask,
                                     ShadowFill strategy, const RadonSpace4D* oracle = nullptr) {
    if (strategy == ShadowFill::oracle && oracle == nullptr)
        throw std::invalid_argument("fill_shadow_zone: oracle strategy needs oracle radon");
    const int m = 3 * radon.n + 1;
    const int ns = radon.n + 1;
    RadonSpace4D out = radon;
    for (int fam = 0; fam < 3; ++fam)
        for (int ps = 0; ps < m; ++ps)
            for (int js = 0; js < ns; ++js) {
                for (int ls = 0; ls < ns; ++ls) {
                    if (!mask(fam, ps, ls, js)) continue;
                    switch (strategy) {
                        case ShadowFill::zero:
                            out.values(fam, ps, ls, js) = 0.0;
                            break;
                        case ShadowFill::oracle:
                            out.values(fam, ps, ls, js) = oracle->values(fam, ps, ls, js);
                            break;
                        case ShadowFill::linear_theta: {
                            int lo = ls - 1, hi = ls + 1;
                            while (lo >= 0 && mask(fam, ps, lo, js)) --lo;
                            while (hi < ns && mask(fam, ps, hi, js)) ++hi;
                            const bool has_lo = lo >= 0, has_hi = hi < ns;
                            double v = 0.0;
                            if (has_lo && has_hi) {
                                const double t = static_cast<double>(ls - lo) / (hi - lo);
                                v = (1.0 - t) * radon.values(fam, ps, lo, js) +
                                    t * radon.values(fam, ps, hi, js);
                            } else if (has_lo) {
                                v = radon.values(fam, ps, lo, js);
                            } else if (has_hi) {
                                v = radon.values(fam, ps, hi, js);
                            }
                            out.values(fam, ps, ls, js) = v;
                            break;
                        }
                    }
                }
            }
    return out;
}

}  // namespace ppr
