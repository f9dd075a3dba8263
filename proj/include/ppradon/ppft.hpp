#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "array.hpp"
#include "parallel.hpp"
#include "spectral.hpp"

namespace ppr {

// ---------------------------------------------------------------------------
// Pseudo-polar grid and exact pseudo-polar Fourier transforms.
//
// For a cubic volume of even side n the transform samples the trigonometric
// polynomial
//   Ihat(xi1, xi2, xi3) = sum_{u,v,w = -n/2}^{n/2-1} I(u,v,w)
//                         * exp(-2 pi i (xi1 u + xi2 v + xi3 w) / m),
// with m = 3n+1, on three sectors of points
//   sector 1: (k, -2lk/n, -2jk/n)
//   sector 2: (-2lk/n, k, -2jk/n)
//   sector 3: (-2lk/n, -2jk/n, k)
// where k in [-3n/2, 3n/2] and l, j in [-n/2, n/2]. The exponent is read as a
// single inner product over the frequency triple (the standard trigonometric
// polynomial); that normalization, with the padded length m in the kernel, is
// what makes the slope sweeps below exact.
// ---------------------------------------------------------------------------

struct PseudoPolarPoint3 {
    int sector;  // 1, 2 or 3
    int k, l, j;
    double xi1, xi2, xi3;
};

inline std::vector<PseudoPolarPoint3> grid_points(int n, int sector) {
    if (n < 2 || n % 2 != 0) throw std::invalid_argument("grid_points: n must be even and >= 2");
    if (sector < 1 || sector > 3) throw std::invalid_argument("grid_points: sector must be 1..3");
    std::vector<PseudoPolarPoint3> pts;
    pts.reserve(static_cast<std::size_t>(3 * n + 1) * (n + 1) * (n + 1));
    for (int k = -3 * n / 2; k <= 3 * n / 2; ++k) {
        for (int l = -n / 2; l <= n / 2; ++l) {
            for (int j = -n / 2; j <= n / 2; ++j) {
                const double a = -2.0 * l / n * k;
                const double b = -2.0 * j / n * k;
                PseudoPolarPoint3 p{sector, k, l, j, 0.0, 0.0, 0.0};
                if (sector == 1) {
                    p.xi1 = k; p.xi2 = a; p.xi3 = b;
                } else if (sector == 2) {
                    p.xi1 = a; p.xi2 = k; p.xi3 = b;
                } else {
                    p.xi1 = a; p.xi2 = b; p.xi3 = k;
                }
                pts.push_back(p);
            }
        }
    }
    return pts;
}

namespace detail {

inline void require_even_finite(std::size_t n0, std::size_t n1, std::size_t n2,
                                const double* data, std::size_t count) {
    if (n0 != n1 || n1 != n2) throw std::invalid_argument("ppft: volume must be cubic");
    if (n0 < 2 || n0 % 2 != 0) throw std::invalid_argument("ppft: side must be even and >= 2");
    for (std::size_t i = 0; i < count; ++i)
        if (!std::isfinite(data[i])) throw std::invalid_argument("ppft: non-finite input");
}

// Reverses a centered odd-length axis in place: index t -> -t.
template <typename GetSet>
inline void reverse_axis(int len, GetSet&& swap_slots) {
    for (int a = 0, b = len - 1; a < b; ++a, --b) swap_slots(a, b);
}

// One pseudo-polar sector of a cubic volume. `axis` is the pure-frequency
// axis (sector = axis + 1); the two remaining axes, in increasing order,
// carry the slope indices (l, j). Output shape (m, n+1, n+1).
//
// Stages follow the fast algorithm: length-m DFT along `axis` (the zero
// padding to m is folded into the chirp evaluation), then for each k a
// fractional sweep with factor 2k/n over each transverse axis, then a flip
// of the slope axes, which realizes the negated slope indices of the
// definition above.
inline Grid3<cdouble> pp_sector3(const Grid3<double>& vol, int axis) {
    require_even_finite(vol.size0(), vol.size1(), vol.size2(), vol.data(), vol.size());
    const int n = static_cast<int>(vol.size0());
    const int m = 3 * n + 1;
    const int ns = n + 1;

    const int a0 = axis;
    const int a1 = (axis == 0) ? 1 : 0;              // first transverse axis
    const int a2 = (axis == 2) ? 1 : 2;              // second transverse axis
    auto at = [&](int i0, int i1, int i2) -> double {
        int idx[3];
        idx[a0] = i0; idx[a1] = i1; idx[a2] = i2;
        return vol(idx[0], idx[1], idx[2]);
    };

    // radial DFT: A(k, a, b) = sum_u vol * exp(-2 pi i k u / m)
    Grid3<cdouble> A(m, n, n);
    const ChirpZPlan radial(1, 1, m, n, m);
    parallel_for(0, static_cast<std::size_t>(n) * n, [&](std::size_t ab) {
        const int a = static_cast<int>(ab) / n;
        const int b = static_cast<int>(ab) % n;
        std::vector<cdouble> fiber(n), out(m);
        for (int u = 0; u < n; ++u) fiber[u] = at(u, a, b);
        radial.apply(fiber.data(), out.data());
        for (int k = 0; k < m; ++k) A(k, a, b) = out[k];
    });

    // slope sweeps, factor 2k/n, then slope-axis flips
    Grid3<cdouble> S(m, ns, ns);
    parallel_for(0, static_cast<std::size_t>(m), [&](std::size_t ks) {
        const int k = index_of(static_cast<int>(ks), m);
        const ChirpZPlan sweep(2 * k, n, m, n, ns);
        Grid2<cdouble> B(ns, n);
        std::vector<cdouble> in(n), out(ns);
        for (int b = 0; b < n; ++b) {
            for (int a = 0; a < n; ++a) in[a] = A(ks, a, b);
            sweep.apply(in.data(), out.data());
            for (int l = 0; l < ns; ++l) B(l, b) = out[l];
        }
        for (int l = 0; l < ns; ++l) {
            sweep.apply(&B(l, 0), out.data());
            for (int j = 0; j < ns; ++j) S(ks, l, j) = out[j];
        }
        // flip l and j: computed sign was exp(-2 pi i (2k/n) l x / m), the
        // grid wants the conjugate slope term
        for (int j = 0; j < ns; ++j)
            reverse_axis(ns, [&](int x, int y) { std::swap(S(ks, x, j), S(ks, y, j)); });
        for (int l = 0; l < ns; ++l)
            reverse_axis(ns, [&](int x, int y) { std::swap(S(ks, l, x), S(ks, l, y)); });
    });
    return S;
}

// 2D analogue, m = 2n+1. `axis` carries the pure frequency k, the other axis
// the slope index. Output shape (m, n+1).
inline Grid2<cdouble> pp_sector2(const Grid2<double>& img, int axis) {
    if (img.size0() != img.size1()) throw std::invalid_argument("ppft2: image must be square");
    const int n = static_cast<int>(img.size0());
    if (n < 2 || n % 2 != 0) throw std::invalid_argument("ppft2: side must be even and >= 2");
    for (std::size_t i = 0; i < img.size(); ++i)
        if (!std::isfinite(img.data()[i])) throw std::invalid_argument("ppft2: non-finite input");
    const int m = 2 * n + 1;
    const int ns = n + 1;

    auto at = [&](int i0, int i1) -> double { return axis == 0 ? img(i0, i1) : img(i1, i0); };

    Grid2<cdouble> A(m, n);
    const ChirpZPlan radial(1, 1, m, n, m);
    {
        std::vector<cdouble> fiber(n), out(m);
        for (int a = 0; a < n; ++a) {
            for (int u = 0; u < n; ++u) fiber[u] = at(u, a);
            radial.apply(fiber.data(), out.data());
            for (int k = 0; k < m; ++k) A(k, a) = out[k];
        }
    }

    Grid2<cdouble> S(m, ns);
    parallel_for(0, static_cast<std::size_t>(m), [&](std::size_t ks) {
        const int k = index_of(static_cast<int>(ks), m);
        const ChirpZPlan sweep(2 * k, n, m, n, ns);
        std::vector<cdouble> out(ns);
        sweep.apply(&A(ks, 0), out.data());
        for (int l = 0; l < ns; ++l) S(ks, l) = out[ns - 1 - l];
    });
    return S;
}

}  // namespace detail

// Three sector arrays PP_i(k, l, j), each (3n+1) x (n+1) x (n+1).
struct PPFTResult {
    int n = 0;
    std::array<Grid3<cdouble>, 3> sector;
};

inline PPFTResult ppft3(const Grid3<double>& volume) {
    PPFTResult r;
    r.n = static_cast<int>(volume.size0());
    for (int s = 0; s < 3; ++s) r.sector[s] = detail::pp_sector3(volume, s);
    return r;
}

// Two sector arrays, each (2n+1) x (n+1). Sector 0 pairs with basically
// horizontal lines of the 2D DRT (pure frequency on the second image axis),
// sector 1 with basically vertical lines.
struct Ppft2Result {
    int n = 0;
    std::array<Grid2<cdouble>, 2> sector;
};

inline Ppft2Result ppft2(const Grid2<double>& image) {
    Ppft2Result r;
    r.n = static_cast<int>(image.size0());
    r.sector[0] = detail::pp_sector2(image, 1);
    r.sector[1] = detail::pp_sector2(image, 0);
    return r;
}

}  // namespace ppr
