#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "array.hpp"
#include "parallel.hpp"
#include "ppft.hpp"
#include "spectral.hpp"

namespace ppr {

// ---------------------------------------------------------------------------
// Discrete Radon transforms on the slope/intercept (linogram) grid.
//
// 2D: lines are basically horizontal, v = q u + p, or basically vertical,
// u = q v + p, with q = l/(n/2) for l in [-n/2, n/2] and p in [-n, n] in
// units of the pixel size. A line value is the sum of trigonometrically
// interpolated samples (kernel D_m, m = 2n+1) at the n points along the line.
//
// 3D: planes x = q1 y + q2 z + p (family 0), y = q1 x + q2 z + p (family 1),
// z = q1 x + q2 y + p (family 2), with p in [-3n/2, 3n/2] and m = 3n+1.
//
// Row p of a family is the inverse length-m DFT of the matching pseudo-polar
// sector along k; that identity (the discrete projection-slice theorem) is
// how the fast paths below evaluate the sums. Pixel size tags the arrays for
// downstream geometry but does not enter the values, which are plain sample
// sums over index space.
//
// Axis layout, fixed so the slice identities and the inverse hold:
// family f integrates along volume axis f; the slope indices (l, j) attach to
// the two remaining axes in increasing order.
// ---------------------------------------------------------------------------

struct Drt2Result {
    int n = 0;
    double du = 1.0;                 // pixel size, mm
    Grid3<double> values;            // (family, p, q): 2 x (2n+1) x (n+1)
};

struct RadonSpace4D {
    int n = 0;
    double du = 1.0;                 // object pixel size, mm
    Grid4<double> values;            // (family, p, l, j): 3 x (3n+1) x (n+1) x (n+1)
};

inline Drt2Result drt2(const Grid2<double>& image, double du) {
    Ppft2Result pp = ppft2(image);
    const int n = pp.n;
    const int m = 2 * n + 1;
    const int ns = n + 1;
    Drt2Result out;
    out.n = n;
    out.du = du;
    out.values = Grid3<double>(2, m, ns);
    for (int fam = 0; fam < 2; ++fam) {
        const Grid2<cdouble>& S = pp.sector[fam];
        parallel_for(0, static_cast<std::size_t>(ns), [&](std::size_t l) {
            std::vector<cdouble> fiber(m);
            for (int k = 0; k < m; ++k) fiber[k] = S(k, l);
            std::vector<cdouble> r = centered_idft(fiber);
            for (int p = 0; p < m; ++p) out.values(fam, p, l) = r[p].real();
        });
    }
    return out;
}

inline RadonSpace4D drt3(const Grid3<double>& volume, double du) {
    const int n = static_cast<int>(volume.size0());
    const int m = 3 * n + 1;
    const int ns = n + 1;
    RadonSpace4D out;
    out.n = n;
    out.du = du;
    out.values = Grid4<double>(3, m, ns, ns);
    for (int fam = 0; fam < 3; ++fam) {
        Grid3<cdouble> S = detail::pp_sector3(volume, fam);
        parallel_for(0, static_cast<std::size_t>(ns) * ns, [&](std::size_t lj) {
            const int l = static_cast<int>(lj) / ns;
            const int j = static_cast<int>(lj) % ns;
            std::vector<cdouble> fiber(m);
            for (int k = 0; k < m; ++k) fiber[k] = S(k, l, j);
            std::vector<cdouble> r = centered_idft(fiber);
            for (int p = 0; p < m; ++p) out.values(fam, p, l, j) = r[p].real();
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Brute-force oracles: literal evaluation of the defining interpolated sums.
// Guarded to test scales; these are O(n^5)/O(n^6).
// ---------------------------------------------------------------------------

inline Drt2Result brute_force_drt2(const Grid2<double>& image, double du) {
    const int n = static_cast<int>(image.size0());
    if (n > 16) throw std::invalid_argument("brute_force_drt2: n > 16");
    if (image.size0() != image.size1()) throw std::invalid_argument("brute_force_drt2: not square");
    const int m = 2 * n + 1;
    const int ns = n + 1;
    Drt2Result out;
    out.n = n;
    out.du = du;
    out.values = Grid3<double>(2, m, ns);
    for (int fam = 0; fam < 2; ++fam) {
        for (int ls = 0; ls < ns; ++ls) {
            const double q = 2.0 * index_of(ls, ns) / n;
            for (int ps = 0; ps < m; ++ps) {
                const int p = index_of(ps, m);
                double sum = 0.0;
                for (int as_ = 0; as_ < n; ++as_) {
                    const int a = index_of(as_, n);
                    const double target = q * a + p;  // interpolated coordinate
                    for (int bs = 0; bs < n; ++bs) {
                        const int b = index_of(bs, n);
                        const double w = dirichlet_kernel(target - b, m);
                        // fam 0: lines v = q u + p, interpolate along v
                        // fam 1: lines u = q v + p, interpolate along u
                        const double val = (fam == 0) ? image(as_, bs) : image(bs, as_);
                        sum += val * w;
                    }
                }
                out.values(fam, ps, ls) = sum;
            }
        }
    }
    return out;
}

inline RadonSpace4D brute_force_drt3(const Grid3<double>& volume, double du) {
    const int n = static_cast<int>(volume.size0());
    if (n > 16) throw std::invalid_argument("brute_force_drt3: n > 16");
    const int m = 3 * n + 1;
    const int ns = n + 1;
    RadonSpace4D out;
    out.n = n;
    out.du = du;
    out.values = Grid4<double>(3, m, ns, ns);
    for (int fam = 0; fam < 3; ++fam) {
        const int a1 = (fam == 0) ? 1 : 0;
        const int a2 = (fam == 2) ? 1 : 2;
        auto at = [&](int i0, int i1, int i2) -> double {
            int idx[3];
            idx[fam] = i0; idx[a1] = i1; idx[a2] = i2;
            return volume(idx[0], idx[1], idx[2]);
        };
        parallel_for(0, static_cast<std::size_t>(ns), [&](std::size_t ls) {
            const double q1 = 2.0 * index_of(static_cast<int>(ls), ns) / n;
            for (int js = 0; js < ns; ++js) {
                const double q2 = 2.0 * index_of(js, ns) / n;
                for (int ps = 0; ps < m; ++ps) {
                    const int p = index_of(ps, m);
                    double sum = 0.0;
                    for (int as_ = 0; as_ < n; ++as_) {
                        const int a = index_of(as_, n);
                        for (int bs = 0; bs < n; ++bs) {
                            const int b = index_of(bs, n);
                            const double target = q1 * a + q2 * b + p;
                            for (int us = 0; us < n; ++us) {
                                const int u = index_of(us, n);
                                sum += at(us, as_, bs) * dirichlet_kernel(target - u, m);
                            }
                        }
                    }
                    out.values(fam, ps, static_cast<int>(ls), js) = sum;
                }
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Inverse 3D DRT.
//
// Stage 1 undoes the final inverse DFT of the forward transform: a length-m
// DFT along p turns each family back into pseudo-polar Fourier samples.
// Stage 2 recovers the volume from the three sectors jointly. The sectors
// oversample low frequencies (each shell carries (n+1)^2 samples regardless
// of |k|), so the samples are weighted by the radial density k^2 and the
// volume is obtained by solving the weighted normal equations
//   (sum_f Phi_f^H W Phi_f) x = sum_f Phi_f^H W S_f
// with conjugate gradients. The right-hand side is the adjoint of the
// forward stages applied family by family: conjugate-factor slope sweeps,
// truncation of the padding, inverse radial DFT, summed over families. The
// Gram operator is translation invariant, so each CG step is a single 3D
// convolution evaluated with power-of-two FFTs; the solve stays O(n^3 log n)
// per iteration.
// ---------------------------------------------------------------------------

struct IdrtOptions {
    double tol = 1e-12;   // relative residual target
    int max_iter = 400;
    double dc_weight = 0.25;  // weight of the coincident k = 0 samples
};

namespace detail {

// Adjoint of pp_sector3: maps sector samples back to a (complex) volume.
inline Grid3<cdouble> pp_sector3_adjoint(const Grid3<cdouble>& S, int axis, int n) {
    const int m = 3 * n + 1;
    const int ns = n + 1;
    const int a1 = (axis == 0) ? 1 : 0;
    const int a2 = (axis == 2) ? 1 : 2;

    Grid3<cdouble> A(m, n, n);
    parallel_for(0, static_cast<std::size_t>(m), [&](std::size_t ks) {
        const int k = index_of(static_cast<int>(ks), m);
        const ChirpZPlan sweep_adj(-2 * k, n, m, ns, n);
        // un-flip both slope axes, then adjoint sweeps j -> b, l -> a
        Grid2<cdouble> Sk(ns, ns);
        for (int l = 0; l < ns; ++l)
            for (int j = 0; j < ns; ++j) Sk(l, j) = S(ks, ns - 1 - l, ns - 1 - j);
        Grid2<cdouble> B(ns, n);
        std::vector<cdouble> out(n);
        for (int l = 0; l < ns; ++l) {
            sweep_adj.apply(&Sk(l, 0), out.data());
            for (int b = 0; b < n; ++b) B(l, b) = out[b];
        }
        std::vector<cdouble> in(ns);
        for (int b = 0; b < n; ++b) {
            for (int l = 0; l < ns; ++l) in[l] = B(l, b);
            sweep_adj.apply(in.data(), out.data());
            for (int a = 0; a < n; ++a) A(ks, a, b) = out[a];
        }
    });

    // adjoint of the padded radial DFT: sum_k A(k) exp(+2 pi i k u / m)
    Grid3<cdouble> vol(n, n, n);
    const ChirpZPlan radial_adj(-1, 1, m, m, n);
    parallel_for(0, static_cast<std::size_t>(n) * n, [&](std::size_t ab) {
        const int a = static_cast<int>(ab) / n;
        const int b = static_cast<int>(ab) % n;
        std::vector<cdouble> fiber(m), out(n);
        for (int k = 0; k < m; ++k) fiber[k] = A(k, a, b);
        radial_adj.apply(fiber.data(), out.data());
        int idx[3];
        for (int u = 0; u < n; ++u) {
            idx[axis] = u; idx[a1] = a; idx[a2] = b;
            vol(idx[0], idx[1], idx[2]) = out[u];
        }
    });
    return vol;
}

// 3D power-of-two FFT over an L x L x L complex cube, in place.
inline void fft3_pow2(std::vector<cdouble>& a, int L, bool inverse) {
    std::vector<cdouble> buf(L);
    // axis 2 (contiguous)
    for (int i = 0; i < L * L; ++i) fft_pow2(a.data() + static_cast<std::size_t>(i) * L, L, inverse);
    // axis 1
    for (int i0 = 0; i0 < L; ++i0)
        for (int i2 = 0; i2 < L; ++i2) {
            for (int i1 = 0; i1 < L; ++i1) buf[i1] = a[(static_cast<std::size_t>(i0) * L + i1) * L + i2];
            fft_pow2(buf.data(), L, inverse);
            for (int i1 = 0; i1 < L; ++i1) a[(static_cast<std::size_t>(i0) * L + i1) * L + i2] = buf[i1];
        }
    // axis 0
    for (int i1 = 0; i1 < L; ++i1)
        for (int i2 = 0; i2 < L; ++i2) {
            for (int i0 = 0; i0 < L; ++i0) buf[i0] = a[(static_cast<std::size_t>(i0) * L + i1) * L + i2];
            fft_pow2(buf.data(), L, inverse);
            for (int i0 = 0; i0 < L; ++i0) a[(static_cast<std::size_t>(i0) * L + i1) * L + i2] = buf[i0];
        }
    if (inverse) {
        const double s = 1.0 / (static_cast<double>(L) * L * L);
        for (auto& v : a) v *= s;
    }
}

// Gram operator of the weighted sector stack as a Toeplitz convolution
// kernel K(delta), delta in [-(n-1), n-1]^3, embedded in an L^3 circulant.
class IdrtGram {
public:
    IdrtGram(int n, double dc_weight) : n_(n) {
        const int m = 3 * n + 1;
        const int nd = 2 * n - 1;
        L_ = static_cast<int>(next_pow2(static_cast<std::size_t>(nd)));
        // per-(k, delta) tables: radial phase P and transverse Dirichlet sum T
        std::vector<double> w(m);
        for (int ks = 0; ks < m; ++ks) {
            const int k = index_of(ks, m);
            w[ks] = (k == 0) ? dc_weight : static_cast<double>(k) * k;
        }
        Grid2<cdouble> P(m, nd);
        Grid2<double> T(m, nd);
        for (int ks = 0; ks < m; ++ks) {
            const int k = index_of(ks, m);
            for (int ds = 0; ds < nd; ++ds) {
                const int d = ds - (n - 1);
                const double ang = 2.0 * kPi * k * d / m;
                P(ks, ds) = cdouble(std::cos(ang), std::sin(ang));
                double t = 1.0;
                for (int l = 1; l <= n / 2; ++l) t += 2.0 * std::cos(2.0 * kPi * (2.0 * k / n) * l * d / m);
                T(ks, ds) = t;
            }
        }
        std::vector<cdouble> c(static_cast<std::size_t>(L_) * L_ * L_, cdouble(0, 0));
        parallel_for(0, static_cast<std::size_t>(nd), [&](std::size_t d0s) {
            const int d0 = static_cast<int>(d0s) - (n - 1);
            for (int d1s = 0; d1s < nd; ++d1s) {
                for (int d2s = 0; d2s < nd; ++d2s) {
                    cdouble sum(0, 0);
                    for (int ks = 0; ks < m; ++ks) {
                        const cdouble p0 = P(ks, d0s), p1 = P(ks, d1s), p2 = P(ks, d2s);
                        const double t0 = T(ks, d0s), t1 = T(ks, d1s), t2 = T(ks, d2s);
                        sum += w[ks] * (p0 * (t1 * t2) + p1 * (t0 * t2) + p2 * (t0 * t1));
                    }
                    const int s0 = (d0 + L_) % L_;
                    const int s1 = ((d1s - (n - 1)) + L_) % L_;
                    const int s2 = ((d2s - (n - 1)) + L_) % L_;
                    c[(static_cast<std::size_t>(s0) * L_ + s1) * L_ + s2] = sum.real();
                }
            }
        });
        fft3_pow2(c, L_, false);
        khat_ = std::move(c);
    }

    // y = M x over n^3 real volumes
    void apply(const std::vector<double>& x, std::vector<double>& y) const {
        std::vector<cdouble> a(static_cast<std::size_t>(L_) * L_ * L_, cdouble(0, 0));
        for (int i0 = 0; i0 < n_; ++i0)
            for (int i1 = 0; i1 < n_; ++i1)
                for (int i2 = 0; i2 < n_; ++i2)
                    a[(static_cast<std::size_t>(i0) * L_ + i1) * L_ + i2] =
                        x[(static_cast<std::size_t>(i0) * n_ + i1) * n_ + i2];
        fft3_pow2(a, L_, false);
        for (std::size_t i = 0; i < a.size(); ++i) a[i] *= khat_[i];
        fft3_pow2(a, L_, true);
        y.resize(static_cast<std::size_t>(n_) * n_ * n_);
        for (int i0 = 0; i0 < n_; ++i0)
            for (int i1 = 0; i1 < n_; ++i1)
                for (int i2 = 0; i2 < n_; ++i2)
                    y[(static_cast<std::size_t>(i0) * n_ + i1) * n_ + i2] =
                        a[(static_cast<std::size_t>(i0) * L_ + i1) * L_ + i2].real();
    }

private:
    int n_, L_;
    std::vector<cdouble> khat_;
};

}  // namespace detail

struct IdrtReport {
    int iterations = 0;
    double relative_residual = 0.0;
};

inline Grid3<double> idrt3(const RadonSpace4D& radon, const IdrtOptions& opt = {},
                           IdrtReport* report = nullptr) {
    const int n = radon.n;
    const int m = 3 * n + 1;
    const int ns = n + 1;
    if (radon.values.size0() != 3 || static_cast<int>(radon.values.size1()) != m ||
        static_cast<int>(radon.values.size2()) != ns || static_cast<int>(radon.values.size3()) != ns)
        throw std::invalid_argument("idrt3: radon shape mismatch");
    for (std::size_t i = 0; i < radon.values.size(); ++i)
        if (!std::isfinite(radon.values.data()[i])) throw std::invalid_argument("idrt3: non-finite values");

    // weights shared with the Gram kernel
    std::vector<double> w(m);
    for (int ks = 0; ks < m; ++ks) {
        const int k = index_of(ks, m);
        w[ks] = (k == 0) ? opt.dc_weight : static_cast<double>(k) * k;
    }

    // rhs: DFT along p per family, weight, adjoint back, sum
    std::vector<double> b(static_cast<std::size_t>(n) * n * n, 0.0);
    for (int fam = 0; fam < 3; ++fam) {
        Grid3<cdouble> S(m, ns, ns);
        parallel_for(0, static_cast<std::size_t>(ns) * ns, [&](std::size_t lj) {
            const int l = static_cast<int>(lj) / ns;
            const int j = static_cast<int>(lj) % ns;
            std::vector<cdouble> fiber(m);
            for (int p = 0; p < m; ++p) fiber[p] = radon.values(fam, p, l, j);
            std::vector<cdouble> F = centered_dft(fiber);
            for (int k = 0; k < m; ++k) S(k, l, j) = F[k] * w[k];
        });
        Grid3<cdouble> back = detail::pp_sector3_adjoint(S, fam, n);
        for (std::size_t i = 0; i < b.size(); ++i) b[i] += back.data()[i].real();
    }

    detail::IdrtGram gram(n, opt.dc_weight);

    // plain conjugate gradients on M x = b
    const std::size_t N = b.size();
    std::vector<double> x(N, 0.0), r = b, p = b, Ap;
    auto dot = [](const std::vector<double>& a, const std::vector<double>& c) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * c[i];
        return s;
    };
    double rr = dot(r, r);
    const double b_norm = std::sqrt(rr);
    int it = 0;
    if (b_norm > 0.0) {
        for (; it < opt.max_iter; ++it) {
            if (std::sqrt(rr) <= opt.tol * b_norm) break;
            gram.apply(p, Ap);
            const double alpha = rr / dot(p, Ap);
            for (std::size_t i = 0; i < N; ++i) x[i] += alpha * p[i];
            for (std::size_t i = 0; i < N; ++i) r[i] -= alpha * Ap[i];
            const double rr_new = dot(r, r);
            const double beta = rr_new / rr;
            rr = rr_new;
            for (std::size_t i = 0; i < N; ++i) p[i] = r[i] + beta * p[i];
        }
    }
    if (report) {
        report->iterations = it;
        report->relative_residual = b_norm > 0.0 ? std::sqrt(rr) / b_norm : 0.0;
    }

    Grid3<double> out(n, n, n);
    std::copy(x.begin(), x.end(), out.raw().begin());
    return out;
}

}  // namespace ppr
