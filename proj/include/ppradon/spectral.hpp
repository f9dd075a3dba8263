#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "array.hpp"

namespace ppr {

using cdouble = std::complex<double>;

// ---------------------------------------------------------------------------
// Dirichlet interpolation kernel
//   D_m(p) = sin(pi p) / (m sin(pi p / m)),  D_m(t m) = 1 for odd m.
// Periodic sinc used for trigonometric interpolation; exact 1/0 at grid
// points, which the tests rely on, hence the integer fast path.
// ---------------------------------------------------------------------------
inline double dirichlet_kernel(double p, int m) {
    if (m < 1) throw std::invalid_argument("dirichlet_kernel: m must be >= 1");
    const double r = std::nearbyint(p);
    if (p == r) {
        const long long ip = static_cast<long long>(r);
        return (ip % m == 0) ? 1.0 : 0.0;
    }
    return std::sin(kPi * p) / (m * std::sin(kPi * p / m));
}

namespace detail {

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// Twiddle table W^j = exp(-2 pi i j / len), j < len/2, cached per length and
// per thread (the transforms run from worker threads).
inline const std::vector<cdouble>& pow2_twiddles(std::size_t len) {
    thread_local std::map<std::size_t, std::vector<cdouble>> cache;
    auto it = cache.find(len);
    if (it != cache.end()) return it->second;
    std::vector<cdouble> tw(len / 2);
    for (std::size_t j = 0; j < len / 2; ++j) {
        const double ang = -2.0 * kPi * static_cast<double>(j) / static_cast<double>(len);
        tw[j] = cdouble(std::cos(ang), std::sin(ang));
    }
    return cache.emplace(len, std::move(tw)).first->second;
}

// In-place radix-2 FFT, unnormalized. Forward kernel exp(-2 pi i k u / n).
inline void fft_pow2(cdouble* a, std::size_t n, bool inverse) {
    if (n <= 1) return;
    if ((n & (n - 1)) != 0) throw std::invalid_argument("fft_pow2: length not a power of two");
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    const cdouble* w = pow2_twiddles(n).data();
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t step = n / len;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t j = 0; j < len / 2; ++j) {
                cdouble wj = w[j * step];
                if (inverse) wj = std::conj(wj);
                const cdouble u = a[i + j];
                const cdouble v = a[i + j + len / 2] * wj;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
            }
        }
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Chirp-z evaluation (Bluestein factorization).
//
// A plan evaluates, over centered index ranges,
//   y[k] = sum_u x[u] exp(-2 pi i * alpha * k * u / m),
//   u in centered(n_in), k in centered(n_out),
// through the identity k*u = (k^2 + u^2 - (k-u)^2) / 2, which turns the sum
// into one linear convolution of length next_pow2(n_in + n_out - 1).
//
// The pipeline always uses rational factors alpha = num/den (2k/n, or 1 for
// plain DFTs); for those the quadratic phases are reduced modulo 2*den*m in
// exact integer arithmetic before calling sin/cos, so large indices lose no
// precision.
// ---------------------------------------------------------------------------
class ChirpZPlan {
public:
    // Rational factor alpha = num / den.
    ChirpZPlan(long long num, long long den, long long m, int n_in, int n_out)
        : n_in_(n_in), n_out_(n_out) {
        if (n_in < 1 || n_out < 1 || m < 1 || den == 0)
            throw std::invalid_argument("ChirpZPlan: bad arguments");
        init([num, den, m](long long x2) {
            // angle(x) = -pi * num * x^2 / (den * m), reduced mod 2*pi exactly
            const long long period = 2 * den * m;
            long long r = (num % period) * (x2 % period) % period;
            if (r < 0) r += period;
            return -kPi * static_cast<double>(r) / static_cast<double>(den * m);
        });
    }

    // Arbitrary real factor.
    ChirpZPlan(double alpha, long long m, int n_in, int n_out) : n_in_(n_in), n_out_(n_out) {
        if (n_in < 1 || n_out < 1 || m < 1)
            throw std::invalid_argument("ChirpZPlan: bad arguments");
        init([alpha, m](long long x2) {
            const long double period = 2.0L * static_cast<long double>(m);
            long double r = std::fmod(static_cast<long double>(alpha) * static_cast<long double>(x2),
                                      period);
            return static_cast<double>(-std::numbers::pi_v<long double> * r /
                                       static_cast<long double>(m));
        });
    }

    int input_size() const { return n_in_; }
    int output_size() const { return n_out_; }

    void apply(const cdouble* x, cdouble* y) const {
        std::vector<cdouble> work(conv_len_, cdouble(0.0, 0.0));
        for (int i = 0; i < n_in_; ++i) work[i] = x[i] * pre_[i];
        detail::fft_pow2(work.data(), conv_len_, false);
        for (std::size_t i = 0; i < conv_len_; ++i) work[i] *= kernel_fft_[i];
        detail::fft_pow2(work.data(), conv_len_, true);
        const double scale = 1.0 / static_cast<double>(conv_len_);
        for (int t = 0; t < n_out_; ++t) y[t] = work[t + n_in_ - 1] * post_[t] * scale;
    }

    std::vector<cdouble> apply(std::span<const cdouble> x) const {
        if (static_cast<int>(x.size()) != n_in_)
            throw std::invalid_argument("ChirpZPlan: input length mismatch");
        std::vector<cdouble> y(n_out_);
        apply(x.data(), y.data());
        return y;
    }

private:
    template <typename AngleFn>
    void init(AngleFn angle_of_sq) {
        const int u_lo = centered_lo(n_in_);
        const int k_lo = centered_lo(n_out_);
        const int u_hi = centered_hi(n_in_);
        conv_len_ = detail::next_pow2(static_cast<std::size_t>(n_in_) + n_out_ - 1);
        pre_.resize(n_in_);
        post_.resize(n_out_);
        kernel_fft_.assign(conv_len_, cdouble(0.0, 0.0));
        for (int i = 0; i < n_in_; ++i) {
            const long long u = u_lo + i;
            const double a = angle_of_sq(u * u);
            pre_[i] = cdouble(std::cos(a), std::sin(a));
        }
        for (int t = 0; t < n_out_; ++t) {
            const long long k = k_lo + t;
            const double a = angle_of_sq(k * k);
            post_[t] = cdouble(std::cos(a), std::sin(a));
        }
        // kernel[j] = exp(+i*angle) at d = d_min + j, d = k - u
        const int d_min = k_lo - u_hi;
        const int d_count = n_in_ + n_out_ - 1;
        for (int j = 0; j < d_count; ++j) {
            const long long d = d_min + j;
            const double a = angle_of_sq(d * d);
            kernel_fft_[j] = cdouble(std::cos(a), -std::sin(a));
        }
        detail::fft_pow2(kernel_fft_.data(), conv_len_, false);
    }

    int n_in_, n_out_;
    std::size_t conv_len_ = 0;
    std::vector<cdouble> pre_, post_, kernel_fft_;
};

// ---------------------------------------------------------------------------
// Centered DFTs of arbitrary length.
//   forward:  X[k] = sum_u x[u] exp(-2 pi i k u / L)
//   inverse:  x[u] = (1/L) sum_k X[k] exp(+2 pi i k u / L)
// Power-of-two lengths go through the radix-2 path (half-length rotation of
// inputs and outputs); everything else through Bluestein.
// ---------------------------------------------------------------------------
namespace detail {

inline void centered_dft_inplace(cdouble* a, int len, bool inverse) {
    if (len <= 0) throw std::invalid_argument("centered_dft: empty signal");
    if ((len & (len - 1)) == 0) {
        // rotate so the centered origin lands on slot 0
        std::vector<cdouble> tmp(a, a + len);
        const int h = len / 2;
        for (int s = 0; s < len; ++s) a[s] = tmp[(s + h) % len];
        fft_pow2(a, len, inverse);
        std::copy(a, a + len, tmp.begin());
        for (int s = 0; s < len; ++s) a[s] = tmp[(s + h) % len];
    } else {
        ChirpZPlan plan(inverse ? -1 : 1, 1, len, len, len);
        std::vector<cdouble> out(len);
        plan.apply(a, out.data());
        std::copy(out.begin(), out.end(), a);
    }
    if (inverse) {
        const double s = 1.0 / static_cast<double>(len);
        for (int i = 0; i < len; ++i) a[i] *= s;
    }
}

}  // namespace detail

inline std::vector<cdouble> centered_dft(std::span<const cdouble> x) {
    std::vector<cdouble> a(x.begin(), x.end());
    detail::centered_dft_inplace(a.data(), static_cast<int>(a.size()), false);
    return a;
}

inline std::vector<cdouble> centered_idft(std::span<const cdouble> x) {
    std::vector<cdouble> a(x.begin(), x.end());
    detail::centered_dft_inplace(a.data(), static_cast<int>(a.size()), true);
    return a;
}

// ---------------------------------------------------------------------------
// Fractional Fourier transform, y[k] = sum_u x[u] exp(-2 pi i alpha k u / m),
// over the signal's own centered index range.
// ---------------------------------------------------------------------------
struct FrftFactor {
    double alpha;
    int m;  // kernel length; 2n+1 or 3n+1 in pipeline use
};

inline std::vector<cdouble> frft(std::span<const cdouble> x, const FrftFactor& f) {
    if (x.empty()) throw std::invalid_argument("frft: empty signal");
    if (f.m < 1) throw std::invalid_argument("frft: kernel length must be >= 1");
    if (!std::isfinite(f.alpha)) throw std::invalid_argument("frft: non-finite factor");
    const int n = static_cast<int>(x.size());
    ChirpZPlan plan(f.alpha, f.m, n, n);
    return plan.apply(x);
}

// Zero padding to a longer centered axis: index i of the input keeps centered
// index i, so original samples stay centered in the output.
template <typename T>
std::vector<T> pad_zero_centered(std::span<const T> x, int new_len) {
    const int n = static_cast<int>(x.size());
    if (new_len < n) throw std::invalid_argument("pad_zero_centered: target shorter than input");
    std::vector<T> out(new_len, T{});
    for (int i = 0; i < n; ++i) {
        const int idx = index_of(i, n);
        out[slot_of(idx, new_len)] = x[i];
    }
    return out;
}

}  // namespace ppr
