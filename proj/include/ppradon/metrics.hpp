#pragma once

#include <cmath>
#include <fstream>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "array.hpp"
#include "io.hpp"

namespace ppr {

// ---------------------------------------------------------------------------
// Image-quality metrics: PSNR, CNR, MSSIM.
// ---------------------------------------------------------------------------

// 10 log10(mu_max^2 / MSE); +inf for identical inputs.
inline double psnr(std::span<const double> recon, std::span<const double> reference,
                   double mu_max) {
    if (recon.size() != reference.size()) throw std::invalid_argument("psnr: shape mismatch");
    if (!(mu_max > 0.0)) throw std::invalid_argument("psnr: mu_max must be positive");
    double mse = 0.0;
    for (std::size_t i = 0; i < recon.size(); ++i) {
        const double d = recon[i] - reference[i];
        mse += d * d;
    }
    mse /= static_cast<double>(recon.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(mu_max * mu_max / mse);
}

inline double psnr(const Grid3<double>& recon, const Grid3<double>& reference, double mu_max) {
    if (recon.size0() != reference.size0() || recon.size1() != reference.size1() ||
        recon.size2() != reference.size2())
        throw std::invalid_argument("psnr: shape mismatch");
    return psnr(std::span<const double>(recon.data(), recon.size()),
                std::span<const double>(reference.data(), reference.size()), mu_max);
}

// Voxel-index boxes, inclusive lo, exclusive hi.
struct RegionSpec {
    int roi_lo[3], roi_hi[3];
    int ref_lo[3], ref_hi[3];
};

// |mu_ROI - mu_Ref| / sqrt(sigma_ROI^2 + sigma_Ref^2), population variances.
inline double cnr(const Grid3<double>& vol, const RegionSpec& r) {
    auto stats = [&](const int lo[3], const int hi[3], double& mean, double& var) {
        double sum = 0.0, sum2 = 0.0;
        std::size_t count = 0;
        for (int i = lo[0]; i < hi[0]; ++i)
            for (int j = lo[1]; j < hi[1]; ++j)
                for (int k = lo[2]; k < hi[2]; ++k) {
                    if (i < 0 || j < 0 || k < 0 || i >= static_cast<int>(vol.size0()) ||
                        j >= static_cast<int>(vol.size1()) || k >= static_cast<int>(vol.size2()))
                        throw std::invalid_argument("cnr: region outside volume");
                    const double v = vol(i, j, k);
                    sum += v;
                    sum2 += v * v;
                    ++count;
                }
        if (count == 0) throw std::invalid_argument("cnr: empty region");
        mean = sum / count;
        var = sum2 / count - mean * mean;
        if (var < 0.0) var = 0.0;
    };
    double mu_roi, var_roi, mu_ref, var_ref;
    stats(r.roi_lo, r.roi_hi, mu_roi, var_roi);
    stats(r.ref_lo, r.ref_hi, mu_ref, var_ref);
    const double denom = std::sqrt(var_roi + var_ref);
    if (denom == 0.0) throw std::invalid_argument("cnr: both region variances are zero");
    return std::abs(mu_roi - mu_ref) / denom;
}

struct SsimParams {
    int window = 8;
    double mu_max = 1.0;  // maximum possible image value
    double c1() const { return (0.01 * mu_max) * (0.01 * mu_max); }
    double c2() const { return (0.03 * mu_max) * (0.03 * mu_max); }
};

// SSIM of two equally sized 2D windows with uniform (unweighted) statistics.
inline double ssim_window(const Grid2<double>& a, const Grid2<double>& b, int x0, int y0, int w,
                          double c1, double c2) {
    double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
    const double count = static_cast<double>(w) * w;
    for (int i = 0; i < w; ++i)
        for (int j = 0; j < w; ++j) {
            const double va = a(x0 + i, y0 + j);
            const double vb = b(x0 + i, y0 + j);
            sa += va; sb += vb;
            saa += va * va; sbb += vb * vb; sab += va * vb;
        }
    const double ma = sa / count, mb = sb / count;
    const double va = saa / count - ma * ma;
    const double vb = sbb / count - mb * mb;
    const double cov = sab / count - ma * mb;
    return ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
           ((ma * ma + mb * mb + c1) * (va + vb + c2));
}

// Mean SSIM over pixel-by-pixel sliding windows; volumes are compared slice
// by slice along the z axis.
inline double mssim(const Grid3<double>& recon, const Grid3<double>& reference,
                    const SsimParams& params) {
    if (recon.size0() != reference.size0() || recon.size1() != reference.size1() ||
        recon.size2() != reference.size2())
        throw std::invalid_argument("mssim: shape mismatch");
    const int nx_ = static_cast<int>(recon.size0());
    const int ny_ = static_cast<int>(recon.size1());
    const int nz_ = static_cast<int>(recon.size2());
    const int w = params.window;
    if (nx_ < w || ny_ < w) throw std::invalid_argument("mssim: image smaller than window");
    const double c1 = params.c1(), c2 = params.c2();
    double total = 0.0;
    std::size_t count = 0;
    Grid2<double> sa(nx_, ny_), sb(nx_, ny_);
    for (int z = 0; z < nz_; ++z) {
        for (int i = 0; i < nx_; ++i)
            for (int j = 0; j < ny_; ++j) {
                sa(i, j) = recon(i, j, z);
                sb(i, j) = reference(i, j, z);
            }
        for (int i = 0; i + w <= nx_; ++i)
            for (int j = 0; j + w <= ny_; ++j) {
                total += ssim_window(sa, sb, i, j, w, c1, c2);
                ++count;
            }
    }
    return total / static_cast<double>(count);
}

inline double mssim(const Grid2<double>& recon, const Grid2<double>& reference,
                    const SsimParams& params) {
    if (recon.size0() != reference.size0() || recon.size1() != reference.size1())
        throw std::invalid_argument("mssim: shape mismatch");
    const int nx_ = static_cast<int>(recon.size0());
    const int ny_ = static_cast<int>(recon.size1());
    const int w = params.window;
    if (nx_ < w || ny_ < w) throw std::invalid_argument("mssim: image smaller than window");
    double total = 0.0;
    std::size_t count = 0;
    for (int i = 0; i + w <= nx_; ++i)
        for (int j = 0; j + w <= ny_; ++j) {
            total += ssim_window(recon, reference, i, j, w, params.c1(), params.c2());
            ++count;
        }
    return total / static_cast<double>(count);
}

// CSV rows: run-id, metric, value, parameters.
struct MetricRow {
    std::string run_id;
    std::string metric;
    double value;
    std::string parameters;
};

inline void write_metrics_csv(const std::string& path, const std::vector<MetricRow>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("write_metrics_csv: cannot open " + path);
    out << "run_id,metric,value,parameters\n";
    out.precision(12);
    for (const auto& r : rows)
        out << r.run_id << "," << r.metric << "," << r.value << "," << r.parameters << "\n";
}

}  // namespace ppr
