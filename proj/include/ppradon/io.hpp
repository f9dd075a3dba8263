#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "array.hpp"

namespace ppr {

// Cubic image with physical pixel (voxel) size.
struct Volume {
    Grid3<double> data;
    double voxel_mm = 1.0;
    int n() const { return static_cast<int>(data.size0()); }
};

// ---------------------------------------------------------------------------
// Raw-volume container: little-endian float32 payload in <name>, JSON sidecar
// in <name>.json with at least {shape, order:"C", units, du}. Pipelines add a
// config hash for resume checking. Readable from any language with two lines
// of code, which is the point.
// ---------------------------------------------------------------------------

struct RawArrayFile {
    std::vector<float> payload;
    nlohmann::json header;
};

inline std::string sidecar_path(const std::string& path) { return path + ".json"; }

inline void save_raw(const std::string& path, const float* data, std::size_t count,
                     const nlohmann::json& header) {
    static_assert(std::endian::native == std::endian::little,
                  "raw container assumes a little-endian host");
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("save_raw: cannot open " + path);
        out.write(reinterpret_cast<const char*>(data),
                  static_cast<std::streamsize>(count * sizeof(float)));
        if (!out) throw std::runtime_error("save_raw: short write to " + path);
    }
    std::ofstream side(sidecar_path(path), std::ios::trunc);
    if (!side) throw std::runtime_error("save_raw: cannot open " + sidecar_path(path));
    side << header.dump(2) << "\n";
}

inline RawArrayFile load_raw(const std::string& path) {
    RawArrayFile f;
    {
        std::ifstream side(sidecar_path(path));
        if (!side) throw std::runtime_error("load_raw: missing sidecar " + sidecar_path(path));
        side >> f.header;
    }
    std::size_t expect = 1;
    for (const auto& d : f.header.at("shape")) expect *= d.get<std::size_t>();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_raw: cannot open " + path);
    in.seekg(0, std::ios::end);
    const std::size_t bytes = static_cast<std::size_t>(in.tellg());
    if (bytes != expect * sizeof(float))
        throw std::runtime_error("load_raw: payload size does not match header shape in " + path);
    in.seekg(0);
    f.payload.resize(expect);
    in.read(reinterpret_cast<char*>(f.payload.data()), static_cast<std::streamsize>(bytes));
    if (!in) throw std::runtime_error("load_raw: short read from " + path);
    return f;
}

inline void save_volume(const std::string& path, const Volume& vol,
                        const std::string& config_hash = "") {
    const int n = vol.n();
    if (vol.data.size1() != vol.data.size0() || vol.data.size2() != vol.data.size0())
        throw std::invalid_argument("save_volume: volume must be cubic");
    std::vector<float> f(vol.data.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = static_cast<float>(vol.data.data()[i]);
    nlohmann::json h{{"shape", {n, n, n}},   {"order", "C"},        {"axes", {"x", "y", "z"}},
                     {"units", "mm"},        {"du", vol.voxel_mm},  {"kind", "volume"}};
    if (!config_hash.empty()) h["config_hash"] = config_hash;
    save_raw(path, f.data(), f.size(), h);
}

inline Volume load_volume(const std::string& path, std::string* config_hash = nullptr) {
    RawArrayFile f = load_raw(path);
    const auto shape = f.header.at("shape");
    if (shape.size() != 3 || shape[0] != shape[1] || shape[1] != shape[2])
        throw std::runtime_error("load_volume: not a cubic volume: " + path);
    const int n = shape[0].get<int>();
    Volume v;
    v.voxel_mm = f.header.at("du").get<double>();
    v.data = Grid3<double>(n, n, n);
    for (std::size_t i = 0; i < f.payload.size(); ++i) v.data.raw()[i] = f.payload[i];
    if (config_hash) *config_hash = f.header.value("config_hash", "");
    return v;
}

inline void save_grid4(const std::string& path, const Grid4<double>& g, double du,
                       const std::string& kind, const std::string& config_hash = "") {
    std::vector<float> f(g.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = static_cast<float>(g.data()[i]);
    nlohmann::json h{{"shape", {g.size0(), g.size1(), g.size2(), g.size3()}},
                     {"order", "C"},
                     {"axes", {"family", "p", "l", "j"}},
                     {"units", "mm"},
                     {"du", du},
                     {"kind", kind}};
    if (!config_hash.empty()) h["config_hash"] = config_hash;
    save_raw(path, f.data(), f.size(), h);
}

inline Grid4<double> load_grid4(const std::string& path, double* du = nullptr,
                                std::string* config_hash = nullptr) {
    RawArrayFile f = load_raw(path);
    const auto shape = f.header.at("shape");
    if (shape.size() != 4) throw std::runtime_error("load_grid4: expected 4D shape in " + path);
    Grid4<double> g(shape[0].get<std::size_t>(), shape[1].get<std::size_t>(),
                    shape[2].get<std::size_t>(), shape[3].get<std::size_t>());
    for (std::size_t i = 0; i < f.payload.size(); ++i) g.raw()[i] = f.payload[i];
    if (du) *du = f.header.at("du").get<double>();
    if (config_hash) *config_hash = f.header.value("config_hash", "");
    return g;
}

// Projection stacks: shape (n_proj, nu, nu), axes (psi, u, v).
inline void save_stack(const std::string& path, const std::vector<Grid2<double>>& views,
                       double du_virtual, const std::string& config_hash = "") {
    if (views.empty()) throw std::invalid_argument("save_stack: empty stack");
    const std::size_t nu0 = views[0].size0(), nu1 = views[0].size1();
    std::vector<float> f;
    f.reserve(views.size() * nu0 * nu1);
    for (const auto& v : views) {
        if (v.size0() != nu0 || v.size1() != nu1)
            throw std::invalid_argument("save_stack: inconsistent view shapes");
        for (std::size_t i = 0; i < v.size(); ++i) f.push_back(static_cast<float>(v.data()[i]));
    }
    nlohmann::json h{{"shape", {views.size(), nu0, nu1}},
                     {"order", "C"},
                     {"axes", {"psi", "u", "v"}},
                     {"units", "mm"},
                     {"du", du_virtual},
                     {"kind", "projections"}};
    if (!config_hash.empty()) h["config_hash"] = config_hash;
    save_raw(path, f.data(), f.size(), h);
}

inline std::vector<Grid2<double>> load_stack(const std::string& path, double* du_virtual = nullptr,
                                             std::string* config_hash = nullptr) {
    RawArrayFile f = load_raw(path);
    const auto shape = f.header.at("shape");
    if (shape.size() != 3) throw std::runtime_error("load_stack: expected 3D shape in " + path);
    const std::size_t np = shape[0].get<std::size_t>();
    const std::size_t n0 = shape[1].get<std::size_t>(), n1 = shape[2].get<std::size_t>();
    std::vector<Grid2<double>> views(np, Grid2<double>(n0, n1));
    std::size_t at = 0;
    for (auto& v : views)
        for (std::size_t i = 0; i < v.size(); ++i) v.raw()[i] = f.payload[at++];
    if (du_virtual) *du_virtual = f.header.at("du").get<double>();
    if (config_hash) *config_hash = f.header.value("config_hash", "");
    return views;
}

// 8-bit binary PGM with the min-max window recorded in the sidecar.
inline void write_pgm8(const std::string& path, const Grid2<double>& img, double lo, double hi) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("write_pgm8: cannot open " + path);
    out << "P5\n" << img.size0() << " " << img.size1() << "\n255\n";
    const double span = hi > lo ? hi - lo : 1.0;
    // rows along the second index so the file reads as (width, height) = (size0, size1)
    for (std::size_t j = 0; j < img.size1(); ++j)
        for (std::size_t i = 0; i < img.size0(); ++i) {
            double t = (img(i, j) - lo) / span * 255.0;
            t = t < 0.0 ? 0.0 : (t > 255.0 ? 255.0 : t);
            const unsigned char b = static_cast<unsigned char>(std::lround(t));
            out.write(reinterpret_cast<const char*>(&b), 1);
        }
    nlohmann::json h{{"window", {{"lo", lo}, {"hi", hi}}}, {"format", "pgm8"}};
    std::ofstream side(sidecar_path(path), std::ios::trunc);
    side << h.dump(2) << "\n";
}

}  // namespace ppr
