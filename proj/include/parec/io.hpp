#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "parec/forward_model.hpp"
#include "parec/grid.hpp"
#include "parec/metrics.hpp"
#include "parec/vec.hpp"
#include "parec/wavelet.hpp"

namespace parec::io {

namespace detail {

inline std::ofstream open_out(const std::string& path, bool binary = false) {
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out.good()) throw std::runtime_error("cannot open for writing: " + path);
    return out;
}

inline std::ifstream open_in(const std::string& path, bool binary = false) {
    std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
    if (!in.good()) throw std::runtime_error("cannot open for reading: " + path);
    return in;
}

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

inline std::string fingerprint_hex(std::uint64_t fp) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fp));
    return buf;
}

// ---------------------------------------------------------------------------
// Images: 16-bit big-endian PGM plus a JSON sidecar with the linear scaling
// and the grid metadata. Rows are written top-to-bottom with +y up.
// ---------------------------------------------------------------------------

inline void write_image_pgm16(const std::string& path, const Image& image) {
    const auto [mn_it, mx_it] =
        std::minmax_element(image.values.begin(), image.values.end());
    const double mn = *mn_it, mx = *mx_it;
    const double span = mx > mn ? mx - mn : 1.0;

    auto out = detail::open_out(path, true);
    out << "P5\n" << image.grid.nx << " " << image.grid.ny << "\n65535\n";
    for (std::size_t row = 0; row < image.grid.ny; ++row) {
        const std::size_t iy = image.grid.ny - 1 - row;
        for (std::size_t ix = 0; ix < image.grid.nx; ++ix) {
            const double v = (image.at(ix, iy) - mn) / span;
            const auto q = static_cast<std::uint16_t>(std::lround(v * 65535.0));
            const unsigned char bytes[2] = {static_cast<unsigned char>(q >> 8),
                                            static_cast<unsigned char>(q & 0xff)};
            out.write(reinterpret_cast<const char*>(bytes), 2);
        }
    }

    nlohmann::json side{
        {"format", "pgm16-be"},
        {"nx", image.grid.nx},
        {"ny", image.grid.ny},
        {"pixel_size", image.grid.pixel_size},
        {"center", {image.grid.center_x, image.grid.center_y}},
        {"value_min", mn},
        {"value_max", mx},
        {"row0", "ymax"},
    };
    detail::open_out(path + ".json") << side.dump(2) << "\n";
}

// 8-bit preview for quick inspection; no sidecar.
inline void write_image_pgm8(const std::string& path, const Image& image) {
    const auto [mn_it, mx_it] =
        std::minmax_element(image.values.begin(), image.values.end());
    const double mn = *mn_it, mx = *mx_it;
    const double span = mx > mn ? mx - mn : 1.0;
    auto out = detail::open_out(path, true);
    out << "P5\n" << image.grid.nx << " " << image.grid.ny << "\n255\n";
    for (std::size_t row = 0; row < image.grid.ny; ++row) {
        const std::size_t iy = image.grid.ny - 1 - row;
        for (std::size_t ix = 0; ix < image.grid.nx; ++ix) {
            const double v = (image.at(ix, iy) - mn) / span;
            const auto q = static_cast<unsigned char>(std::lround(v * 255.0));
            out.write(reinterpret_cast<const char*>(&q), 1);
        }
    }
}

inline Image read_image_pgm16(const std::string& path) {
    const nlohmann::json side = nlohmann::json::parse(detail::open_in(path + ".json"));
    ImagingGrid grid;
    grid.nx = side.at("nx").get<std::size_t>();
    grid.ny = side.at("ny").get<std::size_t>();
    grid.pixel_size = side.at("pixel_size").get<double>();
    grid.center_x = side.at("center")[0].get<double>();
    grid.center_y = side.at("center")[1].get<double>();
    const double mn = side.at("value_min").get<double>();
    const double mx = side.at("value_max").get<double>();
    const double span = mx > mn ? mx - mn : 1.0;

    auto in = detail::open_in(path, true);
    std::string magic;
    std::size_t nx = 0, ny = 0, maxval = 0;
    in >> magic >> nx >> ny >> maxval;
    if (magic != "P5" || nx != grid.nx || ny != grid.ny || maxval != 65535)
        throw std::runtime_error("read_image_pgm16: unexpected header in " + path);
    in.get();  // single whitespace after maxval

    Image image = make_image(grid);
    std::vector<unsigned char> rowbuf(nx * 2);
    for (std::size_t row = 0; row < ny; ++row) {
        in.read(reinterpret_cast<char*>(rowbuf.data()), static_cast<std::streamsize>(rowbuf.size()));
        if (!in.good()) throw std::runtime_error("read_image_pgm16: truncated file " + path);
        const std::size_t iy = ny - 1 - row;
        for (std::size_t ix = 0; ix < nx; ++ix) {
            const std::uint16_t q = static_cast<std::uint16_t>(
                (rowbuf[2 * ix] << 8) | rowbuf[2 * ix + 1]);
            image.at(ix, iy) = mn + static_cast<double>(q) / 65535.0 * span;
        }
    }
    return image;
}

// ---------------------------------------------------------------------------
// Sinograms: CSV (one row per sensor) and raw little-endian float64 with a
// JSON sidecar.
// ---------------------------------------------------------------------------

inline void write_sinogram_csv(const std::string& path, const Sinogram& y) {
    auto out = detail::open_out(path);
    for (std::size_t q = 0; q < y.num_sensors; ++q) {
        for (std::size_t k = 0; k < y.num_samples; ++k) {
            if (k) out << ",";
            out << detail::fmt(y.at(q, k));
        }
        out << "\n";
    }
}

inline void write_raw_f64(const std::string& path, std::span<const double> values,
                          nlohmann::json sidecar) {
    auto out = detail::open_out(path, true);
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(double)));
    sidecar["dtype"] = "float64";
    sidecar["byte_order"] = "little_endian";
    sidecar["count"] = values.size();
    detail::open_out(path + ".json") << sidecar.dump(2) << "\n";
}

inline std::vector<double> read_raw_f64(const std::string& path) {
    const nlohmann::json side = nlohmann::json::parse(detail::open_in(path + ".json"));
    const auto count = side.at("count").get<std::size_t>();
    std::vector<double> values(count);
    auto in = detail::open_in(path, true);
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!in.good()) throw std::runtime_error("read_raw_f64: truncated file " + path);
    return values;
}

inline void write_sinogram_raw(const std::string& path, const Sinogram& y) {
    write_raw_f64(path, y.values,
                  {{"kind", "sinogram"},
                   {"num_sensors", y.num_sensors},
                   {"num_samples", y.num_samples},
                   {"layout", "sensor-major, time-minor"}});
}

inline Sinogram read_sinogram_raw(const std::string& path) {
    const nlohmann::json side = nlohmann::json::parse(detail::open_in(path + ".json"));
    Sinogram y;
    y.num_sensors = side.at("num_sensors").get<std::size_t>();
    y.num_samples = side.at("num_samples").get<std::size_t>();
    y.values = read_raw_f64(path);
    if (y.values.size() != y.num_sensors * y.num_samples)
        throw std::runtime_error("read_sinogram_raw: inconsistent sidecar for " + path);
    return y;
}

// Wavelet coefficient vectors share the raw format; the sidecar records the
// basis and the subband layout.
inline void write_coefficients_raw(const std::string& path, std::span<const double> theta,
                                   const WaveletBasis& basis) {
    write_raw_f64(path, theta,
                  {{"kind", "wavelet_coefficients"},
                   {"family", to_string(basis.family)},
                   {"levels", basis.levels},
                   {"nx", basis.nx},
                   {"ny", basis.ny},
                   {"layout", "level-major nested quadrants, subband order LL, LH, HL, HH"}});
}

// ---------------------------------------------------------------------------
// Profiles and PSNR reports
// ---------------------------------------------------------------------------

inline void write_profile_csv(const std::string& path, const Profile& profile) {
    auto out = detail::open_out(path);
    out << "position_mm,value\n";
    for (std::size_t i = 0; i < profile.values.size(); ++i)
        out << detail::fmt(profile.positions_mm[i]) << "," << detail::fmt(profile.values[i])
            << "\n";
}

inline nlohmann::json psnr_to_json(const PsnrReport& report) {
    nlohmann::json j{{"mse", report.mse}, {"reference_peak", report.reference_peak}};
    if (report.is_exact())
        j["psnr_db"] = "inf";
    else
        j["psnr_db"] = report.psnr_db;
    return j;
}

inline void write_psnr_json(const std::string& path, const PsnrReport& report) {
    detail::open_out(path) << psnr_to_json(report).dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Model matrix cache: binary CSR dump guarded by the provenance fingerprint.
// ---------------------------------------------------------------------------

inline constexpr char kMatrixMagic[8] = {'P', 'A', 'R', 'E', 'C', 'K', '0', '1'};

inline void save_model_matrix(const std::string& path, const ModelMatrix& K) {
    auto out = detail::open_out(path, true);
    out.write(kMatrixMagic, sizeof(kMatrixMagic));
    auto put_u64 = [&](std::uint64_t v) {
        out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    };
    auto put_f64 = [&](double v) { out.write(reinterpret_cast<const char*>(&v), sizeof(v)); };
    put_u64(K.fingerprint);
    put_u64(K.rows());
    put_u64(K.cols());
    put_u64(K.nnz());
    put_u64(K.num_sensors);
    put_u64(K.num_samples);
    put_u64(K.grid.nx);
    put_u64(K.grid.ny);
    put_f64(K.grid.pixel_size);
    put_f64(K.grid.center_x);
    put_f64(K.grid.center_y);
    put_u64(K.time_window_truncated ? 1 : 0);
    out.write(reinterpret_cast<const char*>(K.row_ptr.data()),
              static_cast<std::streamsize>(K.row_ptr.size() * sizeof(std::uint64_t)));
    out.write(reinterpret_cast<const char*>(K.col_idx.data()),
              static_cast<std::streamsize>(K.col_idx.size() * sizeof(std::uint32_t)));
    out.write(reinterpret_cast<const char*>(K.weights.data()),
              static_cast<std::streamsize>(K.weights.size() * sizeof(double)));
}

// Loads a cached matrix; refuses to return one whose stored fingerprint does
// not match the expected provenance.
inline ModelMatrix load_model_matrix(const std::string& path, std::uint64_t expected_fingerprint) {
    auto in = detail::open_in(path, true);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in.good() || !std::equal(magic, magic + 8, kMatrixMagic))
        throw std::runtime_error("model matrix cache: bad magic in " + path);
    auto get_u64 = [&] {
        std::uint64_t v = 0;
        in.read(reinterpret_cast<char*>(&v), sizeof(v));
        return v;
    };
    auto get_f64 = [&] {
        double v = 0;
        in.read(reinterpret_cast<char*>(&v), sizeof(v));
        return v;
    };
    ModelMatrix K;
    K.fingerprint = get_u64();
    if (K.fingerprint != expected_fingerprint)
        throw std::runtime_error("model matrix cache: fingerprint mismatch in " + path);
    K.rows_ = get_u64();
    K.cols_ = get_u64();
    const std::uint64_t nnz = get_u64();
    K.num_sensors = get_u64();
    K.num_samples = get_u64();
    K.grid.nx = get_u64();
    K.grid.ny = get_u64();
    K.grid.pixel_size = get_f64();
    K.grid.center_x = get_f64();
    K.grid.center_y = get_f64();
    K.time_window_truncated = get_u64() != 0;
    K.row_ptr.resize(K.rows_ + 1);
    K.col_idx.resize(nnz);
    K.weights.resize(nnz);
    in.read(reinterpret_cast<char*>(K.row_ptr.data()),
            static_cast<std::streamsize>(K.row_ptr.size() * sizeof(std::uint64_t)));
    in.read(reinterpret_cast<char*>(K.col_idx.data()),
            static_cast<std::streamsize>(nnz * sizeof(std::uint32_t)));
    in.read(reinterpret_cast<char*>(K.weights.data()),
            static_cast<std::streamsize>(nnz * sizeof(double)));
    if (!in.good()) throw std::runtime_error("model matrix cache: truncated file " + path);
    return K;
}

}  // namespace parec::io
