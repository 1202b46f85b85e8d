#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "parec/grid.hpp"
#include "parec/parallel.hpp"
#include "parec/rng.hpp"
#include "parec/sensors.hpp"
#include "parec/vec.hpp"

namespace parec {

// Sampling parameters of the simulated acquisition. amplitude_constant folds
// the physical prefactor (expansion coefficient over heat capacity and the
// pulse energy); the reconstructions and PSNR are invariant to it.
struct AcquisitionConfig {
    double sound_speed = 1540.0;    // m/s
    double sampling_freq = 55.0e6;  // Hz
    std::size_t num_samples = 600;  // per sensor
    double t_start = 0.0;           // seconds, time of the first sample
    double amplitude_constant = 1.0;

    void validate() const {
        require(std::isfinite(sound_speed) && sound_speed > 0.0,
                "acquisition: sound_speed must be positive");
        require(std::isfinite(sampling_freq) && sampling_freq > 0.0,
                "acquisition: sampling_freq must be positive");
        require(num_samples >= 2, "acquisition: num_samples must be >= 2");
        require(std::isfinite(t_start) && t_start >= 0.0,
                "acquisition: t_start must be >= 0");
        require(std::isfinite(amplitude_constant), "acquisition: amplitude_constant must be finite");
    }
};

// Stacked time traces, one block of num_samples per sensor (sensor-major).
struct Sinogram {
    std::size_t num_sensors = 0;
    std::size_t num_samples = 0;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    double& at(std::size_t sensor, std::size_t sample) {
        return values[sensor * num_samples + sample];
    }
    double at(std::size_t sensor, std::size_t sample) const {
        return values[sensor * num_samples + sample];
    }
};

namespace detail {

inline std::uint64_t fnv1a(std::uint64_t hash, const void* data, std::size_t size) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
        hash ^= bytes[i];
        hash *= 0x100000001b3ull;
    }
    return hash;
}

inline std::uint64_t fnv1a_str(std::uint64_t hash, const std::string& s) {
    return fnv1a(hash, s.data(), s.size());
}

inline std::string canonical(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

// Provenance fingerprint of the (grid, sensors, acquisition) triple; used to
// key model-matrix caches and validate them on load.
inline std::uint64_t model_fingerprint(const ImagingGrid& grid, const SensorArray& sensors,
                                       const AcquisitionConfig& acq) {
    using detail::canonical;
    std::uint64_t h = 0xcbf29ce484222325ull;
    std::string s = "grid:" + std::to_string(grid.nx) + "," + std::to_string(grid.ny) + "," +
                    canonical(grid.pixel_size) + "," + canonical(grid.center_x) + "," +
                    canonical(grid.center_y) + ";sensors:" + canonical(sensors.radius);
    for (double a : sensors.angles) s += "," + canonical(a);
    s += ";acq:" + canonical(acq.sound_speed) + "," + canonical(acq.sampling_freq) + "," +
         std::to_string(acq.num_samples) + "," + canonical(acq.t_start) + "," +
         canonical(acq.amplitude_constant);
    return detail::fnv1a_str(h, s);
}

// Sparse discrete forward operator K (compressed sparse rows). Row block
// q*num_samples .. (q+1)*num_samples-1 holds the trace of sensor q.
struct ModelMatrix {
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::uint64_t> row_ptr;  // rows_ + 1
    std::vector<std::uint32_t> col_idx;
    std::vector<double> weights;

    ImagingGrid grid;
    std::size_t num_sensors = 0;
    std::size_t num_samples = 0;
    std::uint64_t fingerprint = 0;
    bool time_window_truncated = false;

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::uint64_t nnz() const { return row_ptr.empty() ? 0 : row_ptr.back(); }

    std::vector<double> apply(std::span<const double> x) const {
        require(x.size() == cols_, "ModelMatrix::apply: dimension mismatch");
        std::vector<double> y(rows_, 0.0);
        par::run_chunks(rows_, 512, [&](std::size_t, std::size_t r0, std::size_t r1) {
            for (std::size_t r = r0; r < r1; ++r) {
                double s = 0.0;
                for (std::uint64_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
                    s += weights[k] * x[col_idx[k]];
                y[r] = s;
            }
        });
        return y;
    }

    // K^T y with per-chunk accumulators reduced in chunk order, so the result
    // is independent of the worker count.
    std::vector<double> apply_adjoint(std::span<const double> y) const {
        require(y.size() == rows_, "ModelMatrix::apply_adjoint: dimension mismatch");
        constexpr std::size_t chunk = 1024;
        const std::size_t nchunks = rows_ == 0 ? 0 : (rows_ + chunk - 1) / chunk;
        std::vector<std::vector<double>> partials(nchunks);
        par::run_chunks(rows_, chunk, [&](std::size_t c, std::size_t r0, std::size_t r1) {
            auto& part = partials[c];
            part.assign(cols_, 0.0);
            for (std::size_t r = r0; r < r1; ++r) {
                const double v = y[r];
                if (v == 0.0) continue;
                for (std::uint64_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
                    part[col_idx[k]] += weights[k] * v;
            }
        });
        std::vector<double> x(cols_, 0.0);
        for (const auto& part : partials)
            for (std::size_t j = 0; j < cols_; ++j) x[j] += part[j];
        return x;
    }

    // Wraps a dense row-major matrix; handy for small systems and tests.
    static ModelMatrix from_dense(std::size_t rows, std::size_t cols,
                                  std::span<const double> row_major) {
        require(row_major.size() == rows * cols, "from_dense: size mismatch");
        ModelMatrix m;
        m.rows_ = rows;
        m.cols_ = cols;
        m.grid = ImagingGrid{cols, 1, 1.0, 0.0, 0.0};
        m.num_sensors = rows;
        m.num_samples = 1;
        m.row_ptr.assign(rows + 1, 0);
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) {
                const double w = row_major[r * cols + c];
                if (w != 0.0) {
                    m.col_idx.push_back(static_cast<std::uint32_t>(c));
                    m.weights.push_back(w);
                }
            }
            m.row_ptr[r + 1] = m.col_idx.size();
        }
        m.fingerprint = detail::fnv1a(0xcbf29ce484222325ull, row_major.data(),
                                      row_major.size() * sizeof(double));
        return m;
    }

    static ModelMatrix identity(std::size_t n) {
        std::vector<double> eye(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i) eye[i * n + i] = 1.0;
        return from_dense(n, n, eye);
    }
};

// Discretizes the pressure-trace integral: a delta heating pulse turns the
// spherical-shell integral into per-sample shell sums
//   S[(q,k), j] = amp * pixel_size^2 / d_qj * tri(c*t_k - d_qj)
// with tri the unit triangle of half-width c/sampling_freq, followed by the
// per-sensor central finite difference in time (forward/backward at block
// edges) scaled by sampling_freq. Pixels are treated as in-plane point
// sources with the 3-D 1/d decay.
inline ModelMatrix build_model_matrix(const ImagingGrid& grid, const SensorArray& sensors,
                                      const AcquisitionConfig& acq) {
    require(grid.nx >= 1 && grid.ny >= 1 && grid.pixel_size > 0.0,
            "build_model_matrix: invalid grid");
    require(sensors.count() >= 1 && sensors.radius > 0.0,
            "build_model_matrix: invalid sensor array");
    acq.validate();

    const std::size_t m = grid.pixel_count();
    const std::size_t ns = acq.num_samples;
    const std::size_t nq = sensors.count();
    const double c = acq.sound_speed;
    const double fs = acq.sampling_freq;
    const double amp = acq.amplitude_constant;
    const double h = grid.pixel_size;

    ModelMatrix K;
    K.rows_ = nq * ns;
    K.cols_ = m;
    K.grid = grid;
    K.num_sensors = nq;
    K.num_samples = ns;
    K.fingerprint = model_fingerprint(grid, sensors, acq);

    // Window coverage check: the farthest pixel from any sensor lies at a
    // grid corner.
    double max_d = 0.0;
    for (std::size_t q = 0; q < nq; ++q) {
        const double sx = grid.center_x + sensors.x(q);
        const double sy = grid.center_y + sensors.y(q);
        for (std::size_t cx = 0; cx < 2; ++cx)
            for (std::size_t cy = 0; cy < 2; ++cy) {
                const double px = grid.pixel_x(cx * (grid.nx - 1));
                const double py = grid.pixel_y(cy * (grid.ny - 1));
                max_d = std::max(max_d, std::hypot(px - sx, py - sy));
            }
    }
    K.time_window_truncated =
        max_d > c * (acq.t_start + static_cast<double>(ns - 1) / fs);

    struct Entry {
        std::uint32_t col;
        double w;
    };
    using Row = std::vector<Entry>;

    // Per-sensor assembly: scatter every pixel into the two time bins its
    // distance interpolates between, then difference adjacent shell rows.
    std::vector<std::vector<Entry>> block_cols(nq);
    std::vector<std::vector<std::uint64_t>> block_ptr(nq);
    par::run_chunks(nq, 1, [&](std::size_t, std::size_t q0, std::size_t q1) {
        for (std::size_t q = q0; q < q1; ++q) {
            const double sx = grid.center_x + sensors.x(q);
            const double sy = grid.center_y + sensors.y(q);

            std::vector<Row> bins(ns);
            for (std::size_t iy = 0; iy < grid.ny; ++iy) {
                const double py = grid.pixel_y(iy);
                for (std::size_t ix = 0; ix < grid.nx; ++ix) {
                    const double px = grid.pixel_x(ix);
                    double d = std::hypot(px - sx, py - sy);
                    d = std::max(d, 0.5 * h);  // guard a sensor inside a pixel
                    const double w = amp * h * h / d;
                    const double kstar = (d / c - acq.t_start) * fs;
                    const double kfl = std::floor(kstar);
                    const double frac = kstar - kfl;
                    const auto j = static_cast<std::uint32_t>(grid.index(ix, iy));
                    if (kfl >= 0.0 && kfl < static_cast<double>(ns)) {
                        const auto k0 = static_cast<std::size_t>(kfl);
                        if (frac < 1.0) bins[k0].push_back({j, w * (1.0 - frac)});
                        if (k0 + 1 < ns && frac > 0.0) bins[k0 + 1].push_back({j, w * frac});
                    } else if (kfl == -1.0 && frac > 0.0) {
                        bins[0].push_back({j, w * frac});
                    }
                }
            }

            // Time derivative: row k = fs * (bins[k+1] - bins[k-1]) / 2 in the
            // interior, one-sided at the block edges. Bin entry lists are
            // already sorted by column, so a two-pointer merge keeps rows sorted.
            auto merge = [](const Row& plus, const Row& minus, double s, Row& out) {
                out.clear();
                std::size_t a = 0, b = 0;
                while (a < plus.size() || b < minus.size()) {
                    if (b == minus.size() ||
                        (a < plus.size() && plus[a].col < minus[b].col)) {
                        out.push_back({plus[a].col, s * plus[a].w});
                        ++a;
                    } else if (a == plus.size() || minus[b].col < plus[a].col) {
                        out.push_back({minus[b].col, -s * minus[b].w});
                        ++b;
                    } else {
                        const double w = s * (plus[a].w - minus[b].w);
                        if (w != 0.0) out.push_back({plus[a].col, w});
                        ++a;
                        ++b;
                    }
                }
            };

            auto& cols = block_cols[q];
            auto& ptr = block_ptr[q];
            ptr.assign(ns + 1, 0);
            Row row;
            static const Row empty;
            for (std::size_t k = 0; k < ns; ++k) {
                if (k == 0)
                    merge(ns > 1 ? bins[1] : empty, bins[0], fs, row);
                else if (k == ns - 1)
                    merge(bins[ns - 1], bins[ns - 2], fs, row);
                else
                    merge(bins[k + 1], bins[k - 1], 0.5 * fs, row);
                cols.insert(cols.end(), row.begin(), row.end());
                ptr[k + 1] = cols.size();
            }
        }
    });

    std::uint64_t nnz = 0;
    for (const auto& cols : block_cols) nnz += cols.size();
    K.row_ptr.assign(K.rows_ + 1, 0);
    K.col_idx.resize(nnz);
    K.weights.resize(nnz);
    std::uint64_t offset = 0;
    for (std::size_t q = 0; q < nq; ++q) {
        const auto& cols = block_cols[q];
        const auto& ptr = block_ptr[q];
        for (std::size_t k = 0; k < ns; ++k)
            K.row_ptr[q * ns + k + 1] = offset + ptr[k + 1];
        for (std::size_t i = 0; i < cols.size(); ++i) {
            K.col_idx[offset + i] = cols[i].col;
            K.weights[offset + i] = cols[i].w;
        }
        offset += cols.size();
    }
    return K;
}

inline Sinogram apply_forward(const ModelMatrix& K, std::span<const double> x) {
    require(x.size() == K.cols(), "apply_forward: x length must equal K.cols");
    Sinogram y;
    y.num_sensors = K.num_sensors;
    y.num_samples = K.num_samples;
    y.values = K.apply(x);
    return y;
}

inline Sinogram apply_forward(const ModelMatrix& K, const Image& image) {
    return apply_forward(K, std::span<const double>(image.values));
}

inline std::vector<double> apply_adjoint(const ModelMatrix& K, const Sinogram& y) {
    require(y.values.size() == K.rows(), "apply_adjoint: y length must equal K.rows");
    return K.apply_adjoint(y.values);
}

// Adds i.i.d. zero-mean Gaussian noise scaled to the requested SNR in dB.
// An infinite snr_db is the documented "no noise" sentinel.
inline Sinogram add_noise(const Sinogram& y, double snr_db, std::uint64_t seed) {
    if (std::isinf(snr_db) && snr_db > 0.0) return y;
    require(std::isfinite(snr_db), "add_noise: snr_db must be finite or +inf");
    const double norm_y = norm2(y.values);
    require(norm_y > 0.0, "add_noise: signal is identically zero");

    GaussianSampler gauss(seed);
    std::vector<double> w(y.values.size());
    for (double& v : w) v = gauss();
    const double norm_w = norm2(w);
    const double target = norm_y * std::pow(10.0, -snr_db / 20.0);
    Sinogram noisy = y;
    axpy(target / norm_w, w, noisy.values);
    return noisy;
}

}  // namespace parec
