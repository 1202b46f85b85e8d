#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "parec/forward_model.hpp"
#include "parec/grid.hpp"
#include "parec/io.hpp"
#include "parec/rng.hpp"
#include "parec/sensors.hpp"

using namespace parec;

namespace {

std::filesystem::path temp_dir() {
    const auto dir = std::filesystem::temp_directory_path() / "parec_io_test";
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("pgm16 round trip preserves values to quantization accuracy") {
    const ImagingGrid g = make_grid(9, 7, 2.5e-4);
    Image img = make_image(g, 0.0);
    GaussianSampler gauss(8);
    for (double& v : img.values) v = 3.0 * gauss() - 0.5;

    const auto path = (temp_dir() / "img.pgm").string();
    io::write_image_pgm16(path, img);
    const Image back = io::read_image_pgm16(path);

    REQUIRE(back.grid == g);
    const auto [mn, mx] = std::minmax_element(img.values.begin(), img.values.end());
    const double quantum = (*mx - *mn) / 65535.0;
    for (std::size_t i = 0; i < img.values.size(); ++i)
        REQUIRE(std::abs(back.values[i] - img.values[i]) <= 0.5 * quantum + 1e-12);
}

TEST_CASE("pgm16 writes big-endian sample words") {
    const ImagingGrid g = make_grid(2, 1, 1.0);
    Image img = make_image(g, 0.0);
    img.values = {0.0, 1.0};  // scales to 0 and 65535
    const auto path = (temp_dir() / "be.pgm").string();
    io::write_image_pgm16(path, img);

    std::ifstream in(path, std::ios::binary);
    std::string header;
    std::getline(in, header);
    REQUIRE(header == "P5");
    std::getline(in, header);  // dimensions
    std::getline(in, header);  // maxval
    unsigned char bytes[4];
    in.read(reinterpret_cast<char*>(bytes), 4);
    CHECK(bytes[0] == 0x00);
    CHECK(bytes[1] == 0x00);
    CHECK(bytes[2] == 0xff);
    CHECK(bytes[3] == 0xff);
}

TEST_CASE("sinogram csv layout is one sensor per row") {
    Sinogram y;
    y.num_sensors = 2;
    y.num_samples = 3;
    y.values = {1, 2, 3, 4, 5, 6};
    const auto path = (temp_dir() / "sino.csv").string();
    io::write_sinogram_csv(path, y);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "1,2,3");
    std::getline(in, line);
    CHECK(line == "4,5,6");
}

TEST_CASE("raw sinogram round trips exactly") {
    Sinogram y;
    y.num_sensors = 3;
    y.num_samples = 5;
    GaussianSampler gauss(21);
    y.values.resize(15);
    for (double& v : y.values) v = gauss() * 1e-3;
    const auto path = (temp_dir() / "sino.bin").string();
    io::write_sinogram_raw(path, y);
    const Sinogram back = io::read_sinogram_raw(path);
    CHECK(back.num_sensors == y.num_sensors);
    CHECK(back.num_samples == y.num_samples);
    CHECK(back.values == y.values);
}

TEST_CASE("model matrix cache round trips bitwise and verifies provenance") {
    const ImagingGrid g = make_grid(12, 12, 1e-4);
    const SensorArray sensors = make_sensor_array(1.2e-3, 3, 0.0);
    AcquisitionConfig acq;
    acq.num_samples = 48;
    const ModelMatrix K = build_model_matrix(g, sensors, acq);

    const auto path = (temp_dir() / "model.kmat").string();
    io::save_model_matrix(path, K);
    const ModelMatrix back = io::load_model_matrix(path, K.fingerprint);
    CHECK(back.rows() == K.rows());
    CHECK(back.cols() == K.cols());
    CHECK(back.row_ptr == K.row_ptr);
    CHECK(back.col_idx == K.col_idx);
    CHECK(back.weights == K.weights);
    CHECK(back.grid == K.grid);
    CHECK(back.time_window_truncated == K.time_window_truncated);

    // A provenance mismatch must refuse to load.
    CHECK_THROWS_AS(io::load_model_matrix(path, K.fingerprint + 1), std::runtime_error);
}

TEST_CASE("fingerprint is sensitive to every acquisition parameter") {
    const ImagingGrid g = make_grid(12, 12, 1e-4);
    const SensorArray sensors = make_sensor_array(1.2e-3, 3, 0.0);
    AcquisitionConfig acq;
    acq.num_samples = 48;
    const std::uint64_t base = model_fingerprint(g, sensors, acq);

    AcquisitionConfig acq2 = acq;
    acq2.sampling_freq *= 1.0000001;
    CHECK(model_fingerprint(g, sensors, acq2) != base);

    const SensorArray moved = make_sensor_array(1.2e-3, 3, 0.001);
    CHECK(model_fingerprint(g, moved, acq) != base);

    const ImagingGrid g2 = make_grid(12, 13, 1e-4);
    CHECK(model_fingerprint(g2, sensors, acq) != base);
}

TEST_CASE("coefficient export records the basis in the sidecar") {
    const WaveletBasis basis{WaveletFamily::haar, 2, 8, 8};
    std::vector<double> theta(64, 0.0);
    theta[0] = 1.5;
    const auto path = (temp_dir() / "coef.bin").string();
    io::write_coefficients_raw(path, theta, basis);

    const nlohmann::json side = nlohmann::json::parse(std::ifstream(path + ".json"));
    CHECK(side.at("family") == "haar");
    CHECK(side.at("levels") == 2);
    CHECK(side.at("nx") == 8);
    CHECK(side.at("count") == 64);
    CHECK(io::read_raw_f64(path) == theta);
}

TEST_CASE("psnr json serializes the infinity sentinel as a string") {
    PsnrReport exact;
    exact.psnr_db = std::numeric_limits<double>::infinity();
    exact.mse = 0.0;
    exact.reference_peak = 1.0;
    CHECK(io::psnr_to_json(exact).at("psnr_db") == "inf");

    PsnrReport finite;
    finite.psnr_db = 33.25;
    finite.mse = 4.7e-4;
    finite.reference_peak = 1.0;
    CHECK(io::psnr_to_json(finite).at("psnr_db").get<double>() == 33.25);
}
