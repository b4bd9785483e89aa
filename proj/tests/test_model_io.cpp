#include <gtest/gtest.h>

#include <filesystem>
#include <cstring>
#include <fstream>

#include <unistd.h>

#include "recodmd/error.hpp"
#include "recodmd/model_io.hpp"
#include "recodmd/synthetic.hpp"

using namespace recodmd;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) {
    return fs::temp_directory_path() / ("recodmd_test_" + std::to_string(::getpid()) + "_" + name);
}

TrainedModel trained(Method method, Index embed_dim) {
    ExperimentConfig c = preset_table1();
    c.method = method;
    c.embed_dim = embed_dim;
    c.train_nights = 8;
    if (method == Method::Dmd) c.control_drivers.clear();
    const PreparedNights p = prepare_nights(c, generate_synthetic_site(SyntheticSiteSpec{}, 6));
    return fit_window(c, std::span(p.nights).subspan(30, 8), p.mode_count);
}

}  // namespace

TEST(ModelIo, MatrixRoundTripIsBitExact) {
    Matrix m(2, 3);
    m << 0.1, 1.0 / 3.0, -2.5e-300,
         1e300, -0.0, 4.0;
    const Matrix back = matrix_from_json(matrix_to_json(m));
    ASSERT_EQ(back.rows(), 2);
    for (Index i = 0; i < m.size(); ++i) {
        EXPECT_EQ(std::memcmp(&back.data()[i], &m.data()[i], sizeof(double)), 0);
    }
}

TEST(ModelIo, SaveLoadForecastIsBitExact) {
    for (auto [method, n] : {std::pair{Method::Dmdc, Index{1}}, {Method::Dmdc, Index{3}}, {Method::Dmd, Index{2}}}) {
        const TrainedModel m = trained(method, n);
        const fs::path path = temp_path("model.json");
        save_model(m, path);
        const TrainedModel back = load_model(path);
        fs::remove(path);

        const PreparedNights p = prepare_nights(preset_table1(), generate_synthetic_site(SyntheticSiteSpec{}, 6));
        const auto future = std::span(p.nights).subspan(38, 3);
        const Matrix a = forecast_window(m, future, 3);
        const Matrix b = forecast_window(back, future, 3);
        EXPECT_EQ(a, b);
        EXPECT_EQ(back.last_training_date, m.last_training_date);
        EXPECT_EQ(back.drivers, m.drivers);
    }
}

TEST(ModelIo, RejectsForeignDocuments) {
    EXPECT_THROW(trained_model_from_json(nlohmann::json{{"format", "other"}, {"version", 1}}), Error);
    nlohmann::json j = to_json(trained(Method::Dmdc, 1));
    j["dmdc"]["a_tilde"]["rows"] = 99;
    try {
        trained_model_from_json(j);
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::SchemaError);
    }
    j = to_json(trained(Method::Dmdc, 1));
    j.erase("recent_states");
    EXPECT_THROW(trained_model_from_json(j), Error);
}

TEST(ModelIo, AtomicWriteLeavesNoTemporary) {
    const fs::path path = temp_path("atomic.txt");
    write_file_atomic(path, "hello\n");
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "hello");
    EXPECT_FALSE(fs::exists(fs::path(path.string() + ".tmp")));
    fs::remove(path);
}
