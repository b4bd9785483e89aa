#include "recodmd/model_io.hpp"

#include <fstream>
#include <sstream>

#include "recodmd/error.hpp"

namespace recodmd {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "recodmd-model";
constexpr int kVersion = 1;

json cmatrix_to_json(const CMatrix& m) {
    json re = json::array();
    json im = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index k = 0; k < m.cols(); ++k) {
            re.push_back(m(i, k).real());
            im.push_back(m(i, k).imag());
        }
    }
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"re", re}, {"im", im}};
}

CMatrix cmatrix_from_json(const json& j) {
    const Index rows = j.at("rows").get<Index>();
    const Index cols = j.at("cols").get<Index>();
    const auto& re = j.at("re");
    const auto& im = j.at("im");
    if (re.size() != static_cast<std::size_t>(rows * cols) || im.size() != re.size()) {
        throw Error(ErrorKind::SchemaError, "complex matrix payload does not match its shape");
    }
    CMatrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        for (Index k = 0; k < cols; ++k) {
            const auto idx = static_cast<std::size_t>(i * cols + k);
            m(i, k) = Complex(re[idx].get<double>(), im[idx].get<double>());
        }
    }
    return m;
}

json cvector_to_json(const CVector& v) {
    json re = json::array();
    json im = json::array();
    for (Index i = 0; i < v.size(); ++i) {
        re.push_back(v(i).real());
        im.push_back(v(i).imag());
    }
    return {{"re", re}, {"im", im}};
}

CVector cvector_from_json(const json& j) {
    const auto& re = j.at("re");
    const auto& im = j.at("im");
    if (re.size() != im.size()) throw Error(ErrorKind::SchemaError, "complex vector parts differ in length");
    CVector v(static_cast<Index>(re.size()));
    for (std::size_t i = 0; i < re.size(); ++i) {
        v(static_cast<Index>(i)) = Complex(re[i].get<double>(), im[i].get<double>());
    }
    return v;
}

json vector_to_json(const Vector& v) {
    return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Vector vector_from_json(const json& j) {
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}

}  // namespace

json matrix_to_json(const Matrix& m) {
    json data = json::array();
    for (Index i = 0; i < m.rows(); ++i)
        for (Index k = 0; k < m.cols(); ++k) data.push_back(m(i, k));
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Matrix matrix_from_json(const json& j) {
    const Index rows = j.at("rows").get<Index>();
    const Index cols = j.at("cols").get<Index>();
    const auto& data = j.at("data");
    if (rows < 0 || cols < 0 || data.size() != static_cast<std::size_t>(rows * cols)) {
        throw Error(ErrorKind::SchemaError, "matrix payload does not match its " + std::to_string(rows) +
                                                "x" + std::to_string(cols) + " shape");
    }
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index k = 0; k < cols; ++k) m(i, k) = data[static_cast<std::size_t>(i * cols + k)].get<double>();
    return m;
}

json to_json(const DmdModel& m) {
    return {
        {"state_dim", m.state_dim},
        {"rank_used", m.rank_used},
        {"a_operator", matrix_to_json(m.a_operator)},
        {"a_tilde", matrix_to_json(m.a_tilde)},
        {"basis", matrix_to_json(m.basis)},
        {"eigenvalues", cvector_to_json(m.eigenvalues)},
        {"modes", cmatrix_to_json(m.modes)},
        {"amplitudes", cvector_to_json(m.amplitudes)},
        {"initial_state", vector_to_json(m.initial_state)},
        {"amplitude_residual", m.amplitude_residual},
    };
}

DmdModel dmd_from_json(const json& j) {
    DmdModel m;
    m.state_dim = j.at("state_dim").get<Index>();
    m.rank_used = j.at("rank_used").get<Index>();
    m.a_operator = matrix_from_json(j.at("a_operator"));
    m.a_tilde = matrix_from_json(j.at("a_tilde"));
    m.basis = matrix_from_json(j.at("basis"));
    m.eigenvalues = cvector_from_json(j.at("eigenvalues"));
    m.modes = cmatrix_from_json(j.at("modes"));
    m.amplitudes = cvector_from_json(j.at("amplitudes"));
    m.initial_state = vector_from_json(j.at("initial_state"));
    m.amplitude_residual = j.at("amplitude_residual").get<double>();
    if (m.modes.cols() != m.rank_used || m.eigenvalues.size() != m.rank_used || m.modes.rows() != m.state_dim) {
        throw Error(ErrorKind::SchemaError, "DMD model fields disagree on rank or state dimension");
    }
    return m;
}

json to_json(const DmdcModel& m) {
    return {
        {"state_dim", m.state_dim},
        {"control_dim", m.control_dim},
        {"p_rank", m.p_rank},
        {"r_rank", m.r_rank},
        {"a_tilde", matrix_to_json(m.a_tilde)},
        {"b_tilde", matrix_to_json(m.b_tilde)},
        {"basis_u_hat", matrix_to_json(m.basis_u_hat)},
        {"eigenvalues", cvector_to_json(m.eigenvalues)},
        {"modes_phi", cmatrix_to_json(m.modes_phi)},
    };
}

DmdcModel dmdc_from_json(const json& j) {
    DmdcModel m;
    m.state_dim = j.at("state_dim").get<Index>();
    m.control_dim = j.at("control_dim").get<Index>();
    m.p_rank = j.at("p_rank").get<Index>();
    m.r_rank = j.at("r_rank").get<Index>();
    m.a_tilde = matrix_from_json(j.at("a_tilde"));
    m.b_tilde = matrix_from_json(j.at("b_tilde"));
    m.basis_u_hat = matrix_from_json(j.at("basis_u_hat"));
    m.eigenvalues = cvector_from_json(j.at("eigenvalues"));
    m.modes_phi = cmatrix_from_json(j.at("modes_phi"));
    const bool ok = m.a_tilde.rows() == m.r_rank && m.a_tilde.cols() == m.r_rank &&
                    m.b_tilde.rows() == m.r_rank && m.b_tilde.cols() == m.control_dim &&
                    m.basis_u_hat.rows() == m.state_dim && m.basis_u_hat.cols() == m.r_rank;
    if (!ok) throw Error(ErrorKind::SchemaError, "DMDc model operator shapes are inconsistent");
    return m;
}

json to_json(const TrainedModel& m) {
    json params = json::array();
    for (const auto& p : m.normalization_params) {
        params.push_back({{"driver", p.driver}, {"min", p.min}, {"max", p.max}});
    }
    json states = json::array();
    for (const auto& s : m.recent_states) states.push_back(vector_to_json(s));
    json controls = json::array();
    for (const auto& c : m.recent_controls) controls.push_back(vector_to_json(c));

    json j = {
        {"format", kFormat},
        {"version", kVersion},
        {"method", to_string(m.method)},
        {"drivers", m.drivers},
        {"embed_dim", m.embed_dim},
        {"night_length", m.night_length},
        {"control_alignment", to_string(m.alignment)},
        {"normalization", to_string(m.normalization)},
        {"normalization_params", params},
        {"last_training_date", format_date(m.last_training_date)},
        {"recent_states", states},
        {"recent_controls", controls},
    };
    if (m.dmd) j["dmd"] = to_json(*m.dmd);
    if (m.dmdc) j["dmdc"] = to_json(*m.dmdc);
    return j;
}

TrainedModel trained_model_from_json(const json& j) {
    try {
        if (j.at("format").get<std::string>() != kFormat || j.at("version").get<int>() != kVersion) {
            throw Error(ErrorKind::SchemaError, "not a recodmd-model v1 document");
        }
        TrainedModel m;
        m.method = parse_method(j.at("method").get<std::string>());
        m.drivers = j.at("drivers").get<std::vector<std::string>>();
        m.embed_dim = j.at("embed_dim").get<Index>();
        m.night_length = j.at("night_length").get<std::size_t>();
        m.alignment = parse_alignment(j.at("control_alignment").get<std::string>());
        m.normalization = parse_normalization(j.at("normalization").get<std::string>());
        for (const auto& p : j.at("normalization_params")) {
            m.normalization_params.push_back(
                {p.at("driver").get<std::string>(), p.at("min").get<double>(), p.at("max").get<double>()});
        }
        const auto date = parse_date(j.at("last_training_date").get<std::string>());
        if (!date) throw Error(ErrorKind::SchemaError, "bad last_training_date");
        m.last_training_date = *date;
        for (const auto& s : j.at("recent_states")) m.recent_states.push_back(vector_from_json(s));
        for (const auto& c : j.at("recent_controls")) m.recent_controls.push_back(vector_from_json(c));
        if (j.contains("dmd")) m.dmd = dmd_from_json(j.at("dmd"));
        if (j.contains("dmdc")) m.dmdc = dmdc_from_json(j.at("dmdc"));
        if ((m.method == Method::Dmd && !m.dmd) || (m.method == Method::Dmdc && !m.dmdc)) {
            throw Error(ErrorKind::SchemaError, "model operators missing for method " + to_string(m.method));
        }
        return m;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::SchemaError, std::string("malformed model file: ") + e.what());
    }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::InvalidInput, "cannot write " + tmp.string());
        out << contents;
        if (!out.flush()) throw Error(ErrorKind::InvalidInput, "write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
    write_file_atomic(path, to_json(model).dump(1) + "\n");
}

TrainedModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::InvalidInput, "cannot open model file " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::SchemaError, "model file is not valid JSON: " + std::string(e.what()));
    }
    return trained_model_from_json(j);
}

}  // namespace recodmd
