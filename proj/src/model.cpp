#include "fincast/model.hpp"

#include "fincast/util.hpp"
#include "json.hpp"

namespace fincast {

Arch parse_arch(const std::string& name) {
    if (name == "dense") return Arch::dense;
    if (name == "recurrent") return Arch::recurrent;
    throw InputError("unknown architecture '" + name + "' (have: dense, recurrent)");
}

std::string arch_name(Arch a) { return a == Arch::dense ? "dense" : "recurrent"; }

int SurrogateModel::input_dim() const {
    return arch == Arch::dense ? dense.cfg.input_dim : lstm.cfg.input_dim;
}

std::vector<double> SurrogateModel::predict_normalized(const std::vector<std::vector<double>>& records) const {
    std::vector<std::vector<double>> normed;
    normed.reserve(records.size());
    for (const auto& r : records) normed.push_back(stats.apply(r));
    if (arch == Arch::dense) return dense.predict_batch(normed);
    return lstm.predict(normed);
}

namespace {

nlohmann::json mat_to_json(const Eigen::MatrixXd& m) {
    auto rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        auto row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd mat_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.empty()) throw SchemaError("model checkpoint: bad matrix");
    Eigen::Index rows = j.size(), cols = j[0].size();
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (static_cast<Eigen::Index>(j[i].size()) != cols)
            throw SchemaError("model checkpoint: ragged matrix");
        for (Eigen::Index jj = 0; jj < cols; ++jj) m(i, jj) = j[i][jj].get<double>();
    }
    return m;
}

nlohmann::json vec_to_json(const Eigen::VectorXd& v) {
    auto arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

Eigen::VectorXd vec_from_json(const nlohmann::json& j) {
    Eigen::VectorXd v(j.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j[i].get<double>();
    return v;
}

}  // namespace

void SurrogateModel::save(const std::string& path) const {
    nlohmann::json j;
    j["version"] = version;
    j["architecture"] = arch_name(arch);
    j["variant"] = variant_name(variant);
    if (arch == Arch::dense) {
        j["config"] = {{"input_dim", dense.cfg.input_dim},
                       {"layers", dense.cfg.layers},
                       {"nodes_per_layer", dense.cfg.nodes_per_layer},
                       {"dropout_fraction", dense.cfg.dropout_fraction},
                       {"learning_rate", dense.cfg.learning_rate},
                       {"batch_size", dense.cfg.batch_size},
                       {"epochs", dense.cfg.epochs},
                       {"seed", dense.cfg.seed}};
        auto ws = nlohmann::json::array();
        auto bs = nlohmann::json::array();
        for (const auto& w : dense.weights) ws.push_back(mat_to_json(w));
        for (const auto& b : dense.biases) bs.push_back(vec_to_json(b));
        j["weights"] = {{"w", std::move(ws)}, {"b", std::move(bs)}};
    } else {
        j["config"] = {{"input_dim", lstm.cfg.input_dim},
                       {"hidden_units", lstm.cfg.hidden_units},
                       {"dropout_fraction", lstm.cfg.dropout_fraction},
                       {"learning_rate", lstm.cfg.learning_rate},
                       {"batch_size", lstm.cfg.batch_size},
                       {"epochs", lstm.cfg.epochs},
                       {"seed", lstm.cfg.seed}};
        j["weights"] = {{"w_gates", mat_to_json(lstm.w_gates)},
                        {"b_gates", vec_to_json(lstm.b_gates)},
                        {"w_head", vec_to_json(lstm.w_head.transpose())},
                        {"b_head", lstm.b_head}};
    }
    j["norm_stats"] = nlohmann::json::parse(stats.to_json());
    if (reducer) j["pca"] = nlohmann::json::parse(reducer->to_json());
    j["history"] = {{"train_mse", history.train_mse}, {"val_mse", history.val_mse}};
    write_text_file(path, j.dump(2) + "\n");
}

SurrogateModel SurrogateModel::load(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw InputError("model checkpoint '" + path + "': bad JSON: " + e.what());
    }
    try {
        for (const char* key : {"version", "architecture", "variant", "config", "weights", "norm_stats", "history"})
            if (!j.contains(key))
                throw SchemaError("model checkpoint '" + path + "': missing field '" + std::string(key) + "'");
        SurrogateModel m;
        m.version = j["version"].get<int>();
        if (m.version != 1)
            throw SchemaError("model checkpoint '" + path + "': unsupported version " + std::to_string(m.version));
        m.arch = parse_arch(j["architecture"].get<std::string>());
        m.variant = parse_variant(j["variant"].get<std::string>());
        const auto& jc = j["config"];
        const auto& jw = j["weights"];
        if (m.arch == Arch::dense) {
            DenseConfig c;
            c.input_dim = jc["input_dim"].get<int>();
            c.layers = jc["layers"].get<int>();
            c.nodes_per_layer = jc["nodes_per_layer"].get<int>();
            c.dropout_fraction = jc["dropout_fraction"].get<double>();
            c.learning_rate = jc["learning_rate"].get<double>();
            c.batch_size = jc["batch_size"].get<int>();
            c.epochs = jc["epochs"].get<int>();
            c.seed = jc["seed"].get<std::uint64_t>();
            m.dense.cfg = c;
            for (const auto& w : jw["w"]) m.dense.weights.push_back(mat_from_json(w));
            for (const auto& b : jw["b"]) m.dense.biases.push_back(vec_from_json(b));
            if (m.dense.weights.size() != m.dense.biases.size() || m.dense.weights.empty())
                throw SchemaError("model checkpoint '" + path + "': inconsistent dense weights");
            if (m.dense.weights[0].cols() != c.input_dim)
                throw SchemaError("model checkpoint '" + path + "': input schema does not match first layer");
        } else {
            LstmConfig c;
            c.input_dim = jc["input_dim"].get<int>();
            c.hidden_units = jc["hidden_units"].get<int>();
            c.dropout_fraction = jc["dropout_fraction"].get<double>();
            c.learning_rate = jc["learning_rate"].get<double>();
            c.batch_size = jc["batch_size"].get<int>();
            c.epochs = jc["epochs"].get<int>();
            c.seed = jc["seed"].get<std::uint64_t>();
            m.lstm.cfg = c;
            m.lstm.w_gates = mat_from_json(jw["w_gates"]);
            m.lstm.b_gates = vec_from_json(jw["b_gates"]);
            m.lstm.w_head = vec_from_json(jw["w_head"]).transpose();
            m.lstm.b_head = jw["b_head"].get<double>();
            if (m.lstm.w_gates.rows() != 4 * c.hidden_units ||
                m.lstm.w_gates.cols() != c.input_dim + c.hidden_units)
                throw SchemaError("model checkpoint '" + path + "': lstm weight shape mismatch");
        }
        m.stats = NormStats::from_json(j["norm_stats"].dump());
        if (j.contains("pca")) m.reducer = PcaReducer::from_json(j["pca"].dump());
        m.history.train_mse = j["history"]["train_mse"].get<std::vector<double>>();
        m.history.val_mse = j["history"]["val_mse"].get<std::vector<double>>();
        if (static_cast<int>(m.stats.mean.size()) != m.input_dim())
            throw SchemaError("model checkpoint '" + path + "': norm stats do not match input schema");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("model checkpoint '" + path + "': " + e.what());
    }
}

}  // namespace fincast
