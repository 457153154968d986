#include "fincast/reduction.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "fincast/util.hpp"
#include "json.hpp"

namespace fincast {

PcaMode parse_pca_mode(const std::string& name) {
    if (name == "unweighted") return PcaMode::unweighted;
    if (name == "weighted") return PcaMode::weighted;
    throw InputError("unknown pca mode '" + name + "' (have: unweighted, weighted)");
}

std::string pca_mode_name(PcaMode mode) {
    return mode == PcaMode::weighted ? "weighted" : "unweighted";
}

PcaReducer fit_pca(const std::vector<std::vector<double>>& skeletons, const std::vector<double>* thrusts,
                   PcaMode mode, int k) {
    size_t n = skeletons.size();
    if (n == 0) throw ValidationError("fit_pca: empty sample set");
    size_t d = skeletons[0].size();
    for (const auto& s : skeletons)
        if (s.size() != d) throw ValidationError("fit_pca: inconsistent skeleton lengths");
    if (k < 1) throw ValidationError("fit_pca: k must be >= 1");
    if (static_cast<size_t>(k) > d)
        throw ValidationError("fit_pca: k = " + std::to_string(k) + " exceeds dimension " + std::to_string(d));
    if (n < static_cast<size_t>(k) + 1)
        throw ValidationError("fit_pca: need at least k+1 = " + std::to_string(k + 1) + " samples, got " +
                              std::to_string(n));
    if (mode == PcaMode::weighted) {
        if (!thrusts) throw ValidationError("fit_pca: weighted mode requires thrust values");
        if (thrusts->size() != n) throw ValidationError("fit_pca: thrust/sample count mismatch");
    }

    PcaReducer r;
    r.mode = mode;
    r.k = k;
    r.means.assign(d, 0.0);
    r.scales.assign(d, 0.0);

    Eigen::MatrixXd x(n, d);
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < d; ++j) x(i, j) = skeletons[i][j];
    Eigen::VectorXd mean = x.colwise().mean();
    Eigen::MatrixXd centered = x.rowwise() - mean.transpose();
    Eigen::VectorXd var = centered.array().square().colwise().mean();  // population

    double t_mean = 0, t_std = 0;
    if (mode == PcaMode::weighted) {
        for (double t : *thrusts) t_mean += t;
        t_mean /= n;
        for (double t : *thrusts) t_std += (t - t_mean) * (t - t_mean);
        t_std = std::sqrt(t_std / n);
    }

    for (size_t j = 0; j < d; ++j) {
        r.means[j] = mean(j);
        double sd = std::sqrt(var(j));
        if (sd <= 0) continue;  // constant dimension drops out
        if (mode == PcaMode::unweighted) {
            r.scales[j] = 1.0 / sd;
        } else {
            if (t_std <= 0) continue;  // correlation undefined
            double cov = 0;
            for (size_t i = 0; i < n; ++i) cov += centered(i, j) * ((*thrusts)[i] - t_mean);
            cov /= n;
            r.scales[j] = std::abs(cov / (sd * t_std)) / sd;  // |pearson r| / sd
        }
    }

    Eigen::MatrixXd scaled = centered;
    for (size_t j = 0; j < d; ++j) scaled.col(j) *= r.scales[j];
    Eigen::MatrixXd cov = scaled.transpose() * scaled / static_cast<double>(n);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    if (es.info() != Eigen::Success) throw ValidationError("fit_pca: eigendecomposition failed");
    // eigenvalues come out ascending; keep the top k, largest first
    r.axes.assign(k, std::vector<double>(d, 0.0));
    r.component_stds.assign(k, 0.0);
    for (int c = 0; c < k; ++c) {
        int src = static_cast<int>(d) - 1 - c;
        Eigen::VectorXd axis = es.eigenvectors().col(src);
        int imax = 0;
        for (size_t j = 1; j < d; ++j)
            if (std::abs(axis(j)) > std::abs(axis(imax))) imax = static_cast<int>(j);
        if (axis(imax) < 0) axis = -axis;
        for (size_t j = 0; j < d; ++j) r.axes[c][j] = axis(j);
        r.component_stds[c] = std::sqrt(std::max(0.0, es.eigenvalues()(src)));
    }
    return r;
}

std::vector<double> PcaReducer::project(const std::vector<double>& skeleton) const {
    if (skeleton.size() != means.size())
        throw ValidationError("pca project: input length " + std::to_string(skeleton.size()) + " != " +
                              std::to_string(means.size()));
    std::vector<double> out(k, 0.0);
    for (int c = 0; c < k; ++c) {
        double acc = 0;
        for (size_t j = 0; j < means.size(); ++j) acc += (skeleton[j] - means[j]) * scales[j] * axes[c][j];
        out[c] = acc;
    }
    return out;
}

std::vector<double> PcaReducer::inverse_project(const std::vector<double>& reduced) const {
    if (reduced.size() != static_cast<size_t>(k))
        throw ValidationError("pca inverse_project: input length " + std::to_string(reduced.size()) + " != " +
                              std::to_string(k));
    std::vector<double> out(means.size());
    for (size_t j = 0; j < means.size(); ++j) {
        double acc = 0;
        for (int c = 0; c < k; ++c) acc += axes[c][j] * reduced[c];
        out[j] = scales[j] > 0 ? means[j] + acc / scales[j] : means[j];
    }
    return out;
}

std::string PcaReducer::to_json() const {
    nlohmann::json j;
    j["mode"] = pca_mode_name(mode);
    j["k"] = k;
    j["means"] = means;
    j["scales"] = scales;
    j["axes"] = axes;
    j["component_stds"] = component_stds;
    return j.dump(2);
}

PcaReducer PcaReducer::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("pca reducer: bad JSON: ") + e.what());
    }
    for (const char* key : {"mode", "k", "means", "scales", "axes", "component_stds"})
        if (!j.contains(key)) throw SchemaError(std::string("pca reducer: missing field '") + key + "'");
    PcaReducer r;
    r.mode = parse_pca_mode(j["mode"].get<std::string>());
    r.k = j["k"].get<int>();
    r.means = j["means"].get<std::vector<double>>();
    r.scales = j["scales"].get<std::vector<double>>();
    r.axes = j["axes"].get<std::vector<std::vector<double>>>();
    r.component_stds = j["component_stds"].get<std::vector<double>>();
    if (r.k < 1 || r.axes.size() != static_cast<size_t>(r.k) ||
        r.component_stds.size() != static_cast<size_t>(r.k) || r.means.size() != r.scales.size())
        throw SchemaError("pca reducer: inconsistent field sizes");
    for (const auto& a : r.axes)
        if (a.size() != r.means.size()) throw SchemaError("pca reducer: axis length mismatch");
    return r;
}

}  // namespace fincast
