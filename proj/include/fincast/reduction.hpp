#pragma once

#include <string>
#include <vector>

namespace fincast {

enum class PcaMode { unweighted, weighted };

PcaMode parse_pca_mode(const std::string& name);  // "unweighted" | "weighted"
std::string pca_mode_name(PcaMode mode);

// PCA over skeleton vectors. Each dimension is mean-centered then rescaled so
// its std becomes 1 (unweighted) or |pearson r vs normalized thrust|
// (weighted); zero-variance or undefined-correlation dimensions get scale 0
// and vanish from the analysis. Axes are the top-k eigenvectors of the scaled
// covariance, component stds non-increasing, each axis oriented so its
// largest-|loading| entry is positive.
struct PcaReducer {
    PcaMode mode = PcaMode::unweighted;
    int k = 0;
    std::vector<double> means;                // dim d
    std::vector<double> scales;               // dim d
    std::vector<std::vector<double>> axes;    // k axes, each of length d, orthonormal
    std::vector<double> component_stds;       // k, non-increasing

    int dim() const { return static_cast<int>(means.size()); }

    // ((skeleton - means) * scales) projected onto the axes -> k values
    std::vector<double> project(const std::vector<double>& skeleton) const;
    // right inverse of project on the retained subspace (exact when k = dim
    // and no dimension was dropped); scale-0 dimensions map back to the mean
    std::vector<double> inverse_project(const std::vector<double>& reduced) const;

    std::string to_json() const;
    static PcaReducer from_json(const std::string& text);
};

// thrusts: normalized thrust per sample, required in weighted mode (pass
// nullptr otherwise). Needs at least k+1 samples and k <= dimension.
PcaReducer fit_pca(const std::vector<std::vector<double>>& skeletons, const std::vector<double>* thrusts,
                   PcaMode mode, int k);

}  // namespace fincast
