#pragma once

#include <string>
#include <vector>

#include "fincast/geom.hpp"
#include "fincast/kinematics.hpp"

namespace fincast {

inline constexpr double kRhoDefault = 1000.0;  // kg/m^3, water

// T / (0.5 rho v^2 A); throws ValidationError on a non-positive denominator input
double thrust_coefficient(double thrust_n, double rho, double v_ref, double area_m2);

// Mean fin-tip speed over one cycle in m/s: the registered tip vertex is
// rotated through the sampled cycle and the speed is the mean magnitude of
// cyclic central differences. Sampled at a fixed quadrature resolution
// independent of the dataset's per-cycle step count.
double reference_tip_speed(const FinShape& shape, const AxisFrame& frame, const KinematicSetting& setting,
                           double pitch_phase_deg = 90.0, int quadrature_steps = 512);

// Per-feature z-score stats plus the thrust scale divisor. Population stds;
// constant features are flagged and stored with std 1 so apply() is total.
struct NormStats {
    std::vector<double> mean;
    std::vector<double> stddev;
    std::vector<int> constant_features;  // indices flagged during fit
    double thrust_scale = 1.0;

    std::vector<double> apply(const std::vector<double>& record) const;
    std::vector<double> invert(const std::vector<double>& record) const;
    double apply_thrust(double coeff) const { return coeff / thrust_scale; }
    double invert_thrust(double normalized) const { return normalized * thrust_scale; }

    std::string to_json() const;
    static NormStats from_json(const std::string& text);
};

// Fit means/stds over training records and set thrust_scale so the normalized
// thrust-coefficient std is 1. Throws ValidationError on an empty dataset or
// constant thrust column.
NormStats fit_norm_stats(const std::vector<std::vector<double>>& records, const std::vector<double>& thrust_coeffs);

// one observation for the noise metric
struct DevSample {
    double stroke_deg = 0;
    int stroke_state = 1;
    double value = 0;  // normalized thrust coefficient
};

// Noise metric over >= 2 cycles of one kinematic-shape setting: the common
// stroke range is divided into n_bins equal bins crossed with {upstroke,
// downstroke}; the result is the mean over all 2*n_bins cells of the per-cell
// population std (cells with < 2 samples contribute 0).
double thrust_deviation(const std::vector<std::vector<DevSample>>& cycles, int n_bins = 100);

}  // namespace fincast
