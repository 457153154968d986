#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "fincast/geom.hpp"
#include "fincast/kinematics.hpp"
#include "fincast/preprocess.hpp"

namespace fincast {

// quasi-steady oracle constants; the oracle is a stand-in signal generator,
// not a physics claim — see README
inline constexpr double kOracleCt = 2.0;  // thrust-coefficient amplitude in C_T(alpha) = c_T sin(2 alpha)

// default noise-injection targets on the normalized-thrust scale, scaled by
// the caller's noise_std multiplier: across-run deviation 0.2588 and
// within-run deviation 0.103
inline constexpr double kNoiseAcrossTarget = 0.2588;
inline constexpr double kNoiseWithinTarget = 0.103;

// One recorded flapping cycle of one run at one kinematic-shape setting.
struct StrokeCycle {
    std::string shape;
    KinematicSetting setting;
    int run = 0;
    int cycle = 0;
    std::vector<KinematicState> states;
    std::vector<double> thrust_n;  // same length as states
};

// identity of a kinematic-shape setting (what generalizability tests exclude)
struct SettingKey {
    std::string shape;
    double freq_hz = 0;
    double stroke_amp_deg = 0;
    double pitch_amp_deg = 0;

    bool operator==(const SettingKey&) const = default;
    bool operator<(const SettingKey& o) const;
    std::string label() const;  // e.g. "rect 1Hz s60 p55"
};

SettingKey cycle_key(const StrokeCycle& c);

struct Dataset {
    std::vector<StrokeCycle> cycles;
};

// unique setting keys in first-encounter order
std::vector<SettingKey> dataset_settings(const Dataset& ds);

// grid exclusion; quiet-NaN fields act as wildcards
struct Exclusion {
    std::string shape;  // empty = any shape
    double freq_hz;
    double pitch_amp_deg;

    Exclusion(std::string shape_ = "", double freq = std::numeric_limits<double>::quiet_NaN(),
              double pitch = std::numeric_limits<double>::quiet_NaN());
    bool matches(const std::string& shape_name, double freq, double pitch) const;
};

struct DatasetGrid {
    std::vector<double> frequencies{1.0, 2.0};
    std::vector<double> pitch_amplitudes{0.0, 15.0, 25.0, 40.0, 55.0};
    // frequency -> stroke amplitude
    std::vector<std::pair<double, double>> stroke_rule{{1.0, 60.0}, {2.0, 25.0}};
    std::vector<std::string> shapes{"rect", "bio", "pt4"};
    int runs_per_setting = 16;
    int cycles_per_run = 5;
    int n_steps_per_cycle = 64;
    double pitch_phase_deg = 90.0;
    std::vector<Exclusion> exclusions;

    static DatasetGrid default_grid();  // adds the default exclusions
    void validate() const;
    double stroke_amplitude_for(double freq) const;
    bool excluded(const std::string& shape_name, double freq, double pitch) const;
    // non-excluded (shape, setting) pairs, deterministic order
    std::vector<SettingKey> enumerate() const;

    std::string to_json() const;
    static DatasetGrid from_json(const std::string& text);
};

// Deterministic blade-element stand-in: per strip i with area A_i and COM at
// instantaneous distance r_i from the stroke axis, v_i = |d theta_stroke/dt|
// * r_i (cyclic central differences) and thrust_i = 1/2 rho A_i v_i^2 c_T
// sin(2 alpha) with alpha = 90 deg - s_dir * pitch; s_dir is the sign of the
// stroke-angle derivative (ties count as upstroke). frames must be the
// setting's uniform endpoint-exclusive cycle sampling.
std::vector<double> oracle_thrust(const std::vector<SkeletonFrame>& frames, const FlatSkeleton& flat,
                                  const KinematicSetting& setting, double rho = kRhoDefault);

// Generate the full grid: per setting, runs_per_setting runs x cycles_per_run
// cycles of the clean oracle signal plus a per-run bias and per-sample white
// noise injected on the normalized-thrust scale (see README for the model).
// Deterministic given seed; each setting owns an independent substream.
// Verifies at generation time that shape cycle-mean thrusts stay separated by
// more than 5x the default noise floor of a setting mean.
Dataset generate_dataset(const DatasetGrid& grid, double noise_std, std::uint64_t seed);

// CSV round trip. Header:
// shape,freq_hz,stroke_amp_deg,pitch_amp_deg,run,cycle,t_s,stroke_deg,pitch_deg,stroke_state,thrust_n
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace fincast
