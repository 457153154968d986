#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fincast/model.hpp"
#include "fincast/synthdata.hpp"

namespace fincast {

// One generalizability test: which settings are withheld from training and
// which of them are scored. The shipped six tests mirror the standard
// protocol table; eval_settings lists the scored subset explicitly (for the
// frequency/shape tests only the 1 Hz settings of the held-out shape count).
struct GenTestSpec {
    std::string name;
    std::vector<std::string> eval_shapes;
    std::vector<Exclusion> exclusions;
    std::vector<Exclusion> eval_settings;

    bool excludes(const std::string& shape, double freq, double pitch) const;
    bool evaluates(const std::string& shape, double freq, double pitch) const;
};

const std::vector<GenTestSpec>& six_tests();
const GenTestSpec& find_test(const std::string& name);  // throws InputError

// reduced protocol: one seeded cycle per run per setting, split 80/20 by cycle
struct ReducedSplit {
    std::vector<std::size_t> train;  // indices into Dataset::cycles
    std::vector<std::size_t> val;
};

ReducedSplit assemble_reduced(const Dataset& ds, std::uint64_t seed);

// Per-instant rotated skeleton vectors (30 values) and thrust coefficients
// for every cycle, computed from the builtin shape geometry at the default
// axis frame. Cycles index as in Dataset::cycles.
struct DatasetFeatures {
    std::vector<std::vector<std::vector<double>>> skvec;  // [cycle][instant][30]
    std::vector<std::vector<double>> coeff;               // [cycle][instant]
};

DatasetFeatures dataset_features(const Dataset& ds, double rho = kRhoDefault, double pitch_phase_deg = 90.0);

// knobs shared by every harness training run
struct HarnessConfig {
    DenseConfig dense;  // input_dim/seed overwritten per run
    LstmConfig lstm;
    PcaMode pca_mode = PcaMode::weighted;
    int pca_k = 4;
    double rho = kRhoDefault;
    double pitch_phase_deg = 90.0;     // must match the dataset's generation phase
    bool per_cycle_weighting = false;  // default: settings weigh equally in the overall MSE

    static HarnessConfig defaults();
    std::string to_json() const;
    static HarnessConfig from_json(const std::string& text);
};

struct SettingMse {
    SettingKey key;
    double mse = 0;
    int n_cycles = 0;
};

struct CycleId {
    SettingKey key;
    int run = 0;
    int cycle = 0;
    double mse = 0;
};

struct CycleProfile {
    CycleId id;
    std::vector<double> t_s;
    std::vector<double> target;     // normalized thrust
    std::vector<double> predicted;  // normalized thrust
};

struct EvalReport {
    std::string spec_name;
    Variant variant = Variant::baseline;
    Arch arch = Arch::dense;
    bool no_eval_settings = false;  // degenerate spec: nothing to score
    bool per_cycle_weighting = false;
    std::vector<SettingMse> per_setting;
    double excluded_mse = 0;       // mean over per_setting (or over cycles with the flag)
    double model_val_mse = 0;      // exclusion model, validation split
    double reference_eval_mse = 0;  // full-data model scored on the same settings
    double reference_val_mse = 0;
    std::vector<SettingKey> train_settings;  // what the exclusion model saw
    CycleId best, worst;
    CycleProfile best_profile, worst_profile;

    std::string to_json() const;
    std::string profiles_to_csv() const;
};

// Train the variant/architecture on everything except the test's exclusions,
// score all cycles of the eval settings, and train + score the full-data
// reference. Deterministic given seed; the reference derives its seed from
// (variant, arch) only, so it is shared across specs.
EvalReport run_gen_test(const GenTestSpec& spec, Variant variant, Arch arch, const Dataset& ds,
                        const HarnessConfig& cfg, std::uint64_t seed);

// Reduced-protocol training on the whole dataset (no exclusions). Identical
// to the full-data reference model of run_gen_test for the same seed.
SurrogateModel train_surrogate(const Dataset& ds, Variant variant, Arch arch, const HarnessConfig& cfg,
                               std::uint64_t seed);

// Score a trained model over every setting of a dataset (all cycles); the
// reference fields stay unset and spec_name is "full-dataset".
EvalReport evaluate_dataset(const SurrogateModel& model, const Dataset& ds, const HarnessConfig& cfg);

// Hyperparameter random search over the reduced protocol (no exclusions);
// stats/reducer fit on the training split, trials ranked by validation MSE.
std::vector<DenseTrial> search_dense(const Dataset& ds, Variant variant, const DenseSearchSpace& space,
                                     int n_trials, const HarnessConfig& cfg, std::uint64_t seed, int jobs = 1);
std::vector<LstmTrial> search_lstm(const Dataset& ds, Variant variant, const LstmSearchSpace& space, int n_trials,
                                   const HarnessConfig& cfg, std::uint64_t seed, int jobs = 1);

// all four variants x both architectures over the given specs
struct ComparisonTable {
    std::vector<std::string> spec_names;
    std::vector<std::string> model_names;               // "dense-baseline", ...
    std::vector<std::vector<double>> mse;               // [model][spec]
    std::vector<std::vector<double>> reference_eval;    // [model][spec]
    std::vector<double> reference_val;                  // [model]
    std::vector<double> avg_gt14;                       // over specs named GT1..GT4
    std::vector<double> avg_gt56;                       // over specs named GT5..GT6

    std::string to_csv() const;
    std::string to_json() const;
};

ComparisonTable compare_variants(const Dataset& ds, const std::vector<GenTestSpec>& specs,
                                 const HarnessConfig& cfg, std::uint64_t seed);

}  // namespace fincast
