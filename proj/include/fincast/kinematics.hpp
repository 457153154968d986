#pragma once

#include <string>
#include <vector>

namespace fincast {

// One flapping setting: sinusoidal stroke/pitch programs sampled over a cycle.
struct KinematicSetting {
    double stroke_amplitude_deg = 0;  // max stroke angle over the cycle
    double pitch_amplitude_deg = 0;   // max pitch angle over the cycle
    double flap_frequency_hz = 1;
    int n_steps_per_cycle = 100;

    void validate() const;  // freq > 0, amplitudes >= 0, n_steps >= 8
};

struct KinematicState {
    double t_s = 0;
    double stroke_deg = 0;
    double pitch_deg = 0;
    int stroke_state = 1;  // 1 while the stroke angle is increasing, else 0
};

// One period sampled at n uniform instants, endpoint exclusive, so that
// concatenated cycles keep uniform spacing. stroke(t) = A_s sin(2 pi f t),
// pitch(t) = A_p sin(2 pi f t + phase). stroke_state comes from the analytic
// derivative sign; instants where the derivative is exactly zero count as
// upstroke so the labeling is deterministic.
std::vector<KinematicState> generate_cycle(const KinematicSetting& setting, double pitch_phase_deg = 90.0);

// model input variants
enum class Variant { baseline, fp, rfp, wfp };

Variant parse_variant(const std::string& name);  // throws InputError
std::string variant_name(Variant v);
const std::vector<Variant>& all_variants();

// categorical shape code used by the baseline variant
double shape_code(const std::string& shape_name);  // pt4 -> -1, rect -> 0, bio -> +1

// Assemble one per-instant input record. Layouts (dense; recurrent models
// drop stroke_state everywhere it appears):
//   baseline: [stroke_amp, pitch_amp, flap_freq, stroke_angle, pitch_angle,
//              stroke_state, shape_code]
//   fp:       [kin block as baseline minus shape_code] + 30 rotated-skeleton values
//   rfp:      [flap_freq, stroke_state] + 30 rotated-skeleton values
//   wfp:      [kin block as fp] + k reduced shape values
// Pointer arguments are optional blocks; a variant that needs an absent block
// raises SchemaError naming the variant and block.
std::vector<double> build_input_record(Variant variant, bool recurrent, const KinematicState& state,
                                       const KinematicSetting& setting, const std::vector<double>* skeleton30,
                                       const std::vector<double>* reduced, const double* shape_code);

// record length for a variant/architecture (k = reduced dimension for wfp)
int input_record_size(Variant variant, bool recurrent, int k_reduced = 4);

}  // namespace fincast
