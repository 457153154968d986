#include "fincast/kinematics.hpp"

#include <cmath>

#include "fincast/util.hpp"

namespace fincast {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

void KinematicSetting::validate() const {
    if (!(flap_frequency_hz > 0) || !std::isfinite(flap_frequency_hz))
        throw ValidationError("kinematic setting: flap_frequency_hz must be > 0");
    if (!(stroke_amplitude_deg >= 0) || !std::isfinite(stroke_amplitude_deg))
        throw ValidationError("kinematic setting: stroke_amplitude_deg must be >= 0");
    if (!(pitch_amplitude_deg >= 0) || !std::isfinite(pitch_amplitude_deg))
        throw ValidationError("kinematic setting: pitch_amplitude_deg must be >= 0");
    if (n_steps_per_cycle < 8)
        throw ValidationError("kinematic setting: n_steps_per_cycle must be >= 8, got " +
                              std::to_string(n_steps_per_cycle));
}

std::vector<KinematicState> generate_cycle(const KinematicSetting& setting, double pitch_phase_deg) {
    setting.validate();
    if (!std::isfinite(pitch_phase_deg)) throw ValidationError("generate_cycle: pitch phase must be finite");
    int n = setting.n_steps_per_cycle;
    double period = 1.0 / setting.flap_frequency_hz;
    double phase = pitch_phase_deg * kPi / 180.0;
    std::vector<KinematicState> out(n);
    for (int i = 0; i < n; ++i) {
        double t = period * i / n;
        double w = 2.0 * kPi * setting.flap_frequency_hz * t;  // = 2 pi i / n
        KinematicState& s = out[i];
        s.t_s = t;
        s.stroke_deg = setting.stroke_amplitude_deg * std::sin(w);
        s.pitch_deg = setting.pitch_amplitude_deg * std::sin(w + phase);
        // d/dt stroke = A 2 pi f cos(w); zero-derivative ties label as upstroke
        s.stroke_state = setting.stroke_amplitude_deg * std::cos(w) >= 0 ? 1 : 0;
    }
    return out;
}

Variant parse_variant(const std::string& name) {
    if (name == "baseline") return Variant::baseline;
    if (name == "fp") return Variant::fp;
    if (name == "rfp") return Variant::rfp;
    if (name == "wfp") return Variant::wfp;
    throw InputError("unknown variant '" + name + "' (have: baseline, fp, rfp, wfp)");
}

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::baseline: return "baseline";
        case Variant::fp: return "fp";
        case Variant::rfp: return "rfp";
        case Variant::wfp: return "wfp";
    }
    throw InputError("bad variant enum value");
}

const std::vector<Variant>& all_variants() {
    static const std::vector<Variant> v = {Variant::baseline, Variant::fp, Variant::rfp, Variant::wfp};
    return v;
}

double shape_code(const std::string& shape_name) {
    if (shape_name == "pt4") return -1.0;
    if (shape_name == "rect") return 0.0;
    if (shape_name == "bio") return 1.0;
    throw InputError("no categorical code for shape '" + shape_name + "' (codes exist for pt4, rect, bio)");
}

namespace {

void require_block(const void* p, Variant v, const char* block) {
    if (!p)
        throw SchemaError("variant " + variant_name(v) + ": missing required block '" + block + "'");
}

void require_len(const std::vector<double>& sk, Variant v) {
    if (sk.size() != 30)
        throw SchemaError("variant " + variant_name(v) + ": skeleton30 block has " + std::to_string(sk.size()) +
                          " values, expected 30");
}

void append_kin_block(std::vector<double>& rec, const KinematicState& state, const KinematicSetting& setting,
                      bool recurrent) {
    rec.push_back(setting.stroke_amplitude_deg);
    rec.push_back(setting.pitch_amplitude_deg);
    rec.push_back(setting.flap_frequency_hz);
    rec.push_back(state.stroke_deg);
    rec.push_back(state.pitch_deg);
    if (!recurrent) rec.push_back(static_cast<double>(state.stroke_state));
}

}  // namespace

std::vector<double> build_input_record(Variant variant, bool recurrent, const KinematicState& state,
                                       const KinematicSetting& setting, const std::vector<double>* skeleton30,
                                       const std::vector<double>* reduced, const double* code) {
    std::vector<double> rec;
    switch (variant) {
        case Variant::baseline:
            require_block(code, variant, "shape_code");
            append_kin_block(rec, state, setting, recurrent);
            rec.push_back(*code);
            break;
        case Variant::fp:
            require_block(skeleton30, variant, "skeleton30");
            require_len(*skeleton30, variant);
            append_kin_block(rec, state, setting, recurrent);
            rec.insert(rec.end(), skeleton30->begin(), skeleton30->end());
            break;
        case Variant::rfp:
            require_block(skeleton30, variant, "skeleton30");
            require_len(*skeleton30, variant);
            rec.push_back(setting.flap_frequency_hz);
            if (!recurrent) rec.push_back(static_cast<double>(state.stroke_state));
            rec.insert(rec.end(), skeleton30->begin(), skeleton30->end());
            break;
        case Variant::wfp:
            require_block(reduced, variant, "reduced");
            append_kin_block(rec, state, setting, recurrent);
            rec.insert(rec.end(), reduced->begin(), reduced->end());
            break;
    }
    return rec;
}

int input_record_size(Variant variant, bool recurrent, int k_reduced) {
    int kin = recurrent ? 5 : 6;
    switch (variant) {
        case Variant::baseline: return kin + 1;
        case Variant::fp: return kin + 30;
        case Variant::rfp: return (recurrent ? 1 : 2) + 30;
        case Variant::wfp: return kin + k_reduced;
    }
    throw InputError("bad variant enum value");
}

}  // namespace fincast
