#include "fincast/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "fincast/util.hpp"
#include "json.hpp"

namespace fincast {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

bool SettingKey::operator<(const SettingKey& o) const {
    return std::tie(shape, freq_hz, stroke_amp_deg, pitch_amp_deg) <
           std::tie(o.shape, o.freq_hz, o.stroke_amp_deg, o.pitch_amp_deg);
}

std::string SettingKey::label() const {
    std::ostringstream os;
    os << shape << " " << freq_hz << "Hz s" << stroke_amp_deg << " p" << pitch_amp_deg;
    return os.str();
}

SettingKey cycle_key(const StrokeCycle& c) {
    return {c.shape, c.setting.flap_frequency_hz, c.setting.stroke_amplitude_deg, c.setting.pitch_amplitude_deg};
}

std::vector<SettingKey> dataset_settings(const Dataset& ds) {
    std::vector<SettingKey> out;
    for (const StrokeCycle& c : ds.cycles) {
        SettingKey k = cycle_key(c);
        if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
    }
    return out;
}

Exclusion::Exclusion(std::string shape_, double freq, double pitch)
    : shape(std::move(shape_)), freq_hz(freq), pitch_amp_deg(pitch) {}

bool Exclusion::matches(const std::string& shape_name, double freq, double pitch) const {
    if (!shape.empty() && shape != shape_name) return false;
    if (!std::isnan(freq_hz) && freq_hz != freq) return false;
    if (!std::isnan(pitch_amp_deg) && pitch_amp_deg != pitch) return false;
    return true;
}

DatasetGrid DatasetGrid::default_grid() {
    DatasetGrid g;
    g.exclusions.emplace_back("pt4", 2.0);        // no 2 Hz data for pt4
    g.exclusions.emplace_back("bio", 2.0, 25.0);  // excluded setting
    return g;
}

void DatasetGrid::validate() const {
    if (frequencies.empty() || pitch_amplitudes.empty() || shapes.empty())
        throw ValidationError("dataset grid: frequencies, pitch_amplitudes, and shapes must be non-empty");
    for (double f : frequencies)
        if (!(f > 0)) throw ValidationError("dataset grid: frequencies must be > 0");
    for (double p : pitch_amplitudes)
        if (!(p >= 0)) throw ValidationError("dataset grid: pitch amplitudes must be >= 0");
    for (double f : frequencies) stroke_amplitude_for(f);  // throws if unmapped
    if (runs_per_setting < 1) throw ValidationError("dataset grid: runs_per_setting must be >= 1");
    if (cycles_per_run < 1) throw ValidationError("dataset grid: cycles_per_run must be >= 1");
    if (n_steps_per_cycle < 8) throw ValidationError("dataset grid: n_steps_per_cycle must be >= 8");
    if (!std::isfinite(pitch_phase_deg)) throw ValidationError("dataset grid: pitch_phase_deg must be finite");
}

double DatasetGrid::stroke_amplitude_for(double freq) const {
    for (const auto& [f, amp] : stroke_rule)
        if (f == freq) return amp;
    std::ostringstream os;
    os << "dataset grid: no stroke amplitude rule for frequency " << freq;
    throw ValidationError(os.str());
}

bool DatasetGrid::excluded(const std::string& shape_name, double freq, double pitch) const {
    for (const Exclusion& e : exclusions)
        if (e.matches(shape_name, freq, pitch)) return true;
    return false;
}

std::vector<SettingKey> DatasetGrid::enumerate() const {
    std::vector<SettingKey> out;
    for (double f : frequencies) {
        double samp = stroke_amplitude_for(f);
        for (double p : pitch_amplitudes)
            for (const std::string& s : shapes)
                if (!excluded(s, f, p)) out.push_back({s, f, samp, p});
    }
    return out;
}

std::string DatasetGrid::to_json() const {
    nlohmann::json j;
    j["frequencies"] = frequencies;
    j["pitch_amplitudes"] = pitch_amplitudes;
    auto rule = nlohmann::json::array();
    for (const auto& [f, amp] : stroke_rule) rule.push_back({f, amp});
    j["stroke_rule"] = std::move(rule);
    j["shapes"] = shapes;
    j["runs_per_setting"] = runs_per_setting;
    j["cycles_per_run"] = cycles_per_run;
    j["n_steps_per_cycle"] = n_steps_per_cycle;
    j["pitch_phase_deg"] = pitch_phase_deg;
    auto ex = nlohmann::json::array();
    for (const Exclusion& e : exclusions) {
        nlohmann::json je;
        if (!e.shape.empty()) je["shape"] = e.shape;
        if (!std::isnan(e.freq_hz)) je["freq_hz"] = e.freq_hz;
        if (!std::isnan(e.pitch_amp_deg)) je["pitch_amp_deg"] = e.pitch_amp_deg;
        ex.push_back(std::move(je));
    }
    j["exclusions"] = std::move(ex);
    return j.dump(2);
}

DatasetGrid DatasetGrid::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("dataset grid: bad JSON: ") + e.what());
    }
    if (!j.is_object()) throw SchemaError("dataset grid: expected a JSON object");
    static const std::set<std::string> known = {"frequencies",      "pitch_amplitudes", "stroke_rule",
                                                "shapes",           "runs_per_setting", "cycles_per_run",
                                                "n_steps_per_cycle", "pitch_phase_deg",  "exclusions"};
    for (const auto& [key, value] : j.items())
        if (!known.count(key)) throw SchemaError("dataset grid: unknown key '" + key + "'");
    DatasetGrid g = DatasetGrid::default_grid();
    try {
        if (j.contains("frequencies")) g.frequencies = j["frequencies"].get<std::vector<double>>();
        if (j.contains("pitch_amplitudes")) g.pitch_amplitudes = j["pitch_amplitudes"].get<std::vector<double>>();
        if (j.contains("stroke_rule")) {
            g.stroke_rule.clear();
            for (const auto& pair : j["stroke_rule"]) {
                if (!pair.is_array() || pair.size() != 2)
                    throw SchemaError("dataset grid: stroke_rule entries must be [freq, stroke_amp] pairs");
                g.stroke_rule.emplace_back(pair[0].get<double>(), pair[1].get<double>());
            }
        }
        if (j.contains("shapes")) g.shapes = j["shapes"].get<std::vector<std::string>>();
        if (j.contains("runs_per_setting")) g.runs_per_setting = j["runs_per_setting"].get<int>();
        if (j.contains("cycles_per_run")) g.cycles_per_run = j["cycles_per_run"].get<int>();
        if (j.contains("n_steps_per_cycle")) g.n_steps_per_cycle = j["n_steps_per_cycle"].get<int>();
        if (j.contains("pitch_phase_deg")) g.pitch_phase_deg = j["pitch_phase_deg"].get<double>();
        if (j.contains("exclusions")) {
            g.exclusions.clear();
            for (const auto& je : j["exclusions"]) {
                Exclusion e;
                if (je.contains("shape")) e.shape = je["shape"].get<std::string>();
                if (je.contains("freq_hz")) e.freq_hz = je["freq_hz"].get<double>();
                if (je.contains("pitch_amp_deg")) e.pitch_amp_deg = je["pitch_amp_deg"].get<double>();
                g.exclusions.push_back(std::move(e));
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("dataset grid: ") + e.what());
    }
    g.validate();
    return g;
}

std::vector<double> oracle_thrust(const std::vector<SkeletonFrame>& frames, const FlatSkeleton& flat,
                                  const KinematicSetting& setting, double rho) {
    setting.validate();
    if (!(rho > 0)) throw ValidationError("oracle_thrust: rho must be > 0");
    int n = static_cast<int>(frames.size());
    if (n != setting.n_steps_per_cycle)
        throw ValidationError("oracle_thrust: frame count " + std::to_string(n) +
                              " does not match the setting's uniform cycle sampling (" +
                              std::to_string(setting.n_steps_per_cycle) + " steps)");
    size_t strips = flat.coms.size();
    for (const SkeletonFrame& fr : frames)
        if (fr.points.size() != strips)
            throw ValidationError("oracle_thrust: frame strip count does not match the flat skeleton");

    double dt = 1.0 / (n * setting.flap_frequency_hz);
    std::vector<double> thrust(n, 0.0);
    for (int j = 0; j < n; ++j) {
        // cyclic central difference of the stroke angle, deg -> rad/s
        double ds = frames[(j + 1) % n].stroke_deg - frames[(j + n - 1) % n].stroke_deg;
        double dsdt = ds * kPi / 180.0 / (2 * dt);
        double sdir = dsdt >= 0 ? 1.0 : -1.0;  // ties count as upstroke
        double alpha = kPi / 2 - sdir * frames[j].pitch_deg * kPi / 180.0;
        double ct = kOracleCt * std::sin(2 * alpha);
        for (size_t i = 0; i < strips; ++i) {
            const Vec3& p = frames[j].points[i];
            double r = std::hypot(p.y, p.z) / 100.0;  // cm -> m, distance to stroke axis
            double v = std::abs(dsdt) * r;
            thrust[j] += 0.5 * rho * (flat.strip_areas[i] / 1e4) * v * v * ct;
        }
    }
    return thrust;
}

namespace {

struct CleanSetting {
    SettingKey key;
    KinematicSetting setting;
    std::vector<KinematicState> states;
    std::vector<double> coeff;  // clean thrust coefficient series
    double denom = 0;           // 1/2 rho v_ref^2 A, converts coefficient -> N
};

std::string noise_tag(const SettingKey& k) {
    return "noise:" + k.shape + ":" + fmt_double(k.freq_hz) + ":" + fmt_double(k.pitch_amp_deg);
}

}  // namespace

Dataset generate_dataset(const DatasetGrid& grid, double noise_std, std::uint64_t seed) {
    grid.validate();
    if (!(noise_std >= 0) || !std::isfinite(noise_std))
        throw ValidationError("generate_dataset: noise_std must be finite and >= 0");
    AxisFrame frame;
    std::vector<SettingKey> keys = grid.enumerate();
    if (keys.empty()) throw ValidationError("generate_dataset: grid excludes every setting");

    // clean pass: one oracle cycle per setting
    std::map<std::string, FlatSkeleton> skels;
    std::vector<CleanSetting> clean;
    clean.reserve(keys.size());
    for (const SettingKey& k : keys) {
        const FinShape& shape = builtin_shape(k.shape);
        auto it = skels.find(k.shape);
        if (it == skels.end()) it = skels.emplace(k.shape, segment_fin(shape, frame)).first;
        CleanSetting cs;
        cs.key = k;
        cs.setting = {k.stroke_amp_deg, k.pitch_amp_deg, k.freq_hz, grid.n_steps_per_cycle};
        cs.states = generate_cycle(cs.setting, grid.pitch_phase_deg);
        std::vector<SkeletonFrame> frames;
        frames.reserve(cs.states.size());
        for (const KinematicState& st : cs.states)
            frames.push_back(rotate_skeleton(it->second, st.stroke_deg, st.pitch_deg));
        std::vector<double> thrust = oracle_thrust(frames, it->second, cs.setting, kRhoDefault);
        double v_ref = reference_tip_speed(shape, frame, cs.setting, grid.pitch_phase_deg);
        double area_m2 = shape.area() / 1e4;
        cs.denom = 0.5 * kRhoDefault * v_ref * v_ref * area_m2;
        cs.coeff.reserve(thrust.size());
        for (double t : thrust) cs.coeff.push_back(t / cs.denom);
        clean.push_back(std::move(cs));
    }

    // normalization scale of the clean signal: population std of the
    // concatenated per-setting coefficient series
    double mean = 0;
    size_t total = 0;
    for (const CleanSetting& cs : clean)
        for (double c : cs.coeff) {
            mean += c;
            ++total;
        }
    mean /= total;
    double var = 0;
    for (const CleanSetting& cs : clean)
        for (double c : cs.coeff) var += (c - mean) * (c - mean);
    var /= total;
    if (!(var > 0)) throw ValidationError("generate_dataset: clean oracle signal is constant over the grid");
    double s_clean = std::sqrt(var);

    // shape-separation guard at the fixed reference setting (first frequency,
    // largest pitch amplitude): pairwise gaps between normalized cycle-mean
    // coefficients must clear 5x the noise floor of a setting mean at the
    // default injection targets
    {
        double f0 = grid.frequencies.front();
        double pmax = *std::max_element(grid.pitch_amplitudes.begin(), grid.pitch_amplitudes.end());
        std::vector<std::pair<std::string, double>> means_at_ref;
        for (const CleanSetting& cs : clean) {
            if (cs.key.freq_hz != f0 || cs.key.pitch_amp_deg != pmax) continue;
            double m = 0;
            for (double c : cs.coeff) m += c;
            means_at_ref.emplace_back(cs.key.shape, m / cs.coeff.size() / s_clean);
        }
        double sb0 = std::sqrt(kNoiseAcrossTarget * kNoiseAcrossTarget - kNoiseWithinTarget * kNoiseWithinTarget);
        double nrc = static_cast<double>(grid.runs_per_setting) * grid.cycles_per_run * grid.n_steps_per_cycle;
        double floor = std::sqrt(sb0 * sb0 / grid.runs_per_setting + kNoiseWithinTarget * kNoiseWithinTarget / nrc);
        for (size_t a = 0; a < means_at_ref.size(); ++a)
            for (size_t b = a + 1; b < means_at_ref.size(); ++b) {
                double gap = std::abs(means_at_ref[a].second - means_at_ref[b].second);
                if (gap <= 5 * floor) {
                    std::ostringstream os;
                    os << "generate_dataset: shapes " << means_at_ref[a].first << " and " << means_at_ref[b].first
                       << " are not separable at the reference setting (" << f0 << " Hz, " << pmax
                       << " deg): normalized cycle-mean gap " << gap << " <= 5 x noise floor " << floor;
                    throw ValidationError(os.str());
                }
            }
    }

    // noise injection on the normalized scale; each setting derives its
    // substreams from the semantic key so generation order cannot matter.
    // per run: bias drawn first, then white noise in (cycle, sample) order.
    double s_tot = kNoiseAcrossTarget * noise_std;
    double s_w = kNoiseWithinTarget * noise_std;
    double s_b = std::sqrt(std::max(0.0, s_tot * s_tot - s_w * s_w));
    Rng master(seed);
    Dataset ds;
    ds.cycles.reserve(clean.size() * grid.runs_per_setting * grid.cycles_per_run);
    for (const CleanSetting& cs : clean) {
        std::string tag = noise_tag(cs.key);
        for (int run = 0; run < grid.runs_per_setting; ++run) {
            Rng rng = master.substream(tag, static_cast<std::uint64_t>(run));
            double bias = s_b * rng.normal();
            for (int cyc = 0; cyc < grid.cycles_per_run; ++cyc) {
                StrokeCycle sc;
                sc.shape = cs.key.shape;
                sc.setting = cs.setting;
                sc.run = run;
                sc.cycle = cyc;
                sc.states = cs.states;
                sc.thrust_n.reserve(cs.coeff.size());
                for (double c : cs.coeff) {
                    double noisy = c + (bias + s_w * rng.normal()) * s_clean;
                    sc.thrust_n.push_back(noisy * cs.denom);
                }
                ds.cycles.push_back(std::move(sc));
            }
        }
    }
    return ds;
}

void save_dataset(const Dataset& ds, const std::string& path) {
    std::string out = "shape,freq_hz,stroke_amp_deg,pitch_amp_deg,run,cycle,t_s,stroke_deg,pitch_deg,stroke_state,thrust_n\n";
    for (const StrokeCycle& c : ds.cycles) {
        std::string prefix = c.shape + "," + fmt_double(c.setting.flap_frequency_hz) + "," +
                             fmt_double(c.setting.stroke_amplitude_deg) + "," +
                             fmt_double(c.setting.pitch_amplitude_deg) + "," + std::to_string(c.run) + "," +
                             std::to_string(c.cycle) + ",";
        for (size_t i = 0; i < c.states.size(); ++i) {
            const KinematicState& st = c.states[i];
            out += prefix + fmt_double(st.t_s) + "," + fmt_double(st.stroke_deg) + "," + fmt_double(st.pitch_deg) +
                   "," + std::to_string(st.stroke_state) + "," + fmt_double(c.thrust_n[i]) + "\n";
        }
    }
    write_text_file(path, out);
}

Dataset load_dataset(const std::string& path) {
    std::string text = read_text_file(path);
    std::vector<std::string> lines = split(text, '\n');
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    if (lines.empty()) throw InputError("dataset '" + path + "': empty file");

    const std::vector<std::string> want = {"shape",  "freq_hz", "stroke_amp_deg", "pitch_amp_deg",
                                           "run",    "cycle",   "t_s",            "stroke_deg",
                                           "pitch_deg", "stroke_state", "thrust_n"};
    std::vector<std::string> header = split(lines[0], ',');
    std::vector<int> col(want.size(), -1);
    for (size_t w = 0; w < want.size(); ++w) {
        for (size_t h = 0; h < header.size(); ++h)
            if (header[h] == want[w]) col[w] = static_cast<int>(h);
        if (col[w] < 0) throw SchemaError("dataset '" + path + "': missing column '" + want[w] + "'");
    }

    Dataset ds;
    std::map<std::tuple<std::string, double, double, double, long, long>, size_t> index;
    for (size_t ln = 1; ln < lines.size(); ++ln) {
        if (lines[ln].empty()) continue;
        std::vector<std::string> f = split(lines[ln], ',');
        if (f.size() != header.size())
            throw InputError("dataset '" + path + "' line " + std::to_string(ln + 1) + ": expected " +
                             std::to_string(header.size()) + " fields, got " + std::to_string(f.size()));
        std::string where = "dataset '" + path + "' line " + std::to_string(ln + 1);
        auto num = [&](size_t w) {
            try {
                return parse_double(f[col[w]]);
            } catch (const InputError&) {
                throw InputError(where + ": bad number in column '" + want[w] + "': '" + f[col[w]] + "'");
            }
        };
        auto integer = [&](size_t w) {
            try {
                return parse_long(f[col[w]]);
            } catch (const InputError&) {
                throw InputError(where + ": bad integer in column '" + want[w] + "': '" + f[col[w]] + "'");
            }
        };
        std::string shape = f[col[0]];
        double freq = num(1), samp = num(2), pamp = num(3);
        long run = integer(4), cyc = integer(5);
        KinematicState st;
        st.t_s = num(6);
        st.stroke_deg = num(7);
        st.pitch_deg = num(8);
        long state = integer(9);
        if (state != 0 && state != 1) throw InputError(where + ": stroke_state must be 0 or 1");
        st.stroke_state = static_cast<int>(state);
        double thrust = num(10);

        auto key = std::make_tuple(shape, freq, samp, pamp, run, cyc);
        auto it = index.find(key);
        if (it == index.end()) {
            StrokeCycle sc;
            sc.shape = shape;
            sc.setting = {samp, pamp, freq, 8};  // step count fixed up after grouping
            sc.run = static_cast<int>(run);
            sc.cycle = static_cast<int>(cyc);
            it = index.emplace(key, ds.cycles.size()).first;
            ds.cycles.push_back(std::move(sc));
        }
        ds.cycles[it->second].states.push_back(st);
        ds.cycles[it->second].thrust_n.push_back(thrust);
    }

    for (StrokeCycle& c : ds.cycles) {
        std::string where = "dataset '" + path + "': cycle (" + cycle_key(c).label() + ", run " +
                            std::to_string(c.run) + ", cycle " + std::to_string(c.cycle) + ")";
        if (c.states.size() < 8) throw InputError(where + ": fewer than 8 samples");
        c.setting.n_steps_per_cycle = static_cast<int>(c.states.size());
        c.setting.validate();
        double period = 1.0 / c.setting.flap_frequency_hz;
        double dt = period / c.states.size();
        for (size_t i = 0; i < c.states.size(); ++i) {
            double expect = dt * i;
            if (std::abs(c.states[i].t_s - expect) > 1e-9 * period)
                throw InputError(where + ": non-uniform sampling at sample " + std::to_string(i));
        }
    }
    return ds;
}

}  // namespace fincast
