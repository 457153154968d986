#include "fincast/harness.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <map>
#include <set>

#include "json.hpp"

#include "fincast/util.hpp"

namespace fincast {

namespace {

using nlohmann::json;

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double mean_of(const std::vector<double>& xs) {
    if (xs.empty()) return kNan;
    double acc = 0;
    for (double x : xs) acc += x;
    return acc / static_cast<double>(xs.size());
}

double popstd(const std::vector<double>& xs) {
    if (xs.empty()) return 0;
    double m = mean_of(xs), acc = 0;
    for (double x : xs) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(xs.size()));
}

// dataset plus everything derivable from it alone, shared by all trainings
struct Featurized {
    const Dataset* ds = nullptr;
    DatasetFeatures feat;
};

Featurized featurize(const Dataset& ds, const HarnessConfig& cfg) {
    return Featurized{&ds, dataset_features(ds, cfg.rho, cfg.pitch_phase_deg)};
}

// one raw (unnormalized) input record for instant j of cycle ci
std::vector<double> record_for(const Featurized& F, std::size_t ci, std::size_t j, Variant v, bool recurrent,
                               const PcaReducer* red) {
    const StrokeCycle& c = F.ds->cycles[ci];
    double code = 0;
    const double* codep = nullptr;
    const std::vector<double>* skp = nullptr;
    std::vector<double> reduced;
    const std::vector<double>* redp = nullptr;
    switch (v) {
        case Variant::baseline:
            code = shape_code(c.shape);
            codep = &code;
            break;
        case Variant::fp:
        case Variant::rfp:
            skp = &F.feat.skvec[ci][j];
            break;
        case Variant::wfp:
            if (!red) throw ValidationError("wfp records need a fitted reducer");
            reduced = red->project(F.feat.skvec[ci][j]);
            redp = &reduced;
            break;
    }
    return build_input_record(v, recurrent, c.states[j], c.setting, skp, redp, codep);
}

// normalized training tensors with all scaling fit on the train cycles only
struct Tensors {
    NormStats stats;
    std::optional<PcaReducer> red;
    std::vector<std::vector<double>> tx, vx;  // dense
    std::vector<double> ty, vy;
    std::vector<Sequence> tseq, vseq;  // recurrent
};

Tensors build_tensors(const Featurized& F, const std::vector<std::size_t>& train_idx,
                      const std::vector<std::size_t>& val_idx, Variant v, Arch a, const HarnessConfig& cfg) {
    Tensors T;
    std::vector<double> tcoeffs;
    for (std::size_t ci : train_idx) tcoeffs.insert(tcoeffs.end(), F.feat.coeff[ci].begin(), F.feat.coeff[ci].end());
    double scale = popstd(tcoeffs);
    if (!(scale > 0)) throw ValidationError("constant thrust coefficient over the training split");

    if (v == Variant::wfp) {
        std::vector<std::vector<double>> sks;
        std::vector<double> nthr;
        for (std::size_t ci : train_idx)
            for (std::size_t j = 0; j < F.feat.skvec[ci].size(); ++j) {
                sks.push_back(F.feat.skvec[ci][j]);
                nthr.push_back(F.feat.coeff[ci][j] / scale);
            }
        T.red = fit_pca(sks, cfg.pca_mode == PcaMode::weighted ? &nthr : nullptr, cfg.pca_mode, cfg.pca_k);
    }

    bool rec = (a == Arch::recurrent);
    auto build_cycle = [&](std::size_t ci) {
        std::vector<std::vector<double>> rs;
        rs.reserve(F.feat.skvec[ci].size());
        for (std::size_t j = 0; j < F.feat.skvec[ci].size(); ++j)
            rs.push_back(record_for(F, ci, j, v, rec, T.red ? &*T.red : nullptr));
        return rs;
    };

    std::vector<std::vector<double>> flat_train;
    for (std::size_t ci : train_idx) {
        auto rs = build_cycle(ci);
        flat_train.insert(flat_train.end(), std::make_move_iterator(rs.begin()), std::make_move_iterator(rs.end()));
    }
    T.stats = fit_norm_stats(flat_train, tcoeffs);

    if (a == Arch::dense) {
        T.tx.reserve(flat_train.size());
        T.ty.reserve(flat_train.size());
        for (auto& r : flat_train) T.tx.push_back(T.stats.apply(r));
        for (double c : tcoeffs) T.ty.push_back(T.stats.apply_thrust(c));
        for (std::size_t ci : val_idx) {
            auto rs = build_cycle(ci);
            for (std::size_t j = 0; j < rs.size(); ++j) {
                T.vx.push_back(T.stats.apply(rs[j]));
                T.vy.push_back(T.stats.apply_thrust(F.feat.coeff[ci][j]));
            }
        }
    } else {
        auto mkseqs = [&](const std::vector<std::size_t>& idxs) {
            std::vector<Sequence> out;
            out.reserve(idxs.size());
            for (std::size_t ci : idxs) {
                Sequence s;
                auto rs = build_cycle(ci);
                s.records.reserve(rs.size());
                s.targets.reserve(rs.size());
                for (std::size_t j = 0; j < rs.size(); ++j) {
                    s.records.push_back(T.stats.apply(rs[j]));
                    s.targets.push_back(T.stats.apply_thrust(F.feat.coeff[ci][j]));
                }
                out.push_back(std::move(s));
            }
            return out;
        };
        T.tseq = mkseqs(train_idx);
        T.vseq = mkseqs(val_idx);
    }
    return T;
}

// Fit scaling (and the wfp reducer) on the train cycles only, then train the
// requested network. Deterministic given net_seed.
SurrogateModel train_variant_model(const Featurized& F, const std::vector<std::size_t>& train_idx,
                                   const std::vector<std::size_t>& val_idx, Variant v, Arch a,
                                   const HarnessConfig& cfg, std::uint64_t net_seed, const std::string& label) {
    std::cerr << "[harness] training " << label << " (" << train_idx.size() << " train / " << val_idx.size()
              << " val cycles)\n";
    Tensors T = build_tensors(F, train_idx, val_idx, v, a, cfg);

    SurrogateModel model;
    model.arch = a;
    model.variant = v;
    model.stats = T.stats;
    model.reducer = T.red;
    int input_dim = static_cast<int>(T.stats.mean.size());

    if (a == Arch::dense) {
        DenseConfig dc = cfg.dense;
        dc.input_dim = input_dim;
        dc.seed = net_seed;
        dc.validate();
        model.dense = DenseNet::init(dc);
        model.history = train_dense(model.dense, T.tx, T.ty, T.vx, T.vy);
    } else {
        LstmConfig lc = cfg.lstm;
        lc.input_dim = input_dim;
        lc.seed = net_seed;
        lc.validate();
        model.lstm = LstmNet::init(lc);
        model.history = train_lstm(model.lstm, T.tseq, T.vseq);
    }
    return model;
}

double eval_cycle_mse(const Featurized& F, const SurrogateModel& m, std::size_t ci,
                      std::vector<double>* pred_out = nullptr, std::vector<double>* targ_out = nullptr) {
    bool rec = (m.arch == Arch::recurrent);
    std::vector<std::vector<double>> records;
    records.reserve(F.feat.skvec[ci].size());
    for (std::size_t j = 0; j < F.feat.skvec[ci].size(); ++j)
        records.push_back(record_for(F, ci, j, m.variant, rec, m.reducer ? &*m.reducer : nullptr));
    std::vector<double> pred = m.predict_normalized(records);
    std::vector<double> targ(pred.size());
    double acc = 0;
    for (std::size_t j = 0; j < pred.size(); ++j) {
        targ[j] = m.stats.apply_thrust(F.feat.coeff[ci][j]);
        double d = pred[j] - targ[j];
        acc += d * d;
    }
    double mse = pred.empty() ? kNan : acc / static_cast<double>(pred.size());
    if (pred_out) *pred_out = std::move(pred);
    if (targ_out) *targ_out = std::move(targ);
    return mse;
}

struct EvalOutcome {
    std::vector<SettingMse> per_setting;
    std::vector<CycleId> cycle_ids;
    double overall = kNan;
};

// score every dataset cycle of every eval setting
EvalOutcome evaluate_model(const Featurized& F, const SurrogateModel& m, const std::vector<SettingKey>& eval_keys,
                           bool per_cycle_weighting) {
    EvalOutcome out;
    std::vector<double> cycle_mses, setting_mses;
    for (const auto& key : eval_keys) {
        SettingMse sm;
        sm.key = key;
        double acc = 0;
        for (std::size_t ci = 0; ci < F.ds->cycles.size(); ++ci) {
            if (cycle_key(F.ds->cycles[ci]) == key) {
                double mse = eval_cycle_mse(F, m, ci);
                out.cycle_ids.push_back({key, F.ds->cycles[ci].run, F.ds->cycles[ci].cycle, mse});
                cycle_mses.push_back(mse);
                acc += mse;
                sm.n_cycles++;
            }
        }
        sm.mse = sm.n_cycles ? acc / sm.n_cycles : kNan;
        setting_mses.push_back(sm.mse);
        out.per_setting.push_back(sm);
    }
    out.overall = per_cycle_weighting ? mean_of(cycle_mses) : mean_of(setting_mses);
    return out;
}

std::size_t find_cycle(const Dataset& ds, const CycleId& id) {
    for (std::size_t i = 0; i < ds.cycles.size(); ++i)
        if (cycle_key(ds.cycles[i]) == id.key && ds.cycles[i].run == id.run && ds.cycles[i].cycle == id.cycle)
            return i;
    throw ValidationError("cycle not found: " + id.key.label());
}

CycleProfile make_profile(const Featurized& F, const SurrogateModel& m, const CycleId& id) {
    CycleProfile p;
    p.id = id;
    std::size_t ci = find_cycle(*F.ds, id);
    eval_cycle_mse(F, m, ci, &p.predicted, &p.target);
    p.t_s.reserve(F.ds->cycles[ci].states.size());
    for (const auto& st : F.ds->cycles[ci].states) p.t_s.push_back(st.t_s);
    return p;
}

json key_json(const SettingKey& k) {
    return json{{"shape", k.shape},
                {"freq_hz", k.freq_hz},
                {"stroke_amp_deg", k.stroke_amp_deg},
                {"pitch_amp_deg", k.pitch_amp_deg},
                {"label", k.label()}};
}

json cycle_id_json(const CycleId& c) {
    json j = key_json(c.key);
    j["run"] = c.run;
    j["cycle"] = c.cycle;
    j["mse"] = c.mse;
    return j;
}

EvalReport run_gen_test_impl(const GenTestSpec& spec, Variant v, Arch a, const Dataset& ds, const Featurized& F,
                             const ReducedSplit& split, const HarnessConfig& cfg, const Rng& master,
                             const SurrogateModel* shared_ref) {
    EvalReport rep;
    rep.spec_name = spec.name;
    rep.variant = v;
    rep.arch = a;
    rep.per_cycle_weighting = cfg.per_cycle_weighting;

    auto keep = [&](std::size_t ci) {
        SettingKey k = cycle_key(ds.cycles[ci]);
        return !spec.excludes(k.shape, k.freq_hz, k.pitch_amp_deg);
    };
    std::vector<std::size_t> tr, va;
    for (std::size_t ci : split.train)
        if (keep(ci)) tr.push_back(ci);
    for (std::size_t ci : split.val)
        if (keep(ci)) va.push_back(ci);
    if (tr.empty()) throw ValidationError("gen test '" + spec.name + "': exclusions remove all training data");
    if (va.empty()) throw ValidationError("gen test '" + spec.name + "': exclusions remove all validation data");

    std::string name = arch_name(a) + "-" + variant_name(v);
    std::uint64_t mseed = master.substream("gt:" + spec.name + ":" + variant_name(v) + ":" + arch_name(a)).next_u64();
    SurrogateModel model = train_variant_model(F, tr, va, v, a, cfg, mseed, spec.name + " " + name);
    rep.model_val_mse = model.history.val_mse.empty() ? kNan : model.history.val_mse.back();

    std::set<SettingKey> seen;
    for (std::size_t ci : tr) seen.insert(cycle_key(ds.cycles[ci]));
    for (std::size_t ci : va) seen.insert(cycle_key(ds.cycles[ci]));
    rep.train_settings.assign(seen.begin(), seen.end());

    SurrogateModel local_ref;
    const SurrogateModel* ref = shared_ref;
    if (!ref) {
        std::uint64_t rseed = master.substream("ref:" + variant_name(v) + ":" + arch_name(a)).next_u64();
        local_ref = train_variant_model(F, split.train, split.val, v, a, cfg, rseed, "full-data " + name);
        ref = &local_ref;
    }
    rep.reference_val_mse = ref->history.val_mse.empty() ? kNan : ref->history.val_mse.back();

    std::vector<SettingKey> eval_keys;
    for (const auto& key : dataset_settings(ds))
        if (spec.evaluates(key.shape, key.freq_hz, key.pitch_amp_deg)) eval_keys.push_back(key);
    if (eval_keys.empty()) {
        rep.no_eval_settings = true;
        rep.excluded_mse = kNan;
        rep.reference_eval_mse = kNan;
        return rep;
    }

    EvalOutcome mo = evaluate_model(F, model, eval_keys, cfg.per_cycle_weighting);
    EvalOutcome ro = evaluate_model(F, *ref, eval_keys, cfg.per_cycle_weighting);
    rep.per_setting = mo.per_setting;
    rep.excluded_mse = mo.overall;
    rep.reference_eval_mse = ro.overall;

    auto lt = [](const CycleId& x, const CycleId& y) { return x.mse < y.mse; };
    auto [bi, wi] = std::minmax_element(mo.cycle_ids.begin(), mo.cycle_ids.end(), lt);
    rep.best = *bi;
    rep.worst = *wi;
    rep.best_profile = make_profile(F, model, rep.best);
    rep.worst_profile = make_profile(F, model, rep.worst);
    return rep;
}

double mean_over_named(const std::vector<double>& row, const std::vector<std::string>& spec_names,
                       const std::set<std::string>& wanted) {
    std::vector<double> vals;
    for (std::size_t i = 0; i < spec_names.size(); ++i)
        if (wanted.count(spec_names[i])) vals.push_back(row[i]);
    return mean_of(vals);
}

}  // namespace

bool GenTestSpec::excludes(const std::string& shape, double freq, double pitch) const {
    for (const auto& e : exclusions)
        if (e.matches(shape, freq, pitch)) return true;
    return false;
}

bool GenTestSpec::evaluates(const std::string& shape, double freq, double pitch) const {
    for (const auto& e : eval_settings)
        if (e.matches(shape, freq, pitch)) return true;
    return false;
}

const std::vector<GenTestSpec>& six_tests() {
    static const std::vector<GenTestSpec> tests = [] {
        std::vector<GenTestSpec> v;
        // two individual settings
        v.push_back({"GT1",
                     {"rect", "bio"},
                     {Exclusion("rect", 2, 40), Exclusion("bio", 1, 15)},
                     {Exclusion("rect", 2, 40), Exclusion("bio", 1, 15)}});
        // one pitch amplitude across all shapes and frequencies
        v.push_back({"GT2", {"rect", "bio"}, {Exclusion("", kNan, 15)}, {Exclusion("rect", kNan, 15), Exclusion("bio", kNan, 15)}});
        v.push_back({"GT3", {"rect", "bio"}, {Exclusion("", kNan, 25)}, {Exclusion("rect", kNan, 25), Exclusion("bio", kNan, 25)}});
        v.push_back({"GT4", {"rect", "bio"}, {Exclusion("", kNan, 40)}, {Exclusion("rect", kNan, 40), Exclusion("bio", kNan, 40)}});
        // one shape plus the upper frequency; scored on the held-out shape at 1 Hz
        v.push_back({"GT5", {"rect"}, {Exclusion("", 2, kNan), Exclusion("rect")}, {Exclusion("rect", 1, kNan)}});
        v.push_back({"GT6", {"bio"}, {Exclusion("", 2, kNan), Exclusion("bio")}, {Exclusion("bio", 1, kNan)}});
        return v;
    }();
    return tests;
}

const GenTestSpec& find_test(const std::string& name) {
    for (const auto& t : six_tests())
        if (t.name == name) return t;
    throw InputError("unknown generalizability test '" + name + "'");
}

ReducedSplit assemble_reduced(const Dataset& ds, std::uint64_t seed) {
    if (ds.cycles.empty()) throw ValidationError("assemble_reduced: empty dataset");
    Rng master(seed);
    std::vector<SettingKey> keys = dataset_settings(ds);
    std::map<SettingKey, std::map<int, std::vector<std::size_t>>> groups;
    for (std::size_t i = 0; i < ds.cycles.size(); ++i)
        groups[cycle_key(ds.cycles[i])][ds.cycles[i].run].push_back(i);

    std::vector<std::size_t> picked;
    for (const auto& key : keys) {
        auto& runs = groups[key];
        if (runs.empty()) throw ValidationError("setting with zero runs: " + key.label());
        for (auto& [run, idxs] : runs) {
            std::sort(idxs.begin(), idxs.end(),
                      [&](std::size_t x, std::size_t y) { return ds.cycles[x].cycle < ds.cycles[y].cycle; });
            Rng pick = master.substream("pick:" + key.label(), static_cast<std::uint64_t>(run));
            picked.push_back(idxs[static_cast<std::size_t>(pick.uniform_int(0, static_cast<int>(idxs.size()) - 1))]);
        }
    }

    Rng shuf = master.substream("split");
    for (std::size_t i = picked.size(); i > 1; --i)
        std::swap(picked[i - 1], picked[static_cast<std::size_t>(shuf.uniform_int(0, static_cast<int>(i) - 1))]);
    std::size_t val_n = static_cast<std::size_t>(0.2 * static_cast<double>(picked.size()));
    if (val_n == 0 || val_n == picked.size())
        throw ValidationError("reduced dataset too small for an 80/20 cycle split");
    ReducedSplit out;
    out.val.assign(picked.begin(), picked.begin() + static_cast<std::ptrdiff_t>(val_n));
    out.train.assign(picked.begin() + static_cast<std::ptrdiff_t>(val_n), picked.end());
    return out;
}

DatasetFeatures dataset_features(const Dataset& ds, double rho, double pitch_phase_deg) {
    DatasetFeatures F;
    F.skvec.resize(ds.cycles.size());
    F.coeff.resize(ds.cycles.size());
    AxisFrame frame;
    std::map<std::string, FlatSkeleton> flats;
    std::map<SettingKey, std::pair<double, double>> vref_area;  // v_ref m/s, area m^2
    for (std::size_t i = 0; i < ds.cycles.size(); ++i) {
        const StrokeCycle& c = ds.cycles[i];
        auto fit = flats.find(c.shape);
        if (fit == flats.end()) fit = flats.emplace(c.shape, segment_fin(builtin_shape(c.shape), frame)).first;
        SettingKey key = cycle_key(c);
        auto vit = vref_area.find(key);
        if (vit == vref_area.end()) {
            const FinShape& sh = builtin_shape(c.shape);
            double vref = reference_tip_speed(sh, frame, c.setting, pitch_phase_deg);
            vit = vref_area.emplace(key, std::make_pair(vref, sh.area() / 1e4)).first;
        }
        auto& sv = F.skvec[i];
        auto& cf = F.coeff[i];
        sv.reserve(c.states.size());
        cf.reserve(c.states.size());
        for (std::size_t j = 0; j < c.states.size(); ++j) {
            sv.push_back(
                skeleton_to_vector(rotate_skeleton(fit->second, c.states[j].stroke_deg, c.states[j].pitch_deg)));
            cf.push_back(thrust_coefficient(c.thrust_n[j], rho, vit->second.first, vit->second.second));
        }
    }
    return F;
}

HarnessConfig HarnessConfig::defaults() {
    HarnessConfig c;
    c.dense.layers = 2;
    c.dense.nodes_per_layer = 24;
    c.dense.dropout_fraction = 0.0;
    c.dense.learning_rate = 5e-3;
    c.dense.batch_size = 32;
    c.dense.epochs = 150;
    c.lstm.hidden_units = 32;
    c.lstm.dropout_fraction = 0.0;
    c.lstm.learning_rate = 3e-3;
    c.lstm.batch_size = 8;
    c.lstm.epochs = 150;
    return c;
}

std::string HarnessConfig::to_json() const {
    json j;
    j["dense"] = {{"layers", dense.layers},
                  {"nodes_per_layer", dense.nodes_per_layer},
                  {"dropout_fraction", dense.dropout_fraction},
                  {"learning_rate", dense.learning_rate},
                  {"batch_size", dense.batch_size},
                  {"epochs", dense.epochs}};
    j["lstm"] = {{"hidden_units", lstm.hidden_units},
                 {"dropout_fraction", lstm.dropout_fraction},
                 {"learning_rate", lstm.learning_rate},
                 {"batch_size", lstm.batch_size},
                 {"epochs", lstm.epochs}};
    j["pca_mode"] = pca_mode_name(pca_mode);
    j["pca_k"] = pca_k;
    j["rho"] = rho;
    j["pitch_phase_deg"] = pitch_phase_deg;
    j["per_cycle_weighting"] = per_cycle_weighting;
    return j.dump(2) + "\n";
}

namespace {

void require_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key)) throw SchemaError("harness config: unknown key '" + key + "' in " + where);
}

double num_field(const json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) throw SchemaError(std::string("harness config: '") + key + "' must be a number");
    return j[key].get<double>();
}

int int_field(const json& j, const char* key, int fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number_integer()) throw SchemaError(std::string("harness config: '") + key + "' must be an integer");
    return j[key].get<int>();
}

}  // namespace

HarnessConfig HarnessConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw InputError(std::string("harness config: JSON parse error: ") + e.what());
    }
    if (!j.is_object()) throw SchemaError("harness config: expected a JSON object");
    require_keys(j, {"dense", "lstm", "pca_mode", "pca_k", "rho", "pitch_phase_deg", "per_cycle_weighting"},
                 "top level");
    HarnessConfig c = defaults();
    if (j.contains("dense")) {
        const json& d = j["dense"];
        if (!d.is_object()) throw SchemaError("harness config: 'dense' must be an object");
        require_keys(d, {"layers", "nodes_per_layer", "dropout_fraction", "learning_rate", "batch_size", "epochs"},
                     "'dense'");
        c.dense.layers = int_field(d, "layers", c.dense.layers);
        c.dense.nodes_per_layer = int_field(d, "nodes_per_layer", c.dense.nodes_per_layer);
        c.dense.dropout_fraction = num_field(d, "dropout_fraction", c.dense.dropout_fraction);
        c.dense.learning_rate = num_field(d, "learning_rate", c.dense.learning_rate);
        c.dense.batch_size = int_field(d, "batch_size", c.dense.batch_size);
        c.dense.epochs = int_field(d, "epochs", c.dense.epochs);
    }
    if (j.contains("lstm")) {
        const json& d = j["lstm"];
        if (!d.is_object()) throw SchemaError("harness config: 'lstm' must be an object");
        require_keys(d, {"hidden_units", "dropout_fraction", "learning_rate", "batch_size", "epochs"}, "'lstm'");
        c.lstm.hidden_units = int_field(d, "hidden_units", c.lstm.hidden_units);
        c.lstm.dropout_fraction = num_field(d, "dropout_fraction", c.lstm.dropout_fraction);
        c.lstm.learning_rate = num_field(d, "learning_rate", c.lstm.learning_rate);
        c.lstm.batch_size = int_field(d, "batch_size", c.lstm.batch_size);
        c.lstm.epochs = int_field(d, "epochs", c.lstm.epochs);
    }
    if (j.contains("pca_mode")) {
        if (!j["pca_mode"].is_string()) throw SchemaError("harness config: 'pca_mode' must be a string");
        c.pca_mode = parse_pca_mode(j["pca_mode"].get<std::string>());
    }
    c.pca_k = int_field(j, "pca_k", c.pca_k);
    c.rho = num_field(j, "rho", c.rho);
    c.pitch_phase_deg = num_field(j, "pitch_phase_deg", c.pitch_phase_deg);
    if (j.contains("per_cycle_weighting")) {
        if (!j["per_cycle_weighting"].is_boolean())
            throw SchemaError("harness config: 'per_cycle_weighting' must be a boolean");
        c.per_cycle_weighting = j["per_cycle_weighting"].get<bool>();
    }
    if (c.pca_k < 1) throw ValidationError("harness config: pca_k must be >= 1");
    if (!(c.rho > 0)) throw ValidationError("harness config: rho must be > 0");
    DenseConfig dcheck = c.dense;
    dcheck.input_dim = 1;
    dcheck.validate();
    LstmConfig lcheck = c.lstm;
    lcheck.input_dim = 1;
    lcheck.validate();
    return c;
}

std::string EvalReport::to_json() const {
    json j;
    j["spec"] = spec_name;
    j["variant"] = variant_name(variant);
    j["architecture"] = arch_name(arch);
    j["no_eval_settings"] = no_eval_settings;
    j["per_cycle_weighting"] = per_cycle_weighting;
    j["excluded_mse"] = excluded_mse;
    j["model_val_mse"] = model_val_mse;
    j["reference_eval_mse"] = reference_eval_mse;
    j["reference_val_mse"] = reference_val_mse;
    j["per_setting"] = json::array();
    for (const auto& s : per_setting) {
        json e = key_json(s.key);
        e["mse"] = s.mse;
        e["n_cycles"] = s.n_cycles;
        j["per_setting"].push_back(e);
    }
    j["train_settings"] = json::array();
    for (const auto& k : train_settings) j["train_settings"].push_back(k.label());
    if (!no_eval_settings) {
        j["best_cycle"] = cycle_id_json(best);
        j["worst_cycle"] = cycle_id_json(worst);
    }
    return j.dump(2) + "\n";
}

std::string EvalReport::profiles_to_csv() const {
    std::string out = "which,shape,freq_hz,stroke_amp_deg,pitch_amp_deg,run,cycle,t_s,target,predicted\n";
    auto emit = [&](const char* which, const CycleProfile& p) {
        for (std::size_t i = 0; i < p.t_s.size(); ++i) {
            out += which;
            out += "," + p.id.key.shape + "," + fmt_double(p.id.key.freq_hz) + "," +
                   fmt_double(p.id.key.stroke_amp_deg) + "," + fmt_double(p.id.key.pitch_amp_deg) + "," +
                   std::to_string(p.id.run) + "," + std::to_string(p.id.cycle) + "," + fmt_double(p.t_s[i]) + "," +
                   fmt_double(p.target[i]) + "," + fmt_double(p.predicted[i]) + "\n";
        }
    };
    emit("best", best_profile);
    emit("worst", worst_profile);
    return out;
}

EvalReport run_gen_test(const GenTestSpec& spec, Variant variant, Arch arch, const Dataset& ds,
                        const HarnessConfig& cfg, std::uint64_t seed) {
    Rng master(seed);
    ReducedSplit split = assemble_reduced(ds, seed);
    Featurized F = featurize(ds, cfg);
    return run_gen_test_impl(spec, variant, arch, ds, F, split, cfg, master, nullptr);
}

SurrogateModel train_surrogate(const Dataset& ds, Variant variant, Arch arch, const HarnessConfig& cfg,
                               std::uint64_t seed) {
    Rng master(seed);
    ReducedSplit split = assemble_reduced(ds, seed);
    Featurized F = featurize(ds, cfg);
    std::string name = arch_name(arch) + "-" + variant_name(variant);
    std::uint64_t net_seed = master.substream("ref:" + variant_name(variant) + ":" + arch_name(arch)).next_u64();
    return train_variant_model(F, split.train, split.val, variant, arch, cfg, net_seed, "full-data " + name);
}

EvalReport evaluate_dataset(const SurrogateModel& model, const Dataset& ds, const HarnessConfig& cfg) {
    if (ds.cycles.empty()) throw ValidationError("evaluate_dataset: empty dataset");
    Featurized F = featurize(ds, cfg);
    EvalReport rep;
    rep.spec_name = "full-dataset";
    rep.variant = model.variant;
    rep.arch = model.arch;
    rep.per_cycle_weighting = cfg.per_cycle_weighting;
    rep.model_val_mse = model.history.val_mse.empty() ? kNan : model.history.val_mse.back();
    rep.reference_eval_mse = kNan;
    rep.reference_val_mse = kNan;
    EvalOutcome mo = evaluate_model(F, model, dataset_settings(ds), cfg.per_cycle_weighting);
    rep.per_setting = mo.per_setting;
    rep.excluded_mse = mo.overall;
    auto lt = [](const CycleId& x, const CycleId& y) { return x.mse < y.mse; };
    auto [bi, wi] = std::minmax_element(mo.cycle_ids.begin(), mo.cycle_ids.end(), lt);
    rep.best = *bi;
    rep.worst = *wi;
    rep.best_profile = make_profile(F, model, rep.best);
    rep.worst_profile = make_profile(F, model, rep.worst);
    return rep;
}

std::vector<DenseTrial> search_dense(const Dataset& ds, Variant variant, const DenseSearchSpace& space,
                                     int n_trials, const HarnessConfig& cfg, std::uint64_t seed, int jobs) {
    Rng master(seed);
    ReducedSplit split = assemble_reduced(ds, seed);
    Featurized F = featurize(ds, cfg);
    Tensors T = build_tensors(F, split.train, split.val, variant, Arch::dense, cfg);
    return random_search_dense(space, n_trials, T.tx, T.ty, T.vx, T.vy, master.substream("search").next_u64(), jobs);
}

std::vector<LstmTrial> search_lstm(const Dataset& ds, Variant variant, const LstmSearchSpace& space, int n_trials,
                                   const HarnessConfig& cfg, std::uint64_t seed, int jobs) {
    Rng master(seed);
    ReducedSplit split = assemble_reduced(ds, seed);
    Featurized F = featurize(ds, cfg);
    Tensors T = build_tensors(F, split.train, split.val, variant, Arch::recurrent, cfg);
    return random_search_lstm(space, n_trials, T.tseq, T.vseq, master.substream("search").next_u64(), jobs);
}

ComparisonTable compare_variants(const Dataset& ds, const std::vector<GenTestSpec>& specs,
                                 const HarnessConfig& cfg, std::uint64_t seed) {
    ComparisonTable t;
    for (const auto& s : specs) t.spec_names.push_back(s.name);
    Rng master(seed);
    ReducedSplit split = assemble_reduced(ds, seed);
    Featurized F = featurize(ds, cfg);
    for (Variant v : all_variants()) {
        for (Arch a : {Arch::dense, Arch::recurrent}) {
            std::string name = arch_name(a) + "-" + variant_name(v);
            std::uint64_t rseed = master.substream("ref:" + variant_name(v) + ":" + arch_name(a)).next_u64();
            SurrogateModel ref = train_variant_model(F, split.train, split.val, v, a, cfg, rseed, "full-data " + name);
            std::vector<double> row, refrow;
            for (const auto& spec : specs) {
                EvalReport rep = run_gen_test_impl(spec, v, a, ds, F, split, cfg, master, &ref);
                row.push_back(rep.excluded_mse);
                refrow.push_back(rep.reference_eval_mse);
            }
            t.model_names.push_back(name);
            t.avg_gt14.push_back(mean_over_named(row, t.spec_names, {"GT1", "GT2", "GT3", "GT4"}));
            t.avg_gt56.push_back(mean_over_named(row, t.spec_names, {"GT5", "GT6"}));
            t.mse.push_back(std::move(row));
            t.reference_eval.push_back(std::move(refrow));
            t.reference_val.push_back(ref.history.val_mse.empty() ? kNan : ref.history.val_mse.back());
        }
    }
    return t;
}

std::string ComparisonTable::to_csv() const {
    std::string out = "test";
    for (const auto& n : model_names) out += "," + n;
    out += "\nref_val_mse";
    for (double v : reference_val) out += "," + fmt_double(v);
    out += "\n";
    for (std::size_t s = 0; s < spec_names.size(); ++s) {
        out += spec_names[s];
        for (std::size_t m = 0; m < model_names.size(); ++m) out += "," + fmt_double(mse[m][s]);
        out += "\n";
    }
    out += "gt1_4_avg";
    for (double v : avg_gt14) out += "," + fmt_double(v);
    out += "\ngt5_6_avg";
    for (double v : avg_gt56) out += "," + fmt_double(v);
    out += "\n";
    return out;
}

std::string ComparisonTable::to_json() const {
    json j;
    j["specs"] = spec_names;
    j["models"] = json::array();
    for (std::size_t m = 0; m < model_names.size(); ++m) {
        json e;
        e["name"] = model_names[m];
        e["ref_val_mse"] = reference_val[m];
        e["avg_gt14"] = avg_gt14[m];
        e["avg_gt56"] = avg_gt56[m];
        json mm = json::object(), rr = json::object();
        for (std::size_t s = 0; s < spec_names.size(); ++s) {
            mm[spec_names[s]] = mse[m][s];
            rr[spec_names[s]] = reference_eval[m][s];
        }
        e["mse"] = mm;
        e["reference_eval_mse"] = rr;
        j["models"].push_back(e);
    }
    return j.dump(2) + "\n";
}

}  // namespace fincast
