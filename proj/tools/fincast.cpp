// command-line front end for the flapping-fin surrogate pipeline
#include <algorithm>
#include <cctype>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fincast/geom.hpp"
#include "fincast/harness.hpp"
#include "fincast/kinematics.hpp"
#include "fincast/model.hpp"
#include "fincast/nn.hpp"
#include "fincast/preprocess.hpp"
#include "fincast/reduction.hpp"
#include "fincast/synthdata.hpp"
#include "fincast/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fincast;

namespace {

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

double popstd(const std::vector<double>& xs) {
    if (xs.empty()) return 0;
    double m = 0;
    for (double x : xs) m += x;
    m /= static_cast<double>(xs.size());
    double acc = 0;
    for (double x : xs) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(xs.size()));
}

// shared flags; every subcommand gets the same quartet
struct Common {
    std::string config;
    std::uint64_t seed = 0;
    std::string out = ".";
    int jobs = 1;
};

void add_common(CLI::App* cmd, Common& o) {
    cmd->add_option("--config", o.config, "JSON config file (flags override file values)");
    cmd->add_option("--seed", o.seed, "master seed (default 0)");
    cmd->add_option("--out", o.out, "output directory (default .)");
    cmd->add_option("--jobs", o.jobs, "max worker threads (default 1)");
}

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::string text = read_text_file(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw InputError("config " + path + ": JSON parse error: " + e.what());
    }
    if (!j.is_object()) throw SchemaError("config " + path + ": expected a JSON object");
    return j;
}

// every run drops a manifest: effective config + seed + artifact hashes
struct Manifest {
    json j;
    fs::path dir;

    Manifest(const std::string& sub, const Common& o, int argc, char** argv) : dir(o.out) {
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw InputError("cannot create output directory " + o.out + ": " + ec.message());
        j["tool"] = "fincast";
        j["subcommand"] = sub;
        j["seed"] = o.seed;
        j["jobs"] = o.jobs;
        j["argv"] = json::array();
        for (int i = 0; i < argc; ++i) j["argv"].push_back(argv[i]);
        j["inputs"] = json::object();
        j["outputs"] = json::object();
    }

    fs::path path(const std::string& fname) const { return dir / fname; }

    void input(const std::string& label, const std::string& p) {
        j["inputs"][label] = {{"path", p}, {"fnv1a64", hex64(hash_file(p))}};
    }

    void config(json effective) { j["effective_config"] = std::move(effective); }

    void output(const std::string& fname, const std::string& content) {
        write_text_file(path(fname).string(), content);
        j["outputs"][fname] = hex64(hash_file(path(fname).string()));
        std::cerr << "[fincast] wrote " << path(fname).string() << "\n";
    }

    // for artifacts written by library code (dataset CSV, model checkpoint)
    void output_existing(const std::string& fname) {
        j["outputs"][fname] = hex64(hash_file(path(fname).string()));
        std::cerr << "[fincast] wrote " << path(fname).string() << "\n";
    }

    void write() { write_text_file(path("manifest.json").string(), j.dump(2) + "\n"); }
};

double cfg_num(const json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) throw SchemaError(std::string("config: '") + key + "' must be a number");
    return j[key].get<double>();
}

int cfg_int(const json& j, const char* key, int fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number_integer()) throw SchemaError(std::string("config: '") + key + "' must be an integer");
    return j[key].get<int>();
}

std::string cfg_str(const json& j, const char* key, const std::string& fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_string()) throw SchemaError(std::string("config: '") + key + "' must be a string");
    return j[key].get<std::string>();
}

HarnessConfig harness_from(const json& cfg) {
    if (!cfg.contains("harness")) return HarnessConfig::defaults();
    return HarnessConfig::from_json(cfg["harness"].dump());
}

FinShape resolve_shape(const std::string& arg) {
    for (const auto& s : builtin_shapes())
        if (s.name == arg) return s;
    return load_shape(arg);
}

// ---------------------------------------------------------------- featurize

struct FeaturizeOpts {
    Common common;
    std::string shape;
    double stroke_amp = 0, pitch_amp = 0, freq = 1, pitch_phase = 90;
    int steps = 64;
    bool with_cycle = false;
};

int cmd_featurize(const FeaturizeOpts& o, int argc, char** argv) {
    json cfg = load_config(o.common.config);
    AxisFrame frame;
    frame.stroke_axis_offset = cfg_num(cfg, "stroke_axis_offset", frame.stroke_axis_offset);
    frame.pitch_axis_offset = cfg_num(cfg, "pitch_axis_offset", frame.pitch_axis_offset);
    frame.validate();
    int n_strips = cfg_int(cfg, "n_strips", 10);

    FinShape shape = resolve_shape(o.shape);
    FlatSkeleton flat = segment_fin(shape, frame, n_strips);

    Manifest man("featurize", o.common, argc, argv);
    json eff{{"shape", o.shape},
             {"stroke_axis_offset", frame.stroke_axis_offset},
             {"pitch_axis_offset", frame.pitch_axis_offset},
             {"n_strips", n_strips}};
    if (fs::exists(o.shape)) man.input("shape", o.shape);

    std::string flat_csv = "strip,com_x_cm,com_z_cm,area_cm2\n";
    for (std::size_t i = 0; i < flat.coms.size(); ++i)
        flat_csv += std::to_string(i + 1) + "," + fmt_double(flat.coms[i].x) + "," + fmt_double(flat.coms[i].z) +
                    "," + fmt_double(flat.strip_areas[i]) + "\n";
    man.output("skeleton_flat.csv", flat_csv);

    if (o.with_cycle) {
        KinematicSetting setting;
        setting.stroke_amplitude_deg = o.stroke_amp;
        setting.pitch_amplitude_deg = o.pitch_amp;
        setting.flap_frequency_hz = o.freq;
        setting.n_steps_per_cycle = o.steps;
        eff["setting"] = {{"stroke_amplitude_deg", o.stroke_amp},
                          {"pitch_amplitude_deg", o.pitch_amp},
                          {"flap_frequency_hz", o.freq},
                          {"n_steps_per_cycle", o.steps},
                          {"pitch_phase_deg", o.pitch_phase}};
        std::string csv = "t_s,stroke_deg,pitch_deg,stroke_state";
        for (int i = 1; i <= n_strips; ++i) {
            std::string p = "p" + std::to_string(i);
            csv += "," + p + "_x_cm," + p + "_y_cm," + p + "_z_cm";
        }
        csv += "\n";
        for (const auto& st : generate_cycle(setting, o.pitch_phase)) {
            csv += fmt_double(st.t_s) + "," + fmt_double(st.stroke_deg) + "," + fmt_double(st.pitch_deg) + "," +
                   std::to_string(st.stroke_state);
            for (double v : skeleton_to_vector(rotate_skeleton(flat, st.stroke_deg, st.pitch_deg)))
                csv += "," + fmt_double(v);
            csv += "\n";
        }
        man.output("skeleton_cycle.csv", csv);
    }
    man.config(eff);
    man.write();
    return 0;
}

// ----------------------------------------------------------------- gen-data

int cmd_gen_data(const Common& o, double noise_std, bool noise_given, int argc, char** argv) {
    json cfg = load_config(o.config);
    DatasetGrid grid =
        cfg.contains("grid") ? DatasetGrid::from_json(cfg["grid"].dump()) : DatasetGrid::default_grid();
    double eff_noise = noise_given ? noise_std : cfg_num(cfg, "noise_std", noise_std);

    Dataset ds = generate_dataset(grid, eff_noise, o.seed);

    Manifest man("gen-data", o, argc, argv);
    man.config(json{{"grid", json::parse(grid.to_json())}, {"noise_std", eff_noise}});
    save_dataset(ds, man.path("dataset.csv").string());
    man.output_existing("dataset.csv");
    man.write();
    std::cerr << "[fincast] " << dataset_settings(ds).size() << " settings, " << ds.cycles.size() << " cycles\n";
    return 0;
}

// ------------------------------------------------------------------ fit-pca

struct FitPcaOpts {
    Common common;
    std::string data;
    std::string mode = "weighted";
    int k = 4;
    double rho = kRhoDefault, pitch_phase = 90;
};

int cmd_fit_pca(const FitPcaOpts& o, CLI::App* sub, int argc, char** argv) {
    json cfg = load_config(o.common.config);
    std::string mode_s = sub->count("--mode") ? o.mode : cfg_str(cfg, "mode", o.mode);
    int k = sub->count("-k") ? o.k : cfg_int(cfg, "k", o.k);
    double rho = sub->count("--rho") ? o.rho : cfg_num(cfg, "rho", o.rho);
    double phase = sub->count("--pitch-phase") ? o.pitch_phase : cfg_num(cfg, "pitch_phase_deg", o.pitch_phase);
    PcaMode mode = parse_pca_mode(lower(mode_s));

    Dataset ds = load_dataset(o.data);
    DatasetFeatures F = dataset_features(ds, rho, phase);
    std::vector<std::vector<double>> sks;
    std::vector<double> coeffs;
    for (std::size_t ci = 0; ci < F.skvec.size(); ++ci)
        for (std::size_t j = 0; j < F.skvec[ci].size(); ++j) {
            sks.push_back(F.skvec[ci][j]);
            coeffs.push_back(F.coeff[ci][j]);
        }
    double scale = popstd(coeffs);
    if (!(scale > 0)) throw ValidationError("fit-pca: constant thrust coefficient over the dataset");
    std::vector<double> nthr(coeffs.size());
    for (std::size_t i = 0; i < coeffs.size(); ++i) nthr[i] = coeffs[i] / scale;

    PcaReducer red = fit_pca(sks, mode == PcaMode::weighted ? &nthr : nullptr, mode, k);

    Manifest man("fit-pca", o.common, argc, argv);
    man.input("data", o.data);
    man.config(json{{"mode", pca_mode_name(mode)}, {"k", k}, {"rho", rho}, {"pitch_phase_deg", phase}});
    man.output("pca.json", red.to_json());

    json summary{{"mode", pca_mode_name(mode)}, {"k", k}, {"n_samples", sks.size()}};
    summary["component_stds"] = red.component_stds;
    double captured = std::numeric_limits<double>::quiet_NaN();
    int d = red.dim();
    if (static_cast<int>(sks.size()) > d) {
        PcaReducer full = fit_pca(sks, mode == PcaMode::weighted ? &nthr : nullptr, mode, d);
        double total = 0, top = 0;
        for (double s : full.component_stds) total += s * s;
        for (double s : red.component_stds) top += s * s;
        if (total > 0) captured = top / total;
    }
    summary["captured_fraction"] = captured;
    man.output("pca_summary.json", summary.dump(2) + "\n");
    man.write();
    return 0;
}

// -------------------------------------------------------------------- train

struct TrainOpts {
    Common common;
    std::string data;
    std::string variant = "fp";
    std::string arch = "dense";
    int search = 0;
};

int cmd_train(const TrainOpts& o, CLI::App* sub, int argc, char** argv) {
    json cfg = load_config(o.common.config);
    Variant v = parse_variant(lower(sub->count("--variant") ? o.variant : cfg_str(cfg, "variant", o.variant)));
    Arch a = parse_arch(lower(sub->count("--arch") ? o.arch : cfg_str(cfg, "arch", o.arch)));
    int search = sub->count("--search") ? o.search : cfg_int(cfg, "search_trials", o.search);
    if (search < 0) throw InputError("train: --search must be >= 0");
    HarnessConfig hc = harness_from(cfg);

    Dataset ds = load_dataset(o.data);
    Manifest man("train", o.common, argc, argv);
    man.input("data", o.data);

    if (search > 0) {
        std::string csv;
        if (a == Arch::dense) {
            DenseSearchSpace space;
            space.epochs = hc.dense.epochs;
            auto trials = search_dense(ds, v, space, search, hc, o.common.seed, o.common.jobs);
            csv = "rank,trial,layers,nodes_per_layer,dropout_fraction,batch_size,learning_rate,seed,val_mse\n";
            for (std::size_t r = 0; r < trials.size(); ++r) {
                const auto& t = trials[r];
                csv += std::to_string(r + 1) + "," + std::to_string(t.index) + "," + std::to_string(t.cfg.layers) +
                       "," + std::to_string(t.cfg.nodes_per_layer) + "," + fmt_double(t.cfg.dropout_fraction) + "," +
                       std::to_string(t.cfg.batch_size) + "," + fmt_double(t.cfg.learning_rate) + "," +
                       hex64(t.cfg.seed) + "," + fmt_double(t.val_mse) + "\n";
            }
            DenseConfig best = trials.front().cfg;
            hc.dense = best;
        } else {
            LstmSearchSpace space;
            space.epochs = hc.lstm.epochs;
            auto trials = search_lstm(ds, v, space, search, hc, o.common.seed, o.common.jobs);
            csv = "rank,trial,hidden_units,dropout_fraction,batch_size,learning_rate,seed,val_mse\n";
            for (std::size_t r = 0; r < trials.size(); ++r) {
                const auto& t = trials[r];
                csv += std::to_string(r + 1) + "," + std::to_string(t.index) + "," +
                       std::to_string(t.cfg.hidden_units) + "," + fmt_double(t.cfg.dropout_fraction) + "," +
                       std::to_string(t.cfg.batch_size) + "," + fmt_double(t.cfg.learning_rate) + "," +
                       hex64(t.cfg.seed) + "," + fmt_double(t.val_mse) + "\n";
            }
            LstmConfig best = trials.front().cfg;
            hc.lstm = best;
        }
        man.output("search.csv", csv);
    }

    SurrogateModel model = train_surrogate(ds, v, a, hc, o.common.seed);
    model.save(man.path("model.json").string());
    man.output_existing("model.json");

    std::string hist = "epoch,train_mse,val_mse\n";
    for (std::size_t e = 0; e < model.history.train_mse.size(); ++e)
        hist += std::to_string(e + 1) + "," + fmt_double(model.history.train_mse[e]) + "," +
                fmt_double(model.history.val_mse[e]) + "\n";
    man.output("history.csv", hist);

    man.config(json{{"variant", variant_name(v)},
                    {"arch", arch_name(a)},
                    {"search_trials", search},
                    {"harness", json::parse(hc.to_json())}});
    man.write();
    std::cerr << "[fincast] final val MSE " << fmt_double(model.history.val_mse.back()) << "\n";
    return 0;
}

// --------------------------------------------------------------------- eval

int cmd_eval(const Common& o, const std::string& model_path, const std::string& data, int argc, char** argv) {
    json cfg = load_config(o.config);
    HarnessConfig hc = harness_from(cfg);
    SurrogateModel model = SurrogateModel::load(model_path);
    Dataset ds = load_dataset(data);
    EvalReport rep = evaluate_dataset(model, ds, hc);

    Manifest man("eval", o, argc, argv);
    man.input("model", model_path);
    man.input("data", data);
    man.config(json{{"harness", json::parse(hc.to_json())}});
    man.output("eval.json", rep.to_json());
    man.output("profiles.csv", rep.profiles_to_csv());
    man.write();
    std::cerr << "[fincast] overall MSE " << fmt_double(rep.excluded_mse) << "\n";
    return 0;
}

// ----------------------------------------------------------------- gen-test

struct GenTestOpts {
    Common common;
    std::string data;
    std::string spec;
    std::string variant = "fp";
    std::string arch = "dense";
};

int cmd_gen_test(const GenTestOpts& o, CLI::App* sub, int argc, char** argv) {
    json cfg = load_config(o.common.config);
    std::string spec_name = sub->count("--spec") ? o.spec : cfg_str(cfg, "spec", o.spec);
    if (spec_name.empty()) throw InputError("gen-test: --spec is required (GT1..GT6)");
    Variant v = parse_variant(lower(sub->count("--variant") ? o.variant : cfg_str(cfg, "variant", o.variant)));
    Arch a = parse_arch(lower(sub->count("--arch") ? o.arch : cfg_str(cfg, "arch", o.arch)));
    HarnessConfig hc = harness_from(cfg);

    const GenTestSpec& spec = find_test(spec_name);
    Dataset ds = load_dataset(o.data);
    EvalReport rep = run_gen_test(spec, v, a, ds, hc, o.common.seed);

    Manifest man("gen-test", o.common, argc, argv);
    man.input("data", o.data);
    man.config(json{{"spec", spec.name},
                    {"variant", variant_name(v)},
                    {"arch", arch_name(a)},
                    {"harness", json::parse(hc.to_json())}});
    man.output("report.json", rep.to_json());
    man.output("profiles.csv", rep.profiles_to_csv());
    man.write();
    std::cerr << "[fincast] " << spec.name << " " << arch_name(a) << "-" << variant_name(v) << " excluded MSE "
              << fmt_double(rep.excluded_mse) << " (full-data " << fmt_double(rep.reference_eval_mse) << ")\n";
    return 0;
}

// ------------------------------------------------------------------ compare

int cmd_compare(const Common& o, const std::string& data, const std::vector<std::string>& spec_names, int argc,
                char** argv) {
    json cfg = load_config(o.config);
    HarnessConfig hc = harness_from(cfg);
    std::vector<std::string> names = spec_names;
    if (names.empty() && cfg.contains("specs")) {
        if (!cfg["specs"].is_array()) throw SchemaError("config: 'specs' must be an array of test names");
        for (const auto& e : cfg["specs"]) names.push_back(e.get<std::string>());
    }
    std::vector<GenTestSpec> specs;
    if (names.empty()) {
        specs = six_tests();
    } else {
        for (const auto& n : names) specs.push_back(find_test(n));
    }

    Dataset ds = load_dataset(data);
    ComparisonTable table = compare_variants(ds, specs, hc, o.seed);

    Manifest man("compare", o, argc, argv);
    man.input("data", data);
    json spec_list = json::array();
    for (const auto& s : specs) spec_list.push_back(s.name);
    man.config(json{{"specs", spec_list}, {"harness", json::parse(hc.to_json())}});
    man.output("comparison.csv", table.to_csv());
    man.output("comparison.json", table.to_json());
    man.write();
    return 0;
}

// -------------------------------------------------------------------- noise

struct NoiseOpts {
    Common common;
    std::string data;
    int bins = 100;
    double rho = kRhoDefault, pitch_phase = 90;
};

int cmd_noise(const NoiseOpts& o, CLI::App* sub, int argc, char** argv) {
    json cfg = load_config(o.common.config);
    int bins = sub->count("--bins") ? o.bins : cfg_int(cfg, "bins", o.bins);
    double rho = sub->count("--rho") ? o.rho : cfg_num(cfg, "rho", o.rho);
    double phase = sub->count("--pitch-phase") ? o.pitch_phase : cfg_num(cfg, "pitch_phase_deg", o.pitch_phase);

    Dataset ds = load_dataset(o.data);
    DatasetFeatures F = dataset_features(ds, rho, phase);
    std::vector<double> all;
    for (const auto& c : F.coeff) all.insert(all.end(), c.begin(), c.end());
    double scale = popstd(all);
    if (!(scale > 0)) throw ValidationError("noise: constant thrust coefficient over the dataset");

    std::string csv = "shape,freq_hz,stroke_amp_deg,pitch_amp_deg,n_cycles,thrust_dev\n";
    double acc = 0;
    int n = 0;
    for (const auto& key : dataset_settings(ds)) {
        std::vector<std::vector<DevSample>> cycles;
        for (std::size_t ci = 0; ci < ds.cycles.size(); ++ci) {
            if (cycle_key(ds.cycles[ci]) != key) continue;
            std::vector<DevSample> samples;
            samples.reserve(ds.cycles[ci].states.size());
            for (std::size_t j = 0; j < ds.cycles[ci].states.size(); ++j)
                samples.push_back({ds.cycles[ci].states[j].stroke_deg, ds.cycles[ci].states[j].stroke_state,
                                   F.coeff[ci][j] / scale});
            cycles.push_back(std::move(samples));
        }
        double dev = thrust_deviation(cycles, bins);
        acc += dev;
        ++n;
        csv += key.shape + "," + fmt_double(key.freq_hz) + "," + fmt_double(key.stroke_amp_deg) + "," +
               fmt_double(key.pitch_amp_deg) + "," + std::to_string(cycles.size()) + "," + fmt_double(dev) + "\n";
        std::cerr << "[fincast] " << key.label() << " ThrustDev " << fmt_double(dev) << "\n";
    }

    Manifest man("noise", o.common, argc, argv);
    man.input("data", o.data);
    man.config(json{{"bins", bins}, {"rho", rho}, {"pitch_phase_deg", phase}});
    man.output("noise.csv", csv);
    man.write();
    std::cerr << "[fincast] mean ThrustDev " << fmt_double(n ? acc / n : 0.0) << " over " << n << " settings\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"flapping-fin surrogate thrust pipeline"};
    app.require_subcommand(1);

    FeaturizeOpts fo;
    auto* featurize = app.add_subcommand("featurize", "segment a fin outline and emit its skeleton");
    add_common(featurize, fo.common);
    featurize->add_option("--shape", fo.shape, "builtin shape name (rect|bio|pt4) or outline JSON path")
        ->required();
    featurize->add_option("--stroke-amp", fo.stroke_amp, "stroke amplitude deg");
    featurize->add_option("--pitch-amp", fo.pitch_amp, "pitch amplitude deg");
    featurize->add_option("--freq", fo.freq, "flap frequency Hz");
    featurize->add_option("--steps", fo.steps, "samples per cycle");
    featurize->add_option("--pitch-phase", fo.pitch_phase, "pitch phase lead deg");

    Common go;
    double noise_std = 1.0;
    auto* gen_data = app.add_subcommand("gen-data", "generate the synthetic dataset CSV");
    add_common(gen_data, go);
    gen_data->add_option("--noise-std", noise_std, "noise level multiplier (default 1.0)");

    FitPcaOpts po;
    auto* fit_pca_cmd = app.add_subcommand("fit-pca", "fit a skeleton PCA reduction on a dataset");
    add_common(fit_pca_cmd, po.common);
    fit_pca_cmd->add_option("--data", po.data, "dataset CSV")->required();
    fit_pca_cmd->add_option("--mode", po.mode, "weighted|unweighted (default weighted)");
    fit_pca_cmd->add_option("-k", po.k, "number of components (default 4)");
    fit_pca_cmd->add_option("--rho", po.rho, "fluid density kg/m^3");
    fit_pca_cmd->add_option("--pitch-phase", po.pitch_phase, "pitch phase lead deg");

    TrainOpts to;
    auto* train = app.add_subcommand("train", "train one surrogate on the reduced protocol");
    add_common(train, to.common);
    train->add_option("--data", to.data, "dataset CSV")->required();
    train->add_option("--variant", to.variant, "baseline|fp|rfp|wfp (default fp)");
    train->add_option("--arch", to.arch, "dense|recurrent (default dense)");
    train->add_option("--search", to.search, "random-search trials before the final fit (default 0)");

    Common eo;
    std::string eval_model, eval_data;
    auto* eval = app.add_subcommand("eval", "score a trained model on a dataset");
    add_common(eval, eo);
    eval->add_option("--model", eval_model, "model checkpoint JSON")->required();
    eval->add_option("--data", eval_data, "dataset CSV")->required();

    GenTestOpts gt;
    auto* gen_test = app.add_subcommand("gen-test", "run one generalizability test");
    add_common(gen_test, gt.common);
    gen_test->add_option("--data", gt.data, "dataset CSV")->required();
    gen_test->add_option("--spec", gt.spec, "test name (GT1..GT6)");
    gen_test->add_option("--variant", gt.variant, "baseline|fp|rfp|wfp (default fp)");
    gen_test->add_option("--arch", gt.arch, "dense|recurrent (default dense)");

    Common co;
    std::string compare_data;
    std::vector<std::string> compare_specs;
    auto* compare = app.add_subcommand("compare", "run the full variant/architecture comparison");
    add_common(compare, co);
    compare->add_option("--data", compare_data, "dataset CSV")->required();
    compare->add_option("--spec", compare_specs, "subset of tests (default all six)");

    NoiseOpts no;
    auto* noise = app.add_subcommand("noise", "per-setting ThrustDev noise metric");
    add_common(noise, no.common);
    noise->add_option("--data", no.data, "dataset CSV")->required();
    noise->add_option("--bins", no.bins, "stroke-angle bins (default 100)");
    noise->add_option("--rho", no.rho, "fluid density kg/m^3");
    noise->add_option("--pitch-phase", no.pitch_phase, "pitch phase lead deg");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        fo.with_cycle = featurize->count("--stroke-amp") || featurize->count("--pitch-amp") ||
                        featurize->count("--freq") || featurize->count("--steps") ||
                        featurize->count("--pitch-phase");
        for (const Common* c : {&fo.common, &go, &po.common, &to.common, &eo, &gt.common, &co, &no.common})
            if (c->jobs < 1) throw InputError("--jobs must be >= 1");
        if (app.got_subcommand(featurize)) return cmd_featurize(fo, argc, argv);
        if (app.got_subcommand(gen_data)) return cmd_gen_data(go, noise_std, gen_data->count("--noise-std") > 0, argc, argv);
        if (app.got_subcommand(fit_pca_cmd)) return cmd_fit_pca(po, fit_pca_cmd, argc, argv);
        if (app.got_subcommand(train)) return cmd_train(to, train, argc, argv);
        if (app.got_subcommand(eval)) return cmd_eval(eo, eval_model, eval_data, argc, argv);
        if (app.got_subcommand(gen_test)) return cmd_gen_test(gt, gen_test, argc, argv);
        if (app.got_subcommand(compare)) return cmd_compare(co, compare_data, compare_specs, argc, argv);
        if (app.got_subcommand(noise)) return cmd_noise(no, noise, argc, argv);
        std::cerr << "error: no subcommand\n";
        return 2;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}
