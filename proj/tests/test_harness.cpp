// tests for the generalizability harness: specs, reduced protocol, training
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>
#include <set>

#include "fincast/harness.hpp"
#include "fincast/util.hpp"
#include "helpers.hpp"
#include "json.hpp"

using namespace fincast;

namespace {

// small but guard-safe grid: 1 Hz only, two pitches, all shapes, 16 runs
DatasetGrid small_grid() {
    DatasetGrid g = DatasetGrid::default_grid();
    g.frequencies = {1.0};
    g.pitch_amplitudes = {0.0, 55.0};
    g.cycles_per_run = 3;
    g.exclusions.clear();
    return g;
}

const Dataset& small_dataset() {
    static const Dataset ds = generate_dataset(small_grid(), 0.0, 1234);
    return ds;
}

HarnessConfig tiny_config() {
    HarnessConfig c = HarnessConfig::defaults();
    c.dense.epochs = 4;
    c.lstm.epochs = 2;
    c.lstm.hidden_units = 8;
    return c;
}

// spec used by the wiring tests: hold out the rectangle at 55 deg pitch
GenTestSpec rect55_spec() {
    GenTestSpec s;
    s.name = "hold-rect55";
    s.eval_shapes = {"rect"};
    s.exclusions = {Exclusion("rect", std::numeric_limits<double>::quiet_NaN(), 55.0)};
    s.eval_settings = s.exclusions;
    return s;
}

int count_if_keys(const std::vector<SettingKey>& keys, bool (GenTestSpec::*pred)(const std::string&, double, double) const,
                  const GenTestSpec& spec) {
    int n = 0;
    for (const SettingKey& k : keys)
        if ((spec.*pred)(k.shape, k.freq_hz, k.pitch_amp_deg)) ++n;
    return n;
}

}  // namespace

TEST_CASE("six tests encode the protocol membership over the default grid") {
    const auto& tests = six_tests();
    REQUIRE(tests.size() == 6);
    auto keys = DatasetGrid::default_grid().enumerate();
    REQUIRE(keys.size() == 24);

    std::map<std::string, std::pair<int, int>> expect = {
        // name -> {excluded settings, scored settings} on the default grid
        {"GT1", {2, 2}},  {"GT2", {5, 4}},  {"GT3", {4, 3}},
        {"GT4", {5, 4}},  {"GT5", {14, 5}}, {"GT6", {14, 5}},
    };
    for (const GenTestSpec& spec : tests) {
        REQUIRE(expect.count(spec.name));
        CHECK(count_if_keys(keys, &GenTestSpec::excludes, spec) == expect[spec.name].first);
        CHECK(count_if_keys(keys, &GenTestSpec::evaluates, spec) == expect[spec.name].second);
        // scored settings are always withheld from training
        for (const SettingKey& k : keys)
            if (spec.evaluates(k.shape, k.freq_hz, k.pitch_amp_deg))
                CHECK(spec.excludes(k.shape, k.freq_hz, k.pitch_amp_deg));
    }

    // GT1 excludes exactly its two named settings
    const GenTestSpec& gt1 = find_test("GT1");
    for (const SettingKey& k : keys) {
        bool named = (k.shape == "rect" && k.freq_hz == 2.0 && k.pitch_amp_deg == 40.0) ||
                     (k.shape == "bio" && k.freq_hz == 1.0 && k.pitch_amp_deg == 15.0);
        CHECK(gt1.excludes(k.shape, k.freq_hz, k.pitch_amp_deg) == named);
    }
    // GT2 withholds a pitch amplitude everywhere but scores only rect/bio
    const GenTestSpec& gt2 = find_test("GT2");
    for (const SettingKey& k : keys) {
        CHECK(gt2.excludes(k.shape, k.freq_hz, k.pitch_amp_deg) == (k.pitch_amp_deg == 15.0));
        CHECK(gt2.evaluates(k.shape, k.freq_hz, k.pitch_amp_deg) ==
              (k.pitch_amp_deg == 15.0 && k.shape != "pt4"));
    }
    // GT5 withholds the high frequency and the whole rect shape, scoring
    // the rect at the trained frequency
    const GenTestSpec& gt5 = find_test("GT5");
    for (const SettingKey& k : keys) {
        CHECK(gt5.excludes(k.shape, k.freq_hz, k.pitch_amp_deg) == (k.freq_hz == 2.0 || k.shape == "rect"));
        CHECK(gt5.evaluates(k.shape, k.freq_hz, k.pitch_amp_deg) == (k.shape == "rect" && k.freq_hz == 1.0));
    }
    CHECK_THROWS_AS(find_test("GT7"), InputError);
}

TEST_CASE("reduced protocol picks one cycle per run and splits 80/20") {
    const Dataset& ds = small_dataset();  // 6 settings x 16 runs x 3 cycles
    ReducedSplit split = assemble_reduced(ds, 99);
    CHECK(split.train.size() + split.val.size() == 6u * 16);
    CHECK(split.val.size() == static_cast<size_t>(0.2 * 96));  // floor
    std::set<size_t> seen(split.train.begin(), split.train.end());
    for (size_t i : split.val) CHECK(seen.insert(i).second);  // disjoint
    CHECK(seen.size() == 96);

    // exactly one cycle picked per (setting, run)
    std::map<std::pair<std::string, int>, int> per_run;
    for (size_t i : seen) {
        const StrokeCycle& c = ds.cycles[i];
        per_run[{cycle_key(c).label(), c.run}]++;
    }
    CHECK(per_run.size() == 6u * 16);
    for (const auto& [k, n] : per_run) CHECK(n == 1);

    // deterministic in the seed, sensitive to it
    ReducedSplit again = assemble_reduced(ds, 99);
    CHECK(again.train == split.train);
    CHECK(again.val == split.val);
    ReducedSplit other = assemble_reduced(ds, 100);
    CHECK(other.train != split.train);
}

TEST_CASE("dataset features carry rotated skeletons and coefficients") {
    const Dataset& ds = small_dataset();
    DatasetFeatures feat = dataset_features(ds);
    REQUIRE(feat.skvec.size() == ds.cycles.size());
    REQUIRE(feat.coeff.size() == ds.cycles.size());

    const StrokeCycle& c = ds.cycles[0];
    REQUIRE(feat.skvec[0].size() == c.states.size());

    const FinShape& shape = builtin_shape(c.shape);
    FlatSkeleton flat = segment_fin(shape, AxisFrame{}, 10);
    double v = reference_tip_speed(shape, AxisFrame{}, c.setting);
    double denom = 0.5 * kRhoDefault * v * v * (shape.area() / 1e4);
    for (size_t j = 0; j < c.states.size(); j += 13) {
        REQUIRE(feat.skvec[0][j].size() == 30);
        auto expect = skeleton_to_vector(rotate_skeleton(flat, c.states[j].stroke_deg, c.states[j].pitch_deg));
        for (int m = 0; m < 30; ++m) CHECK(same_bits(feat.skvec[0][j][m], expect[m]));
        CHECK(feat.coeff[0][j] == doctest::Approx(c.thrust_n[j] / denom).epsilon(1e-12).scale(1));
    }
}

TEST_CASE("harness config json: defaults, partial override, rejection") {
    HarnessConfig def = HarnessConfig::defaults();
    HarnessConfig back = HarnessConfig::from_json(def.to_json());
    CHECK(back.dense.epochs == def.dense.epochs);
    CHECK(back.lstm.hidden_units == def.lstm.hidden_units);
    CHECK(back.pca_k == def.pca_k);
    CHECK(back.pca_mode == def.pca_mode);

    HarnessConfig partial = HarnessConfig::from_json("{\"dense\": {\"epochs\": 3}, \"pca_k\": 2}");
    CHECK(partial.dense.epochs == 3);
    CHECK(partial.pca_k == 2);
    CHECK(partial.dense.nodes_per_layer == def.dense.nodes_per_layer);
    CHECK(partial.lstm.epochs == def.lstm.epochs);

    CHECK_THROWS_AS(HarnessConfig::from_json("{\"dense\": {\"epcohs\": 3}}"), SchemaError);
    CHECK_THROWS_AS(HarnessConfig::from_json("{\"momentum\": 0.9}"), SchemaError);
    CHECK_THROWS_AS(HarnessConfig::from_json("{\"pca_k\": 0}"), ValidationError);
    CHECK_THROWS_AS(HarnessConfig::from_json("{\"rho\": -2}"), ValidationError);
    CHECK_THROWS_AS(HarnessConfig::from_json("nonsense"), InputError);
}

TEST_CASE("run_gen_test wires exclusions, scoring, and reports") {
    const Dataset& ds = small_dataset();
    GenTestSpec spec = rect55_spec();
    HarnessConfig cfg = tiny_config();

    EvalReport rep = run_gen_test(spec, Variant::fp, Arch::dense, ds, cfg, 2026);
    CHECK(rep.spec_name == "hold-rect55");
    CHECK(rep.variant == Variant::fp);
    CHECK(rep.arch == Arch::dense);
    CHECK_FALSE(rep.no_eval_settings);

    // the held-out setting never appears among the training settings
    for (const SettingKey& k : rep.train_settings) {
        CHECK_FALSE(spec.excludes(k.shape, k.freq_hz, k.pitch_amp_deg));
        CHECK_FALSE(spec.evaluates(k.shape, k.freq_hz, k.pitch_amp_deg));
    }
    CHECK(rep.train_settings.size() == 5);  // 6 settings minus the held-out one

    REQUIRE(rep.per_setting.size() == 1);
    CHECK(rep.per_setting[0].key.shape == "rect");
    CHECK(rep.per_setting[0].key.pitch_amp_deg == 55.0);
    CHECK(rep.per_setting[0].n_cycles == 48);  // all 16 runs x 3 cycles are scored
    CHECK(std::isfinite(rep.excluded_mse));
    CHECK(rep.excluded_mse >= 0);
    CHECK(rep.excluded_mse == doctest::Approx(rep.per_setting[0].mse));
    CHECK(std::isfinite(rep.model_val_mse));
    CHECK(std::isfinite(rep.reference_eval_mse));
    CHECK(std::isfinite(rep.reference_val_mse));

    // best/worst cycles come from the scored setting with full profiles
    CHECK(rep.best.mse <= rep.worst.mse);
    REQUIRE(rep.best_profile.t_s.size() == 64);
    REQUIRE(rep.best_profile.target.size() == 64);
    REQUIRE(rep.best_profile.predicted.size() == 64);
    for (double t : rep.best_profile.target) CHECK(std::isfinite(t));

    // report serializes
    auto j = nlohmann::json::parse(rep.to_json());
    CHECK(j["spec"] == "hold-rect55");
    CHECK(j["excluded_mse"].is_number());
    auto csv = rep.profiles_to_csv();
    CHECK(csv.find("which,shape") == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 2 * 64);
}

TEST_CASE("recurrent harness run scores whole cycles") {
    const Dataset& ds = small_dataset();
    EvalReport rep = run_gen_test(rect55_spec(), Variant::rfp, Arch::recurrent, ds, tiny_config(), 2027);
    CHECK(rep.arch == Arch::recurrent);
    CHECK(std::isfinite(rep.excluded_mse));
    CHECK(rep.per_setting[0].n_cycles == 48);
    REQUIRE(rep.worst_profile.predicted.size() == 64);
}

TEST_CASE("degenerate specs are flagged or rejected") {
    const Dataset& ds = small_dataset();
    HarnessConfig cfg = tiny_config();

    GenTestSpec no_eval = rect55_spec();
    no_eval.name = "holds-nothing-scored";
    no_eval.eval_settings = {Exclusion("rect", 9.0, 99.0)};  // matches nothing in the grid
    EvalReport rep = run_gen_test(no_eval, Variant::baseline, Arch::dense, ds, cfg, 1);
    CHECK(rep.no_eval_settings);
    CHECK(std::isnan(rep.excluded_mse));
    CHECK(rep.per_setting.empty());

    GenTestSpec all = rect55_spec();
    all.name = "excludes-everything";
    all.exclusions = {Exclusion()};  // wildcard
    CHECK_THROWS_AS(run_gen_test(all, Variant::baseline, Arch::dense, ds, cfg, 1), ValidationError);
}

TEST_CASE("train_surrogate reproduces the harness reference model") {
    const Dataset& ds = small_dataset();
    HarnessConfig cfg = tiny_config();
    std::uint64_t seed = 37;

    EvalReport rep = run_gen_test(rect55_spec(), Variant::fp, Arch::dense, ds, cfg, seed);
    SurrogateModel model = train_surrogate(ds, Variant::fp, Arch::dense, cfg, seed);
    CHECK(same_bits(model.history.val_mse.back(), rep.reference_val_mse));
}

TEST_CASE("surrogate models save and load byte-faithfully") {
    const Dataset& ds = small_dataset();
    HarnessConfig cfg = tiny_config();
    auto dir = test_tmp_dir("fincast_harness_test");

    // wfp carries a fitted reducer; exercise the full payload
    SurrogateModel m = train_surrogate(ds, Variant::wfp, Arch::dense, cfg, 55);
    REQUIRE(m.reducer.has_value());
    auto p = (dir / "model.json").string();
    m.save(p);
    SurrogateModel back = SurrogateModel::load(p);
    CHECK(back.arch == m.arch);
    CHECK(back.variant == m.variant);
    CHECK(back.input_dim() == m.input_dim());
    REQUIRE(back.reducer.has_value());
    CHECK(back.history.val_mse.size() == m.history.val_mse.size());

    DatasetFeatures feat = dataset_features(ds);
    const StrokeCycle& c = ds.cycles[10];
    std::vector<std::vector<double>> recs;
    for (size_t j = 0; j < 8; ++j) {
        auto red = m.reducer->project(feat.skvec[10][j]);
        recs.push_back(build_input_record(Variant::wfp, false, c.states[j], c.setting, nullptr, &red, nullptr));
    }
    auto p1 = m.predict_normalized(recs);
    auto p2 = back.predict_normalized(recs);
    REQUIRE(p1.size() == p2.size());
    for (size_t i = 0; i < p1.size(); ++i) CHECK(same_bits(p1[i], p2[i]));

    CHECK_THROWS_AS(SurrogateModel::load((dir / "absent.json").string()), InputError);
    auto trash = (dir / "trash.json").string();
    write_text_file(trash, "{\"version\": 1}");
    CHECK_THROWS_AS(SurrogateModel::load(trash), InputError);

    // recurrent model round trip
    SurrogateModel r = train_surrogate(ds, Variant::baseline, Arch::recurrent, cfg, 56);
    auto pr = (dir / "rmodel.json").string();
    r.save(pr);
    SurrogateModel rback = SurrogateModel::load(pr);
    CHECK(rback.arch == Arch::recurrent);
    CHECK((rback.lstm.w_gates - r.lstm.w_gates).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("evaluate_dataset scores every setting and honors cycle weighting") {
    const Dataset& ds = small_dataset();
    HarnessConfig cfg = tiny_config();
    SurrogateModel m = train_surrogate(ds, Variant::baseline, Arch::dense, cfg, 77);

    EvalReport rep = evaluate_dataset(m, ds, cfg);
    CHECK(rep.spec_name == "full-dataset");
    CHECK(rep.per_setting.size() == 6);
    CHECK(std::isnan(rep.reference_eval_mse));
    CHECK(std::isfinite(rep.excluded_mse));
    double mean_of_settings = 0;
    for (const auto& s : rep.per_setting) mean_of_settings += s.mse;
    mean_of_settings /= rep.per_setting.size();
    CHECK(rep.excluded_mse == doctest::Approx(mean_of_settings).epsilon(1e-12));

    // cycle weighting differs once per-setting cycle counts are unequal
    Dataset trimmed = ds;
    trimmed.cycles.resize(6 * 16 * 3 - 40);  // chop most of the last setting
    HarnessConfig weighted = cfg;
    weighted.per_cycle_weighting = true;
    EvalReport a = evaluate_dataset(m, trimmed, cfg);
    EvalReport b = evaluate_dataset(m, trimmed, weighted);
    CHECK(a.per_cycle_weighting == false);
    CHECK(b.per_cycle_weighting == true);
    CHECK(a.excluded_mse != b.excluded_mse);

    Dataset empty;
    CHECK_THROWS_AS(evaluate_dataset(m, empty, cfg), ValidationError);
}

TEST_CASE("harness search runs the reduced protocol deterministically") {
    const Dataset& ds = small_dataset();
    HarnessConfig cfg = tiny_config();
    DenseSearchSpace space;
    space.layers_min = 1;
    space.layers_max = 2;
    space.nodes_min = 4;
    space.nodes_max = 8;
    space.epochs = 3;
    auto t1 = search_dense(ds, Variant::baseline, space, 3, cfg, 11, 1);
    auto t2 = search_dense(ds, Variant::baseline, space, 3, cfg, 11, 2);
    REQUIRE(t1.size() == 3);
    for (size_t i = 0; i < t1.size(); ++i) {
        CHECK(t1[i].index == t2[i].index);
        CHECK(same_bits(t1[i].val_mse, t2[i].val_mse));
        CHECK(t1[i].cfg.input_dim == input_record_size(Variant::baseline, false, cfg.pca_k));
    }
    for (size_t i = 0; i + 1 < t1.size(); ++i) CHECK(t1[i].val_mse <= t1[i + 1].val_mse);

    LstmSearchSpace lspace;
    lspace.hidden_min = 2;
    lspace.hidden_max = 4;
    lspace.batch_min = 2;
    lspace.batch_max = 4;
    lspace.lr_min = 1e-3;
    lspace.lr_max = 1e-2;
    lspace.epochs = 2;
    auto lt = search_lstm(ds, Variant::rfp, lspace, 2, cfg, 12, 1);
    REQUIRE(lt.size() == 2);
    CHECK(lt[0].val_mse <= lt[1].val_mse);
    CHECK(lt[0].cfg.input_dim == input_record_size(Variant::rfp, true, cfg.pca_k));
}

TEST_CASE("compare_variants assembles the full table") {
    const Dataset& ds = small_dataset();
    HarnessConfig cfg = tiny_config();
    cfg.dense.epochs = 3;

    // GT5/GT6 make sense on the 1 Hz grid: hold out one shape, score it at 1 Hz
    std::vector<GenTestSpec> specs = {find_test("GT5"), find_test("GT6")};
    ComparisonTable table = compare_variants(ds, specs, cfg, 3030);

    REQUIRE(table.model_names.size() == 8);
    REQUIRE(table.spec_names == std::vector<std::string>{"GT5", "GT6"});
    REQUIRE(table.mse.size() == 8);
    for (const auto& row : table.mse) {
        REQUIRE(row.size() == 2);
        for (double v : row) CHECK(std::isfinite(v));
    }
    for (double v : table.reference_val) CHECK(std::isfinite(v));
    REQUIRE(table.avg_gt56.size() == 8);
    for (size_t m = 0; m < 8; ++m) {
        CHECK(table.avg_gt56[m] == doctest::Approx((table.mse[m][0] + table.mse[m][1]) / 2));
        CHECK(std::isnan(table.avg_gt14[m]));  // no GT1..GT4 specs in this run
    }

    // model naming covers both architectures and all variants
    std::set<std::string> names(table.model_names.begin(), table.model_names.end());
    CHECK(names.count("dense-baseline"));
    CHECK(names.count("dense-fp"));
    CHECK(names.count("recurrent-wfp"));

    auto csv = table.to_csv();
    CHECK(csv.find("test,") == 0);
    auto j = nlohmann::json::parse(table.to_json());
    CHECK(j.contains("models"));
}
