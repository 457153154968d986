// end-to-end tests for the fincast command-line tool
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <sys/wait.h>
#include <filesystem>
#include <string>

#include "fincast/reduction.hpp"
#include "fincast/util.hpp"
#include "helpers.hpp"
#include "json.hpp"

using namespace fincast;
namespace fs = std::filesystem;

namespace {

const fs::path& work_dir() {
    static const fs::path dir = test_tmp_dir("fincast_cli_test");
    return dir;
}

struct RunResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    return fs::exists(p) ? read_text_file(p.string()) : std::string();
}

RunResult run_cli(const std::string& args) {
    fs::path o = work_dir() / "stdout.txt";
    fs::path e = work_dir() / "stderr.txt";
    std::string cmd = std::string(FINCAST_CLI_PATH) + " " + args + " >" + o.string() + " 2>" + e.string();
    int status = std::system(cmd.c_str());
    RunResult r;
    r.code = (status >= 0 && WIFEXITED(status)) ? WEXITSTATUS(status) : -1;
    r.out = slurp(o);
    r.err = slurp(e);
    return r;
}

// small guard-safe grid used by all data-dependent subcommand tests
const char* kGridConfig =
    "{\"grid\": {\"frequencies\": [1.0], \"pitch_amplitudes\": [0.0, 55.0],"
    " \"cycles_per_run\": 1, \"n_steps_per_cycle\": 32}}";

const char* kTinyHarness =
    "{\"harness\": {\"dense\": {\"epochs\": 3}, \"lstm\": {\"epochs\": 2, \"hidden_units\": 8}}}";

// generated once; most tests read from here
const fs::path& data_dir() {
    static const fs::path dir = [] {
        fs::path d = work_dir() / "data";
        write_text_file((work_dir() / "grid.json").string(), kGridConfig);
        RunResult r = run_cli("gen-data --config " + (work_dir() / "grid.json").string() + " --noise-std 0" +
                              " --seed 7 --out " + d.string());
        REQUIRE(r.code == 0);
        return d;
    }();
    return dir;
}

std::string data_csv() { return (data_dir() / "dataset.csv").string(); }

}  // namespace

TEST_CASE("help and usage errors") {
    RunResult help = run_cli("--help");
    CHECK(help.code == 0);
    CHECK(msg_has(help.out, "featurize"));
    CHECK(msg_has(help.out, "gen-data"));
    CHECK(msg_has(help.out, "gen-test"));

    CHECK(run_cli("").code == 2);                       // a subcommand is required
    CHECK(run_cli("frobnicate").code == 2);             // unknown subcommand
    CHECK(run_cli("gen-data --bogus-flag 1").code == 2);  // unknown flag
    CHECK(run_cli("featurize").code == 2);              // missing required --shape

    RunResult miss = run_cli("fit-pca --data /no/such/file.csv --out " + (work_dir() / "x").string());
    CHECK(miss.code == 2);
    CHECK(msg_has(miss.err, "/no/such/file.csv"));

    RunResult jobs = run_cli("gen-data --jobs 0 --out " + (work_dir() / "x").string());
    CHECK(jobs.code == 2);
    CHECK(msg_has(jobs.err, "--jobs"));
}

TEST_CASE("validation failures exit with code 3") {
    // four runs per setting is too few for the shape-separation guard
    auto cfgp = (work_dir() / "bad_grid.json").string();
    write_text_file(cfgp, "{\"grid\": {\"runs_per_setting\": 4}}");
    RunResult r = run_cli("gen-data --config " + cfgp + " --out " + (work_dir() / "bad").string());
    CHECK(r.code == 3);
    CHECK(msg_has(r.err, "not separable"));
}

TEST_CASE("featurize emits the analytic rectangle skeleton") {
    fs::path out = work_dir() / "feat_rect";
    RunResult r = run_cli("featurize --shape rect --out " + out.string());
    REQUIRE(r.code == 0);

    std::string csv = slurp(out / "skeleton_flat.csv");
    auto lines = split(csv, '\n');
    REQUIRE(lines.size() >= 11);
    CHECK(lines[0] == "strip,com_x_cm,com_z_cm,area_cm2");
    for (int k = 1; k <= 10; ++k) {
        auto f = split(lines[k], ',');
        REQUIRE(f.size() == 4);
        CHECK(parse_long(f[0]) == k);
        CHECK(parse_double(f[1]) == doctest::Approx(3.75).epsilon(1e-12));
        // cut locations come from area bisection, accurate to ~1e-11 here
        CHECK(parse_double(f[2]) == doctest::Approx((k - 0.5) * 2.0 + 3.175).epsilon(1e-9));
        CHECK(parse_double(f[3]) == doctest::Approx(20.0).epsilon(1e-12));
    }

    auto man = nlohmann::json::parse(slurp(out / "manifest.json"));
    CHECK(man["subcommand"] == "featurize");
    CHECK(man["outputs"].contains("skeleton_flat.csv"));
    CHECK_FALSE(man["outputs"].contains("skeleton_cycle.csv"));

    // unknown shape name resolves as a missing outline file
    CHECK(run_cli("featurize --shape hexagon --out " + out.string()).code == 2);
}

TEST_CASE("featurize with kinematics emits the rotated cycle") {
    fs::path out = work_dir() / "feat_cycle";
    RunResult r = run_cli("featurize --shape rect --stroke-amp 60 --freq 2 --steps 16 --out " + out.string());
    REQUIRE(r.code == 0);
    std::string csv = slurp(out / "skeleton_cycle.csv");
    auto lines = split(csv, '\n');
    REQUIRE(lines.size() >= 17);
    CHECK(msg_has(lines[0], "t_s,stroke_deg,pitch_deg,stroke_state"));
    CHECK(msg_has(lines[0], "p10_z_cm"));
    auto row0 = split(lines[1], ',');
    REQUIRE(row0.size() == 4 + 30);
    CHECK(parse_double(row0[0]) == 0.0);
    CHECK(parse_double(row0[1]) == 0.0);
    // at t=0 the skeleton is unrotated: p1 = (3.75, 0, 4.175)
    CHECK(parse_double(row0[4]) == doctest::Approx(3.75).epsilon(1e-12));
    CHECK(parse_double(row0[5]) == 0.0);
    CHECK(parse_double(row0[6]) == doctest::Approx(4.175).epsilon(1e-12));
    auto row1 = split(lines[2], ',');
    CHECK(parse_double(row1[0]) == doctest::Approx(1.0 / (2.0 * 16)).epsilon(1e-12));
}

TEST_CASE("gen-data writes a loadable dataset and is seed-reproducible") {
    std::string csv = slurp(data_dir() / "dataset.csv");
    CHECK(csv.rfind("shape,freq_hz,", 0) == 0);

    auto man = nlohmann::json::parse(slurp(data_dir() / "manifest.json"));
    CHECK(man["subcommand"] == "gen-data");
    CHECK(man["seed"] == 7);
    CHECK(man["effective_config"]["noise_std"] == 0.0);
    CHECK(man["effective_config"]["grid"]["runs_per_setting"] == 16);
    CHECK(man["outputs"].contains("dataset.csv"));

    // same seed, same bytes
    fs::path again = work_dir() / "data_again";
    auto gridp = (work_dir() / "grid.json").string();
    REQUIRE(run_cli("gen-data --config " + gridp + " --noise-std 0 --seed 7 --out " + again.string()).code == 0);
    CHECK(slurp(again / "dataset.csv") == csv);

    // the seed only enters through the noise draws, so compare noisy runs
    fs::path n7 = work_dir() / "data_n7";
    fs::path n8 = work_dir() / "data_n8";
    REQUIRE(run_cli("gen-data --config " + gridp + " --noise-std 1 --seed 7 --out " + n7.string()).code == 0);
    REQUIRE(run_cli("gen-data --config " + gridp + " --noise-std 1 --seed 8 --out " + n8.string()).code == 0);
    std::string noisy7 = slurp(n7 / "dataset.csv");
    CHECK(noisy7 != csv);
    CHECK(slurp(n8 / "dataset.csv") != noisy7);
}

TEST_CASE("noise metric separates noiseless from noisy datasets") {
    // noiseless: identical cycles leave only stroke-angle discretization
    // spread inside shared bins, orders of magnitude below injected noise
    fs::path out = work_dir() / "noise0";
    RunResult r = run_cli("noise --data " + data_csv() + " --out " + out.string());
    REQUIRE(r.code == 0);
    auto lines = split(slurp(out / "noise.csv"), '\n');
    REQUIRE(lines.size() >= 7);  // header + 6 settings + trailing empty
    CHECK(lines[0] == "shape,freq_hz,stroke_amp_deg,pitch_amp_deg,n_cycles,thrust_dev");
    for (int i = 1; i <= 6; ++i) {
        auto f = split(lines[i], ',');
        REQUIRE(f.size() == 6);
        CHECK(parse_long(f[4]) == 16);
        CHECK(parse_double(f[5]) < 1e-3);
    }
    CHECK(msg_has(r.err, "mean ThrustDev"));

    // noisy dataset on the same grid: pitched settings show the injected noise
    fs::path ndata = work_dir() / "data_noisy";
    auto gridp = (work_dir() / "grid.json").string();
    REQUIRE(run_cli("gen-data --config " + gridp + " --noise-std 1 --seed 7 --out " + ndata.string()).code == 0);
    fs::path nout = work_dir() / "noise1";
    RunResult rn = run_cli("noise --data " + (ndata / "dataset.csv").string() + " --out " + nout.string());
    REQUIRE(rn.code == 0);
    auto nlines = split(slurp(nout / "noise.csv"), '\n');
    REQUIRE(nlines.size() >= 7);
    int pitched = 0;
    for (int i = 1; i <= 6; ++i) {
        auto f = split(nlines[i], ',');
        REQUIRE(f.size() == 6);
        if (parse_double(f[3]) == 55.0) {
            CHECK(parse_double(f[5]) > 0.01);
            ++pitched;
        }
    }
    CHECK(pitched == 3);
}

TEST_CASE("fit-pca writes a loadable reducer and a summary") {
    fs::path out = work_dir() / "pca";
    RunResult r = run_cli("fit-pca --data " + data_csv() + " --mode weighted -k 4 --out " + out.string());
    REQUIRE(r.code == 0);

    PcaReducer red = PcaReducer::from_json(slurp(out / "pca.json"));
    CHECK(red.k == 4);
    CHECK(red.dim() == 30);

    auto sum = nlohmann::json::parse(slurp(out / "pca_summary.json"));
    CHECK(sum["mode"] == "weighted");
    CHECK(sum["k"] == 4);
    double cap = sum["captured_fraction"].get<double>();
    CHECK(cap > 0.0);
    CHECK(cap <= 1.0 + 1e-12);

    auto man = nlohmann::json::parse(slurp(out / "manifest.json"));
    CHECK(man["inputs"]["data"]["path"] == data_csv());
    CHECK(man["inputs"]["data"]["fnv1a64"].get<std::string>().size() == 16);

    CHECK(run_cli("fit-pca --data " + data_csv() + " --mode sideways --out " + out.string()).code == 2);
}

TEST_CASE("train, eval, and gen-test round trip through checkpoints") {
    auto hc = (work_dir() / "tiny.json").string();
    write_text_file(hc, kTinyHarness);

    fs::path tdir = work_dir() / "train";
    RunResult tr = run_cli("train --data " + data_csv() + " --variant fp --arch dense --config " + hc +
                           " --seed 5 --out " + tdir.string());
    REQUIRE(tr.code == 0);
    CHECK(msg_has(tr.err, "final val MSE"));
    auto hist = split(slurp(tdir / "history.csv"), '\n');
    REQUIRE(hist.size() >= 5);  // header + 3 epochs + trailing empty
    CHECK(hist[0] == "epoch,train_mse,val_mse");
    CHECK(split(hist[3], ',')[0] == "3");
    auto man = nlohmann::json::parse(slurp(tdir / "manifest.json"));
    CHECK(man["effective_config"]["variant"] == "fp");
    CHECK(man["effective_config"]["harness"]["dense"]["epochs"] == 3);

    fs::path edir = work_dir() / "eval";
    RunResult ev = run_cli("eval --model " + (tdir / "model.json").string() + " --data " + data_csv() +
                           " --config " + hc + " --out " + edir.string());
    REQUIRE(ev.code == 0);
    auto rep = nlohmann::json::parse(slurp(edir / "eval.json"));
    CHECK(rep["spec"] == "full-dataset");
    CHECK(rep["per_setting"].size() == 6);
    CHECK(rep["excluded_mse"].is_number());
    CHECK(slurp(edir / "profiles.csv").rfind("which,", 0) == 0);

    fs::path gdir = work_dir() / "gt5";
    RunResult gt = run_cli("gen-test --data " + data_csv() + " --spec GT5 --variant fp --arch dense --config " +
                           hc + " --seed 5 --out " + gdir.string());
    REQUIRE(gt.code == 0);
    auto grep_ = nlohmann::json::parse(slurp(gdir / "report.json"));
    CHECK(grep_["spec"] == "GT5");
    CHECK(grep_["excluded_mse"].is_number());
    CHECK(grep_["reference_eval_mse"].is_number());
    CHECK(msg_has(gt.err, "GT5 dense-fp excluded MSE"));

    CHECK(run_cli("gen-test --data " + data_csv() + " --spec GT9 --out " + gdir.string()).code == 2);
    CHECK(run_cli("gen-test --data " + data_csv() + " --out " + gdir.string()).code == 2);  // spec required
    CHECK(run_cli("train --data " + data_csv() + " --search -1 --out " + tdir.string()).code == 2);
}

TEST_CASE("train with random search ranks trials first") {
    auto hc = (work_dir() / "tiny.json").string();
    write_text_file(hc, kTinyHarness);
    fs::path sdir = work_dir() / "search";
    RunResult r = run_cli("train --data " + data_csv() + " --variant baseline --arch dense --search 2 --config " +
                          hc + " --seed 6 --out " + sdir.string());
    REQUIRE(r.code == 0);
    auto lines = split(slurp(sdir / "search.csv"), '\n');
    REQUIRE(lines.size() >= 4);  // header + 2 trials + trailing empty
    CHECK(lines[0] == "rank,trial,layers,nodes_per_layer,dropout_fraction,batch_size,learning_rate,seed,val_mse");
    auto r1 = split(lines[1], ',');
    auto r2 = split(lines[2], ',');
    CHECK(parse_double(r1[8]) <= parse_double(r2[8]));
    auto man = nlohmann::json::parse(slurp(sdir / "manifest.json"));
    CHECK(man["outputs"].contains("search.csv"));
    CHECK(man["outputs"].contains("model.json"));
}

TEST_CASE("compare runs the requested subset of tests") {
    auto hc = (work_dir() / "tiny.json").string();
    write_text_file(hc, kTinyHarness);
    fs::path cdir = work_dir() / "compare";
    RunResult r = run_cli("compare --data " + data_csv() + " --spec GT5 --spec GT6 --config " + hc +
                          " --seed 9 --out " + cdir.string());
    REQUIRE(r.code == 0);
    auto j = nlohmann::json::parse(slurp(cdir / "comparison.json"));
    REQUIRE(j["models"].size() == 8);
    CHECK(j["models"][0].contains("avg_gt56"));
    auto lines = split(slurp(cdir / "comparison.csv"), '\n');
    CHECK(lines[0].rfind("test,", 0) == 0);
    // header + ref row + 2 specs + 2 avg rows + trailing empty
    CHECK(lines.size() == 7);
}
