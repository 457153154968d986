#include <algorithm>
#include <atomic>
#include <limits>
#include <thread>

#include "fincast/nn.hpp"

namespace fincast {

namespace {

void check_range_int(int lo, int hi, int floor, const char* what) {
    if (lo < floor || hi < lo)
        throw ValidationError(std::string("search space: bad ") + what + " range [" + std::to_string(lo) + ", " +
                              std::to_string(hi) + "]");
}

void check_range_real(double lo, double hi, bool positive, const char* what) {
    if (!(lo <= hi) || (positive && !(lo > 0)) || (!positive && !(lo >= 0)))
        throw ValidationError(std::string("search space: bad ") + what + " range");
}

// runs jobs workers over n indexed tasks; results land in caller-owned slots,
// so the ranking below cannot depend on scheduling
template <typename Fn>
void run_indexed(int n, int jobs, Fn&& fn) {
    jobs = std::max(1, std::min(jobs, n));
    if (jobs == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (int w = 0; w < jobs; ++w)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    for (std::thread& th : pool) th.join();
}

}  // namespace

std::vector<DenseTrial> random_search_dense(const DenseSearchSpace& space, int n_trials,
                                            const std::vector<std::vector<double>>& train_x,
                                            const std::vector<double>& train_y,
                                            const std::vector<std::vector<double>>& val_x,
                                            const std::vector<double>& val_y, std::uint64_t seed, int jobs) {
    if (n_trials < 1) throw ValidationError("random_search: n_trials must be >= 1");
    check_range_int(space.layers_min, space.layers_max, 1, "layers");
    check_range_int(space.nodes_min, space.nodes_max, 1, "nodes");
    check_range_real(space.dropout_min, space.dropout_max, false, "dropout");
    if (space.dropout_max >= 1.0) throw ValidationError("search space: dropout_max must be < 1");
    check_range_int(space.batch_min, space.batch_max, 1, "batch");
    check_range_real(space.lr_min, space.lr_max, true, "learning rate");
    if (space.epochs < 1) throw ValidationError("search space: epochs must be >= 1");
    if (train_x.empty()) throw ValidationError("random_search: empty training data");
    int input_dim = static_cast<int>(train_x[0].size());

    Rng master(seed);
    std::vector<DenseTrial> trials(n_trials);
    for (int i = 0; i < n_trials; ++i) {
        Rng rng = master.substream("trial", static_cast<std::uint64_t>(i));
        DenseConfig c;
        c.input_dim = input_dim;
        c.layers = rng.uniform_int(space.layers_min, space.layers_max);
        c.nodes_per_layer = rng.uniform_int(space.nodes_min, space.nodes_max);
        c.dropout_fraction = rng.uniform(space.dropout_min, space.dropout_max);
        c.batch_size = rng.uniform_int(space.batch_min, space.batch_max);
        c.learning_rate = rng.log_uniform(space.lr_min, space.lr_max);
        c.epochs = space.epochs;
        c.seed = rng.next_u64();
        trials[i].index = i;
        trials[i].cfg = c;
    }
    run_indexed(n_trials, jobs, [&](int i) {
        try {
            DenseNet net = DenseNet::init(trials[i].cfg);
            TrainHistory h = train_dense(net, train_x, train_y, val_x, val_y);
            trials[i].val_mse = h.val_mse.back();
        } catch (const ValidationError&) {
            trials[i].val_mse = std::numeric_limits<double>::infinity();  // diverged trial ranks last
        }
    });
    std::stable_sort(trials.begin(), trials.end(),
                     [](const DenseTrial& a, const DenseTrial& b) { return a.val_mse < b.val_mse; });
    return trials;
}

std::vector<LstmTrial> random_search_lstm(const LstmSearchSpace& space, int n_trials,
                                          const std::vector<Sequence>& train, const std::vector<Sequence>& val,
                                          std::uint64_t seed, int jobs) {
    if (n_trials < 1) throw ValidationError("random_search: n_trials must be >= 1");
    check_range_int(space.hidden_min, space.hidden_max, 1, "hidden units");
    check_range_real(space.dropout_min, space.dropout_max, false, "dropout");
    if (space.dropout_max >= 1.0) throw ValidationError("search space: dropout_max must be < 1");
    check_range_int(space.batch_min, space.batch_max, 1, "batch");
    check_range_real(space.lr_min, space.lr_max, true, "learning rate");
    if (space.epochs < 1) throw ValidationError("search space: epochs must be >= 1");
    if (train.empty() || train[0].records.empty()) throw ValidationError("random_search: empty training data");
    int input_dim = static_cast<int>(train[0].records[0].size());

    Rng master(seed);
    std::vector<LstmTrial> trials(n_trials);
    for (int i = 0; i < n_trials; ++i) {
        Rng rng = master.substream("trial", static_cast<std::uint64_t>(i));
        LstmConfig c;
        c.input_dim = input_dim;
        c.hidden_units = rng.uniform_int(space.hidden_min, space.hidden_max);
        c.dropout_fraction = rng.uniform(space.dropout_min, space.dropout_max);
        c.batch_size = rng.uniform_int(space.batch_min, space.batch_max);
        c.learning_rate = rng.log_uniform(space.lr_min, space.lr_max);
        c.epochs = space.epochs;
        c.seed = rng.next_u64();
        trials[i].index = i;
        trials[i].cfg = c;
    }
    run_indexed(n_trials, jobs, [&](int i) {
        try {
            LstmNet net = LstmNet::init(trials[i].cfg);
            TrainHistory h = train_lstm(net, train, val);
            trials[i].val_mse = h.val_mse.back();
        } catch (const ValidationError&) {
            trials[i].val_mse = std::numeric_limits<double>::infinity();
        }
    });
    std::stable_sort(trials.begin(), trials.end(),
                     [](const LstmTrial& a, const LstmTrial& b) { return a.val_mse < b.val_mse; });
    return trials;
}

}  // namespace fincast
