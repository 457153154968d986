#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "fincast/util.hpp"

namespace fincast {

// Feed-forward regressor: `layers` tanh hidden layers of `nodes_per_layer`
// units, linear scalar head, inverted dropout on hidden activations while
// training. 64-bit everywhere; tiny models, determinism over speed.
struct DenseConfig {
    int input_dim = 1;
    int layers = 2;
    int nodes_per_layer = 64;
    double dropout_fraction = 0.0;
    double learning_rate = 1e-3;
    int batch_size = 32;
    int epochs = 100;
    std::uint64_t seed = 0;

    void validate() const;
};

// Many-to-many LSTM: one standard cell stepped over the sequence, shared
// linear head per hidden state; dropout applies only to the head's
// hidden-state input while training.
struct LstmConfig {
    int input_dim = 1;
    int hidden_units = 32;
    double dropout_fraction = 0.0;
    double learning_rate = 1e-3;
    int batch_size = 4;
    int epochs = 100;
    std::uint64_t seed = 0;

    void validate() const;
};

struct TrainHistory {
    std::vector<double> train_mse;  // mean minibatch loss per epoch
    std::vector<double> val_mse;    // inference-mode MSE per epoch
};

struct DenseNet {
    DenseConfig cfg;
    std::vector<Eigen::MatrixXd> weights;  // hidden layers then 1-row head
    std::vector<Eigen::VectorXd> biases;

    // seeded init: weights uniform in +-1/sqrt(fan_in), biases zero
    static DenseNet init(const DenseConfig& cfg);
    int n_params() const;

    double predict(const std::vector<double>& record) const;  // inference mode
    std::vector<double> predict_batch(const std::vector<std::vector<double>>& records) const;
};

struct LstmNet {
    LstmConfig cfg;
    Eigen::MatrixXd w_gates;   // 4H x (F+H); row blocks: input, forget, cell, output
    Eigen::VectorXd b_gates;   // 4H
    Eigen::RowVectorXd w_head;  // 1 x H
    double b_head = 0;

    static LstmNet init(const LstmConfig& cfg);
    int n_params() const;

    // one prediction per input record (zero initial hidden/cell state)
    std::vector<double> predict(const std::vector<std::vector<double>>& sequence) const;
};

// one whole-cycle training example for the recurrent model
struct Sequence {
    std::vector<std::vector<double>> records;
    std::vector<double> targets;
};

// Adam + MSE training; data reshuffled each epoch with the config seed; last
// epoch's weights are kept (no early stopping). Throws ValidationError with
// (epoch, batch) if the loss turns non-finite.
TrainHistory train_dense(DenseNet& net, const std::vector<std::vector<double>>& train_x,
                         const std::vector<double>& train_y, const std::vector<std::vector<double>>& val_x,
                         const std::vector<double>& val_y);
TrainHistory train_lstm(LstmNet& net, const std::vector<Sequence>& train, const std::vector<Sequence>& val);

// inference-mode MSE helpers (pooled over all timesteps for sequences)
double mse_dense(const DenseNet& net, const std::vector<std::vector<double>>& x, const std::vector<double>& y);
double mse_lstm(const LstmNet& net, const std::vector<Sequence>& seqs);

// Max relative discrepancy between analytic and central finite-difference
// gradients (step 1e-5) of the MSE loss at the seeded initialization,
// dropout disabled. Small nets only; cost is O(params) forward passes.
double gradient_check_dense(const DenseConfig& cfg, const std::vector<std::vector<double>>& x,
                            const std::vector<double>& y);
double gradient_check_lstm(const LstmConfig& cfg, const Sequence& seq);

// hyperparameter random search (counts uniform inclusive, rates log-uniform)
struct DenseSearchSpace {
    int layers_min = 2, layers_max = 5;
    int nodes_min = 50, nodes_max = 350;
    double dropout_min = 0.0, dropout_max = 0.2;
    int batch_min = 4, batch_max = 64;
    double lr_min = 1e-3, lr_max = 1e-2;
    int epochs = 350;
};

struct LstmSearchSpace {
    int hidden_min = 150, hidden_max = 500;
    double dropout_min = 0.0, dropout_max = 0.2;
    int batch_min = 4, batch_max = 64;
    double lr_min = 1e-9, lr_max = 1e-4;
    int epochs = 200;
};

struct DenseTrial {
    int index = 0;
    DenseConfig cfg;
    double val_mse = 0;
};

struct LstmTrial {
    int index = 0;
    LstmConfig cfg;
    double val_mse = 0;
};

// Each trial owns an independent substream of `seed`, so results do not
// depend on execution order; `jobs` caps concurrent trials. Output is sorted
// by final validation MSE (ties keep trial order).
std::vector<DenseTrial> random_search_dense(const DenseSearchSpace& space, int n_trials,
                                            const std::vector<std::vector<double>>& train_x,
                                            const std::vector<double>& train_y,
                                            const std::vector<std::vector<double>>& val_x,
                                            const std::vector<double>& val_y, std::uint64_t seed, int jobs = 1);
std::vector<LstmTrial> random_search_lstm(const LstmSearchSpace& space, int n_trials,
                                          const std::vector<Sequence>& train, const std::vector<Sequence>& val,
                                          std::uint64_t seed, int jobs = 1);

}  // namespace fincast
