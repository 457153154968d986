#include "fincast/nn.hpp"

#include <algorithm>
#include <cmath>

namespace fincast {

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

void check_common(int input_dim, double dropout, double lr, int batch, int epochs, const char* what) {
    std::string w(what);
    if (input_dim < 1) throw ValidationError(w + ": input_dim must be >= 1");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ValidationError(w + ": dropout_fraction must be in [0, 1)");
    // zero learning rate is allowed as a diagnostic no-op optimizer
    if (!(lr >= 0) || !std::isfinite(lr)) throw ValidationError(w + ": learning_rate must be finite and >= 0");
    if (batch < 1) throw ValidationError(w + ": batch_size must be >= 1");
    if (epochs < 1) throw ValidationError(w + ": epochs must be >= 1");
}

template <typename M>
void adam_step(M& p, const M& g, M& m, M& v, double lr, int t) {
    m = kBeta1 * m + (1 - kBeta1) * g;
    v = kBeta2 * v + (1 - kBeta2) * M(g.cwiseProduct(g));
    double bc1 = 1.0 - std::pow(kBeta1, t);
    double bc2 = 1.0 - std::pow(kBeta2, t);
    p.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + kAdamEps);
}

// inverted dropout mask drawn elementwise (column-major order)
Eigen::MatrixXd draw_mask(Rng& rng, double p, Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    double keep = 1.0 / (1.0 - p);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.uniform() < p ? 0.0 : keep;
    return m;
}

template <typename M>
void fill_uniform(Rng& rng, M& m, double bound) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.uniform(-bound, bound);
}

Eigen::MatrixXd pack_records(const std::vector<std::vector<double>>& records, const std::vector<size_t>& idx,
                             size_t begin, size_t end, int dim) {
    Eigen::MatrixXd x(dim, end - begin);
    for (size_t c = begin; c < end; ++c) {
        const std::vector<double>& r = records[idx[c]];
        if (static_cast<int>(r.size()) != dim)
            throw ValidationError("record length " + std::to_string(r.size()) + " does not match input_dim " +
                                  std::to_string(dim));
        for (int i = 0; i < dim; ++i) x(i, c - begin) = r[i];
    }
    return x;
}

struct DenseTape {
    std::vector<Eigen::MatrixXd> acts;   // acts[0] = input, acts[l] = post-dropout activation
    std::vector<Eigen::MatrixXd> tanhs;  // pre-dropout tanh output per hidden layer
    std::vector<Eigen::MatrixXd> masks;  // empty matrices when not training
    Eigen::RowVectorXd y;
};

struct DenseGrads {
    std::vector<Eigen::MatrixXd> w;
    std::vector<Eigen::VectorXd> b;
};

void dense_forward_batch(const DenseNet& net, const Eigen::MatrixXd& x, bool training, Rng* rng, DenseTape& tape) {
    int hidden = static_cast<int>(net.weights.size()) - 1;
    double p = net.cfg.dropout_fraction;
    tape.acts.assign(1, x);
    tape.tanhs.clear();
    tape.masks.clear();
    for (int l = 0; l < hidden; ++l) {
        Eigen::MatrixXd t =
            ((net.weights[l] * tape.acts.back()).colwise() + net.biases[l]).array().tanh().matrix();
        tape.tanhs.push_back(t);
        if (training && p > 0) {
            tape.masks.push_back(draw_mask(*rng, p, t.rows(), t.cols()));
            tape.acts.push_back(t.cwiseProduct(tape.masks.back()));
        } else {
            tape.masks.emplace_back();
            tape.acts.push_back(std::move(t));
        }
    }
    tape.y = (net.weights[hidden] * tape.acts.back()).row(0);
    tape.y.array() += net.biases[hidden](0);
}

void dense_backward(const DenseNet& net, const DenseTape& tape, const Eigen::RowVectorXd& dy, DenseGrads& g) {
    int hidden = static_cast<int>(net.weights.size()) - 1;
    g.w.resize(net.weights.size());
    g.b.resize(net.biases.size());
    g.w[hidden] = dy * tape.acts[hidden].transpose();
    g.b[hidden] = Eigen::VectorXd::Constant(1, dy.sum());
    Eigen::MatrixXd da = net.weights[hidden].transpose() * dy;  // d loss / d acts[hidden]
    for (int l = hidden - 1; l >= 0; --l) {
        if (tape.masks[l].size() > 0) da = da.cwiseProduct(tape.masks[l]);
        Eigen::MatrixXd dz = da.cwiseProduct((1.0 - tape.tanhs[l].array().square()).matrix());
        g.w[l] = dz * tape.acts[l].transpose();
        g.b[l] = dz.rowwise().sum();
        if (l > 0) da = net.weights[l].transpose() * dz;
    }
}

}  // namespace

void DenseConfig::validate() const {
    check_common(input_dim, dropout_fraction, learning_rate, batch_size, epochs, "dense config");
    if (layers < 1) throw ValidationError("dense config: layers must be >= 1");
    if (nodes_per_layer < 1) throw ValidationError("dense config: nodes_per_layer must be >= 1");
}

void LstmConfig::validate() const {
    check_common(input_dim, dropout_fraction, learning_rate, batch_size, epochs, "lstm config");
    if (hidden_units < 1) throw ValidationError("lstm config: hidden_units must be >= 1");
}

DenseNet DenseNet::init(const DenseConfig& cfg) {
    cfg.validate();
    DenseNet net;
    net.cfg = cfg;
    Rng rng = Rng(cfg.seed).substream("init");
    int prev = cfg.input_dim;
    for (int l = 0; l < cfg.layers; ++l) {
        net.weights.emplace_back(cfg.nodes_per_layer, prev);
        fill_uniform(rng, net.weights.back(), 1.0 / std::sqrt(static_cast<double>(prev)));
        net.biases.emplace_back(Eigen::VectorXd::Zero(cfg.nodes_per_layer));
        prev = cfg.nodes_per_layer;
    }
    net.weights.emplace_back(1, prev);
    fill_uniform(rng, net.weights.back(), 1.0 / std::sqrt(static_cast<double>(prev)));
    net.biases.emplace_back(Eigen::VectorXd::Zero(1));
    return net;
}

int DenseNet::n_params() const {
    int n = 0;
    for (const auto& w : weights) n += static_cast<int>(w.size());
    for (const auto& b : biases) n += static_cast<int>(b.size());
    return n;
}

double DenseNet::predict(const std::vector<double>& record) const {
    Eigen::MatrixXd x(record.size(), 1);
    for (size_t i = 0; i < record.size(); ++i) x(i, 0) = record[i];
    if (static_cast<int>(record.size()) != cfg.input_dim)
        throw ValidationError("dense predict: record length " + std::to_string(record.size()) +
                              " != input_dim " + std::to_string(cfg.input_dim));
    DenseTape tape;
    dense_forward_batch(*this, x, false, nullptr, tape);
    return tape.y(0);
}

std::vector<double> DenseNet::predict_batch(const std::vector<std::vector<double>>& records) const {
    if (records.empty()) return {};
    std::vector<size_t> idx(records.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Eigen::MatrixXd x = pack_records(records, idx, 0, records.size(), cfg.input_dim);
    DenseTape tape;
    dense_forward_batch(*this, x, false, nullptr, tape);
    return {tape.y.data(), tape.y.data() + tape.y.size()};
}

double mse_dense(const DenseNet& net, const std::vector<std::vector<double>>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.empty()) throw ValidationError("mse_dense: empty or mismatched data");
    std::vector<double> pred = net.predict_batch(x);
    double s = 0;
    for (size_t i = 0; i < y.size(); ++i) s += (pred[i] - y[i]) * (pred[i] - y[i]);
    return s / y.size();
}

TrainHistory train_dense(DenseNet& net, const std::vector<std::vector<double>>& train_x,
                         const std::vector<double>& train_y, const std::vector<std::vector<double>>& val_x,
                         const std::vector<double>& val_y) {
    net.cfg.validate();
    if (train_x.empty() || train_x.size() != train_y.size())
        throw ValidationError("train_dense: empty or mismatched training data");
    if (val_x.empty() || val_x.size() != val_y.size())
        throw ValidationError("train_dense: empty or mismatched validation data");

    Rng rng = Rng(net.cfg.seed).substream("train");
    size_t n = train_x.size();
    std::vector<size_t> perm(n);
    for (size_t i = 0; i < n; ++i) perm[i] = i;

    DenseGrads m, v;
    m.w.resize(net.weights.size());
    m.b.resize(net.biases.size());
    v.w.resize(net.weights.size());
    v.b.resize(net.biases.size());
    for (size_t l = 0; l < net.weights.size(); ++l) {
        m.w[l] = Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols());
        v.w[l] = m.w[l];
        m.b[l] = Eigen::VectorXd::Zero(net.biases[l].size());
        v.b[l] = m.b[l];
    }

    TrainHistory hist;
    int t = 0;
    for (int epoch = 0; epoch < net.cfg.epochs; ++epoch) {
        for (size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.uniform_int(0, i - 1)]);
        double loss_sum = 0;
        int batch_index = 0;
        for (size_t begin = 0; begin < n; begin += net.cfg.batch_size, ++batch_index) {
            size_t end = std::min(n, begin + net.cfg.batch_size);
            Eigen::MatrixXd x = pack_records(train_x, perm, begin, end, net.cfg.input_dim);
            Eigen::RowVectorXd target(end - begin);
            for (size_t c = begin; c < end; ++c) target(c - begin) = train_y[perm[c]];
            DenseTape tape;
            dense_forward_batch(net, x, true, &rng, tape);
            Eigen::RowVectorXd err = tape.y - target;
            double loss = err.squaredNorm() / err.size();
            if (!std::isfinite(loss))
                throw ValidationError("train_dense: non-finite loss at epoch " + std::to_string(epoch) +
                                      ", batch " + std::to_string(batch_index));
            loss_sum += loss * err.size();
            DenseGrads g;
            dense_backward(net, tape, Eigen::RowVectorXd(2.0 * err / err.size()), g);
            ++t;
            for (size_t l = 0; l < net.weights.size(); ++l) {
                adam_step(net.weights[l], g.w[l], m.w[l], v.w[l], net.cfg.learning_rate, t);
                adam_step(net.biases[l], g.b[l], m.b[l], v.b[l], net.cfg.learning_rate, t);
            }
        }
        hist.train_mse.push_back(loss_sum / n);
        hist.val_mse.push_back(mse_dense(net, val_x, val_y));
    }
    return hist;
}

namespace {

struct LstmTape {
    std::vector<Eigen::MatrixXd> x;      // F x B per step
    std::vector<Eigen::MatrixXd> i, f, g, o;  // gate activations, H x B
    std::vector<Eigen::MatrixXd> c, h;   // states after the step
    std::vector<Eigen::MatrixXd> tanhc;  // tanh(c_t)
    std::vector<Eigen::MatrixXd> mask;   // head-input dropout masks
    std::vector<Eigen::RowVectorXd> y;
};

struct LstmGrads {
    Eigen::MatrixXd w_gates;
    Eigen::VectorXd b_gates;
    Eigen::RowVectorXd w_head;
    double b_head = 0;
};

void lstm_forward_batch(const LstmNet& net, const std::vector<Eigen::MatrixXd>& xs, bool training, Rng* rng,
                        LstmTape& tape) {
    int hid = net.cfg.hidden_units;
    Eigen::Index batch = xs.empty() ? 0 : xs[0].cols();
    double p = net.cfg.dropout_fraction;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(hid, batch);
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(hid, batch);
    size_t steps = xs.size();
    tape.x = xs;
    tape.i.resize(steps);
    tape.f.resize(steps);
    tape.g.resize(steps);
    tape.o.resize(steps);
    tape.c.resize(steps);
    tape.h.resize(steps);
    tape.tanhc.resize(steps);
    tape.mask.resize(steps);
    tape.y.resize(steps);
    Eigen::MatrixXd zin(net.cfg.input_dim + hid, batch);
    for (size_t s = 0; s < steps; ++s) {
        zin.topRows(net.cfg.input_dim) = xs[s];
        zin.bottomRows(hid) = h;
        Eigen::MatrixXd a = (net.w_gates * zin).colwise() + net.b_gates;
        tape.i[s] = (1.0 / (1.0 + (-a.topRows(hid).array()).exp())).matrix();
        tape.f[s] = (1.0 / (1.0 + (-a.middleRows(hid, hid).array()).exp())).matrix();
        tape.g[s] = a.middleRows(2 * hid, hid).array().tanh().matrix();
        tape.o[s] = (1.0 / (1.0 + (-a.bottomRows(hid).array()).exp())).matrix();
        c = tape.f[s].cwiseProduct(c) + tape.i[s].cwiseProduct(tape.g[s]);
        tape.tanhc[s] = c.array().tanh().matrix();
        h = tape.o[s].cwiseProduct(tape.tanhc[s]);
        tape.c[s] = c;
        tape.h[s] = h;
        Eigen::MatrixXd head_in = h;
        if (training && p > 0) {
            tape.mask[s] = draw_mask(*rng, p, hid, batch);
            head_in = h.cwiseProduct(tape.mask[s]);
        }
        tape.y[s] = (net.w_head * head_in).row(0);
        tape.y[s].array() += net.b_head;
    }
}

// dy[s] = d loss / d y_s; accumulates into g (caller zero-initializes)
void lstm_backward(const LstmNet& net, const LstmTape& tape, const std::vector<Eigen::RowVectorXd>& dy,
                   LstmGrads& g) {
    int hid = net.cfg.hidden_units;
    int fdim = net.cfg.input_dim;
    size_t steps = tape.x.size();
    Eigen::Index batch = steps ? tape.x[0].cols() : 0;
    Eigen::MatrixXd dh_next = Eigen::MatrixXd::Zero(hid, batch);
    Eigen::MatrixXd dc_next = Eigen::MatrixXd::Zero(hid, batch);
    Eigen::MatrixXd zin(fdim + hid, batch);
    for (size_t s = steps; s-- > 0;) {
        Eigen::MatrixXd head_in = tape.mask[s].size() > 0 ? tape.h[s].cwiseProduct(tape.mask[s]) : tape.h[s];
        g.w_head += dy[s] * head_in.transpose();
        g.b_head += dy[s].sum();
        Eigen::MatrixXd dhead = net.w_head.transpose() * dy[s];
        if (tape.mask[s].size() > 0) dhead = dhead.cwiseProduct(tape.mask[s]);
        Eigen::MatrixXd dh = dh_next + dhead;
        Eigen::MatrixXd dc = dc_next + dh.cwiseProduct(tape.o[s])
                                           .cwiseProduct((1.0 - tape.tanhc[s].array().square()).matrix());
        Eigen::MatrixXd dov = dh.cwiseProduct(tape.tanhc[s]);
        Eigen::MatrixXd c_prev = Eigen::MatrixXd::Zero(hid, batch);
        if (s > 0) c_prev = tape.c[s - 1];
        Eigen::MatrixXd da(4 * hid, batch);
        da.topRows(hid) = dc.cwiseProduct(tape.g[s])
                              .cwiseProduct(tape.i[s])
                              .cwiseProduct((1.0 - tape.i[s].array()).matrix());
        da.middleRows(hid, hid) = dc.cwiseProduct(c_prev)
                                      .cwiseProduct(tape.f[s])
                                      .cwiseProduct((1.0 - tape.f[s].array()).matrix());
        da.middleRows(2 * hid, hid) =
            dc.cwiseProduct(tape.i[s]).cwiseProduct((1.0 - tape.g[s].array().square()).matrix());
        da.bottomRows(hid) =
            dov.cwiseProduct(tape.o[s]).cwiseProduct((1.0 - tape.o[s].array()).matrix());
        zin.topRows(fdim) = tape.x[s];
        if (s > 0) {
            zin.bottomRows(hid) = tape.h[s - 1];
        } else {
            zin.bottomRows(hid).setZero();
        }
        g.w_gates += da * zin.transpose();
        g.b_gates += da.rowwise().sum();
        Eigen::MatrixXd dz = net.w_gates.transpose() * da;
        dh_next = dz.bottomRows(hid);
        dc_next = dc.cwiseProduct(tape.f[s]);
    }
}

std::vector<Eigen::MatrixXd> pack_sequences(const std::vector<Sequence>& seqs, const std::vector<size_t>& idx,
                                            int dim) {
    size_t steps = seqs[idx[0]].records.size();
    std::vector<Eigen::MatrixXd> xs(steps, Eigen::MatrixXd(dim, idx.size()));
    for (size_t b = 0; b < idx.size(); ++b) {
        const Sequence& sq = seqs[idx[b]];
        for (size_t s = 0; s < steps; ++s) {
            const std::vector<double>& r = sq.records[s];
            if (static_cast<int>(r.size()) != dim)
                throw ValidationError("sequence record length " + std::to_string(r.size()) +
                                      " does not match input_dim " + std::to_string(dim));
            for (int i = 0; i < dim; ++i) xs[s](i, b) = r[i];
        }
    }
    return xs;
}

void check_sequence(const Sequence& sq) {
    if (sq.records.empty()) throw ValidationError("empty sequence");
    if (sq.records.size() != sq.targets.size())
        throw ValidationError("sequence records/targets length mismatch");
}

}  // namespace

LstmNet LstmNet::init(const LstmConfig& cfg) {
    cfg.validate();
    LstmNet net;
    net.cfg = cfg;
    Rng rng = Rng(cfg.seed).substream("init");
    int hid = cfg.hidden_units;
    net.w_gates.resize(4 * hid, cfg.input_dim + hid);
    fill_uniform(rng, net.w_gates, 1.0 / std::sqrt(static_cast<double>(cfg.input_dim + hid)));
    net.b_gates = Eigen::VectorXd::Zero(4 * hid);
    net.w_head.resize(hid);
    fill_uniform(rng, net.w_head, 1.0 / std::sqrt(static_cast<double>(hid)));
    net.b_head = 0;
    return net;
}

int LstmNet::n_params() const {
    return static_cast<int>(w_gates.size() + b_gates.size() + w_head.size()) + 1;
}

std::vector<double> LstmNet::predict(const std::vector<std::vector<double>>& sequence) const {
    if (sequence.empty()) throw ValidationError("lstm predict: empty sequence");
    std::vector<size_t> idx{0};
    Sequence sq;
    sq.records = sequence;
    sq.targets.assign(sequence.size(), 0.0);
    std::vector<Sequence> one{std::move(sq)};
    std::vector<Eigen::MatrixXd> xs = pack_sequences(one, idx, cfg.input_dim);
    LstmTape tape;
    lstm_forward_batch(*this, xs, false, nullptr, tape);
    std::vector<double> out(sequence.size());
    for (size_t s = 0; s < out.size(); ++s) out[s] = tape.y[s](0);
    return out;
}

double mse_lstm(const LstmNet& net, const std::vector<Sequence>& seqs) {
    if (seqs.empty()) throw ValidationError("mse_lstm: empty data");
    double sum = 0;
    size_t count = 0;
    for (const Sequence& sq : seqs) {
        check_sequence(sq);
        std::vector<double> pred = net.predict(sq.records);
        for (size_t s = 0; s < pred.size(); ++s) sum += (pred[s] - sq.targets[s]) * (pred[s] - sq.targets[s]);
        count += pred.size();
    }
    return sum / count;
}

TrainHistory train_lstm(LstmNet& net, const std::vector<Sequence>& train, const std::vector<Sequence>& val) {
    net.cfg.validate();
    if (train.empty()) throw ValidationError("train_lstm: empty training data");
    if (val.empty()) throw ValidationError("train_lstm: empty validation data");
    for (const Sequence& sq : train) check_sequence(sq);
    for (const Sequence& sq : val) check_sequence(sq);

    Rng rng = Rng(net.cfg.seed).substream("train");
    size_t n = train.size();
    std::vector<size_t> perm(n);
    for (size_t i = 0; i < n; ++i) perm[i] = i;

    int hid = net.cfg.hidden_units;
    Eigen::MatrixXd mw = Eigen::MatrixXd::Zero(net.w_gates.rows(), net.w_gates.cols()), vw = mw;
    Eigen::VectorXd mb = Eigen::VectorXd::Zero(4 * hid), vb = mb;
    Eigen::RowVectorXd mh = Eigen::RowVectorXd::Zero(hid), vh = mh;
    double mhb = 0, vhb = 0;

    TrainHistory hist;
    int t = 0;
    for (int epoch = 0; epoch < net.cfg.epochs; ++epoch) {
        for (size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.uniform_int(0, i - 1)]);
        double loss_sum = 0;
        size_t loss_count = 0;
        int batch_index = 0;
        for (size_t begin = 0; begin < n; begin += net.cfg.batch_size, ++batch_index) {
            size_t end = std::min(n, begin + net.cfg.batch_size);
            // sequences of equal length share one packed pass; mixed lengths
            // split into stable sub-groups but still take a single Adam step
            std::vector<std::pair<size_t, std::vector<size_t>>> groups;
            for (size_t c = begin; c < end; ++c) {
                size_t len = train[perm[c]].records.size();
                auto it = std::find_if(groups.begin(), groups.end(),
                                       [&](const auto& g) { return g.first == len; });
                if (it == groups.end()) {
                    groups.push_back({len, {perm[c]}});
                } else {
                    it->second.push_back(perm[c]);
                }
            }
            size_t batch_steps = 0;
            for (const auto& gr : groups) batch_steps += gr.first * gr.second.size();

            LstmGrads g;
            g.w_gates = Eigen::MatrixXd::Zero(net.w_gates.rows(), net.w_gates.cols());
            g.b_gates = Eigen::VectorXd::Zero(4 * hid);
            g.w_head = Eigen::RowVectorXd::Zero(hid);
            g.b_head = 0;
            double batch_err = 0;
            for (const auto& gr : groups) {
                std::vector<Eigen::MatrixXd> xs = pack_sequences(train, gr.second, net.cfg.input_dim);
                LstmTape tape;
                lstm_forward_batch(net, xs, true, &rng, tape);
                std::vector<Eigen::RowVectorXd> dy(gr.first);
                for (size_t s = 0; s < gr.first; ++s) {
                    Eigen::RowVectorXd target(gr.second.size());
                    for (size_t b = 0; b < gr.second.size(); ++b) target(b) = train[gr.second[b]].targets[s];
                    Eigen::RowVectorXd err = tape.y[s] - target;
                    batch_err += err.squaredNorm();
                    dy[s] = 2.0 * err / static_cast<double>(batch_steps);
                }
                lstm_backward(net, tape, dy, g);
            }
            double loss = batch_err / batch_steps;
            if (!std::isfinite(loss))
                throw ValidationError("train_lstm: non-finite loss at epoch " + std::to_string(epoch) +
                                      ", batch " + std::to_string(batch_index));
            loss_sum += batch_err;
            loss_count += batch_steps;
            ++t;
            adam_step(net.w_gates, g.w_gates, mw, vw, net.cfg.learning_rate, t);
            adam_step(net.b_gates, g.b_gates, mb, vb, net.cfg.learning_rate, t);
            adam_step(net.w_head, g.w_head, mh, vh, net.cfg.learning_rate, t);
            // scalar head bias shares the same update rule
            mhb = kBeta1 * mhb + (1 - kBeta1) * g.b_head;
            vhb = kBeta2 * vhb + (1 - kBeta2) * g.b_head * g.b_head;
            net.b_head -= net.cfg.learning_rate * (mhb / (1 - std::pow(kBeta1, t))) /
                          (std::sqrt(vhb / (1 - std::pow(kBeta2, t))) + kAdamEps);
        }
        hist.train_mse.push_back(loss_sum / loss_count);
        hist.val_mse.push_back(mse_lstm(net, val));
    }
    return hist;
}

namespace {

double rel_err(double a, double b) {
    // floored denominator: central differences carry ~1e-10 absolute noise,
    // so entries much smaller than the floor cannot show relative agreement
    // at any step size; the floor still exposes sign flips and scale errors
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-5});
}

}  // namespace

double gradient_check_dense(const DenseConfig& cfg, const std::vector<std::vector<double>>& x,
                            const std::vector<double>& y) {
    DenseConfig c = cfg;
    c.dropout_fraction = 0;  // deterministic loss surface
    DenseNet net = DenseNet::init(c);
    if (x.empty() || x.size() != y.size()) throw ValidationError("gradient_check_dense: bad sample");

    std::vector<size_t> idx(x.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Eigen::MatrixXd xm = pack_records(x, idx, 0, x.size(), c.input_dim);
    Eigen::RowVectorXd target(y.size());
    for (size_t i = 0; i < y.size(); ++i) target(i) = y[i];

    auto loss_at = [&]() {
        DenseTape tape;
        dense_forward_batch(net, xm, false, nullptr, tape);
        return (tape.y - target).squaredNorm() / target.size();
    };
    DenseTape tape;
    dense_forward_batch(net, xm, false, nullptr, tape);
    DenseGrads g;
    dense_backward(net, tape, Eigen::RowVectorXd(2.0 * (tape.y - target) / target.size()), g);

    const double h = 1e-5;
    double worst = 0;
    auto probe = [&](double& p, double analytic) {
        double keep = p;
        p = keep + h;
        double up = loss_at();
        p = keep - h;
        double down = loss_at();
        p = keep;
        worst = std::max(worst, rel_err(analytic, (up - down) / (2 * h)));
    };
    for (size_t l = 0; l < net.weights.size(); ++l) {
        for (Eigen::Index j = 0; j < net.weights[l].cols(); ++j)
            for (Eigen::Index i = 0; i < net.weights[l].rows(); ++i) probe(net.weights[l](i, j), g.w[l](i, j));
        for (Eigen::Index i = 0; i < net.biases[l].size(); ++i) probe(net.biases[l](i), g.b[l](i));
    }
    return worst;
}

double gradient_check_lstm(const LstmConfig& cfg, const Sequence& seq) {
    LstmConfig c = cfg;
    c.dropout_fraction = 0;
    LstmNet net = LstmNet::init(c);
    check_sequence(seq);

    std::vector<Sequence> one{seq};
    std::vector<size_t> idx{0};
    std::vector<Eigen::MatrixXd> xs = pack_sequences(one, idx, c.input_dim);
    size_t steps = seq.records.size();

    auto loss_at = [&]() {
        LstmTape tape;
        lstm_forward_batch(net, xs, false, nullptr, tape);
        double s = 0;
        for (size_t t = 0; t < steps; ++t) s += (tape.y[t](0) - seq.targets[t]) * (tape.y[t](0) - seq.targets[t]);
        return s / steps;
    };
    LstmTape tape;
    lstm_forward_batch(net, xs, false, nullptr, tape);
    std::vector<Eigen::RowVectorXd> dy(steps);
    for (size_t t = 0; t < steps; ++t) {
        dy[t] = Eigen::RowVectorXd::Constant(1, 2.0 * (tape.y[t](0) - seq.targets[t]) / steps);
    }
    LstmGrads g;
    g.w_gates = Eigen::MatrixXd::Zero(net.w_gates.rows(), net.w_gates.cols());
    g.b_gates = Eigen::VectorXd::Zero(net.b_gates.size());
    g.w_head = Eigen::RowVectorXd::Zero(net.w_head.size());
    lstm_backward(net, tape, dy, g);

    const double h = 1e-5;
    double worst = 0;
    auto probe = [&](double& p, double analytic) {
        double keep = p;
        p = keep + h;
        double up = loss_at();
        p = keep - h;
        double down = loss_at();
        p = keep;
        worst = std::max(worst, rel_err(analytic, (up - down) / (2 * h)));
    };
    for (Eigen::Index j = 0; j < net.w_gates.cols(); ++j)
        for (Eigen::Index i = 0; i < net.w_gates.rows(); ++i) probe(net.w_gates(i, j), g.w_gates(i, j));
    for (Eigen::Index i = 0; i < net.b_gates.size(); ++i) probe(net.b_gates(i), g.b_gates(i));
    for (Eigen::Index i = 0; i < net.w_head.size(); ++i) probe(net.w_head(i), g.w_head(i));
    probe(net.b_head, g.b_head);
    return worst;
}

}  // namespace fincast
