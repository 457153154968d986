#include "fincast/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "fincast/util.hpp"
#include "json.hpp"

namespace fincast {

double thrust_coefficient(double thrust_n, double rho, double v_ref, double area_m2) {
    if (!(rho > 0)) throw ValidationError("thrust_coefficient: rho must be > 0");
    if (!(v_ref > 0)) throw ValidationError("thrust_coefficient: v_ref must be > 0");
    if (!(area_m2 > 0)) throw ValidationError("thrust_coefficient: area must be > 0");
    return thrust_n / (0.5 * rho * v_ref * v_ref * area_m2);
}

double reference_tip_speed(const FinShape& shape, const AxisFrame& frame, const KinematicSetting& setting,
                           double pitch_phase_deg, int quadrature_steps) {
    if (quadrature_steps < 8) throw ValidationError("reference_tip_speed: quadrature_steps must be >= 8");
    Vec2 tip = tip_vertex(shape, frame);
    FlatSkeleton one;
    one.coms.push_back(tip);
    one.strip_areas.push_back(0);
    KinematicSetting quad = setting;
    quad.n_steps_per_cycle = quadrature_steps;
    std::vector<KinematicState> cyc = generate_cycle(quad, pitch_phase_deg);
    int n = quadrature_steps;
    std::vector<Vec3> pos(n);
    for (int i = 0; i < n; ++i) {
        Vec3 p = rotate_skeleton(one, cyc[i].stroke_deg, cyc[i].pitch_deg).points[0];
        pos[i] = {p.x / 100.0, p.y / 100.0, p.z / 100.0};  // cm -> m
    }
    double dt = 1.0 / (n * setting.flap_frequency_hz);
    double sum = 0;
    for (int i = 0; i < n; ++i) {
        const Vec3& a = pos[(i + n - 1) % n];
        const Vec3& b = pos[(i + 1) % n];
        double dx = (b.x - a.x) / (2 * dt);
        double dy = (b.y - a.y) / (2 * dt);
        double dz = (b.z - a.z) / (2 * dt);
        sum += std::sqrt(dx * dx + dy * dy + dz * dz);
    }
    return sum / n;
}

NormStats fit_norm_stats(const std::vector<std::vector<double>>& records, const std::vector<double>& thrust_coeffs) {
    if (records.empty()) throw ValidationError("fit_norm_stats: empty dataset");
    if (records.size() != thrust_coeffs.size())
        throw ValidationError("fit_norm_stats: record/thrust count mismatch");
    size_t f = records[0].size();
    for (const auto& r : records)
        if (r.size() != f) throw ValidationError("fit_norm_stats: inconsistent record lengths");
    size_t n = records.size();
    NormStats s;
    s.mean.assign(f, 0.0);
    s.stddev.assign(f, 1.0);
    for (size_t j = 0; j < f; ++j) {
        double m = 0;
        for (const auto& r : records) m += r[j];
        m /= n;
        double v = 0;
        for (const auto& r : records) v += (r[j] - m) * (r[j] - m);
        v /= n;  // population variance
        s.mean[j] = m;
        if (v > 0) {
            s.stddev[j] = std::sqrt(v);
        } else {
            s.constant_features.push_back(static_cast<int>(j));
            s.stddev[j] = 1.0;
        }
    }
    double tm = 0;
    for (double t : thrust_coeffs) tm += t;
    tm /= n;
    double tv = 0;
    for (double t : thrust_coeffs) tv += (t - tm) * (t - tm);
    tv /= n;
    if (!(tv > 0)) throw ValidationError("fit_norm_stats: thrust column is constant; cannot set thrust_scale");
    s.thrust_scale = std::sqrt(tv);
    return s;
}

std::vector<double> NormStats::apply(const std::vector<double>& record) const {
    if (record.size() != mean.size())
        throw ValidationError("NormStats::apply: record length " + std::to_string(record.size()) + " != " +
                              std::to_string(mean.size()));
    std::vector<double> out(record.size());
    for (size_t j = 0; j < record.size(); ++j) out[j] = (record[j] - mean[j]) / stddev[j];
    return out;
}

std::vector<double> NormStats::invert(const std::vector<double>& record) const {
    if (record.size() != mean.size())
        throw ValidationError("NormStats::invert: record length " + std::to_string(record.size()) + " != " +
                              std::to_string(mean.size()));
    std::vector<double> out(record.size());
    for (size_t j = 0; j < record.size(); ++j) out[j] = record[j] * stddev[j] + mean[j];
    return out;
}

std::string NormStats::to_json() const {
    nlohmann::json j;
    j["mean"] = mean;
    j["stddev"] = stddev;
    j["constant_features"] = constant_features;
    j["thrust_scale"] = thrust_scale;
    return j.dump(2);
}

NormStats NormStats::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("norm stats: bad JSON: ") + e.what());
    }
    for (const char* key : {"mean", "stddev", "constant_features", "thrust_scale"})
        if (!j.contains(key)) throw SchemaError(std::string("norm stats: missing field '") + key + "'");
    NormStats s;
    s.mean = j["mean"].get<std::vector<double>>();
    s.stddev = j["stddev"].get<std::vector<double>>();
    s.constant_features = j["constant_features"].get<std::vector<int>>();
    s.thrust_scale = j["thrust_scale"].get<double>();
    if (s.mean.size() != s.stddev.size()) throw SchemaError("norm stats: mean/stddev length mismatch");
    for (double sd : s.stddev)
        if (!(sd > 0)) throw SchemaError("norm stats: stored stddev must be > 0");
    if (!(s.thrust_scale > 0)) throw SchemaError("norm stats: thrust_scale must be > 0");
    return s;
}

double thrust_deviation(const std::vector<std::vector<DevSample>>& cycles, int n_bins) {
    if (cycles.size() < 2)
        throw ValidationError("thrust_deviation: need >= 2 cycles, got " + std::to_string(cycles.size()));
    if (n_bins < 1) throw ValidationError("thrust_deviation: n_bins must be >= 1");
    double smin = 0, smax = 0;
    bool first = true;
    for (const auto& cyc : cycles)
        for (const DevSample& d : cyc) {
            if (first) {
                smin = smax = d.stroke_deg;
                first = false;
            } else {
                smin = std::min(smin, d.stroke_deg);
                smax = std::max(smax, d.stroke_deg);
            }
        }
    if (first) throw ValidationError("thrust_deviation: cycles contain no samples");
    double span = smax - smin;
    int cells = 2 * n_bins;
    // per-cell accumulators: count, mean, M2 (Welford)
    std::vector<long> cnt(cells, 0);
    std::vector<double> mean(cells, 0.0), m2(cells, 0.0);
    for (const auto& cyc : cycles)
        for (const DevSample& d : cyc) {
            int b = 0;
            if (span > 0) b = std::min(n_bins - 1, static_cast<int>((d.stroke_deg - smin) / span * n_bins));
            int cell = b + (d.stroke_state ? 0 : n_bins);
            ++cnt[cell];
            double delta = d.value - mean[cell];
            mean[cell] += delta / cnt[cell];
            m2[cell] += delta * (d.value - mean[cell]);
        }
    double sum = 0;
    for (int c = 0; c < cells; ++c)
        if (cnt[c] >= 2) sum += std::sqrt(m2[c] / cnt[c]);  // population std; sparse cells add 0
    return sum / cells;
}

}  // namespace fincast
