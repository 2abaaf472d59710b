// Copyright 2026 The qtriage Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qtriage/features.hpp"
#include "qtriage/io.hpp"
#include "qtriage/rng.hpp"

namespace qtriage {

inline constexpr std::string_view kModelVersion = "qtriage-anfis-1";
inline constexpr std::size_t kDefaultRules = 16;
inline constexpr std::size_t kConsequentSize = kNumFeatures + 1;
inline constexpr double kSigmaFloor = 1e-4;
// Below this largest firing strength the normalised weights fall back to uniform.
inline constexpr double kFiringUnderflow = 1e-300;

struct Thresholds {
    double tau_bug = 0.35;
    double tau_noise = 0.70;
    double tau_veto = 0.20;

    bool operator==(const Thresholds &) const = default;
};

/// Per-feature tercile cut points over normalised training features, used to
/// render rule antecedents as LOW/MED/HIGH.
struct RuleBins {
    FeatureArray low{};
    FeatureArray high{};

    bool operator==(const RuleBins &) const = default;
};

using Consequent = std::array<double, kConsequentSize>;

/// First-order Takagi-Sugeno network with Gaussian memberships and a sigmoid
/// output. consequents[i][0] is the constant term of rule i.
struct AnfisModel {
    std::vector<FeatureArray> centers;
    std::vector<FeatureArray> widths;
    std::vector<Consequent> consequents;
    Normalizer normalizer;
    Thresholds thresholds;
    std::optional<RuleBins> rule_bins;
    std::string version{kModelVersion};

    std::size_t n_rules() const { return centers.size(); }
    std::size_t n_params() const { return n_rules() * (2 * kNumFeatures + kConsequentSize); }

    bool operator==(const AnfisModel &) const = default;
};

/// Flat parameter layout: centers (rule-major), then widths, then consequents.
inline std::vector<double> flatten(const AnfisModel &m) {
    std::vector<double> v;
    v.reserve(m.n_params());
    for (const auto &c : m.centers) v.insert(v.end(), c.begin(), c.end());
    for (const auto &w : m.widths) v.insert(v.end(), w.begin(), w.end());
    for (const auto &q : m.consequents) v.insert(v.end(), q.begin(), q.end());
    return v;
}

inline void unflatten(AnfisModel &m, std::span<const double> v) {
    if (v.size() != m.n_params()) throw std::invalid_argument("unflatten: parameter count mismatch");
    std::size_t k = 0;
    for (auto &c : m.centers)
        for (auto &x : c) x = v[k++];
    for (auto &w : m.widths)
        for (auto &x : w) x = v[k++];
    for (auto &q : m.consequents)
        for (auto &x : q) x = v[k++];
}

struct Sample {
    FeatureArray x{};  // normalised
    int y = 1;         // 1 = noise, 0 = bug
};

struct ForwardResult {
    double p_noise = 0.5;
    double logit = 0.0;
    std::vector<double> rule_weights;  // normalised firing strengths
    std::vector<double> rule_outputs;  // TSK outputs f_i
    bool underflow = false;
};

inline double sigmoid(double s) { return 1.0 / (1.0 + std::exp(-s)); }

inline ForwardResult forward(const AnfisModel &m, const FeatureArray &x) {
    if (!all_finite(x)) throw std::invalid_argument("forward: non-finite input");
    const std::size_t R = m.n_rules();
    ForwardResult out;
    out.rule_weights.resize(R);
    out.rule_outputs.resize(R);

    // Firing strengths in log space: log w_i = sum_j log mu_ij.
    std::vector<double> z(R);
    double zmax = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < R; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < kNumFeatures; ++j) {
            const double d = x[j] - m.centers[i][j];
            const double s = m.widths[i][j];
            acc -= d * d / (2.0 * s * s);
        }
        z[i] = acc;
        zmax = std::max(zmax, acc);
    }
    static const double log_underflow = std::log(kFiringUnderflow);
    if (zmax < log_underflow) {
        out.underflow = true;
        std::fill(out.rule_weights.begin(), out.rule_weights.end(), 1.0 / static_cast<double>(R));
    } else {
        double total = 0.0;
        for (std::size_t i = 0; i < R; ++i) total += out.rule_weights[i] = std::exp(z[i] - zmax);
        for (auto &w : out.rule_weights) w /= total;
    }

    double s = 0.0;
    for (std::size_t i = 0; i < R; ++i) {
        double f = m.consequents[i][0];
        for (std::size_t j = 0; j < kNumFeatures; ++j) f += m.consequents[i][j + 1] * x[j];
        out.rule_outputs[i] = f;
        s += out.rule_weights[i] * f;
    }
    out.logit = s;
    out.p_noise = sigmoid(s);
    return out;
}

struct ClassWeights {
    double bug = 1.0;
    double noise = 1.0;

    double of(int y) const { return y == 1 ? noise : bug; }
};

/// w_c = N_total / (2 N_c); a missing class gets weight 0.
inline ClassWeights class_weights(std::span<const Sample> batch) {
    double n1 = 0, n0 = 0;
    for (const auto &s : batch) (s.y == 1 ? n1 : n0) += 1.0;
    const double n = n0 + n1;
    return {n0 > 0 ? n / (2.0 * n0) : 0.0, n1 > 0 ? n / (2.0 * n1) : 0.0};
}

struct LossConfig {
    double lambda_u = 0.3;
    double tau_margin = 0.20;
};

inline constexpr double kProbClamp = 1e-7;

namespace detail {

inline double sample_loss(double p, int y, double w, const LossConfig &lc) {
    const double pc = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
    const double bce = -(y == 1 ? std::log(pc) : std::log(1.0 - pc));
    const double margin = std::min(p, 1.0 - p) - lc.tau_margin;
    return w * bce + lc.lambda_u * std::max(0.0, margin);
}

/// d(sample loss)/d(logit), with subgradient 0 at the clamp and penalty kinks.
inline double sample_dlogit(double p, int y, double w, const LossConfig &lc) {
    const double dpds = p * (1.0 - p);
    double g = 0.0;
    if (p > kProbClamp && p < 1.0 - kProbClamp) g += w * (p - static_cast<double>(y));
    if (std::min(p, 1.0 - p) > lc.tau_margin) {
        if (p < 0.5) g += lc.lambda_u * dpds;
        else if (p > 0.5) g -= lc.lambda_u * dpds;
    }
    return g;
}

}  // namespace detail

/// Mean over the batch of weighted BCE plus the indecision penalty.
inline double loss(const AnfisModel &m, std::span<const Sample> batch, const ClassWeights &cw,
                   const LossConfig &lc = {}) {
    if (batch.empty()) return 0.0;
    double total = 0.0;
    for (const auto &s : batch) total += detail::sample_loss(forward(m, s.x).p_noise, s.y, cw.of(s.y), lc);
    return total / static_cast<double>(batch.size());
}

/// Analytic gradient of `loss` in the flatten() layout.
inline std::vector<double> gradients(const AnfisModel &m, std::span<const Sample> batch, const ClassWeights &cw,
                                     const LossConfig &lc = {}) {
    const std::size_t R = m.n_rules();
    const std::size_t off_w = R * kNumFeatures, off_q = 2 * R * kNumFeatures;
    std::vector<double> g(m.n_params(), 0.0);
    if (batch.empty()) return g;
    for (const auto &smp : batch) {
        const auto fr = forward(m, smp.x);
        const double dls = detail::sample_dlogit(fr.p_noise, smp.y, cw.of(smp.y), lc);
        if (dls == 0.0) continue;
        for (std::size_t i = 0; i < R; ++i) {
            const double wb = fr.rule_weights[i];
            double *q = &g[off_q + i * kConsequentSize];
            q[0] += dls * wb;
            for (std::size_t j = 0; j < kNumFeatures; ++j) q[j + 1] += dls * wb * smp.x[j];
            if (fr.underflow) continue;
            const double dz = dls * wb * (fr.rule_outputs[i] - fr.logit);
            for (std::size_t j = 0; j < kNumFeatures; ++j) {
                const double d = smp.x[j] - m.centers[i][j];
                const double s = m.widths[i][j];
                g[i * kNumFeatures + j] += dz * d / (s * s);
                g[off_w + i * kNumFeatures + j] += dz * d * d / (s * s * s);
            }
        }
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (auto &v : g) v *= inv;
    return g;
}

/// Centers from distinct sampled rows, widths = column std x U[0.5, 1],
/// consequents ~ N(0, 0.1).
inline AnfisModel init_from_data(std::span<const FeatureArray> rows, std::uint64_t seed,
                                 std::size_t n_rules = kDefaultRules) {
    if (rows.size() < n_rules) throw std::invalid_argument("init_from_data: fewer rows than rules");
    Rng rng(seed);
    FeatureArray col_std{};
    for (std::size_t j = 0; j < kNumFeatures; ++j) {
        double mean = 0.0;
        for (const auto &r : rows) mean += r[j];
        mean /= static_cast<double>(rows.size());
        double var = 0.0;
        for (const auto &r : rows) var += (r[j] - mean) * (r[j] - mean);
        col_std[j] = std::max(std::sqrt(var / static_cast<double>(rows.size())), kSigmaFloor);
    }
    std::vector<std::size_t> idx(rows.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    // Partial Fisher-Yates: the first n_rules slots are a uniform sample without replacement.
    for (std::size_t i = 0; i < n_rules; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
        std::swap(idx[i], idx[j]);
    }
    AnfisModel m;
    for (std::size_t i = 0; i < n_rules; ++i) {
        m.centers.push_back(rows[idx[i]]);
        FeatureArray w{};
        for (std::size_t j = 0; j < kNumFeatures; ++j) w[j] = col_std[j] * rng.uniform(0.5, 1.0);
        m.widths.push_back(w);
    }
    for (std::size_t i = 0; i < n_rules; ++i) {
        Consequent q{};
        for (auto &v : q) v = rng.normal(0.0, 0.1);
        m.consequents.push_back(q);
    }
    return m;
}

struct TrainConfig {
    double lr = 0.005;
    double weight_decay = 1e-4;
    int max_epochs = 500;
    int patience = 60;
    int lr_halve_after = 20;
    double lambda_u = 0.3;
    double tau_margin = 0.20;
    std::uint64_t seed = 0;
    double val_fraction = 0.2;
    std::size_t n_rules = kDefaultRules;
};

inline void validate(const TrainConfig &c) {
    if (!(c.lr > 0) || !(c.weight_decay >= 0) || c.max_epochs < 1 || c.patience < 1 || c.lr_halve_after < 1 ||
        !(c.lambda_u >= 0) || !(c.tau_margin > 0)) {
        throw std::invalid_argument("train config: hyperparameters must be positive");
    }
    if (!(c.val_fraction > 0.0 && c.val_fraction < 1.0)) throw std::invalid_argument("val_fraction must be in (0,1)");
    if (c.n_rules < 1) throw std::invalid_argument("need at least one rule");
}

struct EpochRecord {
    int epoch = 0;
    double loss = 0.0;
    double val_accuracy = 0.0;
    double lr = 0.0;
};

struct TrainResult {
    AnfisModel model;
    std::vector<EpochRecord> history;
    double best_val_accuracy = 0.0;  // three-class, UNCERTAIN counted wrong
    int best_epoch = 0;
    std::vector<std::size_t> train_index;
    std::vector<std::size_t> val_index;
};

/// Fraction of samples decided correctly at (tau_bug, tau_noise); the
/// uncertain band counts as wrong.
inline double strict_accuracy(const AnfisModel &m, std::span<const Sample> rows) {
    if (rows.empty()) return 0.0;
    std::size_t ok = 0;
    for (const auto &s : rows) {
        const double p = forward(m, s.x).p_noise;
        if ((p > m.thresholds.tau_noise && s.y == 1) || (p < m.thresholds.tau_bug && s.y == 0)) ++ok;
    }
    return static_cast<double>(ok) / static_cast<double>(rows.size());
}

/// Binary accuracy at a 0.5 cut on P(noise).
inline double binary_accuracy(const AnfisModel &m, std::span<const Sample> rows) {
    if (rows.empty()) return 0.0;
    std::size_t ok = 0;
    for (const auto &s : rows) ok += ((forward(m, s.x).p_noise >= 0.5 ? 1 : 0) == s.y);
    return static_cast<double>(ok) / static_cast<double>(rows.size());
}

/// Stratified split: indices of each class are shuffled and the first
/// round(val_fraction * n_c) go to validation.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(std::span<const DataRow> rows,
                                                                                       double val_fraction,
                                                                                       std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::size_t> train, val;
    for (int cls : {0, 1}) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].label == cls) idx.push_back(i);
        }
        rng.shuffle(idx);
        const auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(idx.size())));
        val.insert(val.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
        train.insert(train.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
    }
    std::sort(train.begin(), train.end());
    std::sort(val.begin(), val.end());
    return {train, val};
}

inline std::vector<Sample> to_samples(const Normalizer &n, std::span<const DataRow> rows,
                                      std::span<const std::size_t> index) {
    std::vector<Sample> out;
    out.reserve(index.size());
    for (std::size_t i : index) out.push_back({n.apply(rows[i].features), rows[i].label});
    return out;
}

inline RuleBins compute_rule_bins(std::span<const FeatureArray> normalized_rows);

/// Full-batch Adam with L2 weight decay, early stopping on strict validation
/// accuracy and best-checkpoint restore.
inline TrainResult train(std::span<const DataRow> rows, const TrainConfig &cfg) {
    validate(cfg);
    bool has0 = false, has1 = false;
    for (const auto &r : rows) (r.label == 1 ? has1 : has0) = true;
    if (!has0 || !has1) throw std::invalid_argument("train: data must contain both classes");
    if (rows.size() < 32) throw std::invalid_argument("train: need at least 32 rows");

    TrainResult res;
    std::tie(res.train_index, res.val_index) = stratified_split(rows, cfg.val_fraction, derive_seed(cfg.seed, "split"));

    std::vector<FeatureArray> train_raw;
    for (std::size_t i : res.train_index) train_raw.push_back(rows[i].features.as_array());
    const Normalizer norm = fit_normalizer(std::span<const FeatureArray>(train_raw));
    const auto train_set = to_samples(norm, rows, res.train_index);
    const auto val_set = to_samples(norm, rows, res.val_index);
    std::vector<FeatureArray> train_norm;
    for (const auto &s : train_set) train_norm.push_back(s.x);

    AnfisModel model = init_from_data(train_norm, derive_seed(cfg.seed, "init"), cfg.n_rules);
    model.normalizer = norm;
    model.rule_bins = compute_rule_bins(train_norm);

    const ClassWeights cw = class_weights(train_set);
    const LossConfig lc{cfg.lambda_u, cfg.tau_margin};
    std::vector<double> theta = flatten(model);
    std::vector<double> m1(theta.size(), 0.0), m2(theta.size(), 0.0);
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    double lr = cfg.lr;
    double b1t = 1.0, b2t = 1.0;

    AnfisModel best = model;
    res.best_val_accuracy = -1.0;
    int since_best = 0, since_halve = 0;
    const std::size_t n_centers = model.n_rules() * kNumFeatures;

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        EpochRecord rec;
        rec.epoch = epoch;
        rec.lr = lr;
        rec.loss = loss(model, train_set, cw, lc);
        auto g = gradients(model, train_set, cw, lc);
        b1t *= beta1;
        b2t *= beta2;
        for (std::size_t k = 0; k < theta.size(); ++k) {
            const double gk = g[k] + cfg.weight_decay * theta[k];
            m1[k] = beta1 * m1[k] + (1.0 - beta1) * gk;
            m2[k] = beta2 * m2[k] + (1.0 - beta2) * gk * gk;
            const double mh = m1[k] / (1.0 - b1t), vh = m2[k] / (1.0 - b2t);
            theta[k] -= lr * mh / (std::sqrt(vh) + eps);
        }
        for (std::size_t k = n_centers; k < 2 * n_centers; ++k) theta[k] = std::max(theta[k], kSigmaFloor);
        unflatten(model, theta);

        rec.val_accuracy = strict_accuracy(model, val_set);
        res.history.push_back(rec);
        if (rec.val_accuracy > res.best_val_accuracy) {
            res.best_val_accuracy = rec.val_accuracy;
            res.best_epoch = epoch;
            best = model;
            since_best = 0;
            since_halve = 0;
        } else {
            ++since_best;
            if (++since_halve >= cfg.lr_halve_after) {
                lr *= 0.5;
                since_halve = 0;
            }
            if (since_best >= cfg.patience) break;
        }
    }
    res.model = std::move(best);
    return res;
}

inline RuleBins compute_rule_bins(std::span<const FeatureArray> rows) {
    if (rows.empty()) throw std::invalid_argument("rule bins need a non-empty reference set");
    RuleBins b;
    std::vector<double> col(rows.size());
    for (std::size_t j = 0; j < kNumFeatures; ++j) {
        for (std::size_t i = 0; i < rows.size(); ++i) col[i] = rows[i][j];
        std::sort(col.begin(), col.end());
        // Linear-interpolated empirical quantiles.
        auto quantile = [&](double q) {
            const double pos = q * static_cast<double>(col.size() - 1);
            const auto lo = static_cast<std::size_t>(std::floor(pos));
            const auto hi = std::min(lo + 1, col.size() - 1);
            return col[lo] + (pos - static_cast<double>(lo)) * (col[hi] - col[lo]);
        };
        b.low[j] = quantile(1.0 / 3.0);
        b.high[j] = quantile(2.0 / 3.0);
    }
    return b;
}

// Checkpoint JSON.
inline nlohmann::json to_json(const AnfisModel &m) {
    nlohmann::json j;
    j["version"] = m.version;
    j["n_rules"] = m.n_rules();
    j["n_features"] = kNumFeatures;
    j["centers"] = m.centers;
    j["widths"] = m.widths;
    j["consequents"] = m.consequents;
    j["normalizer"] = to_json(m.normalizer);
    j["thresholds"] = {{"tau_bug", m.thresholds.tau_bug},
                       {"tau_noise", m.thresholds.tau_noise},
                       {"tau_veto", m.thresholds.tau_veto}};
    if (m.rule_bins) j["rule_bins"] = {{"low", m.rule_bins->low}, {"high", m.rule_bins->high}};
    return j;
}

inline AnfisModel model_from_json(const nlohmann::json &j) {
    AnfisModel m;
    m.version = j.at("version").get<std::string>();
    if (m.version != kModelVersion) throw std::invalid_argument("checkpoint version mismatch: " + m.version);
    if (j.at("n_features").get<std::size_t>() != kNumFeatures) throw std::invalid_argument("checkpoint: n_features");
    const auto r = j.at("n_rules").get<std::size_t>();
    m.centers = j.at("centers").get<std::vector<FeatureArray>>();
    m.widths = j.at("widths").get<std::vector<FeatureArray>>();
    m.consequents = j.at("consequents").get<std::vector<Consequent>>();
    if (m.centers.size() != r || m.widths.size() != r || m.consequents.size() != r || r == 0) {
        throw std::invalid_argument("checkpoint: rule arrays disagree with n_rules");
    }
    for (const auto &w : m.widths) {
        for (double s : w) {
            if (!(s > 0.0)) throw std::invalid_argument("checkpoint: widths must be positive");
        }
    }
    m.normalizer = normalizer_from_json(j.at("normalizer"));
    const auto &t = j.at("thresholds");
    m.thresholds = {t.at("tau_bug").get<double>(), t.at("tau_noise").get<double>(), t.at("tau_veto").get<double>()};
    if (j.contains("rule_bins")) {
        m.rule_bins = RuleBins{j["rule_bins"].at("low").get<FeatureArray>(), j["rule_bins"].at("high").get<FeatureArray>()};
    }
    return m;
}

inline nlohmann::json to_json(const std::vector<EpochRecord> &h) {
    auto j = nlohmann::json::array();
    for (const auto &e : h) j.push_back({{"epoch", e.epoch}, {"loss", e.loss}, {"val_accuracy", e.val_accuracy}, {"lr", e.lr}});
    return j;
}

inline void save_checkpoint(const AnfisModel &m, const std::filesystem::path &path) { write_json_file(path, to_json(m)); }

inline AnfisModel load_checkpoint(const std::filesystem::path &path) {
    try {
        return model_from_json(read_json_file(path));
    } catch (const nlohmann::json::exception &e) {
        throw std::invalid_argument("malformed checkpoint " + path.string() + ": " + e.what());
    }
}

}  // namespace qtriage
