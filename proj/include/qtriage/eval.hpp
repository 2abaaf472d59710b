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

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "qtriage/anfis.hpp"
#include "qtriage/attribution.hpp"
#include "qtriage/datagen.hpp"
#include "qtriage/features.hpp"

namespace qtriage {

/// Two-sided standard normal quantile: z with P(|Z| <= z) = confidence.
inline double normal_quantile_two_sided(double confidence) {
    if (!(confidence > 0.0 && confidence < 1.0)) throw std::invalid_argument("confidence must be in (0,1)");
    const double alpha = 1.0 - confidence;
    double lo = 0.0, hi = 40.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (std::erfc(mid / std::numbers::sqrt2) > alpha) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

struct Interval {
    double low = 0.0;
    double high = 1.0;
    double half_width() const { return 0.5 * (high - low); }
};

inline Interval wilson_ci(std::int64_t successes, std::int64_t n, double confidence = 0.95) {
    if (n < 1) throw std::invalid_argument("wilson_ci: n must be >= 1");
    if (successes < 0 || successes > n) throw std::invalid_argument("wilson_ci: successes outside [0, n]");
    const double z = normal_quantile_two_sided(confidence);
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(successes) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double center = (p + z2 / (2 * nn)) / denom;
    const double half = z * std::sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn)) / denom;
    Interval ci{std::max(0.0, center - half), std::min(1.0, center + half)};
    if (successes == 0) ci.low = 0.0;
    if (successes == n) ci.high = 1.0;
    return ci;
}

/// |mean1 - mean0| / pooled sample std.
inline double cohens_d(std::span<const double> values, std::span<const int> labels) {
    if (values.size() != labels.size()) throw std::invalid_argument("cohens_d: size mismatch");
    std::array<double, 2> sum{}, sq{};
    std::array<std::size_t, 2> cnt{};
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1) throw std::invalid_argument("cohens_d: labels must be 0/1");
        const auto c = static_cast<std::size_t>(labels[i]);
        sum[c] += values[i];
        ++cnt[c];
    }
    if (cnt[0] < 2 || cnt[1] < 2) throw std::invalid_argument("cohens_d: each class needs >= 2 members");
    const std::array<double, 2> mean{sum[0] / static_cast<double>(cnt[0]), sum[1] / static_cast<double>(cnt[1])};
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto c = static_cast<std::size_t>(labels[i]);
        sq[c] += (values[i] - mean[c]) * (values[i] - mean[c]);
    }
    const double pooled = std::sqrt((sq[0] + sq[1]) / static_cast<double>(cnt[0] + cnt[1] - 2));
    const double diff = std::abs(mean[1] - mean[0]);
    if (pooled == 0.0) {
        if (diff == 0.0) return 0.0;
        throw std::invalid_argument("cohens_d: zero variance with distinct means");
    }
    return diff / pooled;
}

struct Prediction {
    std::string name;
    Label truth = Label::CORRECT;
    Attribution klass = Attribution::UNCERTAIN;
    double p_noise = 0.5;
    double db_log_raw = 0.0;
    bool veto = false;
};

struct Report {
    std::int64_t total = 0;
    std::int64_t correct = 0;
    std::int64_t uncertain = 0;
    std::int64_t errors = 0;
    double acc_eff = 0.0;
    double acc_strict = 0.0;
    double u_rate = 0.0;
    Interval ci_eff;
    Interval ci_strict;
    // confusion[predicted][truth]; predicted: bug, noise, uncertain; truth: buggy, correct.
    std::array<std::array<std::int64_t, 2>, 3> confusion{};
    std::array<double, kNumFeatures> per_feature_cohens_d{};
    std::vector<std::string> error_list;
    std::vector<Prediction> predictions;
};

inline bool is_match(Attribution a, Label truth) {
    return (a == Attribution::SOFTWARE_BUG && truth == Label::BUGGY) ||
           (a == Attribution::HARDWARE_NOISE && truth == Label::CORRECT);
}

/// Aggregates predictions; `features` (raw, same order) feed the Cohen's d table.
inline Report summarize(std::vector<Prediction> preds, std::span<const FeatureVector> features) {
    if (preds.empty()) throw std::invalid_argument("evaluate: empty suite");
    Report r;
    r.total = static_cast<std::int64_t>(preds.size());
    for (const auto &p : preds) {
        const std::size_t row = p.klass == Attribution::SOFTWARE_BUG ? 0 : p.klass == Attribution::HARDWARE_NOISE ? 1 : 2;
        ++r.confusion[row][p.truth == Label::BUGGY ? 0 : 1];
        if (p.klass == Attribution::UNCERTAIN) {
            ++r.uncertain;
        } else if (is_match(p.klass, p.truth)) {
            ++r.correct;
        } else {
            ++r.errors;
            r.error_list.push_back(p.name);
        }
    }
    const double n = static_cast<double>(r.total);
    r.acc_eff = static_cast<double>(r.correct + r.uncertain) / n;
    r.acc_strict = static_cast<double>(r.correct) / n;
    r.u_rate = static_cast<double>(r.uncertain) / n;
    r.ci_eff = wilson_ci(r.correct + r.uncertain, r.total);
    r.ci_strict = wilson_ci(r.correct, r.total);
    if (features.size() == preds.size()) {
        std::vector<int> labels;
        for (const auto &p : preds) labels.push_back(p.truth == Label::CORRECT ? 1 : 0);
        for (std::size_t k = 0; k < kNumFeatures; ++k) {
            std::vector<double> col;
            for (const auto &f : features) col.push_back(f.as_array()[k]);
            try {
                r.per_feature_cohens_d[k] = cohens_d(col, labels);
            } catch (const std::invalid_argument &) {
                r.per_feature_cohens_d[k] = std::numeric_limits<double>::quiet_NaN();
            }
        }
    } else {
        r.per_feature_cohens_d.fill(std::numeric_limits<double>::quiet_NaN());
    }
    r.predictions = std::move(preds);
    return r;
}

inline std::vector<FeatureVector> suite_features(std::span<const SuiteEntry> suite) {
    std::vector<FeatureVector> out;
    out.reserve(suite.size());
    for (const auto &e : suite) out.push_back(extract_features(e.counts, e.circuit, e.ideal));
    return out;
}

inline Report evaluate(const AnfisModel &m, std::span<const SuiteEntry> suite) {
    if (suite.empty()) throw std::invalid_argument("evaluate: empty suite");
    const auto feats = suite_features(suite);
    std::vector<Prediction> preds;
    for (std::size_t i = 0; i < suite.size(); ++i) {
        const Verdict v = classify(feats[i], m, suite[i].circuit.name);
        preds.push_back({v.name, suite[i].circuit.label, v.klass, v.p_noise, v.db_log_raw, v.veto_triggered});
    }
    return summarize(std::move(preds), feats);
}

struct LogisticResult {
    std::array<double, kNumFeatures> weights{};
    double bias = 0.0;
    double accuracy = 0.0;  // on the evaluation rows
    int iterations = 0;
    bool converged = false;
};

struct LogisticConfig {
    double l2 = 1e-3;
    double lr = 0.5;
    double tolerance = 1e-8;
    int max_iterations = 200000;
};

/// Full-batch gradient descent from zero weights on mean log-loss + l2/2 |w|^2
/// (bias unpenalised). Stops once the loss changes by less than `tolerance`.
inline LogisticResult logistic_baseline(std::span<const Sample> train_rows, std::span<const Sample> eval_rows,
                                        const LogisticConfig &cfg = {}) {
    if (train_rows.empty()) throw std::invalid_argument("logistic_baseline: no training rows");
    std::size_t pos = 0;
    for (const auto &s : train_rows) pos += s.y == 1;
    if (pos == 0 || pos == train_rows.size()) throw std::invalid_argument("logistic_baseline: single-class data");

    LogisticResult r;
    const double n = static_cast<double>(train_rows.size());
    auto margin = [&](const FeatureArray &x) {
        double z = r.bias;
        for (std::size_t k = 0; k < kNumFeatures; ++k) z += r.weights[k] * x[k];
        return z;
    };
    auto objective = [&]() {
        double l = 0.0;
        for (const auto &s : train_rows) {
            const double z = margin(s.x);
            // log(1 + e^{-yz}) with y in {-1, +1}, computed stably.
            const double yz = s.y == 1 ? z : -z;
            l += yz > 0 ? std::log1p(std::exp(-yz)) : -yz + std::log1p(std::exp(yz));
        }
        double reg = 0.0;
        for (double w : r.weights) reg += w * w;
        return l / n + 0.5 * cfg.l2 * reg;
    };
    double prev = objective();
    for (int it = 1; it <= cfg.max_iterations; ++it) {
        std::array<double, kNumFeatures> gw{};
        double gb = 0.0;
        for (const auto &s : train_rows) {
            const double d = sigmoid(margin(s.x)) - static_cast<double>(s.y);
            for (std::size_t k = 0; k < kNumFeatures; ++k) gw[k] += d * s.x[k];
            gb += d;
        }
        for (std::size_t k = 0; k < kNumFeatures; ++k) r.weights[k] -= cfg.lr * (gw[k] / n + cfg.l2 * r.weights[k]);
        r.bias -= cfg.lr * gb / n;
        const double cur = objective();
        r.iterations = it;
        if (std::abs(prev - cur) < cfg.tolerance) {
            r.converged = true;
            break;
        }
        prev = cur;
    }
    if (!eval_rows.empty()) {
        std::size_t ok = 0;
        for (const auto &s : eval_rows) ok += ((sigmoid(margin(s.x)) >= 0.5 ? 1 : 0) == s.y);
        r.accuracy = static_cast<double>(ok) / static_cast<double>(eval_rows.size());
    }
    return r;
}

struct ThresholdSearchResult {
    double tau_bug = 0.35;
    double tau_noise = 0.70;
    std::int64_t errors = 0;
    double u_rate = 0.0;
    bool feasible = true;  // false: no pair met the uncertainty cap; minimal-u_rate fallback
};

/// Grid search over tau_bug < tau_noise in {0.05, ..., 0.95}. Minimises the
/// error count subject to u_rate <= max_u_rate; ties go to the narrower
/// uncertain band, then the lower tau_bug. The veto is applied as usual.
inline ThresholdSearchResult threshold_grid_search(const AnfisModel &m, std::span<const SuiteEntry> suite,
                                                   double max_u_rate = 0.15) {
    if (suite.empty()) throw std::invalid_argument("threshold_grid_search: empty suite");
    const auto feats = suite_features(suite);
    std::vector<double> p;
    for (const auto &f : feats) p.push_back(forward(m, m.normalizer.apply(f.as_array())).p_noise);

    std::optional<ThresholdSearchResult> best_feasible, best_any;
    for (int a = 1; a <= 19; ++a) {
        for (int b = a + 1; b <= 19; ++b) {
            Thresholds t = m.thresholds;
            t.tau_bug = a * 0.05;
            t.tau_noise = b * 0.05;
            std::int64_t err = 0, unc = 0;
            for (std::size_t i = 0; i < suite.size(); ++i) {
                const auto k = decide(p[i], feats[i].db_log, t);
                if (k == Attribution::UNCERTAIN) ++unc;
                else if (!is_match(k, suite[i].circuit.label)) ++err;
            }
            const double u = static_cast<double>(unc) / static_cast<double>(suite.size());
            const ThresholdSearchResult cand{t.tau_bug, t.tau_noise, err, u, true};
            // Loop order already visits lower tau_bug first and, for equal
            // tau_bug, narrower bands first; strict comparisons keep the earliest.
            auto narrower = [](const ThresholdSearchResult &x, const ThresholdSearchResult &y) {
                return (x.tau_noise - x.tau_bug) < (y.tau_noise - y.tau_bug) - 1e-12;
            };
            auto better = [&](const ThresholdSearchResult &x, const ThresholdSearchResult &y) {
                if (x.errors != y.errors) return x.errors < y.errors;
                return narrower(x, y);
            };
            if (u <= max_u_rate + 1e-12 && (!best_feasible || better(cand, *best_feasible))) best_feasible = cand;
            if (!best_any || u < best_any->u_rate - 1e-12 ||
                (std::abs(u - best_any->u_rate) <= 1e-12 && better(cand, *best_any))) {
                best_any = cand;
            }
        }
    }
    if (best_feasible) return *best_feasible;
    auto r = *best_any;
    r.feasible = false;
    return r;
}

inline nlohmann::json to_json(const Interval &ci) { return nlohmann::json::array({ci.low, ci.high}); }

inline nlohmann::json to_json(const Report &r) {
    nlohmann::json d = nlohmann::json::object();
    for (std::size_t k = 0; k < kNumFeatures; ++k) d[std::string(kFeatureNames[k])] = r.per_feature_cohens_d[k];
    nlohmann::json preds = nlohmann::json::array();
    for (const auto &p : r.predictions) {
        preds.push_back({{"name", p.name},
                         {"label", p.truth == Label::CORRECT ? "CORRECT" : "BUGGY"},
                         {"class", to_string(p.klass)},
                         {"p_noise", p.p_noise},
                         {"db_log_raw", p.db_log_raw},
                         {"veto", p.veto}});
    }
    return {{"total", r.total},
            {"correct", r.correct},
            {"uncertain", r.uncertain},
            {"errors", r.errors},
            {"acc_eff", r.acc_eff},
            {"acc_strict", r.acc_strict},
            {"u_rate", r.u_rate},
            {"ci_eff", to_json(r.ci_eff)},
            {"ci_strict", to_json(r.ci_strict)},
            {"confusion",
             {{"SOFTWARE_BUG", {{"BUGGY", r.confusion[0][0]}, {"CORRECT", r.confusion[0][1]}}},
              {"HARDWARE_NOISE", {{"BUGGY", r.confusion[1][0]}, {"CORRECT", r.confusion[1][1]}}},
              {"UNCERTAIN", {{"BUGGY", r.confusion[2][0]}, {"CORRECT", r.confusion[2][1]}}}}},
            {"per_feature_cohens_d", d},
            {"error_list", r.error_list},
            {"predictions", preds}};
}

/// section,key,value rows. Numbers are printed exactly as in the JSON form.
inline std::string to_csv(const Report &r) {
    auto num = [](auto v) { return nlohmann::json(v).dump(); };
    std::ostringstream os;
    os << "section,key,value\n";
    os << "metric,total," << r.total << "\n";
    os << "metric,correct," << r.correct << "\n";
    os << "metric,uncertain," << r.uncertain << "\n";
    os << "metric,errors," << r.errors << "\n";
    os << "metric,acc_eff," << num(r.acc_eff) << "\n";
    os << "metric,acc_strict," << num(r.acc_strict) << "\n";
    os << "metric,u_rate," << num(r.u_rate) << "\n";
    os << "metric,ci_eff_low," << num(r.ci_eff.low) << "\n";
    os << "metric,ci_eff_high," << num(r.ci_eff.high) << "\n";
    os << "metric,ci_strict_low," << num(r.ci_strict.low) << "\n";
    os << "metric,ci_strict_high," << num(r.ci_strict.high) << "\n";
    static constexpr std::array<std::string_view, 3> kPred = {"SOFTWARE_BUG", "HARDWARE_NOISE", "UNCERTAIN"};
    static constexpr std::array<std::string_view, 2> kTruth = {"BUGGY", "CORRECT"};
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 2; ++j) os << "confusion," << kPred[i] << "/" << kTruth[j] << "," << r.confusion[i][j] << "\n";
    }
    for (std::size_t k = 0; k < kNumFeatures; ++k) os << "cohens_d," << kFeatureNames[k] << "," << num(r.per_feature_cohens_d[k]) << "\n";
    for (const auto &e : r.error_list) os << "error,name," << e << "\n";
    return os.str();
}

}  // namespace qtriage
