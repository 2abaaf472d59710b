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
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qtriage/anfis.hpp"
#include "qtriage/features.hpp"

namespace qtriage {

enum class Attribution { SOFTWARE_BUG, HARDWARE_NOISE, UNCERTAIN };

inline std::string_view to_string(Attribution a) {
    switch (a) {
        case Attribution::SOFTWARE_BUG: return "SOFTWARE_BUG";
        case Attribution::HARDWARE_NOISE: return "HARDWARE_NOISE";
        case Attribution::UNCERTAIN: return "UNCERTAIN";
    }
    return "UNCERTAIN";
}

struct FiredRule {
    std::size_t rule = 0;
    double weight = 0.0;
    std::string text;
};

struct Verdict {
    std::string name;
    Attribution klass = Attribution::UNCERTAIN;
    double p_noise = 0.5;
    double db_log_raw = 0.0;
    bool veto_triggered = false;
    std::vector<FiredRule> top_rules;
    FeatureVector features;  // raw, as classified
};

/// Terciles of a standard normal; used when a model carries no rule bins.
inline RuleBins default_rule_bins() {
    RuleBins b;
    b.low.fill(-0.43072729929545756);
    b.high.fill(0.43072729929545756);
    return b;
}

inline std::string_view level_label(double v, double low, double high) {
    return v < low ? "LOW" : v > high ? "HIGH" : "MED";
}

inline std::string render_rule(const FeatureArray &center, const RuleBins &bins, bool votes_noise) {
    std::string s = "IF ";
    for (std::size_t j = 0; j < kNumFeatures; ++j) {
        if (j) s += " AND ";
        s += kFeatureNames[j];
        s += " is ";
        s += level_label(center[j], bins.low[j], bins.high[j]);
    }
    s += votes_noise ? " THEN NOISE" : " THEN BUG";
    return s;
}

/// Three-way decision with strict inequalities; ties resolve to no-veto and
/// UNCERTAIN.
inline Attribution decide(double p_noise, double db_log_raw, const Thresholds &t, bool *veto = nullptr) {
    const bool v = db_log_raw > t.tau_veto;
    if (veto) *veto = v;
    if (v) return Attribution::SOFTWARE_BUG;
    if (p_noise > t.tau_noise) return Attribution::HARDWARE_NOISE;
    if (p_noise < t.tau_bug) return Attribution::SOFTWARE_BUG;
    return Attribution::UNCERTAIN;
}

inline Verdict classify(const FeatureVector &f, const AnfisModel &m, std::string name = {}) {
    const auto raw = f.as_array();
    if (!all_finite(raw)) throw std::invalid_argument("classify: non-finite features");
    const auto x = m.normalizer.apply(raw);
    const auto fr = forward(m, x);

    Verdict v;
    v.name = std::move(name);
    v.features = f;
    v.p_noise = fr.p_noise;
    v.db_log_raw = f.db_log;
    v.klass = decide(v.p_noise, v.db_log_raw, m.thresholds, &v.veto_triggered);

    std::vector<std::size_t> order(m.n_rules());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fr.rule_weights[a] > fr.rule_weights[b]; });
    const RuleBins bins = m.rule_bins.value_or(default_rule_bins());
    for (std::size_t k = 0; k < std::min<std::size_t>(3, order.size()); ++k) {
        const std::size_t i = order[k];
        // The rule's local vote for this input.
        v.top_rules.push_back({i, fr.rule_weights[i], render_rule(m.centers[i], bins, fr.rule_outputs[i] >= 0.0)});
    }
    return v;
}

/// One IF-THEN string per rule. Antecedents bin each center against the
/// terciles of `rows` (normalised features); the consequent follows the sign
/// of the rule's mean TSK output over `rows`.
inline std::vector<std::string> extract_rules(const AnfisModel &m, std::span<const FeatureArray> rows) {
    if (rows.empty()) throw std::invalid_argument("extract_rules: empty reference set");
    const RuleBins bins = compute_rule_bins(rows);
    std::vector<std::string> out;
    for (std::size_t i = 0; i < m.n_rules(); ++i) {
        double mean = 0.0;
        for (const auto &x : rows) {
            double f = m.consequents[i][0];
            for (std::size_t j = 0; j < kNumFeatures; ++j) f += m.consequents[i][j + 1] * x[j];
            mean += f;
        }
        mean /= static_cast<double>(rows.size());
        out.push_back(render_rule(m.centers[i], bins, mean >= 0.0));
    }
    return out;
}

inline std::string explain(const Verdict &v, const AnfisModel &m) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(3);
    const auto &t = m.thresholds;
    if (!v.name.empty()) os << "circuit: " << v.name << "\n";
    os << "verdict: " << to_string(v.klass) << "\n";
    os << "P(noise) = " << v.p_noise << ", D_B^log = " << v.db_log_raw << "\n";

    os << "decision path: ";
    if (v.veto_triggered) {
        os << "Bhattacharyya veto fired (D_B^log " << v.db_log_raw << " > tau_veto " << t.tau_veto
           << "); the measured distribution has left the ideal support further than noise channels can move it.\n";
    } else if (v.klass == Attribution::HARDWARE_NOISE) {
        os << "no veto (D_B^log " << v.db_log_raw << " <= " << t.tau_veto << "); P(noise) " << v.p_noise
           << " > tau_noise " << t.tau_noise << ".\n";
    } else if (v.klass == Attribution::SOFTWARE_BUG) {
        os << "no veto (D_B^log " << v.db_log_raw << " <= " << t.tau_veto << "); P(noise) " << v.p_noise
           << " < tau_bug " << t.tau_bug << ".\n";
    } else {
        os << "no veto; P(noise) " << v.p_noise << " lies in the uncertain band [" << t.tau_bug << ", "
           << t.tau_noise << "]: " << (v.p_noise - t.tau_bug) << " above tau_bug and "
           << (t.tau_noise - v.p_noise) << " below tau_noise. Flag for manual review.\n";
    }

    os << "top firing rules:\n";
    for (const auto &r : v.top_rules) os << "  [" << r.rule << "] w=" << r.weight << "  " << r.text << "\n";

    const RuleBins bins = m.rule_bins.value_or(default_rule_bins());
    const auto z = m.normalizer.apply(v.features);
    const bool dev_high = z[5] > bins.high[5];
    const bool dist_high = z[kDbLogIndex] > bins.high[kDbLogIndex];
    const bool entropy_low = z[0] < bins.low[0];
    os << "signatures:\n";
    bool any = false;
    if (entropy_low && dist_high) {
        os << "  - peaked output far from the ideal: a coherent logic error (wrong unitary) is the likely cause.\n";
        any = true;
    }
    if (dist_high) {
        os << "  - large divergence from the ideal distribution: check gate choices, oracle construction and qubit"
              " targets.\n";
        any = true;
    }
    if (dev_high) {
        os << "  - entropy far from the ideal value: decoherence is implicated; review deep entangling sections,"
              " state preparation and measurement ordering.\n";
        any = true;
    }
    if (!any) os << "  - no dominant signature; output statistics sit close to the ideal reference.\n";
    return os.str();
}

// JSON {"name", "class", "p_noise", "db_log_raw", "veto", "top_rules": [{"rule", "weight", "text"}]}
inline nlohmann::json to_json(const Verdict &v) {
    nlohmann::json j{{"name", v.name},
                     {"class", std::string(to_string(v.klass))},
                     {"p_noise", v.p_noise},
                     {"db_log_raw", v.db_log_raw},
                     {"veto", v.veto_triggered},
                     {"top_rules", nlohmann::json::array()}};
    for (const auto &r : v.top_rules) j["top_rules"].push_back({{"rule", r.rule}, {"weight", r.weight}, {"text", r.text}});
    return j;
}

}  // namespace qtriage
