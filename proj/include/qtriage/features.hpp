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
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "qtriage/circuit.hpp"
#include "qtriage/dist.hpp"

namespace qtriage {

inline constexpr std::size_t kNumFeatures = 7;

/// Feature order is a stable contract: index 6 is always the log
/// Bhattacharyya distance.
inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames = {
    "Entropy", "Bias", "MaxProb", "NormDepth", "TwoQDensity", "EntropyDev", "Bhattacharyya"};

inline constexpr std::size_t kDbLogIndex = 6;

using FeatureArray = std::array<double, kNumFeatures>;

struct FeatureVector {
    double entropy = 0.0;
    double bias = 0.0;
    double max_prob = 0.0;
    double norm_depth = 0.0;
    double two_q_density = 0.0;
    double entropy_dev = 0.0;
    double db_log = 0.0;

    FeatureArray as_array() const { return {entropy, bias, max_prob, norm_depth, two_q_density, entropy_dev, db_log}; }

    static FeatureVector from_array(const FeatureArray &a) {
        return FeatureVector{a[0], a[1], a[2], a[3], a[4], a[5], a[6]};
    }

    bool operator==(const FeatureVector &) const = default;
};

inline bool all_finite(const FeatureArray &a) {
    return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

inline FeatureVector extract_features(const ProbDist &measured, const CircuitIR &circuit, const ProbDist &ideal) {
    if (measured.n_qubits() != circuit.n_qubits || ideal.n_qubits() != circuit.n_qubits) {
        throw std::invalid_argument("extract_features: qubit count mismatch between counts and circuit");
    }
    FeatureVector f;
    f.entropy = shannon_entropy(measured);
    f.bias = bias_l2(measured);
    f.max_prob = max_prob(measured);
    f.norm_depth = norm_depth(depth(circuit));
    f.two_q_density = two_qubit_density(circuit);
    f.entropy_dev = std::abs(f.entropy - shannon_entropy(ideal));
    f.db_log = bhattacharyya_log(measured, ideal).log_distance;
    return f;
}

inline FeatureVector extract_features(const Counts &counts, const CircuitIR &circuit, const ProbDist &ideal) {
    if (static_cast<int>(counts.n_qubits()) != circuit.n_qubits) {
        throw std::invalid_argument("extract_features: qubit count mismatch between counts and circuit");
    }
    return extract_features(from_counts(counts), circuit, ideal);
}

inline constexpr double kStdFloor = 1e-9;

/// Per-feature z-score parameters (population standard deviation).
struct Normalizer {
    FeatureArray means{};
    FeatureArray stds{1, 1, 1, 1, 1, 1, 1};

    FeatureArray apply(const FeatureArray &f) const {
        FeatureArray z{};
        for (std::size_t i = 0; i < kNumFeatures; ++i) z[i] = (f[i] - means[i]) / stds[i];
        return z;
    }

    FeatureArray apply(const FeatureVector &f) const { return apply(f.as_array()); }

    FeatureArray invert(const FeatureArray &z) const {
        FeatureArray f{};
        for (std::size_t i = 0; i < kNumFeatures; ++i) f[i] = z[i] * stds[i] + means[i];
        return f;
    }

    bool operator==(const Normalizer &) const = default;
};

inline Normalizer fit_normalizer(std::span<const FeatureArray> rows) {
    if (rows.size() < 2) throw std::invalid_argument("fit_normalizer: need at least 2 rows");
    Normalizer n;
    const double count = static_cast<double>(rows.size());
    for (std::size_t j = 0; j < kNumFeatures; ++j) {
        double mean = 0.0;
        for (const auto &r : rows) mean += r[j];
        mean /= count;
        double var = 0.0;
        for (const auto &r : rows) var += (r[j] - mean) * (r[j] - mean);
        n.means[j] = mean;
        n.stds[j] = std::max(std::sqrt(var / count), kStdFloor);
    }
    return n;
}

inline Normalizer fit_normalizer(std::span<const FeatureVector> rows) {
    std::vector<FeatureArray> a;
    a.reserve(rows.size());
    for (const auto &r : rows) a.push_back(r.as_array());
    return fit_normalizer(std::span<const FeatureArray>(a));
}

inline FeatureArray apply_normalizer(const Normalizer &n, const FeatureVector &f) { return n.apply(f); }

/// One training/evaluation row. label: 0 = bug, 1 = noise (correct circuit).
struct DataRow {
    std::string name;
    int label = 1;
    FeatureVector features;

    double db_log_raw() const { return features.db_log; }
};

// JSONL row: {"name", "label", "features_raw": [7], "db_log_raw"}
inline nlohmann::json to_json(const DataRow &r) {
    const auto a = r.features.as_array();
    return {{"name", r.name},
            {"label", r.label},
            {"features_raw", std::vector<double>(a.begin(), a.end())},
            {"db_log_raw", r.db_log_raw()}};
}

inline DataRow datarow_from_json(const nlohmann::json &j) {
    DataRow r;
    r.name = j.at("name").get<std::string>();
    r.label = j.at("label").get<int>();
    if (r.label != 0 && r.label != 1) throw std::invalid_argument("dataset label must be 0 or 1");
    const auto v = j.at("features_raw").get<std::vector<double>>();
    if (v.size() != kNumFeatures) throw std::invalid_argument("features_raw must have 7 entries");
    FeatureArray a{};
    std::copy(v.begin(), v.end(), a.begin());
    if (!all_finite(a)) throw std::invalid_argument("features_raw has non-finite values");
    r.features = FeatureVector::from_array(a);
    return r;
}

inline nlohmann::json to_json(const Normalizer &n) { return {{"means", n.means}, {"stds", n.stds}}; }

inline Normalizer normalizer_from_json(const nlohmann::json &j) {
    Normalizer n;
    n.means = j.at("means").get<FeatureArray>();
    n.stds = j.at("stds").get<FeatureArray>();
    for (double s : n.stds) {
        if (!(s > 0.0)) throw std::invalid_argument("normalizer stds must be positive");
    }
    return n;
}

}  // namespace qtriage
