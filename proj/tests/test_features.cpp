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

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "qtriage/datagen.hpp"
#include "qtriage/features.hpp"

namespace qtriage {
namespace {

CircuitIR bell() {
    CircuitIR c;
    c.name = "bell";
    c.n_qubits = 2;
    c.gates = {make_gate(GateKind::H, {0}), make_gate(GateKind::CX, {0, 1})};
    return c;
}

TEST(Extract, BellSelfComparison) {
    const auto c = bell();
    const auto f = extract_features(Counts{{{"00", 500}, {"11", 500}}, 1000}, c, simulate_ideal(c));
    EXPECT_NEAR(f.entropy, 1.0, 1e-12);
    EXPECT_NEAR(f.entropy_dev, 0.0, 1e-12);
    EXPECT_NEAR(f.db_log, 0.0, 1e-12);
    EXPECT_NEAR(f.bias, 0.5, 1e-12);
    EXPECT_NEAR(f.max_prob, 0.5, 1e-12);
    EXPECT_NEAR(f.norm_depth, std::log(3.0), 1e-12);
    EXPECT_NEAR(f.two_q_density, 0.5, 1e-12);
    EXPECT_EQ(f.as_array()[kDbLogIndex], f.db_log);
    EXPECT_EQ(kFeatureNames[kDbLogIndex], "Bhattacharyya");
}

TEST(Extract, ManyShotsConvergeToIdeal) {
    for (const auto &fam : {"GHZ", "QFT", "VQE"}) {
        const auto c = build_template(fam, 3, 11);
        const auto ideal = simulate_ideal(c);
        const auto f = extract_features(sample_counts(ideal, 1000000, 3), c, ideal);
        EXPECT_LT(f.entropy_dev, 0.02) << fam;
        EXPECT_LT(f.db_log, 0.02) << fam;
    }
}

TEST(Extract, WrongOracleReference) {
    const auto suite = generate_validation_suite(42, NoiseModel{}, 4096);
    for (const auto &e : suite.entries) {
        if (e.circuit.name != "grover_2q_wrong_oracle") continue;
        const auto f = extract_features(e.counts, e.circuit, e.ideal);
        EXPECT_NEAR(f.entropy_dev, 1.999, 0.01);
        EXPECT_NEAR(f.db_log, 0.535, 0.03);
        return;
    }
    FAIL() << "grover_2q_wrong_oracle missing from suite";
}

TEST(Extract, QubitMismatchThrows) {
    const auto c = bell();
    EXPECT_THROW(extract_features(Counts{{{"000", 10}}, 10}, c, simulate_ideal(c)), std::invalid_argument);
    EXPECT_THROW(extract_features(ProbDist::uniform(2), c, ProbDist::uniform(3)), std::invalid_argument);
}

TEST(Extract, RangesHoldOnNoisyData) {
    const NoiseModel nm;
    for (const auto &fam : template_families()) {
        const int n = family_qubit_counts(fam).front();
        const auto c = build_template(fam, n, 5);
        const auto f = extract_features(sample_counts(simulate_noisy(c, nm), 4096, 1), c, simulate_ideal(c));
        const auto a = f.as_array();
        EXPECT_TRUE(all_finite(a)) << fam;
        EXPECT_GE(f.entropy_dev, 0.0);
        EXPECT_GE(f.db_log, 0.0);
        EXPECT_LE(f.db_log, std::log(11.0) + 1e-12);
        EXPECT_GE(f.entropy, 0.0);
        EXPECT_LE(f.entropy, n + 1e-12);
    }
}

TEST(Normalizer, TwoRowExample) {
    std::vector<FeatureArray> rows = {FeatureArray{}, FeatureArray{2, 2, 2, 2, 2, 2, 2}};
    const auto n = fit_normalizer(std::span<const FeatureArray>(rows));
    for (std::size_t j = 0; j < kNumFeatures; ++j) {
        EXPECT_DOUBLE_EQ(n.means[j], 1.0);
        EXPECT_DOUBLE_EQ(n.stds[j], 1.0);
    }
}

TEST(Normalizer, ConstantColumnIsFloored) {
    std::vector<FeatureArray> rows = {FeatureArray{1, 3}, FeatureArray{2, 3}, FeatureArray{4, 3}};
    const auto n = fit_normalizer(std::span<const FeatureArray>(rows));
    EXPECT_EQ(n.stds[1], kStdFloor);
    EXPECT_EQ(n.stds[2], kStdFloor);
    EXPECT_THROW(fit_normalizer(std::span<const FeatureArray>(rows.data(), 1)), std::invalid_argument);
}

TEST(Normalizer, RandomRowsStandardise) {
    Rng rng(13);
    std::vector<FeatureArray> rows(257);
    for (auto &r : rows)
        for (std::size_t j = 0; j < kNumFeatures; ++j) r[j] = rng.normal(static_cast<double>(j) * 3.0 - 5.0, 0.1 + j);
    const auto n = fit_normalizer(std::span<const FeatureArray>(rows));
    for (std::size_t j = 0; j < kNumFeatures; ++j) {
        double mean = 0, sq = 0;
        for (const auto &r : rows) mean += n.apply(r)[j];
        mean /= static_cast<double>(rows.size());
        for (const auto &r : rows) sq += std::pow(n.apply(r)[j] - mean, 2);
        EXPECT_LE(std::abs(mean), 1e-9);
        EXPECT_NEAR(std::sqrt(sq / static_cast<double>(rows.size())), 1.0, 1e-9);
    }
}

TEST(Normalizer, ApplyAndInvert) {
    Normalizer n;
    n.means = {1, -2, 3, 0.5, 0, 7, 0.1};
    n.stds = {2, 0.5, 1, 3, 0.25, 4, 0.01};
    const auto zero = n.apply(n.means);
    FeatureArray plus{};
    for (std::size_t j = 0; j < kNumFeatures; ++j) plus[j] = n.means[j] + n.stds[j];
    const auto ones = n.apply(plus);
    for (std::size_t j = 0; j < kNumFeatures; ++j) {
        EXPECT_NEAR(zero[j], 0.0, 1e-15);
        EXPECT_NEAR(ones[j], 1.0, 1e-12);
    }
    const FeatureArray f = {0.3, 1.7, -4, 9, 0.01, 2.2, 0.05};
    const auto back = n.invert(n.apply(f));
    for (std::size_t j = 0; j < kNumFeatures; ++j) EXPECT_NEAR(back[j], f[j], 1e-12);
    EXPECT_EQ(normalizer_from_json(to_json(n)), n);
}

TEST(DataRowJson, RoundTripAndValidation) {
    DataRow r;
    r.name = "ghz_3q_v1";
    r.label = 0;
    r.features = FeatureVector::from_array({1.0 / 3, 0.1, 0.2, std::log(4.0), 0.25, 1e-17, 0.123456789012345678});
    const auto back = datarow_from_json(nlohmann::json::parse(to_json(r).dump()));
    EXPECT_EQ(back.name, r.name);
    EXPECT_EQ(back.label, r.label);
    EXPECT_EQ(back.features, r.features);
    EXPECT_EQ(to_json(r).at("db_log_raw").get<double>(), r.db_log_raw());
    auto bad = to_json(r);
    bad["label"] = 2;
    EXPECT_THROW(datarow_from_json(bad), std::invalid_argument);
    bad = to_json(r);
    bad["features_raw"] = std::vector<double>{1, 2};
    EXPECT_THROW(datarow_from_json(bad), std::invalid_argument);
}

}  // namespace
}  // namespace qtriage
