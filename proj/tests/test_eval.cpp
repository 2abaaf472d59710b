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

#include <sstream>

#include <gtest/gtest.h>

#include "qtriage/eval.hpp"

namespace qtriage {
namespace {

std::vector<Prediction> make_predictions(int right, int unsure, int wrong) {
    std::vector<Prediction> p;
    for (int i = 0; i < right; ++i) p.push_back({"r" + std::to_string(i), Label::CORRECT, Attribution::HARDWARE_NOISE});
    for (int i = 0; i < unsure; ++i) p.push_back({"u" + std::to_string(i), Label::BUGGY, Attribution::UNCERTAIN});
    for (int i = 0; i < wrong; ++i) p.push_back({"w" + std::to_string(i), Label::BUGGY, Attribution::HARDWARE_NOISE});
    return p;
}

/// Wilson bounds as the roots of (phat - p)^2 = z^2 p (1 - p) / n.
std::pair<double, double> wilson_roots(double s, double n, double z) {
    const double ph = s / n, k = z * z / n;
    const double a = 1 + k, b = -(2 * ph + k), c = ph * ph;
    const double disc = std::sqrt(b * b - 4 * a * c);
    return {(-b - disc) / (2 * a), (-b + disc) / (2 * a)};
}

TEST(Summary, ReferenceTable) {
    const auto r = summarize(make_predictions(79, 15, 11), {});
    EXPECT_EQ(r.total, 105);
    EXPECT_NEAR(r.acc_eff, 0.895, 5e-4);
    EXPECT_NEAR(r.acc_strict, 0.752, 5e-4);
    EXPECT_NEAR(r.u_rate, 0.143, 5e-4);
    EXPECT_EQ(r.error_list.size(), 11u);
    EXPECT_EQ(r.confusion[1][1], 79);
    EXPECT_EQ(r.confusion[2][0], 15);
    EXPECT_EQ(r.confusion[1][0], 11);
    EXPECT_NEAR(r.ci_eff.half_width(), 0.0592, 0.0010);
}

TEST(Summary, EdgeCases) {
    const auto all_u = summarize(make_predictions(0, 10, 0), {});
    EXPECT_DOUBLE_EQ(all_u.acc_eff, 1.0);
    EXPECT_DOUBLE_EQ(all_u.acc_strict, 0.0);
    const auto clean = summarize(make_predictions(5, 0, 0), {});
    EXPECT_EQ(clean.errors, 0);
    EXPECT_TRUE(clean.error_list.empty());
    EXPECT_THROW(summarize({}, {}), std::invalid_argument);
    EXPECT_TRUE(std::isnan(clean.per_feature_cohens_d[0]));
}

TEST(Wilson, MatchesQuadraticRoots) {
    EXPECT_NEAR(normal_quantile_two_sided(0.95), 1.959963984540054, 1e-12);
    EXPECT_NEAR(normal_quantile_two_sided(0.99), 2.5758293035489004, 1e-12);
    for (auto [s, n] : {std::pair{94, 105}, {3, 17}, {50, 100}, {99, 101}, {1, 1000}}) {
        const auto ci = wilson_ci(s, n);
        const auto [lo, hi] = wilson_roots(s, n, 1.959963984540054);
        EXPECT_NEAR(ci.low, lo, 1e-12);
        EXPECT_NEAR(ci.high, hi, 1e-12);
    }
    EXPECT_NEAR(wilson_ci(94, 105).half_width(), 0.0592, 0.0010);
    EXPECT_EQ(wilson_ci(0, 10).low, 0.0);
    EXPECT_EQ(wilson_ci(10, 10).high, 1.0);
    const auto mid = wilson_ci(50, 100);
    EXPECT_NEAR(mid.low + mid.high, 1.0, 1e-15);
    EXPECT_LT(mid.low, 0.5);
    EXPECT_GT(mid.high, 0.5);
    EXPECT_THROW(wilson_ci(0, 0), std::invalid_argument);
    EXPECT_THROW(wilson_ci(5, 4), std::invalid_argument);
}

TEST(CohensD, Examples) {
    const std::vector<double> v = {-1, 0, 1, 0, 1, 2};
    const std::vector<int> y = {0, 0, 0, 1, 1, 1};
    EXPECT_NEAR(cohens_d(v, y), 1.0, 1e-15);
    const std::vector<double> same = {1, 2, 3, 1, 2, 3};
    EXPECT_NEAR(cohens_d(same, y), 0.0, 1e-15);
    EXPECT_THROW(cohens_d(std::vector<double>{1, 2, 3}, std::vector<int>{0, 1, 1}), std::invalid_argument);
    EXPECT_THROW(cohens_d(std::vector<double>{1, 1, 2, 2}, std::vector<int>{0, 0, 1, 1}), std::invalid_argument);
}

TEST(CohensD, AffineInvariant) {
    Rng rng(8);
    std::vector<double> v;
    std::vector<int> y;
    for (int i = 0; i < 200; ++i) {
        y.push_back(i % 2);
        v.push_back(rng.normal(y.back() * 0.7, 1.0 + 0.5 * y.back()));
    }
    const double d = cohens_d(v, y);
    for (auto [a, b] : {std::pair{3.0, -2.0}, {-0.25, 10.0}}) {
        std::vector<double> w;
        for (double x : v) w.push_back(a * x + b);
        EXPECT_NEAR(cohens_d(w, y), d, 1e-12);
    }
}

std::vector<Sample> one_dim(std::uint64_t seed, double gap) {
    Rng rng(seed);
    std::vector<Sample> s;
    for (int i = 0; i < 100; ++i) {
        Sample a;
        a.y = i % 2;
        a.x[0] = (a.y ? gap : -gap) + rng.uniform(-0.5, 0.5);
        for (std::size_t k = 1; k < kNumFeatures; ++k) a.x[k] = rng.normal();
        s.push_back(a);
    }
    return s;
}

TEST(Logistic, SeparableAndDeterministic) {
    const auto tr = one_dim(1, 1.0), ev = one_dim(2, 1.0);
    const auto a = logistic_baseline(tr, ev), b = logistic_baseline(tr, ev);
    EXPECT_DOUBLE_EQ(a.accuracy, 1.0);
    EXPECT_TRUE(a.converged);
    EXPECT_EQ(a.weights, b.weights);
    EXPECT_EQ(a.bias, b.bias);
    EXPECT_GT(a.weights[0], 0.0);
    std::vector<Sample> single(10);
    EXPECT_THROW(logistic_baseline(single, ev), std::invalid_argument);
}

/// Two-class toy suite separated by depth alone: correct Bell (depth 2) vs a
/// deeper buggy-labelled variant whose reference is its own ideal.
struct ToySuite {
    std::vector<SuiteEntry> entries;
    AnfisModel model;
};

ToySuite toy_suite() {
    ToySuite t;
    CircuitIR bell;
    bell.name = "bell";
    bell.n_qubits = 2;
    bell.gates = {make_gate(GateKind::H, {0}), make_gate(GateKind::CX, {0, 1})};
    for (int i = 0; i < 10; ++i) {
        SuiteEntry e;
        e.circuit = bell;
        e.circuit.name = "c" + std::to_string(i);
        if (i % 2) {
            e.circuit.gates.push_back(make_gate(GateKind::Z, {0}));
            e.circuit.label = Label::BUGGY;
        }
        e.ideal = simulate_ideal(e.circuit);
        e.counts = Counts{{{"00", 500}, {"11", 500}}, 1000};
        t.entries.push_back(e);
    }
    t.model.centers.assign(16, FeatureArray{});
    t.model.widths.assign(16, FeatureArray{1e3, 1e3, 1e3, 1e3, 1e3, 1e3, 1e3});
    Consequent q{};
    q[0] = 15 * 1.24;
    q[1 + 3] = -15;  // norm_depth
    t.model.consequents.assign(16, q);
    return t;
}

TEST(GridSearch, SeparatedSuitePicksNarrowestLowestPair) {
    const auto t = toy_suite();
    const auto r = threshold_grid_search(t.model, t.entries);
    EXPECT_TRUE(r.feasible);
    EXPECT_EQ(r.errors, 0);
    EXPECT_DOUBLE_EQ(r.u_rate, 0.0);
    EXPECT_NEAR(r.tau_bug, 0.15, 1e-12);
    EXPECT_NEAR(r.tau_noise, 0.20, 1e-12);
    const auto again = threshold_grid_search(t.model, t.entries);
    EXPECT_EQ(again.tau_bug, r.tau_bug);
    EXPECT_EQ(again.tau_noise, r.tau_noise);

    const auto rep = evaluate(t.model, t.entries);
    EXPECT_EQ(rep.correct, 10);
}

TEST(GridSearch, InfeasibleCapFallsBack) {
    const auto t = toy_suite();
    const auto r = threshold_grid_search(t.model, t.entries, -1.0);
    EXPECT_FALSE(r.feasible);
    EXPECT_DOUBLE_EQ(r.u_rate, 0.0);
    EXPECT_THROW(threshold_grid_search(t.model, std::span<const SuiteEntry>{}), std::invalid_argument);
}

TEST(ReportOutput, CsvNumbersMatchJson) {
    const auto t = toy_suite();
    auto preds = make_predictions(7, 2, 1);
    std::vector<FeatureVector> f;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        FeatureVector v;
        v.db_log = 0.01 * static_cast<double>(i * i);
        v.entropy = 1.0 / static_cast<double>(i + 3);
        f.push_back(v);
    }
    const auto r = summarize(preds, f);
    const auto j = to_json(r);
    std::istringstream csv(to_csv(r));
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, "section,key,value");
    int checked = 0;
    while (std::getline(csv, line)) {
        const auto a = line.find(','), b = line.find(',', a + 1);
        const std::string sec = line.substr(0, a), key = line.substr(a + 1, b - a - 1), val = line.substr(b + 1);
        if (sec == "metric" && j.contains(key)) {
            EXPECT_EQ(nlohmann::json::parse(val), j[key]) << key;
            ++checked;
        } else if (sec == "cohens_d") {
            EXPECT_EQ(nlohmann::json::parse(val), j["per_feature_cohens_d"][key]) << key;
            ++checked;
        }
    }
    EXPECT_EQ(checked, 14);
    EXPECT_NEAR(j["ci_eff"][0].get<double>(), r.ci_eff.low, 0.0);
}

}  // namespace
}  // namespace qtriage
