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
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "qtriage/rng.hpp"

namespace qtriage {

enum class GateKind { H, X, Y, Z, S, SDG, T, RX, RY, RZ, CX, CZ, CP, SWAP, CCX };

inline constexpr std::array<std::string_view, 15> kGateNames = {"H",  "X",  "Y",  "Z",  "S",  "SDG", "T",  "RX",
                                                                 "RY", "RZ", "CX", "CZ", "CP", "SWAP", "CCX"};

inline std::string_view to_string(GateKind k) { return kGateNames[static_cast<std::size_t>(k)]; }

inline GateKind gate_kind_from_string(std::string_view s) {
    for (std::size_t i = 0; i < kGateNames.size(); ++i) {
        if (kGateNames[i] == s) return static_cast<GateKind>(i);
    }
    throw std::invalid_argument("unknown gate kind: " + std::string(s));
}

inline int arity(GateKind k) {
    switch (k) {
        case GateKind::CX:
        case GateKind::CZ:
        case GateKind::CP:
        case GateKind::SWAP: return 2;
        case GateKind::CCX: return 3;
        default: return 1;
    }
}

inline int param_count(GateKind k) {
    switch (k) {
        case GateKind::RX:
        case GateKind::RY:
        case GateKind::RZ:
        case GateKind::CP: return 1;
        default: return 0;
    }
}

struct Gate {
    GateKind kind = GateKind::H;
    std::vector<int> qubits;
    std::vector<double> params;

    bool operator==(const Gate &) const = default;
};

inline Gate make_gate(GateKind k, std::vector<int> qubits, std::vector<double> params = {}) {
    return Gate{k, std::move(qubits), std::move(params)};
}

enum class Label { CORRECT, BUGGY };

enum class BugKind { MISSING_GATE, WRONG_GATE, WRONG_ANGLE, WRONG_TARGET, EXTRA_GATE };

inline constexpr std::array<std::string_view, 5> kBugNames = {"MISSING_GATE", "WRONG_GATE", "WRONG_ANGLE",
                                                              "WRONG_TARGET", "EXTRA_GATE"};

inline std::string_view to_string(BugKind k) { return kBugNames[static_cast<std::size_t>(k)]; }

inline BugKind bug_kind_from_string(std::string_view s) {
    for (std::size_t i = 0; i < kBugNames.size(); ++i) {
        if (kBugNames[i] == s) return static_cast<BugKind>(i);
    }
    throw std::invalid_argument("unknown bug kind: " + std::string(s));
}

/// One mutation. Only the detail field matching `kind` is consulted:
/// WRONG_GATE -> replacement, WRONG_ANGLE -> angle, WRONG_TARGET -> qubits,
/// EXTRA_GATE -> inserted.
struct BugSpec {
    BugKind kind = BugKind::MISSING_GATE;
    std::size_t site = 0;
    std::optional<GateKind> replacement;
    std::optional<double> angle;
    std::vector<int> qubits;
    std::optional<Gate> inserted;

    bool operator==(const BugSpec &) const = default;
};

inline BugSpec make_bug(BugKind kind, std::size_t site) {
    BugSpec b;
    b.kind = kind;
    b.site = site;
    return b;
}

struct CircuitIR {
    std::string name;
    std::string family;
    Label label = Label::CORRECT;
    int n_qubits = 2;
    std::vector<Gate> gates;
    std::optional<BugSpec> bug;

    bool operator==(const CircuitIR &) const = default;
};

inline constexpr int kMinQubits = 2;
inline constexpr int kMaxQubits = 5;

inline void validate(const Gate &g, int n_qubits) {
    if (static_cast<int>(g.qubits.size()) != arity(g.kind)) {
        throw std::invalid_argument("gate " + std::string(to_string(g.kind)) + " has wrong number of qubits");
    }
    if (static_cast<int>(g.params.size()) != param_count(g.kind)) {
        throw std::invalid_argument("gate " + std::string(to_string(g.kind)) + " has wrong number of params");
    }
    for (std::size_t i = 0; i < g.qubits.size(); ++i) {
        if (g.qubits[i] < 0 || g.qubits[i] >= n_qubits) throw std::invalid_argument("gate qubit index out of range");
        for (std::size_t k = 0; k < i; ++k) {
            if (g.qubits[k] == g.qubits[i]) throw std::invalid_argument("gate qubits are not distinct");
        }
    }
    for (double p : g.params) {
        if (!std::isfinite(p)) throw std::invalid_argument("gate parameter is not finite");
    }
}

inline void validate(const CircuitIR &c) {
    if (c.n_qubits < kMinQubits || c.n_qubits > kMaxQubits) {
        throw std::invalid_argument("circuit qubit count must be in [2,5]");
    }
    for (const auto &g : c.gates) validate(g, c.n_qubits);
}

/// Greedy layering: two gates conflict iff they share a qubit.
inline int depth(const CircuitIR &c) {
    std::vector<int> layer(static_cast<std::size_t>(std::max(c.n_qubits, 0)), 0);
    int d = 0;
    for (const auto &g : c.gates) {
        int l = 0;
        for (int q : g.qubits) l = std::max(l, layer.at(static_cast<std::size_t>(q)));
        ++l;
        for (int q : g.qubits) layer[static_cast<std::size_t>(q)] = l;
        d = std::max(d, l);
    }
    return d;
}

inline double norm_depth(int d) {
    if (d < 0) throw std::invalid_argument("depth must be non-negative");
    return std::log1p(static_cast<double>(d));
}

/// Fraction of gates acting on exactly two qubits (CCX counts only in the
/// denominator). Empty circuits give 0.
inline double two_qubit_density(const CircuitIR &c) {
    if (c.gates.empty()) return 0.0;
    const auto n2 = std::count_if(c.gates.begin(), c.gates.end(), [](const Gate &g) { return g.qubits.size() == 2; });
    return static_cast<double>(n2) / static_cast<double>(c.gates.size());
}

inline CircuitIR inject_bug(const CircuitIR &c, const BugSpec &spec) {
    if (c.label != Label::CORRECT) throw std::invalid_argument("inject_bug: circuit is already buggy");
    CircuitIR out = c;
    auto &gates = out.gates;
    const bool insert = spec.kind == BugKind::EXTRA_GATE;
    if (insert ? spec.site > gates.size() : spec.site >= gates.size()) {
        throw std::invalid_argument("inject_bug: site out of range");
    }
    switch (spec.kind) {
        case BugKind::MISSING_GATE: gates.erase(gates.begin() + static_cast<std::ptrdiff_t>(spec.site)); break;
        case BugKind::WRONG_GATE: {
            if (!spec.replacement) throw std::invalid_argument("WRONG_GATE needs a replacement kind");
            Gate &g = gates[spec.site];
            if (arity(*spec.replacement) != arity(g.kind)) throw std::invalid_argument("WRONG_GATE: arity mismatch");
            if (param_count(*spec.replacement) != static_cast<int>(g.params.size())) {
                // Parameterised replacements inherit a zero angle; parameterless ones drop it.
                g.params.assign(static_cast<std::size_t>(param_count(*spec.replacement)), 0.0);
            }
            g.kind = *spec.replacement;
            break;
        }
        case BugKind::WRONG_ANGLE: {
            if (!spec.angle) throw std::invalid_argument("WRONG_ANGLE needs an angle");
            Gate &g = gates[spec.site];
            if (g.params.empty()) throw std::invalid_argument("WRONG_ANGLE on a parameterless gate");
            g.params[0] = *spec.angle;
            break;
        }
        case BugKind::WRONG_TARGET: gates[spec.site].qubits = spec.qubits; break;
        case BugKind::EXTRA_GATE: {
            if (!spec.inserted) throw std::invalid_argument("EXTRA_GATE needs a gate to insert");
            gates.insert(gates.begin() + static_cast<std::ptrdiff_t>(spec.site), *spec.inserted);
            break;
        }
    }
    validate(out);
    out.label = Label::BUGGY;
    out.bug = spec;
    std::string suffix(to_string(spec.kind));
    std::transform(suffix.begin(), suffix.end(), suffix.begin(), [](unsigned char ch) { return std::tolower(ch); });
    out.name = c.name + "_" + suffix;
    return out;
}

// JSON {"kind": str, "qubits": [int], "params": [float]}
inline nlohmann::json to_json(const Gate &g) {
    return {{"kind", std::string(to_string(g.kind))}, {"qubits", g.qubits}, {"params", g.params}};
}

inline Gate gate_from_json(const nlohmann::json &j) {
    Gate g;
    g.kind = gate_kind_from_string(j.at("kind").get<std::string>());
    g.qubits = j.at("qubits").get<std::vector<int>>();
    g.params = j.contains("params") ? j.at("params").get<std::vector<double>>() : std::vector<double>{};
    return g;
}

inline nlohmann::json to_json(const BugSpec &b) {
    nlohmann::json j{{"kind", std::string(to_string(b.kind))}, {"site", b.site}};
    if (b.replacement) j["replacement"] = std::string(to_string(*b.replacement));
    if (b.angle) j["angle"] = *b.angle;
    if (!b.qubits.empty()) j["qubits"] = b.qubits;
    if (b.inserted) j["gate"] = to_json(*b.inserted);
    return j;
}

inline BugSpec bugspec_from_json(const nlohmann::json &j) {
    BugSpec b;
    b.kind = bug_kind_from_string(j.at("kind").get<std::string>());
    b.site = j.at("site").get<std::size_t>();
    if (j.contains("replacement")) b.replacement = gate_kind_from_string(j.at("replacement").get<std::string>());
    if (j.contains("angle")) b.angle = j.at("angle").get<double>();
    if (j.contains("qubits")) b.qubits = j.at("qubits").get<std::vector<int>>();
    if (j.contains("gate")) b.inserted = gate_from_json(j.at("gate"));
    return b;
}

inline nlohmann::json to_json(const CircuitIR &c) {
    nlohmann::json j{{"name", c.name},
                     {"family", c.family},
                     {"label", c.label == Label::CORRECT ? "CORRECT" : "BUGGY"},
                     {"n_qubits", c.n_qubits},
                     {"gates", nlohmann::json::array()}};
    for (const auto &g : c.gates) j["gates"].push_back(to_json(g));
    if (c.bug) j["bug"] = to_json(*c.bug);
    return j;
}

inline CircuitIR circuit_from_json(const nlohmann::json &j) {
    CircuitIR c;
    c.name = j.at("name").get<std::string>();
    c.family = j.value("family", std::string{});
    const auto label = j.value("label", std::string{"CORRECT"});
    if (label != "CORRECT" && label != "BUGGY") throw std::invalid_argument("circuit label must be CORRECT or BUGGY");
    c.label = label == "CORRECT" ? Label::CORRECT : Label::BUGGY;
    c.n_qubits = j.at("n_qubits").get<int>();
    for (const auto &g : j.at("gates")) c.gates.push_back(gate_from_json(g));
    if (j.contains("bug") && !j.at("bug").is_null()) c.bug = bugspec_from_json(j.at("bug"));
    validate(c);
    return c;
}

/// Content hash over the canonical JSON form.
inline std::uint64_t content_hash(const CircuitIR &c) { return fnv1a(to_json(c).dump()); }

}  // namespace qtriage
