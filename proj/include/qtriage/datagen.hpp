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
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qtriage/circuit.hpp"
#include "qtriage/dist.hpp"
#include "qtriage/features.hpp"
#include "qtriage/io.hpp"
#include "qtriage/rng.hpp"
#include "qtriage/sim.hpp"

namespace qtriage {

inline const std::vector<std::string> &template_families() {
    static const std::vector<std::string> f = {
        "Bell", "GHZ",  "W",   "Cluster", "QFT", "Grover", "DeutschJozsa", "BernsteinVazirani", "VQE",
        "QAOA", "SuperdenseCoding", "PhaseEstimation", "SwapTest", "Clifford", "RepetitionCode",
        "HardwareEfficient"};
    return f;
}

/// Qubit counts a family accepts.
inline std::vector<int> family_qubit_counts(const std::string &family) {
    if (family == "Bell" || family == "SuperdenseCoding") return {2};
    if (family == "Grover") return {2, 3};
    if (family == "QAOA" || family == "PhaseEstimation") return {3, 4, 5};
    if (family == "SwapTest" || family == "RepetitionCode") return {3, 5};
    if (family.starts_with("DeutschJozsa")) return {2, 3, 4, 5};
    for (const auto &f : template_families()) {
        if (f == family) return {2, 3, 4, 5};
    }
    throw std::invalid_argument("unknown circuit family: " + family);
}

namespace templates {

using G = GateKind;
inline constexpr double kPi = std::numbers::pi;

struct Builder {
    std::vector<Gate> gates;

    Builder &add(GateKind k, std::vector<int> q, std::vector<double> p = {}) {
        gates.push_back(make_gate(k, std::move(q), std::move(p)));
        return *this;
    }
    Builder &all(GateKind k, int n) {
        for (int q = 0; q < n; ++q) add(k, {q});
        return *this;
    }
    /// Controlled-RY from RY/CX.
    Builder &cry(int c, int t, double theta) {
        add(G::RY, {t}, {theta / 2});
        add(G::CX, {c, t});
        add(G::RY, {t}, {-theta / 2});
        add(G::CX, {c, t});
        return *this;
    }
    /// Controlled-Z on three qubits via H-CCX-H on the target.
    Builder &ccz(int a, int b, int t) {
        add(G::H, {t});
        add(G::CCX, {a, b, t});
        add(G::H, {t});
        return *this;
    }
    /// Fourier transform on qubits [0, n): |x> -> sum_y e^{2 pi i x y / 2^n} |y>.
    Builder &qft(int n) {
        for (int j = n - 1; j >= 0; --j) {
            add(G::H, {j});
            for (int k = j - 1; k >= 0; --k) add(G::CP, {k, j}, {kPi / static_cast<double>(1 << (j - k))});
        }
        for (int i = 0; i < n / 2; ++i) add(G::SWAP, {i, n - 1 - i});
        return *this;
    }
    Builder &inverse_qft(int n) {
        for (int i = n / 2 - 1; i >= 0; --i) add(G::SWAP, {i, n - 1 - i});
        for (int j = 0; j < n; ++j) {
            for (int k = 0; k < j; ++k) add(G::CP, {k, j}, {-kPi / static_cast<double>(1 << (j - k))});
            add(G::H, {j});
        }
        return *this;
    }
};

inline void bell(Builder &b, Rng &rng) {
    switch (rng.below(5)) {
        case 0: b.add(G::H, {0}).add(G::CX, {0, 1}); break;
        case 1: b.add(G::H, {0}).add(G::CX, {0, 1}).add(G::Z, {0}); break;
        case 2: b.add(G::H, {0}).add(G::X, {1}).add(G::CX, {0, 1}); break;
        case 3: b.add(G::H, {0}).add(G::X, {1}).add(G::CX, {0, 1}).add(G::Z, {0}); break;
        default: b.add(G::RY, {0}, {kPi / 2}).add(G::RY, {1}, {kPi}).add(G::CX, {0, 1}); break;
    }
}

inline void ghz(Builder &b, int n, Rng &rng) {
    const bool star = rng.below(2) == 1;
    b.add(G::H, {0});
    for (int q = 1; q < n; ++q) b.add(G::CX, {star ? 0 : q - 1, q});
}

inline void w_state(Builder &b, int n) {
    b.add(G::X, {0});
    for (int k = 0; k + 1 < n; ++k) {
        b.cry(k, k + 1, 2.0 * std::acos(std::sqrt(1.0 / static_cast<double>(n - k))));
        b.add(G::CX, {k + 1, k});
    }
}

inline void cluster(Builder &b, int n, bool star) {
    b.all(G::H, n);
    for (int q = 1; q < n; ++q) b.add(G::CZ, {star ? 0 : q - 1, q});
}

inline void qft_family(Builder &b, int n, Rng &rng) {
    if (rng.below(2) == 0) {
        // Basis-state input: flat output magnitudes.
        const auto x = 1 + rng.below((std::uint64_t{1} << n) - 1);
        for (int q = 0; q < n; ++q) {
            if ((x >> q) & 1u) b.add(G::X, {q});
        }
    } else {
        // Period-2 input: peaks at 0 and 2^(n-1).
        for (int q = 1; q < n; ++q) b.add(G::H, {q});
    }
    b.qft(n);
}

inline void phase_oracle(Builder &b, int n, std::uint64_t marked) {
    for (int q = 0; q < n; ++q) {
        if (!((marked >> q) & 1u)) b.add(G::X, {q});
    }
    if (n == 2) b.add(G::CZ, {0, 1});
    else b.ccz(0, 1, 2);
    for (int q = 0; q < n; ++q) {
        if (!((marked >> q) & 1u)) b.add(G::X, {q});
    }
}

inline void grover(Builder &b, int n, std::uint64_t marked, int iterations) {
    b.all(G::H, n);
    for (int it = 0; it < iterations; ++it) {
        phase_oracle(b, n, marked);
        b.all(G::H, n).all(G::X, n);
        if (n == 2) b.add(G::CZ, {0, 1});
        else b.ccz(0, 1, 2);
        b.all(G::X, n).all(G::H, n);
    }
}

/// Inputs q0..q(n-2), ancilla q(n-1). mask = 0 gives a constant oracle; the
/// ancilla is returned to |0> so the whole register reads `mask`.
inline void query_oracle_circuit(Builder &b, int n, std::uint64_t mask, bool flip_constant) {
    const int anc = n - 1;
    b.add(G::X, {anc});
    b.all(G::H, n);
    if (mask == 0 && flip_constant) b.add(G::X, {anc});
    for (int q = 0; q < anc; ++q) {
        if ((mask >> q) & 1u) b.add(G::CX, {q, anc});
    }
    for (int q = 0; q < anc; ++q) b.add(G::H, {q});
    b.add(G::H, {anc}).add(G::X, {anc});
}

inline std::vector<double> angles(Rng &rng, int count, double lo, double hi) {
    std::vector<double> a;
    for (int i = 0; i < count; ++i) a.push_back(rng.uniform(lo, hi));
    return a;
}

inline void vqe(Builder &b, int n, Rng &rng) {
    const int reps = 1 + static_cast<int>(rng.below(2));
    for (int r = 0; r < reps; ++r) {
        for (int q = 0; q < n; ++q) b.add(G::RY, {q}, {rng.uniform(0.2, kPi - 0.2)});
        for (int q = 0; q + 1 < n; ++q) b.add(G::CX, {q, q + 1});
    }
    for (int q = 0; q < n; ++q) b.add(G::RY, {q}, {rng.uniform(0.2, kPi - 0.2)});
}

inline std::vector<std::pair<int, int>> qaoa_edges(int n, bool ring) {
    std::vector<std::pair<int, int>> e;
    for (int q = 0; q + 1 < n; ++q) e.emplace_back(q, q + 1);
    if (ring) e.emplace_back(n - 1, 0);
    return e;
}

inline void qaoa(Builder &b, int n, Rng &rng) {
    const bool ring = n == 3 || rng.below(2) == 1;
    const double gamma = rng.uniform(0.3, 0.9), beta = rng.uniform(0.2, 0.6);
    b.all(G::H, n);
    for (auto [u, v] : qaoa_edges(n, ring)) {
        b.add(G::CX, {u, v}).add(G::RZ, {v}, {2 * gamma}).add(G::CX, {u, v});
    }
    for (int q = 0; q < n; ++q) b.add(G::RX, {q}, {2 * beta});
}

inline void superdense(Builder &b, std::uint64_t message) {
    b.add(G::H, {0}).add(G::CX, {0, 1});
    if (message & 1u) b.add(G::X, {0});
    if (message & 2u) b.add(G::Z, {0});
    b.add(G::CX, {0, 1}).add(G::H, {0});
}

inline void phase_estimation(Builder &b, int n, std::uint64_t k) {
    const int t = n - 1;
    const double phi = static_cast<double>(k) / static_cast<double>(1 << t);
    b.add(G::X, {t});
    for (int q = 0; q < t; ++q) b.add(G::H, {q});
    for (int q = 0; q < t; ++q) b.add(G::CP, {q, t}, {2 * kPi * phi * static_cast<double>(1 << q)});
    b.inverse_qft(t);
}

inline void cswap(Builder &b, int c, int x, int y) {
    b.add(G::CX, {y, x}).add(G::CCX, {c, x, y}).add(G::CX, {y, x});
}

inline void swap_test(Builder &b, int n, Rng &rng) {
    const int half = (n - 1) / 2;
    for (int q = 1; q < n; ++q) b.add(G::RY, {q}, {rng.uniform(0.0, kPi)});
    b.add(G::H, {0});
    for (int i = 0; i < half; ++i) cswap(b, 0, 1 + i, 1 + half + i);
    b.add(G::H, {0});
}

inline void clifford(Builder &b, int n, Rng &rng) {
    static const std::vector<GateKind> one = {G::H, G::S, G::SDG, G::X, G::Z, G::H};
    const int len = 3 * n;
    b.add(G::H, {0});
    for (int i = 0; i < len; ++i) {
        if (rng.below(3) == 0) {
            const int a = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
            int c = static_cast<int>(rng.below(static_cast<std::uint64_t>(n - 1)));
            if (c >= a) ++c;
            b.add(rng.below(2) ? G::CX : G::CZ, {a, c});
        } else {
            b.add(rng.pick(one), {static_cast<int>(rng.below(static_cast<std::uint64_t>(n)))});
        }
    }
}

inline void repetition_code(Builder &b, int n, Rng &rng) {
    switch (rng.below(3)) {
        case 0: b.add(G::X, {0}); break;
        case 1: b.add(G::RY, {0}, {rng.uniform(0.3, kPi - 0.3)}); break;
        default: break;
    }
    b.add(G::CX, {0, 1}).add(G::CX, {0, 2});
    if (n == 5) b.add(G::CX, {0, 3}).add(G::CX, {1, 3}).add(G::CX, {1, 4}).add(G::CX, {2, 4});
    b.add(G::CX, {0, 1}).add(G::CX, {0, 2}).add(G::CCX, {1, 2, 0});
}

inline void hardware_efficient(Builder &b, int n, Rng &rng) {
    for (int r = 0; r < 2; ++r) {
        for (int q = 0; q < n; ++q) b.add(G::RY, {q}, {rng.uniform(0.2, kPi - 0.2)}).add(G::RZ, {q}, {rng.uniform(-kPi, kPi)});
        for (int q = 0; q + 1 < n; ++q) b.add(G::CZ, {q, q + 1});
    }
    for (int q = 0; q < n; ++q) b.add(G::RY, {q}, {rng.uniform(0.2, kPi - 0.2)});
}

}  // namespace templates

/// CORRECT circuit for a family. Sub-variants (which Bell state, secret
/// strings, angles, graph shape) are drawn from `variant_seed`.
/// "DeutschJozsa-constant" / "DeutschJozsa-balanced" pin the oracle type.
inline CircuitIR build_template(const std::string &family, int n, std::uint64_t variant_seed) {
    const auto allowed = family_qubit_counts(family);
    if (std::find(allowed.begin(), allowed.end(), n) == allowed.end()) {
        throw std::invalid_argument("family " + family + " does not support " + std::to_string(n) + " qubits");
    }
    using namespace templates;
    Rng rng(derive_seed(variant_seed, family, static_cast<std::uint64_t>(n)));
    Builder b;
    std::string fam = family;
    if (family == "Bell") bell(b, rng);
    else if (family == "GHZ") ghz(b, n, rng);
    else if (family == "W") w_state(b, n);
    else if (family == "Cluster") cluster(b, n, rng.below(2) == 1);
    else if (family == "QFT") qft_family(b, n, rng);
    else if (family == "Grover") grover(b, n, rng.below(std::uint64_t{1} << n), n == 2 ? 1 : 2);
    else if (family.starts_with("DeutschJozsa")) {
        const std::uint64_t inputs = std::uint64_t{1} << (n - 1);
        bool constant = rng.below(2) == 0;
        if (family == "DeutschJozsa-constant") constant = true;
        else if (family == "DeutschJozsa-balanced") constant = false;
        else if (family != "DeutschJozsa") throw std::invalid_argument("unknown circuit family: " + family);
        const std::uint64_t mask = constant ? 0 : 1 + rng.below(inputs - 1);
        query_oracle_circuit(b, n, mask, rng.below(2) == 1);
        fam = "DeutschJozsa";
    } else if (family == "BernsteinVazirani") {
        const std::uint64_t inputs = std::uint64_t{1} << (n - 1);
        query_oracle_circuit(b, n, 1 + rng.below(inputs - 1), false);
    } else if (family == "VQE") vqe(b, n, rng);
    else if (family == "QAOA") qaoa(b, n, rng);
    else if (family == "SuperdenseCoding") superdense(b, rng.below(4));
    else if (family == "PhaseEstimation") phase_estimation(b, n, rng.below(std::uint64_t{1} << (n - 1)));
    else if (family == "SwapTest") swap_test(b, n, rng);
    else if (family == "Clifford") clifford(b, n, rng);
    else if (family == "RepetitionCode") repetition_code(b, n, rng);
    else if (family == "HardwareEfficient") hardware_efficient(b, n, rng);
    else throw std::invalid_argument("unknown circuit family: " + family);

    CircuitIR c;
    c.family = fam;
    c.n_qubits = n;
    c.gates = std::move(b.gates);
    c.label = Label::CORRECT;
    std::string lower = fam;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char ch) { return std::tolower(ch); });
    c.name = lower + "_" + std::to_string(n) + "q_v" + std::to_string(variant_seed);
    validate(c);
    return c;
}

namespace detail {

inline std::optional<GateKind> substitute_kind(GateKind k) {
    switch (k) {
        case GateKind::CX: return GateKind::CZ;
        case GateKind::CZ: return GateKind::CX;
        case GateKind::CP: return GateKind::CX;
        case GateKind::SWAP: return GateKind::CX;
        case GateKind::H: return GateKind::X;
        case GateKind::X: return GateKind::H;
        case GateKind::RY: return GateKind::RX;
        case GateKind::RX: return GateKind::RY;
        case GateKind::RZ: return GateKind::RX;
        case GateKind::S:
        case GateKind::SDG:
        case GateKind::T:
        case GateKind::Z: return GateKind::X;
        case GateKind::Y: return GateKind::H;
        case GateKind::CCX: return std::nullopt;
    }
    return std::nullopt;
}

template <typename Pred>
std::vector<std::size_t> sites_where(const CircuitIR &c, Pred pred) {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < c.gates.size(); ++i) {
        if (pred(c.gates[i])) s.push_back(i);
    }
    return s;
}

}  // namespace detail

inline constexpr double kDegree = std::numbers::pi / 180.0;

/// One mutation per taxonomy class where it applies. Entangling gates are
/// preferred for MISSING_GATE / WRONG_GATE. With `stress`, the 5 and 15
/// degree small-angle variants are appended for the rotation closest to a
/// multiple of pi.
inline std::vector<BugSpec> enumerate_bugs(const CircuitIR &c, std::uint64_t seed, bool stress = false) {
    std::vector<BugSpec> out;
    if (c.gates.empty()) return out;
    Rng rng(derive_seed(seed, "bugs"));
    auto choose = [&](const std::vector<std::size_t> &primary, const std::vector<std::size_t> &fallback) {
        const auto &pool = primary.empty() ? fallback : primary;
        return pool.empty() ? std::optional<std::size_t>{} : std::optional<std::size_t>{rng.pick(pool)};
    };
    const auto all = detail::sites_where(c, [](const Gate &) { return true; });
    const auto two_q = detail::sites_where(c, [](const Gate &g) { return g.qubits.size() == 2; });

    if (auto s = choose(two_q, all)) out.push_back(make_bug(BugKind::MISSING_GATE, *s));

    const auto substitutable = detail::sites_where(c, [](const Gate &g) { return detail::substitute_kind(g.kind).has_value(); });
    const auto sub_two_q = detail::sites_where(
        c, [](const Gate &g) { return g.qubits.size() == 2 && detail::substitute_kind(g.kind).has_value(); });
    if (auto s = choose(sub_two_q, substitutable)) {
        BugSpec b = make_bug(BugKind::WRONG_GATE, *s);
        b.replacement = detail::substitute_kind(c.gates[*s].kind);
        out.push_back(b);
    }

    const auto param = detail::sites_where(c, [](const Gate &g) { return !g.params.empty(); });
    if (auto s = choose(param, {})) {
        BugSpec b = make_bug(BugKind::WRONG_ANGLE, *s);
        b.angle = c.gates[*s].params[0] / 2.0;
        out.push_back(b);
    }

    const auto retargetable = detail::sites_where(c, [&](const Gate &g) {
        return static_cast<int>(g.qubits.size()) < c.n_qubits || g.qubits.size() == 2;
    });
    if (auto s = choose(retargetable, {})) {
        const Gate &g = c.gates[*s];
        std::vector<int> q = g.qubits;
        std::vector<int> free;
        for (int k = 0; k < c.n_qubits; ++k) {
            if (std::find(q.begin(), q.end(), k) == q.end()) free.push_back(k);
        }
        if (free.empty()) {
            std::swap(q[0], q[1]);  // two-qubit gate on a two-qubit register: reverse it
        } else {
            q.back() = rng.pick(free);
        }
        BugSpec b = make_bug(BugKind::WRONG_TARGET, *s);
        b.qubits = q;
        out.push_back(b);
    }

    {
        BugSpec b = make_bug(BugKind::EXTRA_GATE, static_cast<std::size_t>(rng.below(c.gates.size() + 1)));
        b.inserted = make_gate(GateKind::Z, {static_cast<int>(rng.below(static_cast<std::uint64_t>(c.n_qubits)))});
        out.push_back(b);
    }

    if (stress) {
        const auto rot = detail::sites_where(c, [](const Gate &g) {
            return g.kind == GateKind::RX || g.kind == GateKind::RY;
        });
        std::optional<std::size_t> best;
        double best_dist = INFINITY;
        for (std::size_t s : rot) {
            const double th = c.gates[s].params[0];
            const double d = std::abs(th - std::round(th / std::numbers::pi) * std::numbers::pi);
            if (d < best_dist && std::abs(th) > 1e-9) best_dist = d, best = s;
        }
        if (best) {
            for (double deg : {5.0, 15.0}) {
                BugSpec b = make_bug(BugKind::WRONG_ANGLE, *best);
                b.angle = c.gates[*best].params[0] - deg * kDegree;
                out.push_back(b);
            }
        }
    }
    return out;
}

inline double total_variation(const ProbDist &a, const ProbDist &b) {
    if (a.n_qubits() != b.n_qubits()) throw std::invalid_argument("total_variation: dimension mismatch");
    double d = 0.0;
    for (std::size_t i = 0; i < a.probs().size(); ++i) d += std::abs(a.probs()[i] - b.probs()[i]);
    return 0.5 * d;
}

/// Mutants of `c` whose ideal output differs from the original's by at least
/// `min_shift` in total variation. Smaller shifts are equivalent mutants as
/// far as computational-basis statistics can tell.
inline std::vector<BugSpec> observable_bugs(const CircuitIR &c, const std::vector<BugSpec> &specs, double min_shift) {
    if (min_shift <= 0.0) return specs;
    const ProbDist ref = simulate_ideal(c);
    std::vector<BugSpec> out;
    for (const auto &b : specs) {
        if (total_variation(simulate_ideal(inject_bug(c, b)), ref) >= min_shift) out.push_back(b);
    }
    return out;
}

inline constexpr double kEquivalentMutantTolerance = 1e-6;

struct GenConfig {
    int n_train_correct = 1000;
    int n_train_buggy = 1000;
    std::int64_t shots = 4096;
    std::uint64_t seed = 0;
    NoiseModel noise;
    std::vector<std::string> families = template_families();
    // Mutants whose ideal output is within this total-variation distance of
    // the intended circuit's are equivalent in the Z basis and are redrawn.
    // 0 keeps every mutant.
    double min_bug_shift = kEquivalentMutantTolerance;
};

inline void validate(const GenConfig &g) {
    if (g.n_train_correct < 1 || g.n_train_buggy < 1) throw std::invalid_argument("gen config: totals must be positive");
    if (g.shots < 256) throw std::invalid_argument("gen config: shots must be >= 256");
    if (g.families.empty()) throw std::invalid_argument("gen config: family set is empty");
    if (!(g.min_bug_shift >= 0.0 && g.min_bug_shift < 1.0)) throw std::invalid_argument("gen config: min_bug_shift outside [0,1)");
    for (const auto &f : g.families) family_qubit_counts(f);
    validate(g.noise);
}

/// Variant seeds below this bound are reserved for training templates;
/// validation circuits use seeds at or above it.
inline constexpr std::uint64_t kValidationSeedBase = 1'000'000'000ull;

/// Simulated execution: ideal reference, noisy distribution, sampled counts.
struct Execution {
    ProbDist ideal;
    ProbDist noisy;
    Counts counts;
};

inline Execution execute(const CircuitIR &c, const NoiseModel &nm, std::int64_t shots, std::uint64_t seed,
                         SimStats *stats = nullptr) {
    Execution e;
    e.ideal = simulate_ideal(c);
    e.noisy = simulate_noisy(c, nm, stats);
    e.counts = sample_counts(e.noisy, shots, seed);
    return e;
}

/// Ideal reference for a buggy circuit is the ideal output of the circuit it
/// was derived from; the correct circuit is what the developer intended.
inline DataRow make_row(const std::string &name, const CircuitIR &executed, const ProbDist &reference,
                        const Counts &counts) {
    DataRow r;
    r.name = name;
    r.label = executed.label == Label::CORRECT ? 1 : 0;
    r.features = extract_features(counts, executed, reference);
    return r;
}

inline std::vector<DataRow> generate_training_set(const GenConfig &cfg) {
    validate(cfg);
    std::vector<DataRow> rows;
    rows.reserve(static_cast<std::size_t>(cfg.n_train_correct + cfg.n_train_buggy));
    auto random_template = [&](Rng &rng) {
        const auto &fam = rng.pick(cfg.families);
        const int n = rng.pick(family_qubit_counts(fam));
        const std::uint64_t variant = rng.below(kValidationSeedBase);
        return build_template(fam, n, variant);
    };
    for (int i = 0; i < cfg.n_train_correct; ++i) {
        Rng rng(derive_seed(cfg.seed, "train-correct", static_cast<std::uint64_t>(i)));
        const CircuitIR c = random_template(rng);
        const auto e = execute(c, cfg.noise, cfg.shots, rng.next_u64());
        rows.push_back(make_row("train_correct_" + std::to_string(i) + "_" + c.name, c, e.ideal, e.counts));
    }
    for (int i = 0; i < cfg.n_train_buggy; ++i) {
        Rng rng(derive_seed(cfg.seed, "train-buggy", static_cast<std::uint64_t>(i)));
        CircuitIR c, buggy;
        ProbDist reference;
        for (;;) {
            c = random_template(rng);
            const auto specs = observable_bugs(c, enumerate_bugs(c, rng.next_u64()), cfg.min_bug_shift);
            if (specs.empty()) continue;
            buggy = inject_bug(c, rng.pick(specs));
            reference = simulate_ideal(c);
            break;
        }
        const auto noisy = simulate_noisy(buggy, cfg.noise);
        const auto counts = sample_counts(noisy, cfg.shots, rng.next_u64());
        rows.push_back(make_row("train_buggy_" + std::to_string(i) + "_" + buggy.name, buggy, reference, counts));
    }
    return rows;
}

inline std::string to_jsonl(const std::vector<DataRow> &rows) {
    std::string s;
    for (const auto &r : rows) s += to_json(r).dump() + "\n";
    return s;
}

inline std::vector<DataRow> rows_from_jsonl(const std::filesystem::path &path) {
    std::vector<DataRow> rows;
    for (const auto &j : read_jsonl_file(path)) rows.push_back(datarow_from_json(j));
    return rows;
}

struct SuiteEntry {
    CircuitIR circuit;
    Counts counts;
    ProbDist ideal;  // the intended (correct) circuit's ideal output
};

struct SuiteSpec {
    std::string name;
    std::string family;  // template family used to build it
    int n = 2;
    std::uint64_t variant = 0;
    std::string tag;  // family tag recorded on the circuit; empty = template family
    // Buggy entries: either an explicit bug, or auto-pick from enumerate_bugs.
    bool buggy = false;
    std::optional<BugSpec> bug;
    std::optional<std::vector<Gate>> gates;  // explicit gate list instead of a template
};

/// Family tag for the five static circuits that take the slots of the
/// feed-forward teleportation family.
inline constexpr std::string_view kTeleportationSubstitute = "StaticEntangled";

namespace detail {

inline std::vector<SuiteSpec> validation_plan() {
    using templates::kPi;
    using G = GateKind;
    std::vector<SuiteSpec> plan;
    std::uint64_t v = kValidationSeedBase;
    auto add_family = [&](const std::string &fam, std::vector<int> ns, int n_correct, int n_buggy,
                          std::string tag = {}) {
        for (int i = 0; i < n_correct + n_buggy; ++i) {
            SuiteSpec s;
            s.family = fam;
            s.n = ns[static_cast<std::size_t>(i) % ns.size()];
            s.tag = tag;
            s.buggy = i >= n_correct;
            // Buggy slots skip variants that only admit equivalent mutants.
            while (s.buggy && observable_bugs(build_template(fam, s.n, v), enumerate_bugs(build_template(fam, s.n, v), v),
                                              kEquivalentMutantTolerance)
                                  .empty()) {
                ++v;
            }
            s.variant = v++;
            plan.push_back(s);
        }
    };
    auto named = [&](std::string name, std::string fam, int n, std::vector<Gate> gates, bool buggy,
                     std::optional<BugSpec> bug = {}) {
        SuiteSpec s;
        s.name = std::move(name);
        s.family = std::move(fam);
        s.n = n;
        s.variant = v++;
        s.gates = std::move(gates);
        s.buggy = buggy;
        s.bug = std::move(bug);
        plan.push_back(s);
    };
    const std::vector<Gate> bell_phi = {make_gate(G::H, {0}), make_gate(G::CX, {0, 1})};
    const std::vector<Gate> bell_ry = {make_gate(G::RY, {0}, {kPi / 2}), make_gate(G::RY, {1}, {kPi}),
                                       make_gate(G::CX, {0, 1})};
    auto wrong_angle = [](std::size_t site, double angle) {
        BugSpec b = make_bug(BugKind::WRONG_ANGLE, site);
        b.angle = angle;
        return b;
    };
    auto missing = [](std::size_t site) { return make_bug(BugKind::MISSING_GATE, site); };

    // Bell: 7 correct, 7 buggy.
    named("bell_phi_plus_correct", "Bell", 2, bell_phi, false);
    named("bell_ry_correct", "Bell", 2, bell_ry, false);
    add_family("Bell", {2}, 5, 0);
    {
        BugSpec z = make_bug(BugKind::EXTRA_GATE, 2);
        z.inserted = make_gate(G::Z, {0});
        named("bell_extra_z_buggy", "Bell", 2, bell_phi, true, z);
    }
    named("bell_angle_5deg_buggy", "Bell", 2, bell_ry, true, wrong_angle(1, kPi - 5 * kDegree));
    named("bell_angle_15deg_buggy", "Bell", 2, bell_ry, true, wrong_angle(1, kPi - 15 * kDegree));
    named("bell_missing_cx_buggy", "Bell", 2, bell_phi, true, missing(1));
    {
        BugSpec cz = make_bug(BugKind::WRONG_GATE, 1);
        cz.replacement = G::CZ;
        named("bell_cz_instead_of_cx_buggy", "Bell", 2, bell_phi, true, cz);
    }
    add_family("Bell", {2}, 0, 2);

    add_family("GHZ", {3, 4, 5}, 7, 4);
    add_family("W", {3, 4}, 2, 2);
    add_family("Cluster", {4, 3, 5}, 2, 2);

    {
        std::vector<Gate> qft2 = templates::Builder{}.add(G::X, {0}).qft(2).gates;
        named("qft_2q_correct", "QFT", 2, qft2, false);
        std::vector<Gate> qft4 = templates::Builder{}.add(G::H, {1}).add(G::H, {2}).add(G::H, {3}).qft(4).gates;
        // qft4 = H H H | H3 CP(2,3) CP(1,3) CP(0,3) ...; drop one controlled phase.
        const auto cp = std::find_if(qft4.begin(), qft4.end(), [](const Gate &g) { return g.kind == G::CP; });
        named("qft_4q_missing_cp", "QFT", 4, qft4, true, missing(static_cast<std::size_t>(cp - qft4.begin())));
    }
    add_family("QFT", {3, 4, 5}, 4, 3);

    {
        templates::Builder g2;
        templates::grover(g2, 2, 3, 1);
        named("grover_2q_correct", "Grover", 2, g2.gates, false);
        templates::Builder g2x2;
        templates::grover(g2x2, 2, 2, 2);
        named("grover_2q_2iter_correct", "Grover", 2, g2x2.gates, false);
        // Oracle is H H | CZ | ...; without its CZ no state is marked.
        const auto cz = std::find_if(g2.gates.begin(), g2.gates.end(), [](const Gate &g) { return g.kind == G::CZ; });
        named("grover_2q_wrong_oracle", "Grover", 2, g2.gates, true,
              missing(static_cast<std::size_t>(cz - g2.gates.begin())));
    }
    add_family("Grover", {2, 3}, 1, 2);

    {
        templates::Builder dj;
        templates::query_oracle_circuit(dj, 3, 0, false);
        named("deutsch_jozsa_constant_correct", "DeutschJozsa", 3, dj.gates, false);
    }
    add_family("DeutschJozsa-balanced", {4}, 1, 0);
    add_family("DeutschJozsa", {3, 4}, 0, 2);
    add_family("BernsteinVazirani", {3, 4, 5}, 2, 2);
    add_family("VQE", {2, 3, 4}, 5, 3);
    {
        templates::Builder tri;
        tri.all(G::H, 3);
        for (auto [u, w] : templates::qaoa_edges(3, true)) tri.add(G::CX, {u, w}).add(G::RZ, {w}, {1.2}).add(G::CX, {u, w});
        for (int q = 0; q < 3; ++q) tri.add(G::RX, {q}, {0.8});
        named("qaoa_triangle_correct", "QAOA", 3, tri.gates, false);
        // Drop the RZ of the closing edge: that edge no longer contributes cost phase.
        named("qaoa_triangle_missing_edge", "QAOA", 3, tri.gates, true, missing(3 + 3 * 2 + 1));
    }
    add_family("QAOA", {4, 3}, 2, 1);
    add_family("GHZ", {3, 4, 5}, 2, 1, std::string(kTeleportationSubstitute));
    add_family("Cluster", {3, 4}, 1, 1, std::string(kTeleportationSubstitute));
    {
        templates::Builder sd00, sd11;
        templates::superdense(sd00, 0);
        templates::superdense(sd11, 3);
        named("superdense_00_correct", "SuperdenseCoding", 2, sd00.gates, false);
        named("superdense_11_correct", "SuperdenseCoding", 2, sd11.gates, false);
        // Message 11 needs both X and Z; dropping the Z leaves an incomplete encoding.
        named("superdense_11_incomplete", "SuperdenseCoding", 2, sd11.gates, true, missing(3));
    }
    add_family("SuperdenseCoding", {2}, 2, 1);
    add_family("PhaseEstimation", {3}, 3, 2);
    add_family("SwapTest", {3, 5}, 2, 2);
    add_family("Clifford", {3, 4, 2}, 2, 1);
    add_family("RepetitionCode", {3, 5}, 3, 2);
    add_family("HardwareEfficient", {2, 3, 4, 5}, 6, 2);
    return plan;
}

}  // namespace detail

struct ValidationSuite {
    std::vector<SuiteEntry> entries;
    nlohmann::json metadata;
};

inline ValidationSuite generate_validation_suite(std::uint64_t seed, const NoiseModel &noise,
                                                 std::int64_t shots = 4096, SimStats *stats = nullptr) {
    validate(noise);
    ValidationSuite suite;
    std::set<std::string> names;
    for (const auto &spec : detail::validation_plan()) {
        CircuitIR base;
        if (spec.gates) {
            base.name = spec.name;
            base.family = spec.family;
            base.n_qubits = spec.n;
            base.gates = *spec.gates;
            validate(base);
        } else {
            base = build_template(spec.family, spec.n, spec.variant);
        }
        if (!spec.tag.empty()) base.family = spec.tag;
        CircuitIR c = base;
        if (spec.buggy) {
            BugSpec bug;
            if (spec.bug) {
                bug = *spec.bug;
            } else {
                Rng pick(derive_seed(spec.variant, "suite-bug-pick"));
                const auto specs = observable_bugs(base, enumerate_bugs(base, spec.variant), kEquivalentMutantTolerance);
                bug = pick.pick(specs);
            }
            c = inject_bug(base, bug);
            c.name = spec.name.empty() ? base.name + "_" + c.name.substr(base.name.size() + 1) + "_buggy" : spec.name;
        } else {
            c.name = spec.name.empty() ? base.name + "_correct" : spec.name;
        }
        if (!names.insert(c.name).second) throw std::logic_error("duplicate suite name " + c.name);
        SuiteEntry e;
        e.circuit = c;
        e.ideal = simulate_ideal(base);
        e.counts = sample_counts(simulate_noisy(c, noise, stats), shots, derive_seed(seed, "suite", spec.variant));
        suite.entries.push_back(std::move(e));
    }
    suite.metadata = {{"size", suite.entries.size()},
                      {"substitutions",
                       {{{"replaces", "Teleportation"},
                         {"family", std::string(kTeleportationSubstitute)},
                         {"count", 5},
                         {"reason", "feed-forward circuits are not representable; static GHZ/graph-state circuits fill the slots"}}}}};
    return suite;
}

/// Writes circuits/, counts/, ideal/, manifest.json and suite_meta.json under `dir`.
inline void write_suite(const ValidationSuite &suite, const std::filesystem::path &dir) {
    auto manifest = nlohmann::json::array();
    for (const auto &e : suite.entries) {
        const std::string base = e.circuit.name + ".json";
        write_json_file(dir / "circuits" / base, to_json(e.circuit));
        write_json_file(dir / "counts" / base, to_json(e.counts));
        write_json_file(dir / "ideal" / base, to_json(e.ideal));
        manifest.push_back({{"circuit", "circuits/" + base},
                            {"counts", "counts/" + base},
                            {"ideal", "ideal/" + base},
                            {"label", e.circuit.label == Label::CORRECT ? "CORRECT" : "BUGGY"},
                            {"family", e.circuit.family}});
    }
    write_json_file(dir / "manifest.json", manifest);
    write_json_file(dir / "suite_meta.json", suite.metadata);
}

inline ValidationSuite read_suite(const std::filesystem::path &dir) {
    const auto manifest = read_json_file(dir / "manifest.json");
    if (!manifest.is_array()) throw std::invalid_argument("suite manifest must be a JSON array");
    ValidationSuite suite;
    for (const auto &m : manifest) {
        SuiteEntry e;
        e.circuit = circuit_from_json(read_json_file(dir / m.at("circuit").get<std::string>()));
        e.counts = counts_from_json(read_json_file(dir / m.at("counts").get<std::string>()));
        e.ideal = probdist_from_json(read_json_file(dir / m.at("ideal").get<std::string>()));
        suite.entries.push_back(std::move(e));
    }
    if (std::filesystem::exists(dir / "suite_meta.json")) suite.metadata = read_json_file(dir / "suite_meta.json");
    return suite;
}

}  // namespace qtriage
