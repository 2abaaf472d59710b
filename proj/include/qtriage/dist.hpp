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
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace qtriage {

/// Measurement histogram keyed by bitstring text. Text is big-endian: the
/// leftmost character is the highest qubit index.
struct Counts {
    std::map<std::string, std::int64_t> entries;
    std::int64_t shots = 0;

    std::size_t n_qubits() const { return entries.empty() ? 0 : entries.begin()->first.size(); }
};

/// Renders basis-state index `value` as big-endian text of `n` characters.
inline std::string to_bitstring(std::uint64_t value, int n) {
    std::string s(static_cast<std::size_t>(n), '0');
    for (int q = 0; q < n; ++q) {
        if ((value >> q) & 1u) s[static_cast<std::size_t>(n - 1 - q)] = '1';
    }
    return s;
}

inline std::uint64_t from_bitstring(const std::string &s) {
    std::uint64_t v = 0;
    for (char c : s) {
        if (c != '0' && c != '1') throw std::invalid_argument("bitstring has non-binary character: " + s);
        v = (v << 1) | static_cast<std::uint64_t>(c == '1');
    }
    return v;
}

inline void validate(const Counts &c) {
    if (c.entries.empty()) throw std::invalid_argument("counts are empty");
    if (c.shots <= 0) throw std::invalid_argument("shots must be positive");
    const std::size_t n = c.entries.begin()->first.size();
    if (n == 0 || n > 20) throw std::invalid_argument("unsupported bitstring length");
    std::int64_t total = 0;
    for (const auto &[key, count] : c.entries) {
        if (key.size() != n) throw std::invalid_argument("inconsistent bitstring lengths in counts");
        from_bitstring(key);
        if (count < 0) throw std::invalid_argument("negative count for " + key);
        total += count;
    }
    if (total != c.shots) throw std::invalid_argument("counts do not sum to shots");
}

/// Dense distribution over 2^n basis states; index bit q is qubit q.
class ProbDist {
  public:
    ProbDist() = default;

    ProbDist(int n_qubits, std::vector<double> probs) : n_qubits_(n_qubits), probs_(std::move(probs)) {
        if (n_qubits_ < 1 || n_qubits_ > 20) throw std::invalid_argument("ProbDist: bad qubit count");
        if (probs_.size() != (std::size_t{1} << n_qubits_)) throw std::invalid_argument("ProbDist: size is not 2^n");
        double sum = 0.0;
        for (double p : probs_) {
            if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("ProbDist: entry outside [0,1]");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("ProbDist: entries do not sum to 1");
    }

    static ProbDist uniform(int n) {
        const std::size_t dim = std::size_t{1} << n;
        return ProbDist(n, std::vector<double>(dim, 1.0 / static_cast<double>(dim)));
    }

    static ProbDist delta(int n, std::uint64_t index) {
        std::vector<double> p(std::size_t{1} << n, 0.0);
        p.at(index) = 1.0;
        return ProbDist(n, std::move(p));
    }

    int n_qubits() const { return n_qubits_; }
    std::size_t size() const { return probs_.size(); }
    double operator[](std::size_t i) const { return probs_[i]; }
    std::span<const double> probs() const { return probs_; }

    /// Probability of a big-endian bitstring.
    double at(const std::string &bits) const { return probs_.at(from_bitstring(bits)); }

    bool operator==(const ProbDist &) const = default;

  private:
    int n_qubits_ = 0;
    std::vector<double> probs_;
};

inline ProbDist from_counts(const Counts &c) {
    validate(c);
    const int n = static_cast<int>(c.n_qubits());
    std::vector<double> p(std::size_t{1} << n, 0.0);
    const double shots = static_cast<double>(c.shots);
    for (const auto &[key, count] : c.entries) p[from_bitstring(key)] = static_cast<double>(count) / shots;
    return ProbDist(n, std::move(p));
}

/// Shannon entropy in bits; 0 log 0 is taken as 0.
inline double shannon_entropy(const ProbDist &p) {
    double h = 0.0;
    for (double v : p.probs()) {
        if (v > 0.0) h -= v * std::log2(v);
    }
    return std::max(0.0, h);
}

/// L2 distance to the uniform distribution.
inline double bias_l2(const ProbDist &p) {
    const double u = 1.0 / static_cast<double>(p.size());
    double s = 0.0;
    for (double v : p.probs()) s += (v - u) * (v - u);
    return std::sqrt(s);
}

inline double max_prob(const ProbDist &p) { return *std::max_element(p.probs().begin(), p.probs().end()); }

struct Bhattacharyya {
    double coefficient = 1.0;
    double distance = 0.0;
    double log_distance = 0.0;
};

/// Lower clamp on the coefficient; caps the distance at 10 and the log
/// distance at ln(11).
inline constexpr double kBhattacharyyaFloor = 4.5399929762484854e-05;  // e^-10

inline Bhattacharyya bhattacharyya_log(const ProbDist &p, const ProbDist &q) {
    if (p.n_qubits() != q.n_qubits()) throw std::invalid_argument("bhattacharyya: dimension mismatch");
    // Summing in index order with the symmetric product keeps BC(p,q) == BC(q,p) bit for bit.
    double bc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) bc += std::sqrt(p[i] * q[i]);
    bc = std::clamp(bc, kBhattacharyyaFloor, 1.0);
    Bhattacharyya out;
    out.coefficient = bc;
    out.distance = std::max(0.0, -std::log(bc));
    out.log_distance = std::log1p(out.distance);
    return out;
}

// JSON: {"shots": int, "counts": {"<bitstring>": int}}
inline nlohmann::json to_json(const Counts &c) {
    nlohmann::json j;
    j["shots"] = c.shots;
    j["counts"] = nlohmann::json::object();
    for (const auto &[k, v] : c.entries) j["counts"][k] = v;
    return j;
}

inline Counts counts_from_json(const nlohmann::json &j) {
    Counts c;
    if (!j.is_object() || !j.contains("shots") || !j.contains("counts")) {
        throw std::invalid_argument("counts file needs \"shots\" and \"counts\"");
    }
    c.shots = j.at("shots").get<std::int64_t>();
    for (const auto &[k, v] : j.at("counts").items()) c.entries[k] = v.get<std::int64_t>();
    validate(c);
    return c;
}

// JSON: {"n_qubits": n, "probs": [dense, index bit q = qubit q]}
inline nlohmann::json to_json(const ProbDist &p) {
    return {{"n_qubits", p.n_qubits()}, {"probs", std::vector<double>(p.probs().begin(), p.probs().end())}};
}

inline ProbDist probdist_from_json(const nlohmann::json &j) {
    return ProbDist(j.at("n_qubits").get<int>(), j.at("probs").get<std::vector<double>>());
}

}  // namespace qtriage
