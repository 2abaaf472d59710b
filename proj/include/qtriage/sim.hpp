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
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qtriage/circuit.hpp"
#include "qtriage/dist.hpp"
#include "qtriage/rng.hpp"

namespace qtriage {

using cplx = std::complex<double>;

/// Small dense operator on k qubits, row-major, dimension 2^k. Local basis
/// index bit i corresponds to the i-th listed qubit of the gate.
struct LocalOp {
    int n_qubits = 1;
    std::vector<cplx> m;

    std::size_t dim() const { return std::size_t{1} << n_qubits; }
    cplx operator()(std::size_t r, std::size_t c) const { return m[r * dim() + c]; }
    cplx &operator()(std::size_t r, std::size_t c) { return m[r * dim() + c]; }

    static LocalOp zeros(int k) { return LocalOp{k, std::vector<cplx>((std::size_t{1} << k) << k)}; }
    static LocalOp identity(int k) {
        auto op = zeros(k);
        for (std::size_t i = 0; i < op.dim(); ++i) op(i, i) = 1.0;
        return op;
    }
};

inline LocalOp matmul(const LocalOp &a, const LocalOp &b) {
    auto out = LocalOp::zeros(a.n_qubits);
    const auto d = a.dim();
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t k = 0; k < d; ++k)
            for (std::size_t j = 0; j < d; ++j) out(i, j) += a(i, k) * b(k, j);
    return out;
}

inline LocalOp adjoint(const LocalOp &a) {
    auto out = LocalOp::zeros(a.n_qubits);
    for (std::size_t i = 0; i < a.dim(); ++i)
        for (std::size_t j = 0; j < a.dim(); ++j) out(i, j) = std::conj(a(j, i));
    return out;
}

/// Tensor product with `lo` on local bit 0 and `hi` on local bit 1.
inline LocalOp kron2(const LocalOp &hi, const LocalOp &lo) {
    auto out = LocalOp::zeros(2);
    for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t b = 0; b < 2; ++b)
            for (std::size_t c = 0; c < 2; ++c)
                for (std::size_t d = 0; d < 2; ++d) out(a * 2 + c, b * 2 + d) = hi(a, b) * lo(c, d);
    return out;
}

namespace detail {

inline LocalOp op1(cplx a, cplx b, cplx c, cplx d) { return LocalOp{1, {a, b, c, d}}; }

inline LocalOp permutation(int k, auto &&map) {
    auto op = LocalOp::zeros(k);
    for (std::size_t in = 0; in < op.dim(); ++in) op(map(in), in) = 1.0;
    return op;
}

}  // namespace detail

inline const LocalOp &pauli(char which) {
    static const LocalOp I = detail::op1(1, 0, 0, 1);
    static const LocalOp X = detail::op1(0, 1, 1, 0);
    static const LocalOp Y = detail::op1(0, cplx(0, -1), cplx(0, 1), 0);
    static const LocalOp Z = detail::op1(1, 0, 0, -1);
    switch (which) {
        case 'X': return X;
        case 'Y': return Y;
        case 'Z': return Z;
        default: return I;
    }
}

inline LocalOp gate_unitary(const Gate &g) {
    using detail::op1;
    const double s2 = 1.0 / std::numbers::sqrt2;
    const double th = g.params.empty() ? 0.0 : g.params[0];
    const double c = std::cos(th / 2), s = std::sin(th / 2);
    const cplx i1(0, 1);
    switch (g.kind) {
        case GateKind::H: return op1(s2, s2, s2, -s2);
        case GateKind::X: return pauli('X');
        case GateKind::Y: return pauli('Y');
        case GateKind::Z: return pauli('Z');
        case GateKind::S: return op1(1, 0, 0, i1);
        case GateKind::SDG: return op1(1, 0, 0, -i1);
        case GateKind::T: return op1(1, 0, 0, std::polar(1.0, std::numbers::pi / 4));
        case GateKind::RX: return op1(c, -i1 * s, -i1 * s, c);
        case GateKind::RY: return op1(c, -s, s, c);
        case GateKind::RZ: return op1(std::polar(1.0, -th / 2), 0, 0, std::polar(1.0, th / 2));
        case GateKind::CX: return detail::permutation(2, [](std::size_t in) { return (in & 1u) ? in ^ 2u : in; });
        case GateKind::CZ: {
            auto op = LocalOp::identity(2);
            op(3, 3) = -1.0;
            return op;
        }
        case GateKind::CP: {
            auto op = LocalOp::identity(2);
            op(3, 3) = std::polar(1.0, th);
            return op;
        }
        case GateKind::SWAP:
            return detail::permutation(2, [](std::size_t in) { return ((in & 1u) << 1) | ((in >> 1) & 1u); });
        case GateKind::CCX: return detail::permutation(3, [](std::size_t in) { return (in & 3u) == 3u ? in ^ 4u : in; });
    }
    throw std::invalid_argument("unsupported gate kind");
}

namespace detail {

/// Applies `op` to every length-2^k slice of `data` addressed through
/// `stride_bits` (the full-index bit of each local qubit) with outer offset.
inline void apply_local(std::span<cplx> data, std::size_t dim, std::size_t stride, std::size_t offset,
                        const LocalOp &op, std::span<const int> qubits) {
    const std::size_t k = qubits.size();
    const std::size_t ld = op.dim();
    std::size_t mask = 0;
    for (int q : qubits) mask |= std::size_t{1} << q;
    std::vector<std::size_t> idx(ld);
    std::vector<cplx> in(ld), out(ld);
    for (std::size_t base = 0; base < dim; ++base) {
        if (base & mask) continue;
        for (std::size_t l = 0; l < ld; ++l) {
            std::size_t full = base;
            for (std::size_t b = 0; b < k; ++b) {
                if ((l >> b) & 1u) full |= std::size_t{1} << qubits[b];
            }
            idx[l] = offset + full * stride;
            in[l] = data[idx[l]];
        }
        for (std::size_t r = 0; r < ld; ++r) {
            cplx acc = 0.0;
            for (std::size_t c = 0; c < ld; ++c) acc += op(r, c) * in[c];
            out[r] = acc;
        }
        for (std::size_t l = 0; l < ld; ++l) data[idx[l]] = out[l];
    }
}

}  // namespace detail

class DensityMatrix {
  public:
    explicit DensityMatrix(int n_qubits) : n_(n_qubits), dim_(std::size_t{1} << n_qubits), rho_(dim_ * dim_) {
        rho_[0] = 1.0;
    }

    int n_qubits() const { return n_; }
    std::size_t dim() const { return dim_; }
    cplx operator()(std::size_t r, std::size_t c) const { return rho_[r * dim_ + c]; }
    cplx &operator()(std::size_t r, std::size_t c) { return rho_[r * dim_ + c]; }
    std::span<const cplx> elements() const { return rho_; }

    /// rho -> K rho K^dagger
    void conjugate(const LocalOp &k, std::span<const int> qubits) { conjugate_into(rho_, k, qubits); }

    /// rho -> sum_k K_k rho K_k^dagger
    void apply_channel(std::span<const LocalOp> kraus, std::span<const int> qubits) {
        std::vector<cplx> acc(rho_.size());
        for (const auto &k : kraus) {
            std::vector<cplx> term = rho_;
            conjugate_into(term, k, qubits);
            for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += term[i];
        }
        rho_ = std::move(acc);
    }

    double trace() const {
        double t = 0.0;
        for (std::size_t i = 0; i < dim_; ++i) t += rho_[i * dim_ + i].real();
        return t;
    }

    double hermiticity_error() const {
        double e = 0.0;
        for (std::size_t i = 0; i < dim_; ++i)
            for (std::size_t j = i; j < dim_; ++j) e = std::max(e, std::abs((*this)(i, j) - std::conj((*this)(j, i))));
        return e;
    }

    std::vector<double> diagonal() const {
        std::vector<double> d(dim_);
        for (std::size_t i = 0; i < dim_; ++i) d[i] = rho_[i * dim_ + i].real();
        return d;
    }

  private:
    void conjugate_into(std::vector<cplx> &m, const LocalOp &k, std::span<const int> qubits) const {
        // Columns: rho[:, c] -> K rho[:, c]; rows: rho[r, :] -> conj(K) rho[r, :].
        for (std::size_t c = 0; c < dim_; ++c) detail::apply_local(m, dim_, dim_, c, k, qubits);
        LocalOp kc = k;
        for (auto &v : kc.m) v = std::conj(v);
        for (std::size_t r = 0; r < dim_; ++r) detail::apply_local(m, dim_, 1, r * dim_, kc, qubits);
    }

    int n_;
    std::size_t dim_;
    std::vector<cplx> rho_;
};

struct NoiseModel {
    double t1_us = 181.3;
    double t2_us = 116.6;
    double eps_1q = 6.78e-3;
    double eps_2q = 1.5e-2;
    double dur_1q_ns = 60.0;
    double dur_2q_ns = 500.0;
    double dur_3q_ns = 700.0;
    double readout_p01 = 1e-2;  // P(read 0 | state 1)
    double readout_p10 = 1e-2;  // P(read 1 | state 0)
    bool enabled = true;

    bool operator==(const NoiseModel &) const = default;

    static NoiseModel disabled() {
        NoiseModel nm;
        nm.enabled = false;
        return nm;
    }

    double duration_ns(int gate_arity) const {
        return gate_arity == 1 ? dur_1q_ns : gate_arity == 2 ? dur_2q_ns : dur_3q_ns;
    }

    /// Pure-dephasing time from 1/T2 = 1/(2 T1) + 1/Tphi; infinite when T2 = 2 T1.
    double tphi_us() const {
        const double rate = 1.0 / t2_us - 1.0 / (2.0 * t1_us);
        return rate <= 0.0 ? INFINITY : 1.0 / rate;
    }
};

inline void validate(const NoiseModel &nm) {
    auto prob = [](double p, const char *name) {
        if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument(std::string("noise model: ") + name + " not in [0,1)");
    };
    prob(nm.eps_1q, "eps_1q");
    prob(nm.eps_2q, "eps_2q");
    prob(nm.readout_p01, "readout_p01");
    prob(nm.readout_p10, "readout_p10");
    if (!(nm.t1_us > 0.0) || !(nm.t2_us > 0.0)) throw std::invalid_argument("noise model: T1/T2 must be positive");
    if (nm.t2_us > 2.0 * nm.t1_us * (1.0 + 1e-12)) throw std::invalid_argument("noise model: T2 exceeds 2*T1");
    if (!(nm.dur_1q_ns > 0.0) || !(nm.dur_2q_ns > 0.0) || !(nm.dur_3q_ns > 0.0)) {
        throw std::invalid_argument("noise model: durations must be positive");
    }
}

inline nlohmann::json to_json(const NoiseModel &nm) {
    return {{"t1_us", nm.t1_us},           {"t2_us", nm.t2_us},           {"eps_1q", nm.eps_1q},
            {"eps_2q", nm.eps_2q},         {"dur_1q_ns", nm.dur_1q_ns},   {"dur_2q_ns", nm.dur_2q_ns},
            {"dur_3q_ns", nm.dur_3q_ns},   {"readout_p01", nm.readout_p01}, {"readout_p10", nm.readout_p10},
            {"enabled", nm.enabled}};
}

/// Missing fields keep their defaults.
inline NoiseModel noise_from_json(const nlohmann::json &j) {
    NoiseModel nm;
    nm.t1_us = j.value("t1_us", nm.t1_us);
    nm.t2_us = j.value("t2_us", nm.t2_us);
    nm.eps_1q = j.value("eps_1q", nm.eps_1q);
    nm.eps_2q = j.value("eps_2q", nm.eps_2q);
    nm.dur_1q_ns = j.value("dur_1q_ns", nm.dur_1q_ns);
    nm.dur_2q_ns = j.value("dur_2q_ns", nm.dur_2q_ns);
    nm.dur_3q_ns = j.value("dur_3q_ns", nm.dur_3q_ns);
    nm.readout_p01 = j.value("readout_p01", nm.readout_p01);
    nm.readout_p10 = j.value("readout_p10", nm.readout_p10);
    nm.enabled = j.value("enabled", nm.enabled);
    validate(nm);
    return nm;
}

inline std::uint64_t noise_hash(const NoiseModel &nm) { return fnv1a(to_json(nm).dump()); }

enum class Channel { AMP_DAMP, PURE_DEPHASE, DEPOL_1Q, DEPOL_2Q };

/// Kraus set for one channel. `param` is gamma for AMP_DAMP, the Z-flip
/// probability lambda for PURE_DEPHASE and epsilon for the depolarizing kinds.
inline std::vector<LocalOp> channel_kraus(Channel kind, double param) {
    if (!(param >= 0.0 && param <= 1.0)) throw std::invalid_argument("channel parameter outside [0,1]");
    using detail::op1;
    switch (kind) {
        case Channel::AMP_DAMP:
            return {op1(1, 0, 0, std::sqrt(1.0 - param)), op1(0, std::sqrt(param), 0, 0)};
        case Channel::PURE_DEPHASE:
            return {op1(std::sqrt(1.0 - param), 0, 0, std::sqrt(1.0 - param)),
                    op1(std::sqrt(param), 0, 0, -std::sqrt(param))};
        case Channel::DEPOL_1Q: {
            std::vector<LocalOp> ks;
            const double a = std::sqrt(1.0 - param), b = std::sqrt(param / 3.0);
            for (char p : {'I', 'X', 'Y', 'Z'}) {
                LocalOp k = pauli(p);
                for (auto &v : k.m) v *= (p == 'I' ? a : b);
                ks.push_back(std::move(k));
            }
            return ks;
        }
        case Channel::DEPOL_2Q: {
            std::vector<LocalOp> ks;
            const double a = std::sqrt(1.0 - param), b = std::sqrt(param / 15.0);
            for (char hi : {'I', 'X', 'Y', 'Z'}) {
                for (char lo : {'I', 'X', 'Y', 'Z'}) {
                    LocalOp k = kron2(pauli(hi), pauli(lo));
                    const bool id = hi == 'I' && lo == 'I';
                    for (auto &v : k.m) v *= id ? a : b;
                    ks.push_back(std::move(k));
                }
            }
            return ks;
        }
    }
    throw std::invalid_argument("unknown channel");
}

inline double damping_gamma(double t_ns, double t1_us) { return 1.0 - std::exp(-t_ns * 1e-3 / t1_us); }

/// Z-flip probability giving coherence decay exp(-t/Tphi): 1 - 2 lambda = exp(-t/Tphi).
inline double dephasing_lambda(double t_ns, double tphi_us) {
    if (!std::isfinite(tphi_us)) return 0.0;
    return 0.5 * (1.0 - std::exp(-t_ns * 1e-3 / tphi_us));
}

inline ProbDist simulate_ideal(const CircuitIR &c) {
    validate(c);
    const std::size_t dim = std::size_t{1} << c.n_qubits;
    std::vector<cplx> psi(dim);
    psi[0] = 1.0;
    for (const auto &g : c.gates) detail::apply_local(psi, dim, 1, 0, gate_unitary(g), g.qubits);
    std::vector<double> p(dim);
    double sum = 0.0;
    for (std::size_t i = 0; i < dim; ++i) sum += p[i] = std::norm(psi[i]);
    for (auto &v : p) v /= sum;
    return ProbDist(c.n_qubits, std::move(p));
}

/// Per-run diagnostics filled by simulate_noisy when requested.
struct SimStats {
    double max_trace_drift = 0.0;
    double max_hermiticity_error = 0.0;
};

/// Applies readout confusion to a classical distribution, one qubit at a time.
inline std::vector<double> apply_readout(std::vector<double> p, int n_qubits, double p01, double p10) {
    for (int q = 0; q < n_qubits; ++q) {
        const std::size_t bit = std::size_t{1} << q;
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (i & bit) continue;
            const double p0 = p[i], p1 = p[i | bit];
            p[i] = (1.0 - p10) * p0 + p01 * p1;
            p[i | bit] = p10 * p0 + (1.0 - p01) * p1;
        }
    }
    return p;
}

inline ProbDist simulate_noisy(const CircuitIR &c, const NoiseModel &nm, SimStats *stats = nullptr) {
    validate(c);
    validate(nm);
    DensityMatrix rho(c.n_qubits);
    const double tphi = nm.tphi_us();
    const auto dep1 = channel_kraus(Channel::DEPOL_1Q, nm.eps_1q);
    const auto dep2 = channel_kraus(Channel::DEPOL_2Q, nm.eps_2q);

    for (const auto &g : c.gates) {
        rho.conjugate(gate_unitary(g), g.qubits);
        if (nm.enabled) {
            const double t = nm.duration_ns(arity(g.kind));
            const auto damp = channel_kraus(Channel::AMP_DAMP, damping_gamma(t, nm.t1_us));
            const auto deph = channel_kraus(Channel::PURE_DEPHASE, dephasing_lambda(t, tphi));
            for (int q : g.qubits) {
                const int one[1] = {q};
                rho.apply_channel(damp, one);
                rho.apply_channel(deph, one);
            }
            if (g.qubits.size() == 1) {
                rho.apply_channel(dep1, g.qubits);
            } else if (g.qubits.size() == 2) {
                rho.apply_channel(dep2, g.qubits);
            } else {
                // Three-qubit gates: two-qubit depolarizing on each control-target pair.
                const int a[2] = {g.qubits[0], g.qubits[2]};
                const int b[2] = {g.qubits[1], g.qubits[2]};
                rho.apply_channel(dep2, a);
                rho.apply_channel(dep2, b);
            }
        }
        const double drift = std::abs(rho.trace() - 1.0);
        if (drift > 1e-8) throw std::runtime_error("density matrix trace drifted by " + std::to_string(drift));
        if (stats) {
            stats->max_trace_drift = std::max(stats->max_trace_drift, drift);
            stats->max_hermiticity_error = std::max(stats->max_hermiticity_error, rho.hermiticity_error());
        }
    }
    std::vector<double> p = rho.diagonal();
    for (auto &v : p) v = std::max(v, 0.0);
    if (nm.enabled) p = apply_readout(std::move(p), c.n_qubits, nm.readout_p01, nm.readout_p10);
    double sum = 0.0;
    for (double v : p) sum += v;
    for (auto &v : p) v /= sum;
    return ProbDist(c.n_qubits, std::move(p));
}

/// Multinomial draw by inverse-CDF lookup, one uniform per shot.
inline Counts sample_counts(const ProbDist &p, std::int64_t shots, std::uint64_t seed) {
    if (shots < 1) throw std::invalid_argument("shots must be >= 1");
    std::vector<double> cdf(p.size());
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        acc += p[i];
        cdf[i] = acc;
        if (p[i] > 0.0) last = i;
    }
    for (std::size_t i = last; i < cdf.size(); ++i) cdf[i] = 1.0;
    std::vector<std::int64_t> hist(p.size(), 0);
    Rng rng(seed);
    for (std::int64_t s = 0; s < shots; ++s) {
        const double u = rng.uniform();
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        ++hist[static_cast<std::size_t>(it - cdf.begin())];
    }
    Counts out;
    out.shots = shots;
    for (std::size_t i = 0; i < hist.size(); ++i) {
        if (hist[i] > 0) out.entries[to_bitstring(i, p.n_qubits())] = hist[i];
    }
    return out;
}

}  // namespace qtriage
