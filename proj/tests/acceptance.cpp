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

// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "qtriage/qtriage.hpp"

namespace fs = std::filesystem;
using namespace qtriage;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

class Check {
  public:
    void expect(bool ok, const std::string &what) {
        if (!ok) {
            out_.pass = false;
            if (!failures_.empty()) failures_ += "; ";
            failures_ += what;
        }
    }
    void note(const std::string &s) {
        if (!notes_.empty()) notes_ += ", ";
        notes_ += s;
    }
    Outcome done() {
        out_.detail = out_.pass ? notes_ : failures_ + (notes_.empty() ? "" : " [" + notes_ + "]");
        return out_;
    }

  private:
    Outcome out_;
    std::string failures_, notes_;
};

std::string fmt(double v, int prec = 4) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(prec);
    os << v;
    return os.str();
}

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

ProbDist random_dist(Rng &rng, int n) {
    std::vector<double> p(std::size_t{1} << n);
    double s = 0;
    for (auto &v : p) s += v = rng.uniform() < 0.2 ? 0.0 : rng.uniform();
    if (s == 0) p[0] = s = 1;
    for (auto &v : p) v /= s;
    return ProbDist(n, p);
}

Outcome metric_identities() {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    const ProbDist bell(2, {0.5, 0, 0, 0.5});
    c.expect(near(shannon_entropy(ProbDist::uniform(3)), 3.0, 1e-12), "uniform entropy");
    c.expect(near(shannon_entropy(ProbDist::delta(3, 5)), 0.0, 1e-12), "delta entropy");
    c.expect(near(shannon_entropy(bell), 1.0, 1e-12), "bell entropy");
    c.expect(near(bias_l2(ProbDist::uniform(2)), 0.0, 1e-12), "uniform bias");
    c.expect(near(bias_l2(ProbDist::delta(1, 0)), std::sqrt(0.5), 1e-12), "delta bias");
    c.expect(near(max_prob(bell), 0.5, 1e-12), "bell max_prob");
    c.expect(near(bhattacharyya_log(bell, bell).log_distance, 0.0, 1e-12), "self distance");
    c.expect(near(bhattacharyya_log(ProbDist::delta(2, 0), ProbDist::delta(2, 3)).log_distance, std::log(11.0), 1e-12),
             "disjoint distance");
    Rng rng(2026);
    double worst = 0;
    for (int i = 0; i < 1000; ++i) {
        const int n = 1 + static_cast<int>(rng.below(5));
        const auto p = random_dist(rng, n), q = random_dist(rng, n);
        const double d = bhattacharyya_log(p, q).log_distance;
        worst = std::max({worst, std::abs(d - bhattacharyya_log(q, p).log_distance),
                          bhattacharyya_log(p, p).log_distance});
        c.expect(d >= 0 && d <= std::log(11.0) + 1e-12, "distance range");
    }
    c.expect(worst <= 1e-12, "symmetry/self over 1000 draws");
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.expect(secs < 1.0, "runtime " + fmt(secs) + " s");
    c.note("worst symmetry/self error " + std::to_string(worst));
    c.note(fmt(secs, 3) + " s");
    return c.done();
}

Outcome simulator_physics(const ValidationSuite &suite, const SimStats &stats) {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(31);
    double worst_kraus = 0;
    for (auto kind : {Channel::AMP_DAMP, Channel::PURE_DEPHASE, Channel::DEPOL_1Q, Channel::DEPOL_2Q}) {
        for (int t = 0; t < 100; ++t) {
            const auto ks = channel_kraus(kind, rng.uniform());
            auto sum = LocalOp::zeros(ks[0].n_qubits);
            for (const auto &k : ks) {
                const auto kk = matmul(adjoint(k), k);
                for (std::size_t i = 0; i < sum.m.size(); ++i) sum.m[i] += kk.m[i];
            }
            const auto id = LocalOp::identity(ks[0].n_qubits);
            for (std::size_t i = 0; i < sum.m.size(); ++i) worst_kraus = std::max(worst_kraus, std::abs(sum.m[i] - id.m[i]));
        }
    }
    c.expect(worst_kraus <= 1e-12, "Kraus completeness " + std::to_string(worst_kraus));
    c.expect(stats.max_trace_drift <= 1e-10, "trace drift " + std::to_string(stats.max_trace_drift));

    double worst_fixed = 0;
    for (double eps : {0.0, 0.015, 0.5, 1.0}) {
        DensityMatrix rho(2);
        for (std::size_t i = 0; i < 4; ++i) rho(i, i) = 0.25;
        const int q0[1] = {0}, q01[2] = {0, 1};
        rho.apply_channel(channel_kraus(Channel::DEPOL_1Q, eps), q0);
        rho.apply_channel(channel_kraus(Channel::DEPOL_2Q, eps), q01);
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j) worst_fixed = std::max(worst_fixed, std::abs(rho(i, j) - cplx(i == j ? 0.25 : 0)));
    }
    c.expect(worst_fixed <= 1e-12, "depolarizing fixed point");

    double worst_ideal = 0;
    for (const auto &e : suite.entries) {
        const auto a = simulate_noisy(e.circuit, NoiseModel::disabled()), b = simulate_ideal(e.circuit);
        for (std::size_t i = 0; i < a.size(); ++i) worst_ideal = std::max(worst_ideal, std::abs(a[i] - b[i]));
    }
    c.expect(worst_ideal <= 1e-10, "noiseless vs statevector " + std::to_string(worst_ideal));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.expect(secs < 60, "runtime");
    c.note("Kraus " + std::to_string(worst_kraus) + ", drift " + std::to_string(stats.max_trace_drift) +
           ", noiseless " + std::to_string(worst_ideal));
    return c.done();
}

Outcome gradient_check() {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0;
    std::size_t checked = 0;
    for (std::uint64_t cfg = 0; cfg < 10; ++cfg) {
        Rng rng(derive_seed(77, "grad", cfg));
        std::vector<FeatureArray> rows(48);
        for (auto &r : rows)
            for (auto &v : r) v = rng.normal();
        auto m = init_from_data(rows, rng.next_u64());
        std::vector<Sample> batch;
        for (std::size_t i = 0; i < 24; ++i) batch.push_back({rows[i], static_cast<int>(rng.below(2))});
        const auto cw = class_weights(batch);
        const auto g = gradients(m, batch, cw);
        auto theta = flatten(m);
        AnfisModel probe = m;
        for (std::size_t k = 0; k < theta.size(); ++k) {
            const double keep = theta[k], h = 1e-5;
            theta[k] = keep + h;
            unflatten(probe, theta);
            const double up = loss(probe, batch, cw);
            theta[k] = keep - h;
            unflatten(probe, theta);
            const double down = loss(probe, batch, cw);
            theta[k] = keep;
            const double fd = (up - down) / (2 * h);
            worst = std::max(worst, std::abs(g[k] - fd) / std::max({std::abs(g[k]), std::abs(fd), 1e-6}));
            ++checked;
        }
        unflatten(probe, theta);
    }
    c.expect(checked == 3520, "parameter count");
    c.expect(worst < 1e-4, "max relative error " + std::to_string(worst));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.expect(secs < 60, "runtime");
    c.note("max relative error " + std::to_string(worst) + " over 10 x 352 parameters");
    return c.done();
}

Outcome training_replication(const std::vector<DataRow> &rows, const TrainResult &tr, double secs) {
    Check c;
    const auto val = to_samples(tr.model.normalizer, rows, tr.val_index);
    const auto train_s = to_samples(tr.model.normalizer, rows, tr.train_index);
    const double anfis = binary_accuracy(tr.model, val);
    const auto lr = logistic_baseline(train_s, val);
    const double gap = anfis - lr.accuracy;
    c.expect(anfis >= 0.85, "ANFIS held-out accuracy " + fmt(anfis));
    c.expect(gap >= 0.10, "logistic gap " + fmt(100 * gap, 2) + " points < 10");
    c.expect(secs < 600, "runtime");
    c.note("ANFIS " + fmt(anfis) + ", logistic " + fmt(lr.accuracy) + ", gap " + fmt(100 * gap, 2) + " points, strict " +
           fmt(strict_accuracy(tr.model, val)) + ", " + fmt(secs, 1) + " s");
    return c.done();
}

Outcome veto_margin(const ValidationSuite &suite, const AnfisModel &m) {
    Check c;
    double worst = 0;
    int vetoes = 0, n = 0;
    for (const auto &e : suite.entries) {
        if (e.circuit.label != Label::CORRECT) continue;
        const auto f = extract_features(e.counts, e.circuit, e.ideal);
        worst = std::max(worst, f.db_log);
        vetoes += classify(f, m).veto_triggered;
        ++n;
    }
    c.expect(worst <= 0.10, "max correct D_B^log " + fmt(worst));
    c.expect(vetoes == 0, std::to_string(vetoes) + " vetoes on correct circuits");
    c.note(std::to_string(n) + " correct circuits, max D_B^log " + fmt(worst) + ", margin " + fmt(0.20 / worst, 2) + "x");
    return c.done();
}

Outcome suite_analog(const Report &r, double secs) {
    Check c;
    c.expect(r.acc_eff >= 0.85, "acc_eff " + fmt(r.acc_eff));
    c.expect(r.u_rate <= 0.20, "u_rate " + fmt(r.u_rate));
    c.expect(secs < 300, "runtime");
    std::size_t top = 0;
    for (std::size_t k = 1; k < kNumFeatures; ++k)
        if (r.per_feature_cohens_d[k] > r.per_feature_cohens_d[top]) top = k;
    c.note("acc_eff " + fmt(r.acc_eff) + ", acc_strict " + fmt(r.acc_strict) + ", u_rate " + fmt(r.u_rate) + ", errors " +
           std::to_string(r.errors) + "/" + std::to_string(r.total) + ", largest Cohen's d: " +
           std::string(kFeatureNames[top]) + " " + fmt(r.per_feature_cohens_d[top], 2));
    return c.done();
}

const SuiteEntry *find_entry(const ValidationSuite &s, const std::string &name) {
    for (const auto &e : s.entries)
        if (e.circuit.name == name) return &e;
    return nullptr;
}

Outcome blind_spot(const ValidationSuite &suite, const AnfisModel &m) {
    Check c;
    const auto *z = find_entry(suite, "bell_extra_z_buggy");
    const auto *a5 = find_entry(suite, "bell_angle_5deg_buggy");
    c.expect(z && a5, "suite entries present");
    if (!z || !a5) return c.done();
    const auto fz = extract_features(z->counts, z->circuit, z->ideal);
    const auto vz = classify(fz, m);
    c.expect(fz.db_log < 0.05, "extra-Z D_B^log " + fmt(fz.db_log));
    c.expect(vz.klass != Attribution::SOFTWARE_BUG, "extra-Z called SOFTWARE_BUG");
    const double shift = total_variation(simulate_ideal(a5->circuit), a5->ideal);
    const double scale = std::pow(std::sin(2.5 * kDegree), 2);
    c.expect(shift < 0.022, "5 degree shift " + fmt(shift));
    c.expect(shift > 0.5 * scale && shift < 2.0 * scale, "5 degree shift not sin^2(2.5 deg) scale");
    const auto v5 = classify(extract_features(a5->counts, a5->circuit, a5->ideal), m);
    c.expect(!v5.veto_triggered, "5 degree bug vetoed");
    c.note("extra-Z D_B^log " + fmt(fz.db_log) + " -> " + std::string(to_string(vz.klass)) + "; 5 deg shift " +
           fmt(shift, 5) + " vs sin^2(2.5 deg) " + fmt(scale, 5) + ", D_B^log " + fmt(v5.db_log_raw) + " -> " +
           std::string(to_string(v5.klass)));
    return c.done();
}

Outcome grover_boundary(const ValidationSuite &suite, const AnfisModel &m) {
    Check c;
    const auto *bad = find_entry(suite, "grover_2q_wrong_oracle");
    const auto *good = find_entry(suite, "grover_2q_correct");
    c.expect(bad && good, "suite entries present");
    if (!bad || !good) return c.done();
    const auto vb = classify(extract_features(bad->counts, bad->circuit, bad->ideal), m);
    const auto fg = extract_features(good->counts, good->circuit, good->ideal);
    const auto vg = classify(fg, m);
    c.expect(vb.veto_triggered && vb.db_log_raw > 0.20, "wrong oracle not vetoed");
    c.expect(vg.klass != Attribution::SOFTWARE_BUG, "correct Grover called SOFTWARE_BUG");
    c.expect(fg.entropy_dev < 0.5, "correct Grover entropy_dev " + fmt(fg.entropy_dev));
    c.note("wrong oracle D_B^log " + fmt(vb.db_log_raw) + " (veto); correct: " + std::string(to_string(vg.klass)) +
           ", P(noise) " + fmt(vg.p_noise) + ", entropy_dev " + fmt(fg.entropy_dev));
    return c.done();
}

Outcome wilson() {
    Check c;
    const auto ci = wilson_ci(94, 105, 0.95);
    c.expect(near(ci.half_width(), 0.059, 0.001), "half-width " + fmt(ci.half_width()));
    for (int n : {1, 10, 105, 1000}) c.expect(wilson_ci(0, n, 0.95).low == 0.0, "(0, n) lower bound");
    c.note("(94, 105) half-width " + fmt(ci.half_width()));
    return c.done();
}

std::string slurp(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::string quote(const fs::path &p) { return "'" + p.string() + "'"; }

Outcome determinism(const fs::path &cli, const fs::path &work) {
    Check c;
    if (cli.empty() || !fs::exists(cli)) {
        c.expect(false, "CLI binary not found (pass --cli)");
        return c.done();
    }
    std::array<fs::path, 2> runs = {work / "run_a", work / "run_b"};
    for (const auto &dir : runs) {
        fs::remove_all(dir);
        fs::create_directories(dir);
        const std::string base = quote(cli);
        const std::string cmds[] = {
            base + " gen-data --out " + quote(dir / "data") + " --seed 42",
            base + " train --data " + quote(dir / "data" / "train.jsonl") + " --out " + quote(dir / "model.json") +
                " --seed 42",
            base + " evaluate --model " + quote(dir / "model.json") + " --suite " + quote(dir / "data" / "suite") +
                " --out " + quote(dir / "report.json"),
        };
        for (const auto &cmd : cmds) {
            const int rc = std::system((cmd + " > " + quote(dir / "log.txt") + " 2>&1").c_str());
            c.expect(rc == 0, "command failed: " + cmd);
            if (rc != 0) return c.done();
        }
    }
    std::vector<fs::path> files = {"data/train.jsonl", "model.json", "model.history.json", "report.json",
                                   "data/suite/manifest.json"};
    for (const auto &entry : fs::recursive_directory_iterator(runs[0] / "data" / "suite" / "counts")) {
        if (entry.is_regular_file()) files.push_back(fs::relative(entry.path(), runs[0]));
    }
    std::size_t same = 0;
    for (const auto &f : files) {
        const auto a = runs[0] / f, b = runs[1] / f;
        const bool ok = fs::exists(a) && fs::exists(b) && slurp(a) == slurp(b);
        c.expect(ok, f.string() + " differs");
        same += ok;
    }
    c.note(std::to_string(same) + "/" + std::to_string(files.size()) + " files byte-identical");
    return c.done();
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"qtriage acceptance checks"};
    std::string cli_path, workdir = (fs::temp_directory_path() / "qtriage_acceptance").string();
    std::uint64_t seed = 42;
    app.add_option("--cli", cli_path, "Path to the qtriage executable (criterion 10)");
    app.add_option("--workdir", workdir, "Scratch directory")->capture_default_str();
    app.add_option("--seed", seed, "Master seed")->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    using clock = std::chrono::steady_clock;
    std::cout << "qtriage " << kVersion << " acceptance (seed " << seed << ")\n" << std::flush;

    auto t0 = clock::now();
    GenConfig g;
    g.seed = seed;
    const auto rows = generate_training_set(g);
    TrainConfig tc;
    tc.seed = seed;
    const auto tr = train(rows, tc);
    const double train_secs = std::chrono::duration<double>(clock::now() - t0).count();

    SimStats stats;
    t0 = clock::now();
    const auto suite = generate_validation_suite(seed, NoiseModel{}, 4096, &stats);
    const auto report = evaluate(tr.model, suite.entries);
    const double suite_secs = std::chrono::duration<double>(clock::now() - t0).count() + train_secs;

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"metric identities", metric_identities},
        {"simulator physics", [&] { return simulator_physics(suite, stats); }},
        {"gradient correctness", gradient_check},
        {"training replication", [&] { return training_replication(rows, tr, train_secs); }},
        {"veto safety margin", [&] { return veto_margin(suite, tr.model); }},
        {"end-to-end suite analog", [&] { return suite_analog(report, suite_secs); }},
        {"blind-spot reproduction", [&] { return blind_spot(suite, tr.model); }},
        {"Grover boundary", [&] { return grover_boundary(suite, tr.model); }},
        {"Wilson CI", wilson},
        {"determinism", [&] { return determinism(cli_path, workdir); }},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception &e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::cout << "CRITERION " << (i + 1) << " " << (o.pass ? "PASS" : "FAIL") << " " << criteria[i].first << ": "
                  << o.detail << "\n"
                  << std::flush;
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed\n";
    return failed == 0 ? 0 : 1;
}
