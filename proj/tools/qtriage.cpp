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

// qtriage command-line tool.
//
// Exit codes for `classify`: 0 hardware noise, 1 software bug, 2 uncertain,
// 3 malformed or inconsistent input. Other commands return 0 on success and
// 1 on error.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qtriage/qtriage.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitMalformed = 3;

std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

/// --seed wins, then QTRIAGE_SEED, then 0.
std::uint64_t resolve_seed(const std::optional<std::uint64_t> &flag) {
    if (flag) return *flag;
    if (const char *env = std::getenv("QTRIAGE_SEED"); env && *env) {
        std::size_t used = 0;
        const auto v = std::stoull(env, &used);
        if (used != std::string(env).size()) throw std::invalid_argument("QTRIAGE_SEED is not an integer");
        return v;
    }
    return 0;
}

qtriage::NoiseModel load_noise(const std::string &path) {
    if (path.empty()) return {};
    return qtriage::noise_from_json(qtriage::read_json_file(path));
}

struct RunManifest {
    std::string command;
    std::uint64_t seed = 0;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::optional<std::uint64_t> noise_hash;

    json to_json() const {
        json j{{"command", command},
               {"seed", seed},
               {"inputs", inputs},
               {"outputs", outputs},
               {"tool_version", std::string(qtriage::kVersion)},
               {"rng", std::string(qtriage::Rng::kRngVersion)}};
        j["noise_hash"] = noise_hash ? json(hex64(*noise_hash)) : json(nullptr);
        return j;
    }
};

fs::path manifest_path_for(const fs::path &artifact) {
    return artifact.parent_path() / (artifact.stem().string() + ".manifest.json");
}

fs::path history_path_for(const fs::path &model) {
    return model.parent_path() / (model.stem().string() + ".history.json");
}

std::vector<qtriage::FeatureArray> normalized_rows(const qtriage::AnfisModel &m,
                                                   const std::vector<qtriage::DataRow> &rows) {
    std::vector<qtriage::FeatureArray> out;
    for (const auto &r : rows) out.push_back(m.normalizer.apply(r.features));
    return out;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"qtriage: attribute anomalous quantum circuit outputs to software bugs or hardware noise"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(qtriage::kVersion));

    // gen-data
    auto *gen = app.add_subcommand("gen-data", "Generate the training set and the validation suite");
    std::string gen_out, gen_noise;
    std::optional<std::uint64_t> gen_seed;
    std::int64_t gen_shots = 4096;
    int gen_correct = 1000, gen_buggy = 1000;
    gen->add_option("--out", gen_out, "Output directory")->required();
    gen->add_option("--seed", gen_seed, "Master seed (falls back to QTRIAGE_SEED)");
    gen->add_option("--noise", gen_noise, "Noise model JSON (defaults when omitted)");
    gen->add_option("--shots", gen_shots, "Shots per circuit")->capture_default_str();
    gen->add_option("--n-correct", gen_correct, "Correct training rows")->capture_default_str();
    gen->add_option("--n-buggy", gen_buggy, "Buggy training rows")->capture_default_str();

    // train
    auto *tr = app.add_subcommand("train", "Train an ANFIS checkpoint");
    std::string tr_data, tr_out;
    std::optional<std::uint64_t> tr_seed;
    qtriage::TrainConfig tc;
    std::size_t tr_rules = qtriage::kDefaultRules;
    bool allow_nonpaper = false;
    tr->add_option("--data", tr_data, "Training rows (JSONL)")->required();
    tr->add_option("--out", tr_out, "Checkpoint path")->required();
    tr->add_option("--seed", tr_seed, "Seed (falls back to QTRIAGE_SEED)");
    tr->add_option("--epochs", tc.max_epochs, "Maximum epochs")->capture_default_str();
    tr->add_option("--lr", tc.lr, "Adam learning rate")->capture_default_str();
    tr->add_option("--weight-decay", tc.weight_decay, "L2 weight decay")->capture_default_str();
    tr->add_option("--patience", tc.patience, "Early-stopping patience")->capture_default_str();
    tr->add_option("--lambda-u", tc.lambda_u, "Uncertainty penalty weight")->capture_default_str();
    tr->add_option("--rules", tr_rules, "Number of fuzzy rules")->capture_default_str();
    tr->add_flag("--allow-nonpaper", allow_nonpaper, "Permit a rule count other than 16");

    // classify
    auto *cl = app.add_subcommand("classify", "Attribute one run; exit code 0 noise, 1 bug, 2 uncertain, 3 bad input");
    std::string cl_model, cl_counts, cl_circuit, cl_ideal;
    cl->add_option("--model", cl_model, "Checkpoint")->required();
    cl->add_option("--counts", cl_counts, "Measured counts JSON")->required();
    cl->add_option("--circuit", cl_circuit, "Circuit JSON")->required();
    cl->add_option("--ideal", cl_ideal, "Ideal distribution JSON (simulated from the circuit when omitted)");

    // evaluate
    auto *ev = app.add_subcommand("evaluate", "Evaluate a checkpoint on a suite directory");
    std::string ev_model, ev_suite, ev_format = "json", ev_out;
    ev->add_option("--model", ev_model, "Checkpoint")->required();
    ev->add_option("--suite", ev_suite, "Suite directory (with manifest.json)")->required();
    ev->add_option("--format", ev_format, "json or csv")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
    ev->add_option("--out", ev_out, "Report path (stdout when omitted)");

    // inject
    auto *inj = app.add_subcommand("inject", "Inject a bug into a circuit");
    std::string inj_circuit, inj_bug, inj_detail, inj_out;
    std::optional<std::size_t> inj_site;
    std::optional<std::uint64_t> inj_seed;
    inj->add_option("--circuit", inj_circuit, "Circuit JSON")->required();
    inj->add_option("--bug", inj_bug, "MISSING_GATE, WRONG_GATE, WRONG_ANGLE, WRONG_TARGET or EXTRA_GATE")->required();
    inj->add_option("--site", inj_site, "Gate index (insertion point for EXTRA_GATE)");
    inj->add_option("--detail", inj_detail,
                    "WRONG_GATE: gate name; WRONG_ANGLE: angle; WRONG_TARGET: q0,q1,...; EXTRA_GATE: GATE:q0[,q1][:param]");
    inj->add_option("--seed", inj_seed, "Seed for default choices (falls back to QTRIAGE_SEED)");
    inj->add_option("--out", inj_out, "Output circuit JSON")->required();

    // simulate
    auto *sim = app.add_subcommand("simulate", "Run a circuit through the noisy simulator and sample counts");
    std::string sim_circuit, sim_noise, sim_out, sim_ideal_out;
    std::int64_t sim_shots = 4096;
    std::optional<std::uint64_t> sim_seed;
    bool sim_noiseless = false;
    sim->add_option("--circuit", sim_circuit, "Circuit JSON")->required();
    sim->add_option("--noise", sim_noise, "Noise model JSON (defaults when omitted)");
    sim->add_option("--shots", sim_shots, "Shots")->capture_default_str();
    sim->add_option("--seed", sim_seed, "Sampling seed (falls back to QTRIAGE_SEED)");
    sim->add_option("--out", sim_out, "Counts JSON")->required();
    sim->add_option("--ideal-out", sim_ideal_out, "Also write the ideal distribution here");
    sim->add_flag("--noiseless", sim_noiseless, "Disable all noise channels");

    // explain-rules
    auto *er = app.add_subcommand("explain-rules", "Print the learned rule base as IF-THEN text");
    std::string er_model, er_data;
    er->add_option("--model", er_model, "Checkpoint")->required();
    er->add_option("--data", er_data, "Rows (JSONL) used to bin antecedents")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int rc = app.exit(e);
        return (cl->parsed() && rc != 0) ? kExitMalformed : rc;
    }

    if (cl->parsed()) {
        try {
            const auto model = qtriage::load_checkpoint(cl_model);
            const auto circuit = qtriage::circuit_from_json(qtriage::read_json_file(cl_circuit));
            const auto counts = qtriage::counts_from_json(qtriage::read_json_file(cl_counts));
            const auto ideal = cl_ideal.empty() ? qtriage::simulate_ideal(circuit)
                                                : qtriage::probdist_from_json(qtriage::read_json_file(cl_ideal));
            const auto features = qtriage::extract_features(counts, circuit, ideal);
            const auto verdict = qtriage::classify(features, model, circuit.name);
            std::cout << qtriage::to_json(verdict).dump(2) << "\n";
            std::cerr << qtriage::explain(verdict, model);
            switch (verdict.klass) {
                case qtriage::Attribution::HARDWARE_NOISE: return 0;
                case qtriage::Attribution::SOFTWARE_BUG: return 1;
                case qtriage::Attribution::UNCERTAIN: return 2;
            }
            return 2;
        } catch (const std::exception &e) {
            std::cerr << "qtriage classify: " << e.what() << "\n";
            return kExitMalformed;
        }
    }

    try {
        if (gen->parsed()) {
            qtriage::GenConfig cfg;
            cfg.seed = resolve_seed(gen_seed);
            cfg.noise = load_noise(gen_noise);
            cfg.shots = gen_shots;
            cfg.n_train_correct = gen_correct;
            cfg.n_train_buggy = gen_buggy;
            qtriage::validate(cfg);
            const fs::path out(gen_out);
            const auto rows = qtriage::generate_training_set(cfg);
            qtriage::write_text_file(out / "train.jsonl", qtriage::to_jsonl(rows));
            const auto suite = qtriage::generate_validation_suite(cfg.seed, cfg.noise, cfg.shots);
            qtriage::write_suite(suite, out / "suite");
            RunManifest rm{"gen-data", cfg.seed, {}, {"train.jsonl", "suite/manifest.json"}, qtriage::noise_hash(cfg.noise)};
            if (!gen_noise.empty()) rm.inputs.push_back(gen_noise);
            qtriage::write_json_file(out / "run_manifest.json", rm.to_json());
            std::cout << "wrote " << rows.size() << " training rows and " << suite.entries.size()
                      << " suite circuits to " << out.string() << "\n";
        } else if (tr->parsed()) {
            if (tr_rules != qtriage::kDefaultRules && !allow_nonpaper) {
                throw std::invalid_argument("--rules other than 16 requires --allow-nonpaper");
            }
            tc.n_rules = tr_rules;
            tc.seed = resolve_seed(tr_seed);
            const auto rows = qtriage::rows_from_jsonl(tr_data);
            const auto res = qtriage::train(rows, tc);
            const fs::path out(tr_out);
            qtriage::save_checkpoint(res.model, out);
            qtriage::write_json_file(history_path_for(out), qtriage::to_json(res.history));
            RunManifest rm{"train", tc.seed, {tr_data}, {out.filename().string(), history_path_for(out).filename().string()}, {}};
            qtriage::write_json_file(manifest_path_for(out), rm.to_json());
            std::cout << "epochs " << res.history.size() << ", best epoch " << res.best_epoch
                      << ", validation accuracy " << res.best_val_accuracy << "\n";
        } else if (ev->parsed()) {
            const auto model = qtriage::load_checkpoint(ev_model);
            const auto suite = qtriage::read_suite(ev_suite);
            const auto report = qtriage::evaluate(model, suite.entries);
            const std::string text = ev_format == "csv" ? qtriage::to_csv(report) : qtriage::to_json(report).dump(2) + "\n";
            if (ev_out.empty()) {
                std::cout << text;
            } else {
                const fs::path out(ev_out);
                qtriage::write_text_file(out, text);
                RunManifest rm{"evaluate", 0, {ev_model, ev_suite}, {out.filename().string()}, {}};
                qtriage::write_json_file(manifest_path_for(out), rm.to_json());
            }
        } else if (inj->parsed()) {
            const auto c = qtriage::circuit_from_json(qtriage::read_json_file(inj_circuit));
            const auto kind = qtriage::bug_kind_from_string(inj_bug);
            qtriage::BugSpec spec = qtriage::make_bug(kind, 0);
            bool have_default = false;
            for (const auto &s : qtriage::enumerate_bugs(c, resolve_seed(inj_seed))) {
                if (s.kind == kind) {
                    spec = s;
                    have_default = true;
                    break;
                }
            }
            if (inj_site) spec.site = *inj_site;
            if (!inj_detail.empty()) {
                auto parse_qubits = [](const std::string &s) {
                    std::vector<int> q;
                    std::stringstream ss(s);
                    for (std::string tok; std::getline(ss, tok, ',');) q.push_back(std::stoi(tok));
                    return q;
                };
                switch (kind) {
                    case qtriage::BugKind::WRONG_GATE: spec.replacement = qtriage::gate_kind_from_string(inj_detail); break;
                    case qtriage::BugKind::WRONG_ANGLE: spec.angle = std::stod(inj_detail); break;
                    case qtriage::BugKind::WRONG_TARGET: spec.qubits = parse_qubits(inj_detail); break;
                    case qtriage::BugKind::EXTRA_GATE: {
                        std::vector<std::string> parts;
                        std::stringstream ss(inj_detail);
                        for (std::string tok; std::getline(ss, tok, ':');) parts.push_back(tok);
                        if (parts.size() < 2 || parts.size() > 3) throw std::invalid_argument("EXTRA_GATE detail is GATE:q0[,q1][:param]");
                        std::vector<double> params;
                        if (parts.size() == 3) params.push_back(std::stod(parts[2]));
                        spec.inserted = qtriage::make_gate(qtriage::gate_kind_from_string(parts[0]), parse_qubits(parts[1]), params);
                        break;
                    }
                    case qtriage::BugKind::MISSING_GATE: throw std::invalid_argument("MISSING_GATE takes no detail");
                }
            } else if (!have_default && kind != qtriage::BugKind::MISSING_GATE) {
                throw std::invalid_argument(std::string(qtriage::to_string(kind)) + " needs --detail for this circuit");
            }
            qtriage::write_json_file(inj_out, qtriage::to_json(qtriage::inject_bug(c, spec)));
        } else if (sim->parsed()) {
            const auto c = qtriage::circuit_from_json(qtriage::read_json_file(sim_circuit));
            auto nm = load_noise(sim_noise);
            if (sim_noiseless) nm = qtriage::NoiseModel::disabled();
            const auto seed = resolve_seed(sim_seed);
            const auto p = qtriage::simulate_noisy(c, nm);
            qtriage::write_json_file(sim_out, qtriage::to_json(qtriage::sample_counts(p, sim_shots, seed)));
            if (!sim_ideal_out.empty()) qtriage::write_json_file(sim_ideal_out, qtriage::to_json(qtriage::simulate_ideal(c)));
        } else if (er->parsed()) {
            const auto model = qtriage::load_checkpoint(er_model);
            const auto rows = normalized_rows(model, qtriage::rows_from_jsonl(er_data));
            const auto rules = qtriage::extract_rules(model, rows);
            for (std::size_t i = 0; i < rules.size(); ++i) std::cout << "R" << i + 1 << ": " << rules[i] << "\n";
        }
    } catch (const std::exception &e) {
        std::cerr << "qtriage: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
