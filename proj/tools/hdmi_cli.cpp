// Command-line front end: data generation, training, probe fitting,
// interventions, lookahead editing, evaluation and the numeric verifiers.
// Configuration is flat key=value text, either from --config or inline.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hdmi/gradcheck.hpp"
#include "hdmi/interventions.hpp"
#include "hdmi/lookahead.hpp"
#include "hdmi/pipeline.hpp"
#include "hdmi/theory.hpp"

using namespace hdmi;
using ordered_json = nlohmann::ordered_json;

namespace {

void print_usage() {
    std::cout <<
        "usage: hdmi <command> [--config FILE] [key=value ...] [command flags]\n"
        "\n"
        "commands:\n"
        "  gen-data       generate suites, splits, corpus and vocabulary files\n"
        "  train          train the language model on <out_dir>/corpus.txt\n"
        "  fit-probes     fit interventional and validation probes\n"
        "  intervene      run one method over a split  (--method M [--split test])\n"
        "  edit           lookahead text editing        (--input \"...\" --edited \"...\")\n"
        "  evaluate       grid search + test-split metrics from saved artifacts\n"
        "  verify-theory  numeric margin-optimality checks   [--instances N]\n"
        "  gradcheck      gradient fidelity battery          [--cases N]\n"
        "  run-all        full pipeline end to end\n"
        "\n"
        "config keys mirror the hyperparameter table (hdmi_alpha, hdmi_inner_steps,\n"
        "epsilon, gbi_norm, pgd_steps, inlp_rank, alterrep_alpha, probe_*, ...);\n"
        "lists are comma-separated. See README.md for the full key reference.\n";
}

struct CliArgs {
    std::string command;
    ExperimentConfig config;
    std::map<std::string, std::string> flags;
};

CliArgs parse_args(int argc, char** argv) {
    if (argc < 2) {
        print_usage();
        throw InputError("missing command");
    }
    CliArgs args;
    args.command = argv[1];
    std::vector<std::pair<std::string, std::string>> overrides;
    for (int i = 2; i < argc; ++i) {
        std::string a = argv[i];
        if (a.rfind("--", 0) == 0) {
            const std::string name = a.substr(2);
            if (i + 1 >= argc) throw InputError("flag --" + name + " needs a value");
            args.flags[name] = argv[++i];
        } else {
            const auto eq = a.find('=');
            if (eq == std::string::npos)
                throw InputError("expected key=value or --flag value, got: " + a);
            overrides.emplace_back(a.substr(0, eq), a.substr(eq + 1));
        }
    }
    if (args.flags.count("config")) args.config = ExperimentConfig::from_file(args.flags["config"]);
    for (const auto& [k, v] : overrides) args.config.set(k, v);
    return args;
}

std::vector<SuiteInputs> load_suites(const ExperimentConfig& config) {
    std::vector<SuiteInputs> suites;
    for (const auto& name : config.suites) {
        SuiteInputs s;
        s.name = name;
        s.examples = read_dataset(config.out_dir + "/dataset_" + name + ".tsv");
        s.splits = read_splits_json(config.out_dir + "/splits_" + name + ".json");
        suites.push_back(std::move(s));
    }
    return suites;
}

bool needs_interventional_probe(const ExperimentConfig& config) {
    for (const auto& m : config.methods)
        if (m == "fgsm" || m == "pgd") return true;
    return false;
}

int cmd_gen_data(const CliArgs& args) {
    GeneratedData data = pipeline_gen_data(args.config, /*write_files=*/true);
    std::size_t total = 0;
    for (const auto& s : data.suites) total += s.examples.size();
    std::cout << "wrote " << total << " examples across " << data.suites.size()
              << " suite(s) and a corpus of " << data.corpus.size() << " sentences to "
              << args.config.out_dir << "\n";
    return 0;
}

int cmd_train(const CliArgs& args) {
    auto corpus = read_corpus(args.config.out_dir + "/corpus.txt");
    TinyTransformer model = pipeline_train(args.config, corpus, /*write_files=*/true);
    std::cout << "trained model saved to " << args.config.out_dir << "/model.ckpt ("
              << model.config().layers << " layers, hidden " << model.config().hidden_size
              << ", vocab " << model.config().vocab_size << ")\n";
    return 0;
}

int cmd_fit_probes(const CliArgs& args) {
    TinyTransformer model = load_model(args.config.out_dir + "/model.ckpt");
    const bool gate = needs_interventional_probe(args.config);
    for (const SuiteInputs& suite : load_suites(args.config)) {
        SuiteProbeSet probes =
            pipeline_fit_probes(args.config, model, suite, gate, /*write_files=*/true);
        std::cout << "suite " << suite.name << ": validation z_c holdout "
                  << probes.validation_zc.holdout_accuracy << ", z_e holdout "
                  << probes.validation_ze.holdout_accuracy;
        if (probes.has_interventional)
            std::cout << ", interventional z_c holdout "
                      << probes.interventional_zc.holdout_accuracy
                      << (probes.interventional_retry ? " (after 90/10 retry)" : "");
        std::cout << "\n";
    }
    return 0;
}

int cmd_evaluate(const CliArgs& args) {
    const ExperimentConfig& config = args.config;
    TinyTransformer model = load_model(config.out_dir + "/model.ckpt");

    std::ofstream states_file(config.out_dir + "/intervened_states.bin", std::ios::binary);
    std::uint64_t states_offset = 0;
    std::ofstream records_file(config.out_dir + "/interventions_test.jsonl");
    EvalWriters writers{&records_file, &states_file, &states_offset};

    std::vector<MetricsRecord> table;
    for (const SuiteInputs& suite : load_suites(config)) {
        SuiteProbeSet probes;
        probes.validation_zc = load_probe(config.out_dir + "/probe_val_zc_" + suite.name + ".ckpt");
        probes.validation_ze = load_probe(config.out_dir + "/probe_val_ze_" + suite.name + ".ckpt");
        const std::string int_path = config.out_dir + "/probe_int_zc_" + suite.name + ".ckpt";
        if (std::filesystem::exists(int_path)) {
            probes.interventional_zc = load_probe(int_path);
            probes.has_interventional = true;
        }
        SuiteOutcome outcome = pipeline_evaluate_suite(config, model, suite, probes, writers);
        std::cout << "suite " << suite.name << ": clean pairwise accuracy "
                  << outcome.clean_pairwise_accuracy_test << "\n";
        for (const auto& mo : outcome.methods) {
            table.push_back(mo.test_record);
            std::cout << "  " << metrics_tsv_row(mo.test_record) << "  flip_rate=" << mo.flip_rate
                      << "  best[" << mo.best_setting << "]\n";
        }
    }

    std::ofstream tsv(config.out_dir + "/results.tsv");
    tsv << metrics_tsv_header() << '\n';
    for (const auto& row : table) tsv << metrics_tsv_row(row) << '\n';
    std::ofstream jsonl(config.out_dir + "/results.jsonl");
    for (const auto& row : table) {
        ordered_json j;
        j["task"] = row.task;
        j["method"] = row.method;
        j["completeness"] = row.completeness;
        j["selectivity"] = row.selectivity;
        j["reliability"] = row.reliability;
        j["n_samples"] = row.n_samples;
        jsonl << j.dump() << '\n';
    }
    std::cout << "wrote " << config.out_dir << "/results.tsv\n";
    return 0;
}

int cmd_intervene(const CliArgs& args) {
    const ExperimentConfig& config = args.config;
    auto it = args.flags.find("method");
    if (it == args.flags.end()) throw InputError("intervene needs --method");
    const std::string method = it->second;
    const std::string split_name =
        args.flags.count("split") ? args.flags.at("split") : std::string("test");

    TinyTransformer model = load_model(config.out_dir + "/model.ckpt");
    const std::size_t layer = config.layer();
    HyperSetting setting = method_grid(config, method).front();

    for (const SuiteInputs& suite : load_suites(config)) {
        const std::vector<std::size_t>* split = nullptr;
        if (split_name == "test") split = &suite.splits.test;
        else if (split_name == "interventional") split = &suite.splits.interventional;
        else if (split_name == "validation_probe") split = &suite.splits.validation_probe;
        else throw InputError("unknown split: " + split_name);

        ProbeModel probe;
        bool have_probe = false;
        if (method == "fgsm" || method == "pgd") {
            probe = load_probe(config.out_dir + "/probe_int_zc_" + suite.name + ".ckpt");
            if (probe.trained_on != "interventional")
                throw InputError("loaded probe was not fitted on the interventional split");
            have_probe = true;
        }
        InlpResult inlp;
        if (method == "alterrep") {
            std::vector<Tensor> xs;
            std::vector<int> ys;
            for (std::size_t idx : suite.splits.interventional) {
                auto [logits, hidden] =
                    forward_capture(model, suite.examples[idx].prompt, layer);
                xs.push_back(std::move(hidden.vector));
                ys.push_back(suite.examples[idx].z_c);
            }
            inlp = inlp_fit(xs, ys, setting.rank,
                            derive_seed(config.master_seed, "inlp-" + suite.name));
        }

        const std::string base =
            config.out_dir + "/interventions_" + split_name + "_" + method + "_" + suite.name;
        std::ofstream records(base + ".jsonl");
        std::ofstream states(base + ".bin", std::ios::binary);
        std::uint64_t offset = 0;

        for (std::size_t idx : *split) {
            const LabeledExample& ex = suite.examples[idx];
            const MarginObjective objective{{ex.target_token}, {ex.source_token}};
            auto [clean_logits, hidden] = forward_capture(model, ex.prompt, layer);
            const int z_counterfactual = 1 - ex.z_c;

            Tensor state;
            Tensor patched;
            if (method == "hdmi" || method == "target_only") {
                AscentConfig ac{setting.alpha, setting.steps, layer};
                AscentResult res = method == "hdmi"
                                       ? hdmi_ascend(model, ex.prompt, objective, ac)
                                       : target_only_ascend(model, ex.prompt, objective, ac);
                state = std::move(res.state);
                patched = std::move(res.logits);
            } else if (method == "fgsm" && have_probe) {
                state = fgsm(hidden.vector, probe, z_counterfactual,
                             {setting.norm, setting.eps});
                patched = forward_patch(model, ex.prompt, layer, state);
            } else if (method == "pgd" && have_probe) {
                const double step = 2.5 * setting.eps / static_cast<double>(setting.pgd_steps);
                state = pgd(hidden.vector, probe, z_counterfactual, {setting.norm, setting.eps},
                            setting.pgd_steps, step);
                patched = forward_patch(model, ex.prompt, layer, state);
            } else if (method == "alterrep") {
                state = alterrep_apply(hidden.vector, inlp.rowspace,
                                       z_counterfactual == 1 ? 1 : -1, setting.alter_alpha);
                patched = forward_patch(model, ex.prompt, layer, state);
            } else {
                throw ConfigError("unknown method: " + method);
            }

            ordered_json j;
            j["id"] = idx;
            j["suite"] = suite.name;
            j["method"] = method;
            j["margin_before"] = margin_loss(clean_logits, objective);
            j["margin_after"] = margin_loss(patched, objective);
            j["argmax_before"] = static_cast<int>(argmax_lowest_id(clean_logits));
            j["argmax_after"] = static_cast<int>(argmax_lowest_id(patched));
            j["state_offset"] = offset;
            records << j.dump() << '\n';
            states.write(reinterpret_cast<const char*>(state.data()),
                         static_cast<std::streamsize>(state.size() * sizeof(double)));
            offset += state.size() * sizeof(double);
        }
        std::cout << "wrote " << base << ".jsonl (" << split->size() << " records, setting "
                  << setting.describe(method) << ")\n";
    }
    return 0;
}

int cmd_edit(const CliArgs& args) {
    if (!args.flags.count("input") || !args.flags.count("edited"))
        throw InputError("edit needs --input and --edited");
    const Vocabulary& vocab = Vocabulary::instance();
    EditSpec edits = EditSpec::from_sequences(vocab.encode(args.flags.at("input")),
                                              vocab.encode(args.flags.at("edited")));
    EditConfig cfg;
    if (args.flags.count("horizon")) cfg.horizon = std::stoul(args.flags.at("horizon"));
    if (args.flags.count("beta-f")) cfg.beta_f = std::stod(args.flags.at("beta-f"));
    if (args.flags.count("beta-g")) cfg.beta_g = std::stod(args.flags.at("beta-g"));
    if (args.flags.count("lambda")) cfg.lambda_fact = std::stod(args.flags.at("lambda"));
    if (args.flags.count("alpha")) cfg.step_size = std::stod(args.flags.at("alpha"));
    if (args.flags.count("steps")) cfg.inner_steps = std::stoul(args.flags.at("steps"));
    cfg.validate();

    TinyTransformer model = load_model(args.config.out_dir + "/model.ckpt");
    GenerateResult gen = la_hdmi_generate(model, edits, cfg);

    std::cout << "input:     " << vocab.decode(edits.input) << "\n";
    std::cout << "edited:    " << vocab.decode(edits.edited) << "\n";
    std::cout << "generated: " << vocab.decode(gen.tokens) << "\n";
    for (const auto& d : gen.diagnostics) {
        ordered_json j;
        j["step"] = d.step;
        j["objective_before"] = d.objective_before;
        j["objective_after"] = d.objective_after;
        j["gradient_norm"] = d.gradient_norm;
        j["display_token"] = vocab.word(d.display_token);
        ordered_json top = ordered_json::array();
        for (const auto& [tok, p] : d.top3) {
            ordered_json e;
            e["token"] = vocab.word(tok);
            e["p"] = p;
            top.push_back(e);
        }
        j["top3"] = top;
        ordered_json margins = ordered_json::array();
        for (const auto& [pos, m] : d.edit_margins) {
            ordered_json e;
            e["position"] = pos;
            e["margin"] = m;
            margins.push_back(e);
        }
        j["edit_margins"] = margins;
        std::cout << j.dump() << "\n";
    }
    return 0;
}

int cmd_verify_theory(const CliArgs& args) {
    const std::size_t instances =
        args.flags.count("instances") ? std::stoul(args.flags.at("instances")) : 50;
    const std::uint64_t seed =
        args.flags.count("seed") ? std::stoull(args.flags.at("seed")) : args.config.master_seed;
    auto checks = verify_margin_theory(instances, seed);
    bool all = true;
    for (const auto& c : checks) {
        std::printf("[%s] %-55s worst deviation %.3e\n", c.passed ? "PASS" : "FAIL",
                    c.name.c_str(), c.worst);
        all = all && c.passed;
    }
    return all ? 0 : 1;
}

int cmd_gradcheck(const CliArgs& args) {
    const std::size_t cases = args.flags.count("cases") ? std::stoul(args.flags.at("cases")) : 20;
    const std::uint64_t seed =
        args.flags.count("seed") ? std::stoull(args.flags.at("seed")) : args.config.master_seed;
    auto rows = run_gradient_checks(cases, seed);
    bool all = true;
    for (const auto& r : rows) {
        std::printf("[%s] %-55s worst %.3e (tol %.0e, %zu cases)\n", r.passed ? "PASS" : "FAIL",
                    r.name.c_str(), r.worst, r.tolerance, r.cases);
        all = all && r.passed;
    }
    return all ? 0 : 1;
}

int cmd_run_all(const CliArgs& args) {
    PipelineResult result = run_pipeline(args.config);
    std::cout << metrics_tsv_header() << "\n";
    for (const auto& row : result.table) std::cout << metrics_tsv_row(row) << "\n";
    for (const auto& suite : result.suites) {
        std::cout << "# suite " << suite.suite << ": clean pairwise accuracy "
                  << suite.clean_pairwise_accuracy_test;
        for (const auto& mo : suite.methods)
            if (mo.method == "hdmi") std::cout << ", hdmi flip rate " << mo.flip_rate;
        std::cout << "\n";
    }
    std::cout << "# manifest: " << args.config.out_dir << "/manifest.json\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        CliArgs args = parse_args(argc, argv);
        if (args.command == "gen-data") return cmd_gen_data(args);
        if (args.command == "train") return cmd_train(args);
        if (args.command == "fit-probes") return cmd_fit_probes(args);
        if (args.command == "intervene") return cmd_intervene(args);
        if (args.command == "edit") return cmd_edit(args);
        if (args.command == "evaluate") return cmd_evaluate(args);
        if (args.command == "verify-theory") return cmd_verify_theory(args);
        if (args.command == "gradcheck") return cmd_gradcheck(args);
        if (args.command == "run-all") return cmd_run_all(args);
        if (args.command == "help" || args.command == "--help") {
            print_usage();
            return 0;
        }
        print_usage();
        std::cerr << "error: unknown command: " << args.command << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
