#include "hdmi/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace hdmi {

namespace {

using ordered_json = nlohmann::ordered_json;

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(text);
    while (std::getline(is, cur, ',')) {
        const auto b = cur.find_first_not_of(" \t");
        const auto e = cur.find_last_not_of(" \t");
        if (b == std::string::npos) continue;
        out.push_back(cur.substr(b, e - b + 1));
    }
    return out;
}

std::vector<double> parse_doubles(const std::string& text) {
    std::vector<double> out;
    for (const auto& tok : split_list(text)) out.push_back(std::stod(tok));
    return out;
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
    std::vector<std::size_t> out;
    for (const auto& tok : split_list(text)) out.push_back(std::stoul(tok));
    return out;
}

template <typename T>
std::string join(const std::vector<T>& v) {
    std::ostringstream os;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) os << ',';
        os << v[i];
    }
    return os.str();
}

BallNorm parse_norm(const std::string& name) {
    if (name == "linf" || name == "l_inf") return BallNorm::linf;
    if (name == "l2") return BallNorm::l2;
    throw ConfigError("unknown gbi_norm: " + name);
}

ProbeKind parse_kind(const std::string& name) {
    if (name == "linear") return ProbeKind::linear;
    if (name == "mlp") return ProbeKind::mlp;
    throw ConfigError("unknown probe kind: " + name);
}

}  // namespace

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw InputError("cannot read config file: " + path);
    ExperimentConfig config;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("malformed config line: " + line);
        config.set(line.substr(0, eq), line.substr(eq + 1));
    }
    return config;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
    if (key == "suites") suites = split_list(value);
    else if (key == "n_per_suite") n_per_suite = std::stoul(value);
    else if (key == "sample_with_replacement") sample_with_replacement = value == "1" || value == "true";
    else if (key == "frac_interventional") frac_interventional = std::stod(value);
    else if (key == "frac_validation") frac_validation = std::stod(value);
    else if (key == "frac_test") frac_test = std::stod(value);
    else if (key == "interventional_cap") interventional_cap = std::stoul(value);
    else if (key == "filler_sentences") filler_sentences = std::stoul(value);
    else if (key == "hidden_size") hidden_size = std::stoul(value);
    else if (key == "layers") layers = std::stoul(value);
    else if (key == "heads") heads = std::stoul(value);
    else if (key == "max_seq_len") max_seq_len = std::stoul(value);
    else if (key == "train_epochs") train_epochs = std::stoul(value);
    else if (key == "train_lr") train_lr = std::stod(value);
    else if (key == "train_batch") train_batch = std::stoul(value);
    else if (key == "train_weight_decay") train_weight_decay = std::stod(value);
    else if (key == "probe_epochs") probe_epochs = std::stoul(value);
    else if (key == "probe_lr") probe_lr = std::stod(value);
    else if (key == "probe_weight_decay") probe_weight_decay = std::stod(value);
    else if (key == "probe_batch_size") probe_batch_size = std::stoul(value);
    else if (key == "probe_hidden") probe_hidden = std::stoul(value);
    else if (key == "probe_kind_interventional") probe_kind_interventional = value;
    else if (key == "probe_kind_validation") probe_kind_validation = value;
    else if (key == "methods") methods = split_list(value);
    else if (key == "hdmi_alpha") hdmi_alpha = parse_doubles(value);
    else if (key == "hdmi_inner_steps") hdmi_inner_steps = parse_sizes(value);
    else if (key == "epsilon") epsilon = parse_doubles(value);
    else if (key == "gbi_norm") gbi_norm = split_list(value);
    else if (key == "pgd_steps") pgd_steps = parse_sizes(value);
    else if (key == "inlp_rank") inlp_rank = parse_sizes(value);
    else if (key == "alterrep_alpha") alterrep_alpha = parse_doubles(value);
    else if (key == "intervention_layer") intervention_layer = std::stoi(value);
    else if (key == "out_dir") out_dir = value;
    else if (key == "master_seed") master_seed = std::stoull(value);
    else throw ConfigError("unknown config key: " + key);
}

std::string ExperimentConfig::canonical_text() const {
    std::ostringstream os;
    os << "suites=" << join(suites) << '\n'
       << "n_per_suite=" << n_per_suite << '\n'
       << "sample_with_replacement=" << (sample_with_replacement ? 1 : 0) << '\n'
       << "frac_interventional=" << frac_interventional << '\n'
       << "frac_validation=" << frac_validation << '\n'
       << "frac_test=" << frac_test << '\n'
       << "interventional_cap=" << interventional_cap << '\n'
       << "filler_sentences=" << filler_sentences << '\n'
       << "hidden_size=" << hidden_size << '\n'
       << "layers=" << layers << '\n'
       << "heads=" << heads << '\n'
       << "max_seq_len=" << max_seq_len << '\n'
       << "train_epochs=" << train_epochs << '\n'
       << "train_lr=" << train_lr << '\n'
       << "train_batch=" << train_batch << '\n'
       << "train_weight_decay=" << train_weight_decay << '\n'
       << "probe_epochs=" << probe_epochs << '\n'
       << "probe_lr=" << probe_lr << '\n'
       << "probe_weight_decay=" << probe_weight_decay << '\n'
       << "probe_batch_size=" << probe_batch_size << '\n'
       << "probe_hidden=" << probe_hidden << '\n'
       << "probe_kind_interventional=" << probe_kind_interventional << '\n'
       << "probe_kind_validation=" << probe_kind_validation << '\n'
       << "methods=" << join(methods) << '\n'
       << "hdmi_alpha=" << join(hdmi_alpha) << '\n'
       << "hdmi_inner_steps=" << join(hdmi_inner_steps) << '\n'
       << "epsilon=" << join(epsilon) << '\n'
       << "gbi_norm=" << join(gbi_norm) << '\n'
       << "pgd_steps=" << join(pgd_steps) << '\n'
       << "inlp_rank=" << join(inlp_rank) << '\n'
       << "alterrep_alpha=" << join(alterrep_alpha) << '\n'
       << "intervention_layer=" << intervention_layer << '\n'
       << "out_dir=" << out_dir << '\n'
       << "master_seed=" << master_seed << '\n';
    return os.str();
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a(canonical_text()); }

ModelConfig ExperimentConfig::model_config(std::size_t vocab_size) const {
    ModelConfig mc;
    mc.vocab_size = vocab_size;
    mc.hidden_size = hidden_size;
    mc.embed_size = hidden_size;
    mc.layers = layers;
    mc.heads = heads;
    mc.max_seq_len = max_seq_len;
    mc.seed = derive_seed(master_seed, "model");
    return mc;
}

std::string HyperSetting::describe(const std::string& method) const {
    std::ostringstream os;
    if (method == "hdmi" || method == "target_only") {
        os << "hdmi_alpha=" << alpha << ";hdmi_inner_steps=" << steps;
    } else if (method == "fgsm") {
        os << "epsilon=" << eps << ";gbi_norm=" << (norm == BallNorm::linf ? "linf" : "l2");
    } else if (method == "pgd") {
        os << "epsilon=" << eps << ";gbi_norm=" << (norm == BallNorm::linf ? "linf" : "l2")
           << ";pgd_steps=" << pgd_steps;
    } else if (method == "alterrep") {
        os << "inlp_rank=" << rank << ";alterrep_alpha=" << alter_alpha;
    } else {
        os << "?";
    }
    return os.str();
}

std::vector<HyperSetting> method_grid(const ExperimentConfig& config, const std::string& method) {
    std::vector<HyperSetting> grid;
    if (method == "hdmi" || method == "target_only") {
        for (double a : config.hdmi_alpha)
            for (std::size_t k : config.hdmi_inner_steps) {
                HyperSetting s;
                s.alpha = a;
                s.steps = k;
                grid.push_back(s);
            }
    } else if (method == "fgsm") {
        for (double e : config.epsilon)
            for (const auto& n : config.gbi_norm) {
                HyperSetting s;
                s.eps = e;
                s.norm = parse_norm(n);
                grid.push_back(s);
            }
    } else if (method == "pgd") {
        for (double e : config.epsilon)
            for (const auto& n : config.gbi_norm)
                for (std::size_t k : config.pgd_steps) {
                    HyperSetting s;
                    s.eps = e;
                    s.norm = parse_norm(n);
                    s.pgd_steps = k;
                    grid.push_back(s);
                }
    } else if (method == "alterrep") {
        for (std::size_t r : config.inlp_rank)
            for (double a : config.alterrep_alpha) {
                HyperSetting s;
                s.rank = r;
                s.alter_alpha = a;
                grid.push_back(s);
            }
    } else {
        throw ConfigError("unknown method: " + method);
    }
    if (grid.empty()) throw ConfigError("empty hyperparameter grid for " + method);
    return grid;
}

GridOutcome grid_search(const std::vector<HyperSetting>& grid,
                        const std::function<double(const HyperSetting&)>& score) {
    if (grid.empty()) throw ConfigError("grid_search: empty grid");
    GridOutcome out;
    for (const auto& setting : grid) out.scores.push_back(score(setting));
    for (std::size_t i = 1; i < out.scores.size(); ++i)
        if (out.scores[i] > out.scores[out.best_index]) out.best_index = i;
    for (double s : out.scores)
        if (s > out.scores[out.best_index])
            throw std::logic_error("grid_search: argmax contract violated");
    return out;
}

namespace {

struct SuiteStates {
    std::vector<Tensor> states;
    std::vector<Tensor> logits;
};

SuiteStates capture_suite_states(const TinyTransformer& model,
                                 const std::vector<LabeledExample>& examples,
                                 std::size_t layer) {
    SuiteStates out;
    out.states.reserve(examples.size());
    out.logits.reserve(examples.size());
    for (const auto& ex : examples) {
        auto [logits, hidden] = forward_capture(model, ex.prompt, layer);
        out.states.push_back(std::move(hidden.vector));
        out.logits.push_back(std::move(logits));
    }
    return out;
}

void assert_disjoint_splits(const SplitSpec& splits) {
    std::vector<std::size_t> all;
    for (auto v : {&splits.interventional, &splits.validation_probe, &splits.test})
        all.insert(all.end(), v->begin(), v->end());
    std::sort(all.begin(), all.end());
    if (std::adjacent_find(all.begin(), all.end()) != all.end())
        throw std::logic_error("leakage: splits overlap");
}

ProbeModel fit_split_probe(const ExperimentConfig& config, const SuiteInputs& suite,
                           const SuiteStates& states, const std::vector<std::size_t>& split,
                           const std::string& split_tag, bool z_causal, ProbeKind kind,
                           double holdout_frac, std::uint64_t seed) {
    if (split_tag != "interventional" && split_tag != "validation_probe")
        throw std::logic_error(
            "probes may only be fitted on clean interventional or validation-probe states");
    std::vector<Tensor> xs;
    std::vector<int> ys;
    for (std::size_t idx : split) {
        xs.push_back(states.states[idx]);
        ys.push_back(z_causal ? suite.examples[idx].z_c : suite.examples[idx].z_e);
    }
    ProbeHparams hp;
    hp.lr = config.probe_lr;
    hp.weight_decay = config.probe_weight_decay;
    hp.batch_size = config.probe_batch_size;
    hp.epochs = config.probe_epochs;
    hp.holdout_frac = holdout_frac;
    hp.mlp_widths = {config.probe_hidden};
    return train_probe(xs, ys, kind, hp, seed, split_tag);
}

bool method_uses_interventional_probe(const std::string& method) {
    return method == "fgsm" || method == "pgd";
}

bool method_is_probe_free(const std::string& method) {
    return method == "hdmi" || method == "target_only";
}

struct EvalContext {
    const ExperimentConfig& config;
    const TinyTransformer& model;
    const SuiteInputs& suite;
    const SuiteStates& states;
    const SuiteProbeSet& probes;
    std::map<std::size_t, InlpResult>& inlp_cache;
    std::vector<std::size_t> interventional_used;
};

const InlpResult& inlp_for_rank(EvalContext& ctx, std::size_t rank) {
    auto it = ctx.inlp_cache.find(rank);
    if (it != ctx.inlp_cache.end()) return it->second;
    std::vector<Tensor> xs;
    std::vector<int> ys;
    for (std::size_t idx : ctx.interventional_used) {
        xs.push_back(ctx.states.states[idx]);
        ys.push_back(ctx.suite.examples[idx].z_c);
    }
    InlpResult fitted =
        inlp_fit(xs, ys, rank, derive_seed(ctx.config.master_seed, "inlp-" + ctx.suite.name));
    return ctx.inlp_cache.emplace(rank, std::move(fitted)).first->second;
}

SampleRecord evaluate_sample(EvalContext& ctx, const std::string& method,
                             const HyperSetting& setting, std::size_t example_index,
                             Tensor* state_out) {
    const LabeledExample& ex = ctx.suite.examples[example_index];
    const Tensor& clean_state = ctx.states.states[example_index];
    const Tensor& clean_logits = ctx.states.logits[example_index];
    const int z_counterfactual = 1 - ex.z_c;
    const MarginObjective objective{{ex.target_token}, {ex.source_token}};
    const std::size_t layer = ctx.config.layer();

    Tensor intervened_state;
    Tensor patched_logits;
    if (method_is_probe_free(method)) {
        // Probe-free path: the objective reads the model head only; no probe
        // handle exists in this branch.
        AscentConfig ac{setting.alpha, setting.steps, layer};
        AscentResult res = method == "hdmi"
                               ? hdmi_ascend(ctx.model, ex.prompt, objective, ac)
                               : target_only_ascend(ctx.model, ex.prompt, objective, ac);
        intervened_state = std::move(res.state);
        patched_logits = std::move(res.logits);
    } else if (method == "fgsm" || method == "pgd") {
        if (!ctx.probes.has_interventional)
            throw std::logic_error("probe-driven method evaluated without interventional probe");
        const ProbeModel& probe = ctx.probes.interventional_zc;
        if (probe.trained_on != "interventional")
            throw std::logic_error("leakage: baseline driven by a non-interventional probe");
        BallConstraint ball{setting.norm, setting.eps};
        if (method == "fgsm") {
            intervened_state = fgsm(clean_state, probe, z_counterfactual, ball);
        } else {
            const double step = 2.5 * setting.eps / static_cast<double>(setting.pgd_steps);
            intervened_state =
                pgd(clean_state, probe, z_counterfactual, ball, setting.pgd_steps, step);
        }
        patched_logits = forward_patch(ctx.model, ex.prompt, layer, intervened_state);
    } else if (method == "alterrep") {
        const InlpResult& inlp = inlp_for_rank(ctx, setting.rank);
        const int side = z_counterfactual == 1 ? 1 : -1;
        intervened_state = alterrep_apply(clean_state, inlp.rowspace, side, setting.alter_alpha);
        patched_logits = forward_patch(ctx.model, ex.prompt, layer, intervened_state);
    } else {
        throw ConfigError("unknown method: " + method);
    }

    // Metrics come from validation probes only.
    if (ctx.probes.validation_zc.trained_on != "validation_probe" ||
        ctx.probes.validation_ze.trained_on != "validation_probe")
        throw std::logic_error("leakage: metrics probe not from the validation-probe split");

    SampleRecord rec;
    rec.example_index = example_index;
    const Tensor p_after = probe_predict(ctx.probes.validation_zc, intervened_state);
    rec.completeness = completeness(p_after, static_cast<std::size_t>(z_counterfactual));
    const Tensor pe_before = probe_predict(ctx.probes.validation_ze, clean_state);
    const Tensor pe_after = probe_predict(ctx.probes.validation_ze, intervened_state);
    rec.selectivity = selectivity(pe_before, pe_after);
    rec.reliability = reliability(rec.completeness, rec.selectivity);
    rec.margin_before = margin_loss(clean_logits, objective);
    rec.margin_after = margin_loss(patched_logits, objective);
    rec.argmax_before = static_cast<int>(argmax_lowest_id(clean_logits));
    rec.argmax_after = static_cast<int>(argmax_lowest_id(patched_logits));
    rec.flipped = rec.argmax_after == ex.target_token;

    if (state_out) *state_out = std::move(intervened_state);
    return rec;
}

}  // namespace

GeneratedData pipeline_gen_data(const ExperimentConfig& config, bool write_files) {
    if (config.suites.empty()) throw ConfigError("no suites configured");
    GeneratedData data;
    for (const auto& suite : config.suites) {
        const std::uint64_t seed = derive_seed(config.master_seed, "gen:" + suite);
        GeneratedSuite gen;
        if (suite == "agreement") {
            gen = gen_agreement_suite(config.n_per_suite, seed, config.sample_with_replacement);
        } else {
            gen = gen_causalgym_suite(suite, config.n_per_suite, seed);
        }
        SplitSpec splits = make_splits(gen.examples, config.frac_interventional,
                                       config.frac_validation, config.frac_test,
                                       derive_seed(config.master_seed, "splits:" + suite));
        data.suites.push_back(std::move(gen));
        data.splits.push_back(std::move(splits));
    }

    for (const auto& suite : data.suites)
        for (const auto& s : suite.sentences) data.corpus.push_back(s);
    auto fillers =
        gen_filler_sentences(config.filler_sentences, derive_seed(config.master_seed, "fillers"));
    data.corpus.insert(data.corpus.end(), fillers.begin(), fillers.end());

    if (write_files) {
        std::filesystem::create_directories(config.out_dir);
        Vocabulary::instance().write(config.out_dir + "/vocab.txt");
        for (std::size_t i = 0; i < config.suites.size(); ++i) {
            write_dataset(config.out_dir + "/dataset_" + config.suites[i] + ".tsv",
                          data.suites[i].examples);
            write_splits_json(config.out_dir + "/splits_" + config.suites[i] + ".json",
                              data.splits[i]);
        }
        write_corpus(config.out_dir + "/corpus.txt", data.corpus);
    }
    return data;
}

TinyTransformer pipeline_train(const ExperimentConfig& config,
                               const std::vector<std::vector<int>>& corpus, bool write_files) {
    ModelConfig mc = config.model_config(Vocabulary::instance().size());
    TinyTransformer model(mc);
    TrainOptions opts;
    opts.epochs = config.train_epochs;
    opts.lr = config.train_lr;
    opts.batch_size = config.train_batch;
    opts.weight_decay = config.train_weight_decay;
    opts.seed = derive_seed(config.master_seed, "train-lm");
    TrainResult trace = train_lm(model, corpus, opts);

    std::filesystem::create_directories(config.out_dir);
    const std::string ckpt = config.out_dir + "/model.ckpt";
    save_model(model, ckpt);
    if (write_files) {
        std::ofstream os(config.out_dir + "/losstrace.tsv");
        os << "epoch\tmean_loss\n";
        os.setf(std::ios::fixed);
        os.precision(6);
        for (std::size_t i = 0; i < trace.epoch_losses.size(); ++i)
            os << i << '\t' << trace.epoch_losses[i] << '\n';
    }
    // Round-trip through the checkpoint so staged runs and run-all see the
    // exact same parameters.
    return load_model(ckpt);
}

SuiteProbeSet pipeline_fit_probes(const ExperimentConfig& config, const TinyTransformer& model,
                                  const SuiteInputs& suite, bool gate_required,
                                  bool write_files) {
    assert_disjoint_splits(suite.splits);
    SuiteStates states = capture_suite_states(model, suite.examples, config.layer());

    std::vector<std::size_t> interventional_used = suite.splits.interventional;
    if (config.interventional_cap > 0 && interventional_used.size() > config.interventional_cap)
        interventional_used.resize(config.interventional_cap);

    SuiteProbeSet probes;
    if (gate_required) {
        probes.interventional_zc = fit_split_probe(
            config, suite, states, interventional_used, "interventional", /*z_causal=*/true,
            parse_kind(config.probe_kind_interventional), 0.2,
            derive_seed(config.master_seed, "probe-int:" + suite.name));
        probes.has_interventional = true;
        if (probes.interventional_zc.holdout_accuracy < 0.90) {
            // One retry with a larger training share, then abort.
            probes.interventional_retry = true;
            probes.interventional_zc = fit_split_probe(
                config, suite, states, interventional_used, "interventional", true,
                parse_kind(config.probe_kind_interventional), 0.1,
                derive_seed(config.master_seed, "probe-int-retry:" + suite.name));
            if (probes.interventional_zc.holdout_accuracy < 0.90)
                throw DegenerateError(
                    "interventional probe failed the 0.90 accuracy gate after retry (suite " +
                    suite.name + ", holdout accuracy " +
                    std::to_string(probes.interventional_zc.holdout_accuracy) + ")");
        }
    }

    probes.validation_zc = fit_split_probe(
        config, suite, states, suite.splits.validation_probe, "validation_probe", true,
        parse_kind(config.probe_kind_validation), 0.2,
        derive_seed(config.master_seed, "probe-val-zc:" + suite.name));
    probes.validation_ze = fit_split_probe(
        config, suite, states, suite.splits.validation_probe, "validation_probe", false,
        parse_kind(config.probe_kind_validation), 0.2,
        derive_seed(config.master_seed, "probe-val-ze:" + suite.name));

    if (write_files) {
        std::filesystem::create_directories(config.out_dir);
        if (probes.has_interventional)
            save_probe(probes.interventional_zc,
                       config.out_dir + "/probe_int_zc_" + suite.name + ".ckpt");
        save_probe(probes.validation_zc,
                   config.out_dir + "/probe_val_zc_" + suite.name + ".ckpt");
        save_probe(probes.validation_ze,
                   config.out_dir + "/probe_val_ze_" + suite.name + ".ckpt");
    }
    return probes;
}

SuiteOutcome pipeline_evaluate_suite(const ExperimentConfig& config,
                                     const TinyTransformer& model, const SuiteInputs& suite,
                                     const SuiteProbeSet& probes, const EvalWriters& writers) {
    assert_disjoint_splits(suite.splits);
    const std::size_t layer = config.layer();
    if (layer < 1 || layer > config.layers) throw ConfigError("intervention layer out of range");

    SuiteOutcome outcome;
    outcome.suite = suite.name;
    outcome.probe_interventional_accuracy =
        probes.has_interventional ? probes.interventional_zc.holdout_accuracy : -1.0;
    outcome.probe_retry = probes.interventional_retry;
    outcome.probe_validation_zc_accuracy = probes.validation_zc.holdout_accuracy;
    outcome.probe_validation_ze_accuracy = probes.validation_ze.holdout_accuracy;

    SuiteStates states = capture_suite_states(model, suite.examples, layer);

    std::vector<std::size_t> interventional_used = suite.splits.interventional;
    if (config.interventional_cap > 0 && interventional_used.size() > config.interventional_cap)
        interventional_used.resize(config.interventional_cap);
    outcome.n_interventional_used = interventional_used.size();

    {
        std::size_t correct = 0;
        for (std::size_t idx : suite.splits.test) {
            const auto& ex = suite.examples[idx];
            if (states.logits[idx][static_cast<std::size_t>(ex.source_token)] >
                states.logits[idx][static_cast<std::size_t>(ex.target_token)])
                ++correct;
        }
        outcome.clean_pairwise_accuracy_test =
            static_cast<double>(correct) / static_cast<double>(suite.splits.test.size());
    }

    std::map<std::size_t, InlpResult> inlp_cache;
    EvalContext ctx{config, model, suite, states, probes, inlp_cache, interventional_used};

    for (const auto& method : config.methods) {
        if (method_uses_interventional_probe(method) && !probes.has_interventional)
            throw ConfigError("method " + method + " requires the interventional probe stage");
        std::vector<HyperSetting> grid = method_grid(config, method);

        GridOutcome chosen = grid_search(grid, [&](const HyperSetting& setting) {
            double sum = 0.0;
            for (std::size_t idx : ctx.interventional_used)
                sum += evaluate_sample(ctx, method, setting, idx, nullptr).reliability;
            return sum / static_cast<double>(ctx.interventional_used.size());
        });

        MethodOutcome mo;
        mo.method = method;
        mo.best_setting = grid[chosen.best_index].describe(method);
        mo.interventional_reliability = chosen.scores[chosen.best_index];

        double comp = 0.0, sel = 0.0, flips = 0.0;
        for (std::size_t idx : suite.splits.test) {
            Tensor state;
            SampleRecord rec = evaluate_sample(ctx, method, grid[chosen.best_index], idx, &state);
            comp += rec.completeness;
            sel += rec.selectivity;
            flips += rec.flipped ? 1.0 : 0.0;

            if (writers.states && writers.states_offset) {
                rec.state_offset = *writers.states_offset;
                writers.states->write(reinterpret_cast<const char*>(state.data()),
                                      static_cast<std::streamsize>(state.size() * sizeof(double)));
                *writers.states_offset += state.size() * sizeof(double);
            }
            if (writers.records) {
                ordered_json j;
                j["id"] = rec.example_index;
                j["suite"] = suite.name;
                j["method"] = method;
                j["margin_before"] = rec.margin_before;
                j["margin_after"] = rec.margin_after;
                j["argmax_before"] = rec.argmax_before;
                j["argmax_after"] = rec.argmax_after;
                j["state_offset"] = rec.state_offset;
                (*writers.records) << j.dump() << '\n';
            }
            mo.test_samples.push_back(std::move(rec));
        }
        const double n = static_cast<double>(suite.splits.test.size());
        mo.test_record.task = suite.name;
        mo.test_record.method = method;
        mo.test_record.completeness = comp / n;
        mo.test_record.selectivity = sel / n;
        mo.test_record.reliability =
            reliability(mo.test_record.completeness, mo.test_record.selectivity);
        mo.test_record.n_samples = suite.splits.test.size();
        mo.flip_rate = flips / n;
        outcome.methods.push_back(std::move(mo));
    }
    return outcome;
}

void write_splits_json(const std::string& path, const SplitSpec& splits) {
    ordered_json j;
    j["seed"] = splits.seed;
    j["interventional"] = splits.interventional;
    j["validation_probe"] = splits.validation_probe;
    j["test"] = splits.test;
    std::ofstream os(path);
    if (!os) throw InputError("cannot write splits: " + path);
    os << j.dump(2) << '\n';
}

SplitSpec read_splits_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw InputError("cannot read splits: " + path);
    ordered_json j = ordered_json::parse(is);
    SplitSpec splits;
    splits.seed = j.at("seed").get<std::uint64_t>();
    splits.interventional = j.at("interventional").get<std::vector<std::size_t>>();
    splits.validation_probe = j.at("validation_probe").get<std::vector<std::size_t>>();
    splits.test = j.at("test").get<std::vector<std::size_t>>();
    return splits;
}

PipelineResult run_pipeline(const ExperimentConfig& config) {
    PipelineResult result;
    result.config_hash = config.hash();
    std::filesystem::create_directories(config.out_dir);
    reset_selectivity_clamp_count();

    GeneratedData data = pipeline_gen_data(config, /*write_files=*/true);
    TinyTransformer model = pipeline_train(config, data.corpus, /*write_files=*/true);

    const bool needs_int_probe = std::any_of(config.methods.begin(), config.methods.end(),
                                             method_uses_interventional_probe);

    std::ofstream states_file(config.out_dir + "/intervened_states.bin", std::ios::binary);
    std::uint64_t states_offset = 0;
    std::ofstream records_file(config.out_dir + "/interventions_test.jsonl");
    EvalWriters writers{&records_file, &states_file, &states_offset};

    for (std::size_t si = 0; si < config.suites.size(); ++si) {
        SuiteInputs suite{config.suites[si], data.suites[si].examples, data.splits[si]};
        SuiteProbeSet probes =
            pipeline_fit_probes(config, model, suite, needs_int_probe, /*write_files=*/true);
        SuiteOutcome outcome = pipeline_evaluate_suite(config, model, suite, probes, writers);
        for (const auto& mo : outcome.methods) result.table.push_back(mo.test_record);
        result.suites.push_back(std::move(outcome));
    }

    {
        std::ofstream tsv(config.out_dir + "/results.tsv");
        tsv << metrics_tsv_header() << '\n';
        for (const auto& row : result.table) tsv << metrics_tsv_row(row) << '\n';

        std::ofstream jsonl(config.out_dir + "/results.jsonl");
        for (const auto& row : result.table) {
            ordered_json j;
            j["task"] = row.task;
            j["method"] = row.method;
            j["completeness"] = row.completeness;
            j["selectivity"] = row.selectivity;
            j["reliability"] = row.reliability;
            j["n_samples"] = row.n_samples;
            jsonl << j.dump() << '\n';
        }
    }

    {
        char hash_hex[32];
        std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                      static_cast<unsigned long long>(result.config_hash));
        ordered_json m;
        m["config_hash"] = hash_hex;
        m["code_version"] = std::string(kCodeVersion);
        m["master_seed"] = config.master_seed;
        ordered_json seeds;
        seeds["model"] = derive_seed(config.master_seed, "model");
        seeds["train-lm"] = derive_seed(config.master_seed, "train-lm");
        seeds["fillers"] = derive_seed(config.master_seed, "fillers");
        for (const auto& suite : config.suites) {
            seeds["gen:" + suite] = derive_seed(config.master_seed, "gen:" + suite);
            seeds["splits:" + suite] = derive_seed(config.master_seed, "splits:" + suite);
        }
        m["stage_seeds"] = seeds;
        ordered_json files;
        files["vocab"] = config.out_dir + "/vocab.txt";
        files["corpus"] = config.out_dir + "/corpus.txt";
        files["model"] = config.out_dir + "/model.ckpt";
        files["results_tsv"] = config.out_dir + "/results.tsv";
        files["results_jsonl"] = config.out_dir + "/results.jsonl";
        files["intervention_records"] = config.out_dir + "/interventions_test.jsonl";
        files["intervened_states"] = config.out_dir + "/intervened_states.bin";
        for (const auto& suite : config.suites) {
            files["dataset_" + suite] = config.out_dir + "/dataset_" + suite + ".tsv";
            files["splits_" + suite] = config.out_dir + "/splits_" + suite + ".json";
        }
        m["files"] = files;
        m["config"] = config.canonical_text();
        m["hdmi_probe_free"] = true;
        m["selectivity_clamps"] = selectivity_clamp_count();
        ordered_json suites_json = ordered_json::array();
        for (const auto& s : result.suites) {
            ordered_json sj;
            sj["suite"] = s.suite;
            sj["clean_pairwise_accuracy_test"] = s.clean_pairwise_accuracy_test;
            sj["probe_interventional_accuracy"] = s.probe_interventional_accuracy;
            sj["probe_retry"] = s.probe_retry;
            sj["probe_validation_zc_accuracy"] = s.probe_validation_zc_accuracy;
            sj["probe_validation_ze_accuracy"] = s.probe_validation_ze_accuracy;
            sj["n_interventional_used"] = s.n_interventional_used;
            ordered_json methods_json = ordered_json::array();
            for (const auto& mo : s.methods) {
                ordered_json mj;
                mj["method"] = mo.method;
                mj["best_setting"] = mo.best_setting;
                mj["interventional_reliability"] = mo.interventional_reliability;
                mj["flip_rate"] = mo.flip_rate;
                methods_json.push_back(mj);
            }
            sj["methods"] = methods_json;
            suites_json.push_back(sj);
        }
        m["suites"] = suites_json;
        std::ofstream os(config.out_dir + "/manifest.json");
        os << m.dump(2) << '\n';
    }

    result.model = std::make_unique<TinyTransformer>(std::move(model));
    return result;
}

}  // namespace hdmi
