#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "hdmi/interventions.hpp"
#include "hdmi/metrics.hpp"
#include "hdmi/model.hpp"
#include "hdmi/probes.hpp"
#include "hdmi/tasks.hpp"

namespace hdmi {

/// Flat key=value experiment configuration. Keys mirror the hyperparameter
/// table of the evaluation protocol; list-valued keys take comma-separated
/// values and define per-method search grids.
struct ExperimentConfig {
    // data
    std::vector<std::string> suites{"agreement"};
    std::size_t n_per_suite = 600;
    bool sample_with_replacement = false;
    double frac_interventional = 0.4;
    double frac_validation = 0.3;
    double frac_test = 0.3;
    std::size_t interventional_cap = 0;  // 0 = whole split
    std::size_t filler_sentences = 150;
    // model
    std::size_t hidden_size = 64;
    std::size_t layers = 2;
    std::size_t heads = 4;
    std::size_t max_seq_len = 32;
    // language-model training
    std::size_t train_epochs = 12;
    double train_lr = 1e-3;
    std::size_t train_batch = 32;
    double train_weight_decay = 1e-6;
    // probes
    std::size_t probe_epochs = 100;
    double probe_lr = 1e-2;
    double probe_weight_decay = 1e-6;
    std::size_t probe_batch_size = 256;
    std::size_t probe_hidden = 256;
    std::string probe_kind_interventional = "linear";
    std::string probe_kind_validation = "mlp";
    // methods and grids
    std::vector<std::string> methods{"hdmi", "target_only", "fgsm", "pgd", "alterrep"};
    std::vector<double> hdmi_alpha{1.0};
    std::vector<std::size_t> hdmi_inner_steps{30};
    std::vector<double> epsilon{0.5, 1.0, 10.0};
    std::vector<std::string> gbi_norm{"linf"};
    std::vector<std::size_t> pgd_steps{40, 50, 100};
    std::vector<std::size_t> inlp_rank{32};
    std::vector<double> alterrep_alpha{0.1, 0.5};
    int intervention_layer = -1;  // -1 = top layer
    // io
    std::string out_dir = "out";
    std::uint64_t master_seed = 7;

    static ExperimentConfig from_file(const std::string& path);
    void set(const std::string& key, const std::string& value);
    std::string canonical_text() const;
    std::uint64_t hash() const;
    ModelConfig model_config(std::size_t vocab_size) const;
    std::size_t layer() const { return intervention_layer < 0 ? layers
                                                              : static_cast<std::size_t>(intervention_layer); }
};

/// One grid point; only the fields a method reads are meaningful.
struct HyperSetting {
    double alpha = 0.0;
    std::size_t steps = 0;
    double eps = 0.0;
    BallNorm norm = BallNorm::linf;
    std::size_t pgd_steps = 0;
    std::size_t rank = 0;
    double alter_alpha = 0.0;

    std::string describe(const std::string& method) const;
};

std::vector<HyperSetting> method_grid(const ExperimentConfig& config, const std::string& method);

struct GridOutcome {
    std::size_t best_index = 0;
    std::vector<double> scores;
};

/// Argmax over the grid; ties keep the first-listed setting.
GridOutcome grid_search(const std::vector<HyperSetting>& grid,
                        const std::function<double(const HyperSetting&)>& score);

struct SampleRecord {
    std::size_t example_index = 0;
    double completeness = 0.0;
    double selectivity = 0.0;
    double reliability = 0.0;
    double margin_before = 0.0;
    double margin_after = 0.0;
    int argmax_before = -1;
    int argmax_after = -1;
    bool flipped = false;
    std::uint64_t state_offset = 0;
};

struct MethodOutcome {
    std::string method;
    std::string best_setting;
    double interventional_reliability = 0.0;
    MetricsRecord test_record;
    double flip_rate = 0.0;
    std::vector<SampleRecord> test_samples;
};

struct SuiteOutcome {
    std::string suite;
    double clean_pairwise_accuracy_test = 0.0;
    double probe_interventional_accuracy = -1.0;  // -1 when not fitted
    bool probe_retry = false;
    double probe_validation_zc_accuracy = 0.0;
    double probe_validation_ze_accuracy = 0.0;
    std::size_t n_interventional_used = 0;
    std::vector<MethodOutcome> methods;
};

struct PipelineResult {
    std::uint64_t config_hash = 0;
    std::vector<SuiteOutcome> suites;
    std::vector<MetricsRecord> table;
    std::unique_ptr<TinyTransformer> model;
};

/// End-to-end run: data, splits, LM training (checkpoint round-trip), probe
/// fits with the accuracy gate, per-method grid search on the interventional
/// split, final test-split evaluation, and artifact emission. Leakage
/// assertions fail hard.
PipelineResult run_pipeline(const ExperimentConfig& config);

// ---- stage entry points shared with the CLI -----------------------------

struct GeneratedData {
    std::vector<GeneratedSuite> suites;    // aligned with config.suites
    std::vector<SplitSpec> splits;         // aligned with config.suites
    std::vector<std::vector<int>> corpus;  // union of suite sentences + fillers
};

GeneratedData pipeline_gen_data(const ExperimentConfig& config, bool write_files);

TinyTransformer pipeline_train(const ExperimentConfig& config,
                               const std::vector<std::vector<int>>& corpus, bool write_files);

struct SuiteInputs {
    std::string name;
    std::vector<LabeledExample> examples;
    SplitSpec splits;
};

struct SuiteProbeSet {
    bool has_interventional = false;
    bool interventional_retry = false;
    ProbeModel interventional_zc;
    ProbeModel validation_zc;
    ProbeModel validation_ze;
};

/// Fits the interventional probe (when `gate_required`, subject to the 0.90
/// holdout gate with one 90/10 retry) and the two validation probes on
/// clean states of their splits. Leakage assertions fail hard.
SuiteProbeSet pipeline_fit_probes(const ExperimentConfig& config, const TinyTransformer& model,
                                  const SuiteInputs& suite, bool gate_required, bool write_files);

struct EvalWriters {
    std::ostream* records = nullptr;        // JSONL, one line per test sample
    std::ostream* states = nullptr;         // raw little-endian f64 state dumps
    std::uint64_t* states_offset = nullptr;
};

/// Grid search on the (possibly capped) interventional split, final
/// evaluation on the test split, per-method.
SuiteOutcome pipeline_evaluate_suite(const ExperimentConfig& config,
                                     const TinyTransformer& model, const SuiteInputs& suite,
                                     const SuiteProbeSet& probes, const EvalWriters& writers);

void write_splits_json(const std::string& path, const SplitSpec& splits);
SplitSpec read_splits_json(const std::string& path);

}  // namespace hdmi
