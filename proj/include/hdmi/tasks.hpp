#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "hdmi/common.hpp"

namespace hdmi {

/// Closed word-level vocabulary shared by every suite. The word list is
/// fixed so token ids are stable across runs and every source/target
/// continuation is a single token.
class Vocabulary {
public:
    static const Vocabulary& instance();

    std::size_t size() const { return words_.size(); }
    int id(const std::string& word) const;
    const std::string& word(int id) const;
    bool contains(const std::string& word) const { return ids_.count(word) != 0; }

    std::vector<int> encode(const std::string& text) const;
    std::string decode(const std::vector<int>& ids) const;

    void write(const std::string& path) const;

    static constexpr int kPad = 0;
    static constexpr int kBos = 1;
    static constexpr int kEos = 2;
    static constexpr int kMask = 3;

private:
    Vocabulary();
    std::vector<std::string> words_;
    std::unordered_map<std::string, int> ids_;
};

struct LabeledExample {
    std::vector<int> prompt;  // ends just before the prediction site
    int source_token = -1;    // v_a: continuation realizing the factual value
    int target_token = -1;    // v_b: continuation realizing the counterfactual value
    int z_c = -1;
    int z_e = -1;
    std::string suite;
};

struct MinimalPair {
    std::vector<int> x_src, x_cf;
    int y_src = -1, y_cf = -1;
};

struct GeneratedSuite {
    std::vector<LabeledExample> examples;
    std::vector<std::vector<int>> sentences;  // full training sentence per example
};

// ---- agreement (LGD-style) ----------------------------------------------

/// Template slots for one agreement item; both subject-number variants are
/// realized from the same base.
struct AgreementBase {
    int subject = 0;              // noun-pair index; low indices take a copula
    bool subject_plural = false;  // z_c
    int lead = 0;                 // 0 none, 1 "today", 2 "now"
    int prep = -1;                // -1 no PP, else agreement preposition index
    int distractor = 0;           // distractor noun-pair index (when prep >= 0)
    bool distractor_plural = false;
    int tail = 0;                 // adjective (copula) or adverb (action) index
};

struct RealizedExample {
    LabeledExample example;
    std::vector<int> sentence;
};

RealizedExample realize_agreement(const AgreementBase& base);

/// n agreement examples with exactly balanced Z_c and near-balanced Z_e.
/// Without replacement the template space bounds n (CapacityError beyond).
GeneratedSuite gen_agreement_suite(std::size_t n, std::uint64_t seed,
                                   bool with_replacement = false);

/// Past-tense copula sentences used only to enrich the training corpus.
std::vector<std::vector<int>> gen_filler_sentences(std::size_t n, std::uint64_t seed);

// ---- grammar minimal-pair suites -----------------------------------------

extern const std::vector<std::string> kCausalgymSuites;

std::vector<MinimalPair> gen_causalgym_pairs(const std::string& name, std::size_t n_pairs,
                                             std::uint64_t seed);

/// Two examples per minimal pair with source/target roles swapped; n must be
/// even. Z_e comes from assign_ze.
GeneratedSuite gen_causalgym_suite(const std::string& name, std::size_t n, std::uint64_t seed);

/// Preposition-family nuisance class over the last 12 prompt tokens:
/// {0=none, 1=of, 2=in, 3=with/by, 4=other preposition}.
int assign_ze(const std::vector<int>& prompt);

/// Regenerate the paired example with the causal property flipped; source
/// and target tokens come back exchanged.
LabeledExample flip_causal(const LabeledExample& ex);

// ---- splits ---------------------------------------------------------------

struct SplitSpec {
    std::vector<std::size_t> interventional;
    std::vector<std::size_t> validation_probe;  // already independence-subsampled
    std::vector<std::size_t> test;
    std::uint64_t seed = 0;
};

SplitSpec make_splits(const std::vector<LabeledExample>& examples, double frac_interventional,
                      double frac_validation, double frac_test, std::uint64_t seed);

/// Equal-count subsample over occupied (z_c, z_e) cells, which zeroes the
/// empirical dependence between the two labels on the kept support. Returns
/// indices into `examples`.
std::vector<std::size_t> independence_subsample(const std::vector<LabeledExample>& examples,
                                                std::uint64_t seed);

// ---- dataset files --------------------------------------------------------

void write_dataset(const std::string& path, const std::vector<LabeledExample>& examples);
std::vector<LabeledExample> read_dataset(const std::string& path);

void write_corpus(const std::string& path, const std::vector<std::vector<int>>& sentences);
std::vector<std::vector<int>> read_corpus(const std::string& path);

}  // namespace hdmi
