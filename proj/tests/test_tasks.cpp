#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>

#include "hdmi/tasks.hpp"

using namespace hdmi;

namespace {
const Vocabulary& voc() { return Vocabulary::instance(); }
}

TEST_CASE("vocabulary is closed, word-level and reserves the specials") {
    CHECK(voc().size() >= 100);
    CHECK(voc().size() <= 140);
    CHECK(voc().word(Vocabulary::kPad) == "<pad>");
    CHECK(voc().word(Vocabulary::kBos) == "<bos>");
    CHECK(voc().word(Vocabulary::kEos) == "<eos>");
    CHECK(voc().word(Vocabulary::kMask) == "<mask>");
    CHECK(voc().id("keys") != voc().id("key"));
    CHECK_THROWS_AS(voc().id("zebra"), LookupError);

    std::vector<int> ids = voc().encode("the keys to the cabinet");
    CHECK(voc().decode(ids) == "the keys to the cabinet");
}

TEST_CASE("agreement template realizes the canonical examples") {
    // "the key to the cabinets [MASK]" -> v_a=is, v_b=are, z_c=0, z_e=2
    AgreementBase base;
    base.subject = 0;  // key
    base.subject_plural = false;
    base.prep = 0;  // to
    base.distractor = 0;  // cabinet
    base.distractor_plural = true;
    RealizedExample r = realize_agreement(base);
    CHECK(voc().decode(r.example.prompt) == "the key to the cabinets");
    CHECK(voc().word(r.example.source_token) == "is");
    CHECK(voc().word(r.example.target_token) == "are");
    CHECK(r.example.z_c == 0);
    CHECK(r.example.z_e == 2);

    // "the keys [MASK]" -> z_c=1, z_e=0 (no prepositional phrase)
    AgreementBase bare;
    bare.subject = 0;
    bare.subject_plural = true;
    RealizedExample r2 = realize_agreement(bare);
    CHECK(voc().decode(r2.example.prompt) == "the keys");
    CHECK(r2.example.z_c == 1);
    CHECK(r2.example.z_e == 0);
    CHECK(voc().word(r2.example.source_token) == "are");
}

TEST_CASE("generated agreement suite is consistent and balanced") {
    GeneratedSuite suite = gen_agreement_suite(400, 7);
    REQUIRE(suite.examples.size() == 400);
    REQUIRE(suite.sentences.size() == 400);

    std::size_t zc1 = 0;
    std::map<std::pair<int, int>, std::size_t> cells;
    for (const auto& ex : suite.examples) {
        CHECK(ex.source_token != ex.target_token);
        CHECK(ex.prompt.size() <= 31);
        CHECK((ex.z_c == 0 || ex.z_c == 1));
        CHECK((ex.z_e >= 0 && ex.z_e <= 2));
        zc1 += static_cast<std::size_t>(ex.z_c);
        cells[{ex.z_c, ex.z_e}]++;
    }
    const double freq = static_cast<double>(zc1) / 400.0;
    CHECK(freq >= 0.45);
    CHECK(freq <= 0.55);
    CHECK(cells.size() == 6);  // all (z_c, z_e) combinations occupied

    // Determinism.
    GeneratedSuite again = gen_agreement_suite(400, 7);
    for (std::size_t i = 0; i < 400; ++i) {
        CHECK(again.examples[i].prompt == suite.examples[i].prompt);
        CHECK(again.examples[i].source_token == suite.examples[i].source_token);
    }

    CHECK_THROWS_AS(gen_agreement_suite(0, 1), InputError);
    CHECK_THROWS_AS(gen_agreement_suite(50000, 1), CapacityError);
    CHECK(gen_agreement_suite(5000, 1, /*with_replacement=*/true).examples.size() == 5000);
}

TEST_CASE("flipping the causal property regenerates the paired example") {
    GeneratedSuite suite = gen_agreement_suite(60, 3);
    for (const auto& ex : suite.examples) {
        LabeledExample twin = flip_causal(ex);
        CHECK(twin.z_c == 1 - ex.z_c);
        CHECK(twin.z_e == ex.z_e);
        CHECK(twin.source_token == ex.target_token);
        CHECK(twin.target_token == ex.source_token);
        LabeledExample back = flip_causal(twin);
        CHECK(back.prompt == ex.prompt);
        CHECK(back.source_token == ex.source_token);
    }
}

TEST_CASE("causalgym suites emit swapped pairs with balanced z_c") {
    for (const std::string& name : kCausalgymSuites) {
        GeneratedSuite suite = gen_causalgym_suite(name, 40, 11);
        REQUIRE(suite.examples.size() == 40);
        std::size_t zc1 = 0;
        for (const auto& ex : suite.examples) {
            CHECK(ex.source_token != ex.target_token);
            CHECK(ex.suite == name);
            zc1 += static_cast<std::size_t>(ex.z_c);
        }
        CHECK(zc1 == 20);  // exactly balanced by pair construction
    }

    std::vector<MinimalPair> pairs = gen_causalgym_pairs("agr_gender", 10, 5);
    for (const auto& p : pairs) {
        REQUIRE(p.x_src.size() == p.x_cf.size());
        std::size_t diffs = 0;
        for (std::size_t i = 0; i < p.x_src.size(); ++i)
            if (p.x_src[i] != p.x_cf[i]) ++diffs;
        CHECK(diffs == 1);  // prompts differ exactly in the property-bearing token
        CHECK(voc().word(p.y_src) == "he");
        CHECK(voc().word(p.y_cf) == "she");
    }

    CHECK_THROWS_AS(gen_causalgym_suite("bogus", 10, 1), InputError);
    CHECK_THROWS_AS(gen_causalgym_suite("cleft", 7, 1), InputError);
}

TEST_CASE("assign_ze follows the preposition-family heuristic") {
    CHECK(assign_ze(voc().encode("the key of the cabinets")) == 1);
    CHECK(assign_ze(voc().encode("the key in the city")) == 2);
    CHECK(assign_ze(voc().encode("john with the dog walked because")) == 3);
    CHECK(assign_ze(voc().encode("john by the yard walked because")) == 3);
    CHECK(assign_ze(voc().encode("the key near the park")) == 4);
    CHECK(assign_ze(voc().encode("the keys")) == 0);

    // Most recent preposition wins.
    CHECK(assign_ze(voc().encode("the key of the town near the park")) == 4);

    // A preposition 13 tokens back falls outside the 12-token window.
    std::vector<int> prompt = voc().encode("of");
    for (int i = 0; i < 12; ++i) prompt.push_back(voc().id("the"));
    REQUIRE(prompt.size() == 13);
    CHECK(assign_ze(prompt) == 0);
    // At distance 12 it is still visible.
    std::vector<int> prompt2 = voc().encode("of");
    for (int i = 0; i < 11; ++i) prompt2.push_back(voc().id("the"));
    CHECK(assign_ze(prompt2) == 1);
}

TEST_CASE("splits are disjoint, deterministic and sized by the fractions") {
    GeneratedSuite suite = gen_agreement_suite(100, 21);
    SplitSpec s = make_splits(suite.examples, 0.4, 0.3, 0.3, 77);
    CHECK(s.interventional.size() == 40);
    CHECK(s.validation_probe.size() <= 30);
    CHECK(s.validation_probe.size() > 0);
    CHECK(s.test.size() == 30);

    std::set<std::size_t> seen;
    for (auto idx : s.interventional) CHECK(seen.insert(idx).second);
    for (auto idx : s.validation_probe) CHECK(seen.insert(idx).second);
    for (auto idx : s.test) CHECK(seen.insert(idx).second);

    SplitSpec s2 = make_splits(suite.examples, 0.4, 0.3, 0.3, 77);
    CHECK(s2.interventional == s.interventional);
    CHECK(s2.validation_probe == s.validation_probe);
    CHECK(s2.test == s.test);

    CHECK_THROWS_AS(make_splits(suite.examples, 0.0, 0.5, 0.5, 1), ConfigError);
    CHECK_THROWS_AS(make_splits(suite.examples, 0.5, 0.4, 0.3, 1), ConfigError);
    std::vector<LabeledExample> three(suite.examples.begin(), suite.examples.begin() + 3);
    CHECK_THROWS_AS(make_splits(three, 0.4, 0.3, 0.3, 1), ConfigError);
}

TEST_CASE("independence subsample equalizes occupied cells") {
    auto mk = [](int zc, int ze) {
        LabeledExample ex;
        ex.z_c = zc;
        ex.z_e = ze;
        ex.source_token = 0;
        ex.target_token = 1;
        ex.suite = "agreement";
        return ex;
    };

    // Cell counts {(0,0):10,(0,1):4,(1,0):7,(1,1):9} -> 4 per cell, 16 total.
    std::vector<LabeledExample> examples;
    for (int i = 0; i < 10; ++i) examples.push_back(mk(0, 0));
    for (int i = 0; i < 4; ++i) examples.push_back(mk(0, 1));
    for (int i = 0; i < 7; ++i) examples.push_back(mk(1, 0));
    for (int i = 0; i < 9; ++i) examples.push_back(mk(1, 1));

    std::vector<std::size_t> kept = independence_subsample(examples, 5);
    CHECK(kept.size() == 16);
    std::map<std::pair<int, int>, int> counts;
    for (auto idx : kept) counts[{examples[idx].z_c, examples[idx].z_e}]++;
    for (const auto& [key, c] : counts) CHECK(c == 4);

    // Chi-square statistic over the kept product support is exactly zero.
    double chi = 0.0;
    const double total = 16.0;
    for (int zc = 0; zc < 2; ++zc)
        for (int ze = 0; ze < 2; ++ze) {
            double row = 8.0, col = 8.0;
            double expected = row * col / total;
            double observed = counts[{zc, ze}];
            chi += (observed - expected) * (observed - expected) / expected;
        }
    CHECK(chi == doctest::Approx(0.0).epsilon(1e-12));

    // Already balanced input comes back whole (up to ordering).
    std::vector<LabeledExample> balanced;
    for (int zc = 0; zc < 2; ++zc)
        for (int ze = 0; ze < 2; ++ze)
            for (int k = 0; k < 3; ++k) balanced.push_back(mk(zc, ze));
    std::vector<std::size_t> all = independence_subsample(balanced, 5);
    CHECK(all.size() == balanced.size());

    // Degenerate labels are rejected.
    std::vector<LabeledExample> degenerate{mk(0, 0), mk(0, 1)};
    CHECK_THROWS_AS(independence_subsample(degenerate, 5), DegenerateError);
}

TEST_CASE("dataset files round-trip through the TSV format") {
    GeneratedSuite suite = gen_agreement_suite(30, 9);
    const std::string path = "test_dataset.tsv";
    write_dataset(path, suite.examples);
    std::vector<LabeledExample> back = read_dataset(path);
    REQUIRE(back.size() == suite.examples.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].prompt == suite.examples[i].prompt);
        CHECK(back[i].source_token == suite.examples[i].source_token);
        CHECK(back[i].target_token == suite.examples[i].target_token);
        CHECK(back[i].z_c == suite.examples[i].z_c);
        CHECK(back[i].z_e == suite.examples[i].z_e);
        CHECK(back[i].suite == suite.examples[i].suite);
    }
    std::remove(path.c_str());

    const std::string cpath = "test_corpus.txt";
    write_corpus(cpath, suite.sentences);
    std::vector<std::vector<int>> sentences = read_corpus(cpath);
    CHECK(sentences == suite.sentences);
    std::remove(cpath.c_str());
}

TEST_CASE("filler sentences use the past-tense copulas") {
    auto fillers = gen_filler_sentences(50, 3);
    CHECK(fillers.size() == 50);
    bool saw_was = false, saw_were = false;
    for (const auto& s : fillers) {
        for (int id : s) {
            if (voc().word(id) == "was") saw_was = true;
            if (voc().word(id) == "were") saw_were = true;
        }
        CHECK(s.back() == Vocabulary::kEos);
    }
    CHECK(saw_was);
    CHECK(saw_were);
}
