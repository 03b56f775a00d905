#include "hdmi/tasks.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <numeric>
#include <sstream>

namespace hdmi {

namespace {

// Noun pairs: the first six take a copula, the rest take a noun-specific
// action verb so the trained model's preferred continuation is unambiguous.
const std::vector<std::pair<std::string, std::string>> kSubjectNouns = {
    {"key", "keys"},   {"lock", "locks"},   {"door", "doors"},
    {"book", "books"}, {"car", "cars"},     {"cake", "cakes"},
    {"dog", "dogs"},   {"cat", "cats"},     {"bird", "birds"},
    {"boy", "boys"},   {"girl", "girls"},   {"teacher", "teachers"},
};
constexpr std::size_t kNumCopulaSubjects = 6;

const std::vector<std::pair<std::string, std::string>> kActionVerbs = {
    {"barks", "bark"}, {"sleeps", "sleep"}, {"sings", "sing"},
    {"runs", "run"},   {"walks", "walk"},   {"smiles", "smile"},
};

const std::vector<std::pair<std::string, std::string>> kDistractorNouns = {
    {"cabinet", "cabinets"}, {"table", "tables"},   {"garden", "gardens"},
    {"house", "houses"},     {"street", "streets"}, {"box", "boxes"},
};

const std::vector<std::string> kAgreementPreps = {"to", "near", "behind", "beside"};
const std::vector<std::string> kLeads = {"", "today", "now"};
const std::vector<std::string> kAdjectives = {"old", "new", "red", "blue", "small", "big"};
const std::vector<std::string> kAdverbs = {"loudly", "quietly"};

const std::vector<std::string> kMaleNames = {"john", "tom", "mark", "james", "peter", "alex"};
const std::vector<std::string> kFemaleNames = {"jane", "mary", "anna", "lucy", "emma", "sara"};
const std::vector<std::string> kPastVerbs = {"walked", "smiled", "left", "slept"};

// Optional PP chunk covering each preposition family of assign_ze.
const std::vector<std::string> kPpOptions = {
    "", "of the town", "in the city", "with the dog", "near the park"};

const std::vector<std::string> kNpiVerbs = {"wants", "needs"};

}  // namespace

const std::vector<std::string> kCausalgymSuites = {
    "agr_gender", "agr_sv_num_pp", "npi_any", "cleft", "filler_gap"};

Vocabulary::Vocabulary() {
    auto add = [&](const std::string& w) {
        if (!ids_.count(w)) {
            ids_[w] = static_cast<int>(words_.size());
            words_.push_back(w);
        }
    };
    add("<pad>");
    add("<bos>");
    add("<eos>");
    add("<mask>");
    for (const auto& [sg, pl] : kSubjectNouns) {
        add(sg);
        add(pl);
    }
    for (const auto& [sg, pl] : kDistractorNouns) {
        add(sg);
        add(pl);
    }
    for (const auto& p : kAgreementPreps) add(p);
    for (const auto& p : {"of", "in", "with", "by"}) add(p);
    for (const auto& c : {"is", "are", "was", "were"}) add(c);
    for (const auto& [sg, pl] : kActionVerbs) {
        add(sg);
        add(pl);
    }
    for (const auto& a : kAdjectives) add(a);
    for (const auto& a : kAdverbs) add(a);
    add("today");
    add("now");
    add("the");
    add(".");
    for (const auto& n : kMaleNames) add(n);
    for (const auto& n : kFemaleNames) add(n);
    for (const auto& w : kPastVerbs) add(w);
    for (const auto& w : {"because", "he", "she"}) add(w);
    for (const auto& w : {"town", "city", "park", "yard"}) add(w);
    for (const auto& w : {"no", "any", "some", "help", "food"}) add(w);
    for (const auto& w : kNpiVerbs) add(w);
    for (const auto& w : {"what", "did", "saw", "play"}) add(w);
    for (const auto& w : {"they", "know", "who", "that", "chased", "wonder", "if"}) add(w);
}

const Vocabulary& Vocabulary::instance() {
    static const Vocabulary vocab;
    return vocab;
}

int Vocabulary::id(const std::string& word) const {
    auto it = ids_.find(word);
    if (it == ids_.end()) throw LookupError("word not in vocabulary: " + word);
    return it->second;
}

const std::string& Vocabulary::word(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= words_.size())
        throw LookupError("token id out of range: " + std::to_string(id));
    return words_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocabulary::encode(const std::string& text) const {
    std::vector<int> out;
    std::istringstream is(text);
    std::string w;
    while (is >> w) out.push_back(id(w));
    return out;
}

std::string Vocabulary::decode(const std::vector<int>& ids) const {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i) out += ' ';
        out += word(ids[i]);
    }
    return out;
}

void Vocabulary::write(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw InputError("cannot write vocabulary: " + path);
    for (const auto& w : words_) os << w << '\n';
}

namespace {

const Vocabulary& voc() { return Vocabulary::instance(); }

void append_words(std::vector<int>& out, const std::string& text) {
    for (int id : voc().encode(text)) out.push_back(id);
}

}  // namespace

RealizedExample realize_agreement(const AgreementBase& base) {
    if (base.subject < 0 || static_cast<std::size_t>(base.subject) >= kSubjectNouns.size())
        throw InputError("agreement subject index out of range");
    const bool copula = static_cast<std::size_t>(base.subject) < kNumCopulaSubjects;

    std::vector<int> prompt;
    if (base.lead > 0) prompt.push_back(voc().id(kLeads[static_cast<std::size_t>(base.lead)]));
    prompt.push_back(voc().id("the"));
    const auto& subj = kSubjectNouns[static_cast<std::size_t>(base.subject)];
    prompt.push_back(voc().id(base.subject_plural ? subj.second : subj.first));

    int z_e = 0;
    if (base.prep >= 0) {
        prompt.push_back(voc().id(kAgreementPreps[static_cast<std::size_t>(base.prep)]));
        prompt.push_back(voc().id("the"));
        const auto& dn = kDistractorNouns[static_cast<std::size_t>(base.distractor)];
        prompt.push_back(voc().id(base.distractor_plural ? dn.second : dn.first));
        z_e = base.distractor_plural ? 2 : 1;
    }

    const auto& pair = copula
        ? std::pair<std::string, std::string>{"is", "are"}
        : kActionVerbs[static_cast<std::size_t>(base.subject) - kNumCopulaSubjects];
    const int v_sg = voc().id(pair.first);
    const int v_pl = voc().id(pair.second);

    LabeledExample ex;
    ex.prompt = prompt;
    ex.z_c = base.subject_plural ? 1 : 0;
    ex.z_e = z_e;
    ex.source_token = base.subject_plural ? v_pl : v_sg;
    ex.target_token = base.subject_plural ? v_sg : v_pl;
    ex.suite = "agreement";

    const auto& tails = copula ? kAdjectives : kAdverbs;
    std::vector<int> sentence = prompt;
    sentence.push_back(ex.source_token);
    sentence.push_back(voc().id(tails[static_cast<std::size_t>(base.tail) % tails.size()]));
    sentence.push_back(voc().id("."));
    sentence.push_back(Vocabulary::kEos);

    return {std::move(ex), std::move(sentence)};
}

namespace {

// All template slots for one nuisance category: 0 = no PP, 1 = singular
// distractor, 2 = plural distractor.
std::vector<AgreementBase> enumerate_agreement_bases(int z_e_category) {
    std::vector<AgreementBase> bases;
    for (int subject = 0; subject < static_cast<int>(kSubjectNouns.size()); ++subject) {
        const bool copula = static_cast<std::size_t>(subject) < kNumCopulaSubjects;
        const int n_tails = static_cast<int>(copula ? kAdjectives.size() : kAdverbs.size());
        for (int lead = 0; lead < static_cast<int>(kLeads.size()); ++lead) {
            for (int tail = 0; tail < n_tails; ++tail) {
                if (z_e_category == 0) {
                    AgreementBase b;
                    b.subject = subject;
                    b.lead = lead;
                    b.tail = tail;
                    bases.push_back(b);
                } else {
                    for (int prep = 0; prep < static_cast<int>(kAgreementPreps.size()); ++prep)
                        for (int distractor = 0;
                             distractor < static_cast<int>(kDistractorNouns.size()); ++distractor) {
                            AgreementBase b;
                            b.subject = subject;
                            b.lead = lead;
                            b.tail = tail;
                            b.prep = prep;
                            b.distractor = distractor;
                            b.distractor_plural = z_e_category == 2;
                            bases.push_back(b);
                        }
                }
            }
        }
    }
    return bases;
}

}  // namespace

GeneratedSuite gen_agreement_suite(std::size_t n, std::uint64_t seed, bool with_replacement) {
    if (n < 1) throw InputError("gen_agreement_suite: n must be positive");
    Rng rng(derive_seed(seed, "agreement"));

    GeneratedSuite out;
    bool odd_z_c = false;
    for (int cat = 0; cat < 3; ++cat) {
        // Distribute n across the three nuisance categories as evenly as possible.
        const std::size_t want = n / 3 + (static_cast<std::size_t>(cat) < n % 3 ? 1 : 0);
        if (want == 0) continue;
        std::vector<AgreementBase> bases = enumerate_agreement_bases(cat);
        rng.shuffle(bases);
        const std::size_t pairs = (want + 1) / 2;
        if (!with_replacement && pairs > bases.size())
            throw CapacityError("gen_agreement_suite: n exceeds template capacity (use replacement)");

        std::size_t emitted = 0;
        for (std::size_t i = 0; emitted < want; ++i) {
            AgreementBase b = with_replacement ? bases[rng.index(bases.size())] : bases[i];
            for (int plural = 0; plural < 2 && emitted < want; ++plural) {
                b.subject_plural = (plural == 1) != odd_z_c;
                RealizedExample r = realize_agreement(b);
                out.examples.push_back(std::move(r.example));
                out.sentences.push_back(std::move(r.sentence));
                ++emitted;
            }
        }
        if (want % 2 == 1) odd_z_c = !odd_z_c;  // alternate which z_c the odd item gets
    }

    // One shared shuffle keeps examples and sentences aligned.
    std::vector<std::size_t> order(out.examples.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    GeneratedSuite shuffled;
    for (std::size_t i : order) {
        shuffled.examples.push_back(std::move(out.examples[i]));
        shuffled.sentences.push_back(std::move(out.sentences[i]));
    }
    return shuffled;
}

std::vector<std::vector<int>> gen_filler_sentences(std::size_t n, std::uint64_t seed) {
    Rng rng(derive_seed(seed, "fillers"));
    std::vector<std::vector<int>> out;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& subj = kSubjectNouns[rng.index(kNumCopulaSubjects)];
        const bool plural = rng.uniform() < 0.5;
        std::vector<int> s;
        s.push_back(voc().id("the"));
        s.push_back(voc().id(plural ? subj.second : subj.first));
        if (rng.uniform() < 0.6) {
            s.push_back(voc().id(kAgreementPreps[rng.index(kAgreementPreps.size())]));
            s.push_back(voc().id("the"));
            const auto& dn = kDistractorNouns[rng.index(kDistractorNouns.size())];
            s.push_back(voc().id(rng.uniform() < 0.5 ? dn.second : dn.first));
        }
        s.push_back(voc().id(plural ? "were" : "was"));
        s.push_back(voc().id(kAdjectives[rng.index(kAdjectives.size())]));
        s.push_back(voc().id("."));
        s.push_back(Vocabulary::kEos);
        out.push_back(std::move(s));
    }
    return out;
}

namespace {

struct CgTemplates {
    // Returns (x_src, x_cf, y_src, y_cf) for one base configuration.
    MinimalPair make(const std::string& suite, std::size_t noun, std::size_t pp,
                     std::size_t variant) const {
        MinimalPair p;
        const std::string& pp_text = kPpOptions[pp];
        if (suite == "agr_gender") {
            auto build = [&](const std::string& name) {
                std::vector<int> t{voc().id(name)};
                append_words(t, pp_text);
                t.push_back(voc().id(kPastVerbs[variant % kPastVerbs.size()]));
                t.push_back(voc().id("because"));
                return t;
            };
            p.x_src = build(kMaleNames[noun % kMaleNames.size()]);
            p.x_cf = build(kFemaleNames[noun % kFemaleNames.size()]);
            p.y_src = voc().id("he");
            p.y_cf = voc().id("she");
        } else if (suite == "agr_sv_num_pp") {
            const auto& subj = kSubjectNouns[noun % kSubjectNouns.size()];
            auto build = [&](const std::string& form) {
                std::vector<int> t;
                if (variant % kLeads.size() > 0)
                    t.push_back(voc().id(kLeads[variant % kLeads.size()]));
                t.push_back(voc().id("the"));
                t.push_back(voc().id(form));
                append_words(t, pp_text);
                return t;
            };
            p.x_src = build(subj.first);
            p.x_cf = build(subj.second);
            p.y_src = voc().id("is");
            p.y_cf = voc().id("are");
        } else if (suite == "npi_any") {
            const auto& subj = kSubjectNouns[noun % kSubjectNouns.size()];
            auto build = [&](const std::string& det) {
                std::vector<int> t{voc().id(det), voc().id(subj.first)};
                append_words(t, pp_text);
                t.push_back(voc().id(kNpiVerbs[variant % kNpiVerbs.size()]));
                return t;
            };
            p.x_src = build("the");
            p.x_cf = build("no");
            p.y_src = voc().id("some");
            p.y_cf = voc().id("any");
        } else if (suite == "cleft") {
            const auto& subj = kSubjectNouns[noun % kSubjectNouns.size()];
            const std::string form = variant % 2 == 0 ? subj.first : subj.second;
            auto build = [&](const std::string& verb) {
                std::vector<int> t{voc().id("what"), voc().id("the"), voc().id(form)};
                append_words(t, pp_text);
                t.push_back(voc().id(verb));
                t.push_back(voc().id("was"));
                return t;
            };
            p.x_src = build("did");
            p.x_cf = build("saw");
            p.y_src = voc().id("play");
            p.y_cf = voc().id("the");
        } else if (suite == "filler_gap") {
            const auto& subj = kSubjectNouns[noun % kSubjectNouns.size()];
            const std::string form = variant % 2 == 0 ? subj.first : subj.second;
            auto build = [&](const std::string& comp) {
                std::vector<int> t{voc().id("they"), voc().id("know"), voc().id(comp),
                                   voc().id("the"), voc().id(form)};
                append_words(t, pp_text);
                return t;
            };
            p.x_src = build("who");
            p.x_cf = build("that");
            p.y_src = voc().id("chased");
            p.y_cf = voc().id("slept");
        } else {
            throw InputError("unknown suite: " + suite);
        }
        return p;
    }

    std::size_t variants(const std::string& suite) const {
        if (suite == "agr_gender") return kPastVerbs.size();
        if (suite == "agr_sv_num_pp") return kLeads.size();
        if (suite == "npi_any") return kNpiVerbs.size();
        return 2;  // singular/plural subject form
    }

    std::size_t nouns(const std::string& suite) const {
        return suite == "agr_gender" ? kMaleNames.size() : kSubjectNouns.size();
    }
};

}  // namespace

std::vector<MinimalPair> gen_causalgym_pairs(const std::string& name, std::size_t n_pairs,
                                             std::uint64_t seed) {
    if (std::find(kCausalgymSuites.begin(), kCausalgymSuites.end(), name) ==
        kCausalgymSuites.end())
        throw InputError("unknown suite: " + name);
    CgTemplates tpl;
    std::vector<std::array<std::size_t, 3>> bases;
    for (std::size_t noun = 0; noun < tpl.nouns(name); ++noun)
        for (std::size_t pp = 0; pp < kPpOptions.size(); ++pp)
            for (std::size_t variant = 0; variant < tpl.variants(name); ++variant)
                bases.push_back({noun, pp, variant});

    Rng rng(derive_seed(seed, "causalgym-" + name));
    rng.shuffle(bases);
    if (n_pairs > bases.size())
        throw CapacityError("gen_causalgym_pairs: n exceeds template capacity for " + name);

    std::vector<MinimalPair> pairs;
    for (std::size_t i = 0; i < n_pairs; ++i)
        pairs.push_back(tpl.make(name, bases[i][0], bases[i][1], bases[i][2]));
    return pairs;
}

GeneratedSuite gen_causalgym_suite(const std::string& name, std::size_t n, std::uint64_t seed) {
    if (n < 2 || n % 2 != 0) throw InputError("gen_causalgym_suite: n must be even and >= 2");
    std::vector<MinimalPair> pairs = gen_causalgym_pairs(name, n / 2, seed);

    GeneratedSuite out;
    for (const MinimalPair& p : pairs) {
        LabeledExample src;
        src.prompt = p.x_src;
        src.source_token = p.y_src;
        src.target_token = p.y_cf;
        src.z_c = 0;
        src.z_e = assign_ze(p.x_src);
        src.suite = name;

        LabeledExample cf;
        cf.prompt = p.x_cf;
        cf.source_token = p.y_cf;
        cf.target_token = p.y_src;
        cf.z_c = 1;
        cf.z_e = assign_ze(p.x_cf);
        cf.suite = name;

        for (LabeledExample* ex : {&src, &cf}) {
            std::vector<int> sentence = ex->prompt;
            sentence.push_back(ex->source_token);
            sentence.push_back(voc().id("."));
            sentence.push_back(Vocabulary::kEos);
            out.sentences.push_back(std::move(sentence));
        }
        out.examples.push_back(std::move(src));
        out.examples.push_back(std::move(cf));
    }

    Rng rng(derive_seed(seed, "causalgym-shuffle-" + name));
    std::vector<std::size_t> order(out.examples.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    GeneratedSuite shuffled;
    for (std::size_t i : order) {
        shuffled.examples.push_back(std::move(out.examples[i]));
        shuffled.sentences.push_back(std::move(out.sentences[i]));
    }
    return shuffled;
}

int assign_ze(const std::vector<int>& prompt) {
    const std::size_t window = 12;
    const std::size_t start = prompt.size() > window ? prompt.size() - window : 0;
    for (std::size_t i = prompt.size(); i > start; --i) {
        const std::string& w = voc().word(prompt[i - 1]);
        if (w == "of") return 1;
        if (w == "in") return 2;
        if (w == "with" || w == "by") return 3;
        for (const auto& p : kAgreementPreps)
            if (w == p) return 4;
    }
    return 0;
}

namespace {

// Token-level swap maps used to regenerate a flipped twin.
const std::pair<std::string, std::string>* find_pair(
    const std::vector<std::pair<std::string, std::string>>& pairs, const std::string& w,
    bool& was_second) {
    for (const auto& p : pairs) {
        if (p.first == w) {
            was_second = false;
            return &p;
        }
        if (p.second == w) {
            was_second = true;
            return &p;
        }
    }
    return nullptr;
}

bool swap_first_match(std::vector<int>& prompt,
                      const std::vector<std::pair<std::string, std::string>>& pairs) {
    for (int& id : prompt) {
        bool was_second = false;
        if (const auto* p = find_pair(pairs, voc().word(id), was_second)) {
            id = voc().id(was_second ? p->first : p->second);
            return true;
        }
    }
    return false;
}

std::vector<std::pair<std::string, std::string>> name_pairs() {
    std::vector<std::pair<std::string, std::string>> out;
    for (std::size_t i = 0; i < kMaleNames.size(); ++i)
        out.emplace_back(kMaleNames[i], kFemaleNames[i]);
    return out;
}

}  // namespace

LabeledExample flip_causal(const LabeledExample& ex) {
    LabeledExample out = ex;
    bool changed = false;
    if (ex.suite == "agreement" || ex.suite == "agr_sv_num_pp") {
        changed = swap_first_match(out.prompt, kSubjectNouns);
    } else if (ex.suite == "agr_gender") {
        changed = swap_first_match(out.prompt, name_pairs());
    } else if (ex.suite == "npi_any") {
        changed = swap_first_match(out.prompt, {{"the", "no"}});
    } else if (ex.suite == "cleft") {
        changed = swap_first_match(out.prompt, {{"did", "saw"}});
    } else if (ex.suite == "filler_gap") {
        changed = swap_first_match(out.prompt, {{"who", "that"}});
    } else {
        throw InputError("flip_causal: unknown suite " + ex.suite);
    }
    if (!changed) throw InputError("flip_causal: no causal-property token found in prompt");
    std::swap(out.source_token, out.target_token);
    out.z_c = 1 - out.z_c;
    out.z_e = ex.suite == "agreement" ? out.z_e : assign_ze(out.prompt);
    return out;
}

SplitSpec make_splits(const std::vector<LabeledExample>& examples, double frac_interventional,
                      double frac_validation, double frac_test, std::uint64_t seed) {
    if (frac_interventional <= 0 || frac_validation <= 0 || frac_test <= 0)
        throw ConfigError("make_splits: fractions must be positive");
    if (frac_interventional + frac_validation + frac_test > 1.0 + 1e-9)
        throw ConfigError("make_splits: fractions must sum to at most 1");

    const std::size_t n = examples.size();
    const auto n_int = static_cast<std::size_t>(frac_interventional * static_cast<double>(n));
    const auto n_val = static_cast<std::size_t>(frac_validation * static_cast<double>(n));
    const auto n_test = static_cast<std::size_t>(frac_test * static_cast<double>(n));
    if (n_int == 0 || n_val == 0 || n_test == 0)
        throw ConfigError("make_splits: a split would be empty");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, "splits"));
    rng.shuffle(order);

    SplitSpec spec;
    spec.seed = seed;
    spec.interventional.assign(order.begin(), order.begin() + static_cast<long>(n_int));
    std::vector<std::size_t> val_raw(order.begin() + static_cast<long>(n_int),
                                     order.begin() + static_cast<long>(n_int + n_val));
    spec.test.assign(order.begin() + static_cast<long>(n_int + n_val),
                     order.begin() + static_cast<long>(n_int + n_val + n_test));

    // The validation-probe split is subsampled for label independence.
    std::vector<LabeledExample> val_examples;
    for (std::size_t i : val_raw) val_examples.push_back(examples[i]);
    for (std::size_t local : independence_subsample(val_examples, derive_seed(seed, "indep")))
        spec.validation_probe.push_back(val_raw[local]);
    std::sort(spec.validation_probe.begin(), spec.validation_probe.end());
    return spec;
}

std::vector<std::size_t> independence_subsample(const std::vector<LabeledExample>& examples,
                                                std::uint64_t seed) {
    std::vector<std::vector<std::size_t>> cells;
    std::vector<std::pair<int, int>> keys;
    std::vector<int> zc_seen, ze_seen;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const auto key = std::make_pair(examples[i].z_c, examples[i].z_e);
        auto it = std::find(keys.begin(), keys.end(), key);
        if (it == keys.end()) {
            keys.push_back(key);
            cells.emplace_back();
            it = keys.end() - 1;
        }
        cells[static_cast<std::size_t>(it - keys.begin())].push_back(i);
        if (std::find(zc_seen.begin(), zc_seen.end(), key.first) == zc_seen.end())
            zc_seen.push_back(key.first);
        if (std::find(ze_seen.begin(), ze_seen.end(), key.second) == ze_seen.end())
            ze_seen.push_back(key.second);
    }
    if (zc_seen.size() < 2 || ze_seen.size() < 2)
        throw DegenerateError("independence_subsample: a label takes a single value");

    std::size_t min_count = examples.size();
    for (const auto& cell : cells) min_count = std::min(min_count, cell.size());

    Rng rng(derive_seed(seed, "equal-cells"));
    std::vector<std::size_t> kept;
    // Cells processed in first-seen order; the per-cell shuffle is seeded.
    for (auto& cell : cells) {
        rng.shuffle(cell);
        kept.insert(kept.end(), cell.begin(), cell.begin() + static_cast<long>(min_count));
    }
    std::sort(kept.begin(), kept.end());
    return kept;
}

void write_dataset(const std::string& path, const std::vector<LabeledExample>& examples) {
    std::ofstream os(path);
    if (!os) throw InputError("cannot write dataset: " + path);
    for (const auto& ex : examples) {
        os << voc().decode(ex.prompt) << '\t' << voc().word(ex.source_token) << '\t'
           << voc().word(ex.target_token) << '\t' << ex.z_c << '\t' << ex.z_e << '\t' << ex.suite
           << '\n';
    }
}

std::vector<LabeledExample> read_dataset(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw InputError("cannot read dataset: " + path);
    std::vector<LabeledExample> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string prompt, va, vb, zc, ze, suite;
        if (!std::getline(ls, prompt, '\t') || !std::getline(ls, va, '\t') ||
            !std::getline(ls, vb, '\t') || !std::getline(ls, zc, '\t') ||
            !std::getline(ls, ze, '\t') || !std::getline(ls, suite))
            throw InputError("malformed dataset line: " + line);
        LabeledExample ex;
        ex.prompt = voc().encode(prompt);
        ex.source_token = voc().id(va);
        ex.target_token = voc().id(vb);
        ex.z_c = std::stoi(zc);
        ex.z_e = std::stoi(ze);
        ex.suite = suite;
        out.push_back(std::move(ex));
    }
    return out;
}

void write_corpus(const std::string& path, const std::vector<std::vector<int>>& sentences) {
    std::ofstream os(path);
    if (!os) throw InputError("cannot write corpus: " + path);
    for (const auto& s : sentences) os << voc().decode(s) << '\n';
}

std::vector<std::vector<int>> read_corpus(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw InputError("cannot read corpus: " + path);
    std::vector<std::vector<int>> out;
    std::string line;
    while (std::getline(is, line))
        if (!line.empty()) out.push_back(voc().encode(line));
    return out;
}

}  // namespace hdmi
