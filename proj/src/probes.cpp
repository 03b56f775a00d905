#include "hdmi/probes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hdmi/autodiff.hpp"
#include "hdmi/checkpoint.hpp"

namespace hdmi {

namespace {

struct ProbeLeaves {
    Var w, b, w1, b1, w2, b2;

    std::vector<Var> all(ProbeKind kind) const {
        if (kind == ProbeKind::linear) return {w, b};
        return {w1, b1, w2, b2};
    }
};

ProbeLeaves lift(const ProbeModel& p) {
    ProbeLeaves l;
    if (p.kind == ProbeKind::linear) {
        l.w = make_var(p.w);
        l.b = make_var(p.b);
    } else {
        l.w1 = make_var(p.w1);
        l.b1 = make_var(p.b1);
        l.w2 = make_var(p.w2);
        l.b2 = make_var(p.b2);
    }
    return l;
}

// Logits for a batch [N x D] from lifted parameters.
Var logits_graph(const ProbeModel& p, const ProbeLeaves& l, const Var& x) {
    if (p.kind == ProbeKind::linear)
        return vadd_row(vmatmul(x, vtranspose(l.w)), l.b);
    Var h = vrelu(vadd_row(vmatmul(x, vtranspose(l.w1)), l.b1));
    return vadd_row(vmatmul(h, vtranspose(l.w2)), l.b2);
}

Tensor stack_states(const std::vector<Tensor>& states, const std::vector<std::size_t>& idx) {
    Tensor out({idx.size(), states[0].size()});
    for (std::size_t r = 0; r < idx.size(); ++r)
        for (std::size_t c = 0; c < states[0].size(); ++c) out.at(r, c) = states[idx[r]][c];
    return out;
}

struct AdamWState {
    std::vector<Tensor> m, v;
    long t = 0;
};

void adamw_step(AdamWState& st, std::vector<Tensor*> params, const std::vector<Tensor>& grads,
                double lr, double wd) {
    if (st.m.empty())
        for (Tensor* p : params) {
            st.m.push_back(Tensor::zeros(p->shape()));
            st.v.push_back(Tensor::zeros(p->shape()));
        }
    ++st.t;
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double bc1 = 1.0 - std::pow(b1, st.t);
    const double bc2 = 1.0 - std::pow(b2, st.t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        for (std::size_t j = 0; j < p.size(); ++j) {
            st.m[i][j] = b1 * st.m[i][j] + (1.0 - b1) * grads[i][j];
            st.v[i][j] = b2 * st.v[i][j] + (1.0 - b2) * grads[i][j] * grads[i][j];
            p[j] -= lr * ((st.m[i][j] / bc1) / (std::sqrt(st.v[i][j] / bc2) + eps) + wd * p[j]);
        }
    }
}

ProbeModel train_single(const std::vector<Tensor>& states, const std::vector<int>& labels,
                        ProbeKind kind, std::size_t hidden, const ProbeHparams& hp,
                        std::uint64_t seed, const std::string& trained_on) {
    const std::size_t n = states.size();
    const std::size_t dim = states[0].size();
    const std::size_t num_classes =
        static_cast<std::size_t>(*std::max_element(labels.begin(), labels.end())) + 1;

    Rng rng(derive_seed(seed, "probe-train"));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    const auto n_holdout =
        std::max<std::size_t>(1, static_cast<std::size_t>(hp.holdout_frac * static_cast<double>(n)));
    if (n_holdout >= n) throw InputError("train_probe: holdout fraction leaves no training data");
    std::vector<std::size_t> train_idx(order.begin(), order.end() - static_cast<long>(n_holdout));
    std::vector<std::size_t> hold_idx(order.end() - static_cast<long>(n_holdout), order.end());

    ProbeModel probe;
    probe.kind = kind;
    probe.input_dim = dim;
    probe.num_classes = num_classes;
    probe.hidden = kind == ProbeKind::mlp ? hidden : 0;
    probe.trained_on = trained_on;
    Rng init(derive_seed(seed, "probe-init"));
    if (kind == ProbeKind::linear) {
        probe.w = Tensor::randn({num_classes, dim}, init, 0.01);
        probe.b = Tensor::zeros({num_classes});
    } else {
        probe.w1 = Tensor::randn({hidden, dim}, init, 1.0 / std::sqrt(static_cast<double>(dim)));
        probe.b1 = Tensor::zeros({hidden});
        probe.w2 = Tensor::randn({num_classes, hidden}, init,
                                 1.0 / std::sqrt(static_cast<double>(hidden)));
        probe.b2 = Tensor::zeros({num_classes});
    }

    AdamWState opt;
    for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
        rng.shuffle(train_idx);
        for (std::size_t start = 0; start < train_idx.size(); start += hp.batch_size) {
            const std::size_t end = std::min(train_idx.size(), start + hp.batch_size);
            std::vector<std::size_t> batch(train_idx.begin() + static_cast<long>(start),
                                           train_idx.begin() + static_cast<long>(end));
            ProbeLeaves leaves = lift(probe);
            Var x = make_var(stack_states(states, batch));
            std::vector<int> y;
            for (std::size_t i : batch) y.push_back(labels[i]);
            Var logp = vlog_softmax_rows(logits_graph(probe, leaves, x));
            Var loss = vscale(vmean(vpick_positions(logp, y)), -1.0);
            run_backward(loss);

            std::vector<Var> lv = leaves.all(kind);
            std::vector<Tensor*> params;
            std::vector<Tensor> grads;
            auto add_param = [&](Tensor& t, const Var& v) {
                params.push_back(&t);
                grads.push_back(v->has_grad ? v->grad : Tensor::zeros(t.shape()));
            };
            if (kind == ProbeKind::linear) {
                add_param(probe.w, lv[0]);
                add_param(probe.b, lv[1]);
            } else {
                add_param(probe.w1, lv[0]);
                add_param(probe.b1, lv[1]);
                add_param(probe.w2, lv[2]);
                add_param(probe.b2, lv[3]);
            }
            adamw_step(opt, params, grads, hp.lr, hp.weight_decay);
        }
    }

    std::vector<Tensor> hold_states;
    std::vector<int> hold_labels;
    for (std::size_t i : hold_idx) {
        hold_states.push_back(states[i]);
        hold_labels.push_back(labels[i]);
    }
    probe.holdout_accuracy = probe_accuracy(probe, hold_states, hold_labels);
    return probe;
}

}  // namespace

ProbeModel train_probe(const std::vector<Tensor>& states, const std::vector<int>& labels,
                       ProbeKind kind, const ProbeHparams& hp, std::uint64_t seed,
                       const std::string& trained_on) {
    if (states.empty() || states.size() != labels.size())
        throw InputError("train_probe: states and labels must be nonempty and aligned");
    for (const auto& s : states)
        if (s.rank() != 1 || s.size() != states[0].size())
            throw ShapeError("train_probe: states must be rank-1 of equal length");
    int max_label = -1;
    for (int l : labels) {
        if (l < 0) throw InputError("train_probe: negative label");
        max_label = std::max(max_label, l);
    }
    std::vector<bool> seen(static_cast<std::size_t>(max_label) + 1, false);
    std::size_t distinct = 0;
    for (int l : labels)
        if (!seen[static_cast<std::size_t>(l)]) {
            seen[static_cast<std::size_t>(l)] = true;
            ++distinct;
        }
    if (distinct < 2) throw DegenerateError("train_probe: need at least two classes");

    if (kind == ProbeKind::linear) return train_single(states, labels, kind, 0, hp, seed, trained_on);

    if (hp.mlp_widths.empty()) throw ConfigError("train_probe: no MLP widths to choose from");
    ProbeModel best;
    bool first = true;
    for (std::size_t width : hp.mlp_widths) {
        ProbeModel cand = train_single(states, labels, kind, width, hp,
                                       derive_seed(seed, "width-" + std::to_string(width)),
                                       trained_on);
        if (first || cand.holdout_accuracy > best.holdout_accuracy) {
            best = std::move(cand);
            first = false;
        }
    }
    return best;
}

Tensor probe_logits(const ProbeModel& probe, const Tensor& state) {
    if (state.rank() != 1 || state.size() != probe.input_dim)
        throw ShapeError("probe: state length does not match input_dim");
    if (probe.kind == ProbeKind::linear) return matvec(probe.w, state) + probe.b;
    Tensor h = matvec(probe.w1, state) + probe.b1;
    for (std::size_t i = 0; i < h.size(); ++i) h[i] = h[i] > 0.0 ? h[i] : 0.0;
    return matvec(probe.w2, h) + probe.b2;
}

Tensor probe_predict(const ProbeModel& probe, const Tensor& state) {
    return softmax(probe_logits(probe, state), 1.0);
}

Tensor probe_gradient(const ProbeModel& probe, const Tensor& state, int target_class) {
    if (target_class < 0 || static_cast<std::size_t>(target_class) >= probe.num_classes)
        throw InputError("probe_gradient: target class out of range");
    if (state.rank() != 1 || state.size() != probe.input_dim)
        throw ShapeError("probe_gradient: state length does not match input_dim");

    ProbeLeaves leaves = lift(probe);
    Var leaf = make_var(state);
    Var logits = logits_graph(probe, leaves, vas_row(leaf));
    Var logp = vpick(vrow(vlog_softmax_rows(logits), 0), static_cast<std::size_t>(target_class));
    return backward(logp, leaf);
}

double probe_accuracy(const ProbeModel& probe, const std::vector<Tensor>& states,
                      const std::vector<int>& labels) {
    if (states.empty()) throw InputError("probe_accuracy: empty evaluation set");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < states.size(); ++i) {
        if (static_cast<int>(argmax_lowest_id(probe_logits(probe, states[i]))) == labels[i])
            ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(states.size());
}

void save_probe(const ProbeModel& probe, const std::string& path) {
    std::vector<std::pair<std::string, std::string>> config{
        {"kind", probe.kind == ProbeKind::linear ? "linear" : "mlp"},
        {"input_dim", std::to_string(probe.input_dim)},
        {"num_classes", std::to_string(probe.num_classes)},
        {"hidden", std::to_string(probe.hidden)},
        {"trained_on", probe.trained_on},
        {"holdout_accuracy", std::to_string(probe.holdout_accuracy)},
    };
    std::vector<std::pair<std::string, const Tensor*>> tensors;
    if (probe.kind == ProbeKind::linear) {
        tensors = {{"w", &probe.w}, {"b", &probe.b}};
    } else {
        tensors = {{"w1", &probe.w1}, {"b1", &probe.b1}, {"w2", &probe.w2}, {"b2", &probe.b2}};
    }
    write_checkpoint(path, config, tensors);
}

ProbeModel load_probe(const std::string& path) {
    CheckpointData data = read_checkpoint(path);
    ProbeModel probe;
    probe.kind = data.config_value("kind") == "linear" ? ProbeKind::linear : ProbeKind::mlp;
    probe.input_dim = std::stoul(data.config_value("input_dim"));
    probe.num_classes = std::stoul(data.config_value("num_classes"));
    probe.hidden = std::stoul(data.config_value("hidden"));
    probe.trained_on = data.config_value("trained_on");
    probe.holdout_accuracy = std::stod(data.config_value("holdout_accuracy"));
    if (probe.kind == ProbeKind::linear) {
        if (data.tensors.size() != 2) throw InputError("probe checkpoint: tensor count mismatch");
        probe.w = data.tensors[0].second;
        probe.b = data.tensors[1].second;
    } else {
        if (data.tensors.size() != 4) throw InputError("probe checkpoint: tensor count mismatch");
        probe.w1 = data.tensors[0].second;
        probe.b1 = data.tensors[1].second;
        probe.w2 = data.tensors[2].second;
        probe.b2 = data.tensors[3].second;
    }
    return probe;
}

}  // namespace hdmi
