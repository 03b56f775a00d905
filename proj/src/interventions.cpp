#include "hdmi/interventions.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "hdmi/autodiff.hpp"

namespace hdmi {

void MarginObjective::validate(std::size_t vocab_size) const {
    if (targets.empty() || sources.empty())
        throw InputError("margin objective: target and source sets must be nonempty");
    std::set<int> t(targets.begin(), targets.end());
    for (int s : sources)
        if (t.count(s)) throw InputError("margin objective: target and source sets overlap");
    for (int id : targets)
        if (id < 0 || static_cast<std::size_t>(id) >= vocab_size)
            throw InputError("margin objective: target id out of range");
    for (int id : sources)
        if (id < 0 || static_cast<std::size_t>(id) >= vocab_size)
            throw InputError("margin objective: source id out of range");
}

void AscentConfig::validate(const ModelConfig& cfg) const {
    if (steps < 1) throw ConfigError("ascent: steps must be at least 1");
    if (step_size < 0.0) throw ConfigError("ascent: step size must be nonnegative");
    if (layer < 1 || layer > cfg.layers) throw ConfigError("ascent: layer out of range");
}

void BallConstraint::validate() const {
    if (!(radius > 0.0)) throw ConfigError("ball constraint: radius must be positive");
}

double margin_loss(const Tensor& logits, const MarginObjective& obj) {
    if (logits.rank() != 1) throw ShapeError("margin_loss: logits must be rank 1");
    obj.validate(logits.size());
    double m = 0.0;
    for (int t : obj.targets) m += logits[static_cast<std::size_t>(t)];
    for (int s : obj.sources) m -= logits[static_cast<std::size_t>(s)];
    return m;
}

namespace {

Tensor indicator_difference(std::size_t vocab_size, const std::vector<int>& targets,
                            const std::vector<int>& sources) {
    Tensor u({vocab_size});
    for (int t : targets) u[static_cast<std::size_t>(t)] += 1.0;
    for (int s : sources) u[static_cast<std::size_t>(s)] -= 1.0;
    return u;
}

Var margin_graph(const Var& logits, const std::vector<int>& targets,
                 const std::vector<int>& sources) {
    Var m;
    for (int t : targets) {
        Var term = vpick(logits, static_cast<std::size_t>(t));
        m = m ? vadd(m, term) : term;
    }
    for (int s : sources) m = vsub(m, vpick(logits, static_cast<std::size_t>(s)));
    return m;
}

AscentResult ascend_impl(const TinyTransformer& model, const std::vector<int>& tokens,
                         const MarginObjective& obj, const AscentConfig& cfg,
                         bool include_sources) {
    obj.validate(model.config().vocab_size);
    cfg.validate(model.config());
    const std::vector<int> empty_sources;
    const std::vector<int>& sources = include_sources ? obj.sources : empty_sources;

    CleanTrace trace = run_clean_forward(model, tokens);
    GraphParams params = lift_parameters(model);

    AscentResult result;
    result.margin_before = margin_loss(trace.logits, obj);
    Tensor h = cfg.layer == model.config().layers ? trace.final_hidden_last
                                                  : trace.block_last[cfg.layer - 1];

    const bool affine_head = cfg.layer == model.config().layers;
    Tensor head_grad;
    if (affine_head)
        head_grad = matvec(transpose(model.unembedding()),
                           indicator_difference(model.config().vocab_size, obj.targets, sources));

    for (std::size_t k = 0; k < cfg.steps; ++k) {
        Tensor grad;
        if (affine_head) {
            grad = head_grad;
        } else {
            Var leaf = make_var(h, "ascent_state");
            Var logits = build_patched_logits_graph(params, model.config(), trace, cfg.layer, leaf);
            grad = backward(margin_graph(logits, obj.targets, sources), leaf);
        }
        h += grad * cfg.step_size;
        if (affine_head) {
            Tensor logits = matvec(model.unembedding(), h) + model.unembedding_bias();
            result.margin_trace.push_back(margin_loss(logits, obj));
        } else {
            Var leaf = make_var(h);
            Var logits = build_patched_logits_graph(params, model.config(), trace, cfg.layer, leaf);
            result.margin_trace.push_back(margin_loss(logits->value, obj));
        }
    }

    Var leaf = make_var(h);
    result.logits = build_patched_logits_graph(params, model.config(), trace, cfg.layer, leaf)->value;
    result.logits.assert_finite("intervened logits");
    result.state = std::move(h);
    result.margin_after = margin_loss(result.logits, obj);
    return result;
}

}  // namespace

Tensor closed_form_final_gradient(const TinyTransformer& model, const MarginObjective& obj) {
    obj.validate(model.config().vocab_size);
    return matvec(transpose(model.unembedding()),
                  indicator_difference(model.config().vocab_size, obj.targets, obj.sources));
}

AscentResult hdmi_ascend(const TinyTransformer& model, const std::vector<int>& tokens,
                         const MarginObjective& obj, const AscentConfig& cfg) {
    return ascend_impl(model, tokens, obj, cfg, /*include_sources=*/true);
}

AscentResult target_only_ascend(const TinyTransformer& model, const std::vector<int>& tokens,
                                const MarginObjective& obj, const AscentConfig& cfg) {
    return ascend_impl(model, tokens, obj, cfg, /*include_sources=*/false);
}

namespace {
constexpr double kZeroGradientNorm = 1e-12;

double sign_positive(double x) { return x >= 0.0 ? 1.0 : -1.0; }
}  // namespace

Tensor fgsm(const Tensor& state, const ProbeModel& probe, int counterfactual_class,
            const BallConstraint& ball) {
    ball.validate();
    Tensor g = probe_gradient(probe, state, counterfactual_class);
    Tensor out = state;
    if (ball.norm == BallNorm::linf) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += ball.radius * sign_positive(g[i]);
    } else {
        const double n = g.norm2();
        if (n < kZeroGradientNorm) return out;  // documented: zero gradient leaves state as-is
        out += g * (ball.radius / n);
    }
    return out;
}

Tensor pgd(const Tensor& state, const ProbeModel& probe, int counterfactual_class,
           const BallConstraint& ball, std::size_t steps, double step_size) {
    ball.validate();
    if (steps < 1) throw ConfigError("pgd: steps must be at least 1");
    if (!(step_size > 0.0)) throw ConfigError("pgd: step size must be positive");

    Tensor x = state;
    for (std::size_t k = 0; k < steps; ++k) {
        Tensor g = probe_gradient(probe, x, counterfactual_class);
        if (ball.norm == BallNorm::linf) {
            for (std::size_t i = 0; i < x.size(); ++i) {
                x[i] += step_size * sign_positive(g[i]);
                x[i] = std::min(state[i] + ball.radius, std::max(state[i] - ball.radius, x[i]));
            }
        } else {
            const double n = g.norm2();
            if (n < kZeroGradientNorm) break;
            x += g * (step_size / n);
            Tensor d = x - state;
            const double dn = d.norm2();
            if (dn > ball.radius) x = state + d * (ball.radius / dn);
        }
    }
    return x;
}

namespace {

// Full-batch logistic regression by plain gradient descent. Zero init makes
// the first step the class-mean difference and keeps the converged direction
// close to the max-margin separator, which is what the nullspace rounds
// need; adaptive per-coordinate optimizers equalize noise coordinates and
// ruin the direction at this scale.
Tensor fit_logistic_direction(const std::vector<Tensor>& states, const std::vector<int>& labels) {
    const std::size_t dim = states[0].size();
    const std::size_t n = states.size();
    Tensor w({dim});
    double b = 0.0;
    const double lr = 0.2;
    for (int iter = 0; iter < 300; ++iter) {
        Tensor gw({dim});
        double gb = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double z = dot(w, states[i]) + b;
            const double p = 1.0 / (1.0 + std::exp(-z));
            const double r = p - static_cast<double>(labels[i]);
            gw += states[i] * r;
            gb += r;
        }
        w -= gw * (lr / static_cast<double>(n));
        b -= lr * gb / static_cast<double>(n);
    }
    return w;
}

}  // namespace

InlpResult inlp_fit(const std::vector<Tensor>& states, const std::vector<int>& labels,
                    std::size_t rank, std::uint64_t seed) {
    if (states.empty() || states.size() != labels.size())
        throw InputError("inlp_fit: states and labels must be nonempty and aligned");
    const std::size_t dim = states[0].size();
    if (rank < 1 || rank >= dim)
        throw ConfigError("inlp_fit: rank must satisfy 1 <= rank < dim");
    std::set<int> classes(labels.begin(), labels.end());
    if (classes.size() != 2 || classes.count(0) == 0 || classes.count(1) == 0)
        throw InputError("inlp_fit: labels must be binary {0,1}");
    (void)seed;  // the fit is deterministic; kept for interface stability

    std::vector<Tensor> basis;  // orthonormal rows collected so far

    auto project = [&](const Tensor& s) {
        Tensor out = s;
        for (const Tensor& w : basis) {
            const double c = dot(w, s);
            out -= w * c;
        }
        return out;
    };

    for (std::size_t round = 0; round < rank; ++round) {
        std::vector<Tensor> projected;
        projected.reserve(states.size());
        for (const Tensor& s : states) projected.push_back(project(s));

        Tensor w = fit_logistic_direction(projected, labels);

        // Orient toward class 1 using the projected class means.
        Tensor mean_diff({dim});
        for (std::size_t i = 0; i < projected.size(); ++i) {
            if (labels[i] == 1)
                mean_diff += projected[i];
            else
                mean_diff -= projected[i];
        }
        if (dot(w, mean_diff) < 0.0) w *= -1.0;

        // Orthogonalize against what was already removed.
        for (const Tensor& b : basis) w -= b * dot(b, w);
        const double n = w.norm2();
        if (n < 1e-10) break;  // classifier found no remaining direction
        w *= 1.0 / n;
        basis.push_back(std::move(w));
    }

    InlpResult result;
    if (!basis.empty()) {
        result.rowspace = Tensor({basis.size(), dim});
        for (std::size_t r = 0; r < basis.size(); ++r)
            for (std::size_t c = 0; c < dim; ++c) result.rowspace.at(r, c) = basis[r][c];
    }

    result.projection = Tensor({dim, dim});
    for (std::size_t i = 0; i < dim; ++i) result.projection.at(i, i) = 1.0;
    for (const Tensor& w : basis)
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = 0; j < dim; ++j)
                result.projection.at(i, j) -= w[i] * w[j];
    return result;
}

Tensor alterrep_apply(const Tensor& state, const Tensor& rowspace, int direction_sign,
                      double strength) {
    if (direction_sign != 1 && direction_sign != -1)
        throw InputError("alterrep_apply: direction sign must be +1 or -1");
    if (!(strength > 0.0)) throw ConfigError("alterrep_apply: strength must be positive");
    if (rowspace.size() == 0) return state;
    if (rowspace.rank() != 2 || rowspace.cols() != state.size())
        throw ShapeError("alterrep_apply: rowspace columns must match state length");

    const std::size_t r = rowspace.rows(), dim = rowspace.cols();
    // Rows must be orthonormal (zero rows are allowed and ignored).
    std::vector<bool> active(r, false);
    for (std::size_t i = 0; i < r; ++i) {
        double nn = 0.0;
        for (std::size_t c = 0; c < dim; ++c) nn += rowspace.at(i, c) * rowspace.at(i, c);
        if (nn < 1e-20) continue;
        if (std::fabs(nn - 1.0) > 1e-6)
            throw InputError("alterrep_apply: rowspace rows must be orthonormal");
        active[i] = true;
        for (std::size_t j = i + 1; j < r; ++j) {
            double d = 0.0;
            for (std::size_t c = 0; c < dim; ++c) d += rowspace.at(i, c) * rowspace.at(j, c);
            if (std::fabs(d) > 1e-6)
                throw InputError("alterrep_apply: rowspace rows must be orthonormal");
        }
    }

    Tensor out = state;
    for (std::size_t i = 0; i < r; ++i) {
        if (!active[i]) continue;
        double c = 0.0;
        for (std::size_t k = 0; k < dim; ++k) c += rowspace.at(i, k) * state[k];
        const double forced = static_cast<double>(direction_sign) * strength * std::fabs(c);
        for (std::size_t k = 0; k < dim; ++k) out[k] += (forced - c) * rowspace.at(i, k);
    }
    return out;
}

}  // namespace hdmi
