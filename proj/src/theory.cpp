#include "hdmi/theory.hpp"

#include <algorithm>
#include <cmath>

namespace hdmi {

Tensor TheoryInstance::row_difference() const {
    Tensor d({w.cols()});
    for (std::size_t c = 0; c < w.cols(); ++c) d[c] = w.at(tau, c) - w.at(sigma, c);
    return d;
}

double TheoryInstance::margin(const Tensor& state) const {
    Tensor z = matvec(w, state) + b;
    return z[tau] - z[sigma];
}

TheoryInstance TheoryInstance::random(std::size_t vocab, std::size_t dim, Rng& rng,
                                      double epsilon) {
    if (vocab < 2 || dim < 1) throw InputError("theory instance needs vocab >= 2, dim >= 1");
    TheoryInstance inst;
    inst.w = Tensor::randn({vocab, dim}, rng);
    inst.b = Tensor::randn({vocab}, rng);
    inst.h = Tensor::randn({dim}, rng);
    inst.tau = rng.index(vocab);
    inst.sigma = rng.index(vocab);
    if (inst.sigma == inst.tau) inst.sigma = (inst.sigma + 1) % vocab;
    inst.epsilon = epsilon;
    return inst;
}

OptimalDelta optimal_margin_delta(const TheoryInstance& inst) {
    Tensor d = inst.row_difference();
    const double dn = d.norm2();
    if (dn == 0.0) throw DegenerateError("optimal_margin_delta: w_tau equals w_sigma (d = 0)");
    OptimalDelta out;
    out.delta = d * (inst.epsilon / dn);
    out.gain = inst.epsilon * dn;
    return out;
}

TargetOnlyDelta target_only_delta(const TheoryInstance& inst) {
    Tensor wt({inst.w.cols()});
    for (std::size_t c = 0; c < inst.w.cols(); ++c) wt[c] = inst.w.at(inst.tau, c);
    const double wn = wt.norm2();
    if (wn == 0.0) throw DegenerateError("target_only_delta: w_tau = 0");
    Tensor d = inst.row_difference();
    const double dn = d.norm2();
    if (dn == 0.0) throw DegenerateError("target_only_delta: d = 0");

    TargetOnlyDelta out;
    out.delta = wt * (inst.epsilon / wn);
    out.cos_theta = dot(d, wt) / (dn * wn);
    out.margin_gain = dot(d, out.delta);
    return out;
}

TheoryInstance build_failure_case(const Tensor& u, double epsilon) {
    if (u.rank() != 1) throw InputError("build_failure_case: u must be rank 1");
    if (u.norm2() == 0.0) throw InputError("build_failure_case: u must be nonzero");
    TheoryInstance inst;
    inst.w = Tensor({2, u.size()});
    for (std::size_t c = 0; c < u.size(); ++c) {
        inst.w.at(0, c) = u[c];        // w_tau = u
        inst.w.at(1, c) = 2.0 * u[c];  // w_sigma = 2u
    }
    inst.b = Tensor::zeros({2});
    inst.h = Tensor::zeros({u.size()});
    inst.tau = 0;
    inst.sigma = 1;
    inst.epsilon = epsilon;
    return inst;
}

double brute_force_best_gain(const TheoryInstance& inst, std::size_t n_directions, Rng& rng) {
    const std::size_t dim = inst.w.cols();
    const double base = inst.margin(inst.h);
    double best = -1e300;
    for (std::size_t i = 0; i < n_directions; ++i) {
        Tensor dir = Tensor::randn({dim}, rng);
        const double n = dir.norm2();
        if (n == 0.0) continue;
        dir *= inst.epsilon / n;
        Tensor moved = inst.h + dir;
        best = std::max(best, inst.margin(moved) - base);
    }
    return best;
}

std::vector<TheoryCheck> verify_margin_theory(std::size_t n_instances, std::uint64_t seed) {
    Rng rng(derive_seed(seed, "theory"));
    std::vector<TheoryCheck> checks;

    TheoryCheck optimal{"optimal margin gain equals eps*|d| and is attained", true, 0.0, ""};
    TheoryCheck target{"target-only gain equals eps*|d|*cos(theta)", true, 0.0, ""};
    TheoryCheck oracle{"10k-direction oracle never beats the optimum", true, -1e300, ""};
    TheoryCheck linearity{"margin change is linear: m(h+delta)-m(h) = d.delta", true, 0.0, ""};
    TheoryCheck translation{"optimal gain invariant to b and h", true, 0.0, ""};
    TheoryCheck cosine{"cos(theta) in [-1,1]; gain sign matches", true, 0.0, ""};

    for (std::size_t i = 0; i < n_instances; ++i) {
        const std::size_t dim = 2 + rng.index(15);    // <= 16
        const std::size_t vocab = 2 + rng.index(31);  // <= 32
        const double eps = 0.25 + rng.uniform() * 2.0;
        TheoryInstance inst = TheoryInstance::random(vocab, dim, rng, eps);

        OptimalDelta od = optimal_margin_delta(inst);
        Tensor moved = inst.h + od.delta;
        const double achieved = inst.margin(moved) - inst.margin(inst.h);
        optimal.worst = std::max(optimal.worst, std::fabs(achieved - od.gain));
        if (std::fabs(achieved - od.gain) > 1e-10) optimal.passed = false;

        TargetOnlyDelta td = target_only_delta(inst);
        Tensor d = inst.row_difference();
        const double identity = inst.epsilon * d.norm2() * td.cos_theta;
        target.worst = std::max(target.worst, std::fabs(td.margin_gain - identity));
        if (std::fabs(td.margin_gain - identity) > 1e-10) target.passed = false;
        Tensor moved_t = inst.h + td.delta;
        const double achieved_t = inst.margin(moved_t) - inst.margin(inst.h);
        target.worst = std::max(target.worst, std::fabs(achieved_t - td.margin_gain));
        if (std::fabs(achieved_t - td.margin_gain) > 1e-10) target.passed = false;

        const double brute = brute_force_best_gain(inst, 10000, rng);
        oracle.worst = std::max(oracle.worst, brute - od.gain);
        if (brute > od.gain + 1e-9) oracle.passed = false;

        // Linearity of the margin change in the perturbation.
        Tensor delta = Tensor::randn({dim}, rng);
        const double lin = inst.margin(inst.h + delta) - inst.margin(inst.h);
        linearity.worst = std::max(linearity.worst, std::fabs(lin - dot(d, delta)));
        if (std::fabs(lin - dot(d, delta)) > 1e-10) linearity.passed = false;

        // Translation invariance: new b and h leave the optimal gain alone.
        TheoryInstance shifted = inst;
        shifted.b = Tensor::randn({vocab}, rng);
        shifted.h = Tensor::randn({dim}, rng);
        const double gain2 = optimal_margin_delta(shifted).gain;
        translation.worst = std::max(translation.worst, std::fabs(gain2 - od.gain));
        if (std::fabs(gain2 - od.gain) > 1e-12) translation.passed = false;

        if (td.cos_theta < -1.0 - 1e-12 || td.cos_theta > 1.0 + 1e-12) cosine.passed = false;
        if (td.margin_gain != 0.0 && td.cos_theta != 0.0 &&
            (td.margin_gain > 0) != (td.cos_theta > 0))
            cosine.passed = false;
        cosine.worst = std::max(cosine.worst, std::fabs(td.cos_theta) - 1.0);
    }

    TheoryCheck failure{"failure construction: target-only gain is -eps*|u|", true, 0.0, ""};
    for (int i = 0; i < 10; ++i) {
        const std::size_t dim = 2 + rng.index(15);
        Tensor u = Tensor::randn({dim}, rng);
        const double eps = 0.5 + rng.uniform();
        TheoryInstance inst = build_failure_case(u, eps);
        TargetOnlyDelta td = target_only_delta(inst);
        const double expect = -eps * u.norm2();
        failure.worst = std::max(failure.worst, std::fabs(td.margin_gain - expect));
        if (std::fabs(td.margin_gain - expect) > 1e-10) failure.passed = false;
        OptimalDelta od = optimal_margin_delta(inst);
        if (std::fabs(od.gain - eps * u.norm2()) > 1e-10) failure.passed = false;
        const double brute = brute_force_best_gain(inst, 10000, rng);
        if (brute > od.gain + 1e-9) failure.passed = false;
    }

    checks.push_back(optimal);
    checks.push_back(target);
    checks.push_back(oracle);
    checks.push_back(linearity);
    checks.push_back(translation);
    checks.push_back(cosine);
    checks.push_back(failure);
    return checks;
}

}  // namespace hdmi
