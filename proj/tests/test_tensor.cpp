#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>

#include "hdmi/autodiff.hpp"
#include "hdmi/tensor.hpp"
#include "testutil.hpp"

using namespace hdmi;
using namespace hdmi::testutil;

TEST_CASE("matmul basics") {
    Tensor eye({2, 2}, {1, 0, 0, 1});
    Tensor col({2, 1}, {3, 4});
    Tensor r = matmul(eye, col);
    CHECK(r.at(0, 0) == 3.0);
    CHECK(r.at(1, 0) == 4.0);

    Tensor a({2, 2}, {1, 2, 3, 4});
    Tensor ones({2, 1}, {1, 1});
    Tensor b = matmul(a, ones);
    CHECK(b.at(0, 0) == 3.0);
    CHECK(b.at(1, 0) == 7.0);

    Tensor bad({3, 1}, {1, 2, 3});
    CHECK_THROWS_AS(matmul(a, bad), ShapeError);
}

TEST_CASE("matmul VJP matches finite differences to 1e-6") {
    Rng rng(11);
    Tensor a = Tensor::randn({5, 7}, rng);
    Tensor b = Tensor::randn({7, 3}, rng);
    Tensor cot = Tensor::randn({5, 3}, rng);

    auto contract = [&](const Tensor& out) {
        double s = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * cot[i];
        return s;
    };

    Var va = make_var(a);
    Var vb = make_var(b);
    Var root = vsum(vmul(vmatmul(va, vb), make_var(cot)));
    run_backward(root);

    Tensor fd_a = finite_difference([&](const Tensor& x) { return contract(matmul(x, b)); }, a);
    Tensor fd_b = finite_difference([&](const Tensor& x) { return contract(matmul(a, x)); }, b);

    CHECK(rel_error(va->grad, fd_a) < 1e-6);
    CHECK(rel_error(vb->grad, fd_b) < 1e-6);
}

TEST_CASE("softmax values") {
    Tensor v = Tensor::from_vector({0.0, 0.0});
    Tensor s = softmax(v, 1.0);
    CHECK(s[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(s[1] == doctest::Approx(0.5).epsilon(1e-12));

    Tensor v2 = Tensor::from_vector({std::log(2.0), 0.0});
    Tensor s2 = softmax(v2, 1.0);
    CHECK(std::fabs(s2[0] - 2.0 / 3.0) < 1e-12);
    CHECK(std::fabs(s2[1] - 1.0 / 3.0) < 1e-12);

    // exp((1-0)/0.01) = e^100, so the first entry carries all the mass.
    Tensor v3 = Tensor::from_vector({1.0, 0.0});
    Tensor s3 = softmax(v3, 0.01);
    CHECK(std::fabs(s3[0] - 1.0) < 1e-12);

    CHECK_THROWS_AS(softmax(v, 0.0), DomainError);
    CHECK_THROWS_AS(softmax(v, -1.0), DomainError);
}

TEST_CASE("softmax is a probability vector for extreme finite inputs") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const double scale = trial % 2 == 0 ? 1e4 : 1.0;
        Tensor v = Tensor::randn({9}, rng, scale);
        Tensor s = softmax(v, 1.0);
        double sum = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            CHECK(s[i] >= 0.0);
            CHECK(std::isfinite(s[i]));
            sum += s[i];
        }
        CHECK(std::fabs(sum - 1.0) <= 1e-12);
    }
}

TEST_CASE("layer_norm values and errors") {
    Tensor ones3 = Tensor::full({3}, 1.0);
    Tensor zeros3 = Tensor::zeros({3});
    Tensor c = Tensor::from_vector({1.0, 1.0, 1.0});
    Tensor out = layer_norm(c, ones3, zeros3, 1e-8);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::fabs(out[i]) < 1e-6);

    Tensor v = Tensor::from_vector({-1.0, 1.0});
    Tensor g2 = Tensor::full({2}, 1.0);
    Tensor b2 = Tensor::zeros({2});
    Tensor out2 = layer_norm(v, g2, b2, 1e-12);
    CHECK(out2[0] == doctest::Approx(-1.0).epsilon(1e-5));
    CHECK(out2[1] == doctest::Approx(1.0).epsilon(1e-5));

    Tensor single = Tensor::from_vector({1.0});
    Tensor g1 = Tensor::full({1}, 1.0);
    CHECK_THROWS_AS(layer_norm(single, g1, g1, 1e-5), DomainError);
    CHECK_THROWS_AS(layer_norm(v, g2, b2, 0.0), DomainError);
}

TEST_CASE("layer_norm VJP matches finite differences") {
    Rng rng(7);
    Tensor x = Tensor::randn({1, 8}, rng);
    Tensor gain = Tensor::randn({8}, rng, 0.5);
    Tensor bias = Tensor::randn({8}, rng, 0.5);
    Tensor cot = Tensor::randn({1, 8}, rng);

    Var vx = make_var(x);
    Var vg = make_var(gain);
    Var vb = make_var(bias);
    Var out = vlayer_norm_rows(vx, vg, vb, 1e-5);
    Var root = vsum(vmul(out, make_var(cot)));
    run_backward(root);

    auto f = [&](const Tensor& xin) {
        Tensor row({xin.cols()});
        for (std::size_t i = 0; i < xin.cols(); ++i) row[i] = xin.at(0, i);
        Tensor o = layer_norm(row, gain, bias, 1e-5);
        double s = 0.0;
        for (std::size_t i = 0; i < o.size(); ++i) s += o[i] * cot.at(0, i);
        return s;
    };
    Tensor fd = finite_difference(f, x);
    CHECK(rel_error(vx->grad, fd) < 1e-5);

    Tensor fd_gain = finite_difference(
        [&](const Tensor& gin) {
            Tensor row({x.cols()});
            for (std::size_t i = 0; i < x.cols(); ++i) row[i] = x.at(0, i);
            Tensor o = layer_norm(row, gin, bias, 1e-5);
            double s = 0.0;
            for (std::size_t i = 0; i < o.size(); ++i) s += o[i] * cot.at(0, i);
            return s;
        },
        gain);
    CHECK(rel_error(vg->grad, fd_gain) < 1e-5);
}

TEST_CASE("backward basics") {
    Tensor v = Tensor::from_vector({1.0, -2.0, 3.0});
    Var leaf = make_var(v);
    Var root = vsum(leaf);
    Tensor g = backward(root, leaf);
    for (std::size_t i = 0; i < 3; ++i) CHECK(g[i] == 1.0);
}

TEST_CASE("backward of affine margin recovers row difference exactly") {
    Rng rng(3);
    Tensor w = Tensor::randn({6, 4}, rng);
    Tensor h = Tensor::randn({1, 4}, rng);
    const std::size_t tau = 2, sigma = 5;

    Var vh = make_var(h);
    Var logits = vrow(vmatmul(vh, vtranspose(make_var(w))), 0);
    Var root = vsub(vpick(logits, tau), vpick(logits, sigma));
    Tensor g = backward(root, vh);
    for (std::size_t c = 0; c < 4; ++c)
        CHECK(g.at(0, c) == doctest::Approx(w.at(tau, c) - w.at(sigma, c)).epsilon(1e-12));
}

TEST_CASE("backward through a two-layer chain matches finite differences") {
    Rng rng(17);
    Tensor w1 = Tensor::randn({6, 6}, rng, 0.7);
    Tensor w2 = Tensor::randn({5, 6}, rng, 0.7);
    Tensor gain = Tensor::full({6}, 1.0);
    Tensor bias = Tensor::zeros({6});
    Tensor h0 = Tensor::randn({1, 6}, rng);

    auto margin = [&](const Var& hv) {
        Var x = vlayer_norm_rows(hv, make_var(gain), make_var(bias), 1e-5);
        Var a = vgelu(vmatmul(x, vtranspose(make_var(w1))));
        Var logits = vrow(vmatmul(a, vtranspose(make_var(w2))), 0);
        return vsub(vpick(logits, 1), vpick(logits, 3));
    };

    Var leaf = make_var(h0);
    Tensor g = backward(margin(leaf), leaf);
    Tensor fd = finite_difference(
        [&](const Tensor& x) {
            Var l = make_var(x);
            return margin(l)->value[0];
        },
        h0);
    CHECK(rel_error(g, fd) < 1e-4);
}

TEST_CASE("backward errors and linearity") {
    Tensor v = Tensor::from_vector({1.0, 2.0});
    Var leaf = make_var(v);
    Var unrelated = make_var(Tensor::from_vector({4.0}));
    Var root = vsum(leaf);
    CHECK_THROWS_AS(backward(root, unrelated), LookupError);

    // Non-scalar root is rejected.
    CHECK_THROWS_AS(run_backward(leaf), InputError);

    // backward(2 * root) == 2 * backward(root), elementwise.
    Var l1 = make_var(v);
    Tensor g1 = backward(vsum(vmul(l1, l1)), l1);
    Var l2 = make_var(v);
    Tensor g2 = backward(vscale(vsum(vmul(l2, l2)), 2.0), l2);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(g2[i] == 2.0 * g1[i]);
}

namespace {

// Generic FD check: builds op(leaves), contracts with a random cotangent and
// compares each leaf gradient against the finite-difference oracle.
void check_op_gradient(const char* name,
                       const std::function<Var(const std::vector<Var>&)>& op,
                       std::vector<Tensor> inputs, double tol) {
    Rng rng(fnv1a(name));
    std::vector<Var> leaves;
    for (auto& t : inputs) leaves.push_back(make_var(t));
    Var out = op(leaves);
    Tensor cot = Tensor::randn(out->value.shape(), rng);
    Var root = vsum(vmul(out, make_var(cot)));
    run_backward(root);

    for (std::size_t li = 0; li < leaves.size(); ++li) {
        Tensor fd = finite_difference(
            [&](const Tensor& x) {
                std::vector<Var> ls;
                for (std::size_t k = 0; k < inputs.size(); ++k)
                    ls.push_back(make_var(k == li ? x : inputs[k]));
                Var o = op(ls);
                double s = 0.0;
                for (std::size_t i = 0; i < o->value.size(); ++i) s += o->value[i] * cot[i];
                return s;
            },
            inputs[li]);
        const Tensor got = leaves[li]->has_grad ? leaves[li]->grad : Tensor::zeros(inputs[li].shape());
        INFO(name << " input " << li);
        CHECK(rel_error(got, fd) < tol);
    }
}

}  // namespace

TEST_CASE("every registered op passes the finite-difference oracle") {
    Rng rng(99);
    auto r = [&](std::vector<std::size_t> s) { return Tensor::randn(s, rng); };

    check_op_gradient("add", [](const std::vector<Var>& v) { return vadd(v[0], v[1]); },
                      {r({3, 4}), r({3, 4})}, 1e-6);
    check_op_gradient("sub", [](const std::vector<Var>& v) { return vsub(v[0], v[1]); },
                      {r({3, 4}), r({3, 4})}, 1e-6);
    check_op_gradient("mul", [](const std::vector<Var>& v) { return vmul(v[0], v[1]); },
                      {r({3, 4}), r({3, 4})}, 1e-4);
    check_op_gradient("scale", [](const std::vector<Var>& v) { return vscale(v[0], -2.5); },
                      {r({3, 4})}, 1e-6);
    check_op_gradient("matmul", [](const std::vector<Var>& v) { return vmatmul(v[0], v[1]); },
                      {r({4, 3}), r({3, 5})}, 1e-6);
    check_op_gradient("transpose", [](const std::vector<Var>& v) { return vtranspose(v[0]); },
                      {r({3, 4})}, 1e-6);
    check_op_gradient("softmax", [](const std::vector<Var>& v) { return vsoftmax(v[0], 0.7); },
                      {r({6})}, 1e-4);
    check_op_gradient("softmax_rows",
                      [](const std::vector<Var>& v) { return vsoftmax_rows(v[0], 1.3); },
                      {r({3, 5})}, 1e-4);
    check_op_gradient("log_softmax_rows",
                      [](const std::vector<Var>& v) { return vlog_softmax_rows(v[0]); },
                      {r({3, 5})}, 1e-4);
    check_op_gradient("layer_norm_rows",
                      [](const std::vector<Var>& v) { return vlayer_norm_rows(v[0], v[1], v[2], 1e-5); },
                      {r({2, 6}), r({6}), r({6})}, 1e-4);
    check_op_gradient("gelu", [](const std::vector<Var>& v) { return vgelu(v[0]); },
                      {r({3, 4})}, 1e-4);
    // Inputs held away from the kink so the oracle is valid.
    Tensor relu_in = r({3, 4});
    for (std::size_t i = 0; i < relu_in.size(); ++i)
        relu_in[i] += relu_in[i] >= 0.0 ? 0.5 : -0.5;
    check_op_gradient("relu", [](const std::vector<Var>& v) { return vrelu(v[0]); },
                      {relu_in}, 1e-4);
    check_op_gradient("add_row", [](const std::vector<Var>& v) { return vadd_row(v[0], v[1]); },
                      {r({3, 4}), r({4})}, 1e-6);
    check_op_gradient("slice_cols",
                      [](const std::vector<Var>& v) { return vslice_cols(v[0], 1, 2); },
                      {r({3, 5})}, 1e-6);
    check_op_gradient("concat_rows",
                      [](const std::vector<Var>& v) { return vconcat_rows(v[0], v[1]); },
                      {r({2, 4}), r({3, 4})}, 1e-6);
    check_op_gradient("concat_cols",
                      [](const std::vector<Var>& v) { return vconcat_cols({v[0], v[1]}); },
                      {r({3, 2}), r({3, 3})}, 1e-6);
    check_op_gradient("embed_rows",
                      [](const std::vector<Var>& v) { return vembed_rows(v[0], {1, 0, 1, 2}); },
                      {r({4, 3})}, 1e-6);
    check_op_gradient("row", [](const std::vector<Var>& v) { return vrow(v[0], 2); },
                      {r({4, 3})}, 1e-6);
    check_op_gradient("pick_positions",
                      [](const std::vector<Var>& v) { return vpick_positions(v[0], {1, 0, 2}); },
                      {r({3, 4})}, 1e-6);
    check_op_gradient("mean", [](const std::vector<Var>& v) { return vmean(v[0]); },
                      {r({3, 4})}, 1e-6);
}

TEST_CASE("tensor invariants") {
    CHECK_THROWS_AS(Tensor({2, 0}), ShapeError);
    Tensor t({2, 3});
    CHECK(t.size() == 6);
    CHECK(t.all_finite());
    Tensor u({2}, {1.0, std::numeric_limits<double>::infinity()});
    CHECK_FALSE(u.all_finite());
    CHECK_THROWS_AS(u.assert_finite("u"), DomainError);
}
