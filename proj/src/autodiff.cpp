#include "hdmi/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace hdmi {

Var make_var(Tensor value, const char* op) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->value = std::move(value);
    return n;
}

namespace {

Var make_node(const char* op, Tensor value, std::vector<Var> parents,
              std::function<void(Node&)> backward_fn) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->value = std::move(value);
    n->parents = std::move(parents);
    n->backward_fn = std::move(backward_fn);
    return n;
}

}  // namespace

BackwardPass run_backward(const Var& root) {
    if (!root) throw InputError("run_backward: null root");
    if (root->value.size() != 1)
        throw InputError("run_backward: root must be a scalar");

    // Iterative post-order DFS; graphs from autoregressive unrolls can be
    // deep enough that recursion is not safe.
    std::vector<Node*> order;
    std::unordered_set<const Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(root.get(), 0);
    seen.insert(root.get());
    while (!stack.empty()) {
        auto& [node, next_child] = stack.back();
        if (next_child < node->parents.size()) {
            Node* child = node->parents[next_child].get();
            ++next_child;
            if (seen.insert(child).second) stack.emplace_back(child, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    root->grad_ref()[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward_fn && n->has_grad) n->backward_fn(*n);
    }

    BackwardPass pass;
    pass.visited = std::move(seen);
    return pass;
}

Tensor backward(const Var& root, const Var& wrt) {
    BackwardPass pass = run_backward(root);
    if (!pass.contains(wrt))
        throw LookupError("backward: tensor did not participate in the forward computation");
    return wrt->has_grad ? wrt->grad : Tensor::zeros(wrt->value.shape());
}

Tensor backward_or_zero(const Var& root, const Var& wrt) {
    BackwardPass pass = run_backward(root);
    if (!pass.contains(wrt) || !wrt->has_grad) return Tensor::zeros(wrt->value.shape());
    return wrt->grad;
}

Var vadd(const Var& a, const Var& b) {
    if (!a->value.same_shape(b->value)) throw ShapeError("vadd: shape mismatch");
    Tensor out = a->value + b->value;
    return make_node("add", std::move(out), {a, b}, [](Node& n) {
        n.parents[0]->grad_ref() += n.grad;
        n.parents[1]->grad_ref() += n.grad;
    });
}

Var vsub(const Var& a, const Var& b) {
    if (!a->value.same_shape(b->value)) throw ShapeError("vsub: shape mismatch");
    Tensor out = a->value - b->value;
    return make_node("sub", std::move(out), {a, b}, [](Node& n) {
        n.parents[0]->grad_ref() += n.grad;
        n.parents[1]->grad_ref() -= n.grad;
    });
}

Var vmul(const Var& a, const Var& b) {
    Tensor out = hadamard(a->value, b->value);
    return make_node("mul", std::move(out), {a, b}, [](Node& n) {
        n.parents[0]->grad_ref() += hadamard(n.grad, n.parents[1]->value);
        n.parents[1]->grad_ref() += hadamard(n.grad, n.parents[0]->value);
    });
}

Var vscale(const Var& a, double c) {
    Tensor out = a->value * c;
    return make_node("scale", std::move(out), {a}, [c](Node& n) {
        n.parents[0]->grad_ref() += n.grad * c;
    });
}

Var vmatmul(const Var& a, const Var& b) {
    Tensor out = matmul(a->value, b->value);
    return make_node("matmul", std::move(out), {a, b}, [](Node& n) {
        // (g . b^T, a^T . g)
        n.parents[0]->grad_ref() += matmul(n.grad, transpose(n.parents[1]->value));
        n.parents[1]->grad_ref() += matmul(transpose(n.parents[0]->value), n.grad);
    });
}

Var vtranspose(const Var& a) {
    Tensor out = transpose(a->value);
    return make_node("transpose", std::move(out), {a}, [](Node& n) {
        n.parents[0]->grad_ref() += transpose(n.grad);
    });
}

Var vsoftmax(const Var& v, double temperature) {
    Tensor out = softmax(v->value, temperature);
    return make_node("softmax", std::move(out), {v}, [temperature](Node& n) {
        // VJP: (y * (g - <g, y>)) / temperature
        const Tensor& y = n.value;
        const Tensor& g = n.grad;
        double gy = dot(g, y);
        Tensor& dst = n.parents[0]->grad_ref();
        for (std::size_t i = 0; i < y.size(); ++i)
            dst[i] += y[i] * (g[i] - gy) / temperature;
    });
}

Var vsoftmax_rows(const Var& m, double temperature) {
    Tensor out = softmax_rows(m->value, temperature);
    return make_node("softmax_rows", std::move(out), {m}, [temperature](Node& n) {
        const Tensor& y = n.value;
        const Tensor& g = n.grad;
        Tensor& dst = n.parents[0]->grad_ref();
        const std::size_t rows = y.rows(), cols = y.cols();
        for (std::size_t r = 0; r < rows; ++r) {
            double gy = 0.0;
            for (std::size_t c = 0; c < cols; ++c) gy += g.at(r, c) * y.at(r, c);
            for (std::size_t c = 0; c < cols; ++c)
                dst.at(r, c) += y.at(r, c) * (g.at(r, c) - gy) / temperature;
        }
    });
}

Var vlog_softmax_rows(const Var& m) {
    const Tensor& x = m->value;
    if (x.rank() != 2) throw ShapeError("vlog_softmax_rows: operand must be rank 2");
    Tensor out({x.rows(), x.cols()});
    for (std::size_t r = 0; r < x.rows(); ++r) {
        double mx = x.at(r, 0);
        for (std::size_t c = 1; c < x.cols(); ++c) mx = std::max(mx, x.at(r, c));
        double sum = 0.0;
        for (std::size_t c = 0; c < x.cols(); ++c) sum += std::exp(x.at(r, c) - mx);
        const double lse = mx + std::log(sum);
        for (std::size_t c = 0; c < x.cols(); ++c) out.at(r, c) = x.at(r, c) - lse;
    }
    return make_node("log_softmax_rows", std::move(out), {m}, [](Node& n) {
        const Tensor& lp = n.value;
        const Tensor& g = n.grad;
        Tensor& dst = n.parents[0]->grad_ref();
        for (std::size_t r = 0; r < lp.rows(); ++r) {
            double gsum = 0.0;
            for (std::size_t c = 0; c < lp.cols(); ++c) gsum += g.at(r, c);
            for (std::size_t c = 0; c < lp.cols(); ++c)
                dst.at(r, c) += g.at(r, c) - std::exp(lp.at(r, c)) * gsum;
        }
    });
}

Var vlayer_norm_rows(const Var& x, const Var& gain, const Var& bias, double eps) {
    const Tensor& xv = x->value;
    if (xv.rank() != 2) throw ShapeError("vlayer_norm_rows: operand must be rank 2");
    if (xv.cols() < 2) throw DomainError("vlayer_norm_rows: need at least 2 columns");
    if (!(eps > 0.0)) throw DomainError("vlayer_norm_rows: eps must be positive");
    const std::size_t rows = xv.rows(), n = xv.cols();
    if (gain->value.size() != n || bias->value.size() != n)
        throw ShapeError("vlayer_norm_rows: gain/bias length mismatch");

    // Save normalized values and inverse stddev per row for the backward pass.
    auto xhat = std::make_shared<Tensor>(Tensor({rows, n}));
    auto inv_std = std::make_shared<std::vector<double>>(rows);
    Tensor out({rows, n});
    for (std::size_t r = 0; r < rows; ++r) {
        double mean = 0.0;
        for (std::size_t c = 0; c < n; ++c) mean += xv.at(r, c);
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
            const double d = xv.at(r, c) - mean;
            var += d * d;
        }
        var /= static_cast<double>(n);
        const double is = 1.0 / std::sqrt(var + eps);
        (*inv_std)[r] = is;
        for (std::size_t c = 0; c < n; ++c) {
            const double xh = (xv.at(r, c) - mean) * is;
            xhat->at(r, c) = xh;
            out.at(r, c) = gain->value[c] * xh + bias->value[c];
        }
    }
    return make_node("layer_norm_rows", std::move(out), {x, gain, bias},
                     [xhat, inv_std, n](Node& node) {
        const Tensor& g = node.grad;
        Tensor& dx = node.parents[0]->grad_ref();
        Tensor& dgain = node.parents[1]->grad_ref();
        Tensor& dbias = node.parents[2]->grad_ref();
        const Tensor& gainv = node.parents[1]->value;
        const double dn = static_cast<double>(n);
        for (std::size_t r = 0; r < g.rows(); ++r) {
            double sum_gy = 0.0, sum_gy_xhat = 0.0;
            for (std::size_t c = 0; c < n; ++c) {
                const double gy = g.at(r, c) * gainv[c];
                sum_gy += gy;
                sum_gy_xhat += gy * xhat->at(r, c);
            }
            for (std::size_t c = 0; c < n; ++c) {
                const double gy = g.at(r, c) * gainv[c];
                dx.at(r, c) += (*inv_std)[r] *
                               (gy - sum_gy / dn - xhat->at(r, c) * sum_gy_xhat / dn);
                dgain[c] += g.at(r, c) * xhat->at(r, c);
                dbias[c] += g.at(r, c);
            }
        }
    });
}

namespace {
constexpr double kGeluC1 = 0.7978845608028653559;  // sqrt(2/pi)
constexpr double kGeluC2 = 0.044715;
}  // namespace

Var vgelu(const Var& a) {
    const Tensor& x = a->value;
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double u = kGeluC1 * (x[i] + kGeluC2 * x[i] * x[i] * x[i]);
        out[i] = 0.5 * x[i] * (1.0 + std::tanh(u));
    }
    return make_node("gelu", std::move(out), {a}, [](Node& n) {
        const Tensor& x = n.parents[0]->value;
        Tensor& dst = n.parents[0]->grad_ref();
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double x2 = x[i] * x[i];
            const double u = kGeluC1 * (x[i] + kGeluC2 * x[i] * x2);
            const double t = std::tanh(u);
            const double du = kGeluC1 * (1.0 + 3.0 * kGeluC2 * x2);
            const double d = 0.5 * (1.0 + t) + 0.5 * x[i] * (1.0 - t * t) * du;
            dst[i] += n.grad[i] * d;
        }
    });
}

Var vrelu(const Var& a) {
    const Tensor& x = a->value;
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
    return make_node("relu", std::move(out), {a}, [](Node& n) {
        const Tensor& x = n.parents[0]->value;
        Tensor& dst = n.parents[0]->grad_ref();
        for (std::size_t i = 0; i < x.size(); ++i)
            if (x[i] > 0.0) dst[i] += n.grad[i];
    });
}

Var vadd_row(const Var& mat, const Var& row) {
    const Tensor& m = mat->value;
    if (m.rank() != 2 || row->value.rank() != 1 || row->value.size() != m.cols())
        throw ShapeError("vadd_row: expects [r x n] matrix and length-n row");
    Tensor out = m;
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) out.at(r, c) += row->value[c];
    return make_node("add_row", std::move(out), {mat, row}, [](Node& n) {
        n.parents[0]->grad_ref() += n.grad;
        Tensor& drow = n.parents[1]->grad_ref();
        for (std::size_t r = 0; r < n.grad.rows(); ++r)
            for (std::size_t c = 0; c < n.grad.cols(); ++c) drow[c] += n.grad.at(r, c);
    });
}

Var vslice_cols(const Var& a, std::size_t col0, std::size_t len) {
    const Tensor& m = a->value;
    if (m.rank() != 2 || col0 + len > m.cols()) throw ShapeError("vslice_cols: out of range");
    Tensor out({m.rows(), len});
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < len; ++c) out.at(r, c) = m.at(r, col0 + c);
    return make_node("slice_cols", std::move(out), {a}, [col0, len](Node& n) {
        Tensor& dst = n.parents[0]->grad_ref();
        for (std::size_t r = 0; r < n.grad.rows(); ++r)
            for (std::size_t c = 0; c < len; ++c) dst.at(r, col0 + c) += n.grad.at(r, c);
    });
}

Var vconcat_rows(const Var& a, const Var& b) {
    const Tensor& am = a->value;
    const Tensor& bm = b->value;
    if (am.rank() != 2 || bm.rank() != 2 || am.cols() != bm.cols())
        throw ShapeError("vconcat_rows: column mismatch");
    Tensor out({am.rows() + bm.rows(), am.cols()});
    std::copy(am.data(), am.data() + am.size(), out.data());
    std::copy(bm.data(), bm.data() + bm.size(), out.data() + am.size());
    const std::size_t arows = am.rows();
    return make_node("concat_rows", std::move(out), {a, b}, [arows](Node& n) {
        Tensor& da = n.parents[0]->grad_ref();
        Tensor& db = n.parents[1]->grad_ref();
        const std::size_t cols = n.grad.cols();
        for (std::size_t r = 0; r < arows; ++r)
            for (std::size_t c = 0; c < cols; ++c) da.at(r, c) += n.grad.at(r, c);
        for (std::size_t r = arows; r < n.grad.rows(); ++r)
            for (std::size_t c = 0; c < cols; ++c) db.at(r - arows, c) += n.grad.at(r, c);
    });
}

Var vconcat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw ShapeError("vconcat_cols: no parts");
    const std::size_t rows = parts[0]->value.rows();
    std::size_t total = 0;
    for (const auto& p : parts) {
        if (p->value.rank() != 2 || p->value.rows() != rows)
            throw ShapeError("vconcat_cols: row mismatch");
        total += p->value.cols();
    }
    Tensor out({rows, total});
    std::size_t off = 0;
    std::vector<std::size_t> offsets;
    for (const auto& p : parts) {
        offsets.push_back(off);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < p->value.cols(); ++c)
                out.at(r, off + c) = p->value.at(r, c);
        off += p->value.cols();
    }
    return make_node("concat_cols", std::move(out), parts, [offsets](Node& n) {
        for (std::size_t pi = 0; pi < n.parents.size(); ++pi) {
            Tensor& dst = n.parents[pi]->grad_ref();
            const std::size_t o = offsets[pi];
            for (std::size_t r = 0; r < dst.rows(); ++r)
                for (std::size_t c = 0; c < dst.cols(); ++c) dst.at(r, c) += n.grad.at(r, o + c);
        }
    });
}

Var vembed_rows(const Var& table, const std::vector<int>& ids) {
    const Tensor& t = table->value;
    if (t.rank() != 2) throw ShapeError("vembed_rows: table must be rank 2");
    Tensor out({ids.size(), t.cols()});
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= t.rows())
            throw InputError("vembed_rows: id out of range");
        for (std::size_t c = 0; c < t.cols(); ++c)
            out.at(i, c) = t.at(static_cast<std::size_t>(ids[i]), c);
    }
    return make_node("embed_rows", std::move(out), {table}, [ids](Node& n) {
        Tensor& dst = n.parents[0]->grad_ref();
        for (std::size_t i = 0; i < ids.size(); ++i)
            for (std::size_t c = 0; c < n.grad.cols(); ++c)
                dst.at(static_cast<std::size_t>(ids[i]), c) += n.grad.at(i, c);
    });
}

Var vrow(const Var& mat, std::size_t r) {
    const Tensor& m = mat->value;
    if (m.rank() != 2 || r >= m.rows()) throw ShapeError("vrow: row out of range");
    Tensor out({m.cols()});
    for (std::size_t c = 0; c < m.cols(); ++c) out[c] = m.at(r, c);
    return make_node("row", std::move(out), {mat}, [r](Node& n) {
        Tensor& dst = n.parents[0]->grad_ref();
        for (std::size_t c = 0; c < n.grad.size(); ++c) dst.at(r, c) += n.grad[c];
    });
}

Var vas_row(const Var& vec) {
    const Tensor& v = vec->value;
    if (v.rank() != 1) throw ShapeError("vas_row: operand must be rank 1");
    Tensor out({1, v.size()}, std::vector<double>(v.data(), v.data() + v.size()));
    return make_node("as_row", std::move(out), {vec}, [](Node& n) {
        Tensor& dst = n.parents[0]->grad_ref();
        for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += n.grad.at(0, c);
    });
}

Var vpick(const Var& vec, std::size_t i) {
    const Tensor& v = vec->value;
    if (v.rank() != 1 || i >= v.size()) throw ShapeError("vpick: index out of range");
    return make_node("pick", Tensor::scalar(v[i]), {vec}, [i](Node& n) {
        n.parents[0]->grad_ref()[i] += n.grad[0];
    });
}

Var vpick_positions(const Var& mat, const std::vector<int>& cols) {
    const Tensor& m = mat->value;
    if (m.rank() != 2 || cols.size() > m.rows())
        throw ShapeError("vpick_positions: too many positions");
    Tensor out({cols.size()});
    for (std::size_t i = 0; i < cols.size(); ++i) {
        if (cols[i] < 0 || static_cast<std::size_t>(cols[i]) >= m.cols())
            throw InputError("vpick_positions: column out of range");
        out[i] = m.at(i, static_cast<std::size_t>(cols[i]));
    }
    return make_node("pick_positions", std::move(out), {mat}, [cols](Node& n) {
        Tensor& dst = n.parents[0]->grad_ref();
        for (std::size_t i = 0; i < cols.size(); ++i)
            dst.at(i, static_cast<std::size_t>(cols[i])) += n.grad[i];
    });
}

Var vsum(const Var& a) {
    return make_node("sum", Tensor::scalar(a->value.sum()), {a}, [](Node& n) {
        Tensor& dst = n.parents[0]->grad_ref();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += n.grad[0];
    });
}

Var vmean(const Var& a) {
    const double inv = 1.0 / static_cast<double>(a->value.size());
    return make_node("mean", Tensor::scalar(a->value.sum() * inv), {a}, [inv](Node& n) {
        Tensor& dst = n.parents[0]->grad_ref();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += n.grad[0] * inv;
    });
}

}  // namespace hdmi
