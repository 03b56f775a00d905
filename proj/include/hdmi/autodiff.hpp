#pragma once

#include <functional>
#include <memory>
#include <unordered_set>
#include <vector>

#include "hdmi/tensor.hpp"

namespace hdmi {

/// One node of the recorded forward computation. Nodes form a DAG through
/// `parents`; `backward_fn` scatters this node's cotangent into the parents.
/// The record is immutable once built; a backward pass visits each node
/// exactly once in reverse topological order.
struct Node {
    const char* op = "leaf";
    Tensor value;
    Tensor grad;
    bool has_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn;

    Tensor& grad_ref() {
        if (!has_grad) {
            grad = Tensor::zeros(value.shape());
            has_grad = true;
        }
        return grad;
    }
};

using Var = std::shared_ptr<Node>;

Var make_var(Tensor value, const char* op = "leaf");

/// Result of a backward pass; keeps the visited set so gradient lookups can
/// distinguish "participated with zero gradient" from "not in the record".
struct BackwardPass {
    std::unordered_set<const Node*> visited;

    bool contains(const Var& v) const { return visited.count(v.get()) != 0; }
};

/// Reverse-mode sweep from a scalar root. Seeds the root cotangent with 1
/// and accumulates gradients on every node reachable through `parents`.
BackwardPass run_backward(const Var& root);

/// Gradient of a scalar root with respect to `wrt`. Throws LookupError when
/// `wrt` did not participate in the forward computation of `root`.
Tensor backward(const Var& root, const Var& wrt);

/// Like backward() but returns zeros when `wrt` is unreachable; used where a
/// zero objective legitimately has no dependence on the query tensor.
Tensor backward_or_zero(const Var& root, const Var& wrt);

// ---- graph operations ---------------------------------------------------

Var vadd(const Var& a, const Var& b);
Var vsub(const Var& a, const Var& b);
Var vmul(const Var& a, const Var& b);
Var vscale(const Var& a, double c);
Var vmatmul(const Var& a, const Var& b);
Var vtranspose(const Var& a);
Var vsoftmax(const Var& v, double temperature);
Var vsoftmax_rows(const Var& m, double temperature);
Var vlog_softmax_rows(const Var& m);
Var vlayer_norm_rows(const Var& x, const Var& gain, const Var& bias, double eps);
Var vgelu(const Var& a);
Var vrelu(const Var& a);
/// mat[r x n] + row[n] broadcast over rows.
Var vadd_row(const Var& mat, const Var& row);
Var vslice_cols(const Var& a, std::size_t col0, std::size_t len);
Var vconcat_rows(const Var& a, const Var& b);
Var vconcat_cols(const std::vector<Var>& parts);
/// Gather rows of a matrix by index (used for embeddings; repeated ids
/// accumulate in the backward pass).
Var vembed_rows(const Var& table, const std::vector<int>& ids);
/// Extract row r of a matrix as a rank-1 tensor.
Var vrow(const Var& mat, std::size_t r);
/// View a rank-1 tensor as a [1 x n] matrix.
Var vas_row(const Var& vec);
/// Single element of a rank-1 tensor as a scalar node.
Var vpick(const Var& vec, std::size_t i);
/// out[i] = mat[i, cols[i]] for i in [0, cols.size()).
Var vpick_positions(const Var& mat, const std::vector<int>& cols);
Var vsum(const Var& a);
Var vmean(const Var& a);

}  // namespace hdmi
