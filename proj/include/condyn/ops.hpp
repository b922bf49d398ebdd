#pragma once

#include <vector>

#include "condyn/graph.hpp"

namespace condyn::diff {

// Elementwise; operands must share a shape.
Var add(Graph& g, Var a, Var b);
Var sub(Graph& g, Var a, Var b);
Var mul(Graph& g, Var a, Var b);
Var neg(Graph& g, Var a);
Var add_scalar(Graph& g, Var a, double c);
Var mul_scalar(Graph& g, Var a, double c);

// y = W x for W [m,n], x [n].
Var matvec(Graph& g, Var w, Var x);

Var tanh_v(Graph& g, Var a);
Var sigmoid_v(Graph& g, Var a);
Var exp_v(Graph& g, Var a);
Var log_v(Graph& g, Var a);
Var square_v(Graph& g, Var a);
// Hard clamp; gradient passes where the input lies inside [lo, hi].
Var clamp_v(Graph& g, Var a, double lo, double hi);

Var sum_v(Graph& g, Var a);
Var mean_v(Graph& g, Var a);
// Sum of scalar nodes.
Var sum_vars(Graph& g, const std::vector<Var>& xs);
// Vector concatenation.
Var concat(Graph& g, const std::vector<Var>& xs);
Var reshape(Graph& g, Var a, Shape shape);

// ||a - b||_2 with subgradient 0 at coincident inputs.
Var l2_diff_norm(Graph& g, Var a, Var b);

Var categorical_log_prob(Graph& g, Var logits, std::size_t index);
Var categorical_entropy(Graph& g, Var logits);

// x [IC,H,W], w [OC,IC,KH,KW], b [OC].
Var conv2d(Graph& g, Var x, Var w, Var b, std::size_t stride, std::size_t pad);
// x [IC,H,W], w [IC,OC,KH,KW], b [OC]; output spatial size (H-1)*stride - 2*pad + KH.
Var conv2d_transpose(Graph& g, Var x, Var w, Var b, std::size_t stride,
                     std::size_t pad);

}  // namespace condyn::diff
