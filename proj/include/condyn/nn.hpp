#pragma once

#include "condyn/ops.hpp"

namespace condyn::diff {

struct GruParams {
  Var wz, uz, bz, wr, ur, br, wh, uh, bh;
};

// z = sigmoid(Wz x + Uz h + bz), r = sigmoid(Wr x + Ur h + br),
// htilde = tanh(Wh x + Uh (r*h) + bh), h' = (1-z)*h + z*htilde.
Var gru_cell(Graph& g, const GruParams& p, Var x, Var h);

struct LstmParams {
  Var wi, ui, bi, wf, uf, bf, wg, ug, bg, wo, uo, bo;
};

struct HiddenCell {
  Var h, c;
};

// i,f,o gates sigmoid, candidate g tanh; c' = f*c + i*g, h' = o*tanh(c').
HiddenCell lstm_cell(Graph& g, const LstmParams& p, Var x, HiddenCell hc);

// 0.5 * sum_d [ (x-mean)^2 * exp(-log_var) + log_var + log(2*pi) ].
Var gaussian_diag_nll(Graph& g, Var x, Var mean, Var log_var);
double gaussian_diag_nll(const Tensor& x, const Tensor& mean,
                         const Tensor& log_var);

// Entropy of a diagonal Gaussian given log-variances.
Var gaussian_entropy(Graph& g, Var log_var);

// KL(q || p) between diagonal Gaussians, summed over dimensions.
Var kl_diag_gaussian(Graph& g, Var mu_q, Var lv_q, Var mu_p, Var lv_p);

// W x + b.
Var linear(Graph& g, Var w, Var b, Var x);

}  // namespace condyn::diff
