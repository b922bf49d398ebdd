#include "condyn/nn.hpp"

#include <cmath>

namespace condyn::diff {

Var linear(Graph& g, Var w, Var b, Var x) { return add(g, matvec(g, w, x), b); }

Var gru_cell(Graph& g, const GruParams& p, Var x, Var h) {
  Var z = sigmoid_v(g, add(g, add(g, matvec(g, p.wz, x), matvec(g, p.uz, h)), p.bz));
  Var r = sigmoid_v(g, add(g, add(g, matvec(g, p.wr, x), matvec(g, p.ur, h)), p.br));
  Var rh = mul(g, r, h);
  Var ht = tanh_v(g, add(g, add(g, matvec(g, p.wh, x), matvec(g, p.uh, rh)), p.bh));
  // (1-z)*h + z*ht
  Var one_minus_z = add_scalar(g, neg(g, z), 1.0);
  return add(g, mul(g, one_minus_z, h), mul(g, z, ht));
}

HiddenCell lstm_cell(Graph& g, const LstmParams& p, Var x, HiddenCell hc) {
  Var i = sigmoid_v(g, add(g, add(g, matvec(g, p.wi, x), matvec(g, p.ui, hc.h)), p.bi));
  Var f = sigmoid_v(g, add(g, add(g, matvec(g, p.wf, x), matvec(g, p.uf, hc.h)), p.bf));
  Var gc = tanh_v(g, add(g, add(g, matvec(g, p.wg, x), matvec(g, p.ug, hc.h)), p.bg));
  Var o = sigmoid_v(g, add(g, add(g, matvec(g, p.wo, x), matvec(g, p.uo, hc.h)), p.bo));
  Var c = add(g, mul(g, f, hc.c), mul(g, i, gc));
  Var h = mul(g, o, tanh_v(g, c));
  return HiddenCell{h, c};
}

Var gaussian_diag_nll(Graph& g, Var x, Var mean, Var log_var) {
  const Tensor& xv = g.value(x);
  if (!same_shape(xv, g.value(mean)) || !same_shape(xv, g.value(log_var)))
    throw ShapeError("gaussian_diag_nll: shapes " + shape_str(xv.shape()) + ", " +
                     shape_str(g.value(mean).shape()) + ", " +
                     shape_str(g.value(log_var).shape()) + " differ");
  Var d = sub(g, x, mean);
  Var quad = mul(g, square_v(g, d), exp_v(g, neg(g, log_var)));
  Var s = add(g, sum_v(g, quad), sum_v(g, log_var));
  double c = static_cast<double>(xv.size()) * std::log(2.0 * M_PI);
  return mul_scalar(g, add_scalar(g, s, c), 0.5);
}

double gaussian_diag_nll(const Tensor& x, const Tensor& mean,
                         const Tensor& log_var) {
  if (!same_shape(x, mean) || !same_shape(x, log_var))
    throw ShapeError("gaussian_diag_nll: shapes " + shape_str(x.shape()) + ", " +
                     shape_str(mean.shape()) + ", " + shape_str(log_var.shape()) +
                     " differ");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double d = x[i] - mean[i];
    acc += d * d * std::exp(-log_var[i]) + log_var[i] + std::log(2.0 * M_PI);
  }
  return 0.5 * acc;
}

Var gaussian_entropy(Graph& g, Var log_var) {
  const Tensor& lv = g.value(log_var);
  double c = 0.5 * static_cast<double>(lv.size()) * std::log(2.0 * M_PI * std::exp(1.0));
  return add_scalar(g, mul_scalar(g, sum_v(g, log_var), 0.5), c);
}

Var kl_diag_gaussian(Graph& g, Var mu_q, Var lv_q, Var mu_p, Var lv_p) {
  // 0.5 * sum [ exp(lq - lp) + (mp - mq)^2 * exp(-lp) - 1 + lp - lq ]
  Var ratio = exp_v(g, sub(g, lv_q, lv_p));
  Var diff = sub(g, mu_p, mu_q);
  Var quad = mul(g, square_v(g, diff), exp_v(g, neg(g, lv_p)));
  Var lin = sub(g, lv_p, lv_q);
  Var total = add(g, add(g, ratio, quad), lin);
  std::size_t d = g.value(mu_q).size();
  return mul_scalar(g, add_scalar(g, sum_v(g, total), -static_cast<double>(d)), 0.5);
}

}  // namespace condyn::diff
