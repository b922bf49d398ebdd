#include "condyn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

namespace condyn::diff {

namespace {

void require_same(const char* op, const Tensor& a, const Tensor& b) {
  if (!same_shape(a, b))
    throw ShapeError(std::string(op) + ": operand shapes " + shape_str(a.shape()) +
                     " and " + shape_str(b.shape()) + " differ");
}

// Node builder whose backward closure receives the result node id.
template <typename F>
Var make_node(Graph& g, const char* op, Tensor value,
              std::initializer_list<Var> inputs, F&& fn) {
  struct Holder {
    F fn;
    int self = -1;
  };
  auto h = std::make_shared<Holder>(Holder{std::forward<F>(fn), -1});
  Var r = g.make(op, std::move(value), inputs,
                 [h](Graph& gg) { h->fn(gg, h->self); });
  h->self = r.id;
  return r;
}

}  // namespace

Var add(Graph& g, Var a, Var b) {
  const Tensor &av = g.value(a), &bv = g.value(b);
  require_same("add", av, bv);
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  int ai = a.id, bi = b.id;
  return make_node(g, "add", std::move(out), {a, b}, [ai, bi](Graph& gg, int self) {
    const Tensor& go = gg.out_grad(self);
    if (double* ga = gg.grad_buffer(ai, go.shape()))
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
    if (double* gb = gg.grad_buffer(bi, go.shape()))
      for (std::size_t i = 0; i < go.size(); ++i) gb[i] += go[i];
  });
}

Var sub(Graph& g, Var a, Var b) {
  const Tensor &av = g.value(a), &bv = g.value(b);
  require_same("sub", av, bv);
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  int ai = a.id, bi = b.id;
  return make_node(g, "sub", std::move(out), {a, b}, [ai, bi](Graph& gg, int self) {
    const Tensor& go = gg.out_grad(self);
    if (double* ga = gg.grad_buffer(ai, go.shape()))
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
    if (double* gb = gg.grad_buffer(bi, go.shape()))
      for (std::size_t i = 0; i < go.size(); ++i) gb[i] -= go[i];
  });
}

Var mul(Graph& g, Var a, Var b) {
  const Tensor &av = g.value(a), &bv = g.value(b);
  require_same("mul", av, bv);
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  int ai = a.id, bi = b.id;
  return make_node(g, "mul", std::move(out), {a, b}, [ai, bi](Graph& gg, int self) {
    const Tensor& go = gg.out_grad(self);
    const Tensor &av2 = gg.value(Var{ai}), &bv2 = gg.value(Var{bi});
    if (double* ga = gg.grad_buffer(ai, go.shape()))
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * bv2[i];
    if (double* gb = gg.grad_buffer(bi, go.shape()))
      for (std::size_t i = 0; i < go.size(); ++i) gb[i] += go[i] * av2[i];
  });
}

Var neg(Graph& g, Var a) { return mul_scalar(g, a, -1.0); }

Var add_scalar(Graph& g, Var a, double c) {
  const Tensor& av = g.value(a);
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + c;
  int ai = a.id;
  return make_node(g, "add_scalar", std::move(out), {a}, [ai](Graph& gg, int self) {
    const Tensor& go = gg.out_grad(self);
    if (double* ga = gg.grad_buffer(ai, go.shape()))
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
  });
}

Var mul_scalar(Graph& g, Var a, double c) {
  const Tensor& av = g.value(a);
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * c;
  int ai = a.id;
  return make_node(g, "mul_scalar", std::move(out), {a}, [ai, c](Graph& gg, int self) {
    const Tensor& go = gg.out_grad(self);
    if (double* ga = gg.grad_buffer(ai, go.shape()))
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * c;
  });
}

Var matvec(Graph& g, Var w, Var x) {
  const Tensor &wv = g.value(w), &xv = g.value(x);
  if (wv.rank() != 2 || xv.rank() != 1 || wv.dim(1) != xv.dim(0))
    throw ShapeError("matvec: operand shapes " + shape_str(wv.shape()) + " and " +
                     shape_str(xv.shape()) + " are incompatible");
  std::size_t m = wv.dim(0), n = wv.dim(1);
  Tensor out(Shape{m});
  const double *wd = wv.data(), *xd = xv.data();
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    const double* row = wd + i * n;
    for (std::size_t j = 0; j < n; ++j) acc += row[j] * xd[j];
    out[i] = acc;
  }
  int wi = w.id, xi = x.id;
  return make_node(g, "matvec", std::move(out), {w, x},
                   [wi, xi, m, n](Graph& gg, int self) {
    const Tensor& go = gg.out_grad(self);
    const Tensor &wv2 = gg.value(Var{wi}), &xv2 = gg.value(Var{xi});
    if (double* gw = gg.grad_buffer(wi, wv2.shape())) {
      for (std::size_t i = 0; i < m; ++i) {
        double gi = go[i];
        double* row = gw + i * n;
        const double* xd = xv2.data();
        for (std::size_t j = 0; j < n; ++j) row[j] += gi * xd[j];
      }
    }
    if (double* gx = gg.grad_buffer(xi, xv2.shape())) {
      const double* wd = wv2.data();
      for (std::size_t i = 0; i < m; ++i) {
        double gi = go[i];
        const double* row = wd + i * n;
        for (std::size_t j = 0; j < n; ++j) gx[j] += gi * row[j];
      }
    }
  });
}

namespace {

template <typename FwdF, typename DerivF>
Var unary_op(Graph& g, const char* op, Var a, FwdF fwd, DerivF dfn) {
  // dfn(input value, output value) -> local derivative
  const Tensor& av = g.value(a);
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(av[i]);
  int ai = a.id;
  return make_node(g, op, std::move(out), {a}, [ai, dfn](Graph& gg, int self) {
    const Tensor& go = gg.out_grad(self);
    const Tensor& av2 = gg.value(Var{ai});
    const Tensor& ov = gg.value(Var{self});
    if (double* ga = gg.grad_buffer(ai, av2.shape()))
      for (std::size_t i = 0; i < go.size(); ++i)
        ga[i] += go[i] * dfn(av2[i], ov[i]);
  });
}

}  // namespace

Var tanh_v(Graph& g, Var a) {
  return unary_op(g, "tanh", a, [](double x) { return std::tanh(x); },
                  [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid_v(Graph& g, Var a) {
  return unary_op(g, "sigmoid", a,
                  [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
                  [](double, double y) { return y * (1.0 - y); });
}

Var exp_v(Graph& g, Var a) {
  return unary_op(g, "exp", a, [](double x) { return std::exp(x); },
                  [](double, double y) { return y; });
}

Var log_v(Graph& g, Var a) {
  return unary_op(g, "log", a, [](double x) { return std::log(x); },
                  [](double x, double) { return 1.0 / x; });
}

Var square_v(Graph& g, Var a) {
  return unary_op(g, "square", a, [](double x) { return x * x; },
                  [](double x, double) { return 2.0 * x; });
}

Var clamp_v(Graph& g, Var a, double lo, double hi) {
  if (!(lo <= hi)) throw ConfigError("clamp: lo > hi");
  return unary_op(g, "clamp", a,
                  [lo, hi](double x) { return x < lo ? lo : (x > hi ? hi : x); },
                  [lo, hi](double x, double) {
                    return (x >= lo && x <= hi) ? 1.0 : 0.0;
                  });
}

Var sum_v(Graph& g, Var a) {
  const Tensor& av = g.value(a);
  double acc = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) acc += av[i];
  int ai = a.id;
  return make_node(g, "sum", Tensor::scalar(acc), {a}, [ai](Graph& gg, int self) {
    double go = gg.out_grad(self)[0];
    const Tensor& av2 = gg.value(Var{ai});
    if (double* ga = gg.grad_buffer(ai, av2.shape()))
      for (std::size_t i = 0; i < av2.size(); ++i) ga[i] += go;
  });
}

Var mean_v(Graph& g, Var a) {
  std::size_t n = g.value(a).size();
  return mul_scalar(g, sum_v(g, a), 1.0 / static_cast<double>(n));
}

Var sum_vars(Graph& g, const std::vector<Var>& xs) {
  if (xs.empty()) throw ShapeError("sum_vars: empty operand list");
  double acc = 0.0;
  std::vector<int> ids;
  ids.reserve(xs.size());
  for (Var x : xs) {
    const Tensor& v = g.value(x);
    if (v.size() != 1)
      throw ShapeError("sum_vars: operand of shape " + shape_str(v.shape()));
    acc += v[0];
    ids.push_back(x.id);
  }
  // make() takes initializer_list; register inputs manually via needs_grad scan.
  auto back_ids = std::make_shared<std::vector<int>>(std::move(ids));
  auto self_box = std::make_shared<int>(-1);
  Var r = g.make("sum_vars", Tensor::scalar(acc), xs,
                 [back_ids, self_box](Graph& gg) {
                   double go = gg.out_grad(*self_box)[0];
                   for (int id : *back_ids)
                     if (double* gb = gg.grad_buffer(id, Shape{1})) gb[0] += go;
                 });
  *self_box = r.id;
  return r;
}

Var concat(Graph& g, const std::vector<Var>& xs) {
  if (xs.empty()) throw ShapeError("concat: empty operand list");
  std::size_t total = 0;
  for (Var x : xs) {
    const Tensor& v = g.value(x);
    if (v.rank() != 1)
      throw ShapeError("concat: operand of shape " + shape_str(v.shape()) +
                       " is not a vector");
    total += v.size();
  }
  Tensor out(Shape{total});
  std::size_t off = 0;
  std::vector<int> ids;
  std::vector<std::size_t> sizes;
  for (Var x : xs) {
    const Tensor& v = g.value(x);
    for (std::size_t i = 0; i < v.size(); ++i) out[off + i] = v[i];
    ids.push_back(x.id);
    sizes.push_back(v.size());
    off += v.size();
  }
  auto info = std::make_shared<std::pair<std::vector<int>, std::vector<std::size_t>>>(
      std::move(ids), std::move(sizes));
  auto self_box = std::make_shared<int>(-1);
  Var r = g.make("concat", std::move(out), xs, [info, self_box](Graph& gg) {
    const Tensor& go = gg.out_grad(*self_box);
    std::size_t off2 = 0;
    for (std::size_t k = 0; k < info->first.size(); ++k) {
      std::size_t n = info->second[k];
      if (double* gb = gg.grad_buffer(info->first[k], Shape{n}))
        for (std::size_t i = 0; i < n; ++i) gb[i] += go[off2 + i];
      off2 += n;
    }
  });
  *self_box = r.id;
  return r;
}

Var reshape(Graph& g, Var a, Shape shape) {
  const Tensor& av = g.value(a);
  if (shape_size(shape) != av.size())
    throw ShapeError("reshape: " + shape_str(av.shape()) + " to " +
                     shape_str(shape) + " changes element count");
  std::vector<double> vals(av.data(), av.data() + av.size());
  int ai = a.id;
  Shape in_shape = av.shape();
  return make_node(g, "reshape", Tensor(std::move(shape), std::move(vals)), {a},
                   [ai, in_shape](Graph& gg, int self) {
    const Tensor& go = gg.out_grad(self);
    if (double* ga = gg.grad_buffer(ai, in_shape))
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
  });
}

Var l2_diff_norm(Graph& g, Var a, Var b) {
  const Tensor &av = g.value(a), &bv = g.value(b);
  require_same("l2_diff_norm", av, bv);
  double ssq = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    double d = av[i] - bv[i];
    ssq += d * d;
  }
  double norm = std::sqrt(ssq);
  int ai = a.id, bi = b.id;
  return make_node(g, "l2_diff_norm", Tensor::scalar(norm), {a, b},
                   [ai, bi](Graph& gg, int self) {
    double go = gg.out_grad(self)[0];
    double nv = gg.value(Var{self})[0];
    if (nv <= 0.0) return;  // subgradient 0 at coincident sequences
    const Tensor &av2 = gg.value(Var{ai}), &bv2 = gg.value(Var{bi});
    double s = go / nv;
    if (double* ga = gg.grad_buffer(ai, av2.shape()))
      for (std::size_t i = 0; i < av2.size(); ++i) ga[i] += s * (av2[i] - bv2[i]);
    if (double* gb = gg.grad_buffer(bi, bv2.shape()))
      for (std::size_t i = 0; i < bv2.size(); ++i) gb[i] -= s * (av2[i] - bv2[i]);
  });
}

namespace {

// log-softmax as values; shared by the categorical ops.
std::vector<double> log_softmax_values(const Tensor& logits) {
  double mx = logits[0];
  for (std::size_t i = 1; i < logits.size(); ++i) mx = std::max(mx, logits[i]);
  double lse = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) lse += std::exp(logits[i] - mx);
  lse = mx + std::log(lse);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

}  // namespace

Var categorical_log_prob(Graph& g, Var logits, std::size_t index) {
  const Tensor& lv = g.value(logits);
  if (lv.rank() != 1 || index >= lv.size())
    throw ShapeError("categorical_log_prob: index " + std::to_string(index) +
                     " outside logits " + shape_str(lv.shape()));
  auto ls = log_softmax_values(lv);
  int li = logits.id;
  return make_node(g, "categorical_log_prob", Tensor::scalar(ls[index]), {logits},
                   [li, index](Graph& gg, int self) {
    double go = gg.out_grad(self)[0];
    const Tensor& lv2 = gg.value(Var{li});
    auto ls2 = log_softmax_values(lv2);
    if (double* gl = gg.grad_buffer(li, lv2.shape()))
      for (std::size_t i = 0; i < lv2.size(); ++i)
        gl[i] += go * ((i == index ? 1.0 : 0.0) - std::exp(ls2[i]));
  });
}

Var categorical_entropy(Graph& g, Var logits) {
  const Tensor& lv = g.value(logits);
  if (lv.rank() != 1)
    throw ShapeError("categorical_entropy: logits " + shape_str(lv.shape()));
  auto ls = log_softmax_values(lv);
  double h = 0.0;
  for (double l : ls) h -= std::exp(l) * l;
  int li = logits.id;
  return make_node(g, "categorical_entropy", Tensor::scalar(h), {logits},
                   [li](Graph& gg, int self) {
    double go = gg.out_grad(self)[0];
    double hv = gg.value(Var{self})[0];
    const Tensor& lv2 = gg.value(Var{li});
    auto ls2 = log_softmax_values(lv2);
    if (double* gl = gg.grad_buffer(li, lv2.shape()))
      for (std::size_t i = 0; i < lv2.size(); ++i) {
        double p = std::exp(ls2[i]);
        gl[i] += go * (-p * (ls2[i] + hv));
      }
  });
}

namespace {

struct ConvGeom {
  std::size_t ic, h, w, oc, kh, kw, oh, ow, stride, pad;
};

ConvGeom conv_geom(const Tensor& x, const Tensor& wt, const Tensor& b,
                   std::size_t stride, std::size_t pad, bool transpose) {
  if (x.rank() != 3 || wt.rank() != 4 || b.rank() != 1)
    throw ShapeError("conv: operand shapes " + shape_str(x.shape()) + ", " +
                     shape_str(wt.shape()) + ", " + shape_str(b.shape()));
  ConvGeom ge{};
  ge.ic = x.dim(0);
  ge.h = x.dim(1);
  ge.w = x.dim(2);
  ge.stride = stride;
  ge.pad = pad;
  if (!transpose) {
    // wt [OC, IC, KH, KW]
    ge.oc = wt.dim(0);
    ge.kh = wt.dim(2);
    ge.kw = wt.dim(3);
    if (wt.dim(1) != ge.ic)
      throw ShapeError("conv2d: input channels " + std::to_string(ge.ic) +
                       " vs weight " + shape_str(wt.shape()));
    ge.oh = (ge.h + 2 * pad - ge.kh) / stride + 1;
    ge.ow = (ge.w + 2 * pad - ge.kw) / stride + 1;
  } else {
    // wt [IC, OC, KH, KW]
    ge.oc = wt.dim(1);
    ge.kh = wt.dim(2);
    ge.kw = wt.dim(3);
    if (wt.dim(0) != ge.ic)
      throw ShapeError("conv2d_transpose: input channels " + std::to_string(ge.ic) +
                       " vs weight " + shape_str(wt.shape()));
    ge.oh = (ge.h - 1) * stride + ge.kh - 2 * pad;
    ge.ow = (ge.w - 1) * stride + ge.kw - 2 * pad;
  }
  if (b.dim(0) != ge.oc)
    throw ShapeError("conv: bias " + shape_str(b.shape()) + " vs output channels " +
                     std::to_string(ge.oc));
  return ge;
}

}  // namespace

Var conv2d(Graph& g, Var x, Var w, Var b, std::size_t stride, std::size_t pad) {
  const Tensor &xv = g.value(x), &wv = g.value(w), &bv = g.value(b);
  ConvGeom ge = conv_geom(xv, wv, bv, stride, pad, false);
  Tensor out(Shape{ge.oc, ge.oh, ge.ow});
  const double *xd = xv.data(), *wd = wv.data(), *bd = bv.data();
  for (std::size_t oc = 0; oc < ge.oc; ++oc)
    for (std::size_t oy = 0; oy < ge.oh; ++oy)
      for (std::size_t ox = 0; ox < ge.ow; ++ox) {
        double acc = bd[oc];
        for (std::size_t ic = 0; ic < ge.ic; ++ic)
          for (std::size_t ky = 0; ky < ge.kh; ++ky) {
            std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * ge.stride + ky) -
                                static_cast<std::ptrdiff_t>(ge.pad);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(ge.h)) continue;
            for (std::size_t kx = 0; kx < ge.kw; ++kx) {
              std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * ge.stride + kx) -
                                  static_cast<std::ptrdiff_t>(ge.pad);
              if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(ge.w)) continue;
              acc += xd[(ic * ge.h + static_cast<std::size_t>(iy)) * ge.w + static_cast<std::size_t>(ix)] *
                     wd[((oc * ge.ic + ic) * ge.kh + ky) * ge.kw + kx];
            }
          }
        out[(oc * ge.oh + oy) * ge.ow + ox] = acc;
      }
  int xi = x.id, wi = w.id, bi = b.id;
  return make_node(g, "conv2d", std::move(out), {x, w, b},
                   [xi, wi, bi, ge](Graph& gg, int self) {
    const Tensor& go = gg.out_grad(self);
    const Tensor &xv2 = gg.value(Var{xi}), &wv2 = gg.value(Var{wi});
    double* gx = gg.grad_buffer(xi, xv2.shape());
    double* gw = gg.grad_buffer(wi, wv2.shape());
    double* gb = gg.grad_buffer(bi, Shape{ge.oc});
    const double *xd = xv2.data(), *wd = wv2.data(), *god = go.data();
    for (std::size_t oc = 0; oc < ge.oc; ++oc)
      for (std::size_t oy = 0; oy < ge.oh; ++oy)
        for (std::size_t ox = 0; ox < ge.ow; ++ox) {
          double gv = god[(oc * ge.oh + oy) * ge.ow + ox];
          if (gb) gb[oc] += gv;
          if (!gx && !gw) continue;
          for (std::size_t ic = 0; ic < ge.ic; ++ic)
            for (std::size_t ky = 0; ky < ge.kh; ++ky) {
              std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * ge.stride + ky) -
                                  static_cast<std::ptrdiff_t>(ge.pad);
              if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(ge.h)) continue;
              for (std::size_t kx = 0; kx < ge.kw; ++kx) {
                std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * ge.stride + kx) -
                                    static_cast<std::ptrdiff_t>(ge.pad);
                if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(ge.w)) continue;
                std::size_t xoff = (ic * ge.h + static_cast<std::size_t>(iy)) * ge.w +
                                   static_cast<std::size_t>(ix);
                std::size_t woff = ((oc * ge.ic + ic) * ge.kh + ky) * ge.kw + kx;
                if (gx) gx[xoff] += gv * wd[woff];
                if (gw) gw[woff] += gv * xd[xoff];
              }
            }
        }
  });
}

Var conv2d_transpose(Graph& g, Var x, Var w, Var b, std::size_t stride,
                     std::size_t pad) {
  const Tensor &xv = g.value(x), &wv = g.value(w), &bv = g.value(b);
  ConvGeom ge = conv_geom(xv, wv, bv, stride, pad, true);
  Tensor out(Shape{ge.oc, ge.oh, ge.ow});
  const double *xd = xv.data(), *wd = wv.data(), *bd = bv.data();
  double* od = out.data();
  for (std::size_t oc = 0; oc < ge.oc; ++oc)
    for (std::size_t i = 0; i < ge.oh * ge.ow; ++i) od[oc * ge.oh * ge.ow + i] = bd[oc];
  for (std::size_t ic = 0; ic < ge.ic; ++ic)
    for (std::size_t iy = 0; iy < ge.h; ++iy)
      for (std::size_t ix = 0; ix < ge.w; ++ix) {
        double xval = xd[(ic * ge.h + iy) * ge.w + ix];
        for (std::size_t oc = 0; oc < ge.oc; ++oc)
          for (std::size_t ky = 0; ky < ge.kh; ++ky) {
            std::ptrdiff_t oy = static_cast<std::ptrdiff_t>(iy * ge.stride + ky) -
                                static_cast<std::ptrdiff_t>(ge.pad);
            if (oy < 0 || oy >= static_cast<std::ptrdiff_t>(ge.oh)) continue;
            for (std::size_t kx = 0; kx < ge.kw; ++kx) {
              std::ptrdiff_t ox = static_cast<std::ptrdiff_t>(ix * ge.stride + kx) -
                                  static_cast<std::ptrdiff_t>(ge.pad);
              if (ox < 0 || ox >= static_cast<std::ptrdiff_t>(ge.ow)) continue;
              od[(oc * ge.oh + static_cast<std::size_t>(oy)) * ge.ow + static_cast<std::size_t>(ox)] +=
                  xval * wd[((ic * ge.oc + oc) * ge.kh + ky) * ge.kw + kx];
            }
          }
      }
  int xi = x.id, wi = w.id, bi = b.id;
  return make_node(g, "conv2d_transpose", std::move(out), {x, w, b},
                   [xi, wi, bi, ge](Graph& gg, int self) {
    const Tensor& go = gg.out_grad(self);
    const Tensor &xv2 = gg.value(Var{xi}), &wv2 = gg.value(Var{wi});
    double* gx = gg.grad_buffer(xi, xv2.shape());
    double* gw = gg.grad_buffer(wi, wv2.shape());
    double* gb = gg.grad_buffer(bi, Shape{ge.oc});
    const double *xd = xv2.data(), *wd = wv2.data(), *god = go.data();
    if (gb)
      for (std::size_t oc = 0; oc < ge.oc; ++oc)
        for (std::size_t i = 0; i < ge.oh * ge.ow; ++i)
          gb[oc] += god[oc * ge.oh * ge.ow + i];
    if (!gx && !gw) return;
    for (std::size_t ic = 0; ic < ge.ic; ++ic)
      for (std::size_t iy = 0; iy < ge.h; ++iy)
        for (std::size_t ix = 0; ix < ge.w; ++ix) {
          std::size_t xoff = (ic * ge.h + iy) * ge.w + ix;
          double xval = xd[xoff];
          double gxa = 0.0;
          for (std::size_t oc = 0; oc < ge.oc; ++oc)
            for (std::size_t ky = 0; ky < ge.kh; ++ky) {
              std::ptrdiff_t oy = static_cast<std::ptrdiff_t>(iy * ge.stride + ky) -
                                  static_cast<std::ptrdiff_t>(ge.pad);
              if (oy < 0 || oy >= static_cast<std::ptrdiff_t>(ge.oh)) continue;
              for (std::size_t kx = 0; kx < ge.kw; ++kx) {
                std::ptrdiff_t ox = static_cast<std::ptrdiff_t>(ix * ge.stride + kx) -
                                    static_cast<std::ptrdiff_t>(ge.pad);
                if (ox < 0 || ox >= static_cast<std::ptrdiff_t>(ge.ow)) continue;
                std::size_t ooff = (oc * ge.oh + static_cast<std::size_t>(oy)) * ge.ow +
                                   static_cast<std::size_t>(ox);
                std::size_t woff = ((ic * ge.oc + oc) * ge.kh + ky) * ge.kw + kx;
                double gv = god[ooff];
                gxa += gv * wd[woff];
                if (gw) gw[woff] += gv * xval;
              }
            }
          if (gx) gx[xoff] += gxa;
        }
  });
}

}  // namespace condyn::diff
