#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>
#include <vector>

#include "condyn/adam.hpp"
#include "condyn/errors.hpp"
#include "condyn/nn.hpp"
#include "condyn/ops.hpp"
#include "condyn/rng.hpp"
#include "condyn/snapshot.hpp"
#include "helpers.hpp"

using namespace condyn;
using namespace condyn::diff;
using testutil::fd_compare;
using testutil::tensor1;

namespace {
const double kLog2Pi = std::log(2.0 * std::numbers::pi);
}

TEST_CASE("tensor shape bookkeeping") {
  Tensor t({2, 3});
  CHECK(t.size() == 6);
  CHECK(t.rank() == 2);
  CHECK(t.dim(1) == 3);
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(t[i] == 0.0);
  Tensor u({3}, {1.0, 2.0, 3.0});
  CHECK(u[2] == 3.0);
  CHECK(shape_size({4, 5, 6}) == 120);
}

TEST_CASE("rng streams are deterministic and independent") {
  RngStream a(42, "alpha");
  RngStream b(42, "alpha");
  for (int i = 0; i < 16; ++i) CHECK(a.next_u64() == b.next_u64());

  // Draw order in one stream never perturbs a sibling stream.
  RngStream root(7, "root");
  RngStream c1 = root.derive("left");
  double first_right = root.derive("right").uniform();
  for (int i = 0; i < 100; ++i) c1.uniform();
  CHECK(root.derive("right").uniform() == first_right);

  // Indexed derivation yields distinct streams.
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 64; ++i) {
    seen.insert(root.derive("ep", i).next_u64());
  }
  CHECK(seen.size() == 64);
}

TEST_CASE("rng uniform and normal have sane ranges and moments") {
  RngStream r(123, "moments");
  double sum = 0.0, sumsq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
    sumsq += u * u;
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.02));
  CHECK(sumsq / n == doctest::Approx(1.0 / 3.0).epsilon(0.03));

  double nsum = 0.0, nsq = 0.0;
  for (int i = 0; i < n; ++i) {
    double z = r.normal();
    nsum += z;
    nsq += z * z;
  }
  CHECK(nsum / n == doctest::Approx(0.0).epsilon(1.0).scale(0.05));
  CHECK(nsq / n == doctest::Approx(1.0).epsilon(0.05));

  for (int i = 0; i < 1000; ++i) {
    CHECK(r.uniform_index(7) < 7);
  }
  double lo = 1e9, hi = -1e9;
  for (int i = 0; i < 1000; ++i) {
    double v = r.uniform(-2.0, 3.0);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(lo >= -2.0);
  CHECK(hi < 3.0);
  CHECK(lo < -1.5);
  CHECK(hi > 2.5);
}

TEST_CASE("elementwise op values match the standard library") {
  Graph g;
  Var x = g.constant(tensor1({-0.7, 0.0, 1.3}));
  CHECK(g.value(tanh_v(g, x))[0] == doctest::Approx(std::tanh(-0.7)));
  CHECK(g.value(sigmoid_v(g, x))[2] ==
        doctest::Approx(1.0 / (1.0 + std::exp(-1.3))));
  CHECK(g.value(exp_v(g, x))[1] == 1.0);
  CHECK(g.value(square_v(g, x))[0] == doctest::Approx(0.49));
  CHECK(g.value(sum_v(g, x)).item() == doctest::Approx(0.6));
  CHECK(g.value(mean_v(g, x)).item() == doctest::Approx(0.2));
  Var c = clamp_v(g, x, -0.5, 0.5);
  CHECK(g.value(c)[0] == -0.5);
  CHECK(g.value(c)[1] == 0.0);
  CHECK(g.value(c)[2] == 0.5);
  Var y = g.constant(tensor1({1.0, 2.0, 3.0}));
  CHECK(g.value(mul(g, x, y))[2] == doctest::Approx(3.9));
  CHECK(g.value(add_scalar(g, y, -1.0))[0] == 0.0);
  CHECK(g.value(mul_scalar(g, y, 2.0))[1] == 4.0);

  Tensor bad({2}, {1.0, 2.0});
  Var z = g.constant(bad);
  CHECK_THROWS_AS((void)add(g, x, z), ShapeError);
}

TEST_CASE("matvec and linear match brute force") {
  Graph g;
  Var w = g.constant(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
  Var x = g.constant(tensor1({1.0, -1.0, 2.0}));
  Tensor mv = g.value(matvec(g, w, x));
  CHECK(mv[0] == doctest::Approx(1 - 2 + 6));
  CHECK(mv[1] == doctest::Approx(4 - 5 + 12));
  Var b = g.constant(tensor1({10.0, 20.0}));
  Tensor lin = g.value(linear(g, w, b, x));
  CHECK(lin[0] == doctest::Approx(15.0));
  CHECK(lin[1] == doctest::Approx(31.0));
}

TEST_CASE("concat, reshape, sum_vars") {
  Graph g;
  Var a = g.constant(tensor1({1.0, 2.0}));
  Var b = g.constant(tensor1({3.0}));
  Tensor cat = g.value(concat(g, {a, b}));
  CHECK(cat.size() == 3);
  CHECK(cat[2] == 3.0);
  Var r = reshape(g, g.constant(Tensor({2, 2}, {1, 2, 3, 4})), {4});
  CHECK(g.value(r).rank() == 1);
  Var s1 = sum_v(g, a);
  Var s2 = sum_v(g, b);
  CHECK(g.value(sum_vars(g, {s1, s2})).item() == doctest::Approx(6.0));
}

TEST_CASE("categorical log-prob and entropy match brute force") {
  Graph g;
  std::vector<double> logits = {0.2, -1.1, 0.7, 0.0};
  Var l = g.constant(tensor1(logits));
  double mx = *std::max_element(logits.begin(), logits.end());
  double zsum = 0.0;
  for (double v : logits) zsum += std::exp(v - mx);
  const double logz = mx + std::log(zsum);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    CHECK(g.value(categorical_log_prob(g, l, i)).item() ==
          doctest::Approx(logits[i] - logz).epsilon(1e-12));
  }
  double h = 0.0;
  for (double v : logits) {
    const double p = std::exp(v - logz);
    h -= p * (v - logz);
  }
  CHECK(g.value(categorical_entropy(g, l)).item() ==
        doctest::Approx(h).epsilon(1e-12));
}

TEST_CASE("composite expression gradients match finite differences") {
  RngStream r(5, "fd");
  ParameterSet ps;
  for (const char* name : {"a", "b"}) {
    Tensor t({4});
    for (std::size_t i = 0; i < 4; ++i) t[i] = r.uniform(-1.0, 1.0);
    ps.add(name, t);
  }
  ps.add("w", [&] {
    Tensor t({3, 4});
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = r.uniform(-1.0, 1.0);
    return t;
  }());
  auto build = [](Graph& g, const BoundParams& bp) {
    Var a = bp.at("a");
    Var b = bp.at("b");
    Var mixed = tanh_v(g, mul(g, a, sigmoid_v(g, b)));
    Var lifted = matvec(g, bp.at("w"), mixed);
    Var e = exp_v(g, mul_scalar(g, lifted, 0.3));
    Var cl = clamp_v(g, add(g, lifted, e), -2.0, 2.0);
    return sum_v(g, square_v(g, cl));
  };
  auto rep = fd_compare(ps, {"a", "b", "w"}, build);
  CHECK(rep.max_rel < 1e-6);
}

TEST_CASE("l2_diff_norm value and subgradient at coincident inputs") {
  Graph g;
  Var a = g.constant(tensor1({3.0, 0.0}));
  Var b = g.constant(tensor1({0.0, -4.0}));
  CHECK(g.value(l2_diff_norm(g, a, b)).item() == doctest::Approx(5.0));

  ParameterSet ps;
  ps.add("p", tensor1({1.0, 2.0}));
  Graph g2;
  BoundParams bp(g2, ps);
  Var same = g2.constant(tensor1({1.0, 2.0}));
  Var loss = l2_diff_norm(g2, bp.at("p"), same);
  CHECK(g2.value(loss).item() == 0.0);
  GradientRecord gr = backward_gradients(g2, loss, bp, ps);
  CHECK(gr.at("p")[0] == 0.0);
  CHECK(gr.at("p")[1] == 0.0);
}

TEST_CASE("clamp gradient passes inside and blocks outside") {
  ParameterSet ps;
  ps.add("x", tensor1({0.3, 5.0, -5.0}));
  auto build = [](Graph& g, const BoundParams& bp) {
    return sum_v(g, clamp_v(g, bp.at("x"), -1.0, 1.0));
  };
  Graph g;
  BoundParams bp(g, ps);
  Var loss = build(g, bp);
  GradientRecord gr = backward_gradients(g, loss, bp, ps);
  CHECK(gr.at("x")[0] == 1.0);
  CHECK(gr.at("x")[1] == 0.0);
  CHECK(gr.at("x")[2] == 0.0);
}

TEST_CASE("conv2d matches a direct convolution and its gradients check out") {
  RngStream r(11, "conv");
  const std::size_t ic = 2, oc = 3, hs = 4, ws = 4, kk = 4;
  ParameterSet ps;
  auto rnd = [&](Shape s) {
    Tensor t(std::move(s));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = r.uniform(-0.5, 0.5);
    return t;
  };
  ps.add("x", rnd({ic, hs, ws}));
  ps.add("w", rnd({oc, ic, kk, kk}));
  ps.add("b", rnd({oc}));

  // stride 2, pad 1: 4x4 -> 2x2.
  Graph g;
  BoundParams bp(g, ps);
  Tensor out = g.value(conv2d(g, bp.at("x"), bp.at("w"), bp.at("b"), 2, 1));
  REQUIRE(out.shape() == Shape{oc, 2, 2});
  const Tensor& x = ps.at("x");
  const Tensor& w = ps.at("w");
  const Tensor& b = ps.at("b");
  for (std::size_t o = 0; o < oc; ++o) {
    for (std::size_t oy = 0; oy < 2; ++oy) {
      for (std::size_t ox = 0; ox < 2; ++ox) {
        double acc = b[o];
        for (std::size_t c = 0; c < ic; ++c) {
          for (std::size_t ky = 0; ky < kk; ++ky) {
            for (std::size_t kx = 0; kx < kk; ++kx) {
              const long iy = static_cast<long>(oy) * 2 - 1 + static_cast<long>(ky);
              const long ix = static_cast<long>(ox) * 2 - 1 + static_cast<long>(kx);
              if (iy < 0 || ix < 0 || iy >= static_cast<long>(hs) ||
                  ix >= static_cast<long>(ws)) {
                continue;
              }
              acc += x[(c * hs + static_cast<std::size_t>(iy)) * ws +
                       static_cast<std::size_t>(ix)] *
                     w[((o * ic + c) * kk + ky) * kk + kx];
            }
          }
        }
        CHECK(out[(o * 2 + oy) * 2 + ox] == doctest::Approx(acc).epsilon(1e-12));
      }
    }
  }

  auto build = [](Graph& gg, const BoundParams& bb) {
    Var y = conv2d(gg, bb.at("x"), bb.at("w"), bb.at("b"), 2, 1);
    return sum_v(gg, square_v(gg, y));
  };
  auto rep = fd_compare(ps, {"x", "w", "b"}, build);
  CHECK(rep.max_rel < 1e-6);
}

TEST_CASE("conv2d_transpose output size and gradients") {
  RngStream r(13, "deconv");
  const std::size_t ic = 3, oc = 2, hs = 2, ws = 2, kk = 4;
  ParameterSet ps;
  auto rnd = [&](Shape s) {
    Tensor t(std::move(s));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = r.uniform(-0.5, 0.5);
    return t;
  };
  ps.add("x", rnd({ic, hs, ws}));
  ps.add("w", rnd({ic, oc, kk, kk}));
  ps.add("b", rnd({oc}));
  Graph g;
  BoundParams bp(g, ps);
  Tensor out =
      g.value(conv2d_transpose(g, bp.at("x"), bp.at("w"), bp.at("b"), 2, 1));
  // (H-1)*stride - 2*pad + K = 1*2 - 2 + 4 = 4.
  CHECK(out.shape() == Shape{oc, 4, 4});

  auto build = [](Graph& gg, const BoundParams& bb) {
    Var y = conv2d_transpose(gg, bb.at("x"), bb.at("w"), bb.at("b"), 2, 1);
    return sum_v(gg, square_v(gg, y));
  };
  auto rep = fd_compare(ps, {"x", "w", "b"}, build);
  CHECK(rep.max_rel < 1e-6);
}

TEST_CASE("conv2d_transpose is the adjoint of conv2d") {
  // <conv(x), y> == <x, conv_T(y)> when conv_T uses the same kernel with
  // swapped channel roles. Verified numerically on random data.
  RngStream r(17, "adjoint");
  const std::size_t ic = 2, oc = 3, hs = 4, ws = 4, kk = 4;
  auto rnd = [&](Shape s) {
    Tensor t(std::move(s));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = r.uniform(-1.0, 1.0);
    return t;
  };
  Tensor x = rnd({ic, hs, ws});
  Tensor w = rnd({oc, ic, kk, kk});  // conv layout
  Tensor wt({ic, oc, kk, kk});       // transpose layout, same values
  for (std::size_t o = 0; o < oc; ++o) {
    for (std::size_t c = 0; c < ic; ++c) {
      for (std::size_t e = 0; e < kk * kk; ++e) {
        wt[(c * oc + o) * kk * kk + e] = w[(o * ic + c) * kk * kk + e];
      }
    }
  }
  Tensor y = rnd({oc, 2, 2});
  Graph g;
  Tensor cx = g.value(conv2d(g, g.constant(x), g.constant(w),
                             g.constant(Tensor::zeros({oc})), 2, 1));
  Tensor cty = g.value(conv2d_transpose(g, g.constant(y), g.constant(wt),
                                        g.constant(Tensor::zeros({ic})), 2, 1));
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < cx.size(); ++i) lhs += cx[i] * y[i];
  for (std::size_t i = 0; i < x.size(); ++i) rhs += x[i] * cty[i];
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
}

TEST_CASE("gru cell with zero weights halves the hidden state") {
  ParameterSet ps;
  for (const char* n : {"wz", "uz", "wr", "ur", "wh", "uh"}) {
    ps.add(n, Tensor::zeros({1, 1}));
  }
  for (const char* n : {"bz", "br", "bh"}) ps.add(n, Tensor::zeros({1}));
  Graph g;
  BoundParams bp(g, ps);
  GruParams p{bp.at("wz"), bp.at("uz"), bp.at("bz"), bp.at("wr"), bp.at("ur"),
              bp.at("br"), bp.at("wh"), bp.at("uh"), bp.at("bh")};
  Var h = g.constant(tensor1({0.4}));
  Var x = g.constant(tensor1({9.0}));  // ignored by zero weights
  CHECK(g.value(gru_cell(g, p, x, h)).item() == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("gru cell gradients match finite differences") {
  RngStream r(19, "gru");
  ParameterSet ps;
  auto rnd = [&](Shape s) {
    Tensor t(std::move(s));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = r.uniform(-0.7, 0.7);
    return t;
  };
  const std::size_t in = 3, hd = 2;
  for (const char* n : {"wz", "wr", "wh"}) ps.add(n, rnd({hd, in}));
  for (const char* n : {"uz", "ur", "uh"}) ps.add(n, rnd({hd, hd}));
  for (const char* n : {"bz", "br", "bh"}) ps.add(n, rnd({hd}));
  Tensor x1 = rnd({in}), x2 = rnd({in});
  auto build = [&](Graph& g, const BoundParams& bp) {
    GruParams p{bp.at("wz"), bp.at("uz"), bp.at("bz"),
                bp.at("wr"), bp.at("ur"), bp.at("br"),
                bp.at("wh"), bp.at("uh"), bp.at("bh")};
    Var h = g.constant(Tensor::zeros({hd}));
    h = gru_cell(g, p, g.constant(x1), h);
    h = gru_cell(g, p, g.constant(x2), h);
    return sum_v(g, square_v(g, h));
  };
  auto rep = fd_compare(
      ps, {"wz", "uz", "bz", "wr", "ur", "br", "wh", "uh", "bh"}, build);
  CHECK(rep.max_rel < 1e-6);
}

TEST_CASE("lstm cell with zero weights") {
  ParameterSet ps;
  for (const char* n : {"wi", "wf", "wg", "wo"}) ps.add(n, Tensor::zeros({1, 1}));
  for (const char* n : {"ui", "uf", "ug", "uo"}) ps.add(n, Tensor::zeros({1, 1}));
  for (const char* n : {"bi", "bf", "bg", "bo"}) ps.add(n, Tensor::zeros({1}));
  Graph g;
  BoundParams bp(g, ps);
  LstmParams p{bp.at("wi"), bp.at("ui"), bp.at("bi"), bp.at("wf"), bp.at("uf"),
               bp.at("bf"), bp.at("wg"), bp.at("ug"), bp.at("bg"), bp.at("wo"),
               bp.at("uo"), bp.at("bo")};
  HiddenCell hc{g.constant(tensor1({0.0})), g.constant(tensor1({1.0}))};
  HiddenCell next = lstm_cell(g, p, g.constant(tensor1({2.0})), hc);
  CHECK(g.value(next.c).item() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(g.value(next.h).item() ==
        doctest::Approx(0.5 * std::tanh(0.5)).epsilon(1e-15));
}

TEST_CASE("lstm cell gradients match finite differences") {
  RngStream r(23, "lstm");
  ParameterSet ps;
  auto rnd = [&](Shape s) {
    Tensor t(std::move(s));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = r.uniform(-0.7, 0.7);
    return t;
  };
  const std::size_t in = 2, hd = 2;
  for (const char* n : {"wi", "wf", "wg", "wo"}) ps.add(n, rnd({hd, in}));
  for (const char* n : {"ui", "uf", "ug", "uo"}) ps.add(n, rnd({hd, hd}));
  for (const char* n : {"bi", "bf", "bg", "bo"}) ps.add(n, rnd({hd}));
  Tensor x1 = rnd({in}), x2 = rnd({in});
  auto build = [&](Graph& g, const BoundParams& bp) {
    LstmParams p{bp.at("wi"), bp.at("ui"), bp.at("bi"), bp.at("wf"),
                 bp.at("uf"), bp.at("bf"), bp.at("wg"), bp.at("ug"),
                 bp.at("bg"), bp.at("wo"), bp.at("uo"), bp.at("bo")};
    HiddenCell hc{g.constant(Tensor::zeros({hd})),
                  g.constant(Tensor::zeros({hd}))};
    hc = lstm_cell(g, p, g.constant(x1), hc);
    hc = lstm_cell(g, p, g.constant(x2), hc);
    return sum_v(g, square_v(g, hc.h));
  };
  auto rep = fd_compare(ps,
                        {"wi", "ui", "bi", "wf", "uf", "bf", "wg", "ug", "bg",
                         "wo", "uo", "bo"},
                        build);
  CHECK(rep.max_rel < 1e-6);
}

TEST_CASE("gaussian nll, entropy, and kl reference values") {
  Graph g;
  // At the mean with unit variance, per-dimension NLL is 0.5*log(2*pi).
  Var x = g.constant(tensor1({1.0, -2.0}));
  Var nll0 =
      gaussian_diag_nll(g, x, x, g.constant(Tensor::zeros({2})));
  CHECK(g.value(nll0).item() == doctest::Approx(kLog2Pi).epsilon(1e-14));

  Var x1 = g.constant(tensor1({1.0}));
  Var mu1 = g.constant(tensor1({0.0}));
  Var nll1 = gaussian_diag_nll(g, x1, mu1, g.constant(Tensor::zeros({1})));
  CHECK(g.value(nll1).item() ==
        doctest::Approx(0.5 + 0.5 * kLog2Pi).epsilon(1e-14));

  // Plain-tensor overload agrees with the graph version.
  CHECK(gaussian_diag_nll(tensor1({1.0}), tensor1({0.0}), tensor1({0.0})) ==
        doctest::Approx(g.value(nll1).item()).epsilon(1e-15));

  CHECK(g.value(gaussian_entropy(g, g.constant(Tensor::zeros({1})))).item() ==
        doctest::Approx(0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e))
            .epsilon(1e-14));

  Var mu_q = g.constant(tensor1({0.0}));
  Var mu_p = g.constant(tensor1({1.0}));
  Var lv = g.constant(tensor1({0.0}));
  CHECK(g.value(kl_diag_gaussian(g, mu_q, lv, mu_p, lv)).item() ==
        doctest::Approx(0.5).epsilon(1e-14));
  CHECK(g.value(kl_diag_gaussian(g, mu_q, lv, mu_q, lv)).item() == 0.0);
}

TEST_CASE("kl between random diagonal gaussians is non-negative") {
  RngStream r(29, "klprop");
  for (int trial = 0; trial < 50; ++trial) {
    Graph g;
    auto rnd = [&](double lo, double hi) {
      Tensor t({3});
      for (std::size_t i = 0; i < 3; ++i) t[i] = r.uniform(lo, hi);
      return t;
    };
    Var kl = kl_diag_gaussian(g, g.constant(rnd(-2, 2)), g.constant(rnd(-2, 1)),
                              g.constant(rnd(-2, 2)), g.constant(rnd(-2, 1)));
    CHECK(g.value(kl).item() >= -1e-12);
  }
}

TEST_CASE("gaussian nll gradients match finite differences") {
  RngStream r(31, "nllfd");
  ParameterSet ps;
  auto rnd = [&](Shape s, double lo, double hi) {
    Tensor t(std::move(s));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = r.uniform(lo, hi);
    return t;
  };
  ps.add("mu", rnd({4}, -1, 1));
  ps.add("lv", rnd({4}, -1.5, 1.5));
  Tensor x = rnd({4}, -2, 2);
  auto build = [&](Graph& g, const BoundParams& bp) {
    return gaussian_diag_nll(g, g.constant(x), bp.at("mu"), bp.at("lv"));
  };
  auto rep = fd_compare(ps, {"mu", "lv"}, build);
  CHECK(rep.max_rel < 1e-7);
}

TEST_CASE("backward is deterministic across repeated sweeps") {
  RngStream r(37, "det");
  ParameterSet ps;
  Tensor t({8});
  for (std::size_t i = 0; i < 8; ++i) t[i] = r.uniform(-1, 1);
  ps.add("p", t);
  auto run = [&]() {
    Graph g;
    BoundParams bp(g, ps);
    Var v = tanh_v(g, bp.at("p"));
    Var loss = sum_v(g, square_v(g, v));
    return backward_gradients(g, loss, bp, ps).at("p");
  };
  Tensor g1 = run(), g2 = run();
  for (std::size_t i = 0; i < 8; ++i) CHECK(g1[i] == g2[i]);
}

TEST_CASE("non-finite loss raises an error naming the offending op") {
  Graph g;
  Var x = g.constant(tensor1({-1.0}));
  Var bad = log_v(g, x);  // log of a negative number
  Var loss = sum_v(g, bad);
  try {
    g.backward(loss);
    FAIL("expected NonFiniteError");
  } catch (const NonFiniteError& e) {
    CHECK(std::string(e.what()).find("log") != std::string::npos);
  }
}

TEST_CASE("adam first step matches the closed form") {
  ParameterSet ps;
  ps.add("w", tensor1({1.0}));
  GradientRecord gr;
  gr.add("w", tensor1({0.5}));
  Adam opt(AdamConfig{1e-3, 0.9, 0.999, 1e-8}, {"w"});
  opt.step(ps, gr);
  // Bias-corrected first step: m_hat = g, v_hat = g^2, so the update is
  // -lr * g / (|g| + eps).
  const double expected = 1.0 - 1e-3 * 0.5 / (0.5 + 1e-8);
  CHECK(ps.at("w")[0] == doctest::Approx(expected).epsilon(1e-15));
  CHECK(opt.steps_taken() == 1);
}

TEST_CASE("adam only touches its own parameter subset") {
  ParameterSet ps;
  ps.add("a", tensor1({1.0}));
  ps.add("b", tensor1({2.0}));
  GradientRecord gr;
  gr.add("a", tensor1({1.0}));
  gr.add("b", tensor1({1.0}));
  Adam opt(AdamConfig{}, {"a"});
  opt.step(ps, gr);
  CHECK(ps.at("a")[0] != 1.0);
  CHECK(ps.at("b")[0] == 2.0);
}

TEST_CASE("adam rejects non-finite gradients by name") {
  ParameterSet ps;
  ps.add("w", tensor1({1.0}));
  GradientRecord gr;
  gr.add("w", tensor1({std::numeric_limits<double>::quiet_NaN()}));
  Adam opt(AdamConfig{}, {"w"});
  try {
    opt.step(ps, gr);
    FAIL("expected NonFiniteError");
  } catch (const NonFiniteError& e) {
    CHECK(std::string(e.what()).find("w") != std::string::npos);
  }
}

TEST_CASE("parameter init depends only on seed and name, not on order") {
  RngStream base(99, "init");
  ParameterSet a, b;
  init_uniform(a, "first", {3, 3}, 3, base);
  init_uniform(a, "second", {3}, 3, base);
  init_uniform(b, "second", {3}, 3, base);
  init_uniform(b, "first", {3, 3}, 3, base);
  for (std::size_t i = 0; i < 9; ++i) {
    CHECK(a.at("first")[i] == b.at("first")[i]);
  }
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(a.at("second")[i] == b.at("second")[i]);
  }
  const double bound = 1.0 / std::sqrt(3.0);
  bool any_large = false;
  for (std::size_t i = 0; i < 9; ++i) {
    CHECK(std::fabs(a.at("first")[i]) <= bound);
    if (std::fabs(a.at("first")[i]) > 0.25 * bound) any_large = true;
  }
  CHECK(any_large);
  // Different names produce different values.
  CHECK(a.at("first")[0] != a.at("second")[0]);
}

TEST_CASE("snapshot round-trip is bit-exact and order-insensitive") {
  const std::string dir = testutil::scratch_dir("snapshot");
  RngStream r(7, "snap");
  auto rnd = [&](Shape s) {
    Tensor t(std::move(s));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = r.uniform(-3, 3);
    return t;
  };
  ParameterSet a;
  a.add("net.w", rnd({2, 3}));
  a.add("net.b", rnd({2}));
  a.add("other", rnd({4}));
  save_snapshot(dir + "/a.bin", a);
  ParameterSet back = load_snapshot(dir + "/a.bin");
  CHECK(back.size() == 3);
  for (const std::string& n : a.names()) {
    REQUIRE(back.has(n));
    CHECK(back.at(n).shape() == a.at(n).shape());
    for (std::size_t i = 0; i < a.at(n).size(); ++i) {
      CHECK(back.at(n)[i] == a.at(n)[i]);
    }
  }

  // Same tensors added in another order serialize to identical bytes.
  ParameterSet b;
  b.add("other", a.at("other"));
  b.add("net.b", a.at("net.b"));
  b.add("net.w", a.at("net.w"));
  save_snapshot(dir + "/b.bin", b);
  CHECK(testutil::slurp(dir + "/a.bin") == testutil::slurp(dir + "/b.bin"));
}

TEST_CASE("snapshot loading rejects corrupt files") {
  const std::string dir = testutil::scratch_dir("snapcorrupt");
  ParameterSet a;
  a.add("w", tensor1({1.0, 2.0}));
  save_snapshot(dir + "/good.bin", a);
  std::string bytes = testutil::slurp(dir + "/good.bin");

  std::string wrong_magic = bytes;
  wrong_magic[0] = 'X';
  testutil::spit(dir + "/magic.bin", wrong_magic);
  CHECK_THROWS_AS((void)load_snapshot(dir + "/magic.bin"), IoError);

  testutil::spit(dir + "/trunc.bin", bytes.substr(0, bytes.size() - 5));
  CHECK_THROWS_AS((void)load_snapshot(dir + "/trunc.bin"), IoError);

  testutil::spit(dir + "/extra.bin", bytes + "zz");
  CHECK_THROWS_AS((void)load_snapshot(dir + "/extra.bin"), IoError);

  CHECK_THROWS_AS((void)load_snapshot(dir + "/missing.bin"), IoError);
}
