#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "ilvm/distributions.hpp"
#include "ilvm/nn.hpp"
#include "ilvm/ops.hpp"
#include "ilvm/optim.hpp"

namespace {

using ilvm::Rng;
using ilvm::ad::Tensor;
namespace ad = ilvm::ad;
namespace nn = ilvm::nn;
using ilvm::testing::grad_check;
using ilvm::testing::random_projection;
using ilvm::testing::random_tensor;

std::vector<double> vals(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

TEST(Tensor, RejectsBadShapesAndNonFiniteData) {
  EXPECT_THROW(Tensor::from({2, 2}, {1, 2, 3}), ad::ShapeError);
  EXPECT_THROW(Tensor::vector({1.0, std::nan("")}), ad::NonFiniteError);
  EXPECT_THROW(ad::exp(Tensor::scalar(1000.0)), ad::NonFiniteError);
}

TEST(Tensor, BackwardRequiresScalarAndRunsOnce) {
  auto x = Tensor::vector({1, 2, 3}, true);
  EXPECT_THROW(ad::scale(x, 2.0).backward(), ad::ShapeError);
  auto loss = ad::sum(x);
  loss.backward();
  EXPECT_EQ(std::vector<double>(x.grad().begin(), x.grad().end()), (std::vector<double>{1, 1, 1}));
  EXPECT_THROW(loss.backward(), ad::GraphError);
}

TEST(Tensor, NoGradGuardRecordsNothing) {
  auto x = Tensor::scalar(2.0, true);
  {
    ad::NoGradGuard guard;
    EXPECT_FALSE(ad::mul(x, x).requires_grad());
  }
  EXPECT_TRUE(ad::mul(x, x).requires_grad());
}

TEST(Ops, AffineIdentityAndHandExample) {
  const auto x = Tensor::vector({1, 2});
  EXPECT_EQ(vals(ad::affine(x, Tensor::matrix(2, 2, {1, 0, 0, 1}), Tensor::vector({0, 0}))), vals(x));
  const auto y = ad::affine(x, Tensor::matrix(2, 2, {1, 2, 3, 4}), Tensor::vector({0.5, -0.5}));
  // Row vector times W: [1*1 + 2*3, 1*2 + 2*4] + b.
  EXPECT_DOUBLE_EQ(y.values()[0], 7.5);
  EXPECT_DOUBLE_EQ(y.values()[1], 9.5);
}

TEST(Ops, FeatureWiseMax) {
  const auto m = ad::max_rows(Tensor::matrix(2, 2, {1, 5, 3, 2}));
  EXPECT_EQ(vals(m), (std::vector<double>{3, 5}));
  const std::vector<std::size_t> seg = {1, 1, 0};
  const auto s = ad::segment_max(Tensor::matrix(3, 2, {1, 5, 3, 2, -4, -1}), seg, 3);
  EXPECT_EQ(vals(s), (std::vector<double>{-4, -1, 3, 5, 0, 0}));
}

TEST(Ops, MaxIsPermutationInvariant) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + trial % 5;
    const auto x = random_tensor({n, 3}, rng, -1, 1, false);
    const auto perm = ilvm::testing::random_permutation(n, rng);
    const auto px = ad::gather_rows(x, perm);
    EXPECT_EQ(vals(ad::max_rows(x)), vals(ad::max_rows(px)));
  }
}

TEST(Ops, HuberBranches) {
  EXPECT_DOUBLE_EQ(ad::huber(Tensor::scalar(0.0), 1.0).item(), 0.0);
  EXPECT_DOUBLE_EQ(ad::huber(Tensor::scalar(0.5), 1.0).item(), 0.125);
  EXPECT_DOUBLE_EQ(ad::huber(Tensor::scalar(3.0), 1.0).item(), 2.5);
  EXPECT_DOUBLE_EQ(ad::huber(Tensor::scalar(-3.0), 1.0).item(), 2.5);
  EXPECT_THROW(ad::huber(Tensor::scalar(1.0), 0.0), std::invalid_argument);
}

TEST(Ops, ChainRuleByHand) {
  auto w = Tensor::scalar(2.0, true);
  const auto x = Tensor::scalar(3.0);
  const auto wx = ad::mul(w, x);
  ad::mul(wx, wx).backward();
  EXPECT_DOUBLE_EQ(w.grad()[0], 36.0);
}

TEST(Ops, ShapeMismatchThrows) {
  EXPECT_THROW(ad::add(Tensor::vector({1, 2}), Tensor::vector({1, 2, 3})), ad::ShapeError);
  EXPECT_THROW(ad::affine(Tensor::vector({1, 2}), Tensor::matrix(3, 1, {1, 2, 3})), ad::ShapeError);
}

// Every primitive against central differences on 100 random instances.
class PrimitiveGradient : public ::testing::TestWithParam<int> {};

Tensor apply_primitive(int which, const std::vector<Tensor>& in) {
  switch (which) {
    case 0: return ad::affine(in[0], in[1], in[2]);
    case 1: return ad::add(in[0], in[1]);
    case 2: return ad::sub(in[0], in[1]);
    case 3: return ad::mul(in[0], in[1]);
    case 4: return ad::scale(in[0], -1.7);
    case 5: return ad::relu(in[0]);
    case 6: return ad::tanh(in[0]);
    case 7: return ad::sigmoid(in[0]);
    case 8: return ad::exp(in[0]);
    case 9: return ad::softplus(in[0]);
    case 10: return ad::concat_cols({in[0], in[1]});
    case 11: return ad::slice_cols(in[0], 1, 3);
    case 12: {
      const std::vector<std::size_t> rows = {2, 0, 2};
      return ad::gather_rows(in[0], rows);
    }
    case 13: return ad::reshape(in[0], {in[0].numel()});
    case 14: {
      const std::vector<std::size_t> seg = {0, 2, 0};
      return ad::segment_max(in[0], seg, 3);
    }
    case 15: return ad::max_rows(in[0]);
    case 16: return ad::huber(in[0], 0.7);
    case 17: return ad::kl_diag_gaussian({in[0], in[1]}, {in[2], in[3]});
    case 18: return ad::reparam_sample({in[0], in[1]}, in[2]);
    case 19: return ad::gaussian2d_nll(in[0], in[1]);
    default: return ad::sum(in[0]);
  }
}

std::vector<Tensor> primitive_inputs(int which, Rng& rng) {
  using ilvm::testing::random_tensor;
  switch (which) {
    case 0: return {random_tensor({3, 4}, rng), random_tensor({4, 2}, rng), random_tensor({2}, rng)};
    case 1:
    case 2:
    case 3: return {random_tensor({3, 4}, rng), random_tensor({3, 4}, rng)};
    case 10: return {random_tensor({3, 2}, rng), random_tensor({3, 3}, rng)};
    case 17:
      return {random_tensor({2, 3}, rng), random_tensor({2, 3}, rng, -0.5, 0.5), random_tensor({2, 3}, rng),
              random_tensor({2, 3}, rng, -0.5, 0.5)};
    case 18: return {random_tensor({2, 3}, rng), random_tensor({2, 3}, rng), random_tensor({2, 3}, rng, -1, 1, false)};
    case 19: return {random_tensor({2, 10}, rng), random_tensor({2, 4}, rng)};
    case 16: return {random_tensor({3, 4}, rng, -2, 2)};
    default: return {random_tensor({3, 4}, rng)};
  }
}

TEST_P(PrimitiveGradient, MatchesCentralDifferences) {
  const int which = GetParam();
  Rng rng(1000 + which);
  double worst = 0.0;
  std::size_t checked = 0;
  for (int instance = 0; instance < 100; ++instance) {
    auto in = primitive_inputs(which, rng);
    const auto proj_seed = rng();
    const auto f = [&]() {
      Rng proj(proj_seed);
      return random_projection(apply_primitive(which, in), proj);
    };
    std::vector<Tensor> leaves;
    for (auto& t : in)
      if (t.requires_grad()) leaves.push_back(t);
    const auto r = grad_check(f, leaves, rng);
    worst = std::max(worst, r.max_rel_error);
    checked += r.checked;
  }
  EXPECT_LT(worst, 1e-4);
  EXPECT_GT(checked, 100u);
}

INSTANTIATE_TEST_SUITE_P(AllPrimitives, PrimitiveGradient, ::testing::Range(0, 21));

TEST(Gru, ZeroWeightsHalveTheState) {
  nn::ParameterSet params;
  Rng rng(1);
  nn::GruCell cell(params, "gru", 3, 2, rng);
  params.fill(0.0);
  const auto h = Tensor::matrix(1, 2, {0.4, -0.2});
  const auto out = cell(h, Tensor::matrix(1, 3, {1.0, -2.0, 5.0}));
  EXPECT_DOUBLE_EQ(out.values()[0], 0.2);
  EXPECT_DOUBLE_EQ(out.values()[1], -0.1);
  const auto zero = cell(Tensor::zeros({1, 2}), Tensor::matrix(1, 3, {1.0, -2.0, 5.0}));
  EXPECT_EQ(vals(zero), (std::vector<double>{0.0, 0.0}));
}

// Straight scalar loops over the packed weight layout.
std::vector<double> gru_oracle(const nn::GruCell& cell, const std::vector<double>& h, const std::vector<double>& a) {
  const std::size_t H = cell.hidden_dim(), A = cell.input_dim();
  const auto Wi = cell.input_weight().values();
  const auto bi = cell.input_bias().values();
  const auto Wg = cell.hidden_gate_weight().values();
  const auto Wc = cell.hidden_candidate_weight().values();
  const auto sig = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  std::vector<double> r(H), z(H), out(H);
  for (std::size_t j = 0; j < H; ++j) {
    double sr = bi[j], sz = bi[H + j];
    for (std::size_t i = 0; i < A; ++i) {
      sr += a[i] * Wi[i * 3 * H + j];
      sz += a[i] * Wi[i * 3 * H + H + j];
    }
    for (std::size_t i = 0; i < H; ++i) {
      sr += h[i] * Wg[i * 2 * H + j];
      sz += h[i] * Wg[i * 2 * H + H + j];
    }
    r[j] = sig(sr);
    z[j] = sig(sz);
  }
  for (std::size_t j = 0; j < H; ++j) {
    double sn = bi[2 * H + j];
    for (std::size_t i = 0; i < A; ++i) sn += a[i] * Wi[i * 3 * H + 2 * H + j];
    for (std::size_t i = 0; i < H; ++i) sn += r[i] * h[i] * Wc[i * H + j];
    const double n = std::tanh(sn);
    out[j] = (1.0 - z[j]) * n + z[j] * h[j];
  }
  return out;
}

TEST(Gru, MatchesScalarOracle) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    nn::ParameterSet params;
    nn::GruCell cell(params, "gru", 3, 4, rng);
    for (const auto& [name, t] : params.items()) {
      auto p = t;
      for (auto& v : p.mutable_values()) v = ilvm::uniform(rng, -1, 1);
    }
    std::vector<double> h(4), a(3);
    for (auto& v : h) v = ilvm::uniform(rng, -1, 1);
    for (auto& v : a) v = ilvm::uniform(rng, -1, 1);
    const auto out = cell(Tensor::matrix(1, 4, h), Tensor::matrix(1, 3, a));
    const auto ref = gru_oracle(cell, h, a);
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(out.values()[j], ref[j], 1e-12);
  }
}

TEST(Gru, GradientThroughRollout) {
  Rng rng(3);
  double worst = 0.0;
  for (int instance = 0; instance < 100; ++instance) {
    nn::ParameterSet params;
    nn::GruCell cell(params, "gru", 2, 3, rng);
    nn::Mlp mlp(params, "mlp", {3, 4, 2}, rng);
    std::vector<Tensor> inputs;
    for (int t = 0; t < 3; ++t) inputs.push_back(random_tensor({2, 2}, rng));
    const auto seed = rng();
    const auto f = [&]() {
      Rng proj(seed);
      return random_projection(mlp(nn::gru_rollout(cell, inputs, 2)), proj);
    };
    std::vector<Tensor> leaves(inputs);
    for (const auto& [name, t] : params.items()) leaves.push_back(t);
    worst = std::max(worst, grad_check(f, leaves, rng).max_rel_error);
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(ParameterSet, LexicographicAndUnique) {
  nn::ParameterSet params;
  Rng rng(0);
  params.zeros("b.weight", {2});
  params.zeros("a.weight", {2});
  EXPECT_THROW(params.zeros("a.weight", {1}), std::invalid_argument);
  std::vector<std::string> names;
  for (const auto& [name, t] : params.items()) names.push_back(name);
  EXPECT_EQ(names, (std::vector<std::string>{"a.weight", "b.weight"}));
}

TEST(Adam, FirstStepIsMinusLr) {
  nn::ParameterSet params;
  auto w = params.add("w", Tensor::scalar(1.0, true));
  ilvm::optim::Adam adam(params, {0.1, 0.9, 0.999, 1e-8});
  ad::sum(w).backward();  // g = 1
  adam.step();
  EXPECT_NEAR(w.item(), 1.0 - 0.1, 1e-9);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  nn::ParameterSet params;
  auto w = params.add("w", Tensor::vector({0.3, -0.4}, true));
  ilvm::optim::Adam adam(params, {});
  params.zero_grad();
  adam.step();
  EXPECT_EQ(vals(w), (std::vector<double>{0.3, -0.4}));
}

TEST(Adam, ReducesAQuadratic) {
  nn::ParameterSet params;
  auto w = params.add("w", Tensor::vector({2.0, -1.0}, true));
  ilvm::optim::Adam adam(params, {0.1});
  const auto loss = [&]() { return ad::sum(ad::mul(w, w)); };
  const double l0 = loss().item();
  double prev = l0;
  for (int i = 0; i < 2; ++i) {
    params.zero_grad();
    loss().backward();
    adam.step();
    const double l = loss().item();
    EXPECT_LT(l, prev);
    prev = l;
  }
}

TEST(Adam, ClipScalesToMaxNorm) {
  nn::ParameterSet params;
  auto w = params.add("w", Tensor::vector({0.0, 0.0}, true));
  ad::sum(ad::mul(w, Tensor::vector({3.0, 4.0}))).backward();
  EXPECT_DOUBLE_EQ(ilvm::optim::clip_grad_norm(params, 1.0), 5.0);
  EXPECT_NEAR(w.grad()[0], 0.6, 1e-12);
  EXPECT_NEAR(w.grad()[1], 0.8, 1e-12);
}

TEST(Kl, ClosedForm) {
  const ad::DiagGaussian q{Tensor::vector({1.0}), Tensor::vector({0.0})};
  const ad::DiagGaussian p{Tensor::vector({0.0}), Tensor::vector({0.0})};
  EXPECT_DOUBLE_EQ(ad::kl_diag_gaussian(q, p).item(), 0.5);
  EXPECT_DOUBLE_EQ(ad::kl_diag_gaussian(q, q).item(), 0.0);
  EXPECT_THROW(ad::kl_diag_gaussian(q, {Tensor::vector({0, 0}), Tensor::vector({0, 0})}), ad::ShapeError);
}

TEST(Kl, NonNegativeAndMatchesMonteCarlo) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto q = ad::DiagGaussian{random_tensor({1, 3}, rng, -2, 2, false), random_tensor({1, 3}, rng, -1, 1, false)};
    const auto p = ad::DiagGaussian{random_tensor({1, 3}, rng, -2, 2, false), random_tensor({1, 3}, rng, -1, 1, false)};
    EXPECT_GE(ad::kl_diag_gaussian(q, p).item(), -1e-9);
  }
  for (int trial = 0; trial < 3; ++trial) {
    const auto q = ad::DiagGaussian{random_tensor({1, 2}, rng, -1, 1, false), random_tensor({1, 2}, rng, -0.5, 0.5, false)};
    const auto p = ad::DiagGaussian{random_tensor({1, 2}, rng, -1, 1, false), random_tensor({1, 2}, rng, -0.5, 0.5, false)};
    const double exact = ad::kl_diag_gaussian(q, p).item();
    // E_q[log q(z) - log p(z)] by sampling.
    const std::size_t n = 1'000'000;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t d = 0; d < 2; ++d) {
        const double mq = q.mu.values()[d], sq = std::exp(q.log_sigma.values()[d]);
        const double mp = p.mu.values()[d], sp = std::exp(p.log_sigma.values()[d]);
        const double z = mq + sq * ilvm::standard_normal(rng);
        const double uq = (z - mq) / sq, up = (z - mp) / sp;
        acc += -std::log(sq) - 0.5 * uq * uq + std::log(sp) + 0.5 * up * up;
      }
    }
    EXPECT_NEAR(acc / static_cast<double>(n), exact, 1e-2);
  }
}

TEST(Reparam, DegenerateAndDeterministic) {
  const ad::DiagGaussian d{Tensor::vector({1.5, -2.0}), Tensor::vector({-50.0, -50.0})};
  Rng rng(3);
  const auto z = ad::reparam_sample(d, rng);
  EXPECT_NEAR(z.values()[0], 1.5, 1e-15);
  EXPECT_NEAR(z.values()[1], -2.0, 1e-15);
  const ad::DiagGaussian e{Tensor::vector({0.0}), Tensor::vector({0.3})};
  Rng a(9), b(9);
  EXPECT_EQ(ad::reparam_sample(e, a).item(), ad::reparam_sample(e, b).item());
}

TEST(Reparam, MomentsMatch) {
  const double mu = 0.7, log_sigma = -0.4;
  const ad::DiagGaussian d{Tensor::vector({mu}), Tensor::vector({log_sigma})};
  Rng rng(4);
  const int n = 100'000;
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = ad::reparam_sample(d, rng).item();
    s1 += z;
    s2 += z * z;
  }
  const double mean = s1 / n, var = s2 / n - mean * mean;
  const double sigma2 = std::exp(2 * log_sigma);
  EXPECT_NEAR(mean, mu, 0.02);
  EXPECT_NEAR(var / sigma2, 1.0, 0.05);
}

TEST(Reparam, GradientReachesMuAndLogSigma) {
  auto mu = Tensor::vector({0.1, 0.2}, true);
  auto ls = Tensor::vector({0.0, 0.5}, true);
  const auto eps = Tensor::vector({1.0, -2.0});
  ad::sum(ad::reparam_sample({mu, ls}, eps)).backward();
  EXPECT_DOUBLE_EQ(mu.grad()[0], 1.0);
  EXPECT_DOUBLE_EQ(ls.grad()[1], -2.0 * std::exp(0.5));
}

TEST(Gaussian2, NllMatchesDensity) {
  // Standard normal waypoint: raw a, b chosen so softplus + floor = 1.
  const double a = std::log(std::exp(1.0 - ad::kCholeskyFloor) - 1.0);
  const auto raw = Tensor::matrix(1, 5, {0.0, 0.0, a, a, 0.0});
  const auto y = Tensor::matrix(1, 2, {1.0, -1.0});
  const double expected = std::log(2.0 * std::numbers::pi) + 1.0;
  EXPECT_NEAR(ad::gaussian2d_nll(raw, y).item(), expected, 1e-12);
  const auto g = ad::gaussian_from_raw(raw.values().data());
  const auto cov = g.covariance();
  EXPECT_NEAR(cov[0], 1.0, 1e-12);
  EXPECT_NEAR(cov[3], 1.0, 1e-12);
}

}  // namespace
