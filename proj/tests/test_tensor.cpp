#include <doctest.h>

#include <random>

#include "y2aec/tc/ops.hpp"
#include "y2aec/tc/param.hpp"

using namespace y2aec;
using tc::Tensor;

namespace {

std::vector<float> rand_vec(size_t n, uint32_t seed, float amp = 1.0f) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> d(-amp, amp);
  std::vector<float> out(n);
  for (auto& v : out) v = d(rng);
  return out;
}

}  // namespace

TEST_CASE("tensor construction and validation") {
  CHECK_THROWS(Tensor::from_vector({2, 3}, std::vector<float>(5)));
  CHECK_THROWS(Tensor::from_vector({0, 3}, {}));
  const auto t = Tensor::from_vector({2, 1, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(t.numel() == 6);
  CHECK(t.at3(1, 0, 2) == 6.0f);
}

TEST_CASE("conv1d_feature hand cases") {
  SUBCASE("identity kernel passes input through") {
    const tc::ConvSpec spec{3, 2, 2, 1, false};
    std::vector<float> w(3 * 2 * 2, 0.0f);
    // center tap, channel-diagonal
    w[(1 * 2 + 0) * 2 + 0] = 1.0f;
    w[(1 * 2 + 1) * 2 + 1] = 1.0f;
    const auto x = Tensor::from_vector({5, 1, 2}, rand_vec(10, 1));
    const auto y = tc::conv1d_feature(x, spec, Tensor::from_vector({3, 2, 2}, w), Tensor());
    REQUIRE(y.shape() == x.shape());
    for (size_t i = 0; i < x.numel(); ++i) CHECK(y.at(i) == x.at(i));
  }
  SUBCASE("all-ones 3-tap kernel on [1,2,3,4]") {
    const tc::ConvSpec spec{3, 1, 1, 1, false};
    const auto x = Tensor::from_vector({4, 1, 1}, {1, 2, 3, 4});
    const auto w = Tensor::from_vector({3, 1, 1}, {1, 1, 1});
    const auto y = tc::conv1d_feature(x, spec, w, Tensor());
    CHECK(y.at(0) == 3.0f);
    CHECK(y.at(1) == 6.0f);
    CHECK(y.at(2) == 9.0f);
    CHECK(y.at(3) == 7.0f);
  }
  SUBCASE("stride 2 output length is ceil(M/2)") {
    const tc::ConvSpec spec{24, 4, 8, 2, false};
    const auto x = Tensor::from_vector({260, 1, 4}, rand_vec(260 * 4, 2));
    const auto w = Tensor::from_vector({24, 4, 8}, rand_vec(24 * 4 * 8, 3));
    const auto y = tc::conv1d_feature(x, spec, w, Tensor());
    CHECK(y.shape() == tc::Shape{130, 1, 8});

    const auto x65 = Tensor::from_vector({65, 1, 4}, rand_vec(65 * 4, 4));
    CHECK(tc::conv1d_feature(x65, spec, w, Tensor()).shape() == tc::Shape{33, 1, 8});
  }
  SUBCASE("bias is added per output channel") {
    const tc::ConvSpec spec{1, 1, 2, 1, false};
    const auto x = Tensor::from_vector({3, 1, 1}, {0, 0, 0});
    const auto w = Tensor::from_vector({1, 1, 2}, {1, 1});
    const auto b = Tensor::from_vector({2}, {0.5f, -1.0f});
    const auto y = tc::conv1d_feature(x, spec, w, b);
    CHECK(y.at3(0, 0, 0) == 0.5f);
    CHECK(y.at3(2, 0, 1) == -1.0f);
  }
  SUBCASE("shape mismatches rejected") {
    const tc::ConvSpec spec{3, 2, 2, 1, false};
    const auto w = Tensor::from_vector({3, 2, 2}, rand_vec(12, 5));
    CHECK_THROWS(tc::conv1d_feature(Tensor::zeros({5, 1, 3}), spec, w, Tensor()));
    CHECK_THROWS(tc::conv1d_feature(Tensor::zeros({5, 1, 2}), spec, Tensor::zeros({3, 2, 3}), Tensor()));
    CHECK_THROWS(tc::conv1d_feature(Tensor::zeros({5, 1, 2}), spec, w, Tensor::zeros({3})));
  }
}

TEST_CASE("deconv1d_feature hand cases") {
  SUBCASE("stride-2 length doubling, 65 to 130") {
    const tc::ConvSpec spec{24, 8, 4, 2, true};
    const auto x = Tensor::from_vector({65, 1, 8}, rand_vec(65 * 8, 6));
    const auto w = Tensor::from_vector({24, 8, 4}, rand_vec(24 * 8 * 4, 7));
    CHECK(tc::deconv1d_feature(x, spec, w, Tensor()).shape() == tc::Shape{130, 1, 4});
  }
  SUBCASE("one-hot kernel zero-stuffs the input") {
    // With stride 2 and kernel length 4, pad_left = (Li-1)*2 + 4 - 2*Li = 2,
    // halved to 1; the tap t=1 then maps input p to output 2p.
    const tc::ConvSpec spec{4, 1, 1, 2, true};
    std::vector<float> w(4, 0.0f);
    w[1] = 1.0f;
    const auto x = Tensor::from_vector({3, 1, 1}, {5, -2, 7});
    const auto y = tc::deconv1d_feature(x, spec, Tensor::from_vector({4, 1, 1}, w), Tensor());
    REQUIRE(y.shape() == tc::Shape{6, 1, 1});
    CHECK(y.at(0) == 5.0f);
    CHECK(y.at(1) == 0.0f);
    CHECK(y.at(2) == -2.0f);
    CHECK(y.at(3) == 0.0f);
    CHECK(y.at(4) == 7.0f);
    CHECK(y.at(5) == 0.0f);
  }
  SUBCASE("adjointness with the forward convolution") {
    std::mt19937 rng(8);
    for (int rep = 0; rep < 20; ++rep) {
      std::uniform_int_distribution<int> dim(1, 5);
      const int n = dim(rng), ci = dim(rng), co = dim(rng);
      const int stride = (rep % 2) + 1;
      const int li = stride * (dim(rng) + 1);  // divisible by stride
      const int lo = li / stride;

      const auto x = Tensor::from_vector({li, 1, ci}, rand_vec(size_t(li * ci), 100 + rep));
      const auto y = Tensor::from_vector({lo, 1, co}, rand_vec(size_t(lo * co), 200 + rep));
      const auto w = rand_vec(size_t(n * ci * co), 300 + rep);

      const tc::ConvSpec fwd{n, ci, co, stride, false};
      const auto cx = tc::conv1d_feature(x, fwd, Tensor::from_vector({n, ci, co}, w), Tensor());

      // channel-transposed copy of the same weights
      std::vector<float> wt(size_t(n * co * ci));
      for (int t = 0; t < n; ++t)
        for (int a = 0; a < ci; ++a)
          for (int b = 0; b < co; ++b)
            wt[size_t((t * co + b) * ci + a)] = w[size_t((t * ci + a) * co + b)];
      const tc::ConvSpec bwd{n, co, ci, stride, true};
      const auto dy = tc::deconv1d_feature(y, bwd, Tensor::from_vector({n, co, ci}, wt), Tensor());

      double lhs = 0.0, rhs = 0.0;
      for (size_t i = 0; i < cx.numel(); ++i) lhs += double(cx.at(i)) * double(y.at(i));
      for (size_t i = 0; i < x.numel(); ++i) rhs += double(x.at(i)) * double(dy.at(i));
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-4));
    }
  }
}

TEST_CASE("activations") {
  const auto x = Tensor::from_vector({4, 1, 1}, {2.0f, -1.0f, 0.0f, 3.0f});
  SUBCASE("leaky relu") {
    const auto y = tc::leaky_relu(x, 0.3f);
    CHECK(y.at(0) == 2.0f);
    CHECK(y.at(1) == doctest::Approx(-0.3f));
    CHECK(y.at(2) == 0.0f);
    CHECK_THROWS(tc::leaky_relu(x, 1.5f));
  }
  SUBCASE("hard sigmoid") {
    const auto y = tc::hard_sigmoid(Tensor::from_vector({3, 1, 1}, {0.0f, 3.0f, -2.5f}));
    CHECK(y.at(0) == 0.5f);
    CHECK(y.at(1) == 1.0f);
    CHECK(y.at(2) == 0.0f);
  }
}

TEST_CASE("convlstm step") {
  SUBCASE("zero weights and state give zero output") {
    tc::ConvLstmWeightsT<float> w;
    w.kernel_len = 3;
    w.in_channels = 2;
    w.hidden_channels = 2;
    for (int g = 0; g < 4; ++g) {
      w.wx[g] = Tensor::zeros({3, 2, 2});
      w.wh[g] = Tensor::zeros({3, 2, 2});
      w.b[g] = Tensor::zeros({2});
    }
    const auto x = Tensor::from_vector({4, 1, 2}, rand_vec(8, 9));
    const auto h0 = Tensor::zeros({4, 1, 2});
    const auto c0 = Tensor::zeros({4, 1, 2});
    const auto out = tc::convlstm_step(x, h0, c0, w);
    for (size_t i = 0; i < out.h.numel(); ++i) CHECK(out.h.at(i) == 0.0f);
  }
  SUBCASE("saturated forget gate and closed input gate preserve the cell") {
    tc::ConvLstmWeightsT<float> w;
    w.kernel_len = 3;
    w.in_channels = 1;
    w.hidden_channels = 1;
    for (int g = 0; g < 4; ++g) {
      w.wx[g] = Tensor::zeros({3, 1, 1});
      w.wh[g] = Tensor::zeros({3, 1, 1});
      w.b[g] = Tensor::zeros({1});
    }
    w.b[1] = Tensor::from_vector({1}, {100.0f});   // forget gate -> 1
    w.b[0] = Tensor::from_vector({1}, {-100.0f});  // input gate -> 0
    const auto x = Tensor::from_vector({3, 1, 1}, {1.0f, -2.0f, 0.5f});
    const auto c0 = Tensor::from_vector({3, 1, 1}, {0.25f, -0.5f, 0.125f});
    const auto out = tc::convlstm_step(x, Tensor::zeros({3, 1, 1}), c0, w);
    for (size_t i = 0; i < c0.numel(); ++i) CHECK(out.c.at(i) == c0.at(i));
  }
  SUBCASE("scalar case matches a hand-evaluated step") {
    // single unit: feature length 1, one channel, kernel length 1
    tc::ConvLstmWeightsT<float> w;
    w.kernel_len = 1;
    w.in_channels = 1;
    w.hidden_channels = 1;
    const float wx[4] = {0.5f, -0.3f, 0.8f, 1.1f};
    const float wh[4] = {0.2f, 0.4f, -0.6f, 0.9f};
    const float bb[4] = {0.1f, -0.2f, 0.3f, -0.4f};
    for (int g = 0; g < 4; ++g) {
      w.wx[g] = Tensor::from_vector({1, 1, 1}, {wx[g]});
      w.wh[g] = Tensor::from_vector({1, 1, 1}, {wh[g]});
      w.b[g] = Tensor::from_vector({1}, {bb[g]});
    }
    const float xv = 0.7f, hv = -0.25f, cv = 0.6f;
    auto hsig = [](double z) { return std::clamp(0.2 * z + 0.5, 0.0, 1.0); };
    const double i = hsig(wx[0] * xv + wh[0] * hv + bb[0]);
    const double f = hsig(wx[1] * xv + wh[1] * hv + bb[1]);
    const double o = hsig(wx[2] * xv + wh[2] * hv + bb[2]);
    const double g = std::tanh(wx[3] * xv + wh[3] * hv + bb[3]);
    const double c_want = f * cv + i * g;
    const double h_want = o * std::tanh(c_want);

    const auto out = tc::convlstm_step(Tensor::from_vector({1, 1, 1}, {xv}),
                                       Tensor::from_vector({1, 1, 1}, {hv}),
                                       Tensor::from_vector({1, 1, 1}, {cv}), w);
    CHECK(out.c.at(0) == doctest::Approx(c_want).epsilon(1e-6));
    CHECK(out.h.at(0) == doctest::Approx(h_want).epsilon(1e-6));
  }
  SUBCASE("state shape mismatch rejected") {
    tc::ConvLstmWeightsT<float> w;
    w.kernel_len = 3;
    w.in_channels = 2;
    w.hidden_channels = 2;
    for (int g = 0; g < 4; ++g) {
      w.wx[g] = Tensor::zeros({3, 2, 2});
      w.wh[g] = Tensor::zeros({3, 2, 2});
      w.b[g] = Tensor::zeros({2});
    }
    CHECK_THROWS(tc::convlstm_step(Tensor::zeros({4, 1, 2}), Tensor::zeros({5, 1, 2}),
                                   Tensor::zeros({5, 1, 2}), w));
  }
}

TEST_CASE("backward basics") {
  SUBCASE("loss = sum(w * x) gives dL/dw = x") {
    const auto x = Tensor::from_vector({3, 1, 1}, {1.0f, 2.0f, 3.0f});
    const auto w = Tensor::leaf({3, 1, 1}, {0.5f, 0.5f, 0.5f}, true);
    const auto ones = std::make_shared<const std::vector<float>>(3, 1.0f);
    auto loss = tc::dot_const(tc::mul(w, x), ones);
    tc::backward(loss);
    CHECK(w.grad()[0] == 1.0f);
    CHECK(w.grad()[1] == 2.0f);
    CHECK(w.grad()[2] == 3.0f);
  }
  SUBCASE("parameters off the loss path keep zero gradients") {
    const auto used = Tensor::leaf({2, 1, 1}, {1.0f, 1.0f}, true);
    const auto unused = Tensor::leaf({2, 1, 1}, {1.0f, 1.0f}, true);
    const auto ones = std::make_shared<const std::vector<float>>(2, 1.0f);
    auto loss = tc::dot_const(used, ones);
    tc::backward(loss);
    CHECK(unused.grad()[0] == 0.0f);
    CHECK(unused.grad()[1] == 0.0f);
  }
  SUBCASE("double backward on one tape is an error") {
    const auto w = Tensor::leaf({2, 1, 1}, {1.0f, 2.0f}, true);
    const auto ones = std::make_shared<const std::vector<float>>(2, 1.0f);
    auto loss = tc::dot_const(tc::mul(w, w), ones);
    tc::backward(loss);
    CHECK_THROWS(tc::backward(loss));
  }
  SUBCASE("non-scalar loss rejected") {
    const auto w = Tensor::leaf({2, 1, 1}, {1.0f, 2.0f}, true);
    auto y = tc::mul(w, w);
    CHECK_THROWS(tc::backward(y));
  }
  SUBCASE("gradients accumulate when a leaf is used twice") {
    const auto w = Tensor::leaf({1}, {3.0f}, true);
    const auto one = std::make_shared<const std::vector<float>>(1, 1.0f);
    auto loss = tc::dot_const(tc::add(w, w), one);
    tc::backward(loss);
    CHECK(w.grad()[0] == 2.0f);
  }
}

TEST_CASE("finite-value validation switch") {
  tc::set_finite_check(true);
  const auto big = Tensor::from_vector({1}, {3e38f});
  CHECK_THROWS(tc::scale(big, 10.0f));  // overflows to inf
  tc::set_finite_check(false);
  CHECK_NOTHROW(tc::scale(big, 10.0f));
}

TEST_CASE("adam update") {
  SUBCASE("zero gradient leaves parameters unchanged") {
    tc::ParamSet ps;
    ps.add("w", {3}, {1.0f, -2.0f, 0.5f});
    tc::adam_update<float>(ps, {std::vector<float>(3, 0.0f)}, 0.1f);
    CHECK(ps.at("w").value[0] == 1.0f);
    CHECK(ps.at("w").value[1] == -2.0f);
    CHECK(ps.at("w").step_count == 1);
  }
  SUBCASE("first step moves by -lr * sign(g) up to eps") {
    tc::ParamSet ps;
    ps.add("w", {2}, {0.0f, 0.0f});
    tc::adam_update<float>(ps, {{0.5f, -2.0f}}, 0.01f);
    CHECK(ps.at("w").value[0] == doctest::Approx(-0.01).epsilon(1e-4));
    CHECK(ps.at("w").value[1] == doctest::Approx(0.01).epsilon(1e-4));
  }
  SUBCASE("m and v follow the scalar recurrence") {
    tc::ParamSet ps;
    ps.add("w", {1}, {1.0f});
    const float grads[4] = {0.3f, -0.7f, 0.1f, 0.9f};
    double m = 0.0, v = 0.0, x = 1.0;
    for (int t = 0; t < 4; ++t) {
      tc::adam_update<float>(ps, {{grads[t]}}, 0.05f);
      m = 0.9 * m + 0.1 * grads[t];
      v = 0.999 * v + 0.001 * double(grads[t]) * grads[t];
      const double mhat = m / (1.0 - std::pow(0.9, t + 1));
      const double vhat = v / (1.0 - std::pow(0.999, t + 1));
      x -= 0.05 * mhat / (std::sqrt(vhat) + 1e-8);
      CHECK(ps.at("w").adam_m[0] == doctest::Approx(m).epsilon(1e-5));
      CHECK(ps.at("w").adam_v[0] == doctest::Approx(v).epsilon(1e-5));
      CHECK(ps.at("w").value[0] == doctest::Approx(x).epsilon(1e-5));
    }
  }
  SUBCASE("non-finite gradient rejected") {
    tc::ParamSet ps;
    ps.add("w", {1}, {1.0f});
    CHECK_THROWS(tc::adam_update<float>(ps, {{std::nanf("")}}, 0.1f));
  }
}

TEST_CASE("param set and binding") {
  tc::ParamSet ps;
  ps.add("a", {2}, {1.0f, 2.0f});
  ps.add("b", {1}, {3.0f});
  CHECK_THROWS(ps.add("a", {2}, {}));
  CHECK(ps.total_values() == 3);

  auto bound = tc::BoundParams<float>::bind(ps, true);
  CHECK(bound["a"].at(1) == 2.0f);
  CHECK_THROWS(bound["missing"]);

  const auto one = std::make_shared<const std::vector<float>>(1, 1.0f);
  auto loss = tc::dot_const(bound["b"], one);
  tc::backward(loss);
  const auto grads = bound.grads();
  REQUIRE(grads.size() == 2);
  CHECK(grads[0][0] == 0.0f);  // "a" unused
  CHECK(grads[1][0] == 1.0f);
}

TEST_CASE("forward determinism under a fixed seed") {
  std::mt19937 rng1(42), rng2(42);
  const auto w1 = tc::glorot_uniform<float>({24, 4, 8}, 96, 192, rng1);
  const auto w2 = tc::glorot_uniform<float>({24, 4, 8}, 96, 192, rng2);
  CHECK(w1 == w2);

  const tc::ConvSpec spec{24, 4, 8, 2, false};
  const auto x = Tensor::from_vector({64, 1, 4}, rand_vec(256, 77));
  const auto wt = Tensor::from_vector({24, 4, 8}, w1);
  const auto y1 = tc::conv1d_feature(x, spec, wt, Tensor());
  const auto y2 = tc::conv1d_feature(x, spec, wt, Tensor());
  CHECK(y1.data() == y2.data());
}
