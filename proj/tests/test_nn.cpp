// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "zkd/io.hpp"
#include "zkd/nn.hpp"
#include "zkd/props.hpp"
#include "zkd/rng.hpp"

namespace zkd {
namespace {

namespace fs = std::filesystem;

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("zkd_nn_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// Straight-line re-implementation of the forward pass.
std::vector<double> reference_forward(const Mlp& net, std::vector<double> x) {
  const auto& layers = net.layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Layer& l = layers[i];
    std::vector<double> y(l.out);
    for (std::size_t r = 0; r < l.out; ++r) {
      double s = l.b[r];
      for (std::size_t c = 0; c < l.in; ++c) s += l.w[r * l.in + c] * x[c];
      if (i + 1 < layers.size()) {
        s = net.spec().activation == Activation::ReLU ? std::max(s, 0.0) : std::tanh(s);
      }
      y[r] = s;
    }
    x = std::move(y);
  }
  return x;
}

std::vector<double> random_vector(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

Mlp random_net(Rng& rng, Activation act) {
  MlpSpec spec{{2 + rng.below(4), 2 + rng.below(5), 2 + rng.below(5), 2 + rng.below(4)},
               act, rng.next_u64()};
  Mlp net = init(spec);
  for (auto& l : net.layers()) {
    for (double& b : l.b) b = 0.1 * rng.normal();
  }
  return net;
}

TEST(MlpSpec, Validation) {
  EXPECT_THROW((MlpSpec{{4}, Activation::ReLU, 0}.validate()), InvalidParameter);
  EXPECT_THROW((MlpSpec{{4, 0, 3}, Activation::ReLU, 0}.validate()), InvalidParameter);
  EXPECT_NO_THROW((MlpSpec{{4, 3}, Activation::Tanh, 0}.validate()));
  EXPECT_EQ(activation_from_string("tanh"), Activation::Tanh);
  EXPECT_THROW(activation_from_string("sigmoid"), InvalidParameter);
}

TEST(Init, ShapesAndZeroBias) {
  const Mlp net = init({{2, 3}, Activation::ReLU, 1});
  ASSERT_EQ(net.layers().size(), 1u);
  const Layer& l = net.layers()[0];
  EXPECT_EQ(l.out, 3u);
  EXPECT_EQ(l.in, 2u);
  EXPECT_EQ(l.w.size(), 6u);
  EXPECT_EQ(l.b, std::vector<double>(3, 0.0));
  const double limit = std::sqrt(6.0 / 5.0);
  for (double w : l.w) EXPECT_LE(std::abs(w), limit);
}

TEST(Init, DeterministicPerSeed) {
  const MlpSpec spec{{5, 7, 3}, Activation::Tanh, 42};
  EXPECT_EQ(init(spec), init(spec));
  MlpSpec other = spec;
  other.seed = 43;
  EXPECT_NE(init(spec).layers()[0].w, init(other).layers()[0].w);
}

TEST(Forward, IdentityLayer) {
  Mlp net({{3, 3}, Activation::ReLU, 0});
  for (std::size_t k = 0; k < 3; ++k) net.layers()[0].weight(k, k) = 1.0;
  const std::vector<double> x{0.5, -2.0, 7.0};
  const auto z = forward(net, x);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(z[k], x[k]);
}

TEST(Forward, ZeroNetGivesUniformSoftmax) {
  const Mlp net({{4, 6, 5}, Activation::ReLU, 0});
  const auto z = forward(net, std::vector<double>{1.0, 2.0, 3.0, 4.0});
  for (double x : z) EXPECT_EQ(x, 0.0);
  for (double p : softmax_t(z, 1.0)) EXPECT_DOUBLE_EQ(p, 0.2);
}

TEST(Forward, MatchesReferenceArithmetic) {
  Rng rng(99);
  for (int i = 0; i < 20; ++i) {
    const Mlp net = random_net(rng, i % 2 ? Activation::ReLU : Activation::Tanh);
    const auto x = random_vector(rng, net.input_dim());
    const auto z = forward(net, x);
    const auto ref = reference_forward(net, x);
    for (std::size_t k = 0; k < ref.size(); ++k) EXPECT_NEAR(z[k], ref[k], 1e-12);
  }
}

TEST(Forward, WrongInputLength) {
  const Mlp net = init({{3, 2}, Activation::ReLU, 0});
  EXPECT_THROW(forward(net, std::vector<double>{1.0, 2.0}), ShapeError);
}

TEST(Backward, ZeroUpstreamGivesZeroGradients) {
  Rng rng(4);
  const Mlp net = random_net(rng, Activation::Tanh);
  const auto g = backward(net, random_vector(rng, net.input_dim()),
                          std::vector<double>(net.output_dim(), 0.0));
  for (const auto& l : g.layers) {
    for (double x : l.w) EXPECT_EQ(x, 0.0);
    for (double x : l.b) EXPECT_EQ(x, 0.0);
  }
}

TEST(Backward, SingleLayerOuterProduct) {
  const Mlp net = init({{3, 2}, Activation::ReLU, 5});
  const std::vector<double> x{1.0, -2.0, 0.5};
  const std::vector<double> d{0.3, -1.5};
  const auto g = backward(net, x, d);
  for (std::size_t r = 0; r < 2; ++r) {
    EXPECT_EQ(g.layers[0].b[r], d[r]);
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(g.layers[0].weight(r, c), d[r] * x[c]);
  }
}

TEST(Backward, MatchesFiniteDifferences) {
  Rng rng(2718);
  for (int i = 0; i < 50; ++i) {
    const Mlp net = random_net(rng, i % 2 ? Activation::ReLU : Activation::Tanh);
    const auto x = random_vector(rng, net.input_dim());
    const auto d = random_vector(rng, net.output_dim());
    const auto g = backward(net, x, d);
    std::vector<double> analytic, fd;
    for (std::size_t li = 0; li < net.layers().size(); ++li) {
      for (int which = 0; which < 2; ++which) {
        const std::size_t n = which ? net.layers()[li].b.size() : net.layers()[li].w.size();
        for (std::size_t j = 0; j < n; ++j) {
          Mlp probe = net;
          auto& slot = which ? probe.layers()[li].b[j] : probe.layers()[li].w[j];
          const double orig = slot;
          auto objective = [&] {
            const auto z = forward(probe, x);
            double s = 0.0;
            for (std::size_t k = 0; k < d.size(); ++k) s += d[k] * z[k];
            return s;
          };
          slot = orig + 1e-5;
          const double up = objective();
          slot = orig - 1e-5;
          const double down = objective();
          fd.push_back((up - down) / 2e-5);
          analytic.push_back(which ? g.layers[li].b[j] : g.layers[li].w[j]);
        }
      }
    }
    EXPECT_LT(props::relative_error(analytic, fd), 1e-5) << "net " << i;
  }
}

TEST(SgdStep, Updates) {
  Mlp net = init({{2, 2}, Activation::ReLU, 3});
  const Mlp before = net;
  MlpGradients g = net.zero_gradients();
  g.layers[0].w[1] = 2.0;
  sgd_step(net, g, 0.0);
  EXPECT_EQ(net, before);
  sgd_step(net, g, 0.5);
  EXPECT_DOUBLE_EQ(net.layers()[0].w[1], before.layers()[0].w[1] - 1.0);
  EXPECT_EQ(net.layers()[0].w[0], before.layers()[0].w[0]);
  EXPECT_THROW(sgd_step(net, g, -0.1), InvalidParameter);
  MlpGradients wrong = init({{3, 2}, Activation::ReLU, 0}).zero_gradients();
  EXPECT_THROW(sgd_step(net, wrong, 0.1), ShapeError);
}

TEST(SgdStep, ConvexProblemDecreasesMonotonically) {
  // Softmax regression: convex in the single layer's parameters.
  Rng rng(12);
  std::vector<std::vector<double>> xs;
  std::vector<std::size_t> ys;
  for (int n = 0; n < 30; ++n) {
    xs.push_back(random_vector(rng, 3));
    ys.push_back(static_cast<std::size_t>(rng.below(3)));
  }
  Mlp net = init({{3, 3}, Activation::ReLU, 1});
  auto loss_and_grad = [&](MlpGradients* grads) {
    double loss = 0.0;
    for (std::size_t n = 0; n < xs.size(); ++n) {
      const auto z = forward(net, xs[n]);
      auto p = softmax_t(z, 1.0).vec();
      loss -= std::log(p[ys[n]]);
      p[ys[n]] -= 1.0;
      if (grads) {
        const auto g = backward(net, xs[n], p);
        for (std::size_t j = 0; j < g.layers[0].w.size(); ++j) grads->layers[0].w[j] += g.layers[0].w[j];
        for (std::size_t j = 0; j < g.layers[0].b.size(); ++j) grads->layers[0].b[j] += g.layers[0].b[j];
      }
    }
    return loss;
  };
  double prev = loss_and_grad(nullptr);
  for (int step = 0; step < 10; ++step) {
    MlpGradients g = net.zero_gradients();
    loss_and_grad(&g);
    g.scale(1.0 / static_cast<double>(xs.size()));
    sgd_step(net, g, 0.1);
    const double cur = loss_and_grad(nullptr);
    EXPECT_LT(cur, prev) << "step " << step;
    prev = cur;
  }
}

TEST(MomentumSgd, ZeroMomentumMatchesPlainSgd) {
  Mlp a = init({{3, 4, 2}, Activation::Tanh, 8});
  Mlp b = a;
  MomentumSgd opt(b, 0.0);
  Rng rng(1);
  for (int i = 0; i < 5; ++i) {
    const auto x = random_vector(rng, 3);
    const auto d = random_vector(rng, 2);
    sgd_step(a, backward(a, x, d), 0.05);
    opt.step(b, backward(b, x, d), 0.05);
  }
  EXPECT_EQ(a, b);
  EXPECT_THROW(MomentumSgd(a, 1.0), InvalidParameter);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const fs::path dir = temp_dir("roundtrip");
  Rng rng(31);
  const Mlp net = random_net(rng, Activation::Tanh);
  save_checkpoint(net, dir / "net.json");
  const Mlp back = load_checkpoint(dir / "net.json");
  EXPECT_EQ(back, net);
  const auto j = io::Json::parse(io::read_file(dir / "net.json"));
  EXPECT_EQ(j.at("format_version"), 1);
  EXPECT_EQ(j.at("layers")[0].at("w").size(), net.layers()[0].out);
}

TEST(Checkpoint, TruncatedFileIsMalformed) {
  const fs::path dir = temp_dir("truncated");
  save_checkpoint(init({{4, 3, 2}, Activation::ReLU, 2}), dir / "net.json");
  const std::string text = io::read_file(dir / "net.json");
  io::write_file(dir / "cut.json", text.substr(0, text.size() / 2));
  EXPECT_THROW(load_checkpoint(dir / "cut.json"), MalformedCheckpoint);
}

TEST(Checkpoint, WrongVersionAndShape) {
  const Mlp net = init({{2, 2}, Activation::ReLU, 0});
  auto j = checkpoint_to_json(net);
  j["format_version"] = 2;
  EXPECT_THROW(checkpoint_from_json(j), CheckpointVersionError);
  j = checkpoint_to_json(net);
  j["layers"][0]["b"].push_back(0.0);
  EXPECT_THROW(checkpoint_from_json(j), MalformedCheckpoint);
  j = checkpoint_to_json(net);
  j["spec"]["activation"] = "swish";
  EXPECT_THROW(checkpoint_from_json(j), MalformedCheckpoint);
  EXPECT_THROW(load_checkpoint(temp_dir("missing") / "none.json"), IoError);
}

}  // namespace
}  // namespace zkd
