#include "eccnn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "eccnn/conditioning.hpp"
#include "eccnn/edgenet.hpp"
#include "eccnn/random.hpp"
#include "eccnn/segnet.hpp"

ECCNN_BEGIN_NAMESPACE

double gradient_error(const std::function<Tensor()>& loss, const std::vector<Tensor>& leaves,
                      const GradcheckOptions& options) {
  std::vector<Tensor> probe = leaves;
  for (auto& t : probe) t.clear_grad();
  backward(loss());

  Rng rng(options.seed);
  const double h = options.step;
  double worst = 0;
  for (auto& leaf : probe) {
    const std::size_t n = leaf.numel();
    std::vector<std::size_t> index;
    if (options.max_entries <= 0 || static_cast<std::size_t>(options.max_entries) >= n) {
      for (std::size_t i = 0; i < n; ++i) index.push_back(i);
    } else {
      for (int i = 0; i < options.max_entries; ++i) index.push_back(rng.uniform_int(n));
    }
    const std::vector<Real> analytic = leaf.has_grad()
                                           ? std::vector<Real>(leaf.grad().begin(), leaf.grad().end())
                                           : std::vector<Real>(n, Real(0));
    double diff2 = 0, a2 = 0, f2 = 0;
    auto data = leaf.mutable_data();
    for (std::size_t i : index) {
      const Real orig = data[i];
      double plus = 0, minus = 0;
      {
        NoGradGuard guard;
        data[i] = static_cast<Real>(orig + h);
        plus = static_cast<double>(loss().item());
        data[i] = static_cast<Real>(orig - h);
        minus = static_cast<double>(loss().item());
        data[i] = orig;
      }
      const double fd = (plus - minus) / (2 * h);
      const double a = static_cast<double>(analytic[i]);
      diff2 += (a - fd) * (a - fd);
      a2 += a * a;
      f2 += fd * fd;
    }
    const double scale = std::sqrt(std::max(a2, f2));
    if (scale > 1e-12) worst = std::max(worst, std::sqrt(diff2) / scale);
  }
  for (auto& t : probe) t.clear_grad();
  return worst;
}

Tensor random_projection(const Tensor& y, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Real> r(y.numel());
  for (auto& v : r) v = static_cast<Real>(rng.uniform(-1.0, 1.0));
  return sum(mul(y, Tensor::from_data(y.shape(), std::move(r))));
}

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<Real> v(shape.numel());
  for (auto& x : v) x = static_cast<Real>(rng.uniform(lo, hi));
  return Tensor::from_data(shape, std::move(v), true);
}

// Values bounded away from zero so relu kinks stay outside the FD stencil.
Tensor kink_free_tensor(Shape shape, Rng& rng) {
  std::vector<Real> v(shape.numel());
  for (auto& x : v) {
    const double mag = rng.uniform(0.05, 1.0);
    x = static_cast<Real>(rng.bernoulli(0.5) ? mag : -mag);
  }
  return Tensor::from_data(shape, std::move(v), true);
}

std::vector<Tensor> leaves_of(const NamedParameters& params) {
  std::vector<Tensor> out;
  for (const auto& [name, p] : params) out.push_back(p.value());
  return out;
}

void randomize(BatchNormLayer& bn, Rng& rng) {
  for (auto& v : bn.scale.data()) v = static_cast<Real>(rng.uniform(0.5, 1.5));
  for (auto& v : bn.shift.data()) v = static_cast<Real>(rng.uniform(-0.5, 0.5));
}

std::vector<Tensor> join(std::vector<Tensor> a, const std::vector<Tensor>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

std::vector<GradcheckResult> gradcheck_suite(std::uint64_t seed) {
  constexpr double kLayerTol = 1e-4;
  constexpr double kModelTol = 1e-3;
  Rng rng(seed);
  std::vector<GradcheckResult> out;
  auto record = [&](const std::string& name, double err, double tol) { out.push_back({name, err, tol}); };
  const std::uint64_t proj = derive_seed(seed, "projection");

  {
    Tensor x = random_tensor({2, 3, 7, 7}, rng), w = random_tensor({4, 3, 3, 3}, rng), b = random_tensor({4, 1, 1, 1}, rng);
    record("conv2d_3x3", gradient_error([&] { return random_projection(conv2d(x, w, b, {1, 1, 1}), proj); }, {x, w, b}), kLayerTol);
  }
  {
    Tensor x = random_tensor({2, 2, 9, 8}, rng), w = random_tensor({3, 2, 3, 3}, rng);
    record("conv2d_dilated_strided",
           gradient_error([&] { return random_projection(conv2d(x, w, Tensor{}, {2, 2, 2}), proj); }, {x, w}), kLayerTol);
  }
  {
    Tensor x = random_tensor({2, 3, 5, 5}, rng), w = random_tensor({4, 3, 1, 1}, rng), b = random_tensor({4, 1, 1, 1}, rng);
    record("conv2d_1x1", gradient_error([&] { return random_projection(conv2d(x, w, b, {1, 0, 1}), proj); }, {x, w, b}), kLayerTol);
  }
  {
    Tensor x = random_tensor({3, 4, 5, 5}, rng);
    BatchNormLayer bn = BatchNormLayer::create(4);
    randomize(bn, rng);
    record("batch_norm_train",
           gradient_error([&] { return random_projection(bn.forward(x, Mode::train), proj); },
                          {x, bn.scale.value(), bn.shift.value()}),
           kLayerTol);
    record("batch_norm_eval",
           gradient_error([&] { return random_projection(bn.forward(x, Mode::eval), proj); },
                          {x, bn.scale.value(), bn.shift.value()}),
           kLayerTol);
  }
  {
    Tensor x = kink_free_tensor({2, 3, 4, 4}, rng);
    record("relu", gradient_error([&] { return random_projection(relu(x), proj); }, {x}), kLayerTol);
    Tensor y = random_tensor({2, 3, 4, 4}, rng, -3, 3);
    record("sigmoid", gradient_error([&] { return random_projection(sigmoid(y), proj); }, {y}), kLayerTol);
  }
  {
    Tensor up = random_tensor({2, 2, 5, 6}, rng), down = random_tensor({1, 3, 9, 8}, rng);
    record("bilinear_resize_up", gradient_error([&] { return random_projection(bilinear_resize(up, 11, 9), proj); }, {up}), kLayerTol);
    record("bilinear_resize_down",
           gradient_error([&] { return random_projection(bilinear_resize(down, 4, 5), proj); }, {down}), kLayerTol);
  }
  {
    Tensor x = random_tensor({2, 3, 4, 4}, rng);
    Tensor g = random_tensor({2, 3, 1, 1}, rng), b = random_tensor({1, 3, 1, 1}, rng);
    record("film", gradient_error([&] { return random_projection(film(x, g, b), proj); }, {x, g, b}), kLayerTol);
    Tensor gs = random_tensor({2, 3, 4, 4}, rng), bs = random_tensor({2, 3, 4, 4}, rng);
    record("sft", gradient_error([&] { return random_projection(sft(x, gs, bs), proj); }, {x, gs, bs}), kLayerTol);
    record("gft_gate", gradient_error([&] {
             const AffineParams p = gft_gate(gs, bs);
             return add(random_projection(p.gamma_gated, proj), random_projection(p.beta_gated, proj + 1));
           }, {gs, bs}), kLayerTol);
  }
  {
    Tensor x = random_tensor({2, 4, 5, 5}, rng), z_hat = random_tensor({2, 4, 5, 5}, rng, 0, 1);
    ConvLayer gb = ConvLayer::create(4, 4, 3, {1, 1, 1}, true, seed, "check.gamma");
    ConvLayer bb = ConvLayer::create(4, 4, 3, {1, 1, 1}, true, seed, "check.beta");
    const std::vector<Tensor> leaves{x, z_hat, gb.weight.value(), gb.bias.value(), bb.weight.value(), bb.bias.value()};
    record("gft_apply", gradient_error([&] { return random_projection(gft_apply(x, z_hat, gb, bb), proj); }, leaves), kLayerTol);
  }
  {
    Tensor z = random_tensor({2, 1, 9, 9}, rng, 0, 1);
    FeatureModulation fm = FeatureModulation::create(1, 6, seed, "check.fm");
    NamedParameters params;
    fm.collect("fm", params);
    record("feature_modulation",
           gradient_error([&] { return random_projection(fm.forward(z, 5, 5), proj); }, join({z}, leaves_of(params))), kLayerTol);
  }
  {
    Tensor x = random_tensor({2, 4, 8, 8}, rng);
    const Tensor z = random_tensor({2, 1, 4, 4}, rng, 0, 1).detach();
    ResidualBlock block = ResidualBlock::create(4, 6, 2, 1, seed, "check.block");
    block.attach_conditioning(GftLayer::create(6, 1, GateMode::sigmoid, seed, "check.block.gft"));
    NamedParameters params;
    block.collect("block", params);
    block.collect_conditioning("block.gft", params);
    for (auto& [name, p] : params) {
      if (name.find("bn") != std::string::npos) {
        for (auto& v : p.data()) v = static_cast<Real>(v + rng.uniform(-0.3, 0.3));
      }
    }
    record("ec_block", gradient_error([&] { return random_projection(block.forward(x, &z, Mode::train), proj); },
                                      join({x}, leaves_of(params))),
           kLayerTol);
  }
  {
    Tensor x = random_tensor({2, 5, 6, 6}, rng);
    Aspp aspp = Aspp::create(5, 4, {1, 2}, seed, "check.aspp");
    NamedParameters params;
    aspp.collect("aspp", params);
    record("aspp", gradient_error([&] { return random_projection(aspp.forward(x, Mode::train), proj); },
                                  join({x}, leaves_of(params)), {1e-5, 24, seed}),
           kLayerTol);
  }
  {
    Tensor logits = random_tensor({2, 3, 3, 3}, rng, -2, 2);
    LabelMap labels(2, 3, 3);
    for (auto& v : labels.values) v = static_cast<int>(rng.uniform_int(3));
    labels.values[4] = kIgnoreIndex;
    record("cross_entropy", gradient_error([&] { return cross_entropy_loss(logits, labels); }, {logits}), kLayerTol);
    Tensor pooled = random_tensor({2, 3, 4, 5}, rng);
    record("global_avg_pool", gradient_error([&] { return random_projection(global_avg_pool(pooled), proj); }, {pooled}), kLayerTol);
  }
  {
    ModelConfig cfg = model_preset("mini");
    cfg.num_classes = 3;
    cfg.seed = seed;
    cfg.set_gft_stages({"conv2_x", "conv3_x", "conv4_x"});
    Model model = Model::build(cfg);
    Tensor image = random_tensor({2, 1, 16, 16}, rng, 0, 1).detach();
    const EdgeStack edges = hierarchical_edges(image);
    LabelMap labels(2, 16, 16);
    for (auto& v : labels.values) v = static_cast<int>(rng.uniform_int(3));
    const NamedParameters params = model.named_parameters();
    record("full_model_16x16",
           gradient_error([&] { return cross_entropy_loss(model.forward(image, edges, Mode::train), labels); },
                          leaves_of(params), {1e-5, 4, seed}),
           kModelTol);
  }
  return out;
}

std::string gradcheck_table(const std::vector<GradcheckResult>& results) {
  std::ostringstream os;
  os << "layer,rel_error,tolerance,status\n";
  char buf[64];
  for (const auto& r : results) {
    std::snprintf(buf, sizeof buf, "%.3e,%.0e,", r.error, r.tolerance);
    os << r.layer << "," << buf << (r.pass() ? "pass" : "FAIL") << "\n";
  }
  return os.str();
}

ECCNN_END_NAMESPACE
