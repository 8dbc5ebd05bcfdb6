#include <algorithm>
#include <cmath>

#include "eccnn/errors.hpp"
#include "eccnn/ops.hpp"

ECCNN_BEGIN_NAMESPACE

namespace {

inline Real logistic(Real v) {
  // Split by sign so exp never overflows.
  if (v >= 0) {
    const Real e = std::exp(-v);
    return Real(1) / (Real(1) + e);
  }
  const Real e = std::exp(v);
  return e / (Real(1) + e);
}

enum class Broadcast { none, per_channel };

Broadcast classify_operands(const Shape& a, const Shape& b) {
  if (a == b) return Broadcast::none;
  if (b.c == a.c && b.h == 1 && b.w == 1 && (b.n == 1 || b.n == a.n)) {
    return Broadcast::per_channel;
  }
  throw ShapeError("elementwise: cannot broadcast " + b.str() + " onto " + a.str());
}

}  // namespace

Tensor activation(const Tensor& x, Activation kind) {
  std::vector<Real> out(x.numel());
  const auto in = x.data();
  if (kind == Activation::relu) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[i] > 0 ? in[i] : Real(0);
    return make_op_result(x.shape(), std::move(out), "relu", {x}, [](detail::Node& self) {
      auto& xn = *self.inputs[0];
      auto& dx = xn.grad_buffer();
      for (std::size_t i = 0; i < dx.size(); ++i) {
        if (xn.data[i] > 0) dx[i] += self.grad[i];
      }
    });
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = logistic(in[i]);
  return make_op_result(x.shape(), std::move(out), "sigmoid", {x}, [](detail::Node& self) {
    auto& dx = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < dx.size(); ++i) {
      const Real s = self.data[i];
      dx[i] += self.grad[i] * s * (Real(1) - s);
    }
  });
}

Tensor elementwise(const Tensor& a, const Tensor& b, Elementwise op) {
  const Shape as = a.shape();
  const Shape bs = b.shape();
  const Broadcast mode = classify_operands(as, bs);
  const auto av = a.data();
  const auto bv = b.data();
  std::vector<Real> out(as.numel());
  const std::size_t plane = as.plane();

  // Index of the b operand feeding output element (n, c, *, *).
  auto b_index = [&](int n, int c) -> std::size_t {
    return static_cast<std::size_t>(bs.n == 1 ? 0 : n) * bs.c + c;
  };

  if (mode == Broadcast::none) {
    if (op == Elementwise::mul) {
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
    } else {
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
    }
  } else {
    for (int n = 0; n < as.n; ++n) {
      for (int c = 0; c < as.c; ++c) {
        const Real bval = bv[b_index(n, c)];
        const std::size_t base = (static_cast<std::size_t>(n) * as.c + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) {
          out[base + i] = op == Elementwise::mul ? av[base + i] * bval : av[base + i] + bval;
        }
      }
    }
  }

  const char* name = op == Elementwise::mul ? "mul" : "add";
  return make_op_result(
      as, std::move(out), name, {a, b}, [mode, op, as, bs, plane](detail::Node& self) {
        auto& an = *self.inputs[0];
        auto& bn = *self.inputs[1];
        const auto& g = self.grad;
        if (mode == Broadcast::none) {
          if (an.requires_grad) {
            auto& da = an.grad_buffer();
            if (op == Elementwise::mul) {
              for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * bn.data[i];
            } else {
              for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i];
            }
          }
          if (bn.requires_grad) {
            auto& db = bn.grad_buffer();
            if (op == Elementwise::mul) {
              for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i] * an.data[i];
            } else {
              for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i];
            }
          }
          return;
        }
        for (int n = 0; n < as.n; ++n) {
          for (int c = 0; c < as.c; ++c) {
            const std::size_t bi = static_cast<std::size_t>(bs.n == 1 ? 0 : n) * bs.c + c;
            const std::size_t base = (static_cast<std::size_t>(n) * as.c + c) * plane;
            const Real bval = bn.data[bi];
            if (an.requires_grad) {
              auto& da = an.grad_buffer();
              if (op == Elementwise::mul) {
                for (std::size_t i = 0; i < plane; ++i) da[base + i] += g[base + i] * bval;
              } else {
                for (std::size_t i = 0; i < plane; ++i) da[base + i] += g[base + i];
              }
            }
            if (bn.requires_grad) {
              Real acc = 0;
              if (op == Elementwise::mul) {
                for (std::size_t i = 0; i < plane; ++i) acc += g[base + i] * an.data[base + i];
              } else {
                for (std::size_t i = 0; i < plane; ++i) acc += g[base + i];
              }
              bn.grad_buffer()[bi] += acc;
            }
          }
        }
      });
}

Tensor batch_norm(const Tensor& x, const Tensor& scale, const Tensor& shift,
                  RunningStats& stats, Mode mode) {
  const Shape s = x.shape();
  if (scale.numel() != static_cast<std::size_t>(s.c) ||
      shift.numel() != static_cast<std::size_t>(s.c)) {
    throw ShapeError("batch_norm: scale/shift length must equal channel count " +
                     std::to_string(s.c));
  }
  if (mode == Mode::eval && !stats.initialized) {
    throw ValidationError("batch_norm: eval mode requires initialized running statistics");
  }
  const std::size_t plane = s.plane();
  const std::size_t count = plane * s.n;
  const auto xv = x.data();
  const auto gamma = scale.data();
  const auto beta = shift.data();
  const Real eps = static_cast<Real>(kBatchNormEps);

  std::vector<Real> mean(s.c), invstd(s.c);
  if (mode == Mode::train) {
    std::vector<Real> var(s.c);
    for (int c = 0; c < s.c; ++c) {
      double acc = 0;
      for (int n = 0; n < s.n; ++n) {
        const Real* p = xv.data() + (static_cast<std::size_t>(n) * s.c + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) acc += p[i];
      }
      const double mu = acc / static_cast<double>(count);
      double sq = 0;
      for (int n = 0; n < s.n; ++n) {
        const Real* p = xv.data() + (static_cast<std::size_t>(n) * s.c + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) {
          const double d = p[i] - mu;
          sq += d * d;
        }
      }
      mean[c] = static_cast<Real>(mu);
      var[c] = static_cast<Real>(sq / static_cast<double>(count));
      invstd[c] = static_cast<Real>(1.0 / std::sqrt(sq / static_cast<double>(count) + kBatchNormEps));
    }
    const Real unbias = count > 1 ? static_cast<Real>(count) / static_cast<Real>(count - 1) : Real(1);
    if (!stats.initialized) {
      stats.mean = mean;
      stats.var.resize(s.c);
      for (int c = 0; c < s.c; ++c) stats.var[c] = var[c] * unbias;
      stats.initialized = true;
    } else {
      const Real m = static_cast<Real>(kBatchNormMomentum);
      for (int c = 0; c < s.c; ++c) {
        stats.mean[c] = (Real(1) - m) * stats.mean[c] + m * mean[c];
        stats.var[c] = (Real(1) - m) * stats.var[c] + m * var[c] * unbias;
      }
    }
  } else {
    if (stats.mean.size() != static_cast<std::size_t>(s.c)) {
      throw ShapeError("batch_norm: running statistics have wrong channel count");
    }
    for (int c = 0; c < s.c; ++c) {
      mean[c] = stats.mean[c];
      invstd[c] = Real(1) / std::sqrt(stats.var[c] + eps);
    }
  }

  std::vector<Real> out(s.numel());
  auto xhat = std::make_shared<std::vector<Real>>(s.numel());
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const std::size_t base = (static_cast<std::size_t>(n) * s.c + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        const Real h = (xv[base + i] - mean[c]) * invstd[c];
        (*xhat)[base + i] = h;
        out[base + i] = gamma[c] * h + beta[c];
      }
    }
  }

  return make_op_result(
      s, std::move(out), "batch_norm", {x, scale, shift},
      [s, plane, count, mode, xhat, invstd](detail::Node& self) {
        auto& xn = *self.inputs[0];
        auto& gn = *self.inputs[1];
        auto& bn = *self.inputs[2];
        const auto& g = self.grad;
        for (int c = 0; c < s.c; ++c) {
          double sum_g = 0, sum_gh = 0;
          for (int n = 0; n < s.n; ++n) {
            const std::size_t base = (static_cast<std::size_t>(n) * s.c + c) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
              sum_g += g[base + i];
              sum_gh += g[base + i] * (*xhat)[base + i];
            }
          }
          if (gn.requires_grad) gn.grad_buffer()[c] += static_cast<Real>(sum_gh);
          if (bn.requires_grad) bn.grad_buffer()[c] += static_cast<Real>(sum_g);
          if (!xn.requires_grad) continue;
          auto& dx = xn.grad_buffer();
          const Real gamma = gn.data[c];
          if (mode == Mode::eval) {
            for (int n = 0; n < s.n; ++n) {
              const std::size_t base = (static_cast<std::size_t>(n) * s.c + c) * plane;
              for (std::size_t i = 0; i < plane; ++i) dx[base + i] += g[base + i] * gamma * invstd[c];
            }
            continue;
          }
          const Real inv_m = Real(1) / static_cast<Real>(count);
          const Real mg = static_cast<Real>(sum_g) * inv_m;
          const Real mgh = static_cast<Real>(sum_gh) * inv_m;
          for (int n = 0; n < s.n; ++n) {
            const std::size_t base = (static_cast<std::size_t>(n) * s.c + c) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
              dx[base + i] += gamma * invstd[c] * (g[base + i] - mg - (*xhat)[base + i] * mgh);
            }
          }
        }
      });
}

std::vector<LinearTap> linear_taps(int in_size, int out_size) {
  std::vector<LinearTap> taps(out_size);
  const double ratio = static_cast<double>(in_size) / static_cast<double>(out_size);
  for (int o = 0; o < out_size; ++o) {
    double src = (o + 0.5) * ratio - 0.5;
    if (src < 0) src = 0;
    int i0 = static_cast<int>(src);
    if (i0 > in_size - 1) i0 = in_size - 1;
    const int i1 = std::min(i0 + 1, in_size - 1);
    const double frac = src - i0;
    taps[o] = {i0, i1, static_cast<Real>(1.0 - frac), static_cast<Real>(frac)};
  }
  return taps;
}

std::vector<Real> resize_plane(std::span<const Real> plane, int h, int w, int out_h,
                               int out_w) {
  const auto ty = linear_taps(h, out_h);
  const auto tx = linear_taps(w, out_w);
  std::vector<Real> out(static_cast<std::size_t>(out_h) * out_w);
  for (int oy = 0; oy < out_h; ++oy) {
    const Real* r0 = plane.data() + static_cast<std::size_t>(ty[oy].i0) * w;
    const Real* r1 = plane.data() + static_cast<std::size_t>(ty[oy].i1) * w;
    for (int ox = 0; ox < out_w; ++ox) {
      const auto& t = tx[ox];
      const Real top = t.w0 * r0[t.i0] + t.w1 * r0[t.i1];
      const Real bot = t.w0 * r1[t.i0] + t.w1 * r1[t.i1];
      out[static_cast<std::size_t>(oy) * out_w + ox] = ty[oy].w0 * top + ty[oy].w1 * bot;
    }
  }
  return out;
}

Tensor bilinear_resize(const Tensor& x, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) {
    throw ValidationError("bilinear_resize: output size must be >= 1");
  }
  const Shape s = x.shape();
  const Shape os{s.n, s.c, out_h, out_w};
  std::vector<Real> out;
  out.reserve(os.numel());
  const std::size_t plane = s.plane();
  for (int p = 0; p < s.n * s.c; ++p) {
    auto r = resize_plane(x.data().subspan(p * plane, plane), s.h, s.w, out_h, out_w);
    out.insert(out.end(), r.begin(), r.end());
  }
  return make_op_result(os, std::move(out), "bilinear_resize", {x}, [s, os](detail::Node& self) {
    const auto ty = linear_taps(s.h, os.h);
    const auto tx = linear_taps(s.w, os.w);
    auto& dx = self.inputs[0]->grad_buffer();
    const std::size_t in_plane = s.plane();
    const std::size_t out_plane = os.plane();
    for (int p = 0; p < s.n * s.c; ++p) {
      Real* d = dx.data() + p * in_plane;
      const Real* g = self.grad.data() + p * out_plane;
      for (int oy = 0; oy < os.h; ++oy) {
        Real* r0 = d + static_cast<std::size_t>(ty[oy].i0) * s.w;
        Real* r1 = d + static_cast<std::size_t>(ty[oy].i1) * s.w;
        for (int ox = 0; ox < os.w; ++ox) {
          const auto& t = tx[ox];
          const Real v = g[static_cast<std::size_t>(oy) * os.w + ox];
          r0[t.i0] += ty[oy].w0 * t.w0 * v;
          r0[t.i1] += ty[oy].w0 * t.w1 * v;
          r1[t.i0] += ty[oy].w1 * t.w0 * v;
          r1[t.i1] += ty[oy].w1 * t.w1 * v;
        }
      }
    }
  });
}

Tensor cross_entropy_loss(const Tensor& logits, const LabelMap& labels, int ignore_index) {
  const Shape s = logits.shape();
  if (s.c < 2) throw ValidationError("cross_entropy_loss: need at least 2 classes");
  if (labels.n != s.n || labels.h != s.h || labels.w != s.w) {
    throw ShapeError("cross_entropy_loss: labels do not match logits " + s.str());
  }
  const std::size_t plane = s.plane();
  const auto z = logits.data();
  auto probs = std::make_shared<std::vector<Real>>(s.numel());
  double total = 0;
  std::size_t count = 0;
  for (int n = 0; n < s.n; ++n) {
    const std::size_t base = static_cast<std::size_t>(n) * s.c * plane;
    for (std::size_t i = 0; i < plane; ++i) {
      Real zmax = z[base + i];
      for (int c = 1; c < s.c; ++c) zmax = std::max(zmax, z[base + c * plane + i]);
      double denom = 0;
      for (int c = 0; c < s.c; ++c) {
        const double e = std::exp(static_cast<double>(z[base + c * plane + i] - zmax));
        (*probs)[base + c * plane + i] = static_cast<Real>(e);
        denom += e;
      }
      for (int c = 0; c < s.c; ++c) {
        (*probs)[base + c * plane + i] = static_cast<Real>((*probs)[base + c * plane + i] / denom);
      }
      const int label = labels.values[static_cast<std::size_t>(n) * plane + i];
      if (label == ignore_index) continue;
      if (label < 0 || label >= s.c) {
        throw ValidationError("cross_entropy_loss: label " + std::to_string(label) +
                              " outside [0, " + std::to_string(s.c - 1) + "]");
      }
      total += std::log(denom) - static_cast<double>(z[base + label * plane + i] - zmax);
      ++count;
    }
  }
  if (count == 0) {
    throw ValidationError("cross_entropy_loss: every pixel is ignored");
  }
  const Real loss = static_cast<Real>(total / static_cast<double>(count));
  return make_op_result(
      Shape{1, 1, 1, 1}, {loss}, "cross_entropy", {logits},
      [s, plane, count, probs, labels, ignore_index](detail::Node& self) {
        auto& dz = self.inputs[0]->grad_buffer();
        const Real scale = self.grad[0] / static_cast<Real>(count);
        for (int n = 0; n < s.n; ++n) {
          const std::size_t base = static_cast<std::size_t>(n) * s.c * plane;
          for (std::size_t i = 0; i < plane; ++i) {
            const int label = labels.values[static_cast<std::size_t>(n) * plane + i];
            if (label == ignore_index) continue;
            for (int c = 0; c < s.c; ++c) {
              const Real p = (*probs)[base + c * plane + i];
              dz[base + c * plane + i] += scale * (p - (c == label ? Real(1) : Real(0)));
            }
          }
        }
      });
}

Tensor sum(const Tensor& x) {
  double acc = 0;
  for (Real v : x.data()) acc += v;
  return make_op_result(Shape{}, {static_cast<Real>(acc)}, "sum", {x}, [](detail::Node& self) {
    auto& dx = self.inputs[0]->grad_buffer();
    for (auto& d : dx) d += self.grad[0];
  });
}

Tensor mean(const Tensor& x) {
  double acc = 0;
  for (Real v : x.data()) acc += v;
  const double n = static_cast<double>(x.numel());
  return make_op_result(Shape{}, {static_cast<Real>(acc / n)}, "mean", {x},
                        [n](detail::Node& self) {
                          auto& dx = self.inputs[0]->grad_buffer();
                          const Real g = static_cast<Real>(self.grad[0] / n);
                          for (auto& d : dx) d += g;
                        });
}

Tensor concat_channels(std::span<const Tensor> parts) {
  if (parts.empty()) throw ValidationError("concat_channels: no inputs");
  const Shape first = parts.front().shape();
  int channels = 0;
  for (const auto& p : parts) {
    const Shape ps = p.shape();
    if (ps.n != first.n || ps.h != first.h || ps.w != first.w) {
      throw ShapeError("concat_channels: " + ps.str() + " incompatible with " + first.str());
    }
    channels += ps.c;
  }
  const Shape os{first.n, channels, first.h, first.w};
  const std::size_t plane = first.plane();
  std::vector<Real> out(os.numel());
  std::vector<int> offsets;
  int c0 = 0;
  for (const auto& p : parts) {
    offsets.push_back(c0);
    const int pc = p.shape().c;
    for (int n = 0; n < first.n; ++n) {
      const Real* src = p.data().data() + static_cast<std::size_t>(n) * pc * plane;
      std::copy(src, src + pc * plane,
                out.data() + (static_cast<std::size_t>(n) * channels + c0) * plane);
    }
    c0 += pc;
  }
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  return make_op_result(os, std::move(out), "concat", std::move(inputs),
                        [os, plane, offsets](detail::Node& self) {
                          for (std::size_t k = 0; k < self.inputs.size(); ++k) {
                            auto& in = *self.inputs[k];
                            if (!in.requires_grad) continue;
                            auto& d = in.grad_buffer();
                            const int pc = in.shape.c;
                            for (int n = 0; n < os.n; ++n) {
                              const Real* g = self.grad.data() +
                                              (static_cast<std::size_t>(n) * os.c + offsets[k]) * plane;
                              Real* dst = d.data() + static_cast<std::size_t>(n) * pc * plane;
                              for (std::size_t i = 0; i < pc * plane; ++i) dst[i] += g[i];
                            }
                          }
                        });
}

Tensor global_avg_pool(const Tensor& x) {
  const Shape s = x.shape();
  const std::size_t plane = s.plane();
  std::vector<Real> out(static_cast<std::size_t>(s.n) * s.c);
  for (std::size_t p = 0; p < out.size(); ++p) {
    double acc = 0;
    const Real* src = x.data().data() + p * plane;
    for (std::size_t i = 0; i < plane; ++i) acc += src[i];
    out[p] = static_cast<Real>(acc / static_cast<double>(plane));
  }
  return make_op_result(Shape{s.n, s.c, 1, 1}, std::move(out), "global_avg_pool", {x},
                        [plane](detail::Node& self) {
                          auto& dx = self.inputs[0]->grad_buffer();
                          const Real inv = Real(1) / static_cast<Real>(plane);
                          for (std::size_t p = 0; p < self.grad.size(); ++p) {
                            const Real g = self.grad[p] * inv;
                            Real* dst = dx.data() + p * plane;
                            for (std::size_t i = 0; i < plane; ++i) dst[i] += g;
                          }
                        });
}

std::vector<Real> softmax_channels(const Tensor& logits) {
  const Shape s = logits.shape();
  const std::size_t plane = s.plane();
  const auto z = logits.data();
  std::vector<Real> out(s.numel());
  for (int n = 0; n < s.n; ++n) {
    const std::size_t base = static_cast<std::size_t>(n) * s.c * plane;
    for (std::size_t i = 0; i < plane; ++i) {
      Real zmax = z[base + i];
      for (int c = 1; c < s.c; ++c) zmax = std::max(zmax, z[base + c * plane + i]);
      double denom = 0;
      for (int c = 0; c < s.c; ++c) denom += std::exp(static_cast<double>(z[base + c * plane + i] - zmax));
      for (int c = 0; c < s.c; ++c) {
        out[base + c * plane + i] =
            static_cast<Real>(std::exp(static_cast<double>(z[base + c * plane + i] - zmax)) / denom);
      }
    }
  }
  return out;
}

LabelMap argmax_channels(const Tensor& logits) {
  const Shape s = logits.shape();
  const std::size_t plane = s.plane();
  const auto z = logits.data();
  LabelMap out(s.n, s.h, s.w);
  for (int n = 0; n < s.n; ++n) {
    const std::size_t base = static_cast<std::size_t>(n) * s.c * plane;
    for (std::size_t i = 0; i < plane; ++i) {
      int best = 0;
      for (int c = 1; c < s.c; ++c) {
        if (z[base + c * plane + i] > z[base + best * plane + i]) best = c;
      }
      out.values[static_cast<std::size_t>(n) * plane + i] = best;
    }
  }
  return out;
}

ECCNN_END_NAMESPACE
