#include <Eigen/Core>

#include "eccnn/errors.hpp"
#include "eccnn/ops.hpp"

ECCNN_BEGIN_NAMESPACE

namespace {

using Matrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;

struct ConvGeometry {
  int cin, h, w;
  int kh, kw;
  int ho, wo;
  int stride, padding, dilation;

  int rows() const { return cin * kh * kw; }
  int cols() const { return ho * wo; }
  bool is_pointwise() const {
    return kh == 1 && kw == 1 && stride == 1 && padding == 0;
  }
};

// cols[(c, ky, kx)][(oy, ox)] = x[c][oy*s - p + ky*d][ox*s - p + kx*d]
void im2col(const Real* x, const ConvGeometry& g, Real* cols) {
  for (int c = 0; c < g.cin; ++c) {
    const Real* plane = x + static_cast<std::size_t>(c) * g.h * g.w;
    for (int ky = 0; ky < g.kh; ++ky) {
      for (int kx = 0; kx < g.kw; ++kx) {
        Real* row = cols + (static_cast<std::size_t>(c * g.kh + ky) * g.kw + kx) * g.cols();
        for (int oy = 0; oy < g.ho; ++oy) {
          const int iy = oy * g.stride - g.padding + ky * g.dilation;
          Real* out = row + static_cast<std::size_t>(oy) * g.wo;
          if (iy < 0 || iy >= g.h) {
            std::fill(out, out + g.wo, Real(0));
            continue;
          }
          const Real* in = plane + static_cast<std::size_t>(iy) * g.w;
          for (int ox = 0; ox < g.wo; ++ox) {
            const int ix = ox * g.stride - g.padding + kx * g.dilation;
            out[ox] = (ix >= 0 && ix < g.w) ? in[ix] : Real(0);
          }
        }
      }
    }
  }
}

void col2im_add(const Real* cols, const ConvGeometry& g, Real* dx) {
  for (int c = 0; c < g.cin; ++c) {
    Real* plane = dx + static_cast<std::size_t>(c) * g.h * g.w;
    for (int ky = 0; ky < g.kh; ++ky) {
      for (int kx = 0; kx < g.kw; ++kx) {
        const Real* row =
            cols + (static_cast<std::size_t>(c * g.kh + ky) * g.kw + kx) * g.cols();
        for (int oy = 0; oy < g.ho; ++oy) {
          const int iy = oy * g.stride - g.padding + ky * g.dilation;
          if (iy < 0 || iy >= g.h) continue;
          const Real* in = row + static_cast<std::size_t>(oy) * g.wo;
          Real* out = plane + static_cast<std::size_t>(iy) * g.w;
          for (int ox = 0; ox < g.wo; ++ox) {
            const int ix = ox * g.stride - g.padding + kx * g.dilation;
            if (ix >= 0 && ix < g.w) out[ix] += in[ox];
          }
        }
      }
    }
  }
}

}  // namespace

int conv_output_size(int in, int kernel, int stride, int padding, int dilation) {
  return (in + 2 * padding - dilation * (kernel - 1) - 1) / stride + 1;
}

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias,
              Conv2dOptions options) {
  const Shape xs = x.shape();
  const Shape ws = weight.shape();
  if (options.stride < 1 || options.dilation < 1 || options.padding < 0) {
    throw ValidationError("conv2d: stride and dilation must be >= 1 and padding >= 0");
  }
  if (ws.c != xs.c) {
    throw ShapeError("conv2d: weight expects " + std::to_string(ws.c) +
                     " input channels, input " + xs.str() + " has " +
                     std::to_string(xs.c));
  }
  if (bias.defined() && (bias.numel() != static_cast<std::size_t>(ws.n))) {
    throw ShapeError("conv2d: bias length " + std::to_string(bias.numel()) +
                     " does not match " + std::to_string(ws.n) + " output channels");
  }
  // Numerator must be non-negative for a valid output size; floor division of
  // negatives would otherwise round towards zero.
  const int num_h = xs.h + 2 * options.padding - options.dilation * (ws.h - 1) - 1;
  const int num_w = xs.w + 2 * options.padding - options.dilation * (ws.w - 1) - 1;
  if (num_h < 0 || num_w < 0) {
    throw ShapeError("conv2d: kernel " + ws.str() + " with dilation " +
                     std::to_string(options.dilation) + " does not fit input " + xs.str());
  }
  ConvGeometry g{xs.c, xs.h, xs.w, ws.h, ws.w,
                 num_h / options.stride + 1, num_w / options.stride + 1,
                 options.stride, options.padding, options.dilation};
  const int cout = ws.n;
  const Shape ys{xs.n, cout, g.ho, g.wo};
  const std::size_t in_stride = static_cast<std::size_t>(xs.c) * xs.h * xs.w;
  const std::size_t out_stride = static_cast<std::size_t>(cout) * g.cols();
  const std::size_t col_size = static_cast<std::size_t>(g.rows()) * g.cols();

  const bool keep_cols = grad_mode_enabled() && weight.requires_grad() && !g.is_pointwise();
  auto cols_store = std::make_shared<std::vector<Real>>();
  std::vector<Real> scratch;
  if (!g.is_pointwise()) {
    if (keep_cols) {
      cols_store->resize(col_size * xs.n);
    } else {
      scratch.resize(col_size);
    }
  }

  std::vector<Real> out(ys.numel());
  ConstMatrixMap wmat(weight.data().data(), cout, g.rows());
  for (int n = 0; n < xs.n; ++n) {
    const Real* xn = x.data().data() + n * in_stride;
    const Real* cols = xn;
    if (!g.is_pointwise()) {
      Real* dst = keep_cols ? cols_store->data() + n * col_size : scratch.data();
      im2col(xn, g, dst);
      cols = dst;
    }
    MatrixMap ymat(out.data() + n * out_stride, cout, g.cols());
    ymat.noalias() = wmat * ConstMatrixMap(cols, g.rows(), g.cols());
    if (bias.defined()) {
      const Real* b = bias.data().data();
      for (int co = 0; co < cout; ++co) ymat.row(co).array() += b[co];
    }
  }

  return make_op_result(
      ys, std::move(out), "conv2d", {x, weight, bias},
      [g, cout, in_stride, out_stride, col_size, cols_store, keep_cols](detail::Node& self) {
        auto& xn = *self.inputs[0];
        auto& wn = *self.inputs[1];
        detail::Node* bn = self.inputs.size() > 2 && self.inputs[2] ? self.inputs[2].get() : nullptr;
        const int batch = xn.shape.n;
        ConstMatrixMap wmat(wn.data.data(), cout, g.rows());
        std::vector<Real> scratch;
        std::vector<Real> dcols;
        if (!g.is_pointwise()) dcols.resize(col_size);
        for (int n = 0; n < batch; ++n) {
          ConstMatrixMap dy(self.grad.data() + n * out_stride, cout, g.cols());
          if (wn.requires_grad) {
            const Real* cols = xn.data.data() + n * in_stride;
            if (!g.is_pointwise()) {
              if (keep_cols) {
                cols = cols_store->data() + n * col_size;
              } else {
                scratch.resize(col_size);
                im2col(xn.data.data() + n * in_stride, g, scratch.data());
                cols = scratch.data();
              }
            }
            MatrixMap dw(wn.grad_buffer().data(), cout, g.rows());
            dw.noalias() += dy * ConstMatrixMap(cols, g.rows(), g.cols()).transpose();
          }
          if (bn && bn->requires_grad) {
            auto& db = bn->grad_buffer();
            // Sequential sum: Eigen's vectorized reduction order depends on buffer alignment.
            const Real* dyn = self.grad.data() + n * out_stride;
            for (int co = 0; co < cout; ++co) {
              Real acc = 0;
              for (int j = 0; j < g.cols(); ++j) acc += dyn[static_cast<std::size_t>(co) * g.cols() + j];
              db[co] += acc;
            }
          }
          if (xn.requires_grad) {
            Real* dx = xn.grad_buffer().data() + n * in_stride;
            if (g.is_pointwise()) {
              MatrixMap dxm(dx, g.rows(), g.cols());
              dxm.noalias() += wmat.transpose() * dy;
            } else {
              MatrixMap dc(dcols.data(), g.rows(), g.cols());
              dc.noalias() = wmat.transpose() * dy;
              col2im_add(dcols.data(), g, dx);
            }
          }
        }
      });
}

ECCNN_END_NAMESPACE
