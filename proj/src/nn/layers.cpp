#include "pwlu/nn/layers.hpp"

#include <cmath>

#include "pwlu/error.hpp"

namespace pwlu::nn {

namespace {

std::size_t batch_of(const Tensor& x) {
  if (x.rank() == 0) {
    throw Error(ErrorCode::kShapeMismatch, "layer input has no batch axis");
  }
  return x.dim(0);
}

void fill_he_uniform(std::vector<double>& w, std::size_t fan_in,
                     std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (double& v : w) v = dist(rng);
}

}  // namespace

Dense::Dense(std::string name, std::size_t in_features,
             std::size_t out_features)
    : Layer(std::move(name)),
      in_(in_features),
      out_(out_features),
      weights_(in_features * out_features, 0.0),
      bias_(out_features, 0.0),
      weight_grad_(in_features * out_features, 0.0),
      bias_grad_(out_features, 0.0) {}

void Dense::init_he_uniform(std::mt19937_64& rng) {
  fill_he_uniform(weights_, in_, rng);
  std::fill(bias_.begin(), bias_.end(), 0.0);
}

LayerSpec Dense::spec() const { return {"dense", name(), {in_, out_}}; }

Tensor Dense::apply(const Tensor& x) const {
  const std::size_t batch = batch_of(x);
  if (x.size() != batch * in_) {
    throw Error(ErrorCode::kShapeMismatch,
                name() + ": expected " + std::to_string(in_) +
                    " features per sample, got input " + x.shape_string());
  }
  Tensor y({batch, out_});
  const double* xs = x.data();
  double* ys = y.data();
  for (std::size_t b = 0; b < batch; ++b) {
    const double* row = xs + b * in_;
    for (std::size_t o = 0; o < out_; ++o) {
      const double* w = weights_.data() + o * in_;
      double acc = bias_[o];
      for (std::size_t i = 0; i < in_; ++i) acc += w[i] * row[i];
      ys[b * out_ + o] = acc;
    }
  }
  return y;
}

Tensor Dense::forward(const Tensor& x) {
  Tensor y = apply(x);
  input_ = x;
  return y;
}

Tensor Dense::infer(const Tensor& x) { return apply(x); }

Tensor Dense::backward(const Tensor& grad_out) {
  const std::size_t batch = batch_of(input_);
  if (grad_out.shape() != std::vector<std::size_t>{batch, out_}) {
    throw Error(ErrorCode::kShapeMismatch,
                name() + ": upstream gradient " + grad_out.shape_string() +
                    " does not match output");
  }
  Tensor dx(input_.shape());
  const double* xs = input_.data();
  const double* gs = grad_out.data();
  double* dxs = dx.data();
  for (std::size_t b = 0; b < batch; ++b) {
    const double* row = xs + b * in_;
    double* drow = dxs + b * in_;
    for (std::size_t o = 0; o < out_; ++o) {
      const double g = gs[b * out_ + o];
      if (g == 0.0) continue;
      const double* w = weights_.data() + o * in_;
      double* wg = weight_grad_.data() + o * in_;
      for (std::size_t i = 0; i < in_; ++i) {
        wg[i] += g * row[i];
        drow[i] += g * w[i];
      }
      bias_grad_[o] += g;
    }
  }
  return dx;
}

std::vector<ParamRef> Dense::params() {
  return {{name() + ".weight", weights_, weight_grad_, true, false},
          {name() + ".bias", bias_, bias_grad_, true, false}};
}

void Dense::zero_grad() {
  std::fill(weight_grad_.begin(), weight_grad_.end(), 0.0);
  std::fill(bias_grad_.begin(), bias_grad_.end(), 0.0);
}

Conv2d::Conv2d(std::string name, std::size_t in_channels,
               std::size_t out_channels, std::size_t kernel,
               std::size_t stride, std::size_t padding)
    : Layer(std::move(name)),
      in_c_(in_channels),
      out_c_(out_channels),
      k_(kernel),
      stride_(stride),
      pad_(padding),
      weights_(out_channels * in_channels * kernel * kernel, 0.0),
      bias_(out_channels, 0.0),
      weight_grad_(weights_.size(), 0.0),
      bias_grad_(out_channels, 0.0) {
  if (kernel == 0 || stride == 0) {
    throw Error(ErrorCode::kInvalidArgument,
                this->name() + ": kernel and stride must be positive");
  }
}

void Conv2d::init_he_uniform(std::mt19937_64& rng) {
  fill_he_uniform(weights_, in_c_ * k_ * k_, rng);
  std::fill(bias_.begin(), bias_.end(), 0.0);
}

LayerSpec Conv2d::spec() const {
  return {"conv2d", name(), {in_c_, out_c_, k_, stride_, pad_}};
}

std::size_t Conv2d::output_extent(std::size_t input_extent) const {
  const std::size_t padded = input_extent + 2 * pad_;
  if (padded < k_) return 0;
  return (padded - k_) / stride_ + 1;
}

Tensor Conv2d::apply(const Tensor& x) const {
  if (x.rank() != 4 || x.dim(1) != in_c_) {
    throw Error(ErrorCode::kShapeMismatch,
                name() + ": expected [batch," + std::to_string(in_c_) +
                    ",H,W] input, got " + x.shape_string());
  }
  const std::size_t batch = x.dim(0), h = x.dim(2), w = x.dim(3);
  const std::size_t oh = output_extent(h), ow = output_extent(w);
  if (oh == 0 || ow == 0) {
    throw Error(ErrorCode::kShapeMismatch,
                name() + ": input " + x.shape_string() +
                    " is smaller than the kernel");
  }
  Tensor y({batch, out_c_, oh, ow});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t oc = 0; oc < out_c_; ++oc) {
      double* out = y.data() + ((b * out_c_ + oc) * oh) * ow;
      for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
          double acc = bias_[oc];
          for (std::size_t ic = 0; ic < in_c_; ++ic) {
            const double* img = x.data() + ((b * in_c_ + ic) * h) * w;
            const double* ker = weights_.data() + ((oc * in_c_ + ic) * k_) * k_;
            for (std::size_t ky = 0; ky < k_; ++ky) {
              const std::ptrdiff_t iy =
                  static_cast<std::ptrdiff_t>(oy * stride_ + ky) -
                  static_cast<std::ptrdiff_t>(pad_);
              if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
              for (std::size_t kx = 0; kx < k_; ++kx) {
                const std::ptrdiff_t ix =
                    static_cast<std::ptrdiff_t>(ox * stride_ + kx) -
                    static_cast<std::ptrdiff_t>(pad_);
                if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
                acc += ker[ky * k_ + kx] * img[iy * w + ix];
              }
            }
          }
          out[oy * ow + ox] = acc;
        }
      }
    }
  }
  return y;
}

Tensor Conv2d::forward(const Tensor& x) {
  Tensor y = apply(x);
  input_ = x;
  return y;
}

Tensor Conv2d::infer(const Tensor& x) { return apply(x); }

Tensor Conv2d::backward(const Tensor& grad_out) {
  const std::size_t batch = input_.dim(0), h = input_.dim(2),
                    w = input_.dim(3);
  const std::size_t oh = output_extent(h), ow = output_extent(w);
  if (grad_out.shape() != std::vector<std::size_t>{batch, out_c_, oh, ow}) {
    throw Error(ErrorCode::kShapeMismatch,
                name() + ": upstream gradient " + grad_out.shape_string() +
                    " does not match output");
  }
  Tensor dx(input_.shape());
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t oc = 0; oc < out_c_; ++oc) {
      const double* g = grad_out.data() + ((b * out_c_ + oc) * oh) * ow;
      for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
          const double go = g[oy * ow + ox];
          bias_grad_[oc] += go;
          if (go == 0.0) continue;
          for (std::size_t ic = 0; ic < in_c_; ++ic) {
            const std::size_t plane = (b * in_c_ + ic) * h * w;
            const std::size_t kbase = ((oc * in_c_ + ic) * k_) * k_;
            for (std::size_t ky = 0; ky < k_; ++ky) {
              const std::ptrdiff_t iy =
                  static_cast<std::ptrdiff_t>(oy * stride_ + ky) -
                  static_cast<std::ptrdiff_t>(pad_);
              if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
              for (std::size_t kx = 0; kx < k_; ++kx) {
                const std::ptrdiff_t ix =
                    static_cast<std::ptrdiff_t>(ox * stride_ + kx) -
                    static_cast<std::ptrdiff_t>(pad_);
                if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
                const std::size_t at = plane + iy * w + ix;
                weight_grad_[kbase + ky * k_ + kx] += go * input_[at];
                dx[at] += go * weights_[kbase + ky * k_ + kx];
              }
            }
          }
        }
      }
    }
  }
  return dx;
}

std::vector<ParamRef> Conv2d::params() {
  return {{name() + ".weight", weights_, weight_grad_, true, false},
          {name() + ".bias", bias_, bias_grad_, true, false}};
}

void Conv2d::zero_grad() {
  std::fill(weight_grad_.begin(), weight_grad_.end(), 0.0);
  std::fill(bias_grad_.begin(), bias_grad_.end(), 0.0);
}

Tensor Relu::infer(const Tensor& x) {
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
  return y;
}

Tensor Relu::forward(const Tensor& x) {
  input_ = x;
  return infer(x);
}

Tensor Relu::backward(const Tensor& grad_out) {
  require_same_shape(input_, grad_out, "relu backward");
  Tensor dx(grad_out.shape());
  for (std::size_t i = 0; i < dx.size(); ++i) {
    dx[i] = input_[i] > 0.0 ? grad_out[i] : 0.0;
  }
  return dx;
}

Tensor Swish::infer(const Tensor& x) {
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = x[i] / (1.0 + std::exp(-x[i]));
  }
  return y;
}

Tensor Swish::forward(const Tensor& x) {
  input_ = x;
  return infer(x);
}

Tensor Swish::backward(const Tensor& grad_out) {
  require_same_shape(input_, grad_out, "swish backward");
  Tensor dx(grad_out.shape());
  for (std::size_t i = 0; i < dx.size(); ++i) {
    const double s = 1.0 / (1.0 + std::exp(-input_[i]));
    dx[i] = grad_out[i] * (s + input_[i] * s * (1.0 - s));
  }
  return dx;
}

}  // namespace pwlu::nn
