#include "pwlu/kernel.hpp"

#include <algorithm>
#include <string>

#include "pwlu/error.hpp"

namespace pwlu {

namespace {

bool finite_fields(const PwluParams& p) {
  if (!std::isfinite(p.left_boundary) || !std::isfinite(p.right_boundary) ||
      !std::isfinite(p.left_slope) || !std::isfinite(p.right_slope)) {
    return false;
  }
  return std::all_of(p.y_points.begin(), p.y_points.end(),
                     [](double y) { return std::isfinite(y); });
}

}  // namespace

void validate(const PwluParams& params) {
  if (params.n_intervals < 1) {
    throw Error(ErrorCode::kDegenerateParams,
                "n_intervals must be positive, got " +
                    std::to_string(params.n_intervals));
  }
  if (params.y_points.size() !=
      static_cast<std::size_t>(params.n_intervals) + 1) {
    throw Error(ErrorCode::kDegenerateParams,
                "expected " + std::to_string(params.n_intervals + 1) +
                    " y_points, got " +
                    std::to_string(params.y_points.size()));
  }
  if (!finite_fields(params)) {
    throw Error(ErrorCode::kDegenerateParams, "non-finite PWLU parameter");
  }
  const double width = params.right_boundary - params.left_boundary;
  if (!(width >= kMinBoundaryWidth) || !std::isfinite(width)) {
    throw Error(ErrorCode::kDegenerateParams,
                "boundary width " + std::to_string(width) +
                    " is below the minimum " +
                    std::to_string(kMinBoundaryWidth));
  }
}

void enforce_invariants(PwluParams& params) {
  if (!finite_fields(params)) {
    throw Error(ErrorCode::kDegenerateParams,
                "non-finite PWLU parameter after update");
  }
  if (params.right_boundary - params.left_boundary < kMinBoundaryWidth) {
    const double mid = 0.5 * (params.left_boundary + params.right_boundary);
    params.left_boundary = mid - 0.5 * kMinBoundaryWidth;
    params.right_boundary = mid + 0.5 * kMinBoundaryWidth;
    // Rounding at large |mid| can still collapse the interval.
    if (params.right_boundary - params.left_boundary < kMinBoundaryWidth) {
      params.right_boundary = params.left_boundary + kMinBoundaryWidth;
    }
  }
}

PwluParams init_pwlu_relu(int n_intervals, double half_width) {
  if (n_intervals < 2 || n_intervals % 2 != 0) {
    throw Error(ErrorCode::kDegenerateParams,
                "ReLU initialization needs an even n_intervals >= 2, got " +
                    std::to_string(n_intervals));
  }
  if (!(half_width > 0.0) || !std::isfinite(half_width)) {
    throw Error(ErrorCode::kDegenerateParams,
                "half_width must be positive and finite");
  }
  PwluParams p;
  p.n_intervals = n_intervals;
  p.left_boundary = -half_width;
  p.right_boundary = half_width;
  p.left_slope = 0.0;
  p.right_slope = 1.0;
  p.y_points.resize(n_intervals + 1);
  for (int j = 0; j <= n_intervals; ++j) {
    p.y_points[j] = std::max(p.grid_point(j), 0.0);
  }
  validate(p);
  return p;
}

int interval_index(double x, const PwluParams& params) {
  const int n = params.n_intervals;
  const double pos = std::clamp((x - params.left_boundary) /
                                    params.interval_length(),
                                0.0, static_cast<double>(n - 1));
  int idx = static_cast<int>(std::floor(pos));
  // The division can round an input within an ulp of a grid point into the
  // neighbouring interval; one step against the grid points corrects it.
  if (idx > 0 && x < params.grid_point(idx)) {
    --idx;
  } else if (idx < n - 1 && x >= params.grid_point(idx + 1)) {
    ++idx;
  }
  return idx;
}

double forward_reference(double x, const PwluParams& params) {
  // The outer branches are written as K * x + (Y - K * B). Expanding
  // (x - B) * K + Y this way keeps an identity arm exact for inputs beyond
  // 2^53, where x - B itself rounds.
  if (x < params.left_boundary) {
    return x * params.left_slope +
           (params.y_points[0] - params.left_boundary * params.left_slope);
  }
  if (x >= params.right_boundary) {
    return x * params.right_slope +
           (params.y_points[params.n_intervals] -
            params.right_boundary * params.right_slope);
  }
  const int idx = interval_index(x, params);
  return (x - params.grid_point(idx)) * params.segment_slope(idx) +
         params.y_points[idx];
}

void forward_reference(std::span<const double> x, const PwluParams& params,
                       std::span<double> out) {
  validate(params);
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = forward_reference(x[i], params);
  }
}

Tensor forward_reference(const Tensor& x, const PwluParams& params) {
  Tensor out(x.shape());
  forward_reference(x.values(), params, out.values());
  return out;
}

PwluGrads PwluGrads::zeros_like(const PwluParams& params) {
  PwluGrads g;
  g.y_points.assign(params.y_points.size(), 0.0);
  return g;
}

void PwluGrads::set_zero() {
  left_boundary = right_boundary = left_slope = right_slope = 0.0;
  std::fill(y_points.begin(), y_points.end(), 0.0);
}

void accumulate_backward(std::span<const double> x,
                         std::span<const double> upstream,
                         const PwluParams& params, PwluGrads& grads,
                         std::span<double> input_grad) {
  if (x.size() != upstream.size() ||
      (!input_grad.empty() && input_grad.size() != x.size())) {
    throw Error(ErrorCode::kShapeMismatch,
                "PWLU backward: input has " + std::to_string(x.size()) +
                    " elements, upstream " + std::to_string(upstream.size()));
  }
  if (grads.y_points.size() != params.y_points.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "PWLU backward: gradient bundle does not match parameters");
  }
  const int n = params.n_intervals;
  const double b_l = params.left_boundary;
  const double b_r = params.right_boundary;
  const double width = b_r - b_l;
  const double d = params.interval_length();
  const bool want_input = !input_grad.empty();

  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    const double u = upstream[i];
    double slope;
    if (xi < b_l) {
      slope = params.left_slope;
      grads.left_boundary += -params.left_slope * u;
      grads.left_slope += (xi - b_l) * u;
      grads.y_points[0] += u;
    } else if (xi >= b_r) {
      slope = params.right_slope;
      grads.right_boundary += -params.right_slope * u;
      grads.right_slope += (xi - b_r) * u;
      grads.y_points[n] += u;
    } else {
      const int idx = interval_index(xi, params);
      const double lo = params.grid_point(idx);
      const double hi = params.grid_point(idx + 1);
      slope = params.segment_slope(idx);
      grads.left_boundary += slope * (xi - b_r) / width * u;
      grads.right_boundary += slope * (b_l - xi) / width * u;
      grads.y_points[idx] += (hi - xi) / d * u;
      grads.y_points[idx + 1] += (xi - lo) / d * u;
    }
    if (want_input) input_grad[i] = slope * u;
  }
}

PwluGrads backward(const Tensor& x, const Tensor& upstream,
                   const PwluParams& params) {
  require_same_shape(x, upstream, "PWLU backward");
  validate(params);
  PwluGrads grads = PwluGrads::zeros_like(params);
  grads.input_grad = Tensor(x.shape());
  accumulate_backward(x.values(), upstream.values(), params, grads,
                      grads.input_grad.values());
  return grads;
}

template <typename Real>
FusedPwluTable<Real> build_fused(const PwluParams& params) {
  validate(params);
  const double d = params.interval_length();
  if (!(d > 0.0) || !std::isfinite(d)) {
    throw Error(ErrorCode::kDegenerateParams,
                "interval length must be positive and finite");
  }
  const int n = params.n_intervals;
  FusedPwluTable<Real> table;
  table.n_intervals = n;
  table.left_boundary = static_cast<Real>(params.left_boundary);
  table.right_boundary = static_cast<Real>(params.right_boundary);
  table.inv_interval_len = static_cast<Real>(1.0 / d);
  table.slopes.resize(n + 2);
  table.offsets.resize(n + 2);
  table.knots.resize(n + 3);
  table.knots[0] = -std::numeric_limits<Real>::infinity();
  for (int j = 0; j < n; ++j) {
    table.knots[j + 1] = static_cast<Real>(params.grid_point(j));
  }
  table.knots[n + 1] = table.right_boundary;
  table.knots[n + 2] = std::numeric_limits<Real>::infinity();

  table.slopes[0] = static_cast<Real>(params.left_slope);
  table.offsets[0] = static_cast<Real>(
      params.y_points[0] - params.left_boundary * params.left_slope);
  for (int j = 0; j < n; ++j) {
    const double k = params.segment_slope(j);
    table.slopes[j + 1] = static_cast<Real>(k);
    table.offsets[j + 1] =
        static_cast<Real>(params.y_points[j] - params.grid_point(j) * k);
  }
  table.slopes[n + 1] = static_cast<Real>(params.right_slope);
  table.offsets[n + 1] = static_cast<Real>(
      params.y_points[n] - params.right_boundary * params.right_slope);
  return table;
}

template FusedPwluTable<double> build_fused<double>(const PwluParams&);
template FusedPwluTable<float> build_fused<float>(const PwluParams&);

Tensor forward_fused(const Tensor& x, const FusedPwluTable<double>& table) {
  Tensor out(x.shape());
  forward_fused<double>(x.values(), table, out.values());
  return out;
}

}  // namespace pwlu
