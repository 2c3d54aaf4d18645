#pragma once

// Piecewise Linear Unit: reference forward, analytic backward and the fused
// slope/offset inference form.
//
// A unit divides [B_L, B_R] into N equal intervals of length d. The N+1
// demarcation points B_j = B_L + j*d carry learnable heights Y_j, and two
// outer slopes K_L, K_R extend the function beyond the boundaries:
//
//   f(x) = (x - B_L) * K_L + Y_0          x <  B_L
//        = (x - B_R) * K_R + Y_N          x >= B_R
//        = (x - B_i) * K_i + Y_i          otherwise, i = floor((x - B_L) / d)
//
// with K_i = (Y_{i+1} - Y_i) / d.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "pwlu/tensor.hpp"

namespace pwlu {

// Boundaries closer than this are rejected (construction) or pushed apart
// (after an optimizer step).
inline constexpr double kMinBoundaryWidth = 1e-12;

struct PwluParams {
  int n_intervals = 0;
  double left_boundary = 0.0;
  double right_boundary = 0.0;
  std::vector<double> y_points;  // n_intervals + 1 heights
  double left_slope = 0.0;
  double right_slope = 0.0;

  double interval_length() const {
    return (right_boundary - left_boundary) / n_intervals;
  }
  // B_j for j in [0, N].
  double grid_point(int j) const {
    return left_boundary + j * interval_length();
  }
  // K_j for j in [0, N-1]. Dividing by the spacing of the two computed grid
  // points, rather than by d, gives exactly 1 when Y_j = B_j and Y_{j+1} =
  // B_{j+1}, so a ReLU-shaped unit reproduces max(x, 0) bit for bit.
  double segment_slope(int j) const {
    return (y_points[j + 1] - y_points[j]) / (grid_point(j + 1) - grid_point(j));
  }

  bool operator==(const PwluParams&) const = default;
};

// Throws ErrorCode::kDegenerateParams unless the parameters are finite,
// y_points has N+1 entries and B_R - B_L >= kMinBoundaryWidth.
void validate(const PwluParams& params);

// Repairs a unit after a gradient step: widens [B_L, B_R] to the minimum
// width if needed. Throws kDegenerateParams on non-finite fields.
void enforce_invariants(PwluParams& params);

// ReLU-shaped unit over [-half_width, half_width]. n_intervals must be even
// so that 0 is a demarcation point.
PwluParams init_pwlu_relu(int n_intervals, double half_width);

// Interior interval index for B_L <= x < B_R, clamped into [0, N-1]. The
// result always satisfies B_idx <= x < B_{idx+1} for the computed grid
// points, even where floor((x - B_L) / d) rounds across one of them.
int interval_index(double x, const PwluParams& params);

double forward_reference(double x, const PwluParams& params);
void forward_reference(std::span<const double> x, const PwluParams& params,
                       std::span<double> out);
Tensor forward_reference(const Tensor& x, const PwluParams& params);

struct PwluGrads {
  double left_boundary = 0.0;
  double right_boundary = 0.0;
  std::vector<double> y_points;
  double left_slope = 0.0;
  double right_slope = 0.0;
  Tensor input_grad;

  static PwluGrads zeros_like(const PwluParams& params);
  void set_zero();
};

// Adds the per-element partials (scaled by upstream) of every element into
// `grads` in element order. input_grad receives upstream * f'(x) and may be
// empty when the caller does not need it.
void accumulate_backward(std::span<const double> x,
                         std::span<const double> upstream,
                         const PwluParams& params, PwluGrads& grads,
                         std::span<double> input_grad);

PwluGrads backward(const Tensor& x, const Tensor& upstream,
                   const PwluParams& params);

// x * S[i'] + O[i'] with i' = clip(floor((x - B_L) / d), -1, N). Entries are
// stored shifted by one so that i' = -1 lives at index 0. The index follows
// the reference branches exactly: after the floor it is moved by at most one
// step so that knots[i'+1] <= x < knots[i'+2], where knots holds -inf, the
// grid points B_0..B_{N-1}, B_R and +inf. B_L therefore maps to 0, B_R to N,
// and inputs within rounding distance of a grid point land on the correct
// side of it.
template <typename Real>
struct FusedPwluTable {
  std::vector<Real> slopes;
  std::vector<Real> offsets;
  std::vector<Real> knots;  // N + 3 entries, see above
  Real left_boundary{};
  Real right_boundary{};
  Real inv_interval_len{};
  int n_intervals = 0;

  Real slope(int extended_index) const { return slopes[extended_index + 1]; }
  Real offset(int extended_index) const { return offsets[extended_index + 1]; }

  int extended_index(Real x) const {
    Real pos = (x - left_boundary) * inv_interval_len;
    // Clamp in floating point first so that huge or NaN inputs never reach
    // the integer conversion.
    pos = pos >= Real(-1) ? pos : Real(-1);
    pos = pos > Real(n_intervals) ? Real(n_intervals) : pos;
    int idx = static_cast<int>(std::floor(pos));
    const Real* k = knots.data() + 1;  // k[j] is the lower edge of index j
    idx -= x < k[idx];
    idx += x >= k[idx + 1];
    return idx;
  }

  Real evaluate(Real x) const {
    const std::size_t slot = static_cast<std::size_t>(extended_index(x) + 1);
    return x * slopes[slot] + offsets[slot];
  }
};

template <typename Real>
FusedPwluTable<Real> build_fused(const PwluParams& params);

extern template FusedPwluTable<double> build_fused<double>(const PwluParams&);
extern template FusedPwluTable<float> build_fused<float>(const PwluParams&);

template <typename Real>
void forward_fused(std::span<const Real> x, const FusedPwluTable<Real>& table,
                   std::span<Real> out) {
  const Real* slopes = table.slopes.data();
  const Real* offsets = table.offsets.data();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto slot = static_cast<std::size_t>(table.extended_index(x[i]) + 1);
    out[i] = x[i] * slopes[slot] + offsets[slot];
  }
}

Tensor forward_fused(const Tensor& x, const FusedPwluTable<double>& table);

}  // namespace pwlu
