#include "pwlu/nn/pwlu_layer.hpp"

#include "pwlu/error.hpp"

namespace pwlu::nn {

const char* granularity_name(Granularity g) {
  return g == Granularity::kChannel ? "channel" : "layer";
}

Granularity parse_granularity(const std::string& text) {
  if (text == "channel") return Granularity::kChannel;
  if (text == "layer") return Granularity::kLayer;
  throw Error(ErrorCode::kInvalidConfig,
              "granularity must be 'layer' or 'channel', got '" + text + "'");
}

PwluLayer::PwluLayer(std::string name, Granularity granularity,
                     std::size_t channels, const PwluParams& init,
                     std::uint64_t reservoir_seed)
    : Layer(std::move(name)), granularity_(granularity), channels_(channels) {
  if (channels == 0) {
    throw Error(ErrorCode::kInvalidArgument,
                this->name() + ": a PWLU layer needs at least one channel");
  }
  validate(init);
  const std::size_t n_units =
      granularity == Granularity::kChannel ? channels : 1;
  units_.assign(n_units, init);
  grads_.assign(n_units, PwluGrads::zeros_like(init));
  stats_.assign(n_units, RunningStats{});
  for (std::size_t u = 0; u < n_units; ++u) {
    reservoirs_.emplace_back(reservoir_seed * 1000003ULL + u);
  }
  fused_.resize(n_units);
}

LayerSpec PwluLayer::spec() const {
  return {"pwlu",
          name(),
          {static_cast<std::uint64_t>(granularity_ == Granularity::kChannel),
           channels_, static_cast<std::uint64_t>(n_intervals())}};
}

void PwluLayer::check_input(const Tensor& x) const {
  if (x.rank() < 2 || x.dim(1) != channels_) {
    throw Error(ErrorCode::kShapeMismatch,
                name() + ": expected channel axis of size " +
                    std::to_string(channels_) + ", got input " +
                    x.shape_string());
  }
}

void PwluLayer::set_unit(std::size_t i, PwluParams params) {
  validate(params);
  if (params.n_intervals != units_.at(i).n_intervals) {
    throw Error(ErrorCode::kShapeMismatch,
                name() + ": replacement unit has a different interval count");
  }
  units_.at(i) = std::move(params);
  fused_.at(i).reset();
}

void PwluLayer::collect(const Tensor& x) {
  const std::size_t batch = x.dim(0);
  const std::size_t inner = x.size() / (batch * channels_);
  std::vector<double> values;
  for (std::size_t u = 0; u < units_.size(); ++u) {
    values.clear();
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t c = 0; c < channels_; ++c) {
        if (unit_of_channel(c) != u) continue;
        const double* block = x.data() + (b * channels_ + c) * inner;
        values.insert(values.end(), block, block + inner);
      }
    }
    stats_[u] = update_stats(stats_[u], values, stats_momentum_);
    reservoirs_[u].add(values);
  }
}

Tensor PwluLayer::forward(const Tensor& x) {
  check_input(x);
  if (collecting_) collect(x);
  for (const auto& p : units_) validate(p);

  const std::size_t batch = x.dim(0);
  const std::size_t inner = x.size() / (batch * channels_);
  Tensor y(x.shape());
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t c = 0; c < channels_; ++c) {
      const PwluParams& p = units_[unit_of_channel(c)];
      const std::size_t base = (b * channels_ + c) * inner;
      for (std::size_t i = 0; i < inner; ++i) {
        y[base + i] = forward_reference(x[base + i], p);
      }
    }
  }
  input_ = x;
  return y;
}

Tensor PwluLayer::infer(const Tensor& x) {
  check_input(x);
  for (std::size_t u = 0; u < units_.size(); ++u) {
    if (!fused_[u]) fused_[u] = build_fused<double>(units_[u]);
  }
  const std::size_t batch = x.dim(0);
  const std::size_t inner = x.size() / (batch * channels_);
  Tensor y(x.shape());
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t c = 0; c < channels_; ++c) {
      const std::size_t base = (b * channels_ + c) * inner;
      forward_fused<double>(x.values().subspan(base, inner),
                            *fused_[unit_of_channel(c)],
                            y.values().subspan(base, inner));
    }
  }
  return y;
}

Tensor PwluLayer::backward(const Tensor& grad_out) {
  require_same_shape(input_, grad_out, (name() + " backward").c_str());
  const std::size_t batch = input_.dim(0);
  const std::size_t inner = input_.size() / (batch * channels_);
  Tensor dx(input_.shape());
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t c = 0; c < channels_; ++c) {
      const std::size_t u = unit_of_channel(c);
      const std::size_t base = (b * channels_ + c) * inner;
      accumulate_backward(input_.values().subspan(base, inner),
                          grad_out.values().subspan(base, inner), units_[u],
                          grads_[u], dx.values().subspan(base, inner));
    }
  }
  return dx;
}

std::vector<ParamRef> PwluLayer::params() {
  std::vector<ParamRef> refs;
  refs.reserve(units_.size() * 5);
  for (std::size_t u = 0; u < units_.size(); ++u) {
    PwluParams& p = units_[u];
    PwluGrads& g = grads_[u];
    const std::string prefix = name() + ".unit" + std::to_string(u);
    refs.push_back({prefix + ".b_l", {&p.left_boundary, 1},
                    {&g.left_boundary, 1}, false, true});
    refs.push_back({prefix + ".b_r", {&p.right_boundary, 1},
                    {&g.right_boundary, 1}, false, true});
    refs.push_back({prefix + ".y_points", p.y_points, g.y_points, false, true});
    refs.push_back({prefix + ".k_l", {&p.left_slope, 1}, {&g.left_slope, 1},
                    false, true});
    refs.push_back({prefix + ".k_r", {&p.right_slope, 1}, {&g.right_slope, 1},
                    false, true});
  }
  return refs;
}

void PwluLayer::zero_grad() {
  for (auto& g : grads_) g.set_zero();
}

void PwluLayer::after_update() {
  for (std::size_t u = 0; u < units_.size(); ++u) {
    try {
      enforce_invariants(units_[u]);
    } catch (const Error& e) {
      throw Error(e.code(), name() + " unit " + std::to_string(u) + ": " +
                                e.what());
    }
    fused_[u].reset();
  }
}

std::size_t PwluLayer::realign_all() {
  std::size_t degenerate = 0;
  for (std::size_t u = 0; u < units_.size(); ++u) {
    RealignResult r = realign(units_[u], stats_[u]);
    if (r.degenerate) ++degenerate;
    units_[u] = std::move(r.params);
    fused_[u].reset();
  }
  return degenerate;
}

AlignmentReport PwluLayer::alignment() const {
  AlignmentReport report;
  for (std::size_t u = 0; u < units_.size(); ++u) {
    report.units.push_back(
        measure_alignment(name(), u, units_[u], reservoirs_[u].samples()));
  }
  return report;
}

}  // namespace pwlu::nn
