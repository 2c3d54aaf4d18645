#include "pwlu/nn/model.hpp"

#include <charconv>
#include <random>

#include "pwlu/error.hpp"
#include "pwlu/nn/layers.hpp"

namespace pwlu::nn {

namespace {

std::size_t parse_positive(const std::string& token, const std::string& what) {
  std::size_t value = 0;
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end || value == 0) {
    throw Error(ErrorCode::kInvalidConfig,
                "bad " + what + " '" + token + "' in architecture");
  }
  return value;
}

std::unique_ptr<Layer> make_activation(const ModelSpec& spec,
                                       const std::string& name,
                                       std::size_t channels,
                                       std::uint64_t reservoir_seed) {
  switch (spec.activation) {
    case Activation::kRelu:
      return std::make_unique<Relu>(name);
    case Activation::kSwish:
      return std::make_unique<Swish>(name);
    case Activation::kPwlu:
      return std::make_unique<PwluLayer>(
          name, spec.pwlu.granularity, channels,
          init_pwlu_relu(spec.pwlu.n_intervals, spec.pwlu.half_width),
          reservoir_seed);
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown activation");
}

}  // namespace

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::kRelu: return "relu";
    case Activation::kSwish: return "swish";
    case Activation::kPwlu: return "pwlu";
  }
  return "unknown";
}

Activation parse_activation(const std::string& text) {
  if (text == "relu") return Activation::kRelu;
  if (text == "swish") return Activation::kSwish;
  if (text == "pwlu") return Activation::kPwlu;
  throw Error(ErrorCode::kInvalidConfig,
              "activation must be relu, swish or pwlu, got '" + text + "'");
}

std::vector<std::string> parse_arch(const std::string& text) {
  std::vector<std::string> tokens;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::size_t stop = comma == std::string::npos ? text.size() : comma;
    std::string token = text.substr(start, stop - start);
    if (token.empty()) {
      throw Error(ErrorCode::kInvalidConfig,
                  "empty layer in architecture '" + text + "'");
    }
    if (token[0] == 'c') {
      parse_positive(token.substr(1), "conv channel count");
    } else {
      parse_positive(token, "layer width");
    }
    tokens.push_back(std::move(token));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return tokens;
}

void Model::add(std::unique_ptr<Layer> layer) {
  layers_.push_back(std::move(layer));
}

Tensor Model::forward(const Tensor& x) {
  Tensor h = x;
  for (auto& layer : layers_) {
    h = layer->forward(h);
    if (!h.all_finite()) {
      throw Error(ErrorCode::kNonFiniteLoss,
                  "non-finite activations at layer '" + layer->name() + "'");
    }
  }
  return h;
}

Tensor Model::infer(const Tensor& x) {
  Tensor h = x;
  for (auto& layer : layers_) h = layer->infer(h);
  return h;
}

void Model::backward(const Tensor& grad_out) {
  Tensor g = grad_out;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
    g = (*it)->backward(g);
  }
}

std::vector<ParamRef> Model::params() {
  std::vector<ParamRef> all;
  for (auto& layer : layers_) {
    auto p = layer->params();
    all.insert(all.end(), std::make_move_iterator(p.begin()),
               std::make_move_iterator(p.end()));
  }
  return all;
}

void Model::zero_grad() {
  for (auto& layer : layers_) layer->zero_grad();
}

std::vector<PwluLayer*> Model::pwlu_layers() {
  std::vector<PwluLayer*> out;
  for (auto& layer : layers_) {
    if (auto* p = dynamic_cast<PwluLayer*>(layer.get())) out.push_back(p);
  }
  return out;
}

std::vector<const PwluLayer*> Model::pwlu_layers() const {
  std::vector<const PwluLayer*> out;
  for (const auto& layer : layers_) {
    if (auto* p = dynamic_cast<const PwluLayer*>(layer.get())) {
      out.push_back(p);
    }
  }
  return out;
}

Model build_model(const ModelSpec& spec) {
  if (spec.input_shape.empty() || spec.classes < 2) {
    throw Error(ErrorCode::kInvalidConfig,
                "model needs an input shape and at least two classes");
  }
  std::mt19937_64 rng(spec.seed);
  Model model;
  std::vector<std::size_t> shape = spec.input_shape;
  std::size_t index = 0;
  for (const std::string& token : spec.hidden) {
    ++index;
    const std::string suffix = std::to_string(index);
    std::size_t channels;
    if (token[0] == 'c') {
      if (shape.size() != 3) {
        throw Error(ErrorCode::kInvalidConfig,
                    "convolution layer '" + token +
                        "' needs a [C,H,W] input, got rank " +
                        std::to_string(shape.size()));
      }
      channels = parse_positive(token.substr(1), "conv channel count");
      auto conv = std::make_unique<Conv2d>("conv" + suffix, shape[0], channels,
                                           3, 2, 1);
      conv->init_he_uniform(rng);
      shape = {channels, conv->output_extent(shape[1]),
               conv->output_extent(shape[2])};
      model.add(std::move(conv));
    } else {
      channels = parse_positive(token, "layer width");
      auto dense =
          std::make_unique<Dense>("dense" + suffix, shape_size(shape), channels);
      dense->init_he_uniform(rng);
      shape = {channels};
      model.add(std::move(dense));
    }
    model.add(make_activation(spec, "act" + suffix, channels,
                              spec.seed ^ (0x5151ULL * index)));
  }
  auto head = std::make_unique<Dense>("output", shape_size(shape), spec.classes);
  head->init_he_uniform(rng);
  model.add(std::move(head));
  return model;
}

std::unique_ptr<Layer> make_layer(const LayerSpec& spec) {
  const auto need = [&](std::size_t n) {
    if (spec.dims.size() != n) {
      throw Error(ErrorCode::kFormat, "layer '" + spec.name + "' of kind " +
                                          spec.kind + " has wrong dims");
    }
  };
  if (spec.kind == "dense") {
    need(2);
    return std::make_unique<Dense>(spec.name, spec.dims[0], spec.dims[1]);
  }
  if (spec.kind == "conv2d") {
    need(5);
    return std::make_unique<Conv2d>(spec.name, spec.dims[0], spec.dims[1],
                                    spec.dims[2], spec.dims[3], spec.dims[4]);
  }
  if (spec.kind == "relu") return std::make_unique<Relu>(spec.name);
  if (spec.kind == "swish") return std::make_unique<Swish>(spec.name);
  if (spec.kind == "pwlu") {
    need(3);
    PwluParams blank;
    blank.n_intervals = static_cast<int>(spec.dims[2]);
    blank.left_boundary = -1.0;
    blank.right_boundary = 1.0;
    blank.y_points.assign(blank.n_intervals + 1, 0.0);
    return std::make_unique<PwluLayer>(
        spec.name, spec.dims[0] ? Granularity::kChannel : Granularity::kLayer,
        spec.dims[1], blank);
  }
  throw Error(ErrorCode::kFormat, "unknown layer kind '" + spec.kind + "'");
}

}  // namespace pwlu::nn
