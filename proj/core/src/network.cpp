#include "lyacert/network.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "lyacert/error.hpp"
#include "lyacert/lyapunov.hpp"

namespace lyacert {

namespace {

std::size_t layer_in(const LayerSpec& spec, std::size_t l) {
  return l == 0 ? spec.input_dim : spec.hidden[l - 1];
}

std::size_t layer_out(const LayerSpec& spec, std::size_t l) {
  return l < spec.hidden.size() ? spec.hidden[l] : spec.output_dim;
}

void check_same_layout(const std::vector<DenseLayer>& a, const std::vector<DenseLayer>& b,
                       const char* what) {
  bool ok = a.size() == b.size();
  for (std::size_t l = 0; ok && l < a.size(); ++l) {
    ok = a[l].weight.rows() == b[l].weight.rows() && a[l].weight.cols() == b[l].weight.cols() &&
         a[l].bias.size() == b[l].bias.size();
  }
  if (!ok) throw Error(ErrorCode::ShapeMismatch, std::string(what) + ": layer shapes differ");
}

}  // namespace

LayerSpec LayerSpec::for_state_dim(std::size_t n, std::vector<std::size_t> hidden) {
  return LayerSpec{n, std::move(hidden), factor_entry_count(n)};
}

void NetworkParameters::validate() const {
  if (spec.input_dim == 0 || spec.output_dim == 0) {
    throw Error(ErrorCode::ShapeMismatch, "network input and output dimensions must be >= 1");
  }
  if (layers.size() != spec.layer_count()) {
    throw Error(ErrorCode::ShapeMismatch, "expected " + std::to_string(spec.layer_count()) +
                                              " layers, found " + std::to_string(layers.size()));
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(layer_in(spec, l));
    const auto out = static_cast<Eigen::Index>(layer_out(spec, l));
    if (layers[l].weight.rows() != out || layers[l].weight.cols() != in ||
        layers[l].bias.size() != out) {
      throw Error(ErrorCode::ShapeMismatch, "layer " + std::to_string(l) + " should be " +
                                                std::to_string(out) + "x" + std::to_string(in));
    }
    if (!layers[l].weight.allFinite() || !layers[l].bias.allFinite()) {
      throw Error(ErrorCode::NonFiniteValue, "layer " + std::to_string(l) + " is not finite");
    }
  }
}

std::size_t NetworkParameters::parameter_count() const {
  std::size_t count = 0;
  for (const auto& layer : layers) {
    count += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
  }
  return count;
}

ParameterGrads ParameterGrads::zeros_like(const NetworkParameters& params) {
  ParameterGrads g;
  g.layers.reserve(params.layers.size());
  for (const auto& layer : params.layers) {
    g.layers.push_back({Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()),
                        Eigen::VectorXd::Zero(layer.bias.size())});
  }
  return g;
}

ParameterGrads& ParameterGrads::operator+=(const ParameterGrads& other) {
  check_same_layout(layers, other.layers, "gradient accumulation");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    layers[l].weight += other.layers[l].weight;
    layers[l].bias += other.layers[l].bias;
  }
  return *this;
}

ParameterGrads& ParameterGrads::operator*=(double scale) {
  for (auto& layer : layers) {
    layer.weight *= scale;
    layer.bias *= scale;
  }
  return *this;
}

NetworkParameters init_params(const LayerSpec& spec, std::uint64_t seed) {
  NetworkParameters params;
  params.spec = spec;
  params.seed = seed;
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    const std::size_t in = layer_in(spec, l);
    const std::size_t out = layer_out(spec, l);
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(out))};
    for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) layer.weight(i, j) = dist(rng);
    }
    params.layers.push_back(std::move(layer));
  }
  params.validate();
  return params;
}

ForwardResult forward(const NetworkParameters& params, const Eigen::VectorXd& xi) {
  if (static_cast<std::size_t>(xi.size()) != params.spec.input_dim) {
    throw Error(ErrorCode::DimensionMismatch, "network expects input length " +
                                                  std::to_string(params.spec.input_dim) +
                                                  ", got " + std::to_string(xi.size()));
  }
  ForwardResult result;
  result.trace.inputs.reserve(params.layers.size());
  result.trace.preactivations.reserve(params.layers.size());
  Eigen::VectorXd activation = xi;
  const std::size_t last = params.layers.size() - 1;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    Eigen::VectorXd pre = layer.weight * activation + layer.bias;
    result.trace.inputs.push_back(std::move(activation));
    activation = l == last ? pre : Eigen::VectorXd(pre.array().tanh());
    result.trace.preactivations.push_back(std::move(pre));
  }
  result.raw = std::move(activation);
  return result;
}

Eigen::VectorXd evaluate(const NetworkParameters& params, const Eigen::VectorXd& xi) {
  return forward(params, xi).raw;
}

ParameterGrads backward(const NetworkParameters& params, const ForwardTrace& trace,
                        const Eigen::VectorXd& cotangent) {
  const std::size_t depth = params.layers.size();
  if (trace.inputs.size() != depth || trace.preactivations.size() != depth) {
    throw Error(ErrorCode::ShapeMismatch, "trace depth does not match the network");
  }
  if (static_cast<std::size_t>(cotangent.size()) != params.spec.output_dim) {
    throw Error(ErrorCode::ShapeMismatch, "cotangent length " + std::to_string(cotangent.size()) +
                                              " does not match output dimension " +
                                              std::to_string(params.spec.output_dim));
  }
  ParameterGrads grads;
  grads.layers.resize(depth);
  // delta = d(loss)/d(preactivation) of the current layer.
  Eigen::VectorXd delta = cotangent;
  for (std::size_t l = depth; l-- > 0;) {
    const auto& layer = params.layers[l];
    const auto& input = trace.inputs[l];
    if (input.size() != layer.weight.cols() || trace.preactivations[l].size() != layer.weight.rows()) {
      throw Error(ErrorCode::ShapeMismatch, "trace shapes do not match layer " + std::to_string(l));
    }
    grads.layers[l].weight = delta * input.transpose();
    grads.layers[l].bias = delta;
    if (l > 0) {
      const Eigen::ArrayXd hidden = trace.preactivations[l - 1].array().tanh();
      delta = ((layer.weight.transpose() * delta).array() * (1.0 - hidden.square())).matrix();
    }
  }
  return grads;
}

AdamState AdamState::zeros_like(const NetworkParameters& params) {
  return AdamState{ParameterGrads::zeros_like(params), ParameterGrads::zeros_like(params), 0};
}

void adam_step(NetworkParameters& params, const ParameterGrads& grads, AdamState& state,
               const AdamOptions& options) {
  check_same_layout(params.layers, grads.layers, "adam_step gradients");
  check_same_layout(params.layers, state.first_moment.layers, "adam_step first moment");
  check_same_layout(params.layers, state.second_moment.layers, "adam_step second moment");

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(options.beta1, t);
  const double correction2 = 1.0 - std::pow(options.beta2, t);
  const double decay = 1.0 - options.lr * options.weight_decay;

  auto update = [&](auto& value, const auto& grad, auto& m, auto& v, bool decayed) {
    m = options.beta1 * m + (1.0 - options.beta1) * grad;
    v = options.beta2 * v + (1.0 - options.beta2) * grad.cwiseProduct(grad);
    if (decayed && options.weight_decay != 0.0) value *= decay;
    value.array() -= options.lr * (m.array() / correction1) /
                     ((v.array() / correction2).sqrt() + options.eps);
  };

  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto& layer = params.layers[l];
    auto& m = state.first_moment.layers[l];
    auto& v = state.second_moment.layers[l];
    update(layer.weight, grads.layers[l].weight, m.weight, v.weight, true);
    update(layer.bias, grads.layers[l].bias, m.bias, v.bias, false);
  }
}

void save_model(std::ostream& out, const NetworkParameters& params) {
  using nlohmann::json;
  json doc;
  doc["spec"] = {{"input_dim", params.spec.input_dim},
                 {"hidden", params.spec.hidden},
                 {"output_dim", params.spec.output_dim},
                 {"activation", "tanh"}};
  doc["seed"] = params.seed;
  json layers = json::array();
  for (const auto& layer : params.layers) {
    json w = json::array();
    for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) w.push_back(layer.weight(i, j));
    }
    json b = json::array();
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) b.push_back(layer.bias[i]);
    layers.push_back({{"w", std::move(w)}, {"b", std::move(b)}});
  }
  doc["layers"] = std::move(layers);
  out << doc.dump(2) << '\n';
}

NetworkParameters load_model(std::istream& in) {
  using nlohmann::json;
  NetworkParameters params;
  try {
    const json doc = json::parse(in);
    const auto& spec = doc.at("spec");
    params.spec.input_dim = spec.at("input_dim").get<std::size_t>();
    params.spec.hidden = spec.at("hidden").get<std::vector<std::size_t>>();
    params.spec.output_dim = spec.at("output_dim").get<std::size_t>();
    if (spec.contains("activation") && spec.at("activation") != "tanh") {
      throw Error(ErrorCode::ParseError, "unsupported activation " + spec.at("activation").dump());
    }
    params.seed = doc.at("seed").get<std::uint64_t>();
    const auto& layers = doc.at("layers");
    if (layers.size() != params.spec.layer_count()) {
      throw Error(ErrorCode::ShapeMismatch, "model lists " + std::to_string(layers.size()) +
                                                " layers, spec implies " +
                                                std::to_string(params.spec.layer_count()));
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const std::size_t fan_in = layer_in(params.spec, l);
      const std::size_t fan_out = layer_out(params.spec, l);
      const auto w = layers[l].at("w").get<std::vector<double>>();
      const auto b = layers[l].at("b").get<std::vector<double>>();
      if (w.size() != fan_in * fan_out || b.size() != fan_out) {
        throw Error(ErrorCode::ShapeMismatch, "layer " + std::to_string(l) + " has wrong size");
      }
      DenseLayer layer{Eigen::MatrixXd(fan_out, fan_in), Eigen::VectorXd(fan_out)};
      for (std::size_t i = 0; i < fan_out; ++i) {
        for (std::size_t j = 0; j < fan_in; ++j) {
          layer.weight(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = w[i * fan_in + j];
        }
        layer.bias[static_cast<Eigen::Index>(i)] = b[i];
      }
      params.layers.push_back(std::move(layer));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("invalid model document: ") + e.what());
  }
  params.validate();
  return params;
}

}  // namespace lyacert
