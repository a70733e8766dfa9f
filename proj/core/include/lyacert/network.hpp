#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

namespace lyacert {

// Fully connected tanh network; the output layer is affine.
struct LayerSpec {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden;
  std::size_t output_dim = 0;

  // The shape the certifier uses: n -> hidden -> n(n+1)/2.
  static LayerSpec for_state_dim(std::size_t n, std::vector<std::size_t> hidden);

  std::size_t layer_count() const noexcept { return hidden.size() + 1; }
  bool operator==(const LayerSpec&) const = default;
};

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

struct NetworkParameters {
  LayerSpec spec;
  std::uint64_t seed = 0;
  std::vector<DenseLayer> layers;

  // Throws ShapeMismatch unless layer shapes chain input -> hidden -> output.
  void validate() const;
  std::size_t parameter_count() const;
};

// Same layout as NetworkParameters::layers; used for gradients and optimizer
// moments.
struct ParameterGrads {
  std::vector<DenseLayer> layers;

  static ParameterGrads zeros_like(const NetworkParameters& params);
  ParameterGrads& operator+=(const ParameterGrads& other);
  ParameterGrads& operator*=(double scale);
};

struct ForwardTrace {
  std::vector<Eigen::VectorXd> inputs;           // input to each layer
  std::vector<Eigen::VectorXd> preactivations;   // W x + b of each layer
};

struct ForwardResult {
  Eigen::VectorXd raw;
  ForwardTrace trace;
};

NetworkParameters init_params(const LayerSpec& spec, std::uint64_t seed);

ForwardResult forward(const NetworkParameters& params, const Eigen::VectorXd& xi);

// forward() without keeping the trace.
Eigen::VectorXd evaluate(const NetworkParameters& params, const Eigen::VectorXd& xi);

// Gradient of dot(cotangent, raw) with respect to every weight and bias.
ParameterGrads backward(const NetworkParameters& params, const ForwardTrace& trace,
                        const Eigen::VectorXd& cotangent);

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // decoupled, weights only
};

struct AdamState {
  ParameterGrads first_moment;
  ParameterGrads second_moment;
  std::uint64_t step = 0;

  static AdamState zeros_like(const NetworkParameters& params);
};

// One bias-corrected Adam update in place. Weight decay, when enabled, scales
// weights by (1 - lr * weight_decay) before the adaptive step and never touches
// biases.
void adam_step(NetworkParameters& params, const ParameterGrads& grads, AdamState& state,
               const AdamOptions& options);

// Model document: {"spec": {...}, "seed": s, "layers": [{"w": [...], "b": [...]}]}
// with row-major weights.
void save_model(std::ostream& out, const NetworkParameters& params);
NetworkParameters load_model(std::istream& in);

}  // namespace lyacert
