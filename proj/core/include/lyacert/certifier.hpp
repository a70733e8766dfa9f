#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lyacert/network.hpp"
#include "lyacert/trajectory.hpp"

namespace lyacert {

struct CertConfig {
  double gamma = 0.01;              // training margin: loss enforces V_dot <= -gamma
  double epsilon = 0.0;             // certification threshold: V_dot <= epsilon
  double alpha = 0.05;              // tolerated violation fraction
  double diag_floor = 0.05;         // added to every softplus diagonal
  double equilibrium_radius = 0.0;  // |xi| below this is excluded from the verdict
  std::size_t epochs = 500;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  int smoothing_window = 101;
  double weight_decay = 0.0;
  double train_fraction = 0.8;
  std::vector<std::size_t> hidden = {16, 16};

  // Throws InvalidConfig on out-of-range values.
  void validate() const;
};

struct TimedValue {
  double t = 0.0;
  double value = 0.0;
};

using ValueSeries = std::vector<TimedValue>;

// V_k = ||L(xi_k)^T xi_k||^2 with L(xi) = assemble_factor(forward(xi)).
ValueSeries v_series(const NetworkParameters& params, const StateSeries& states, double diag_floor);

// Forward difference (V_{k+1} - V_k) / (t_{k+1} - t_k), stamped at t_k; N-1 entries.
ValueSeries vdot_series(const ValueSeries& values);

// max{0, vdot + gamma}.
double hinge_loss(double vdot, double gamma);

// Subgradient of hinge_loss in vdot; 0 at the kink.
double hinge_slope(double vdot, double gamma);

struct LossAndGrad {
  double loss = 0.0;
  ParameterGrads grads;
};

// Mean hinge loss over the N-1 differences of `states` and its exact gradient
// with respect to every network parameter. Per-sample contributions are
// accumulated in ascending sample order.
LossAndGrad epoch_gradient(const NetworkParameters& params, const StateSeries& states,
                           const CertConfig& config);

// Loss only; same value as epoch_gradient(...).loss.
double epoch_loss(const NetworkParameters& params, const StateSeries& states,
                  const CertConfig& config);

// Number of leading samples used for training: ceil(train_fraction * N), at least 2.
std::size_t training_sample_count(std::size_t n, double train_fraction);

struct TrainResult {
  NetworkParameters params;
  // history[0] is the loss at initialization, history[e] the loss after e
  // Adam steps; size epochs + 1.
  std::vector<double> history;
};

TrainResult train(const StateSeries& states, const CertConfig& config);

struct QSnapshot {
  Eigen::VectorXd xi;
  Eigen::MatrixXd q;
};

struct Certificate {
  bool certified = false;
  double violation_rate = 1.0;
  std::size_t evaluated_samples = 0;
  std::size_t excluded_samples = 0;
  double max_vdot = 0.0;   // over evaluated samples; NaN when none
  double mean_vdot = 0.0;  // over evaluated samples; NaN when none
  double min_v = 0.0;
  double final_loss = 0.0;  // mean hinge loss over the full series
  CertConfig config;
  std::vector<QSnapshot> q_snapshots;

  // Not part of the JSON report.
  std::vector<std::string> warnings;
  std::vector<bool> violations;  // one flag per V_dot sample
};

Certificate certify(const NetworkParameters& params, const StateSeries& states,
                    const CertConfig& config);

// Indices k (into the V_dot series) that violate V_dot > epsilon with
// |xi_k| >= equilibrium_radius.
std::vector<std::size_t> violating_samples(const ValueSeries& vdot, const StateSeries& states,
                                           double epsilon, double equilibrium_radius);

// JSON report with lower_snake_case keys matching the Certificate fields.
void write_certificate_json(std::ostream& out, const Certificate& cert);

// Two columns: epoch,loss.
void write_history_csv(std::ostream& out, const std::vector<double>& history);

// Columns t V vdot xi_norm, one row per V_dot sample.
void write_plot_data(std::ostream& out, const NetworkParameters& params, const StateSeries& states,
                     double diag_floor);

}  // namespace lyacert
