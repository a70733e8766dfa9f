#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace lyacert {

struct TrajectorySample {
  double t = 0.0;
  Eigen::VectorXd r;  // reference
  Eigen::VectorXd x;  // measured state
};

// Time-stamped reference/state log. Construction validates: at least three
// samples, strictly increasing finite timestamps, one shared dimension m >= 1,
// all values finite.
class Trajectory {
 public:
  explicit Trajectory(std::vector<TrajectorySample> samples);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return samples_.size(); }
  const std::vector<TrajectorySample>& samples() const noexcept { return samples_; }
  const TrajectorySample& operator[](std::size_t k) const { return samples_[k]; }

 private:
  std::vector<TrajectorySample> samples_;
  std::size_t dim_ = 0;
};

// One point of a vector-valued time series.
struct TimedVector {
  double t = 0.0;
  Eigen::VectorXd v;
};

using TimeSeries = std::vector<TimedVector>;

// Stacked error state xi = [e; e_dot] per sample, n = 2m.
class StateSeries {
 public:
  StateSeries() = default;
  explicit StateSeries(TimeSeries entries);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const TimeSeries& entries() const noexcept { return entries_; }
  const TimedVector& operator[](std::size_t k) const { return entries_[k]; }

  // First `count` entries (clamped to size()).
  StateSeries head(std::size_t count) const;

 private:
  TimeSeries entries_;
  std::size_t dim_ = 0;
};

enum class TrajectoryFormat { Csv, Jsonl };

// CSV: header `t,r_0,...,r_{m-1},x_0,...,x_{m-1}`, `#` comment lines and blank
// lines skipped. JSONL: one object per line with keys `t`, `r`, `x`.
Trajectory parse_trajectory(std::istream& in, TrajectoryFormat format);

// Writes the CSV form with 17 significant digits per value.
void write_csv(std::ostream& out, const Trajectory& traj);
// Same format for an unvalidated sample list (e.g. a truncated simulation).
void write_csv(std::ostream& out, std::span<const TrajectorySample> samples);

// e(t_k) = r(t_k) - x(t_k).
TimeSeries compute_error(const Trajectory& traj);

// Centered moving average of odd width; the window shrinks symmetrically near
// the boundaries so every output stays centered on its own sample.
TimeSeries moving_average(const TimeSeries& series, int window);

// Central differences in the interior, one-sided differences at the two ends,
// always using the actual timestamp gaps. With window > 1 the signal is
// moving-averaged first.
TimeSeries differentiate(const TimeSeries& series, int window = 1);

StateSeries build_states(const TimeSeries& err, const TimeSeries& errdot);

// Trajectory -> StateSeries. With window > 1 both halves of xi come from the
// smoothed error so e and e_dot see the same filter.
StateSeries make_states(const Trajectory& traj, int window);

}  // namespace lyacert
