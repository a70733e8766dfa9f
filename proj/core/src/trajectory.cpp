#include "lyacert/trajectory.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>

#include <nlohmann/json.hpp>

#include "lyacert/error.hpp"

namespace lyacert {

namespace {

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

void require_increasing(double prev, double next, std::size_t line) {
  if (!(next > prev)) {
    throw Error(ErrorCode::NonMonotoneTime,
                "timestamp " + std::to_string(next) + " does not exceed previous " +
                    std::to_string(prev),
                line);
  }
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(trim(line.substr(start)));
      break;
    }
    cells.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return cells;
}

double parse_number(std::string_view cell, std::size_t line) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || cell.empty()) {
    throw Error(ErrorCode::ParseError, "cannot parse number '" + std::string(cell) + "'", line);
  }
  if (!std::isfinite(value)) {
    throw Error(ErrorCode::NonFiniteValue, "non-finite value '" + std::string(cell) + "'", line);
  }
  return value;
}

bool is_skippable(std::string_view line) {
  const auto body = trim(line);
  return body.empty() || body.front() == '#';
}

std::size_t parse_header(std::string_view line, std::size_t line_no) {
  const auto cells = split_commas(line);
  if (cells.size() < 3 || cells.size() % 2 == 0) {
    throw Error(ErrorCode::MalformedHeader,
                "expected t,r_0..r_{m-1},x_0..x_{m-1}; got " + std::to_string(cells.size()) +
                    " columns",
                line_no);
  }
  const std::size_t m = (cells.size() - 1) / 2;
  auto expect = [&](std::size_t col, const std::string& name) {
    if (cells[col] != name) {
      throw Error(ErrorCode::MalformedHeader,
                  "column " + std::to_string(col) + " is '" + std::string(cells[col]) +
                      "', expected '" + name + "'",
                  line_no);
    }
  };
  expect(0, "t");
  for (std::size_t j = 0; j < m; ++j) {
    expect(1 + j, "r_" + std::to_string(j));
    expect(1 + m + j, "x_" + std::to_string(j));
  }
  return m;
}

Trajectory parse_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t m = 0;
  bool have_header = false;
  std::vector<TrajectorySample> samples;

  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (is_skippable(line)) continue;
    if (!have_header) {
      m = parse_header(line, line_no);
      have_header = true;
      continue;
    }
    const auto cells = split_commas(line);
    if (cells.size() != 1 + 2 * m) {
      throw Error(ErrorCode::DimensionMismatch,
                  "row has " + std::to_string(cells.size()) + " columns, header declares " +
                      std::to_string(1 + 2 * m),
                  line_no);
    }
    TrajectorySample s;
    s.t = parse_number(cells[0], line_no);
    s.r.resize(static_cast<Eigen::Index>(m));
    s.x.resize(static_cast<Eigen::Index>(m));
    for (std::size_t j = 0; j < m; ++j) {
      s.r[static_cast<Eigen::Index>(j)] = parse_number(cells[1 + j], line_no);
      s.x[static_cast<Eigen::Index>(j)] = parse_number(cells[1 + m + j], line_no);
    }
    if (!samples.empty()) require_increasing(samples.back().t, s.t, line_no);
    samples.push_back(std::move(s));
  }
  if (!have_header) throw Error(ErrorCode::MalformedHeader, "missing header line");
  return Trajectory(std::move(samples));
}

Eigen::VectorXd json_vector(const nlohmann::json& j, const char* key, std::size_t line_no) {
  if (!j.contains(key) || !j.at(key).is_array()) {
    throw Error(ErrorCode::ParseError, std::string("missing array '") + key + "'", line_no);
  }
  const auto& arr = j.at(key);
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) {
      throw Error(ErrorCode::ParseError, std::string("non-numeric entry in '") + key + "'",
                  line_no);
    }
    v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  }
  if (!all_finite(v)) {
    throw Error(ErrorCode::NonFiniteValue, std::string("non-finite entry in '") + key + "'",
                line_no);
  }
  return v;
}

Trajectory parse_jsonl(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t m = 0;
  std::vector<TrajectorySample> samples;

  while (std::getline(in, line)) {
    ++line_no;
    if (is_skippable(line)) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::ParseError, e.what(), line_no);
    }
    if (!j.is_object() || !j.contains("t") || !j.at("t").is_number()) {
      throw Error(ErrorCode::ParseError, "expected an object with numeric 't'", line_no);
    }
    TrajectorySample s;
    s.t = j.at("t").get<double>();
    if (!std::isfinite(s.t)) throw Error(ErrorCode::NonFiniteValue, "non-finite t", line_no);
    s.r = json_vector(j, "r", line_no);
    s.x = json_vector(j, "x", line_no);
    if (samples.empty()) m = static_cast<std::size_t>(s.r.size());
    if (s.r.size() == 0 || static_cast<std::size_t>(s.r.size()) != m ||
        static_cast<std::size_t>(s.x.size()) != m) {
      throw Error(ErrorCode::DimensionMismatch,
                  "r/x lengths " + std::to_string(s.r.size()) + "/" + std::to_string(s.x.size()) +
                      " do not match m=" + std::to_string(m),
                  line_no);
    }
    if (!samples.empty()) require_increasing(samples.back().t, s.t, line_no);
    samples.push_back(std::move(s));
  }
  return Trajectory(std::move(samples));
}

void write_number(std::ostream& out, double value) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  out.write(buf, ptr - buf);
}

void check_window(int window, std::size_t n) {
  if (window < 1) {
    throw Error(ErrorCode::InvalidConfig,
                "smoothing window must be >= 1, got " + std::to_string(window));
  }
  if (window % 2 == 0) {
    throw Error(ErrorCode::EvenWindow,
                "smoothing window must be odd, got " + std::to_string(window));
  }
  if (static_cast<std::size_t>(window) > n) {
    throw Error(ErrorCode::WindowTooLarge, "smoothing window " + std::to_string(window) +
                                               " exceeds series length " + std::to_string(n));
  }
}

void check_series_times(const TimeSeries& series) {
  for (std::size_t k = 1; k < series.size(); ++k) {
    require_increasing(series[k - 1].t, series[k].t, 0);
  }
}

}  // namespace

Trajectory::Trajectory(std::vector<TrajectorySample> samples) : samples_(std::move(samples)) {
  if (samples_.size() < 3) {
    throw Error(ErrorCode::TooFewSamples,
                "trajectory needs at least 3 samples, got " + std::to_string(samples_.size()));
  }
  dim_ = static_cast<std::size_t>(samples_.front().r.size());
  if (dim_ == 0) throw Error(ErrorCode::DimensionMismatch, "state dimension must be >= 1");
  for (std::size_t k = 0; k < samples_.size(); ++k) {
    const auto& s = samples_[k];
    if (static_cast<std::size_t>(s.r.size()) != dim_ ||
        static_cast<std::size_t>(s.x.size()) != dim_) {
      throw Error(ErrorCode::DimensionMismatch, "sample " + std::to_string(k) +
                                                    " does not have dimension " +
                                                    std::to_string(dim_));
    }
    if (!std::isfinite(s.t) || !all_finite(s.r) || !all_finite(s.x)) {
      throw Error(ErrorCode::NonFiniteValue, "sample " + std::to_string(k) + " is not finite");
    }
    if (k > 0) require_increasing(samples_[k - 1].t, s.t, 0);
  }
}

StateSeries::StateSeries(TimeSeries entries) : entries_(std::move(entries)) {
  if (entries_.empty()) return;
  dim_ = static_cast<std::size_t>(entries_.front().v.size());
  if (dim_ == 0 || dim_ % 2 != 0) {
    throw Error(ErrorCode::DimensionMismatch,
                "stacked state dimension must be even and positive, got " + std::to_string(dim_));
  }
  for (std::size_t k = 0; k < entries_.size(); ++k) {
    if (static_cast<std::size_t>(entries_[k].v.size()) != dim_) {
      throw Error(ErrorCode::DimensionMismatch,
                  "state " + std::to_string(k) + " has inconsistent dimension");
    }
    if (k > 0) require_increasing(entries_[k - 1].t, entries_[k].t, 0);
  }
}

StateSeries StateSeries::head(std::size_t count) const {
  count = std::min(count, entries_.size());
  return StateSeries(TimeSeries(entries_.begin(), entries_.begin() + static_cast<std::ptrdiff_t>(count)));
}

Trajectory parse_trajectory(std::istream& in, TrajectoryFormat format) {
  switch (format) {
    case TrajectoryFormat::Csv: return parse_csv(in);
    case TrajectoryFormat::Jsonl: return parse_jsonl(in);
  }
  throw Error(ErrorCode::InvalidConfig, "unknown trajectory format");
}

void write_csv(std::ostream& out, const Trajectory& traj) {
  write_csv(out, std::span<const TrajectorySample>(traj.samples()));
}

void write_csv(std::ostream& out, std::span<const TrajectorySample> samples) {
  const std::size_t m = samples.empty() ? 0 : static_cast<std::size_t>(samples.front().r.size());
  out << 't';
  for (std::size_t j = 0; j < m; ++j) out << ",r_" << j;
  for (std::size_t j = 0; j < m; ++j) out << ",x_" << j;
  out << '\n';
  for (const auto& s : samples) {
    write_number(out, s.t);
    for (Eigen::Index j = 0; j < s.r.size(); ++j) {
      out << ',';
      write_number(out, s.r[j]);
    }
    for (Eigen::Index j = 0; j < s.x.size(); ++j) {
      out << ',';
      write_number(out, s.x[j]);
    }
    out << '\n';
  }
}

TimeSeries compute_error(const Trajectory& traj) {
  TimeSeries out;
  out.reserve(traj.size());
  for (const auto& s : traj.samples()) out.push_back({s.t, s.r - s.x});
  return out;
}

TimeSeries moving_average(const TimeSeries& series, int window) {
  check_window(window, series.size());
  if (window == 1) return series;
  const std::size_t n = series.size();
  const std::size_t half = static_cast<std::size_t>(window / 2);
  TimeSeries out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t reach = std::min({half, k, n - 1 - k});
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(series[k].v.size());
    for (std::size_t i = k - reach; i <= k + reach; ++i) acc += series[i].v;
    out.push_back({series[k].t, acc / static_cast<double>(2 * reach + 1)});
  }
  return out;
}

TimeSeries differentiate(const TimeSeries& series, int window) {
  check_window(window, series.size());
  if (series.size() < 2) {
    throw Error(ErrorCode::TooFewSamples, "differentiation needs at least 2 samples");
  }
  check_series_times(series);
  const TimeSeries smooth = window > 1 ? moving_average(series, window) : series;
  const std::size_t n = smooth.size();
  TimeSeries out;
  out.reserve(n);
  out.push_back({smooth[0].t, (smooth[1].v - smooth[0].v) / (smooth[1].t - smooth[0].t)});
  for (std::size_t k = 1; k + 1 < n; ++k) {
    out.push_back({smooth[k].t, (smooth[k + 1].v - smooth[k - 1].v) /
                                    (smooth[k + 1].t - smooth[k - 1].t)});
  }
  out.push_back({smooth[n - 1].t,
                 (smooth[n - 1].v - smooth[n - 2].v) / (smooth[n - 1].t - smooth[n - 2].t)});
  return out;
}

StateSeries build_states(const TimeSeries& err, const TimeSeries& errdot) {
  if (err.size() != errdot.size()) {
    throw Error(ErrorCode::TimestampMismatch, "error series has " + std::to_string(err.size()) +
                                                  " samples, derivative series has " +
                                                  std::to_string(errdot.size()));
  }
  TimeSeries entries;
  entries.reserve(err.size());
  for (std::size_t k = 0; k < err.size(); ++k) {
    if (err[k].t != errdot[k].t) {
      throw Error(ErrorCode::TimestampMismatch,
                  "timestamps differ at sample " + std::to_string(k));
    }
    if (err[k].v.size() != errdot[k].v.size()) {
      throw Error(ErrorCode::DimensionMismatch,
                  "e and e_dot differ in length at sample " + std::to_string(k));
    }
    const Eigen::Index m = err[k].v.size();
    Eigen::VectorXd xi(2 * m);
    xi << err[k].v, errdot[k].v;
    entries.push_back({err[k].t, std::move(xi)});
  }
  return StateSeries(std::move(entries));
}

StateSeries make_states(const Trajectory& traj, int window) {
  const TimeSeries err = compute_error(traj);
  const TimeSeries smooth = moving_average(err, window);
  return build_states(smooth, differentiate(smooth, 1));
}

}  // namespace lyacert
