#pragma once

#include <goalcomp/detail/rng.hpp>
#include <goalcomp/types.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

namespace goalcomp {

/// T load profiles of a common horizon N, one profile per row.
struct Dataset {
  Mat profiles;

  int size() const { return static_cast<int>(profiles.rows()); }
  int dim() const { return static_cast<int>(profiles.cols()); }
  Vec sample(int i) const { return profiles.row(i).transpose(); }
};

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    const auto first = field.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
      out.emplace_back();
    } else {
      const auto last = field.find_last_not_of(" \t\r");
      out.push_back(field.substr(first, last - first + 1));
    }
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline bool parse_double(const std::string& s, double& out) {
  const char* begin = s.data();
  const char* end = begin + s.size();
  const auto r = std::from_chars(begin, end, out);
  return r.ec == std::errc() && r.ptr == end;
}

}  // namespace detail

/// Reads one profile per row from a comma-separated file. A single leading
/// header row is detected (any non-numeric cell) and skipped. Rows must be
/// rectangular; cells must parse as finite values >= 0 (kWh).
inline Dataset load_profiles_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_profiles_csv: cannot open '" + path + "'");

  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  int width = -1;
  bool first_content_line = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = detail::split_fields(line);
    std::vector<double> row(fields.size());
    bool numeric = true;
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (!detail::parse_double(fields[c], row[c])) {
        numeric = false;
        if (!first_content_line)
          throw std::runtime_error("load_profiles_csv: non-numeric cell '" + fields[c] +
                                   "' at line " + std::to_string(line_no) + ", column " +
                                   std::to_string(c + 1));
        break;
      }
    }
    if (first_content_line) {
      first_content_line = false;
      if (!numeric) continue;  // header row
    }
    if (width < 0) width = static_cast<int>(row.size());
    if (static_cast<int>(row.size()) != width)
      throw std::runtime_error("load_profiles_csv: line " + std::to_string(line_no) + " has " +
                               std::to_string(row.size()) + " fields, expected " +
                               std::to_string(width));
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (!std::isfinite(row[c]))
        throw std::runtime_error("load_profiles_csv: non-finite value at line " +
                                 std::to_string(line_no) + ", column " + std::to_string(c + 1));
      if (row[c] < 0.0)
        throw std::runtime_error("load_profiles_csv: negative value " + std::to_string(row[c]) +
                                 " at line " + std::to_string(line_no) + ", column " +
                                 std::to_string(c + 1));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("load_profiles_csv: no data rows in '" + path + "'");

  Dataset data;
  data.profiles.resize(static_cast<Eigen::Index>(rows.size()), width);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (int c = 0; c < width; ++c)
      data.profiles(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
  return data;
}

/// Writes a dataset in the format load_profiles_csv reads, with a header row.
inline void write_profiles_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_profiles_csv: cannot open '" + path + "'");
  for (int c = 0; c < data.dim(); ++c) out << (c ? "," : "") << "slot_" << c;
  out << "\n";
  char buf[64];
  for (int r = 0; r < data.size(); ++r) {
    for (int c = 0; c < data.dim(); ++c) {
      const auto res = std::to_chars(buf, buf + sizeof buf, data.profiles(r, c));
      if (c) out << ',';
      out.write(buf, res.ptr - buf);
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("write_profiles_csv: write failed for '" + path + "'");
}

/// Knobs of the synthetic household generator. Positions and widths are
/// fractions of the horizon; amplitudes are kWh peaks.
struct SyntheticParams {
  double base_load = 0.2;
  double noise_sigma = 0.2;
  double morning_pos = 0.33;
  double evening_pos = 0.79;
  double pos_jitter = 0.04;
  double width = 0.06;
  double morning_amp = 0.7;
  double evening_amp = 1.0;
  double amp_jitter = 0.25;
  // Mixture of two household types (morning-heavy vs evening-heavy) instead of
  // one population; produces clearly bimodal profile shapes.
  bool two_cluster = false;
};

/// Each profile is a baseline plus two Gaussian consumption bumps with
/// per-sample jittered amplitudes and centers, plus noise, clamped at 0.
/// Deterministic per seed; sample i depends only on (seed, i).
inline Dataset gen_synthetic(int count, int horizon, std::uint64_t seed,
                             const SyntheticParams& params = {}) {
  if (count < 1 || horizon < 1)
    throw std::invalid_argument("gen_synthetic: count and horizon must be >= 1");
  Dataset data;
  data.profiles.resize(count, horizon);
  const double w = params.width * horizon;
  for (int i = 0; i < count; ++i) {
    detail::Rng rng(detail::derive_seed(seed, static_cast<std::uint64_t>(i)));
    double amp_m = params.morning_amp;
    double amp_e = params.evening_amp;
    if (params.two_cluster) {
      const bool morning_heavy = rng.uniform() < 0.5;
      amp_m = morning_heavy ? 3.0 : 0.8;
      amp_e = morning_heavy ? 0.8 : 3.0;
    }
    amp_m = std::abs(amp_m + params.amp_jitter * rng.normal());
    amp_e = std::abs(amp_e + params.amp_jitter * rng.normal());
    const double c_m = (params.morning_pos + params.pos_jitter * rng.normal()) * horizon;
    const double c_e = (params.evening_pos + params.pos_jitter * rng.normal()) * horizon;
    for (int j = 0; j < horizon; ++j) {
      const double dm = (j - c_m) / w;
      const double de = (j - c_e) / w;
      double v = params.base_load + amp_m * std::exp(-0.5 * dm * dm) +
                 amp_e * std::exp(-0.5 * de * de) + params.noise_sigma * rng.normal();
      data.profiles(i, j) = v > 0.0 ? v : 0.0;
    }
  }
  return data;
}

/// Seeded shuffle, first ceil(fraction * T) rows to train; disjoint and exhaustive.
inline std::pair<Dataset, Dataset> split_dataset(const Dataset& data, double fraction,
                                                 std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw std::invalid_argument("split_dataset: fraction must lie in (0, 1)");
  const int t = data.size();
  std::vector<int> order(static_cast<std::size_t>(t));
  for (int i = 0; i < t; ++i) order[static_cast<std::size_t>(i)] = i;
  detail::Rng rng(detail::derive_seed(seed, 0x5917ULL));
  for (int i = t - 1; i > 0; --i)
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(rng.below(i + 1))]);

  const int n_train = static_cast<int>(std::ceil(fraction * t));
  Dataset train, test;
  train.profiles.resize(n_train, data.dim());
  test.profiles.resize(t - n_train, data.dim());
  for (int i = 0; i < t; ++i) {
    const int src = order[static_cast<std::size_t>(i)];
    if (i < n_train)
      train.profiles.row(i) = data.profiles.row(src);
    else
      test.profiles.row(i - n_train) = data.profiles.row(src);
  }
  return {std::move(train), std::move(test)};
}

}  // namespace goalcomp
