#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>

#include "rslam/angle_delay.hpp"

namespace rslam::io {

// Binary layout (little endian):
//   char[8]  magic "RSLAMADM"
//   uint64   N (angles), uint64 M (delay samples)
//   float64  t_min, t_s, angle_start_deg, angle_step_deg
//   float64  N*M values, row-major
inline constexpr std::array<char, 8> kMatrixMagic{'R', 'S', 'L', 'A', 'M', 'A', 'D', 'M'};

namespace detail {
template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw Error("matrix-io", "truncated matrix stream");
  return v;
}
}  // namespace detail

inline void write_matrix(std::ostream& os, const AngleDelayMatrix& h) {
  os.write(kMatrixMagic.data(), kMatrixMagic.size());
  detail::put<std::uint64_t>(os, h.num_angles());
  detail::put<std::uint64_t>(os, h.num_delays());
  detail::put(os, h.t_min);
  detail::put(os, h.t_s);
  detail::put(os, h.angle_start_deg);
  detail::put(os, h.angle_step_deg);
  os.write(reinterpret_cast<const char*>(h.values.data().data()), std::streamsize(h.values.size() * sizeof(double)));
}

inline AngleDelayMatrix read_matrix(std::istream& is) {
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMatrixMagic) throw Error("matrix-io", "bad magic, not an angle-delay matrix file");
  const auto n = detail::get<std::uint64_t>(is);
  const auto m = detail::get<std::uint64_t>(is);
  if (n == 0 || m == 0 || n > (1u << 20) || m > (1u << 26)) throw Error("matrix-io", "implausible matrix shape");
  AngleDelayMatrix h;
  h.t_min = detail::get<double>(is);
  h.t_s = detail::get<double>(is);
  h.angle_start_deg = detail::get<double>(is);
  h.angle_step_deg = detail::get<double>(is);
  h.values = RealGrid(n, m);
  is.read(reinterpret_cast<char*>(h.values.data().data()), std::streamsize(n * m * sizeof(double)));
  if (!is) throw Error("matrix-io", "truncated matrix payload");
  h.validate("matrix-io");
  return h;
}

inline void save_matrix(const std::string& path, const AngleDelayMatrix& h) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("matrix-io", "cannot open " + path + " for writing");
  write_matrix(os, h);
}

inline AngleDelayMatrix load_matrix(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("matrix-io", "cannot open " + path);
  return read_matrix(is);
}

// CSV form for small fixtures: a "# t_min=..,t_s=..,angle_start=..,angle_step=.."
// header line, then one comma-separated line per angle.
inline void write_matrix_csv(std::ostream& os, const AngleDelayMatrix& h) {
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  os << "# t_min=" << h.t_min << ",t_s=" << h.t_s << ",angle_start=" << h.angle_start_deg
     << ",angle_step=" << h.angle_step_deg << '\n';
  for (std::size_t n = 0; n < h.num_angles(); ++n) {
    for (std::size_t m = 0; m < h.num_delays(); ++m) {
      if (m) os << ',';
      os << h.values(n, m);
    }
    os << '\n';
  }
}

inline AngleDelayMatrix read_matrix_csv(std::istream& is) {
  AngleDelayMatrix h;
  std::string line;
  if (!std::getline(is, line) || line.rfind("# ", 0) != 0) throw Error("matrix-io", "missing CSV axis header");
  {
    std::stringstream ss(line.substr(2));
    std::string kv;
    while (std::getline(ss, kv, ',')) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw Error("matrix-io", "malformed header field '" + kv + "'");
      const std::string key = kv.substr(0, eq);
      const double val = std::stod(kv.substr(eq + 1));
      if (key == "t_min") h.t_min = val;
      else if (key == "t_s") h.t_s = val;
      else if (key == "angle_start") h.angle_start_deg = val;
      else if (key == "angle_step") h.angle_step_deg = val;
      else throw Error("matrix-io", "unknown header key '" + key + "'");
    }
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (!rows.empty() && row.size() != rows.front().size()) throw Error("matrix-io", "ragged CSV rows");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error("matrix-io", "CSV has no data rows");
  h.values = RealGrid(rows.size(), rows.front().size());
  for (std::size_t n = 0; n < rows.size(); ++n)
    std::copy(rows[n].begin(), rows[n].end(), h.values.row(n));
  h.validate("matrix-io");
  return h;
}

inline void write_scan_csv(std::ostream& os, const ScanVector& s) {
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << "angle_deg,range_m\n";
  for (std::size_t n = 0; n < s.size(); ++n) {
    os << s.angles_deg[n] << ',';
    if (ScanVector::has_return(s.ranges[n])) os << s.ranges[n];
    os << '\n';
  }
}

}  // namespace rslam::io
