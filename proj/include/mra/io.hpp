#pragma once

// Flat-file containers.
//
// Binary observation file (little-endian):
//   char[8]  "MRAOBS1\0"
//   u32 L, u64 N, f64 sigma, u8 has_shifts
//   N*L f64 row-major data, then N i32 shifts when present.
//
// Binary moment file:
//   char[8]  "MRAMOM1\0"
//   u32 L, u8 source (0 population, 1 sample), u64 n, f64 sigma
//   L f64 (m1), L*L f64 row-major (m2).
//
// CSV forms carry the same header fields in '#' comment lines and one record
// per row; values are printed with 17 significant digits so round-trips are
// lossless.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mra/moments.hpp"
#include "mra/spectral.hpp"

namespace mra {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw IoError("unexpected end of file");
  return v;
}

inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

inline void save_observations(const ObservationSet& obs, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write("MRAOBS1\0", 8);
  detail::write_pod<uint32_t>(out, static_cast<uint32_t>(obs.length()));
  detail::write_pod<uint64_t>(out, static_cast<uint64_t>(obs.rows()));
  detail::write_pod<double>(out, obs.sigma);
  detail::write_pod<uint8_t>(out, obs.true_shifts ? 1 : 0);
  out.write(reinterpret_cast<const char*>(obs.data.data()),
            static_cast<std::streamsize>(sizeof(double) * obs.data.size()));
  if (obs.true_shifts) {
    std::vector<int32_t> s(obs.true_shifts->begin(), obs.true_shifts->end());
    out.write(reinterpret_cast<const char*>(s.data()),
              static_cast<std::streamsize>(sizeof(int32_t) * s.size()));
  }
  if (!out) throw IoError("write failed: " + path);
}

inline ObservationSet load_observations(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, "MRAOBS1\0", 8) != 0)
    throw IoError("not an observation file: " + path);
  uint32_t L = detail::read_pod<uint32_t>(in);
  uint64_t N = detail::read_pod<uint64_t>(in);
  double sigma = detail::read_pod<double>(in);
  uint8_t has_shifts = detail::read_pod<uint8_t>(in);
  if (L < 1 || N < 1) throw IoError("corrupt observation header: " + path);
  ObservationSet obs;
  obs.sigma = sigma;
  obs.data.resize(static_cast<long long>(N), static_cast<int>(L));
  in.read(reinterpret_cast<char*>(obs.data.data()),
          static_cast<std::streamsize>(sizeof(double) * obs.data.size()));
  if (!in) throw IoError("truncated observation data: " + path);
  if (has_shifts) {
    std::vector<int32_t> s(N);
    in.read(reinterpret_cast<char*>(s.data()),
            static_cast<std::streamsize>(sizeof(int32_t) * s.size()));
    if (!in) throw IoError("truncated shift data: " + path);
    obs.true_shifts = std::vector<int>(s.begin(), s.end());
  }
  if (!obs.data.allFinite()) throw IoError("non-finite observation data: " + path);
  return obs;
}

inline ObservationSet load_observations_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  double sigma = 0.0;
  std::vector<double> values;
  long long rows = 0;
  int cols = -1;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto pos = line.find("sigma=");
      if (pos != std::string::npos) sigma = std::stod(line.substr(pos + 6));
      continue;
    }
    std::stringstream ss(line);
    std::string tok;
    int n = 0;
    while (std::getline(ss, tok, ',')) {
      values.push_back(std::stod(tok));
      ++n;
    }
    if (cols < 0) cols = n;
    if (n != cols) throw IoError("ragged CSV row in " + path);
    ++rows;
  }
  if (rows < 1 || cols < 1) throw IoError("empty observation CSV: " + path);
  ObservationSet obs;
  obs.sigma = sigma;
  obs.data = Eigen::Map<RowMat>(values.data(), rows, cols);
  if (!obs.data.allFinite()) throw IoError("non-finite observation data: " + path);
  return obs;
}

// Sniffs the binary magic and falls back to the CSV reader.
inline ObservationSet load_observations_any(const std::string& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw IoError("cannot open: " + path);
  char magic[8] = {};
  probe.read(magic, 8);
  probe.close();
  if (std::memcmp(magic, "MRAOBS1\0", 8) == 0) return load_observations(path);
  return load_observations_csv(path);
}

inline void save_observations_csv(const ObservationSet& obs, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "# mra-observations v1\n";
  out << "# L=" << obs.length() << " N=" << obs.rows()
      << " sigma=" << detail::fmt_double(obs.sigma) << "\n";
  for (long long j = 0; j < obs.rows(); ++j) {
    for (int i = 0; i < obs.length(); ++i) {
      if (i) out << ',';
      out << detail::fmt_double(obs.data(j, i));
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

inline void save_moments(const MomentPair& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write("MRAMOM1\0", 8);
  detail::write_pod<uint32_t>(out, static_cast<uint32_t>(m.length()));
  detail::write_pod<uint8_t>(out, m.source == MomentSource::sample ? 1 : 0);
  detail::write_pod<uint64_t>(out, static_cast<uint64_t>(m.n));
  detail::write_pod<double>(out, m.sigma);
  out.write(reinterpret_cast<const char*>(m.m1.data()),
            static_cast<std::streamsize>(sizeof(double) * m.m1.size()));
  RowMat m2 = m.m2;  // row-major on disk
  out.write(reinterpret_cast<const char*>(m2.data()),
            static_cast<std::streamsize>(sizeof(double) * m2.size()));
  if (!out) throw IoError("write failed: " + path);
}

inline MomentPair load_moments(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, "MRAMOM1\0", 8) != 0)
    throw IoError("not a moment file: " + path);
  uint32_t L = detail::read_pod<uint32_t>(in);
  uint8_t source = detail::read_pod<uint8_t>(in);
  uint64_t n = detail::read_pod<uint64_t>(in);
  double sigma = detail::read_pod<double>(in);
  MomentPair m;
  m.source = source ? MomentSource::sample : MomentSource::population;
  m.n = static_cast<long long>(n);
  m.sigma = sigma;
  m.m1.resize(L);
  in.read(reinterpret_cast<char*>(m.m1.data()),
          static_cast<std::streamsize>(sizeof(double) * L));
  RowMat m2(L, L);
  in.read(reinterpret_cast<char*>(m2.data()),
          static_cast<std::streamsize>(sizeof(double) * m2.size()));
  if (!in) throw IoError("truncated moment data: " + path);
  m.m2 = m2;
  return m;
}

inline void save_moments_csv(const MomentPair& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "# mra-moments v1\n";
  out << "# L=" << m.length()
      << " source=" << (m.source == MomentSource::sample ? "sample" : "population")
      << " n=" << m.n << " sigma=" << detail::fmt_double(m.sigma) << "\n";
  out << "m1";
  for (int i = 0; i < m.length(); ++i) out << ',' << detail::fmt_double(m.m1[i]);
  out << '\n';
  for (int i = 0; i < m.length(); ++i) {
    out << "m2";
    for (int j = 0; j < m.length(); ++j) out << ',' << detail::fmt_double(m.m2(i, j));
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

inline MomentPair load_moments_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  MomentPair m;
  std::vector<Vec> m2_rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.find("source=sample") != std::string::npos)
        m.source = MomentSource::sample;
      auto n = line.find(" n=");
      if (n != std::string::npos) m.n = std::stoll(line.substr(n + 3));
      auto s = line.find("sigma=");
      if (s != std::string::npos) m.sigma = std::stod(line.substr(s + 6));
      continue;
    }
    std::stringstream ss(line);
    std::string tag;
    std::getline(ss, tag, ',');
    std::vector<double> vals;
    std::string tok;
    while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
    Vec v = Eigen::Map<Vec>(vals.data(), static_cast<Eigen::Index>(vals.size()));
    if (tag == "m1")
      m.m1 = v;
    else if (tag == "m2")
      m2_rows.push_back(v);
  }
  const int L = static_cast<int>(m.m1.size());
  if (L < 1 || static_cast<int>(m2_rows.size()) != L)
    throw IoError("malformed moment CSV: " + path);
  m.m2.resize(L, L);
  for (int i = 0; i < L; ++i) m.m2.row(i) = m2_rows[static_cast<size_t>(i)].transpose();
  return m;
}

// Recovery output: x, rho and the diagnostics map as labeled CSV rows.
inline void save_recovery_csv(const RecoveryResult& res, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "# mra-recovery v1\n";
  out << "x";
  for (int i = 0; i < res.x_hat.size(); ++i)
    out << ',' << detail::fmt_double(res.x_hat[i]);
  out << "\nrho";
  for (int i = 0; i < res.rho_hat.size(); ++i)
    out << ',' << detail::fmt_double(res.rho_hat[i]);
  out << '\n';
  for (const auto& [key, value] : res.diagnostics)
    out << "diag," << key << ',' << detail::fmt_double(value) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

inline RecoveryResult load_recovery_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  RecoveryResult res;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string tag;
    std::getline(ss, tag, ',');
    if (tag == "x" || tag == "rho") {
      std::vector<double> vals;
      std::string tok;
      while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
      Vec v = Eigen::Map<Vec>(vals.data(), static_cast<Eigen::Index>(vals.size()));
      if (tag == "x")
        res.x_hat = Signal(std::move(v));
      else
        res.rho_hat = DistributionVec(std::move(v));
    } else if (tag == "diag") {
      std::string key, val;
      std::getline(ss, key, ',');
      std::getline(ss, val, ',');
      res.diagnostics[key] = std::stod(val);
    }
  }
  return res;
}

}  // namespace mra
