#pragma once

#include <openssl/evp.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "npmle/certify.hpp"
#include "npmle/datagen.hpp"
#include "npmle/mixture.hpp"
#include "npmle/optimizers.hpp"
#include "npmle/population_lab.hpp"
#include "npmle/version.hpp"

// CSV/JSON serialization and run manifests. Doubles are written with %.17g
// so every file round-trips bit-exactly through strtod.

namespace npmle {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& p, const std::string& contents) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << contents;
  if (!out) throw std::runtime_error("write failed: " + p.string());
}

// ----------------------------------------------------------------- sha256

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx, md, &len) != 1) {
    if (ctx) EVP_MD_CTX_free(ctx);
    throw std::runtime_error("sha256 failed");
  }
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xf]);
  }
  return out;
}

// -------------------------------------------------------------------- CSV

inline std::string samples_to_csv(const SampleSet& s) {
  std::ostringstream out;
  for (int c = 0; c < s.d; ++c) out << (c ? "," : "") << "x" << (c + 1);
  out << "\n";
  const std::int64_t n = s.size();
  for (std::int64_t i = 0; i < n; ++i) {
    for (int c = 0; c < s.d; ++c)
      out << (c ? "," : "") << fmt17(s.data[i * s.d + c]);
    out << "\n";
  }
  return out.str();
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_double(const std::string& s, const char* what) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw std::runtime_error(std::string("bad number in ") + what + ": '" + s + "'");
  return v;
}

}  // namespace detail

inline SampleSet samples_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("samples csv: empty");
  const auto header = detail::split_csv_line(line);
  const int d = static_cast<int>(header.size());
  for (int c = 0; c < d; ++c)
    if (header[c] != "x" + std::to_string(c + 1))
      throw std::runtime_error("samples csv: expected header x1,...,xd");
  std::vector<double> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (static_cast<int>(cells.size()) != d)
      throw std::runtime_error("samples csv: row width mismatch");
    for (const auto& cell : cells)
      rows.push_back(detail::parse_double(cell, "samples csv"));
  }
  return SampleSet(d, std::move(rows));
}

inline std::string mixture_to_csv(const ParticleMixture& p) {
  std::ostringstream out;
  out << "weight";
  for (int c = 0; c < p.d; ++c) out << ",mu_" << (c + 1);
  out << "\n";
  for (std::int64_t j = 0; j < p.count(); ++j) {
    out << fmt17(p.weight(j));
    for (int c = 0; c < p.d; ++c) out << "," << fmt17(p.locations[j * p.d + c]);
    out << "\n";
  }
  return out.str();
}

inline ParticleMixture mixture_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("mixture csv: empty");
  const auto header = detail::split_csv_line(line);
  if (header.empty() || header[0] != "weight")
    throw std::runtime_error("mixture csv: expected header weight,mu_1,...");
  const int d = static_cast<int>(header.size()) - 1;
  if (d < 1) throw std::runtime_error("mixture csv: no location columns");
  std::vector<double> locs, weights;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (static_cast<int>(cells.size()) != d + 1)
      throw std::runtime_error("mixture csv: row width mismatch");
    weights.push_back(detail::parse_double(cells[0], "mixture csv"));
    for (int c = 0; c < d; ++c)
      locs.push_back(detail::parse_double(cells[c + 1], "mixture csv"));
  }
  return ParticleMixture::from_weights(d, std::move(locs), weights);
}

inline std::string trajectory_to_csv(const TrajectoryRecord& rec) {
  std::ostringstream out;
  out << "iter,train_nll,test_nll,gap_hat\n";
  for (const auto& pt : rec.points) {
    out << pt.iter << "," << fmt17(pt.train_nll) << ",";
    if (!std::isnan(pt.test_nll)) out << fmt17(pt.test_nll);
    out << ",";
    if (!std::isnan(pt.gap_hat)) out << fmt17(pt.gap_hat);
    out << "\n";
  }
  return out.str();
}

inline std::string snapshots_to_csv(const TrajectoryRecord& rec) {
  std::ostringstream out;
  out << "iter,particle,weight";
  const int d = rec.snapshots.empty() ? 1 : rec.snapshots.front().second.d;
  for (int c = 0; c < d; ++c) out << ",mu_" << (c + 1);
  out << "\n";
  for (const auto& [iter, mix] : rec.snapshots)
    for (std::int64_t j = 0; j < mix.count(); ++j) {
      out << iter << "," << j << "," << fmt17(mix.weight(j));
      for (int c = 0; c < mix.d; ++c) out << "," << fmt17(mix.locations[j * mix.d + c]);
      out << "\n";
    }
  return out.str();
}

inline std::string scan_to_csv(const std::vector<GeodesicPoint>& scan) {
  std::ostringstream out;
  out << "t,loss\n";
  for (const auto& p : scan) out << fmt17(p.t) << "," << fmt17(p.loss) << "\n";
  return out.str();
}

inline std::string bw_to_csv(const std::vector<BWState>& traj,
                             std::int64_t stride = 1) {
  std::ostringstream out;
  out << "t,sigma2,lower_bound,upper_bound\n";
  const std::int64_t n = static_cast<std::int64_t>(traj.size());
  for (std::int64_t i = 0; i < n; ++i) {
    if (i % stride != 0 && i != n - 1) continue;
    const auto& st = traj[i];
    out << fmt17(st.t) << "," << fmt17(st.sigma2) << ","
        << fmt17(bw_lower_bound(st.t)) << "," << fmt17(bw_upper_bound(st.t))
        << "\n";
  }
  return out.str();
}

// ------------------------------------------------------------------- JSON

inline json certification_to_json(const CertificationReport& rep) {
  json atoms = json::array();
  for (const auto& a : rep.atom_values)
    atoms.push_back({{"mu", a.mu}, {"weight", a.weight}, {"delta_l", a.delta_l}});
  return json{{"gap_hat", rep.gap_hat},
              {"grid",
               {{"lo", rep.grid_lo}, {"hi", rep.grid_hi}, {"spacing", rep.grid_spacing}}},
              {"atom_values", atoms},
              {"atom_flatness", rep.atom_flatness}};
}

inline json dataset_metadata(const std::string& kind, int d, std::int64_t n,
                             std::uint64_t seed) {
  return json{{"kind", kind},
              {"d", d},
              {"N", n},
              {"seed", seed},
              {"generator", kGeneratorName}};
}

// --------------------------------------------------------------- manifest

// Every output directory carries a manifest.json naming the tool version,
// the full effective config, and the SHA-256 of each emitted file.
class RunManifest {
 public:
  RunManifest(fs::path dir, std::string command, json config)
      : dir_(std::move(dir)), command_(std::move(command)),
        config_(std::move(config)) {}

  // write a file into the run directory and record its hash
  void emit(const std::string& name, const std::string& contents) {
    write_file(dir_ / name, contents);
    files_[name] = sha256_hex(contents);
  }

  void finalize() {
    json m{{"tool", "npmle"},
           {"version", kVersion},
           {"command", command_},
           {"config", config_},
           {"files", files_}};
    write_file(dir_ / "manifest.json", m.dump(2) + "\n");
  }

  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::string command_;
  json config_;
  json files_ = json::object();
};

}  // namespace npmle
