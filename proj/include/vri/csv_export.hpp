#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "config.hpp"
#include "errors.hpp"
#include "section5.hpp"

namespace vri {

// 12 significant digits; NaN prints as `nan`, a missing cell as nothing.
inline std::string format_cell(const std::optional<double>& v) {
  if (!v) return {};
  if (std::isnan(*v)) return "nan";
  if (std::isinf(*v)) return *v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", *v);
  return buf;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::optional<double>>> rows;

  std::string text() const {
    std::string out;
    for (std::size_t j = 0; j < header.size(); ++j) out += (j ? "," : "") + header[j];
    out += '\n';
    for (const auto& r : rows) {
      if (r.size() != header.size()) throw ShapeError("csv: row width does not match header");
      for (std::size_t j = 0; j < r.size(); ++j) {
        if (j) out += ',';
        out += format_cell(r[j]);
      }
      out += '\n';
    }
    return out;
  }
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline std::string hex64(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string phi_label(double phi) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", phi);
  return buf;
}

inline std::vector<std::pair<std::string, CsvTable>> comparison_tables(const ComparisonResult& r) {
  std::vector<std::pair<std::string, CsvTable>> out;
  const auto& mp = *r.mortality;
  const auto& sc = r.scenario;

  CsvTable f1{{"t", "lambda_hat", "asset"}, {}};
  for (std::size_t i = 0; i < mp.grid.size(); ++i) {
    std::optional<double> s;
    if (i >= sc.offset) s = sc.asset[i - sc.offset];
    f1.rows.push_back({mp.grid.time(i), mp.lambda_hat[i], s});
  }
  out.emplace_back("fig1_paths.csv", std::move(f1));

  const auto& ul = r.lrd.wealth.controls;
  const auto& um = r.markov.wealth.controls;
  CsvTable f2{{"t", "pi_lrd", "pi_markov", "a_lrd", "a_markov"}, {}};
  CsvTable f3{{"t", "X_lrd", "X_markov"}, {}};
  for (std::size_t i = 0; i < sc.grid.size(); ++i) {
    const double t = sc.grid.time(i);
    f2.rows.push_back({t, ul.pi[i], um.pi[i], ul.a[i], um.a[i]});
    f3.rows.push_back({t, r.lrd.wealth.X[i], r.markov.wealth.X[i]});
  }
  out.emplace_back("fig2_strategies.csv", std::move(f2));
  out.emplace_back("fig3_wealth.csv", std::move(f3));

  CsvTable f4{{"t"}, {}}, f5{{"t"}, {}};
  for (const auto& row : r.rows) {
    f4.header.push_back("pct_a_phi1_" + phi_label(row.phi1));
    f5.header.push_back("pct_X_phi1_" + phi_label(row.phi1));
  }
  for (std::size_t i = 0; i < sc.grid.size(); ++i) {
    std::vector<std::optional<double>> a{sc.grid.time(i)}, x{sc.grid.time(i)};
    for (std::size_t s = 0; s < r.rows.size(); ++s) {
      a.push_back(r.pct_a[s][i]);
      x.push_back(r.pct_X[s][i]);
    }
    f4.rows.push_back(std::move(a));
    f5.rows.push_back(std::move(x));
  }
  out.emplace_back("fig4_reinsurance_pct.csv", std::move(f4));
  out.emplace_back("fig5_wealth_pct.csv", std::move(f5));

  CsvTable sum{{"phi1", "max_pct_a", "max_pct_X", "J_lrd", "se_lrd", "J_markov", "se_markov", "n_paths",
                "ens_mean_pct_a", "ens_se_pct_a", "ens_mean_pct_X", "ens_se_pct_X"},
               {}};
  for (const auto& row : r.rows)
    sum.rows.push_back({row.phi1, row.max_pct_a, row.max_pct_X, row.J_lrd.J, row.J_lrd.std_error, row.J_markov.J,
                        row.J_markov.std_error, static_cast<double>(row.J_lrd.n_paths), row.ens_mean_pct_a,
                        row.ens_se_pct_a, row.ens_mean_pct_X, row.ens_se_pct_X});
  out.emplace_back("summary.csv", std::move(sum));
  return out;
}

struct ExportedFile {
  std::string name;
  std::uint64_t checksum;
};

// Writes the figure tables, summary.csv and manifest.txt into `dir`.
inline std::vector<ExportedFile> export_csv(const ComparisonResult& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());

  std::vector<ExportedFile> files;
  for (const auto& [name, table] : comparison_tables(r)) {
    const std::string text = table.text();
    write_text(dir / name, text);
    files.push_back({name, fnv1a(text)});
  }

  const auto& cfg = r.config;
  std::string m;
  m += "config_hash = " + hex64(fnv1a(canonical_text(cfg))) + "\n";
  m += "seed = " + std::to_string(cfg.seed) + "\n";
  m += "n_paths = " + std::to_string(cfg.n_paths) + "\n";
  m += std::string("mode = ") + (cfg.n_paths > 1 ? "figure path 0 + ensemble extension" : "single path") + "\n";
  m += std::string("regime = ") + to_string(r.regime) + "\n";
  m += std::string("history_ablation = ") + (cfg.history_ablation ? "true" : "false") + "\n";
  m += "stream_checksum.lrd = " + hex64(r.lrd.streams) + "\n";
  m += "stream_checksum.markov = " + hex64(r.markov.streams) + "\n";
  m += std::string("shared_streams = ") + (r.lrd.streams == r.markov.streams ? "yes" : "NO") + "\n";
  m += "constant_regime_max_diff = " + format_cell(r.constant_regime_max_diff) + "\n";
  for (const auto& f : files) m += "file " + f.name + " fnv1a64 = " + hex64(f.checksum) + "\n";
  m += "\n[config]\n";
  for (const auto& line : cfg.provenance)
    if (line.rfind("output.dir", 0) != 0) m += line + "\n";
  write_text(dir / "manifest.txt", m);
  files.push_back({"manifest.txt", fnv1a(m)});
  return files;
}

}  // namespace vri
