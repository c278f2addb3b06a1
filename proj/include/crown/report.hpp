#pragma once

// Seeded Monte-Carlo reports and their JSON/CSV serialization.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "crown/lie_core.hpp"
#include "crown/weyl_hull.hpp"

namespace crown {

using Json = nlohmann::ordered_json;

inline Json to_json(const MatrixC& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json to_json(const MatrixR& m) { return to_json(MatrixC(m.cast<cplx>())); }

inline Json to_json(const VectorR& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline Json to_json(const VectorC& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back({v[i].real(), v[i].imag()});
  return out;
}

inline Json to_json(const CartanVector& x) { return to_json(x.coords); }
inline Json to_json(const CartanVectorC& x) { return to_json(x.coords); }

/// Outcome of one Monte-Carlo sample before folding.
struct SampleRecord {
  bool indeterminate = false;
  /// A non-margin check failed (vertex attainment, reconstruction, ...).
  bool failed_check = false;
  double margin = std::numeric_limits<double>::infinity();
  std::string error;
  Json witness;
  std::map<std::string, double> max_stats;
  std::map<std::string, double> min_stats;
  /// Per-sample values kept for order statistics; not folded.
  std::map<std::string, double> observations;
};

struct VerificationReport {
  std::string command;
  GroupSpec group;
  std::optional<OmegaSpec> omega;
  std::uint64_t seed = 0;
  std::size_t samples_requested = 0;
  std::size_t samples_completed = 0;
  std::size_t samples_indeterminate = 0;
  std::size_t violations = 0;
  double min_margin = std::numeric_limits<double>::infinity();
  Json worst_witness;
  std::int64_t wall_time_ms = 0;
  std::map<std::string, double> tolerance_set;
  std::map<std::string, double> metrics;
  std::map<std::string, std::size_t> error_counts;
  Json details = Json::object();

  bool passed() const { return violations == 0 && samples_indeterminate == 0; }

  /// 0 clean, 2 violations, 3 indeterminate samples only.
  int exit_code() const {
    if (violations > 0) return 2;
    if (samples_indeterminate > 0) return 3;
    return 0;
  }
};

/// Folds per-sample records in index order. A completed sample is a violation
/// when its margin is below -tol or one of its checks failed.
inline void fold_records(VerificationReport& report, const std::vector<SampleRecord>& records, double tol) {
  report.samples_requested = records.size();
  for (const auto& r : records) {
    if (r.indeterminate) {
      ++report.samples_indeterminate;
      const auto colon = r.error.find(':');
      ++report.error_counts[colon == std::string::npos ? r.error : r.error.substr(0, colon)];
      continue;
    }
    ++report.samples_completed;
    if (r.margin < -tol || r.failed_check) ++report.violations;
    if (r.margin < report.min_margin || (report.worst_witness.is_null() && std::isfinite(r.margin))) {
      report.min_margin = r.margin;
      report.worst_witness = r.witness;
    }
    for (const auto& [k, v] : r.max_stats) {
      auto [it, fresh] = report.metrics.try_emplace(k, v);
      if (!fresh) it->second = std::max(it->second, v);
    }
    for (const auto& [k, v] : r.min_stats) {
      auto [it, fresh] = report.metrics.try_emplace(k, v);
      if (!fresh) it->second = std::min(it->second, v);
    }
  }
}

namespace detail {
inline Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }
}  // namespace detail

inline Json to_json(const VerificationReport& r) {
  Json j;
  j["command"] = r.command;
  j["group"] = r.group.to_string();
  j["omega"] = r.omega ? Json(r.omega->to_string()) : Json(nullptr);
  j["seed"] = r.seed;
  j["samples_requested"] = r.samples_requested;
  j["samples_completed"] = r.samples_completed;
  j["samples_indeterminate"] = r.samples_indeterminate;
  j["violations"] = r.violations;
  j["min_margin"] = detail::finite_or_null(r.min_margin);
  j["worst_witness"] = r.worst_witness;
  Json metrics = Json::object();
  for (const auto& [k, v] : r.metrics) metrics[k] = detail::finite_or_null(v);
  j["metrics"] = metrics;
  Json tols = Json::object();
  for (const auto& [k, v] : r.tolerance_set) tols[k] = v;
  j["tolerance_set"] = tols;
  Json errors = Json::object();
  for (const auto& [k, v] : r.error_counts) errors[k] = v;
  j["errors"] = errors;
  j["details"] = r.details;
  j["wall_time_ms"] = r.wall_time_ms;
  return j;
}

inline std::string to_csv(const VerificationReport& r) {
  auto num = [](double v) {
    if (!std::isfinite(v)) return std::string();
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  };
  std::ostringstream head, row;
  head << "command,group,omega,seed,samples_requested,samples_completed,samples_indeterminate,violations,min_margin";
  row << r.command << ',' << r.group.to_string() << ',' << (r.omega ? r.omega->to_string() : "") << ',' << r.seed << ','
      << r.samples_requested << ',' << r.samples_completed << ',' << r.samples_indeterminate << ',' << r.violations
      << ',' << num(r.min_margin);
  for (const auto& [k, v] : r.metrics) {
    head << ',' << k;
    row << ',' << num(v);
  }
  for (const auto& [k, v] : r.tolerance_set) {
    head << ",tol." << k;
    row << ',' << num(v);
  }
  head << ",wall_time_ms";
  row << ',' << r.wall_time_ms;
  return head.str() + "\n" + row.str() + "\n";
}

/// Wall-clock stopwatch for report timing.
class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  std::int64_t elapsed_ms() const {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace crown
