#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "nsf/error.hpp"

namespace nsf {

/// Column-set version written into every CSV header and manifest.
inline constexpr const char* kDiagSchema = "nsf-diag/1";

/// One sampled row of scalar diagnostics. Columns keep insertion order.
struct DiagnosticsRecord {
  double time = 0.0;
  std::vector<std::string> names;
  std::vector<double> values;

  void add(std::string name, double v) {
    names.push_back(std::move(name));
    values.push_back(v);
  }

  std::ptrdiff_t find(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return std::ptrdiff_t(i);
    return -1;
  }

  bool has(const std::string& name) const { return find(name) >= 0; }

  double at(const std::string& name) const {
    const auto i = find(name);
    if (i < 0) throw Error(ErrorKind::domain, "diagnostics record has no column '" + name + "'");
    return values[std::size_t(i)];
  }

  void check_invariants() const {
    if (!std::isfinite(time)) throw Error(ErrorKind::numerical, "diagnostics: non-finite time");
    for (std::size_t i = 0; i < values.size(); ++i)
      if (!std::isfinite(values[i]))
        throw Error(ErrorKind::numerical, "diagnostics: column '" + names[i] + "' is not finite at t=" +
                                              std::to_string(time));
    for (const char* c : {"min_rho", "min_temp"})
      if (has(c) && !(at(c) > 0.0))
        throw Error(ErrorKind::numerical, std::string("diagnostics: ") + c + " is not positive at t=" +
                                              std::to_string(time));
  }
};

}  // namespace nsf
