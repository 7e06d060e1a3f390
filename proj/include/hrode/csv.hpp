#pragma once

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "hrode/dynamics.hpp"
#include "hrode/objectives.hpp"
#include "hrode/optimizers.hpp"

namespace hrode {

// 17 significant digits: enough to round-trip any double exactly.
inline std::string format_g17(double value) {
  if (std::isnan(value)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

// header `label,x1,...,xn`
inline void write_csv(const Dataset& data, std::ostream& out) {
  out << "label";
  for (int j = 1; j <= data.dim(); ++j) out << ",x" << j;
  out << "\n";
  for (int i = 0; i < data.count(); ++i) {
    out << format_g17(data.labels[i]);
    for (int j = 0; j < data.dim(); ++j) out << "," << format_g17(data.samples(i, j));
    out << "\n";
  }
}

// header `t,x_1..x_n,v_1..v_n`
inline void write_csv(const ContinuousTrajectory& traj, std::ostream& out) {
  const int n = traj.x.empty() ? 0 : static_cast<int>(traj.x.front().size());
  out << "t";
  for (int j = 1; j <= n; ++j) out << ",x_" << j;
  for (int j = 1; j <= n; ++j) out << ",v_" << j;
  out << "\n";
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    out << format_g17(traj.times[i]);
    for (int j = 0; j < n; ++j) out << "," << format_g17(traj.x[i][j]);
    for (int j = 0; j < n; ++j) out << "," << format_g17(traj.v[i][j]);
    out << "\n";
  }
}

// header `k,t,fgap,gradnorm2,lyapunov,min_gradnorm2`
inline void write_csv(const TrajectoryRecord& record, std::ostream& out) {
  out << "k,t,fgap,gradnorm2,lyapunov,min_gradnorm2\n";
  for (std::size_t i = 0; i < record.rows(); ++i) {
    out << record.k[i] << "," << format_g17(record.t[i]) << "," << format_g17(record.fgap[i])
        << "," << format_g17(record.gradnorm2[i]) << "," << format_g17(record.lyapunov[i]) << ","
        << format_g17(record.min_gradnorm2[i]) << "\n";
  }
}

// header `k,value`
inline void write_csv(const std::vector<std::pair<int, double>>& curve, std::ostream& out) {
  out << "k,value\n";
  for (const auto& [k, value] : curve) out << k << "," << format_g17(value) << "\n";
}

}  // namespace hrode
