// Reference computations for the tests, written without the library's
// solver code paths.

#ifndef EXO_TESTS_ORACLE_H_
#define EXO_TESTS_ORACLE_H_

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "exo/lip.h"
#include "exo/replanner.h"

namespace oracle {

// One axis: does some u in [lo, hi]^n on n equal pieces of [0, t] reach
// (xi_f, zeta_f) from (xi_0, zeta_0)? With q = e^{-w t/n}, the reachable
// set of the two scaled end conditions is a zonotope with generators
// g_k = (1 - q)(q^k, q^{n-1-k}); membership is tested against the support
// function along every edge normal.
inline bool AxisFeasible(double t, double xi0, double zeta0, double xif, double zetaf,
                         double lo, double hi, double omega, int n) {
  const double q = std::exp(-omega * t / n);
  const double decay = std::exp(-omega * t);
  std::vector<double> gx(n), gy(n);
  double sx = 0.0, sy = 0.0;
  for (int k = 0; k < n; ++k) {
    gx[k] = std::pow(q, k) * (1.0 - q);
    gy[k] = std::pow(q, n - 1 - k) * (1.0 - q);
    sx += gx[k];
    sy += gy[k];
  }
  const double mid = 0.5 * (lo + hi), rad = 0.5 * (hi - lo);
  const double dx = xi0 - decay * xif - mid * sx;
  const double dy = zetaf - decay * zeta0 - mid * sy;
  for (int k = 0; k < n; ++k) {
    const double nx = -gy[k], ny = gx[k];
    double reach = 0.0;
    for (int j = 0; j < n; ++j) reach += std::abs(nx * gx[j] + ny * gy[j]);
    reach *= rad;
    const double proj = std::abs(nx * dx + ny * dy);
    if (proj > reach + 1e-12 * (reach + proj)) return false;
  }
  return true;
}

inline bool Feasible(const exo::BoundaryConditions& bc, double t, double omega, int n) {
  const exo::Vec2 lo = bc.polygon.lower(), hi = bc.polygon.upper();
  for (int a = 0; a < 2; ++a) {
    const double xi0 = bc.x0.com[a] + bc.x0.com_vel[a] / omega;
    const double zeta0 = bc.x0.com[a] - bc.x0.com_vel[a] / omega;
    const double xif = bc.xf.com[a] + bc.xf.com_vel[a] / omega;
    const double zetaf = bc.xf.com[a] - bc.xf.com_vel[a] / omega;
    if (!AxisFeasible(t, xi0, zeta0, xif, zetaf, lo[a], hi[a], omega, n)) return false;
  }
  return true;
}

// Continuous minimum of the integral of u^2 for one axis with no bounds:
// u(t) = a w e^{-w t} + b w e^{-w (T - t)}.
struct LeastNorm {
  double a = 0.0, b = 0.0, omega = 0.0, duration = 0.0;
  double operator()(double t) const {
    return a * omega * std::exp(-omega * t) + b * omega * std::exp(-omega * (duration - t));
  }
};

inline LeastNorm UnboundedMinimizer(double t, double xi0, double zeta0, double xif,
                                    double zetaf, double omega) {
  const double decay = std::exp(-omega * t);
  const double r1 = xi0 - decay * xif, r2 = zetaf - decay * zeta0;
  const double g11 = 0.5 * omega * (1.0 - decay * decay);
  const double g12 = omega * omega * t * decay;
  const double det = g11 * g11 - g12 * g12;
  return {(g11 * r1 - g12 * r2) / det, (g11 * r2 - g12 * r1) / det, omega, t};
}

struct Row {
  exo::BoundaryConditions bc;
  std::vector<std::string> extra;  // columns after the boundary conditions
};

// Rows of a frozen oracle table: twelve boundary-condition columns
// followed by table-specific ones.
inline std::vector<Row> ReadTable(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::getline(in, line);
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (std::size_t comma; (comma = line.find(',', start)) != std::string::npos;
         start = comma + 1) {
      f.push_back(line.substr(start, comma - start));
    }
    f.push_back(line.substr(start));
    if (f.size() < 13) throw std::runtime_error("short row in " + path);
    auto d = [&](int i) { return std::stod(f[i]); };
    Row r;
    r.bc.x0.com = {d(0), d(1)};
    r.bc.x0.com_vel = {d(2), d(3)};
    r.bc.xf.com = {d(4), d(5)};
    r.bc.xf.com_vel = {d(6), d(7)};
    r.bc.polygon = exo::SupportPolygon({d(8), d(9)}, {d(10), d(11)});
    r.extra.assign(f.begin() + 12, f.end());
    rows.push_back(std::move(r));
  }
  return rows;
}

// "lo:hi;lo:hi" as written by the generator script.
inline std::vector<exo::TimeInterval> ParseIntervals(const std::string& text) {
  std::vector<exo::TimeInterval> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    if (item.empty()) continue;
    const auto colon = item.find(':');
    out.push_back({std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1))});
  }
  return out;
}

// Step of the dense scan that produced the frozen interval table.
inline constexpr double kScanStep = 1e-4;

struct SetComparison {
  bool match = true;
  double worst_edge = 0.0;
  int sub_step = 0;  // extra intervals narrower than the scan step
};

// Matches computed intervals against the frozen table. An extra interval
// is accepted only when it is narrower than the scan step (so the scan
// could step over it) and its midpoint passes the independent test.
inline SetComparison CompareSets(const exo::FeasibleTimeSet& got,
                                 const std::vector<exo::TimeInterval>& expect,
                                 const exo::BoundaryConditions& bc, double omega, int knots,
                                 double tol) {
  SetComparison out;
  std::size_t k = 0;
  for (const exo::TimeInterval& iv : got.intervals) {
    if (k < expect.size() && iv.hi >= expect[k].lo - tol && iv.lo <= expect[k].hi + tol) {
      const double e = std::max(std::abs(iv.lo - expect[k].lo), std::abs(iv.hi - expect[k].hi));
      out.worst_edge = std::max(out.worst_edge, e);
      out.match &= e <= tol;
      ++k;
    } else if (iv.hi - iv.lo < kScanStep && Feasible(bc, 0.5 * (iv.lo + iv.hi), omega, knots)) {
      ++out.sub_step;
    } else {
      out.match = false;
    }
  }
  out.match &= k == expect.size();
  return out;
}

}  // namespace oracle

#endif  // EXO_TESTS_ORACLE_H_
