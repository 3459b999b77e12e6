#include "copmix/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "copmix/errors.hpp"
#include "copmix/rng.hpp"

namespace copmix {

namespace {
}

GridCopula::GridCopula(int m) : m_(m) {
  if (m < 1) throw ParameterError("grid resolution must be >= 1");
  mass_.assign(static_cast<std::size_t>(m) * m, 1.0 / (static_cast<double>(m) * m));
  build_corners();
}

GridCopula::GridCopula(int m, std::vector<double> mass) : m_(m), mass_(std::move(mass)) {
  if (m < 1) throw ParameterError("grid resolution must be >= 1");
  if (mass_.size() != static_cast<std::size_t>(m) * m)
    throw ParameterError("grid mass size does not match resolution");
  build_corners();
}

void GridCopula::build_corners() {
  const int n = m_ + 1;
  cum_.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 1; i <= m_; ++i) {
    double row_acc = 0.0;
    for (int j = 1; j <= m_; ++j) {
      row_acc += mass(i - 1, j - 1);
      cum_[static_cast<std::size_t>(i) * n + j] =
          cum_[static_cast<std::size_t>(i - 1) * n + j] + row_acc;
    }
  }
}

double GridCopula::cdf(double u, double v) const {
  if (u < 0.0 || u > 1.0 || v < 0.0 || v > 1.0)
    throw ParameterError("copula arguments must lie in [0,1]");
  if (u <= 0.0 || v <= 0.0) return 0.0;
  if (u >= 1.0) return v;
  if (v >= 1.0) return u;
  const double su = u * m_;
  const double sv = v * m_;
  int i = std::min(static_cast<int>(su), m_ - 1);
  int j = std::min(static_cast<int>(sv), m_ - 1);
  const double fu = su - i;
  const double fv = sv - j;
  const double c00 = corner(i, j);
  const double c10 = corner(i + 1, j);
  const double c01 = corner(i, j + 1);
  const double c11 = corner(i + 1, j + 1);
  return c00 + fu * (c10 - c00) + fv * (c01 - c00) + fu * fv * (c11 - c10 - c01 + c00);
}

double GridCopula::conditional_cdf(double x, double v) const {
  if (x < 0.0 || x > 1.0 || v < 0.0 || v > 1.0)
    throw ParameterError("copula arguments must lie in [0,1]");
  if (v <= 0.0) return 0.0;
  if (v >= 1.0) return 1.0;
  const int i = std::min(static_cast<int>(x * m_), m_ - 1);
  const double sv = v * m_;
  const int j = std::min(static_cast<int>(sv), m_ - 1);
  const double fv = sv - j;
  double acc = 0.0;
  for (int jj = 0; jj < j; ++jj) acc += mass(i, jj);
  acc += fv * mass(i, j);
  return std::clamp(acc * m_, 0.0, 1.0);
}

double GridCopula::conditional_quantile(double x, double p) const {
  if (x < 0.0 || x > 1.0 || p < 0.0 || p > 1.0)
    throw ParameterError("kernel quantile arguments must lie in [0,1]");
  const int i = std::min(static_cast<int>(x * m_), m_ - 1);
  const double target = p / m_;  // row masses sum to 1/m
  double acc = 0.0;
  for (int j = 0; j < m_; ++j) {
    const double w = mass(i, j);
    if (acc + w >= target) {
      if (w <= 0.0) return static_cast<double>(j) / m_;
      const double frac = (target - acc) / w;
      return (j + std::min(frac, 1.0)) / m_;
    }
    acc += w;
  }
  return 1.0;
}

double GridCopula::min_density() const {
  const double lo = *std::min_element(mass_.begin(), mass_.end());
  return lo * m_ * m_;
}

GridCopula GridCopula::refine(int factor) const {
  if (factor < 1) throw ParameterError("refinement factor must be >= 1");
  if (factor == 1) return *this;
  const int mm = m_ * factor;
  std::vector<double> out(static_cast<std::size_t>(mm) * mm);
  const double inv = 1.0 / (static_cast<double>(factor) * factor);
  for (int i = 0; i < mm; ++i)
    for (int j = 0; j < mm; ++j)
      out[static_cast<std::size_t>(i) * mm + j] = mass(i / factor, j / factor) * inv;
  return GridCopula(mm, std::move(out));
}

GridCopula GridCopula::coarsen(int factor) const {
  if (factor < 1 || m_ % factor != 0)
    throw ParameterError("coarsening factor must divide the resolution");
  if (factor == 1) return *this;
  const int mm = m_ / factor;
  std::vector<double> out(static_cast<std::size_t>(mm) * mm, 0.0);
  for (int i = 0; i < m_; ++i)
    for (int j = 0; j < m_; ++j)
      out[static_cast<std::size_t>(i / factor) * mm + j / factor] += mass(i, j);
  return GridCopula(mm, std::move(out));
}

GridCopula GridCopula::transpose() const {
  std::vector<double> out(mass_.size());
  for (int i = 0; i < m_; ++i)
    for (int j = 0; j < m_; ++j) out[static_cast<std::size_t>(j) * m_ + i] = mass(i, j);
  return GridCopula(m_, std::move(out));
}

double GridCopula::cdf_distance(const GridCopula& a, const GridCopula& b) {
  if (a.m() != b.m()) throw ResolutionError("cdf_distance requires equal resolutions");
  double worst = 0.0;
  const int n = a.m() + 1;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      worst = std::max(worst, std::abs(a.corner(i, j) - b.corner(i, j)));
  return worst;
}

GridCopula GridCopula::random(int m, std::uint64_t seed) {
  if (m < 1) throw ParameterError("grid resolution must be >= 1");
  Rng rng(seed, /*stream=*/0x67726964);
  std::vector<double> w(static_cast<std::size_t>(m) * m);
  for (auto& x : w) x = rng.uniform(0.25, 1.75);
  // Sinkhorn balancing to uniform margins; strictly positive input converges
  // linearly, iterate until both margins are flat to ~1e-14.
  std::vector<double> rows(m), cols(m);
  for (int it = 0; it < 10000; ++it) {
    double worst = 0.0;
    for (int i = 0; i < m; ++i) {
      double s = 0.0;
      for (int j = 0; j < m; ++j) s += w[static_cast<std::size_t>(i) * m + j];
      const double target = 1.0 / m;
      worst = std::max(worst, std::abs(s - target));
      const double scale = target / s;
      for (int j = 0; j < m; ++j) w[static_cast<std::size_t>(i) * m + j] *= scale;
    }
    for (int j = 0; j < m; ++j) {
      double s = 0.0;
      for (int i = 0; i < m; ++i) s += w[static_cast<std::size_t>(i) * m + j];
      const double target = 1.0 / m;
      worst = std::max(worst, std::abs(s - target));
      const double scale = target / s;
      for (int i = 0; i < m; ++i) w[static_cast<std::size_t>(i) * m + j] *= scale;
    }
    if (worst < 1e-14) break;
  }
  return GridCopula(m, std::move(w));
}

ValidationReport validate(const GridCopula& g, double tol) {
  ValidationReport report;
  const int m = g.m();

  double worst_cell = 0.0;
  int worst_i = -1, worst_j = -1;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      const double v = g.mass(i, j);
      if (v < worst_cell) {
        worst_cell = v;
        worst_i = i;
        worst_j = j;
      }
    }
  }
  if (worst_cell < -tol) {
    report.violations.push_back({"negative cell",
                                 "cell (" + std::to_string(worst_i) + "," + std::to_string(worst_j) + ")",
                                 -worst_cell});
  }
  report.worst_cell = worst_cell;

  double worst_marginal = 0.0;
  for (int i = 0; i < m; ++i) {
    double s = 0.0;
    for (int j = 0; j < m; ++j) s += g.mass(i, j);
    const double dev = std::abs(s - 1.0 / m);
    worst_marginal = std::max(worst_marginal, dev);
    if (dev > tol)
      report.violations.push_back({"row marginal", "row " + std::to_string(i), dev});
  }
  for (int j = 0; j < m; ++j) {
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += g.mass(i, j);
    const double dev = std::abs(s - 1.0 / m);
    worst_marginal = std::max(worst_marginal, dev);
    if (dev > tol)
      report.violations.push_back({"column marginal", "column " + std::to_string(j), dev});
  }
  report.worst_marginal = worst_marginal;

  double total = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) total += g.mass(i, j);
  report.total_mass_error = std::abs(total - 1.0);
  if (report.total_mass_error > tol)
    report.violations.push_back({"total mass", "grid", report.total_mass_error});

  report.passed = report.violations.empty();
  return report;
}

Grid3::Grid3(int m) : m_(m) {
  if (m < 1) throw ParameterError("grid resolution must be >= 1");
  mass_.assign(static_cast<std::size_t>(m) * m * m, 0.0);
}

Grid3::Grid3(int m, std::vector<double> mass) : m_(m), mass_(std::move(mass)) {
  if (m < 1) throw ParameterError("grid resolution must be >= 1");
  if (mass_.size() != static_cast<std::size_t>(m) * m * m)
    throw ParameterError("trivariate mass size does not match resolution");
}

double Grid3::total_mass() const {
  double s = 0.0;
  for (double v : mass_) s += v;
  return s;
}

std::vector<double> Grid3::margin(int axis) const {
  if (axis < 0 || axis > 2) throw ParameterError("axis must be 0, 1 or 2");
  std::vector<double> out(m_, 0.0);
  for (int i = 0; i < m_; ++i)
    for (int j = 0; j < m_; ++j)
      for (int k = 0; k < m_; ++k) {
        const int idx = axis == 0 ? i : (axis == 1 ? j : k);
        out[idx] += mass(i, j, k);
      }
  return out;
}

GridCopula Grid3::collapse_middle() const {
  std::vector<double> out(static_cast<std::size_t>(m_) * m_, 0.0);
  for (int i = 0; i < m_; ++i)
    for (int j = 0; j < m_; ++j)
      for (int k = 0; k < m_; ++k) out[static_cast<std::size_t>(i) * m_ + k] += mass(i, j, k);
  return GridCopula(m_, std::move(out));
}

Grid3 Grid3::permute(const std::array<int, 3>& perm) const {
  bool seen[3] = {false, false, false};
  for (int a : perm) {
    if (a < 0 || a > 2 || seen[a]) throw ParameterError("permutation must be a bijection on {0,1,2}");
    seen[a] = true;
  }
  Grid3 out(m_);
  int idx[3];
  for (int i = 0; i < m_; ++i)
    for (int j = 0; j < m_; ++j)
      for (int k = 0; k < m_; ++k) {
        const int old_idx[3] = {i, j, k};
        // new coordinate a reads the old coordinate perm[a]
        for (int a = 0; a < 3; ++a) idx[a] = old_idx[perm[a]];
        out.at(idx[0], idx[1], idx[2]) = mass(i, j, k);
      }
  return out;
}

}  // namespace copmix
