#include "copmix/noise.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <thread>
#include <utility>

#include "copmix/algebra.hpp"
#include "copmix/errors.hpp"

namespace copmix {

namespace {

constexpr double kTailMass = 1e-9;
constexpr double kQuadTol = 1e-6;
constexpr int kTablePoints = 4097;

// ---------------------------------------------------------------- quadrature

struct Quad {
  std::vector<double> t;  // abscissae
  std::vector<double> w;  // weights
};

// Gauss-Legendre nodes on [-1, 1] by Newton iteration on the recurrence.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(static_cast<std::size_t>(n), 0.0);
  w.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double xi = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * xi * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (xi * p0 - p1) / (xi * xi - 1.0);
      const double dx = p0 / pp;
      xi -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    x[static_cast<std::size_t>(i)] = -xi;
    x[static_cast<std::size_t>(n - 1 - i)] = xi;
    w[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(n - 1 - i)] =
        2.0 / ((1.0 - xi * xi) * pp * pp);
  }
}

// n nodes on [0, 1].
Quad gl01(int n) {
  std::vector<double> x, w;
  gauss_legendre(n, x, w);
  Quad q;
  q.t.reserve(static_cast<std::size_t>(n));
  q.w.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    q.t.push_back(0.5 * (x[static_cast<std::size_t>(k)] + 1.0));
    q.w.push_back(0.5 * w[static_cast<std::size_t>(k)]);
  }
  return q;
}

// Composite rule on [0, 1] with panels graded geometrically toward both
// endpoints, where the quantile reparameterization is steepest.
Quad graded_panels(int per_panel) {
  std::vector<double> edges;
  edges.push_back(0.0);
  for (int k = 10; k >= 1; --k) edges.push_back(std::ldexp(1.0, -k));
  for (int k = 2; k <= 10; ++k) edges.push_back(1.0 - std::ldexp(1.0, -k));
  edges.push_back(1.0);
  std::vector<double> x, w;
  gauss_legendre(per_panel, x, w);
  Quad q;
  for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
    const double a = edges[e], b = edges[e + 1];
    for (int k = 0; k < per_panel; ++k) {
      q.t.push_back(0.5 * (b - a) * x[static_cast<std::size_t>(k)] + 0.5 * (a + b));
      q.w.push_back(0.5 * (b - a) * w[static_cast<std::size_t>(k)]);
    }
  }
  return q;
}

void run_rows(int count, int threads, const std::function<void(int)>& fn) {
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int r = 0; r < count; ++r) fn(r);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int r = next.fetch_add(1); r < count; r = next.fetch_add(1)) fn(r);
    });
  for (auto& th : pool) th.join();
}

}  // namespace

// ------------------------------------------------------------ Distribution1D

Distribution1D Distribution1D::uniform(double lo, double hi) {
  if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi))
    throw ParameterError("uniform distribution needs finite lo < hi");
  Distribution1D d;
  d.kind_ = Kind::Uniform;
  d.a_ = lo;
  d.b_ = hi;
  d.lo_ = lo;
  d.hi_ = hi;
  return d;
}

Distribution1D Distribution1D::normal(double mean, double sd) {
  if (!(std::isfinite(mean) && std::isfinite(sd) && sd > 0.0))
    throw ParameterError("normal distribution needs finite mean and sd > 0");
  Distribution1D d;
  d.kind_ = Kind::Normal;
  d.a_ = mean;
  d.b_ = sd;
  d.lo_ = d.quantile(kTailMass);
  d.hi_ = d.quantile(1.0 - kTailMass);
  return d;
}

Distribution1D Distribution1D::point_mass(double c) {
  if (!std::isfinite(c)) throw ParameterError("point mass location must be finite");
  Distribution1D d;
  d.kind_ = Kind::PointMass;
  d.a_ = c;
  d.lo_ = d.hi_ = c;
  return d;
}

Distribution1D Distribution1D::empirical(std::vector<double> sample) {
  if (sample.empty()) throw ParameterError("empirical distribution needs a nonempty sample");
  for (double v : sample)
    if (!std::isfinite(v)) throw ParameterError("empirical sample contains a non-finite value");
  std::sort(sample.begin(), sample.end());
  Distribution1D d;
  d.kind_ = Kind::Empirical;
  d.xs_ = std::move(sample);
  d.lo_ = d.xs_.front();
  d.hi_ = d.xs_.back();
  return d;
}

Distribution1D Distribution1D::table(std::vector<double> xs, std::vector<double> ps) {
  if (xs.size() != ps.size() || xs.size() < 2)
    throw ParameterError("CDF table needs matching abscissae and levels, at least 2 points");
  for (std::size_t i = 0; i + 1 < xs.size(); ++i)
    if (!(xs[i] < xs[i + 1])) throw ParameterError("CDF table abscissae must increase strictly");
  double prev = 0.0;
  for (double& p : ps) {
    if (!std::isfinite(p)) throw ParameterError("CDF table level is not finite");
    p = std::min(1.0, std::max(p, prev));
    prev = p;
  }
  Distribution1D d;
  d.kind_ = Kind::Table;
  d.xs_ = std::move(xs);
  d.ps_ = std::move(ps);
  d.lo_ = d.xs_.front();
  d.hi_ = d.xs_.back();
  return d;
}

double Distribution1D::cdf(double x) const {
  switch (kind_) {
    case Kind::Uniform:
      if (x <= a_) return 0.0;
      if (x >= b_) return 1.0;
      return (x - a_) / (b_ - a_);
    case Kind::Normal: return 0.5 * std::erfc(-(x - a_) / (b_ * M_SQRT2));
    case Kind::PointMass: return x >= a_ ? 1.0 : 0.0;
    case Kind::Empirical: {
      const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
      return static_cast<double>(it - xs_.begin()) / static_cast<double>(xs_.size());
    }
    case Kind::Table: {
      if (x <= xs_.front()) return ps_.front();
      if (x >= xs_.back()) return ps_.back();
      const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
      const std::size_t i = static_cast<std::size_t>(it - xs_.begin());
      const double frac = (x - xs_[i - 1]) / (xs_[i] - xs_[i - 1]);
      return ps_[i - 1] + frac * (ps_[i] - ps_[i - 1]);
    }
  }
  throw ParameterError("unknown distribution kind");
}

double Distribution1D::quantile(double p) const {
  if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("quantile argument must lie in [0, 1]");
  switch (kind_) {
    case Kind::Uniform: return a_ + p * (b_ - a_);
    case Kind::Normal: {
      // bisection on a 10-sigma bracket (tail mass ~1e-24, far below the
      // 1e-9 truncation)
      double lo = a_ - 10.0 * b_, hi = a_ + 10.0 * b_;
      for (int it = 0; it < 64; ++it) {
        const double mid = 0.5 * (lo + hi);
        (cdf(mid) < p ? lo : hi) = mid;
      }
      return 0.5 * (lo + hi);
    }
    case Kind::PointMass: return a_;
    case Kind::Empirical: {
      const std::size_t n = xs_.size();
      if (p == 0.0) return xs_.front();
      const double r = std::ceil(p * static_cast<double>(n));
      const std::size_t i =
          std::min(n - 1, static_cast<std::size_t>(std::max(1.0, r)) - 1);
      return xs_[i];
    }
    case Kind::Table: {
      if (p <= ps_.front()) return xs_.front();
      if (p >= ps_.back()) return xs_.back();
      const auto it = std::lower_bound(ps_.begin(), ps_.end(), p);
      const std::size_t i = static_cast<std::size_t>(it - ps_.begin());
      if (i == 0) return xs_.front();
      const double dp = ps_[i] - ps_[i - 1];
      if (dp <= 0.0) return xs_[i - 1];
      return xs_[i - 1] + (p - ps_[i - 1]) / dp * (xs_[i] - xs_[i - 1]);
    }
  }
  throw ParameterError("unknown distribution kind");
}

Distribution1D Distribution1D::shifted(double c) const {
  if (!std::isfinite(c)) throw ParameterError("shift must be finite");
  switch (kind_) {
    case Kind::Uniform: return uniform(a_ + c, b_ + c);
    case Kind::Normal: return normal(a_ + c, b_);
    case Kind::PointMass: return point_mass(a_ + c);
    case Kind::Empirical: {
      std::vector<double> xs = xs_;
      for (double& x : xs) x += c;
      return empirical(std::move(xs));
    }
    case Kind::Table: {
      std::vector<double> xs = xs_;
      for (double& x : xs) x += c;
      return table(std::move(xs), ps_);
    }
  }
  throw ParameterError("unknown distribution kind");
}

std::string Distribution1D::describe() const {
  char buf[96];
  switch (kind_) {
    case Kind::Uniform: std::snprintf(buf, sizeof buf, "uniform(%g,%g)", a_, b_); break;
    case Kind::Normal: std::snprintf(buf, sizeof buf, "normal(%g,%g)", a_, b_); break;
    case Kind::PointMass: std::snprintf(buf, sizeof buf, "point(%g)", a_); break;
    case Kind::Empirical:
      std::snprintf(buf, sizeof buf, "empirical(n=%zu)", xs_.size());
      break;
    case Kind::Table:
      std::snprintf(buf, sizeof buf, "table(%zu points, [%g,%g])", xs_.size(), lo_, hi_);
      break;
  }
  return buf;
}

// ---------------------------------------------------------------- sum_cdf

namespace {

Distribution1D convolve_atoms(const Distribution1D& f, const Distribution1D& atoms) {
  std::vector<double> pts = atoms.knots();
  // thin very large samples so the table stays affordable; atoms are
  // sorted, so striding keeps the quantile spread
  const std::size_t cap = 16384;
  if (pts.size() > cap) {
    std::vector<double> thin;
    thin.reserve(cap);
    const double step = static_cast<double>(pts.size()) / static_cast<double>(cap);
    for (std::size_t i = 0; i < cap; ++i)
      thin.push_back(pts[static_cast<std::size_t>((static_cast<double>(i) + 0.5) * step)]);
    pts = std::move(thin);
  }
  const double lo = f.lo() + atoms.lo(), hi = f.hi() + atoms.hi();
  std::vector<double> xs(kTablePoints), ps(kTablePoints);
  const double inv = 1.0 / static_cast<double>(pts.size());
  for (int i = 0; i < kTablePoints; ++i) {
    const double x = lo + (hi - lo) * i / (kTablePoints - 1);
    double acc = 0.0;
    for (double t : pts) acc += f.cdf(x - t);
    xs[static_cast<std::size_t>(i)] = x;
    ps[static_cast<std::size_t>(i)] = acc * inv;
  }
  return Distribution1D::table(std::move(xs), std::move(ps));
}

Distribution1D convolve_quadrature(const Distribution1D& f, const Distribution1D& g) {
  const double lo = f.lo() + g.lo(), hi = f.hi() + g.hi();
  std::vector<double> xs(kTablePoints);
  for (int i = 0; i < kTablePoints; ++i)
    xs[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (kTablePoints - 1);

  std::vector<double> prev;
  for (int per_panel : {8, 16, 32}) {
    const Quad q = graded_panels(per_panel);
    std::vector<double> tq(q.t.size());
    for (std::size_t k = 0; k < q.t.size(); ++k) tq[k] = g.quantile(q.t[k]);
    std::vector<double> ps(kTablePoints);
    for (int i = 0; i < kTablePoints; ++i) {
      double acc = 0.0;
      for (std::size_t k = 0; k < tq.size(); ++k)
        acc += q.w[k] * f.cdf(xs[static_cast<std::size_t>(i)] - tq[k]);
      ps[static_cast<std::size_t>(i)] = acc;
    }
    if (!prev.empty()) {
      double sup = 0.0;
      for (int i = 0; i < kTablePoints; ++i)
        sup = std::max(sup, std::abs(ps[static_cast<std::size_t>(i)] -
                                     prev[static_cast<std::size_t>(i)]));
      if (sup < kQuadTol || per_panel == 32) {
        if (sup >= kQuadTol)
          std::cerr << "copmix: convolution quadrature stalled at change " << sup << "\n";
        return Distribution1D::table(std::move(xs), std::move(ps));
      }
    }
    prev = std::move(ps);
  }
  return Distribution1D::table(std::move(xs), std::move(prev));
}

}  // namespace

Distribution1D sum_cdf(const Distribution1D& f, const Distribution1D& g) {
  if (!(std::isfinite(f.lo()) && std::isfinite(f.hi()) && std::isfinite(g.lo()) &&
        std::isfinite(g.hi())))
    throw SupportError("sum needs distributions with finite effective support");
  using Kind = Distribution1D::Kind;
  if (g.kind() == Kind::PointMass) return f.shifted(g.param_a());
  if (f.kind() == Kind::PointMass) return g.shifted(f.param_a());
  if (g.kind() == Kind::Empirical) return convolve_atoms(f, g);
  if (f.kind() == Kind::Empirical) return convolve_atoms(g, f);
  return convolve_quadrature(f, g);
}

// ---------------------------------------------------------------- Copula3

Copula3::Copula3(double weight_m) : weight_m_(weight_m) {
  if (!(weight_m >= 0.0 && weight_m <= 1.0))
    throw ParameterError("trivariate mixture weight must lie in [0, 1]");
}

double Copula3::cdf(double u1, double u2, double u3) const {
  const double lo = std::min(u1, std::min(u2, u3));
  return weight_m_ * lo + (1.0 - weight_m_) * u1 * u2 * u3;
}

// ------------------------------------------------------- noisy checkerboards

namespace {

// FoldPower nodes re-derive their power on every CDF evaluation; resolve
// them once up front so the corner loops stay cheap.
CopulaExpr resolve_powers(const CopulaExpr& c) {
  using Kind = CopulaExpr::Kind;
  switch (c.kind()) {
    case Kind::FoldPower: return n_fold(resolve_powers(c.base()), c.power_n());
    case Kind::Convex: {
      std::vector<CopulaExpr> parts;
      parts.reserve(c.components().size());
      for (const auto& comp : c.components()) parts.push_back(resolve_powers(comp));
      return CopulaExpr::convex(c.weights(), parts);
    }
    case Kind::PerturbPi: return CopulaExpr::perturb_pi(resolve_powers(c.base()), c.theta());
    case Kind::PerturbM: return CopulaExpr::perturb_m(resolve_powers(c.base()), c.theta());
    default: return c;
  }
}

// Per-coordinate transform table: row j holds F_i(x_j - t_k) over the
// quadrature nodes, where x_j solves sum_k w_k F_i(x_j - t_k) = j/m with
// the same nodes.  That makes the quadrature marginals exactly uniform, so
// independence and common-shock comonotonicity survive discretization.
// A clean (noise-free) coordinate gets constant rows j/m.
std::vector<std::vector<double>> transform_rows(const Distribution1D* f,
                                                const std::vector<double>& t,
                                                const std::vector<double>& w, int m) {
  const std::size_t nn = t.size();
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(m) + 1,
                                        std::vector<double>(nn, 0.0));
  if (f == nullptr) {
    for (int j = 0; j <= m; ++j)
      rows[static_cast<std::size_t>(j)].assign(nn, static_cast<double>(j) / m);
    return rows;
  }
  rows[static_cast<std::size_t>(m)].assign(nn, 1.0);
  const double t_min = *std::min_element(t.begin(), t.end());
  const double t_max = *std::max_element(t.begin(), t.end());
  for (int j = 1; j < m; ++j) {
    const double target = static_cast<double>(j) / m;
    double lo = f->lo() + t_min, hi = f->hi() + t_max;
    for (int it = 0; it < 64; ++it) {
      const double mid = 0.5 * (lo + hi);
      double s = 0.0;
      for (std::size_t k = 0; k < nn; ++k) s += w[k] * f->cdf(mid - t[k]);
      (s < target ? lo : hi) = mid;
    }
    const double x = 0.5 * (lo + hi);
    if (!std::isfinite(x))
      throw NumericError("quantile inversion failed at u = " + std::to_string(target));
    auto& row = rows[static_cast<std::size_t>(j)];
    for (std::size_t k = 0; k < nn; ++k) row[k] = f->cdf(x - t[k]);
  }
  return rows;
}

std::vector<double> assemble_corners_biv(const CopulaExpr& c,
                                         const std::vector<std::vector<double>>& r1,
                                         const std::vector<std::vector<double>>& r2,
                                         const std::vector<double>& w1,
                                         const std::vector<double>& w2, bool independent,
                                         int m, int threads) {
  std::vector<double> corners(static_cast<std::size_t>(m + 1) * (m + 1));
  run_rows(m + 1, threads, [&](int j1) {
    const auto& a = r1[static_cast<std::size_t>(j1)];
    for (int j2 = 0; j2 <= m; ++j2) {
      const auto& b = r2[static_cast<std::size_t>(j2)];
      double acc = 0.0;
      if (independent) {
        for (std::size_t k1 = 0; k1 < a.size(); ++k1) {
          const double wa = w1[k1];
          double inner = 0.0;
          for (std::size_t k2 = 0; k2 < b.size(); ++k2)
            inner += w2[k2] * eval_cdf(c, a[k1], b[k2]);
          acc += wa * inner;
        }
      } else {
        for (std::size_t k = 0; k < a.size(); ++k) acc += w1[k] * eval_cdf(c, a[k], b[k]);
      }
      corners[static_cast<std::size_t>(j1) * (m + 1) + j2] = acc;
    }
  });
  return corners;
}

GridCopula cells_from_corners(const std::vector<double>& corners, int m) {
  std::vector<double> cells(static_cast<std::size_t>(m) * m);
  const auto at = [&](int i, int j) {
    return corners[static_cast<std::size_t>(i) * (m + 1) + j];
  };
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      double v = at(i + 1, j + 1) - at(i, j + 1) - at(i + 1, j) + at(i, j);
      if (v < 0.0 && v > -1e-9) v = 0.0;
      cells[static_cast<std::size_t>(i) * m + j] = v;
    }
  return GridCopula(m, std::move(cells));
}

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double sup = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sup = std::max(sup, std::abs(a[i] - b[i]));
  return sup;
}

GridCopula noisy_biv(const CopulaExpr& c_in, const std::vector<Distribution1D>& marginals,
                     const std::vector<const Distribution1D*>& noise_of_coord,
                     const Distribution1D* shock, int m, int threads) {
  if (marginals.size() != 2)
    throw ParameterError("bivariate noisy copula needs exactly 2 marginals");
  if (m < 1) throw ParameterError("resolution must be >= 1");
  const CopulaExpr c = resolve_powers(c_in);

  std::vector<double> prev;
  GridCopula out(m);
  for (int nodes : {128, 256, 512}) {
    std::vector<double> corners;
    if (shock != nullptr) {
      const Quad q = gl01(nodes);
      std::vector<double> t(q.t.size());
      for (std::size_t k = 0; k < q.t.size(); ++k) t[k] = shock->quantile(q.t[k]);
      const auto r1 = transform_rows(noise_of_coord[0] ? &marginals[0] : nullptr, t, q.w, m);
      const auto r2 = transform_rows(noise_of_coord[1] ? &marginals[1] : nullptr, t, q.w, m);
      corners = assemble_corners_biv(c, r1, r2, q.w, q.w, false, m, threads);
    } else {
      const Quad unit{{0.0}, {1.0}};
      Quad q1 = noise_of_coord[0] ? gl01(nodes) : unit;
      Quad q2 = noise_of_coord[1] ? gl01(nodes) : unit;
      if (noise_of_coord[0])
        for (std::size_t k = 0; k < q1.t.size(); ++k) q1.t[k] = noise_of_coord[0]->quantile(q1.t[k]);
      if (noise_of_coord[1])
        for (std::size_t k = 0; k < q2.t.size(); ++k) q2.t[k] = noise_of_coord[1]->quantile(q2.t[k]);
      const auto r1 =
          transform_rows(noise_of_coord[0] ? &marginals[0] : nullptr, q1.t, q1.w, m);
      const auto r2 =
          transform_rows(noise_of_coord[1] ? &marginals[1] : nullptr, q2.t, q2.w, m);
      corners = assemble_corners_biv(c, r1, r2, q1.w, q2.w, true, m, threads);
    }
    if (!prev.empty() && sup_diff(corners, prev) < kQuadTol) {
      return cells_from_corners(corners, m);
    }
    if (nodes == 512) {
      if (!prev.empty())
        std::cerr << "copmix: noise quadrature change " << sup_diff(corners, prev)
                  << " above tolerance at 512 nodes\n";
      return cells_from_corners(corners, m);
    }
    prev = std::move(corners);
  }
  return out;  // unreachable
}

}  // namespace

GridCopula noisy_copula_independent(const CopulaExpr& c,
                                    const std::vector<Distribution1D>& marginals,
                                    const std::vector<Distribution1D>& noises, int m,
                                    int threads) {
  if (marginals.size() != 2)
    throw ParameterError("bivariate noisy copula needs exactly 2 marginals");
  if (noises.size() > 2)
    throw ParameterError("at most 2 noise components for a bivariate copula");
  if (noises.empty()) return discretize(c, m);
  std::vector<const Distribution1D*> of_coord{nullptr, nullptr};
  for (std::size_t i = 0; i < noises.size(); ++i) of_coord[i] = &noises[i];
  return noisy_biv(c, marginals, of_coord, nullptr, m, threads);
}

GridCopula noisy_copula_common(const CopulaExpr& c, const std::vector<Distribution1D>& marginals,
                               const Distribution1D& shock, int s, int m, int threads) {
  if (marginals.size() != 2)
    throw ParameterError("bivariate noisy copula needs exactly 2 marginals");
  if (s < 0 || s > 2) throw ParameterError("shock count s must lie in {0, 1, 2}");
  if (s == 0) return discretize(c, m);
  std::vector<const Distribution1D*> of_coord{nullptr, nullptr};
  for (int i = 0; i < s; ++i) of_coord[static_cast<std::size_t>(i)] = &shock;
  if (s == 1) {
    // a single perturbed component: same as independent noise on it
    return noisy_biv(c, marginals, of_coord, nullptr, m, threads);
  }
  return noisy_biv(c, marginals, of_coord, &shock, m, threads);
}

// --------------------------------------------------------------- trivariate

namespace {

// E[min(V1,V2,V3)] over independent node draws V_i ~ (values_i, weights_i):
// integrate the survival product over the merged value sweep.
double expected_min3(const std::array<const std::vector<double>*, 3>& vals,
                     const std::array<const std::vector<double>*, 3>& wts,
                     std::vector<std::pair<double, std::pair<int, double>>>& events) {
  events.clear();
  double surv[3];
  for (int i = 0; i < 3; ++i) {
    surv[i] = 0.0;
    const auto& v = *vals[static_cast<std::size_t>(i)];
    const auto& w = *wts[static_cast<std::size_t>(i)];
    for (std::size_t k = 0; k < v.size(); ++k) {
      surv[i] += w[k];
      if (v[k] > 0.0) events.push_back({v[k], {i, w[k]}});
    }
    // values at 0 never survive past s = 0
    for (std::size_t k = 0; k < v.size(); ++k)
      if (v[k] <= 0.0) surv[i] -= w[k];
  }
  std::sort(events.begin(), events.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  double integral = 0.0, prev = 0.0;
  for (const auto& ev : events) {
    integral += (ev.first - prev) * surv[0] * surv[1] * surv[2];
    prev = ev.first;
    surv[ev.second.first] -= ev.second.second;
  }
  return integral;
}

Grid3 cells_from_corners3(const std::vector<double>& corners, int m) {
  const int mc = m + 1;
  const auto at = [&](int i, int j, int k) {
    return corners[(static_cast<std::size_t>(i) * mc + j) * mc + k];
  };
  Grid3 out(m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < m; ++k) {
        double v = at(i + 1, j + 1, k + 1) - at(i, j + 1, k + 1) - at(i + 1, j, k + 1) -
                   at(i + 1, j + 1, k) + at(i, j, k + 1) + at(i, j + 1, k) +
                   at(i + 1, j, k) - at(i, j, k);
        if (v < 0.0 && v > -1e-9) v = 0.0;
        out.at(i, j, k) = v;
      }
  return out;
}

Grid3 noisy_tri(const Copula3& c, const std::vector<Distribution1D>& marginals,
                const std::vector<const Distribution1D*>& noise_of_coord,
                const Distribution1D* shock, int m, int threads) {
  if (marginals.size() != 3)
    throw ParameterError("trivariate noisy copula needs exactly 3 marginals");
  if (m < 1) throw ParameterError("resolution must be >= 1");
  const int mc = m + 1;

  std::vector<double> prev;
  for (int nodes : {128, 256, 512}) {
    std::array<std::vector<std::vector<double>>, 3> rows;
    std::array<std::vector<double>, 3> wts;
    if (shock != nullptr) {
      const Quad q = gl01(nodes);
      std::vector<double> t(q.t.size());
      for (std::size_t k = 0; k < q.t.size(); ++k) t[k] = shock->quantile(q.t[k]);
      for (int i = 0; i < 3; ++i) {
        const std::size_t ui = static_cast<std::size_t>(i);
        rows[ui] = transform_rows(noise_of_coord[ui] ? &marginals[ui] : nullptr, t, q.w, m);
        wts[ui] = q.w;
      }
    } else {
      for (int i = 0; i < 3; ++i) {
        const std::size_t ui = static_cast<std::size_t>(i);
        if (noise_of_coord[ui]) {
          Quad q = gl01(nodes);
          for (std::size_t k = 0; k < q.t.size(); ++k)
            q.t[k] = noise_of_coord[ui]->quantile(q.t[k]);
          rows[ui] = transform_rows(&marginals[ui], q.t, q.w, m);
          wts[ui] = q.w;
        } else {
          rows[ui] = transform_rows(nullptr, {0.0}, {1.0}, m);
          wts[ui] = {1.0};
        }
      }
    }

    std::vector<double> corners(static_cast<std::size_t>(mc) * mc * mc);
    const double a = c.weight_m();
    run_rows(mc, threads, [&](int j1) {
      std::vector<std::pair<double, std::pair<int, double>>> scratch;
      for (int j2 = 0; j2 < mc; ++j2)
        for (int j3 = 0; j3 < mc; ++j3) {
          double value;
          if (shock != nullptr) {
            // single common integral
            const auto& r1 = rows[0][static_cast<std::size_t>(j1)];
            const auto& r2 = rows[1][static_cast<std::size_t>(j2)];
            const auto& r3 = rows[2][static_cast<std::size_t>(j3)];
            double acc = 0.0;
            for (std::size_t k = 0; k < r1.size(); ++k)
              acc += wts[0][k] * c.cdf(r1[k], r2[k], r3[k]);
            value = acc;
          } else {
            // the product term factorizes to (j1 j2 j3)/m^3 because the
            // transforms invert the quadrature marginal exactly
            const double prod = (static_cast<double>(j1) / m) * (static_cast<double>(j2) / m) *
                                (static_cast<double>(j3) / m);
            double mn = 0.0;
            if (a > 0.0) {
              mn = expected_min3({&rows[0][static_cast<std::size_t>(j1)],
                                  &rows[1][static_cast<std::size_t>(j2)],
                                  &rows[2][static_cast<std::size_t>(j3)]},
                                 {&wts[0], &wts[1], &wts[2]}, scratch);
            }
            value = a * mn + (1.0 - a) * prod;
          }
          corners[(static_cast<std::size_t>(j1) * mc + j2) * mc + j3] = value;
        }
    });

    if (!prev.empty() && sup_diff(corners, prev) < kQuadTol) return cells_from_corners3(corners, m);
    if (nodes == 512) {
      if (!prev.empty())
        std::cerr << "copmix: trivariate noise quadrature change " << sup_diff(corners, prev)
                  << " above tolerance at 512 nodes\n";
      return cells_from_corners3(corners, m);
    }
    prev = std::move(corners);
  }
  throw NumericError("unreachable quadrature state");
}

}  // namespace

Grid3 noisy_copula_independent3(const Copula3& c, const std::vector<Distribution1D>& marginals,
                                const std::vector<Distribution1D>& noises, int m, int threads) {
  if (noises.size() > 3)
    throw ParameterError("at most 3 noise components for a trivariate copula");
  std::vector<const Distribution1D*> of_coord{nullptr, nullptr, nullptr};
  for (std::size_t i = 0; i < noises.size(); ++i) of_coord[i] = &noises[i];
  return noisy_tri(c, marginals, of_coord, nullptr, m, threads);
}

Grid3 noisy_copula_common3(const Copula3& c, const std::vector<Distribution1D>& marginals,
                           const Distribution1D& shock, int s, int m, int threads) {
  if (s < 0 || s > 3) throw ParameterError("shock count s must lie in {0, 1, 2, 3}");
  std::vector<const Distribution1D*> of_coord{nullptr, nullptr, nullptr};
  for (int i = 0; i < s; ++i) of_coord[static_cast<std::size_t>(i)] = &shock;
  if (s <= 1) return noisy_tri(c, marginals, of_coord, nullptr, m, threads);
  return noisy_tri(c, marginals, of_coord, &shock, m, threads);
}

// -------------------------------------------------------------- permutation

GridCopula apply_permutation(const GridCopula& g, const std::vector<int>& perm) {
  if (perm.size() != 2)
    throw ParameterError("bivariate permutation must have 2 entries");
  bool seen[2] = {false, false};
  for (int p : perm) {
    if (p < 0 || p > 1 || seen[p])
      throw ParameterError("bivariate permutation must be a bijection on {0,1}");
    seen[p] = true;
  }
  return perm[0] == 0 ? g : g.transpose();
}

Grid3 apply_permutation(const Grid3& g, const std::vector<int>& perm) {
  if (perm.size() != 3) throw ParameterError("trivariate permutation must have 3 entries");
  return g.permute({perm[0], perm[1], perm[2]});
}

// --------------------------------------------------------- empirical copula

namespace {

// Rank r out of n owns the u-interval ((r-1)/n, r/n].  Splitting it across
// the m bins by exact overlap, in integer units of 1/(n*m), makes the
// aggregated checkerboard doubly stochastic by construction (this is the
// box average of the multilinear extension of the empirical copula).
struct BinSplit {
  int bin[2];
  std::int64_t units[2];
  int count;
};

BinSplit split_rank(std::int64_t r, std::int64_t n, std::int64_t m) {
  const std::int64_t a = (r - 1) * m;  // interval covers units a+1 .. a+m
  const std::int64_t b = r * m;
  const std::int64_t i0 = a / n;
  const std::int64_t i1 = (b - 1) / n;
  BinSplit s;
  if (i0 == i1) {
    s.bin[0] = static_cast<int>(i0);
    s.units[0] = m;
    s.count = 1;
  } else {
    s.bin[0] = static_cast<int>(i0);
    s.units[0] = (i0 + 1) * n - a;
    s.bin[1] = static_cast<int>(i1);
    s.units[1] = b - i1 * n;
    s.count = 2;
  }
  return s;
}

template <std::size_t N>
std::vector<std::int64_t> column_ranks(const std::vector<std::array<double, N>>& samples,
                                       int coord) {
  const std::size_t n = samples.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return samples[a][static_cast<std::size_t>(coord)] <
           samples[b][static_cast<std::size_t>(coord)];
  });
  std::vector<std::int64_t> rank(n);
  for (std::size_t r = 0; r < n; ++r) rank[order[r]] = static_cast<std::int64_t>(r) + 1;
  return rank;
}

}  // namespace

GridCopula empirical_copula(const std::vector<std::array<double, 2>>& samples, int m) {
  if (m < 1) throw ParameterError("resolution must be >= 1");
  const std::size_t n = samples.size();
  if (n < static_cast<std::size_t>(10) * m * m)
    throw SampleSizeError("empirical copula needs at least 10*m^2 = " +
                          std::to_string(10 * m * m) + " samples, got " + std::to_string(n));
  const auto rx = column_ranks(samples, 0);
  const auto ry = column_ranks(samples, 1);
  const std::int64_t nn = static_cast<std::int64_t>(n), mm = m;
  std::vector<std::int64_t> units(static_cast<std::size_t>(m) * m, 0);
  for (std::size_t t = 0; t < n; ++t) {
    const BinSplit sx = split_rank(rx[t], nn, mm);
    const BinSplit sy = split_rank(ry[t], nn, mm);
    for (int a = 0; a < sx.count; ++a)
      for (int b = 0; b < sy.count; ++b)
        units[static_cast<std::size_t>(sx.bin[a]) * m + sy.bin[b]] +=
            sx.units[a] * sy.units[b];
  }
  const double scale = 1.0 / (static_cast<double>(n) * m * m);
  std::vector<double> cells(units.size());
  for (std::size_t i = 0; i < units.size(); ++i)
    cells[i] = static_cast<double>(units[i]) * scale;
  return GridCopula(m, std::move(cells));
}

Grid3 empirical_copula3(const std::vector<std::array<double, 3>>& samples, int m) {
  if (m < 1) throw ParameterError("resolution must be >= 1");
  const std::size_t n = samples.size();
  if (n < static_cast<std::size_t>(10) * m * m)
    throw SampleSizeError("empirical copula needs at least 10*m^2 = " +
                          std::to_string(10 * m * m) + " samples, got " + std::to_string(n));
  const auto rx = column_ranks(samples, 0);
  const auto ry = column_ranks(samples, 1);
  const auto rz = column_ranks(samples, 2);
  const std::int64_t nn = static_cast<std::int64_t>(n), mm = m;
  std::vector<std::int64_t> units(static_cast<std::size_t>(m) * m * m, 0);
  for (std::size_t t = 0; t < n; ++t) {
    const BinSplit sx = split_rank(rx[t], nn, mm);
    const BinSplit sy = split_rank(ry[t], nn, mm);
    const BinSplit sz = split_rank(rz[t], nn, mm);
    for (int a = 0; a < sx.count; ++a)
      for (int b = 0; b < sy.count; ++b)
        for (int c = 0; c < sz.count; ++c)
          units[(static_cast<std::size_t>(sx.bin[a]) * m + sy.bin[b]) * m + sz.bin[c]] +=
              sx.units[a] * sy.units[b] * sz.units[c];
  }
  const double scale = 1.0 / (static_cast<double>(n) * m * m * m);
  std::vector<double> cells(units.size());
  for (std::size_t i = 0; i < units.size(); ++i)
    cells[i] = static_cast<double>(units[i]) * scale;
  return Grid3(m, std::move(cells));
}

// --------------------------------------------------------------- dispatcher

GridCopula apply_noise(const CopulaExpr& c, const std::vector<Distribution1D>& marginals,
                       const NoiseSpec& spec, int m, int threads) {
  if (spec.s < 0 || spec.s > 2)
    throw ParameterError("bivariate noise supports at most s = 2 perturbed components");
  GridCopula out(m);
  if (spec.mode == NoiseSpec::Mode::Independent) {
    if (static_cast<int>(spec.dists.size()) != spec.s)
      throw ParameterError("independent noise needs one distribution per perturbed component");
    out = noisy_copula_independent(c, marginals, spec.dists, m, threads);
  } else {
    if (spec.dists.size() != 1)
      throw ParameterError("common-shock noise needs exactly one distribution");
    out = noisy_copula_common(c, marginals, spec.dists.front(), spec.s, m, threads);
  }
  if (spec.permutation) out = apply_permutation(out, *spec.permutation);
  return out;
}

}  // namespace copmix
