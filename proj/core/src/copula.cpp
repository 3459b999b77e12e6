#include "copmix/copula.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "copmix/algebra.hpp"
#include "copmix/errors.hpp"

namespace copmix {

struct CopulaExpr::Node {
  Kind kind = Kind::Pi;
  double a = 0.0, b = 0.0;  // Mardia weights
  double theta = 0.0;
  int n = 1;
  std::shared_ptr<const GridCopula> grid;
  std::vector<double> weights;
  std::vector<CopulaExpr> children;
};

namespace {

void check_unit(double x, const char* name) {
  if (!(x >= 0.0 && x <= 1.0))
    throw ParameterError(std::string(name) + " must lie in [0,1]");
}

}  // namespace

CopulaExpr CopulaExpr::pi() {
  static const auto node = [] {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Pi;
    return n;
  }();
  return CopulaExpr(node);
}

CopulaExpr CopulaExpr::m() {
  static const auto node = [] {
    auto n = std::make_shared<Node>();
    n->kind = Kind::M;
    return n;
  }();
  return CopulaExpr(node);
}

CopulaExpr CopulaExpr::w() {
  static const auto node = [] {
    auto n = std::make_shared<Node>();
    n->kind = Kind::W;
    return n;
  }();
  return CopulaExpr(node);
}

CopulaExpr CopulaExpr::mardia(double a, double b) {
  if (!(a >= 0.0 && b >= 0.0 && a + b <= 1.0 + 1e-15))
    throw ParameterError("family weights require a,b >= 0 and a+b <= 1");
  auto node = std::make_shared<Node>();
  node->kind = Kind::Mardia;
  node->a = a;
  node->b = b;
  return CopulaExpr(node);
}

CopulaExpr CopulaExpr::grid(GridCopula g) {
  auto report = validate(g);
  if (!report.passed) {
    throw InvalidCopulaError("grid fails copula axioms: " + report.violations.front().check +
                             " at " + report.violations.front().location);
  }
  auto node = std::make_shared<Node>();
  node->kind = Kind::Grid;
  node->grid = std::make_shared<const GridCopula>(std::move(g));
  return CopulaExpr(node);
}

CopulaExpr CopulaExpr::convex(std::vector<double> weights, std::vector<CopulaExpr> components) {
  if (weights.size() != components.size() || weights.empty())
    throw ParameterError("convex combination needs matching nonempty weights and components");
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw ParameterError("convex weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw ParameterError("convex weights must sum to 1 within 1e-12");
  auto node = std::make_shared<Node>();
  node->kind = Kind::Convex;
  node->weights = std::move(weights);
  node->children = std::move(components);
  return CopulaExpr(node);
}

CopulaExpr CopulaExpr::perturb_pi(CopulaExpr base, double theta) {
  check_unit(theta, "theta");
  auto node = std::make_shared<Node>();
  node->kind = Kind::PerturbPi;
  node->theta = theta;
  node->children.push_back(std::move(base));
  return CopulaExpr(node);
}

CopulaExpr CopulaExpr::perturb_m(CopulaExpr base, double theta) {
  check_unit(theta, "theta");
  auto node = std::make_shared<Node>();
  node->kind = Kind::PerturbM;
  node->theta = theta;
  node->children.push_back(std::move(base));
  return CopulaExpr(node);
}

CopulaExpr CopulaExpr::fold_power(CopulaExpr base, int n) {
  if (n < 1) throw ParameterError("fold power requires n >= 1");
  auto node = std::make_shared<Node>();
  node->kind = Kind::FoldPower;
  node->n = n;
  node->children.push_back(std::move(base));
  return CopulaExpr(node);
}

CopulaExpr::Kind CopulaExpr::kind() const { return node_->kind; }
double CopulaExpr::mardia_a() const { return node_->a; }
double CopulaExpr::mardia_b() const { return node_->b; }
double CopulaExpr::theta() const { return node_->theta; }
int CopulaExpr::power_n() const { return node_->n; }
const GridCopula& CopulaExpr::grid_ref() const { return *node_->grid; }
const std::vector<double>& CopulaExpr::weights() const { return node_->weights; }
const std::vector<CopulaExpr>& CopulaExpr::components() const { return node_->children; }
const CopulaExpr& CopulaExpr::base() const { return node_->children.front(); }

std::string CopulaExpr::describe() const {
  std::ostringstream os;
  switch (kind()) {
    case Kind::Pi: os << "Pi"; break;
    case Kind::M: os << "M"; break;
    case Kind::W: os << "W"; break;
    case Kind::Mardia: os << "mardia(" << mardia_a() << "," << mardia_b() << ")"; break;
    case Kind::Grid: os << "grid(m=" << grid_ref().m() << ")"; break;
    case Kind::Convex: {
      os << "convex[";
      for (std::size_t i = 0; i < weights().size(); ++i) {
        if (i) os << " + ";
        os << weights()[i] << "*" << components()[i].describe();
      }
      os << "]";
      break;
    }
    case Kind::PerturbPi: os << "perturb_pi(" << base().describe() << ", " << theta() << ")"; break;
    case Kind::PerturbM: os << "perturb_m(" << base().describe() << ", " << theta() << ")"; break;
    case Kind::FoldPower: os << "fold_power(" << base().describe() << ", " << power_n() << ")"; break;
  }
  return os.str();
}

double eval_cdf(const CopulaExpr& c, double u, double v) {
  check_unit(u, "u");
  check_unit(v, "v");
  switch (c.kind()) {
    case CopulaExpr::Kind::Pi: return u * v;
    case CopulaExpr::Kind::M: return std::min(u, v);
    case CopulaExpr::Kind::W: return std::max(u + v - 1.0, 0.0);
    case CopulaExpr::Kind::Mardia: {
      const double a = c.mardia_a(), b = c.mardia_b();
      return a * std::min(u, v) + b * std::max(u + v - 1.0, 0.0) + (1.0 - a - b) * u * v;
    }
    case CopulaExpr::Kind::Grid: return c.grid_ref().cdf(u, v);
    case CopulaExpr::Kind::Convex: {
      double acc = 0.0;
      for (std::size_t i = 0; i < c.weights().size(); ++i)
        if (c.weights()[i] > 0.0) acc += c.weights()[i] * eval_cdf(c.components()[i], u, v);
      return acc;
    }
    case CopulaExpr::Kind::PerturbPi:
      return (1.0 - c.theta()) * eval_cdf(c.base(), u, v) + c.theta() * u * v;
    case CopulaExpr::Kind::PerturbM:
      return (1.0 - c.theta()) * eval_cdf(c.base(), u, v) + c.theta() * std::min(u, v);
    case CopulaExpr::Kind::FoldPower:
      return eval_cdf(n_fold(c.base(), c.power_n()), u, v);
  }
  throw ParameterError("unknown expression kind");
}

double conditional_cdf(const CopulaExpr& c, double x, double v) {
  check_unit(x, "x");
  check_unit(v, "v");
  switch (c.kind()) {
    case CopulaExpr::Kind::Pi: return v;
    case CopulaExpr::Kind::M: return v >= x ? 1.0 : 0.0;
    case CopulaExpr::Kind::W: return v >= 1.0 - x ? 1.0 : 0.0;
    case CopulaExpr::Kind::Mardia: {
      const double a = c.mardia_a(), b = c.mardia_b();
      return a * (v >= x ? 1.0 : 0.0) + b * (v >= 1.0 - x ? 1.0 : 0.0) + (1.0 - a - b) * v;
    }
    case CopulaExpr::Kind::Grid: return c.grid_ref().conditional_cdf(x, v);
    case CopulaExpr::Kind::Convex: {
      double acc = 0.0;
      for (std::size_t i = 0; i < c.weights().size(); ++i)
        if (c.weights()[i] > 0.0) acc += c.weights()[i] * conditional_cdf(c.components()[i], x, v);
      return acc;
    }
    case CopulaExpr::Kind::PerturbPi:
      return (1.0 - c.theta()) * conditional_cdf(c.base(), x, v) + c.theta() * v;
    case CopulaExpr::Kind::PerturbM:
      return (1.0 - c.theta()) * conditional_cdf(c.base(), x, v) +
             c.theta() * (v >= x ? 1.0 : 0.0);
    case CopulaExpr::Kind::FoldPower:
      return conditional_cdf(n_fold(c.base(), c.power_n()), x, v);
  }
  throw ParameterError("unknown expression kind");
}

namespace {

// out += scale * cells of the discretized atom.
void add_uniform(std::vector<double>& out, int m, double scale) {
  const double w = scale / (static_cast<double>(m) * m);
  for (auto& x : out) x += w;
}

void add_diagonal(std::vector<double>& out, int m, double scale) {
  const double w = scale / m;
  for (int i = 0; i < m; ++i) out[static_cast<std::size_t>(i) * m + i] += w;
}

void add_antidiagonal(std::vector<double>& out, int m, double scale) {
  const double w = scale / m;
  for (int i = 0; i < m; ++i) out[static_cast<std::size_t>(i) * m + (m - 1 - i)] += w;
}

void add_grid_resampled(std::vector<double>& out, int m, const GridCopula& g, double scale) {
  if (g.m() == m) {
    for (std::size_t idx = 0; idx < out.size(); ++idx) out[idx] += scale * g.masses()[idx];
    return;
  }
  if (m % g.m() == 0) {
    const GridCopula fine = g.refine(m / g.m());
    for (std::size_t idx = 0; idx < out.size(); ++idx) out[idx] += scale * fine.masses()[idx];
    return;
  }
  if (g.m() % m == 0) {
    const GridCopula coarse = g.coarsen(g.m() / m);
    for (std::size_t idx = 0; idx < out.size(); ++idx) out[idx] += scale * coarse.masses()[idx];
    return;
  }
  // Incommensurate resolutions: rectangle masses of the bilinear CDF.
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      const double u0 = static_cast<double>(i) / m, u1 = static_cast<double>(i + 1) / m;
      const double v0 = static_cast<double>(j) / m, v1 = static_cast<double>(j + 1) / m;
      const double cell = g.cdf(u1, v1) - g.cdf(u0, v1) - g.cdf(u1, v0) + g.cdf(u0, v0);
      out[static_cast<std::size_t>(i) * m + j] += scale * cell;
    }
  }
}

void accumulate_cells(std::vector<double>& out, int m, const CopulaExpr& c, double scale) {
  switch (c.kind()) {
    case CopulaExpr::Kind::Pi: add_uniform(out, m, scale); return;
    case CopulaExpr::Kind::M: add_diagonal(out, m, scale); return;
    case CopulaExpr::Kind::W: add_antidiagonal(out, m, scale); return;
    case CopulaExpr::Kind::Mardia: {
      const double a = c.mardia_a(), b = c.mardia_b();
      if (a > 0.0) add_diagonal(out, m, scale * a);
      if (b > 0.0) add_antidiagonal(out, m, scale * b);
      if (a + b < 1.0) add_uniform(out, m, scale * (1.0 - a - b));
      return;
    }
    case CopulaExpr::Kind::Grid: add_grid_resampled(out, m, c.grid_ref(), scale); return;
    case CopulaExpr::Kind::Convex: {
      for (std::size_t i = 0; i < c.weights().size(); ++i)
        if (c.weights()[i] > 0.0) accumulate_cells(out, m, c.components()[i], scale * c.weights()[i]);
      return;
    }
    case CopulaExpr::Kind::PerturbPi:
      if (c.theta() < 1.0) accumulate_cells(out, m, c.base(), scale * (1.0 - c.theta()));
      if (c.theta() > 0.0) add_uniform(out, m, scale * c.theta());
      return;
    case CopulaExpr::Kind::PerturbM:
      if (c.theta() < 1.0) accumulate_cells(out, m, c.base(), scale * (1.0 - c.theta()));
      if (c.theta() > 0.0) add_diagonal(out, m, scale * c.theta());
      return;
    case CopulaExpr::Kind::FoldPower:
      accumulate_cells(out, m, n_fold(c.base(), c.power_n()), scale);
      return;
  }
  throw ParameterError("unknown expression kind");
}

}  // namespace

GridCopula discretize(const CopulaExpr& c, int m) {
  if (m < 1) throw ParameterError("grid resolution must be >= 1");
  std::vector<double> cells(static_cast<std::size_t>(m) * m, 0.0);
  accumulate_cells(cells, m, c, 1.0);
  for (auto& x : cells) {
    if (x < -1e-10)
      throw InvalidCopulaError("discretization produced a cell mass below -1e-10");
    if (x < 0.0) x = 0.0;
  }
  return GridCopula(m, std::move(cells));
}

int max_grid_resolution(const CopulaExpr& c) {
  switch (c.kind()) {
    case CopulaExpr::Kind::Grid: return c.grid_ref().m();
    case CopulaExpr::Kind::Convex: {
      int best = 0;
      for (const auto& comp : c.components()) best = std::max(best, max_grid_resolution(comp));
      return best;
    }
    case CopulaExpr::Kind::PerturbPi:
    case CopulaExpr::Kind::PerturbM:
    case CopulaExpr::Kind::FoldPower: return max_grid_resolution(c.base());
    default: return 0;
  }
}

int resolution_hint(const CopulaExpr& c) {
  const int best = max_grid_resolution(c);
  return best == 0 ? kDefaultResolution : best;
}

}  // namespace copmix
