#include "copmix/mixing.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>

#include "copmix/errors.hpp"
#include "copmix/rng.hpp"

namespace copmix {

namespace {

std::vector<int> bits_to_indices(std::uint32_t mask, int m) {
  std::vector<int> out;
  for (int i = 0; i < m; ++i)
    if (mask >> i & 1u) out.push_back(i);
  return out;
}

double set_sum(const std::vector<double>& d, int m, const std::vector<int>& a,
               const std::vector<int>& b) {
  double acc = 0.0;
  for (int i : a)
    for (int j : b) acc += d[static_cast<std::size_t>(i) * m + j];
  return acc;
}

struct AlphaBest {
  double running = 0.0;  // comparison value from the incremental scan
  double value = 0.0;    // recomputed from the captured sets
  std::vector<int> a, b;

  // Keep the larger value; break near-ties lexicographically on (A, B) so
  // the result does not depend on enumeration order.
  void offer(double val, std::vector<int> ca, std::vector<int> cb, const std::vector<double>& d,
             int m) {
    if (val < running - 1e-14) return;
    if (val <= running + 1e-14) {
      if (!(ca < a || (ca == a && cb < b))) return;
    }
    running = std::max(running, val);
    a = std::move(ca);
    b = std::move(cb);
    value = std::abs(set_sum(d, m, a, b));
  }
};

void offer_branches(AlphaBest& best, const std::vector<double>& col, std::uint32_t mask, int m,
                    const std::vector<double>& d) {
  double pos = 0.0, neg = 0.0;
  for (int j = 0; j < m; ++j) {
    if (col[j] > 0.0)
      pos += col[j];
    else
      neg -= col[j];
  }
  const double cutoff = std::max(best.running - 1e-14, 0.0);
  if (pos >= cutoff && pos > 0.0) {
    std::vector<int> b;
    for (int j = 0; j < m; ++j)
      if (col[j] > 0.0) b.push_back(j);
    best.offer(pos, bits_to_indices(mask, m), std::move(b), d, m);
  }
  if (neg >= cutoff && neg > 0.0) {
    std::vector<int> b;
    for (int j = 0; j < m; ++j)
      if (col[j] < 0.0) b.push_back(j);
    best.offer(neg, bits_to_indices(mask, m), std::move(b), d, m);
  }
}

AlphaSolution alpha_brute(const std::vector<double>& d, int m) {
  AlphaBest best;
  std::vector<double> col(static_cast<std::size_t>(m), 0.0);
  std::uint32_t cur = 0;
  const std::uint64_t total = std::uint64_t{1} << m;
  for (std::uint64_t k = 1; k < total; ++k) {
    const int bit = __builtin_ctzll(k);
    const double sign = (cur >> bit & 1u) ? -1.0 : 1.0;
    cur ^= std::uint32_t{1} << bit;
    const double* row = d.data() + static_cast<std::size_t>(bit) * m;
    for (int j = 0; j < m; ++j) col[j] += sign * row[j];
    if ((k & 0xfffu) == 0) {
      // refresh the accumulators to stop toggling drift
      std::fill(col.begin(), col.end(), 0.0);
      for (int i = 0; i < m; ++i)
        if (cur >> i & 1u)
          for (int j = 0; j < m; ++j) col[j] += d[static_cast<std::size_t>(i) * m + j];
    }
    offer_branches(best, col, cur, m, d);
  }
  return AlphaSolution{best.value, best.a, best.b, true};
}

AlphaSolution alpha_heuristic(const std::vector<double>& d, int m) {
  AlphaBest best;
  for (std::uint64_t start = 0; start < 32; ++start) {
    Rng rng(0xa1f4c0efu, start);
    std::vector<char> in_a(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) in_a[static_cast<std::size_t>(i)] = rng.uniform() < 0.5;
    double prev = -1.0;
    std::vector<char> in_b(static_cast<std::size_t>(m), 0);
    for (int sweep = 0; sweep < 200; ++sweep) {
      // optimal B given A, both sign branches
      std::vector<double> col(static_cast<std::size_t>(m), 0.0);
      for (int i = 0; i < m; ++i)
        if (in_a[static_cast<std::size_t>(i)])
          for (int j = 0; j < m; ++j) col[j] += d[static_cast<std::size_t>(i) * m + j];
      double pos = 0.0, neg = 0.0;
      for (int j = 0; j < m; ++j) (col[j] > 0.0 ? pos : neg) += std::abs(col[j]);
      const bool positive = pos >= neg;
      for (int j = 0; j < m; ++j)
        in_b[static_cast<std::size_t>(j)] = positive ? col[j] > 0.0 : col[j] < 0.0;
      // optimal A given B on the same branch
      std::vector<double> rowscore(static_cast<std::size_t>(m), 0.0);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
          if (in_b[static_cast<std::size_t>(j)])
            rowscore[static_cast<std::size_t>(i)] += d[static_cast<std::size_t>(i) * m + j];
      double val = 0.0;
      for (int i = 0; i < m; ++i) {
        in_a[static_cast<std::size_t>(i)] =
            positive ? rowscore[static_cast<std::size_t>(i)] > 0.0
                     : rowscore[static_cast<std::size_t>(i)] < 0.0;
        if (in_a[static_cast<std::size_t>(i)]) val += rowscore[static_cast<std::size_t>(i)];
      }
      val = std::abs(val);
      if (val <= prev + 1e-14) break;
      prev = val;
    }
    std::vector<int> a, b;
    for (int i = 0; i < m; ++i) {
      if (in_a[static_cast<std::size_t>(i)]) a.push_back(i);
      if (in_b[static_cast<std::size_t>(i)]) b.push_back(i);
    }
    // evaluate before the call: the moves below would otherwise race it
    const double found = std::abs(set_sum(d, m, a, b));
    best.offer(found, std::move(a), std::move(b), d, m);
  }
  return AlphaSolution{best.value, best.a, best.b, false};
}

}  // namespace

AlphaSolution alpha_coefficient(const GridCopula& g) {
  const int m = g.m();
  const double uniform = 1.0 / (static_cast<double>(m) * m);
  std::vector<double> d(g.masses());
  for (double& x : d) x -= uniform;
  return m <= 20 ? alpha_brute(d, m) : alpha_heuristic(d, m);
}

double rho_coefficient(const GridCopula& g) {
  const auto report = validate(g);
  if (!report.passed)
    throw InvalidCopulaError("maximal correlation needs a valid copula grid, failed check: " +
                             report.violations.front().check);
  const int m = g.m();
  if (m == 1) return 0.0;
  Eigen::MatrixXd q(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) q(i, j) = m * g.mass(i, j);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(q);
  if (svd.info() != Eigen::Success)
    throw NumericError("singular decomposition of the transition matrix failed");
  return std::clamp(svd.singularValues()(1), 0.0, 1.0);
}

double psi_prime_lower(const GridCopula& g) { return g.min_density(); }

MixingReport mixing_scan(const CopulaExpr& c, double theta, PerturbFamily family, int n_max,
                         int m) {
  if (n_max < 2) throw ParameterError("mixing scan requires n_max >= 2");
  if (m < 1) throw ParameterError("resolution must be >= 1");
  if (theta < 0.0 || theta > 1.0) throw ParameterError("theta must lie in [0, 1]");

  const GridCopula base = discretize(c, m);
  const std::size_t cells_n = static_cast<std::size_t>(m) * m;
  const double uniform = 1.0 / static_cast<double>(cells_n);

  std::vector<GridCopula> powers;
  powers.reserve(static_cast<std::size_t>(n_max));
  powers.push_back(base);
  for (int n = 2; n <= n_max; ++n) powers.push_back(fold_product_grid(powers.back(), base));

  const std::vector<double> diag = discretize(CopulaExpr::m(), m).masses();

  MixingReport rep;
  for (int n = 1; n <= n_max; ++n) {
    std::vector<double> cells(cells_n, 0.0);
    if (family == PerturbFamily::Pi) {
      const double keep = std::pow(1.0 - theta, n);
      const auto& p = powers[static_cast<std::size_t>(n - 1)].masses();
      for (std::size_t idx = 0; idx < cells_n; ++idx)
        cells[idx] = keep * p[idx] + (1.0 - keep) * uniform;
    } else {
      const double w_m = std::pow(theta, n);
      if (w_m > 0.0)
        for (std::size_t idx = 0; idx < cells_n; ++idx) cells[idx] = w_m * diag[idx];
      double binom = 1.0;
      for (int i = 1; i <= n; ++i) {
        binom *= static_cast<double>(n - i + 1) / static_cast<double>(i);
        const double w = binom * std::pow(theta, n - i) * std::pow(1.0 - theta, i);
        if (w == 0.0) continue;
        const auto& p = powers[static_cast<std::size_t>(i - 1)].masses();
        for (std::size_t idx = 0; idx < cells_n; ++idx) cells[idx] += w * p[idx];
      }
    }
    GridCopula lag_grid(m, std::move(cells));
    rep.lags.push_back(n);
    rep.alpha.push_back(alpha_coefficient(lag_grid).value);
    rep.rho.push_back(rho_coefficient(lag_grid));
    rep.psi_prime_lower.push_back(psi_prime_lower(lag_grid));
  }
  const auto fit = fit_log_decay(rep.lags, rep.alpha);
  rep.fitted_log_rate = fit.first;
  rep.fit_residual = fit.second;
  rep.alpha_nonvanishing = rep.alpha.back() > 0.2;
  return rep;
}

namespace {

template <class Eval>
CertificateSearch product_search(const std::vector<CopulaExpr>& components,
                                 const std::vector<double>& weights, int s_max, int m,
                                 Certificate::Kind kind, double threshold, const Eval& eval) {
  if (components.empty() || components.size() != weights.size())
    throw ParameterError("certificate search needs matching, nonempty components and weights");
  double wsum = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw ParameterError("certificate weights must be strictly positive");
    wsum += w;
  }
  if (std::abs(wsum - 1.0) > 1e-12) throw ParameterError("certificate weights must sum to 1");
  if (s_max < 1) throw ParameterError("product length cap must be >= 1");
  if (m < 1) throw ParameterError("resolution must be >= 1");
  const int k = static_cast<int>(components.size());
  double budget = 0.0, pow_k = 1.0;
  for (int s = 1; s <= s_max; ++s) {
    pow_k *= k;
    budget += pow_k;
    if (budget > static_cast<double>(std::size_t{1} << 20))
      throw BlowupError("certificate search over " + std::to_string(k) + " components to length " +
                        std::to_string(s_max) + " is too large");
  }

  std::vector<GridCopula> atoms;
  atoms.reserve(components.size());
  for (const auto& c : components) atoms.push_back(discretize(c, m));

  CertificateSearch out;
  for (int s = 1; s <= s_max; ++s) {
    std::vector<int> idx(static_cast<std::size_t>(s), 0);
    std::vector<GridCopula> prefix;
    prefix.reserve(static_cast<std::size_t>(s));
    for (int d = 0; d < s; ++d)
      prefix.push_back(d == 0 ? atoms[0] : fold_product_grid(prefix.back(), atoms[0]));
    while (true) {
      const double val = eval(prefix.back());
      if (val < out.attained_min) {
        out.attained_min = val;
        out.best_witness = idx;
        out.best_s = s;
      }
      if (val < threshold) {
        out.certificate = Certificate{kind, s, idx, val};
        return out;
      }
      int pos = s - 1;
      while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == k - 1) {
        idx[static_cast<std::size_t>(pos)] = 0;
        --pos;
      }
      if (pos < 0) break;
      ++idx[static_cast<std::size_t>(pos)];
      prefix.erase(prefix.begin() + pos, prefix.end());
      for (int d = pos; d < s; ++d) {
        const GridCopula& atom = atoms[static_cast<std::size_t>(idx[static_cast<std::size_t>(d)])];
        prefix.push_back(d == 0 ? atom : fold_product_grid(prefix.back(), atom));
      }
    }
  }
  return out;
}

}  // namespace

CertificateSearch alpha_certificate(const std::vector<CopulaExpr>& components,
                                    const std::vector<double>& weights, int s_max, int m) {
  return product_search(components, weights, s_max, m, Certificate::Kind::AlphaQuarter,
                        0.25 - 1e-9,
                        [](const GridCopula& g) { return alpha_coefficient(g).value; });
}

CertificateSearch rho_certificate(const std::vector<CopulaExpr>& components,
                                  const std::vector<double>& weights, int s_max, int m) {
  return product_search(components, weights, s_max, m, Certificate::Kind::RhoBelowOne,
                        1.0 - 1e-9, [](const GridCopula& g) { return rho_coefficient(g); });
}

std::pair<double, double> fit_log_decay(const std::vector<int>& lags,
                                        const std::vector<double>& values) {
  if (lags.size() != values.size()) throw ParameterError("lag and value lists differ in length");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] > 1e-12) {
      xs.push_back(static_cast<double>(lags[i]));
      ys.push_back(std::log(values[i]));
    }
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (xs.size() < 3) return {nan, nan};
  const double n = static_cast<double>(xs.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double var = sxx - sx * sx / n;
  if (var <= 0.0) return {nan, nan};
  const double slope = (sxy - sx * sy / n) / var;
  const double intercept = (sy - slope * sx) / n;
  double ss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (intercept + slope * xs[i]);
    ss += r * r;
  }
  return {slope, std::sqrt(ss / n)};
}

}  // namespace copmix
