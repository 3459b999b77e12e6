#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "copmix/algebra.hpp"
#include "copmix/copula.hpp"
#include "copmix/errors.hpp"
#include "copmix/io.hpp"
#include "copmix/measures.hpp"
#include "copmix/mixing.hpp"
#include "copmix/noise.hpp"
#include "copmix/rng.hpp"
#include "copmix/simulate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace copmix;

namespace {

struct Ctx {
  fs::path out_dir = ".";
  int threads = 1;
  bool verbose = false;
  std::string config_text;
  json config;
  std::vector<std::string> outputs;
};

void check_keys(const json& j, const std::string& what,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ParameterError(what + ": expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known) throw ParameterError(what + ": unknown key \"" + it.key() + "\"");
  }
}

const json& need(const json& j, const char* key, const std::string& what) {
  const auto it = j.find(key);
  if (it == j.end()) throw ParameterError(what + ": missing key \"" + key + "\"");
  return *it;
}

double need_num(const json& j, const char* key, const std::string& what) {
  const json& v = need(j, key, what);
  if (!v.is_number()) throw ParameterError(what + ": \"" + key + "\" must be a number");
  return v.get<double>();
}

int need_int(const json& j, const char* key, const std::string& what) {
  const json& v = need(j, key, what);
  if (!v.is_number_integer())
    throw ParameterError(what + ": \"" + key + "\" must be an integer");
  return v.get<int>();
}

std::string need_str(const json& j, const char* key, const std::string& what) {
  const json& v = need(j, key, what);
  if (!v.is_string()) throw ParameterError(what + ": \"" + key + "\" must be a string");
  return v.get<std::string>();
}

std::string opt_str(const json& j, const char* key, const std::string& fallback) {
  const auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_string()) throw ParameterError(std::string("\"") + key + "\" must be a string");
  return it->get<std::string>();
}

CopulaExpr copula_field(const json& j, const char* key, const std::string& what) {
  return io::copula_from_json(need(j, key, what).dump());
}

void emit(Ctx& ctx, const std::string& name, const std::string& content) {
  const fs::path full = ctx.out_dir / name;
  if (full.has_parent_path()) fs::create_directories(full.parent_path());
  io::write_file(full.string(), content);
  ctx.outputs.push_back(name);
  if (ctx.verbose) std::cerr << "wrote " << full.string() << "\n";
}

void finish(Ctx& ctx, const std::string& command) {
  const fs::path full = ctx.out_dir / "run-manifest.json";
  io::write_file(full.string(), io::run_manifest(command, ctx.config_text, ctx.outputs));
  if (ctx.verbose) std::cerr << "wrote " << full.string() << "\n";
}

PerturbFamily family_of(const std::string& s) {
  if (s == "pi") return PerturbFamily::Pi;
  if (s == "m") return PerturbFamily::M;
  throw ParameterError("family must be \"pi\" or \"m\", got \"" + s + "\"");
}

MeasureTag measure_of(const std::string& s) {
  for (MeasureTag t : {MeasureTag::RhoS, MeasureTag::Tau, MeasureTag::Beta,
                       MeasureTag::Gamma, MeasureTag::LambdaL, MeasureTag::LambdaU})
    if (s == measure_name(t)) return t;
  throw ParameterError("unknown measure \"" + s + "\"");
}

double direct_measure(const CopulaExpr& e, MeasureTag t) {
  switch (t) {
    case MeasureTag::RhoS: return spearman_rho(e);
    case MeasureTag::Tau: return kendall_tau(e).value;
    case MeasureTag::Beta: return blomqvist_beta(e);
    case MeasureTag::Gamma: return gini_gamma(e);
    case MeasureTag::LambdaL: return tail_dependence(e).lambda_l;
    case MeasureTag::LambdaU: return tail_dependence(e).lambda_u;
  }
  throw ParameterError("unknown measure tag");
}

std::vector<double> num_list(const json& j, const char* plural, const char* singular,
                             double fallback, const std::string& what) {
  std::vector<double> out;
  if (const auto it = j.find(plural); it != j.end()) {
    if (!it->is_array()) throw ParameterError(what + ": \"" + plural + "\" must be an array");
    for (const auto& e : *it) {
      if (!e.is_number())
        throw ParameterError(what + ": \"" + plural + "\" entries must be numbers");
      out.push_back(e.get<double>());
    }
  }
  if (j.contains(singular)) out.push_back(need_num(j, singular, what));
  if (out.empty()) out.push_back(fallback);
  return out;
}

// ------------------------------------------------------------- subcommands

int run_measures(Ctx& ctx) {
  const std::string what = "measures config";
  const json& j = ctx.config;
  check_keys(j, what,
             {"copula", "measure", "measures", "family", "theta", "thetas", "n", "ns",
              "output"});
  const CopulaExpr base = copula_field(j, "copula", what);

  std::vector<MeasureTag> tags;
  if (const auto it = j.find("measures"); it != j.end()) {
    if (!it->is_array()) throw ParameterError(what + ": \"measures\" must be an array");
    for (const auto& e : *it) {
      if (!e.is_string())
        throw ParameterError(what + ": \"measures\" entries must be strings");
      tags.push_back(measure_of(e.get<std::string>()));
    }
  }
  if (j.contains("measure")) tags.push_back(measure_of(need_str(j, "measure", what)));
  if (tags.empty())
    tags = {MeasureTag::RhoS, MeasureTag::Beta, MeasureTag::Gamma, MeasureTag::LambdaL,
            MeasureTag::LambdaU};

  const std::string family_str = opt_str(j, "family", "pi");
  const PerturbFamily family = family_of(family_str);
  const std::vector<double> thetas = num_list(j, "thetas", "theta", 0.0, what);
  std::vector<int> ns;
  if (const auto it = j.find("ns"); it != j.end()) {
    if (!it->is_array()) throw ParameterError(what + ": \"ns\" must be an array");
    for (const auto& e : *it) {
      if (!e.is_number_integer())
        throw ParameterError(what + ": \"ns\" entries must be integers");
      ns.push_back(e.get<int>());
    }
  }
  if (j.contains("n")) ns.push_back(need_int(j, "n", what));
  if (ns.empty()) ns.push_back(1);

  std::vector<io::MeasureRow> rows;
  for (MeasureTag tag : tags)
    for (double theta : thetas)
      for (int n : ns) {
        if (n < 1) throw ParameterError(what + ": n must be >= 1");
        CopulaExpr perturbed = family == PerturbFamily::Pi
                                   ? CopulaExpr::perturb_pi(base, theta)
                                   : CopulaExpr::perturb_m(base, theta);
        if (n > 1) perturbed = CopulaExpr::fold_power(perturbed, n);
        io::MeasureRow row;
        row.measure = measure_name(tag);
        row.family = family_str;
        row.theta = theta;
        row.n = n;
        if (tag != MeasureTag::Tau) {
          row.value = perturbed_measure(base, theta, n, tag, family);
          row.method = "closed_form";
          rows.push_back(row);
        }
        row.value = direct_measure(perturbed, tag);
        row.method = "direct";
        rows.push_back(row);
      }

  emit(ctx, opt_str(j, "output", "measures.csv"), io::measures_csv(rows));
  finish(ctx, "measures");
  return 0;
}

int run_scan(Ctx& ctx) {
  const std::string what = "scan config";
  const json& j = ctx.config;
  check_keys(j, what, {"copula", "theta", "family", "n_max", "m", "output"});
  const CopulaExpr base = copula_field(j, "copula", what);
  const double theta = need_num(j, "theta", what);
  const PerturbFamily family = family_of(need_str(j, "family", what));
  const int n_max = need_int(j, "n_max", what);
  const int m = need_int(j, "m", what);
  const MixingReport rep = mixing_scan(base, theta, family, n_max, m);
  emit(ctx, opt_str(j, "output", "scan.csv"), io::mixing_csv(rep));
  finish(ctx, "scan");
  return 0;
}

int run_certify(Ctx& ctx) {
  const std::string what = "certify config";
  const json& j = ctx.config;
  check_keys(j, what, {"components", "weights", "kind", "s_max", "m", "output"});
  const json& comps_v = need(j, "components", what);
  if (!comps_v.is_array() || comps_v.empty())
    throw ParameterError(what + ": \"components\" must be a nonempty array");
  std::vector<CopulaExpr> components;
  for (const auto& e : comps_v) components.push_back(io::copula_from_json(e.dump()));
  const json& weights_v = need(j, "weights", what);
  if (!weights_v.is_array())
    throw ParameterError(what + ": \"weights\" must be an array");
  std::vector<double> weights;
  for (const auto& e : weights_v) {
    if (!e.is_number()) throw ParameterError(what + ": weights must be numbers");
    weights.push_back(e.get<double>());
  }
  const std::string kind = need_str(j, "kind", what);
  const int s_max = need_int(j, "s_max", what);
  const int m = need_int(j, "m", what);

  CertificateSearch search;
  if (kind == "alpha")
    search = alpha_certificate(components, weights, s_max, m);
  else if (kind == "rho")
    search = rho_certificate(components, weights, s_max, m);
  else
    throw ParameterError(what + ": kind must be \"alpha\" or \"rho\"");

  emit(ctx, opt_str(j, "output", "certificate.json"), io::certificate_to_json(search) + "\n");
  finish(ctx, "certify");
  if (!search.found()) {
    std::cerr << "no certificate up to product length " << s_max << "; best value "
              << search.attained_min << "\n";
    return 1;
  }
  return 0;
}

GridCopula mc_noisy_copula(const CopulaExpr& c, const std::vector<Distribution1D>& marginals,
                           const NoiseSpec& spec, int m, long long n, std::uint64_t seed) {
  Rng rng(seed, 1);
  std::vector<std::array<double, 2>> pts;
  pts.reserve(static_cast<std::size_t>(n));
  for (long long i = 0; i < n; ++i) {
    const auto uv = sample_pair(c, rng);
    double x = marginals[0].quantile(uv[0]);
    double y = marginals[1].quantile(uv[1]);
    if (spec.mode == NoiseSpec::Mode::Common) {
      const double t = spec.dists.front().sample(rng);
      if (spec.s >= 1) x += t;
      if (spec.s >= 2) y += t;
    } else {
      for (std::size_t k = 0; k < spec.dists.size(); ++k)
        (k == 0 ? x : y) += spec.dists[k].sample(rng);
    }
    pts.push_back({x, y});
  }
  GridCopula g = empirical_copula(pts, m);
  if (spec.permutation) g = apply_permutation(g, *spec.permutation);
  return g;
}

int run_noisy(Ctx& ctx) {
  const std::string what = "noisy config";
  const json& j = ctx.config;
  check_keys(j, what, {"copula", "marginals", "noise", "m", "mc_check", "output",
                       "mc_output"});
  const CopulaExpr c = copula_field(j, "copula", what);
  const json& margs_v = need(j, "marginals", what);
  if (!margs_v.is_array() || margs_v.size() != 2)
    throw ParameterError(what + ": \"marginals\" must be an array of 2 distributions");
  std::vector<Distribution1D> marginals;
  for (const auto& e : margs_v) marginals.push_back(io::distribution_from_json(e.dump()));
  const NoiseSpec spec = io::noise_spec_from_json(need(j, "noise", what).dump());
  const int m = need_int(j, "m", what);

  const GridCopula g = apply_noise(c, marginals, spec, m, ctx.threads);
  emit(ctx, opt_str(j, "output", "noisy_grid.json"), io::grid_to_json(g) + "\n");

  if (const auto it = j.find("mc_check"); it != j.end()) {
    check_keys(*it, what + ".mc_check", {"n", "seed"});
    const int n = need_int(*it, "n", what);
    const int seed = need_int(*it, "seed", what);
    if (n < 1) throw ParameterError(what + ": mc_check.n must be >= 1");
    const GridCopula mc =
        mc_noisy_copula(c, marginals, spec, m, n, static_cast<std::uint64_t>(seed));
    const double dev = GridCopula::cdf_distance(g, mc);
    std::string csv = "n,seed,max_cdf_deviation\n";
    csv += std::to_string(n) + "," + std::to_string(seed) + "," + io::format_double(dev) + "\n";
    emit(ctx, opt_str(j, "mc_output", "mc_check.csv"), csv);
  }
  finish(ctx, "noisy");
  return 0;
}

int run_simulate(Ctx& ctx) {
  const std::string what = "simulate config";
  const json& j = ctx.config;
  check_keys(j, what,
             {"copula", "n_steps", "seed", "lags", "m", "path_output", "report_output"});
  const CopulaExpr c = copula_field(j, "copula", what);
  const int n_steps = need_int(j, "n_steps", what);
  const json& seed_v = need(j, "seed", what);
  if (!seed_v.is_number_integer())
    throw ParameterError(what + ": \"seed\" must be an integer");
  const std::uint64_t seed = seed_v.get<std::uint64_t>();

  const ChainPath path = sample_chain(c, n_steps, seed);
  emit(ctx, opt_str(j, "path_output", "path.csv"), io::path_csv(path));

  if (const auto it = j.find("lags"); it != j.end()) {
    if (!it->is_array()) throw ParameterError(what + ": \"lags\" must be an array");
    std::vector<int> lags;
    for (const auto& e : *it) {
      if (!e.is_number_integer())
        throw ParameterError(what + ": \"lags\" entries must be integers");
      lags.push_back(e.get<int>());
    }
    const int m = need_int(j, "m", what);
    const MixingReport rep = empirical_mixing(path, lags, m);
    emit(ctx, opt_str(j, "report_output", "mixing.csv"), io::mixing_csv(rep));
  }
  finish(ctx, "simulate");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"checkerboard copula algebra and mixing experiments"};
  app.require_subcommand(1);

  std::string config_path;
  Ctx ctx;
  std::string out_dir = ".";
  app.add_option("--config", config_path, "experiment config (JSON)")->required();
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--threads", ctx.threads, "worker threads for grid assembly");
  app.add_flag("--verbose", ctx.verbose, "log each output file");

  CLI::App* sub_measures = app.add_subcommand("measures", "dependence measure tables");
  CLI::App* sub_scan = app.add_subcommand("scan", "mixing coefficients across lags");
  CLI::App* sub_certify = app.add_subcommand("certify", "search for a mixing certificate");
  CLI::App* sub_noisy = app.add_subcommand("noisy", "checkerboard of a noisy model");
  CLI::App* sub_simulate = app.add_subcommand("simulate", "sample a copula Markov chain");
  for (CLI::App* sub : {sub_measures, sub_scan, sub_certify, sub_noisy, sub_simulate})
    sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    ctx.out_dir = out_dir;
    fs::create_directories(ctx.out_dir);
    ctx.config_text = io::read_file(config_path);
    ctx.config = json::parse(ctx.config_text, nullptr, false);
    if (ctx.config.is_discarded())
      throw ParameterError("config \"" + config_path + "\" is not valid JSON");
    if (ctx.threads < 1) throw ParameterError("--threads must be >= 1");

    if (sub_measures->parsed()) return run_measures(ctx);
    if (sub_scan->parsed()) return run_scan(ctx);
    if (sub_certify->parsed()) return run_certify(ctx);
    if (sub_noisy->parsed()) return run_noisy(ctx);
    return run_simulate(ctx);
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "unexpected failure: " << e.what() << "\n";
    return 3;
  }
}
