#include "copmix/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <json.hpp>

#include "copmix/errors.hpp"

namespace copmix {
namespace io {

using nlohmann::json;

namespace {

void check_keys(const json& j, const char* what,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ParameterError(std::string(what) + ": expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known)
      throw ParameterError(std::string(what) + ": unknown key \"" + it.key() + "\"");
  }
}

const json& field(const json& j, const char* key, const char* what) {
  const auto it = j.find(key);
  if (it == j.end())
    throw ParameterError(std::string(what) + ": missing key \"" + key + "\"");
  return *it;
}

double num_field(const json& j, const char* key, const char* what) {
  const json& v = field(j, key, what);
  if (!v.is_number())
    throw ParameterError(std::string(what) + ": \"" + key + "\" must be a number");
  return v.get<double>();
}

int int_field(const json& j, const char* key, const char* what) {
  const json& v = field(j, key, what);
  if (!v.is_number_integer())
    throw ParameterError(std::string(what) + ": \"" + key + "\" must be an integer");
  return v.get<int>();
}

std::vector<double> num_array(const json& v, const char* what) {
  if (!v.is_array()) throw ParameterError(std::string(what) + ": expected an array");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& e : v) {
    if (!e.is_number())
      throw ParameterError(std::string(what) + ": array entries must be numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

json parse_text(const std::string& text, const char* what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded())
    throw ParameterError(std::string(what) + ": malformed JSON");
  return j;
}

void append_mass_array(std::string& out, const std::vector<double>& mass) {
  out += "[";
  for (std::size_t i = 0; i < mass.size(); ++i) {
    if (i) out += ",";
    out += format_double(mass[i]);
  }
  out += "]";
}

json copula_to_node(const CopulaExpr& c) {
  using Kind = CopulaExpr::Kind;
  json j;
  switch (c.kind()) {
    case Kind::Pi: j["kind"] = "pi"; break;
    case Kind::M: j["kind"] = "m"; break;
    case Kind::W: j["kind"] = "w"; break;
    case Kind::Mardia:
      j["kind"] = "mardia";
      j["a"] = c.mardia_a();
      j["b"] = c.mardia_b();
      break;
    case Kind::Grid: {
      const GridCopula& g = c.grid_ref();
      j["kind"] = "grid";
      j["m"] = g.m();
      j["mass"] = g.masses();
      break;
    }
    case Kind::Convex: {
      j["kind"] = "convex";
      j["weights"] = c.weights();
      json parts = json::array();
      for (const auto& comp : c.components()) parts.push_back(copula_to_node(comp));
      j["components"] = std::move(parts);
      break;
    }
    case Kind::PerturbPi:
      j["kind"] = "perturb_pi";
      j["theta"] = c.theta();
      j["base"] = copula_to_node(c.base());
      break;
    case Kind::PerturbM:
      j["kind"] = "perturb_m";
      j["theta"] = c.theta();
      j["base"] = copula_to_node(c.base());
      break;
    case Kind::FoldPower:
      j["kind"] = "fold_power";
      j["n"] = c.power_n();
      j["base"] = copula_to_node(c.base());
      break;
  }
  return j;
}

CopulaExpr copula_from_node(const json& j) {
  constexpr const char* what = "copula";
  if (!j.is_object()) throw ParameterError("copula: expected a JSON object");
  const json& kind_v = field(j, "kind", what);
  if (!kind_v.is_string()) throw ParameterError("copula: \"kind\" must be a string");
  const std::string kind = kind_v.get<std::string>();
  if (kind == "pi") {
    check_keys(j, what, {"kind"});
    return CopulaExpr::pi();
  }
  if (kind == "m") {
    check_keys(j, what, {"kind"});
    return CopulaExpr::m();
  }
  if (kind == "w") {
    check_keys(j, what, {"kind"});
    return CopulaExpr::w();
  }
  if (kind == "mardia") {
    check_keys(j, what, {"kind", "a", "b"});
    return CopulaExpr::mardia(num_field(j, "a", what), num_field(j, "b", what));
  }
  if (kind == "grid") {
    check_keys(j, what, {"kind", "m", "mass"});
    const int m = int_field(j, "m", what);
    if (m < 1) throw ParameterError("copula: grid resolution must be >= 1");
    std::vector<double> mass = num_array(field(j, "mass", what), what);
    if (mass.size() != static_cast<std::size_t>(m) * static_cast<std::size_t>(m))
      throw ParameterError("copula: grid mass array must hold m*m cells");
    return CopulaExpr::grid(GridCopula(m, std::move(mass)));
  }
  if (kind == "convex") {
    check_keys(j, what, {"kind", "weights", "components"});
    std::vector<double> weights = num_array(field(j, "weights", what), what);
    const json& parts = field(j, "components", what);
    if (!parts.is_array())
      throw ParameterError("copula: \"components\" must be an array");
    std::vector<CopulaExpr> comps;
    comps.reserve(parts.size());
    for (const auto& p : parts) comps.push_back(copula_from_node(p));
    return CopulaExpr::convex(std::move(weights), std::move(comps));
  }
  if (kind == "perturb_pi" || kind == "perturb_m") {
    check_keys(j, what, {"kind", "theta", "base"});
    const double theta = num_field(j, "theta", what);
    CopulaExpr base = copula_from_node(field(j, "base", what));
    return kind == "perturb_pi" ? CopulaExpr::perturb_pi(base, theta)
                                : CopulaExpr::perturb_m(base, theta);
  }
  if (kind == "fold_power") {
    check_keys(j, what, {"kind", "n", "base"});
    const int n = int_field(j, "n", what);
    return CopulaExpr::fold_power(copula_from_node(field(j, "base", what)), n);
  }
  throw ParameterError("copula: unknown kind \"" + kind + "\"");
}

json distribution_to_node(const Distribution1D& d) {
  using Kind = Distribution1D::Kind;
  json j;
  switch (d.kind()) {
    case Kind::Uniform:
      j["kind"] = "uniform";
      j["lo"] = d.param_a();
      j["hi"] = d.param_b();
      break;
    case Kind::Normal:
      j["kind"] = "normal";
      j["mean"] = d.param_a();
      j["sd"] = d.param_b();
      break;
    case Kind::PointMass:
      j["kind"] = "point_mass";
      j["c"] = d.param_a();
      break;
    case Kind::Empirical:
      j["kind"] = "empirical";
      j["sample"] = d.knots();
      break;
    case Kind::Table:
      j["kind"] = "table";
      j["x"] = d.knots();
      j["p"] = d.levels();
      break;
  }
  return j;
}

Distribution1D distribution_from_node(const json& j) {
  constexpr const char* what = "distribution";
  if (!j.is_object()) throw ParameterError("distribution: expected a JSON object");
  const json& kind_v = field(j, "kind", what);
  if (!kind_v.is_string())
    throw ParameterError("distribution: \"kind\" must be a string");
  const std::string kind = kind_v.get<std::string>();
  if (kind == "uniform") {
    check_keys(j, what, {"kind", "lo", "hi"});
    return Distribution1D::uniform(num_field(j, "lo", what), num_field(j, "hi", what));
  }
  if (kind == "normal") {
    check_keys(j, what, {"kind", "mean", "sd"});
    return Distribution1D::normal(num_field(j, "mean", what), num_field(j, "sd", what));
  }
  if (kind == "point_mass") {
    check_keys(j, what, {"kind", "c"});
    return Distribution1D::point_mass(num_field(j, "c", what));
  }
  if (kind == "empirical") {
    check_keys(j, what, {"kind", "sample"});
    return Distribution1D::empirical(num_array(field(j, "sample", what), what));
  }
  if (kind == "table") {
    check_keys(j, what, {"kind", "x", "p"});
    return Distribution1D::table(num_array(field(j, "x", what), what),
                                 num_array(field(j, "p", what), what));
  }
  throw ParameterError("distribution: unknown kind \"" + kind + "\"");
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string grid_to_json(const GridCopula& g) {
  std::string out;
  out.reserve(20 + static_cast<std::size_t>(g.m()) * g.m() * 24);
  out += "{\"m\":";
  out += std::to_string(g.m());
  out += ",\"mass\":";
  append_mass_array(out, g.masses());
  out += "}";
  return out;
}

GridCopula grid_from_json(const std::string& text) {
  const json j = parse_text(text, "grid file");
  check_keys(j, "grid file", {"m", "mass"});
  const int m = int_field(j, "m", "grid file");
  if (m < 1) throw ParameterError("grid file: resolution must be >= 1");
  std::vector<double> mass = num_array(field(j, "mass", "grid file"), "grid file");
  if (mass.size() != static_cast<std::size_t>(m) * static_cast<std::size_t>(m))
    throw ParameterError("grid file: mass array must hold m*m cells, got " +
                         std::to_string(mass.size()));
  for (double v : mass)
    if (!std::isfinite(v)) throw ParameterError("grid file: non-finite mass entry");
  return GridCopula(m, std::move(mass));
}

std::string grid3_to_json(const Grid3& g) {
  std::string out;
  out.reserve(20 + g.masses().size() * 24);
  out += "{\"m\":";
  out += std::to_string(g.m());
  out += ",\"mass\":";
  append_mass_array(out, g.masses());
  out += "}";
  return out;
}

Grid3 grid3_from_json(const std::string& text) {
  const json j = parse_text(text, "grid3 file");
  check_keys(j, "grid3 file", {"m", "mass"});
  const int m = int_field(j, "m", "grid3 file");
  if (m < 1) throw ParameterError("grid3 file: resolution must be >= 1");
  std::vector<double> mass = num_array(field(j, "mass", "grid3 file"), "grid3 file");
  const std::size_t want =
      static_cast<std::size_t>(m) * static_cast<std::size_t>(m) * static_cast<std::size_t>(m);
  if (mass.size() != want)
    throw ParameterError("grid3 file: mass array must hold m^3 cells, got " +
                         std::to_string(mass.size()));
  for (double v : mass)
    if (!std::isfinite(v)) throw ParameterError("grid3 file: non-finite mass entry");
  return Grid3(m, std::move(mass));
}

std::string copula_to_json(const CopulaExpr& c) { return copula_to_node(c).dump(); }

CopulaExpr copula_from_json(const std::string& text) {
  return copula_from_node(parse_text(text, "copula"));
}

std::string distribution_to_json(const Distribution1D& d) {
  return distribution_to_node(d).dump();
}

Distribution1D distribution_from_json(const std::string& text) {
  return distribution_from_node(parse_text(text, "distribution"));
}

std::string noise_spec_to_json(const NoiseSpec& spec) {
  json j;
  j["mode"] = spec.mode == NoiseSpec::Mode::Independent ? "independent" : "common";
  json dists = json::array();
  for (const auto& d : spec.dists) dists.push_back(distribution_to_node(d));
  j["dists"] = std::move(dists);
  j["s"] = spec.s;
  if (spec.permutation) j["perm"] = *spec.permutation;
  return j.dump();
}

NoiseSpec noise_spec_from_json(const std::string& text) {
  constexpr const char* what = "noise spec";
  const json j = parse_text(text, what);
  check_keys(j, what, {"mode", "dists", "s", "perm"});
  NoiseSpec spec;
  const json& mode_v = field(j, "mode", what);
  if (!mode_v.is_string())
    throw ParameterError("noise spec: \"mode\" must be a string");
  const std::string mode = mode_v.get<std::string>();
  if (mode == "independent")
    spec.mode = NoiseSpec::Mode::Independent;
  else if (mode == "common")
    spec.mode = NoiseSpec::Mode::Common;
  else
    throw ParameterError("noise spec: mode must be \"independent\" or \"common\"");
  const json& dists = field(j, "dists", what);
  if (!dists.is_array()) throw ParameterError("noise spec: \"dists\" must be an array");
  for (const auto& d : dists) spec.dists.push_back(distribution_from_node(d));
  spec.s = int_field(j, "s", what);
  if (const auto it = j.find("perm"); it != j.end()) {
    if (!it->is_array()) throw ParameterError("noise spec: \"perm\" must be an array");
    std::vector<int> perm;
    for (const auto& e : *it) {
      if (!e.is_number_integer())
        throw ParameterError("noise spec: \"perm\" entries must be integers");
      perm.push_back(e.get<int>());
    }
    spec.permutation = std::move(perm);
  }
  return spec;
}

std::string certificate_to_json(const CertificateSearch& search) {
  json j;
  if (search.certificate) {
    const Certificate& cert = *search.certificate;
    j["kind"] = cert.kind == Certificate::Kind::AlphaQuarter ? "alpha_quarter"
                                                             : "rho_below_one";
    j["s"] = cert.s;
    j["witness"] = cert.witness;
    j["attained"] = cert.attained;
  } else {
    j["kind"] = "none";
    j["s"] = search.best_s;
    j["witness"] = search.best_witness;
    j["attained"] = search.attained_min;
  }
  return j.dump();
}

std::string measures_csv(const std::vector<MeasureRow>& rows) {
  std::string out = "measure,family,theta,n,value,method\n";
  for (const auto& r : rows) {
    out += r.measure;
    out += ",";
    out += r.family;
    out += ",";
    out += format_double(r.theta);
    out += ",";
    out += std::to_string(r.n);
    out += ",";
    out += format_double(r.value);
    out += ",";
    out += r.method;
    out += "\n";
  }
  return out;
}

std::string mixing_csv(const MixingReport& rep) {
  const bool with_err = !rep.alpha_err.empty();
  std::string out = "lag,alpha,rho,psi_prime_lower";
  if (with_err) out += ",alpha_err,rho_err";
  out += "\n";
  for (std::size_t i = 0; i < rep.lags.size(); ++i) {
    out += std::to_string(rep.lags[i]);
    out += ",";
    out += format_double(rep.alpha[i]);
    out += ",";
    out += format_double(rep.rho[i]);
    out += ",";
    out += format_double(rep.psi_prime_lower[i]);
    if (with_err) {
      out += ",";
      out += format_double(rep.alpha_err[i]);
      out += ",";
      out += format_double(rep.rho_err[i]);
    }
    out += "\n";
  }
  return out;
}

std::string path_csv(const ChainPath& path) {
  std::string out = "step,value\n";
  for (std::size_t i = 0; i < path.values.size(); ++i) {
    out += std::to_string(i);
    out += ",";
    out += format_double(path.values[i]);
    out += "\n";
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParameterError("cannot open \"" + path + "\" for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParameterError("cannot open \"" + path + "\" for writing");
  out << content;
  if (!out) throw ParameterError("write to \"" + path + "\" failed");
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string run_manifest(const std::string& command, const std::string& config_text,
                         const std::vector<std::string>& outputs) {
  char hash[20];
  std::snprintf(hash, sizeof hash, "%016llx",
                static_cast<unsigned long long>(fnv1a(config_text)));
  json j;
  j["version"] = kVersion;
  j["command"] = command;
  j["config_fnv1a"] = hash;
  j["outputs"] = outputs;
  return j.dump(2) + "\n";
}

}  // namespace io
}  // namespace copmix
