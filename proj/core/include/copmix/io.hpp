#ifndef COPMIX_IO_HPP
#define COPMIX_IO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "copmix/copula.hpp"
#include "copmix/grid.hpp"
#include "copmix/mixing.hpp"
#include "copmix/noise.hpp"
#include "copmix/simulate.hpp"

namespace copmix {
namespace io {

inline constexpr const char* kVersion = "0.1.0";

/// Floats everywhere are emitted at 17 significant digits so that a
/// write / parse cycle reproduces the exact double.
std::string format_double(double v);

// Checkerboard files: {"m": <int>, "mass": [row-major cells]}; the
// trivariate variant stores m^3 cells, first axis outermost.
std::string grid_to_json(const GridCopula& g);
GridCopula grid_from_json(const std::string& text);
std::string grid3_to_json(const Grid3& g);
Grid3 grid3_from_json(const std::string& text);

// Copula expressions as nested tagged objects, e.g.
//   {"kind":"perturb_pi","theta":0.5,"base":{"kind":"m"}}
// Unknown keys are rejected.
std::string copula_to_json(const CopulaExpr& c);
CopulaExpr copula_from_json(const std::string& text);

std::string distribution_to_json(const Distribution1D& d);
Distribution1D distribution_from_json(const std::string& text);

std::string noise_spec_to_json(const NoiseSpec& spec);
NoiseSpec noise_spec_from_json(const std::string& text);

/// {"kind","s","witness","attained"} for a hit; an absence report keeps
/// the same shape with "kind":"none" plus the best value seen.
std::string certificate_to_json(const CertificateSearch& search);

struct MeasureRow {
  std::string measure;
  std::string family;
  double theta = 0.0;
  int n = 1;
  double value = 0.0;
  std::string method;  // closed_form | direct
};

// CSV: comma separator, '.' decimal, header row, LF endings.
std::string measures_csv(const std::vector<MeasureRow>& rows);
std::string mixing_csv(const MixingReport& rep);  // err columns when present
std::string path_csv(const ChainPath& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

std::uint64_t fnv1a(const std::string& text);

/// Provenance record written next to every experiment's outputs.
std::string run_manifest(const std::string& command, const std::string& config_text,
                         const std::vector<std::string>& outputs);

}  // namespace io
}  // namespace copmix

#endif  // COPMIX_IO_HPP
