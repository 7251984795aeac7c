#pragma once

#include "affinescope/banach.hpp"
#include "affinescope/dorronsoro.hpp"
#include "affinescope/harmonic.hpp"
#include "affinescope/moduli.hpp"

#include "json.hpp"

#include <iosfwd>
#include <string>
#include <string_view>

namespace afs {

using Json = nlohmann::json;

// AFSC1 container, little-endian:
//   "AFSC1" | u32 n | u32 m | f64 q (0 encodes ∞) | u32 block | f64 scale
//   | n × (f64 lower, f64 upper, u32 resolution) | values, lattice row-major, m doubles per point
//   | optional trailer "LIPS" f64 lipschitz
void write_grid(const GridFunction& f, std::ostream& out);
GridFunction read_grid(std::istream& in);

// CSV alternative: one "# afsc1-csv" header line with key=value metadata, then one row per lattice
// point holding its coordinates followed by its values.
void write_grid_csv(const GridFunction& f, std::ostream& out);
GridFunction read_grid_csv(std::istream& in);

/// Dispatches on the extension: ".csv" is text, anything else AFSC1.
void save_grid(const GridFunction& f, const std::string& path);
GridFunction load_grid(const std::string& path);

/// The AFSC1 bytes of f, the canonical form hashed into reports.
std::string grid_bytes(const GridFunction& f);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

/// Exponents in [1, ∞] as JSON: a number, or the string "inf".
Json exponent_json(double p);
double exponent_from_json(const Json& j);

Json to_json(const NormSpec& norm);
NormSpec norm_from_json(const Json& j);
Json to_json(const TargetNorm& target);
TargetNorm target_from_json(const Json& j);
Json to_json(const Vector& v);
Json to_json(const Matrix& a);
Vector vector_from_json(const Json& j);
Json to_json(const AffineMap& map);
Json to_json(const FitReport& fit);
Json to_json(const Ball& ball);
Ball ball_from_json(const Json& j, int dim);
Json to_json(const BallWitness& witness);
Json to_json(const ModulusResult& result);
Json to_json(const DorronsoroReport& report);
Json to_json(const CertifyTable& table);
Json to_json(const ConstantEstimate& estimate);
Json to_json(const MultiplierSpec& spec);
MultiplierSpec multiplier_from_json(const Json& j);

}  // namespace afs
