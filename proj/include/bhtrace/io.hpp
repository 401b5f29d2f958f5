#pragma once

#include <string>
#include <vector>

#include "bhtrace/orbits.hpp"
#include "bhtrace/semiclassics.hpp"

namespace bhtrace {

/// Model file (JSON, 1-based site indices):
///   {"label": "...", "L": 2, "H": [[[h11re, h11im], ...], ...],
///    "U": [[1, 1, 1, 1, 0.1], ...], "onsite_u": 0.1}
/// H entries are [re, im] pairs or plain numbers. U entries may also be
/// written {"sites": [1, 1, 1, 1], "value": 0.1}. "L", "U", "label" and
/// "onsite_u" are optional.
BoseHubbardModel load_model(const std::string& path);
BoseHubbardModel parse_model(const std::string& json_text);
std::string model_to_json(const BoseHubbardModel& model);

/// 16-hex FNV-1a digest of a string.
std::string digest(const std::string& s);

/// Column-oriented numeric table.
struct Table {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
  const std::vector<double>& column(const std::string& name) const;
};

/// Writes "# bhtrace <subcommand> config=<hash>", extra "# key=value" lines,
/// the column names and rows formatted with %.17g.
void write_csv(const std::string& path, const std::string& subcommand,
               const std::string& config_hash, const std::vector<std::string>& comments,
               const Table& table);

/// Reads a file written by write_csv; comment lines are skipped.
Table read_csv(const std::string& path);

/// Families of orbits with the model digest and solver tolerances.
struct OrbitLibrary {
  std::string subcommand;
  std::string config_hash;
  std::string model_hash;
  double tolerance = 0.0;
  double n_gamma = 0.0;
  std::vector<OrbitFamily> families;
};

std::string orbit_to_json(const PseudoPeriodicOrbit& o);
void save_orbit_library(const std::string& path, const OrbitLibrary& lib);
OrbitLibrary load_orbit_library(const std::string& path);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

}  // namespace bhtrace
