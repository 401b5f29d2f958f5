#include "bhtrace/io.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace bhtrace {

using nlohmann::json;

namespace {

std::complex<double> entry(const json& v) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    return {v[0].get<double>(), v[1].get<double>()};
  throw Error("invalid_model", "matrix entry must be a number or [re, im]");
}

json cvec_json(const cvec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back({v[i].real(), v[i].imag()});
  return a;
}

cvec cvec_from(const json& a) {
  cvec v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v[i] = entry(a[i]);
  return v;
}

json rmat_json(const rmat& M) {
  json a = json::array();
  for (int i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    a.push_back(row);
  }
  return a;
}

rmat rmat_from(const json& a) {
  const int n = static_cast<int>(a.size());
  const int m = n ? static_cast<int>(a[0].size()) : 0;
  rmat M(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) M(i, j) = a[i][j].get<double>();
  return M;
}

json orbit_json(const PseudoPeriodicOrbit& o) {
  return json{{"psi0", cvec_json(o.psi0)},
              {"T", o.T},
              {"alpha", o.alpha},
              {"energy", o.energy},
              {"n_gamma", o.n_gamma},
              {"repetition", o.repetition},
              {"T_primitive", o.T_primitive},
              {"alpha_primitive", o.alpha_primitive},
              {"action", o.action},
              {"windings", o.windings},
              {"action_cartesian", o.action_cartesian},
              {"monodromy_reduced", rmat_json(o.monodromy_reduced)},
              {"stability", o.stability},
              {"maslov", o.maslov},
              {"residual", o.residual},
              {"degenerate", o.degenerate},
              {"flags", o.flags}};
}

PseudoPeriodicOrbit orbit_from(const json& j) {
  PseudoPeriodicOrbit o;
  o.psi0 = cvec_from(j.at("psi0"));
  o.T = j.at("T").get<double>();
  o.alpha = j.at("alpha").get<double>();
  o.energy = j.at("energy").get<double>();
  o.n_gamma = j.at("n_gamma").get<double>();
  o.repetition = j.value("repetition", 1);
  o.T_primitive = j.value("T_primitive", o.T);
  o.alpha_primitive = j.value("alpha_primitive", 0.0);
  o.action = j.at("action").get<double>();
  o.windings = j.value("windings", std::vector<int>{});
  o.action_cartesian = j.value("action_cartesian", false);
  if (j.contains("monodromy_reduced")) o.monodromy_reduced = rmat_from(j["monodromy_reduced"]);
  o.stability = j.at("stability").get<double>();
  o.maslov = j.at("maslov").get<int>();
  o.residual = j.value("residual", 0.0);
  o.degenerate = j.value("degenerate", false);
  o.flags = j.value("flags", std::vector<std::string>{});
  return o;
}

}  // namespace

std::string digest(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("io", "cannot open " + path + " for writing");
  f << text;
  if (!f) throw Error("io", "write failed for " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("io", "cannot open " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

BoseHubbardModel parse_model(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error("invalid_model", std::string("model JSON: ") + e.what());
  }
  if (!j.contains("H") || !j["H"].is_array())
    throw Error("invalid_model", "model needs an \"H\" matrix");
  const auto& Hj = j["H"];
  const int L = static_cast<int>(Hj.size());
  if (j.contains("L") && j["L"].get<int>() != L)
    throw Error("invalid_model", "L does not match the size of H");
  if (L < 1) throw Error("invalid_model", "H must be non-empty");
  cmat H(L, L);
  for (int a = 0; a < L; ++a) {
    if (!Hj[a].is_array() || static_cast<int>(Hj[a].size()) != L)
      throw Error("invalid_model", "H must be square");
    for (int b = 0; b < L; ++b) H(a, b) = entry(Hj[a][b]);
  }
  std::vector<Coupling> U;
  if (j.contains("onsite_u")) {
    double u = j["onsite_u"].get<double>();
    if (u != 0.0)
      for (int l = 0; l < L; ++l) U.push_back({l, l, l, l, u});
  }
  if (j.contains("U"))
    for (const auto& c : j["U"]) {
      std::vector<int> s;
      double value = 0.0;
      if (c.is_array()) {
        // [l1, l2, l3, l4, value]
        if (c.size() != 5) throw Error("invalid_model", "U entry needs four sites and a value");
        for (int i = 0; i < 4; ++i) s.push_back(c[i].get<int>());
        value = c[4].get<double>();
      } else {
        s = c.at("sites").get<std::vector<int>>();
        value = c.at("value").get<double>();
      }
      if (s.size() != 4) throw Error("invalid_model", "U entry needs four sites");
      for (int x : s)
        if (x < 1 || x > L) throw Error("invalid_model", "U site index out of range 1..L");
      U.push_back({s[0] - 1, s[1] - 1, s[2] - 1, s[3] - 1, value});
    }
  return BoseHubbardModel(H, U, j.value("label", std::string{}));
}

BoseHubbardModel load_model(const std::string& path) { return parse_model(read_text(path)); }

std::string model_to_json(const BoseHubbardModel& model) {
  json H = json::array();
  for (int a = 0; a < model.L(); ++a) {
    json row = json::array();
    for (int b = 0; b < model.L(); ++b) {
      auto z = model.H()(a, b);
      row.push_back({z.real(), z.imag()});
    }
    H.push_back(row);
  }
  json U = json::array();
  for (const auto& c : model.U())
    U.push_back({c.l1 + 1, c.l2 + 1, c.l3 + 1, c.l4 + 1, c.value});
  return json{{"label", model.label()}, {"L", model.L()}, {"H", H}, {"U", U}}.dump(2) + "\n";
}

const std::vector<double>& Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return columns[i];
  throw Error("io", "missing column " + name);
}

void write_csv(const std::string& path, const std::string& subcommand,
               const std::string& config_hash, const std::vector<std::string>& comments,
               const Table& table) {
  std::string out = "# bhtrace " + subcommand + " config=" + config_hash + "\n";
  for (const auto& c : comments) out += "# " + c + "\n";
  for (std::size_t i = 0; i < table.names.size(); ++i)
    out += (i ? "," : "") + table.names[i];
  out += "\n";
  char buf[32];
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", table.columns[c][r]);
      if (c) out += ",";
      out += buf;
    }
    out += "\n";
  }
  write_text(path, out);
}

Table read_csv(const std::string& path) {
  std::istringstream in(read_text(path));
  Table t;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!header) {
      t.names = cells;
      t.columns.assign(cells.size(), {});
      header = true;
      continue;
    }
    if (cells.size() != t.names.size()) throw Error("io", "ragged row in " + path);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      try {
        t.columns[c].push_back(std::stod(cells[c]));
      } catch (const std::exception&) {
        throw Error("io", "non-numeric cell '" + cells[c] + "' in " + path);
      }
    }
  }
  if (!header) throw Error("io", "no header row in " + path);
  return t;
}

std::string orbit_to_json(const PseudoPeriodicOrbit& o) { return orbit_json(o).dump(); }

void save_orbit_library(const std::string& path, const OrbitLibrary& lib) {
  json fams = json::array();
  for (const auto& f : lib.families) {
    json members = json::array();
    for (const auto& o : f.members) members.push_back(orbit_json(o));
    fams.push_back(json{{"orbits", members}});
  }
  json j{{"subcommand", lib.subcommand},
         {"config_hash", lib.config_hash},
         {"model_hash", lib.model_hash},
         {"tolerance", lib.tolerance},
         {"n_gamma", lib.n_gamma},
         {"families", fams}};
  write_text(path, j.dump(1) + "\n");
}

OrbitLibrary load_orbit_library(const std::string& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw Error("io", std::string("orbit library JSON: ") + e.what());
  }
  OrbitLibrary lib;
  lib.subcommand = j.value("subcommand", std::string{});
  lib.config_hash = j.value("config_hash", std::string{});
  lib.model_hash = j.value("model_hash", std::string{});
  lib.tolerance = j.value("tolerance", 0.0);
  lib.n_gamma = j.value("n_gamma", 0.0);
  for (const auto& f : j.at("families")) {
    OrbitFamily fam;
    for (const auto& o : f.at("orbits")) fam.members.push_back(orbit_from(o));
    lib.families.push_back(std::move(fam));
  }
  return lib;
}

}  // namespace bhtrace
