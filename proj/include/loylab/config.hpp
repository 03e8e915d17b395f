#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "friedrichs_lee.hpp"
#include "model.hpp"
#include "symmetry.hpp"

namespace loylab {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace cfg {

using nlohmann::json;

inline Complex parse_complex(const json& j, const std::string& where) {
  if (j.is_number()) return Complex(j.get<double>(), 0.0);
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return Complex(j[0].get<double>(), j[1].get<double>());
  throw ConfigError(where + ": expected a number or [re, im]");
}

inline Matrix parse_matrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected rows");
  const Eigen::Index n = static_cast<Eigen::Index>(j.size());
  Matrix m(n, static_cast<Eigen::Index>(j[0].size()));
  for (Eigen::Index r = 0; r < n; ++r) {
    if (static_cast<Eigen::Index>(j[r].size()) != m.cols())
      throw ConfigError(where + ": ragged rows");
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      m(r, c) = parse_complex(j[r][c], where);
  }
  return m;
}

struct GridSpec {
  enum class Kind { uniform, sqrt_spaced } kind = Kind::uniform;
  double lo = 0.0, hi = 0.0;        // uniform
  double threshold = 0.0, span = 0.0;  // sqrt_spaced
  Eigen::Index points = 0;

  ContinuumGrid build() const {
    return kind == Kind::uniform
               ? ContinuumGrid::uniform(lo, hi, points)
               : ContinuumGrid::sqrt_spaced(threshold, span, points);
  }
};

struct CouplingSpec {
  enum class Shape { flat, lorentzian, inverse_sqrt, table } shape = Shape::flat;
  Complex amplitude{0.0, 0.0};
  double center = 0.0, width = 0.0;  // lorentzian
  double threshold = 0.0;            // inverse_sqrt
  Vector values;                     // table

  Vector build(const ContinuumGrid& grid) const {
    switch (shape) {
      case Shape::flat:
        return flat_coupling(grid, amplitude);
      case Shape::lorentzian:
        return lorentzian_coupling(grid, amplitude, center, width);
      case Shape::inverse_sqrt:
        return inverse_sqrt_density_coupling(grid, amplitude, threshold);
      case Shape::table:
        if (values.size() != grid.size())
          throw ConfigError("table coupling length does not match the grid");
        return values;
    }
    throw ConfigError("unknown coupling shape");
  }
};

struct ChannelSpec {
  std::string label;
  GridSpec grid;
  std::vector<CouplingSpec> rows;
};

}  // namespace cfg

// Command line overrides applied before the model is built.
struct Overrides {
  std::optional<double> eta;
  std::optional<Eigen::Index> grid_points;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> methods;
  std::optional<std::string> out_dir;
};

struct IterateOptions {
  int max_iter = 12;
  double tol = 1e-10;
};

class RunConfig {
 public:
  enum class Kind { two_level, cpt_two_level, friedrichs_lee };

  Kind kind = Kind::two_level;
  double m0 = 0.0;
  Matrix h1;                                // two_level
  std::vector<cfg::ChannelSpec> channels;   // two_level
  Complex m12{0.0, 0.0};                    // cpt_two_level
  std::vector<cfg::ChannelSpec> cpt_channels;  // row 0 = first-row couplings
  FLParams fl;                              // friedrichs_lee

  std::vector<std::string> methods;
  std::optional<double> eta;
  RealVector times;
  Vector initial;  // parallel amplitudes; empty means |1>
  std::uint64_t seed = 0;
  int sweep_count = 100;
  IterateOptions iterate;
  std::string out_dir = "out";

  FullModel build_model() const {
    switch (kind) {
      case Kind::two_level: {
        std::vector<Channel> chans;
        for (const auto& spec : channels) {
          Channel ch;
          ch.label = spec.label;
          ch.grid = spec.grid.build();
          ch.couplings.resize(static_cast<Eigen::Index>(spec.rows.size()),
                              ch.grid.size());
          for (size_t r = 0; r < spec.rows.size(); ++r)
            ch.couplings.row(static_cast<Eigen::Index>(r)) =
                spec.rows[r].build(ch.grid).transpose();
          chans.push_back(std::move(ch));
        }
        return ::loylab::build_model(m0, h1, chans);
      }
      case Kind::cpt_two_level: {
        std::vector<CptChannelSpec> chans;
        for (const auto& spec : cpt_channels) {
          CptChannelSpec c;
          c.label = spec.label;
          c.grid = spec.grid.build();
          c.row1 = spec.rows.at(0).build(c.grid);
          chans.push_back(std::move(c));
        }
        return make_cpt_invariant(m0, m12, chans);
      }
      case Kind::friedrichs_lee:
        return build_fl_sector(fl);
    }
    throw ConfigError("unknown model kind");
  }

  Vector initial_amplitudes(Eigen::Index n) const {
    if (initial.size() == 0) {
      Vector a = Vector::Zero(n);
      a[0] = 1.0;
      return a;
    }
    if (initial.size() != n)
      throw ConfigError("initial amplitudes do not match the parallel dimension");
    return initial;
  }
};

namespace cfg {

inline GridSpec parse_grid(const json& j) {
  GridSpec g;
  if (!j.is_object()) throw ConfigError("grid: expected an object");
  const std::string kind = j.value("kind", std::string("uniform"));
  if (kind == "uniform") {
    g.kind = GridSpec::Kind::uniform;
    if (!j.contains("lo") || !j.contains("hi") || !j.contains("points"))
      throw ConfigError("grid: uniform needs lo, hi, points");
    g.lo = j["lo"].get<double>();
    g.hi = j["hi"].get<double>();
  } else if (kind == "sqrt") {
    g.kind = GridSpec::Kind::sqrt_spaced;
    if (!j.contains("threshold") || !j.contains("span") || !j.contains("points"))
      throw ConfigError("grid: sqrt needs threshold, span, points");
    g.threshold = j["threshold"].get<double>();
    g.span = j["span"].get<double>();
  } else {
    throw ConfigError("grid: unknown kind '" + kind + "'");
  }
  g.points = j["points"].get<Eigen::Index>();
  if (g.points < 1) throw ConfigError("grid: points must be >= 1");
  return g;
}

inline CouplingSpec parse_coupling(const json& j, const GridSpec& grid) {
  CouplingSpec c;
  if (!j.is_object()) throw ConfigError("coupling: expected an object");
  const std::string shape = j.value("shape", std::string("flat"));
  if (shape == "flat") {
    c.shape = CouplingSpec::Shape::flat;
    c.amplitude = parse_complex(j.at("amplitude"), "coupling amplitude");
  } else if (shape == "lorentzian") {
    c.shape = CouplingSpec::Shape::lorentzian;
    c.amplitude = parse_complex(j.at("amplitude"), "coupling amplitude");
    c.center = j.at("center").get<double>();
    c.width = j.at("width").get<double>();
  } else if (shape == "inverse_sqrt") {
    c.shape = CouplingSpec::Shape::inverse_sqrt;
    c.amplitude = parse_complex(j.at("amplitude"), "coupling amplitude");
    c.threshold = j.value("threshold", grid.kind == GridSpec::Kind::sqrt_spaced
                                           ? grid.threshold
                                           : grid.lo);
  } else if (shape == "table") {
    c.shape = CouplingSpec::Shape::table;
    const auto& vals = j.at("values");
    if (!vals.is_array()) throw ConfigError("table coupling: values array");
    c.values.resize(static_cast<Eigen::Index>(vals.size()));
    for (Eigen::Index i = 0; i < c.values.size(); ++i)
      c.values[i] = parse_complex(vals[static_cast<size_t>(i)], "table value");
  } else {
    throw ConfigError("coupling: unknown shape '" + shape + "'");
  }
  return c;
}

inline ChannelSpec parse_channel(const json& j, Eigen::Index expected_rows) {
  ChannelSpec spec;
  spec.label = j.value("label", std::string("ch"));
  spec.grid = parse_grid(j.at("grid"));
  const char* key = j.contains("couplings") ? "couplings" : "row1";
  if (std::string(key) == "row1") {
    spec.rows.push_back(parse_coupling(j.at("row1"), spec.grid));
  } else {
    for (const auto& row : j.at("couplings"))
      spec.rows.push_back(parse_coupling(row, spec.grid));
  }
  if (expected_rows > 0 &&
      static_cast<Eigen::Index>(spec.rows.size()) != expected_rows)
    throw ConfigError("channel '" + spec.label + "': expected " +
                      std::to_string(expected_rows) + " coupling rows");
  return spec;
}

inline FLShape parse_fl_shape(const std::string& s) {
  if (s == "flat") return FLShape::flat;
  if (s == "inverse_sqrt") return FLShape::inverse_sqrt_density;
  if (s == "lorentzian") return FLShape::lorentzian;
  throw ConfigError("unknown FL coupling shape '" + s + "'");
}

}  // namespace cfg

inline RunConfig parse_config(const nlohmann::json& j,
                              const Overrides& over = {}) {
  using cfg::json;
  RunConfig cfg;
  if (!j.is_object() || !j.contains("model"))
    throw ConfigError("config needs a single 'model' section");
  const json& jm = j["model"];
  const std::string type = jm.value("type", std::string(""));

  if (type == "two_level") {
    cfg.kind = RunConfig::Kind::two_level;
    cfg.m0 = jm.at("m0").get<double>();
    cfg.h1 = cfg::parse_matrix(jm.at("h1"), "h1");
    if (cfg.h1.rows() != 2 || cfg.h1.cols() != 2)
      throw ConfigError("h1 must be 2x2");
    for (const auto& jc : jm.at("channels"))
      cfg.channels.push_back(cfg::parse_channel(jc, 2));
    if (cfg.channels.empty()) throw ConfigError("two_level: channels required");
  } else if (type == "cpt_two_level") {
    cfg.kind = RunConfig::Kind::cpt_two_level;
    cfg.m0 = jm.at("m0").get<double>();
    cfg.m12 = cfg::parse_complex(jm.at("m12"), "m12");
    for (const auto& jc : jm.at("channels"))
      cfg.cpt_channels.push_back(cfg::parse_channel(jc, 1));
    if (cfg.cpt_channels.empty())
      throw ConfigError("cpt_two_level: channels required");
  } else if (type == "friedrichs_lee") {
    cfg.kind = RunConfig::Kind::friedrichs_lee;
    cfg.fl.mass = cfg::parse_matrix(jm.at("mass"), "mass");
    for (const auto& jc : jm.at("channels")) {
      FLChannel ch;
      ch.label = jc.value("label", std::string("ch"));
      ch.mu = jc.at("mu").get<double>();
      ch.g1 = cfg::parse_complex(jc.at("g1"), "g1");
      ch.g2 = jc.contains("g2") ? cfg::parse_complex(jc["g2"], "g2")
                                : std::conj(ch.g1);
      ch.span = jc.at("span").get<double>();
      ch.points = jc.at("points").get<Eigen::Index>();
      ch.shape = cfg::parse_fl_shape(
          jc.value("shape", std::string("inverse_sqrt")));
      ch.center = jc.value("center", 0.0);
      ch.width = jc.value("width", 0.0);
      cfg.fl.channels.push_back(std::move(ch));
    }
    if (cfg.fl.channels.empty())
      throw ConfigError("friedrichs_lee: channels required");
  } else {
    throw ConfigError("model.type must be two_level, cpt_two_level or "
                      "friedrichs_lee");
  }

  if (j.contains("methods"))
    for (const auto& m : j["methods"]) cfg.methods.push_back(m.get<std::string>());
  for (const auto& m : over.methods) cfg.methods.push_back(m);
  if (cfg.methods.empty())
    throw ConfigError("method list must not be empty (config 'methods' or "
                      "--method)");
  for (const auto& m : cfg.methods)
    if (m != "loy0" && m != "loy" && m != "improved" && m != "spectral" &&
        m != "iterate" && m != "onedim")
      throw ConfigError("unknown method '" + m + "'");

  if (over.eta)
    cfg.eta = *over.eta;
  else if (j.contains("eta"))
    cfg.eta = j["eta"].get<double>();
  if (cfg.eta && !(*cfg.eta > 0.0)) throw ConfigError("eta must be positive");

  if (j.contains("times")) {
    const json& jt = j["times"];
    if (jt.is_array()) {
      cfg.times.resize(static_cast<Eigen::Index>(jt.size()));
      for (Eigen::Index i = 0; i < cfg.times.size(); ++i)
        cfg.times[i] = jt[static_cast<size_t>(i)].get<double>();
    } else {
      const double start = jt.at("start").get<double>();
      const double stop = jt.at("stop").get<double>();
      const Eigen::Index count = jt.at("count").get<Eigen::Index>();
      if (count < 1 || !(stop >= start))
        throw ConfigError("times: need count >= 1 and stop >= start");
      cfg.times = RealVector::LinSpaced(count, start, stop);
    }
  }

  if (j.contains("initial")) {
    const json& ja = j["initial"];
    cfg.initial.resize(static_cast<Eigen::Index>(ja.size()));
    for (Eigen::Index i = 0; i < cfg.initial.size(); ++i)
      cfg.initial[i] =
          cfg::parse_complex(ja[static_cast<size_t>(i)], "initial");
  }

  cfg.seed = over.seed ? *over.seed : j.value("seed", std::uint64_t(0));
  if (j.contains("sweep")) cfg.sweep_count = j["sweep"].value("count", 100);
  if (cfg.sweep_count < 1) throw ConfigError("sweep count must be >= 1");
  if (j.contains("iterate")) {
    cfg.iterate.max_iter = j["iterate"].value("max_iter", 12);
    cfg.iterate.tol = j["iterate"].value("tol", 1e-10);
  }
  cfg.out_dir = over.out_dir ? *over.out_dir
                             : j.value("out", std::string("out"));

  if (over.grid_points) {
    if (*over.grid_points < 1) throw ConfigError("--grid must be >= 1");
    for (auto& c : cfg.channels) {
      for (const auto& r : c.rows)
        if (r.shape == cfg::CouplingSpec::Shape::table)
          throw ConfigError("--grid cannot re-sample table couplings");
      c.grid.points = *over.grid_points;
    }
    for (auto& c : cfg.cpt_channels) {
      for (const auto& r : c.rows)
        if (r.shape == cfg::CouplingSpec::Shape::table)
          throw ConfigError("--grid cannot re-sample table couplings");
      c.grid.points = *over.grid_points;
    }
    for (auto& c : cfg.fl.channels) c.points = *over.grid_points;
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path,
                             const Overrides& over = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config parse error in ") + path + ": " +
                      e.what());
  }
  try {
    return parse_config(j, over);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config schema error in ") + path + ": " +
                      e.what());
  }
}

}  // namespace loylab
