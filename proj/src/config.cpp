#include "sqkd/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace sqkd {

namespace {

using nlohmann::json;

void only_keys(const json& j, std::string_view section, std::initializer_list<std::string_view> keys) {
  if (!j.is_object()) throw ConfigError(std::string(section) + " must be an object");
  const std::set<std::string_view> allowed(keys);
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + std::string(section));
  }
}

template <typename T>
void read(const json& j, std::string_view key, T& out, std::string_view section) {
  if (!j.contains(key)) return;
  try {
    out = j.at(std::string(key)).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string(section) + "." + std::string(key) + " has the wrong type");
  }
}

void positive(double v, const char* name) {
  if (!(v > 0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be positive");
}

}  // namespace

double ExperimentConfig::resolved_aperture_size() const {
  return aperture_size ? *aperture_size : calibrated_aperture_waist(geometry, alphabet());
}

Apparatus ExperimentConfig::apparatus() const {
  return {geometry, aperture_shape, resolved_aperture_size()};
}

void ExperimentConfig::validate() const {
  positive(geometry.wavelength, "geometry.wavelength");
  positive(geometry.focal_length, "geometry.focal_length");
  positive(geometry.channel_focal_length, "geometry.channel_focal_length");
  positive(geometry.grid.extent, "geometry.grid.extent");
  if (geometry.grid.n < 16 || geometry.grid.n % 2) throw ConfigError("geometry.grid.n must be an even integer >= 16");
  if (aperture_size) positive(*aperture_size, "geometry.aperture.size");
  if (rings < 0) throw ConfigError("alphabet.rings must be non-negative");
  positive(cell_radius, "alphabet.cell_radius");
  try {
    noise.validate();
    adversary.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!(session.sample_fraction > 0 && session.sample_fraction <= 1)) {
    throw ConfigError("session.sample_fraction must lie in (0, 1]");
  }

  const auto image = optics::output_grid<double>(
      geometry.grid, optics::configuration_chain({Basis::fourier, Basis::fourier}, geometry),
      geometry.wavelength);
  const auto fourier = optics::output_grid<double>(
      geometry.grid, optics::configuration_chain({Basis::imaging, Basis::fourier}, geometry),
      geometry.wavelength);
  const HexAlphabet a = alphabet();
  for (const auto& g : {image, fourier}) {
    if (2 * cell_radius / g.spacing() < 15) {
      throw ConfigError("alphabet cells are under-resolved: need 15 samples across a cell, have " +
                        std::to_string(2 * cell_radius / g.spacing()));
    }
    if (a.envelope_radius() > g.extent) {
      throw ConfigError("alphabet (envelope radius " + std::to_string(a.envelope_radius()) +
                        " m) does not fit the detection plane of half-width " + std::to_string(g.extent) + " m");
    }
  }
  const double size = resolved_aperture_size();
  if (size >= geometry.grid.extent / 4) throw ConfigError("aperture too large for the grid");
  if (size < 2 * geometry.grid.spacing()) {
    throw ConfigError("aperture of size " + std::to_string(size) + " m is under-resolved by grid spacing " +
                      std::to_string(geometry.grid.spacing()) + " m");
  }
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  only_keys(j, "config", {"geometry", "alphabet", "noise", "adversary", "session", "outputs"});
  if (j.contains("geometry")) {
    const json& g = j["geometry"];
    only_keys(g, "geometry", {"wavelength", "focal_length", "channel_focal_length", "aperture", "grid"});
    read(g, "wavelength", c.geometry.wavelength, "geometry");
    read(g, "focal_length", c.geometry.focal_length, "geometry");
    read(g, "channel_focal_length", c.geometry.channel_focal_length, "geometry");
    if (g.contains("aperture")) {
      const json& a = g["aperture"];
      only_keys(a, "geometry.aperture", {"shape", "size"});
      if (a.contains("shape")) {
        std::string shape;
        read(a, "shape", shape, "geometry.aperture");
        try {
          c.aperture_shape = optics::parse_shape(shape);
        } catch (const std::invalid_argument& e) {
          throw ConfigError(e.what());
        }
      }
      if (a.contains("size")) {
        if (a["size"].is_string()) {
          if (a["size"] != "auto") throw ConfigError("geometry.aperture.size must be a number or \"auto\"");
          c.aperture_size.reset();
        } else {
          double size = 0;
          read(a, "size", size, "geometry.aperture");
          c.aperture_size = size;
        }
      }
    }
    if (g.contains("grid")) {
      only_keys(g["grid"], "geometry.grid", {"n", "extent"});
      read(g["grid"], "n", c.geometry.grid.n, "geometry.grid");
      read(g["grid"], "extent", c.geometry.grid.extent, "geometry.grid");
    }
  }
  if (j.contains("alphabet")) {
    only_keys(j["alphabet"], "alphabet", {"rings", "cell_radius"});
    read(j["alphabet"], "rings", c.rings, "alphabet");
    read(j["alphabet"], "cell_radius", c.cell_radius, "alphabet");
  }
  if (j.contains("noise")) {
    only_keys(j["noise"], "noise", {"background_prob", "jitter_sigma", "loss_prob"});
    read(j["noise"], "background_prob", c.noise.background_prob, "noise");
    read(j["noise"], "jitter_sigma", c.noise.jitter_sigma, "noise");
    read(j["noise"], "loss_prob", c.noise.loss_prob, "noise");
  }
  if (j.contains("adversary")) {
    const json& a = j["adversary"];
    only_keys(a, "adversary", {"strategy", "eta", "evidence_threshold"});
    if (a.contains("strategy")) {
      std::string s;
      read(a, "strategy", s, "adversary");
      try {
        c.adversary.strategy = parse_strategy(s);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }
    read(a, "eta", c.adversary.eta, "adversary");
    read(a, "evidence_threshold", c.adversary.evidence_threshold, "adversary");
  }
  if (j.contains("session")) {
    const json& s = j["session"];
    only_keys(s, "session", {"rounds", "seed", "sample_fraction", "source"});
    read(s, "rounds", c.session.rounds, "session");
    read(s, "seed", c.session.seed, "session");
    read(s, "sample_fraction", c.session.sample_fraction, "session");
    if (s.contains("source")) {
      std::string mode;
      read(s, "source", mode, "session");
      if (mode == "conjugate") {
        c.source = SourceMode::conjugate;
      } else if (mode == "uniform") {
        c.source = SourceMode::uniform;
      } else {
        throw ConfigError("session.source must be \"conjugate\" or \"uniform\"");
      }
    }
  }
  if (j.contains("outputs")) {
    only_keys(j["outputs"], "outputs", {"directory", "round_log"});
    read(j["outputs"], "directory", c.output_directory, "outputs");
    read(j["outputs"], "round_log", c.round_log, "outputs");
  }
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json aperture = {{"shape", optics::shape_name(c.aperture_shape)}};
  if (c.aperture_size) {
    aperture["size"] = *c.aperture_size;
  } else {
    aperture["size"] = "auto";
  }
  return {
      {"geometry",
       {{"wavelength", c.geometry.wavelength},
        {"focal_length", c.geometry.focal_length},
        {"channel_focal_length", c.geometry.channel_focal_length},
        {"aperture", aperture},
        {"grid", {{"n", c.geometry.grid.n}, {"extent", c.geometry.grid.extent}}}}},
      {"alphabet", {{"rings", c.rings}, {"cell_radius", c.cell_radius}}},
      {"noise",
       {{"background_prob", c.noise.background_prob},
        {"jitter_sigma", c.noise.jitter_sigma},
        {"loss_prob", c.noise.loss_prob}}},
      {"adversary",
       {{"strategy", strategy_name(c.adversary.strategy)},
        {"eta", c.adversary.eta},
        {"evidence_threshold", c.adversary.evidence_threshold}}},
      {"session",
       {{"rounds", c.session.rounds},
        {"seed", c.session.seed},
        {"sample_fraction", c.session.sample_fraction},
        {"source", c.source == SourceMode::conjugate ? "conjugate" : "uniform"}}},
      {"outputs", {{"directory", c.output_directory}, {"round_log", c.round_log}}},
  };
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

}  // namespace sqkd
