#pragma once

#include "sqkd/adversary.hpp"
#include "sqkd/alphabet.hpp"
#include "sqkd/channel.hpp"
#include "sqkd/protocol.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

namespace sqkd {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ExperimentConfig {
  optics::Geometry<double> geometry{};
  optics::ApertureShape aperture_shape = optics::ApertureShape::gaussian;
  std::optional<double> aperture_size;  // empty: calibrated to the alphabet
  int rings = 3;
  double cell_radius = 200e-6;
  NoiseModel noise{};
  AdversarySpec adversary{};
  SessionParams session{};
  SourceMode source = SourceMode::conjugate;
  std::string output_directory = "out";
  bool round_log = false;

  /// Physical ranges plus the cross checks: the aperture is resolved, the
  /// alphabet fits inside both detection planes and every cell is resolved.
  void validate() const;

  HexAlphabet alphabet() const { return build_hex_alphabet(rings, cell_radius); }
  double resolved_aperture_size() const;
  Apparatus apparatus() const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& c);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace sqkd
