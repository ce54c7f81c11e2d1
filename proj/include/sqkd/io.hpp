#pragma once

#include "sqkd/alphabet.hpp"
#include "sqkd/infotheory.hpp"
#include "sqkd/protocol.hpp"

#include <json.hpp>

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace sqkd::io {

/// row,col,value
void write_density_csv(std::ostream& out, const optics::ProbabilityDensity& map);

/// Binary 8-bit graymap, linear in intensity, scaled to the map's maximum.
void write_pgm(std::ostream& out, const optics::ProbabilityDensity& map);

/// config,sent_char,cell_char,probability for the given sent characters.
void write_binned_csv(std::ostream& out, const ProbabilityMap& map, const std::vector<int>& sent,
                      const std::vector<BasisConfig>& configs);

nlohmann::json alphabet_to_json(const HexAlphabet& alphabet);
HexAlphabet alphabet_from_json(const nlohmann::json& j);

nlohmann::json stats_to_json(const SessionStats& stats, const HexAlphabet& alphabet);
nlohmann::json report_to_json(const InfoReport& report);

/// Labels concatenated when all are single characters, else space separated.
std::string key_string(const std::vector<int>& key, const HexAlphabet& alphabet);

void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace sqkd::io
