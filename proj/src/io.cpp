#include "sqkd/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace sqkd::io {

using nlohmann::json;

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vector_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(finite_or_null(v[i]));
  return a;
}

json vector_json(const Eigen::VectorXi& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

}  // namespace

void write_density_csv(std::ostream& out, const optics::ProbabilityDensity& map) {
  out << "row,col,value\n";
  out.precision(10);
  for (Eigen::Index i = 0; i < map.density.rows(); ++i)
    for (Eigen::Index j = 0; j < map.density.cols(); ++j) out << i << ',' << j << ',' << map.density(i, j) << '\n';
}

void write_pgm(std::ostream& out, const optics::ProbabilityDensity& map) {
  const auto rows = map.density.rows();
  const auto cols = map.density.cols();
  const double peak = map.density.maxCoeff();
  out << "P5\n" << cols << ' ' << rows << "\n255\n";
  // Row 0 is the most negative y; graymaps are written top row first.
  for (Eigen::Index i = rows - 1; i >= 0; --i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double v = peak > 0 ? map.density(i, j) / peak : 0.0;
      out.put(static_cast<char>(static_cast<unsigned char>(std::clamp(std::lround(255 * v), 0L, 255L))));
    }
  }
}

void write_binned_csv(std::ostream& out, const ProbabilityMap& map, const std::vector<int>& sent,
                      const std::vector<BasisConfig>& configs) {
  out << "config,sent_char,cell_char,probability\n";
  out.precision(12);
  for (const BasisConfig config : configs) {
    for (int k : sent) {
      for (int c = 0; c < map.cells.size(); ++c) {
        out << config.name() << ',' << map.sources.label(k) << ',' << map.cells.label(c) << ','
            << map.p(config, c, k) << '\n';
      }
    }
  }
}

json alphabet_to_json(const HexAlphabet& alphabet) {
  json centers = json::array();
  for (const auto& c : alphabet.centers()) centers.push_back({c.x(), c.y()});
  json axial = json::array();
  for (const auto& a : alphabet.cells()) axial.push_back({a.q, a.r});
  return {{"rings", alphabet.rings()},
          {"cell_radius", alphabet.cell_radius()},
          {"envelope_radius", alphabet.envelope_radius()},
          {"labels", alphabet.labels()},
          {"centers", centers},
          {"axial", axial}};
}

HexAlphabet alphabet_from_json(const json& j) {
  std::vector<Axial> cells;
  for (const auto& a : j.at("axial")) cells.push_back({a.at(0).get<int>(), a.at(1).get<int>()});
  return HexAlphabet(j.at("rings").get<int>(), j.at("cell_radius").get<double>(), std::move(cells),
                     j.at("labels").get<std::vector<std::string>>());
}

json stats_to_json(const SessionStats& s, const HexAlphabet& alphabet) {
  const auto& e = s.estimate;
  return {
      {"labels", alphabet.labels()},
      {"rounds", s.rounds},
      {"detected", s.detected},
      {"sifted", s.sifted},
      {"attacked", s.attacked},
      {"dropped", s.dropped},
      {"sifted_fraction", s.sifted_fraction},
      {"loss_rate", s.loss_rate},
      {"estimate",
       {{"sampled", e.sampled},
        {"average_error", e.average},
        {"std_error", e.std_error},
        {"low_confidence", e.low_confidence},
        {"per_character_error", vector_json(e.per_character)},
        {"per_character_samples", vector_json(e.samples)}}},
      {"sifted_error",
       {{"average", s.sifted_average_error},
        {"std_error", s.sifted_std_error},
        {"per_character", vector_json(s.sifted_error)},
        {"II_pairs", vector_json(s.config_pairs[0])},
        {"II_errors", vector_json(s.config_errors[0])},
        {"FF_pairs", vector_json(s.config_pairs[1])},
        {"FF_errors", vector_json(s.config_errors[1])}}},
      {"sifted_histogram", vector_json(s.sifted_histogram)},
      {"eve_information", s.eve_information},
      {"key_length", s.key_length},
      {"flattened_length", s.flattened_length},
      {"source_entropy", s.source_entropy},
      {"sifted_entropy", s.sifted_entropy},
  };
}

json report_to_json(const InfoReport& r) {
  json crossing = {{"found", r.crossover.found}};
  if (r.crossover.found) {
    crossing["eta"] = r.crossover.eta;
    crossing["average_error"] = r.crossover.average_error;
    crossing["information"] = r.crossover.information;
  } else {
    crossing["outcome"] = "secure for all eta";
  }
  return {{"I_A", r.I_A},
          {"I_AB", r.I_AB},
          {"I_AB_exact", r.I_AB_exact},
          {"I_E", r.I_E},
          {"eta", r.eta},
          {"average_error", r.average_error},
          {"crossover", crossing},
          {"cloning_bound",
           {{"error", r.cloning_bound_error},
            {"source", "external citation"},
            {"caveat", std::string(r.cloning_bound_caveat)}}}};
}

std::string key_string(const std::vector<int>& key, const HexAlphabet& alphabet) {
  const bool compact = alphabet.single_char_labels();
  std::string s;
  for (std::size_t i = 0; i < key.size(); ++i) {
    if (!compact && i) s += ' ';
    s += alphabet.label(key[i]);
  }
  return s;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace sqkd::io
