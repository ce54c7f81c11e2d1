#include "sqkd/cli.hpp"

#include "sqkd/infotheory.hpp"
#include "sqkd/io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace sqkd {

namespace fs = std::filesystem;
using nlohmann::json;

SourceDistribution config_source(const ExperimentConfig& config) {
  const HexAlphabet alphabet = config.alphabet();
  if (config.source == SourceMode::uniform) return SourceDistribution::uniform(alphabet.size());
  return source_from_conjugate(build_probability_map(config.apparatus(), alphabet, alphabet));
}

ScalingResult scaling_estimate(const ExperimentConfig& config, double aperture) {
  if (!(aperture > 0)) throw std::invalid_argument("aperture size must be positive");
  ScalingResult r;
  r.aperture = aperture;
  r.envelope_radius = config.alphabet().envelope_radius();
  r.envelope_waist = envelope_waist(r.envelope_radius);
  const HexAlphabet disc = build_disc_alphabet(aperture, r.envelope_radius);
  r.d = disc.size();
  const Eigen::VectorXd p = gaussian_cell_probabilities(disc, Eigen::Vector2d::Zero(), r.envelope_waist);
  r.I_A = shannon_entropy(Eigen::VectorXd(p / p.sum()));
  return r;
}

namespace {

struct Common {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> rounds;
  std::optional<double> eta;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "experiment config JSON")->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out_dir, "output directory (overrides outputs.directory)");
  cmd->add_option("--seed", c.seed, "random seed");
  cmd->add_option("--rounds", c.rounds, "protocol rounds");
  cmd->add_option("--eta", c.eta, "fraction of photons attacked")->check(CLI::Range(0.0, 1.0));
}

ExperimentConfig resolve(const Common& c) {
  ExperimentConfig config = c.config_path.empty() ? ExperimentConfig{} : load_config(c.config_path);
  if (!c.out_dir.empty()) config.output_directory = c.out_dir;
  if (c.seed) config.session.seed = *c.seed;
  if (c.rounds) config.session.rounds = *c.rounds;
  if (c.eta) {
    config.adversary.eta = *c.eta;
    if (config.adversary.strategy == Strategy::none && *c.eta > 0) {
      config.adversary.strategy = Strategy::intercept_resend;
    }
  }
  config.validate();
  return config;
}

fs::path prepare_dir(const ExperimentConfig& config) {
  const fs::path dir = config.output_directory;
  fs::create_directories(dir);
  return dir;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::vector<BasisConfig> parse_configs(const std::string& list) {
  std::vector<BasisConfig> out;
  std::stringstream ss(list);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(parse_config(item));
  }
  if (out.empty()) throw std::invalid_argument("no basis configuration requested");
  return out;
}

int cmd_maps(const ExperimentConfig& config, const std::string& label, const std::string& configs_arg,
             std::ostream& out) {
  const HexAlphabet alphabet = config.alphabet();
  const auto k = alphabet.index_of(label);
  if (!k) throw std::invalid_argument("unknown character label '" + label + "'");
  const auto configs = parse_configs(configs_arg);
  const Apparatus apparatus = config.apparatus();
  const ProbabilityMap map = build_probability_map(apparatus, alphabet, alphabet, config.noise.jitter_sigma);
  const fs::path dir = prepare_dir(config);

  json summary = {{"character", label}, {"aperture_size", apparatus.aperture_size}, {"maps", json::array()}};
  for (const BasisConfig c : configs) {
    const optics::ApertureSpec<double> spec{apparatus.aperture_shape, apparatus.aperture_size, alphabet.center(*k)};
    const auto density = optics::blur_intensity(
        optics::detection_probability_map(optics::analytic_amplitude(c, spec, apparatus.geometry)),
        config.noise.jitter_sigma);
    const std::string stem = "map_" + c.name() + "_" + label;
    {
      std::ofstream f(dir / (stem + ".csv"));
      io::write_density_csv(f, density);
    }
    {
      std::ofstream f(dir / (stem + ".pgm"), std::ios::binary);
      io::write_pgm(f, density);
    }
    Eigen::Index best = 0;
    map[c].col(*k).maxCoeff(&best);
    summary["maps"].push_back({{"config", c.name()},
                               {"max_cell", alphabet.label(static_cast<int>(best))},
                               {"max_probability", map[c](best, *k)},
                               {"residual", map.residual[c.index()][*k]}});
    out << c.name() << ": max at cell " << alphabet.label(static_cast<int>(best)) << " (p = "
        << map[c](best, *k) << ")\n";
  }
  {
    std::ofstream f(dir / ("binned_" + label + ".csv"));
    io::write_binned_csv(f, map, {*k}, configs);
  }
  {
    std::ofstream f(dir / "bars.csv");
    f << "char,p_correct_II,p_correct_FF,p_cell_IF,p_cell_FI\n";
    const BasisConfig ii{Basis::imaging, Basis::imaging}, ff{Basis::fourier, Basis::fourier};
    const BasisConfig iF{Basis::imaging, Basis::fourier}, fi{Basis::fourier, Basis::imaging};
    for (int j = 0; j < alphabet.size(); ++j) {
      f << alphabet.label(j) << ',' << map.p(ii, j, j) << ',' << map.p(ff, j, j) << ','
        << map[iF].row(j).mean() << ',' << map[fi].row(j).mean() << '\n';
    }
  }
  io::write_file(dir / "maps.json", dump(summary));
  io::write_file(dir / "alphabet.json", dump(io::alphabet_to_json(alphabet)));
  return 0;
}

int cmd_simulate(ExperimentConfig config, bool round_log, std::ostream& out) {
  if (round_log) config.round_log = true;
  const HexAlphabet alphabet = config.alphabet();
  const ChannelModel model = build_channel_model(config.apparatus(), alphabet, config.noise, config.source);
  SessionParams params = config.session;
  params.keep_log = config.round_log;
  const SessionResult result = run_session(model, config.adversary, params);
  const fs::path dir = prepare_dir(config);

  io::write_file(dir / "stats.json", dump(io::stats_to_json(result.stats, alphabet)));
  io::write_file(dir / "alice_key.txt", io::key_string(result.alice_key, alphabet) + "\n");
  io::write_file(dir / "bob_key.txt", io::key_string(result.bob_key, alphabet) + "\n");
  io::write_file(dir / "alice_flat.txt", io::key_string(result.alice_flat, alphabet) + "\n");
  io::write_file(dir / "bob_flat.txt", io::key_string(result.bob_flat, alphabet) + "\n");
  io::write_file(dir / "config.json", dump(config_to_json(config)));
  if (config.round_log) {
    std::ofstream f(dir / "rounds.csv");
    write_round_log(f, result.log, model);
    if (config.adversary.strategy != Strategy::none) {
      std::vector<EveRecord> records;
      for (const auto& r : result.log) {
        if (r.eve.kind != EveActionKind::none) records.push_back({r.index, r.alice_basis, r.sent, r.eve});
      }
      std::ofstream e(dir / "eve.csv");
      write_eve_records(e, records, model);
    }
  }
  const auto& s = result.stats;
  out << "rounds " << s.rounds << ", sifted " << s.sifted << ", sampled error " << s.estimate.average
      << " +- " << s.estimate.std_error << ", sifted error " << s.sifted_average_error << "\n";
  return 0;
}

int cmd_security(const ExperimentConfig& config, int points, std::ostream& out) {
  const SourceDistribution p = config_source(config);
  const auto rows = security_sweep(p, points);
  const InfoReport report = make_report(p, config.adversary.eta);
  const fs::path dir = prepare_dir(config);
  {
    std::ofstream f(dir / "security.csv");
    f.precision(12);
    f << "eta,average_error,I_AB,I_AB_exact,I_E,secure,crossover\n";
    for (const auto& r : rows) {
      f << r.eta << ',' << r.average_error << ',' << r.info_AB << ',' << r.info_AB_exact << ','
        << r.info_E << ',' << (r.secure ? 1 : 0) << ",0\n";
    }
    if (report.crossover.found) {
      const auto e = intercept_resend_errors(p, report.crossover.eta);
      const auto ab = info_AB(p, e);
      f << report.crossover.eta << ',' << report.crossover.average_error << ',' << ab.formula << ','
        << ab.exact << ',' << report.crossover.information << ",0,1\n";
    }
  }
  io::write_file(dir / "report.json", dump(io::report_to_json(report)));
  if (report.crossover.found) {
    out << "crossover at eta " << report.crossover.eta << ", average error " << report.crossover.average_error
        << ", information " << report.crossover.information << " bits\n";
  } else {
    out << "secure for all eta\n";
  }
  return 0;
}

int cmd_scaling(const ExperimentConfig& config, double aperture, std::ostream& out) {
  const ScalingResult r = scaling_estimate(config, aperture);
  const fs::path dir = prepare_dir(config);
  io::write_file(dir / "scaling.json", dump({{"aperture", r.aperture},
                                             {"d", r.d},
                                             {"I_A", r.I_A},
                                             {"envelope_radius", r.envelope_radius},
                                             {"envelope_waist", r.envelope_waist}}));
  out << "aperture " << r.aperture << " m: d = " << r.d << ", I_A = " << r.I_A << " bits\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spatial-qudit key distribution simulator", "sqkd"};
  app.require_subcommand(1);

  Common maps_c, sim_c, sec_c, scale_c;
  std::string label = "7";
  std::string configs = "II,IF,FI,FF";
  bool round_log = false;
  int points = 101;
  double aperture = 60e-6;

  auto* maps = app.add_subcommand("maps", "detection maps for one character");
  add_common(maps, maps_c);
  maps->add_option("--char", label, "character label");
  maps->add_option("--configs", configs, "comma-separated basis configurations");

  auto* simulate = app.add_subcommand("simulate", "run a protocol session");
  add_common(simulate, sim_c);
  simulate->add_flag("--round-log", round_log, "write the per-round log");

  auto* security = app.add_subcommand("security", "information sweep over eta");
  add_common(security, sec_c);
  security->add_option("--points", points, "sweep points in [0, 1]")->check(CLI::PositiveNumber);

  auto* scaling = app.add_subcommand("scaling", "alphabet size for a smaller aperture");
  add_common(scaling, scale_c);
  scaling->add_option("--aperture", aperture, "aperture (cell) radius in meters")->check(CLI::PositiveNumber);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (maps->parsed()) return cmd_maps(resolve(maps_c), label, configs, out);
    if (simulate->parsed()) return cmd_simulate(resolve(sim_c), round_log, out);
    if (security->parsed()) return cmd_security(resolve(sec_c), points, out);
    if (scaling->parsed()) return cmd_scaling(resolve(scale_c), aperture, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace sqkd
