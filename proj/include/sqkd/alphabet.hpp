#pragma once

#include "sqkd/optics.hpp"

#include <Eigen/Core>

#include <array>
#include <compare>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sqkd {

class AlphabetError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ResolutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Axial coordinates on the hexagonal lattice spanned by
/// b1 = s (1, 0) and b2 = s (1/2, sqrt(3)/2), s = sqrt(3) * cell radius.
struct Axial {
  int q = 0;
  int r = 0;

  friend auto operator<=>(const Axial&, const Axial&) = default;
  Axial mirror() const { return {-q, -r}; }
  int ring() const;
};

class HexLattice {
 public:
  explicit HexLattice(double cell_radius);

  double cell_radius() const { return cell_radius_; }
  double spacing() const { return spacing_; }
  Eigen::Vector2d center(Axial a) const;
  /// Lattice cell whose hexagon contains p.  On a shared edge either
  /// neighbour may be returned; use nearest_ties when that matters.
  Axial nearest(const Eigen::Vector2d& p) const;
  std::vector<Axial> nearest_ties(const Eigen::Vector2d& p) const;

 private:
  double cell_radius_;
  double spacing_;
};

/// Character alphabet: a point-symmetric set of hexagonal lattice cells,
/// labelled in spiral order from the centre.
class HexAlphabet {
 public:
  HexAlphabet(int rings, double cell_radius, std::vector<Axial> cells,
              std::vector<std::string> labels);

  int size() const { return static_cast<int>(cells_.size()); }
  int rings() const { return rings_; }
  double cell_radius() const { return lattice_.cell_radius(); }
  const HexLattice& lattice() const { return lattice_; }
  const std::vector<Axial>& cells() const { return cells_; }
  const std::vector<Eigen::Vector2d>& centers() const { return centers_; }
  const std::vector<std::string>& labels() const { return labels_; }
  const Eigen::Vector2d& center(int k) const { return centers_.at(k); }
  const std::string& label(int k) const { return labels_.at(k); }

  /// max over cells of |centre| + cell radius.
  double envelope_radius() const;

  std::optional<int> index_of(std::string_view label) const;
  std::optional<int> find(Axial cell) const;
  int mirror(int k) const { return mirror_[k]; }
  /// Cell containing position; ties on shared edges go to the lowest index.
  std::optional<int> locate(const Eigen::Vector2d& position) const;
  bool single_char_labels() const;

 private:
  int rings_;
  HexLattice lattice_;
  std::vector<Axial> cells_;
  std::vector<Eigen::Vector2d> centers_;
  std::vector<std::string> labels_;
  std::vector<int> mirror_;
  std::map<Axial, int> index_;
};

/// 0-9, A-Z, a-z, then "#<index>".
std::string default_label(int index);

HexAlphabet build_hex_alphabet(int rings, double cell_radius);

/// Every lattice cell lying entirely inside a circle of radius
/// envelope_radius (|c| + a <= R), plus the centre cell.
HexAlphabet build_disc_alphabet(double cell_radius, double envelope_radius);

/// Gaussian intensity waist w with 99% of exp(-2 r^2 / w^2) inside radius R.
double envelope_waist(double envelope_radius);
double calibrate_envelope(const HexAlphabet& alphabet);

/// Bob's lookup: imaging detection planes are point-inverted.
std::optional<int> decode(const Eigen::Vector2d& position, BasisConfig config,
                          const HexAlphabet& alphabet);

/// Removes the risky characters together with their mirror cells.
HexAlphabet prune_alphabet(const HexAlphabet& alphabet, const std::set<std::string>& risky);

struct CellProbabilities {
  Eigen::VectorXd cells;
  double residual = 0;
};

/// Precomputed pixel-to-cell assignment for one detection grid and layout.
/// Pixels straddling a hexagon edge are clipped exactly against each cell and
/// integrated with a linear intensity reconstruction about the piece centroid.
class CellBinner {
 public:
  CellBinner(const optics::Grid<double>& grid, const HexAlphabet& layout);

  CellProbabilities bin(const optics::ProbabilityDensity& map) const;
  int cell_count() const { return cell_count_; }
  /// Cell of each pixel centre (-1 outside the layout), row-major by (row, col).
  const std::vector<int>& pixel_cells() const { return pixel_cell_; }

 private:
  struct Partial {
    int pixel;
    int cell;
    double fraction;
    double dx;
    double dy;
  };
  optics::Grid<double> grid_;
  int cell_count_;
  std::vector<int> whole_;  // per pixel: cell, -1 outside, -2 split
  std::vector<int> pixel_cell_;
  std::vector<Partial> partial_;
};

/// Requires at least 15 samples across a cell (2a / spacing).
CellProbabilities bin_probabilities(const optics::ProbabilityDensity& map,
                                    const HexAlphabet& alphabet);

/// Cell integrals of the normalized Gaussian intensity exp(-2|r - c|^2 / w^2),
/// by Gauss-Legendre quadrature over the six triangles of each hexagon.
Eigen::VectorXd gaussian_cell_probabilities(const HexAlphabet& alphabet,
                                            const Eigen::Vector2d& center, double waist);

class SourceDistribution {
 public:
  explicit SourceDistribution(Eigen::VectorXd probabilities);
  static SourceDistribution uniform(int d);

  const Eigen::VectorXd& probabilities() const { return p_; }
  double operator[](int k) const { return p_[k]; }
  int size() const { return static_cast<int>(p_.size()); }

 private:
  Eigen::VectorXd p_;
};

/// Optical apparatus shared by Alice, Eve and Bob.
struct Apparatus {
  optics::Geometry<double> geometry{};
  optics::ApertureShape aperture_shape = optics::ApertureShape::gaussian;
  double aperture_size = 200e-6;
};

/// Aperture waist whose conjugate-basis Gaussian at Bob's plane equals the
/// alphabet's 99% envelope Gaussian: 2F / (k W_env).
double calibrated_aperture_waist(const optics::Geometry<double>& geometry,
                                 const HexAlphabet& alphabet);

/// Binned detection probabilities p(cell | sent, config).  Sources are the
/// encoded characters, cells the detector layout.  Cell indices are as read
/// by the measuring party, i.e. already point-inverted for imaging detection.
struct ProbabilityMap {
  HexAlphabet sources;
  HexAlphabet cells;
  std::array<Eigen::MatrixXd, 4> table;  // (cell, source) per BasisConfig::index()
  std::array<Eigen::RowVectorXd, 4> residual;
  std::vector<int> cell_of_source;  // layout index of each source, -1 if absent

  const Eigen::MatrixXd& operator[](BasisConfig c) const { return table[c.index()]; }
  double p(BasisConfig c, int cell, int source) const { return table[c.index()](cell, source); }
};

/// Renders every (config, character) amplitude in closed form, optionally
/// blurs by transverse jitter, and bins it over the layout.
ProbabilityMap build_probability_map(const Apparatus& apparatus, const HexAlphabet& sources,
                                     const HexAlphabet& cells, double jitter_sigma = 0.0);

/// Keeps only the cells of `subset` (which must lie on the same lattice).
ProbabilityMap project_cells(const ProbabilityMap& map, const HexAlphabet& subset);

/// P_k: IF and FI probabilities of each character's cell averaged over
/// both configurations and all sent characters, renormalized over the alphabet.
SourceDistribution source_from_conjugate(const ProbabilityMap& map);

struct LeakageFinding {
  int cell = 0;
  std::string label;
  Basis measurer = Basis::imaging;
  double conjugate = 0;  // max_k p(cell | k, conjugate config)
  double matched = 0;    // max_k p(cell | k, matched config)
};

/// Detector cells where a conjugate-basis click is likely (>= eps) but no
/// matched-basis character lands (< eps): a measurement there reveals that
/// the basis was wrong.  Empty means the layout passes.
std::vector<LeakageFinding> leakage_check(const ProbabilityMap& map, double eps = 1e-4);

/// Characters whose cell is reachable in the matched basis but receives
/// (almost) no conjugate-basis light, so a click there reveals the right basis.
std::set<std::string> basis_revealing_characters(const ProbabilityMap& map, double eps = 1e-4);

}  // namespace sqkd
