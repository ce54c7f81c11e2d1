#include "sqkd/alphabet.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace sqkd {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;
constexpr double kMinSamplesAcrossCell = 15.0;

double polar_angle(const Eigen::Vector2d& c) {
  double a = std::atan2(c.y(), c.x());
  if (a < -1e-12) a += 2 * std::numbers::pi;
  return std::max(a, 0.0);
}

HexAlphabet spiral_alphabet(int rings, double cell_radius, std::vector<Axial> cells) {
  const HexLattice lattice(cell_radius);
  std::sort(cells.begin(), cells.end(), [&](const Axial& a, const Axial& b) {
    if (a.ring() != b.ring()) return a.ring() < b.ring();
    return polar_angle(lattice.center(a)) < polar_angle(lattice.center(b));
  });
  std::vector<std::string> labels;
  labels.reserve(cells.size());
  for (int i = 0; i < static_cast<int>(cells.size()); ++i) labels.push_back(default_label(i));
  return HexAlphabet(rings, cell_radius, std::move(cells), std::move(labels));
}

// Gauss-Legendre nodes and weights on [0, 1].
struct GaussRule {
  std::vector<double> x;
  std::vector<double> w;
};

GaussRule gauss_legendre(int n) {
  GaussRule rule{std::vector<double>(n), std::vector<double>(n)};
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    rule.x[i] = 0.5 * (1 - z);
    rule.w[i] = 1.0 / ((1 - z * z) * dp * dp);
  }
  return rule;
}

}  // namespace

int Axial::ring() const { return std::max({std::abs(q), std::abs(r), std::abs(q + r)}); }

HexLattice::HexLattice(double cell_radius) : cell_radius_(cell_radius), spacing_(kSqrt3 * cell_radius) {
  if (!(cell_radius > 0)) throw std::invalid_argument("cell radius must be positive");
}

Eigen::Vector2d HexLattice::center(Axial a) const {
  return {spacing_ * (a.q + 0.5 * a.r), spacing_ * (kSqrt3 / 2) * a.r};
}

Axial HexLattice::nearest(const Eigen::Vector2d& p) const {
  const double rf = p.y() / (spacing_ * kSqrt3 / 2);
  const double qf = p.x() / spacing_ - rf / 2;
  const double sf = -qf - rf;
  double q = std::round(qf), r = std::round(rf), s = std::round(sf);
  const double dq = std::abs(q - qf), dr = std::abs(r - rf), ds = std::abs(s - sf);
  if (dq > dr && dq > ds) {
    q = -r - s;
  } else if (dr > ds) {
    r = -q - s;
  }
  return {static_cast<int>(q), static_cast<int>(r)};
}

std::vector<Axial> HexLattice::nearest_ties(const Eigen::Vector2d& p) const {
  static constexpr std::array<Axial, 7> kOffsets = {
      Axial{0, 0}, Axial{1, 0}, Axial{-1, 0}, Axial{0, 1}, Axial{0, -1}, Axial{1, -1}, Axial{-1, 1}};
  const Axial base = nearest(p);
  std::array<double, 7> d2{};
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 7; ++i) {
    d2[i] = (center({base.q + kOffsets[i].q, base.r + kOffsets[i].r}) - p).squaredNorm();
    best = std::min(best, d2[i]);
  }
  std::vector<Axial> ties;
  const double tol = 1e-12 * spacing_ * spacing_;
  for (int i = 0; i < 7; ++i) {
    if (d2[i] <= best + tol) ties.push_back({base.q + kOffsets[i].q, base.r + kOffsets[i].r});
  }
  return ties;
}

HexAlphabet::HexAlphabet(int rings, double cell_radius, std::vector<Axial> cells,
                         std::vector<std::string> labels)
    : rings_(rings), lattice_(cell_radius), cells_(std::move(cells)), labels_(std::move(labels)) {
  if (cells_.empty()) throw AlphabetError("alphabet has no characters");
  if (labels_.size() != cells_.size()) throw AlphabetError("one label per cell is required");
  std::set<std::string> distinct(labels_.begin(), labels_.end());
  if (distinct.size() != labels_.size()) throw AlphabetError("alphabet labels must be distinct");
  for (int k = 0; k < size(); ++k) {
    if (!index_.emplace(cells_[k], k).second) throw AlphabetError("duplicate alphabet cell");
    centers_.push_back(lattice_.center(cells_[k]));
  }
  mirror_.resize(cells_.size());
  for (int k = 0; k < size(); ++k) {
    const auto m = index_.find(cells_[k].mirror());
    if (m == index_.end()) throw AlphabetError("alphabet is not point-symmetric");
    mirror_[k] = m->second;
  }
}

double HexAlphabet::envelope_radius() const {
  double r = 0;
  for (const auto& c : centers_) r = std::max(r, c.norm());
  return r + cell_radius();
}

std::optional<int> HexAlphabet::index_of(std::string_view label) const {
  const auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) return std::nullopt;
  return static_cast<int>(it - labels_.begin());
}

std::optional<int> HexAlphabet::find(Axial cell) const {
  const auto it = index_.find(cell);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> HexAlphabet::locate(const Eigen::Vector2d& position) const {
  std::optional<int> best;
  for (const Axial& a : lattice_.nearest_ties(position)) {
    if (const auto k = find(a); k && (!best || *k < *best)) best = k;
  }
  return best;
}

bool HexAlphabet::single_char_labels() const {
  return std::all_of(labels_.begin(), labels_.end(), [](const auto& l) { return l.size() == 1; });
}

std::string default_label(int index) {
  if (index < 0) throw std::invalid_argument("label index must be non-negative");
  if (index < 10) return std::string(1, static_cast<char>('0' + index));
  if (index < 36) return std::string(1, static_cast<char>('A' + index - 10));
  if (index < 62) return std::string(1, static_cast<char>('a' + index - 36));
  return "#" + std::to_string(index);
}

HexAlphabet build_hex_alphabet(int rings, double cell_radius) {
  if (rings < 0) throw std::invalid_argument("ring count must be non-negative");
  std::vector<Axial> cells;
  for (int q = -rings; q <= rings; ++q)
    for (int r = -rings; r <= rings; ++r)
      if (Axial{q, r}.ring() <= rings) cells.push_back({q, r});
  return spiral_alphabet(rings, cell_radius, std::move(cells));
}

HexAlphabet build_disc_alphabet(double cell_radius, double envelope_radius) {
  const HexLattice lattice(cell_radius);
  const double reach = envelope_radius - cell_radius;
  const int bound = std::max(0, static_cast<int>(std::ceil(reach / (lattice.spacing() * kSqrt3 / 2))) + 1);
  std::vector<Axial> cells{{0, 0}};
  int rings = 0;
  for (int q = -bound; q <= bound; ++q) {
    for (int r = -bound; r <= bound; ++r) {
      if (q == 0 && r == 0) continue;
      if (lattice.center({q, r}).norm() <= reach * (1 + 1e-12)) {
        cells.push_back({q, r});
        rings = std::max(rings, Axial{q, r}.ring());
      }
    }
  }
  return spiral_alphabet(rings, cell_radius, std::move(cells));
}

double envelope_waist(double envelope_radius) {
  return envelope_radius * std::sqrt(2.0 / std::log(100.0));
}

double calibrate_envelope(const HexAlphabet& alphabet) {
  return envelope_waist(alphabet.envelope_radius());
}

std::optional<int> decode(const Eigen::Vector2d& position, BasisConfig config,
                          const HexAlphabet& alphabet) {
  return alphabet.locate(config.bob == Basis::imaging ? Eigen::Vector2d(-position) : position);
}

HexAlphabet prune_alphabet(const HexAlphabet& alphabet, const std::set<std::string>& risky) {
  std::set<int> removed;
  for (const auto& label : risky) {
    const auto k = alphabet.index_of(label);
    if (!k) throw std::invalid_argument("risky label '" + label + "' is not in the alphabet");
    removed.insert(*k);
    removed.insert(alphabet.mirror(*k));
  }
  std::vector<Axial> cells;
  std::vector<std::string> labels;
  for (int k = 0; k < alphabet.size(); ++k) {
    if (removed.count(k)) continue;
    cells.push_back(alphabet.cells()[k]);
    labels.push_back(alphabet.label(k));
  }
  if (cells.empty()) throw AlphabetError("pruning removed every character");
  return HexAlphabet(alphabet.rings(), alphabet.cell_radius(), std::move(cells), std::move(labels));
}

namespace {

struct Piece {
  double area = 0;
  double cx = 0;
  double cy = 0;
};

// Intersection of the pixel [-h/2, h/2]^2 with the pointy-top hexagon of
// circumradius a centred at c: area and centroid.
Piece clip_pixel(const Eigen::Vector2d& c, double a, double h) {
  std::vector<Eigen::Vector2d> poly{{-h / 2, -h / 2}, {h / 2, -h / 2}, {h / 2, h / 2}, {-h / 2, h / 2}};
  std::vector<Eigen::Vector2d> next;
  const double apothem = a * std::sqrt(3.0) / 2;
  for (int e = 0; e < 6 && !poly.empty(); ++e) {
    const double t = e * std::numbers::pi / 3;
    const Eigen::Vector2d normal(std::cos(t), std::sin(t));
    const double limit = apothem + normal.dot(c);
    next.clear();
    for (std::size_t v = 0; v < poly.size(); ++v) {
      const Eigen::Vector2d& p = poly[v];
      const Eigen::Vector2d& q = poly[(v + 1) % poly.size()];
      const double fp = normal.dot(p) - limit;
      const double fq = normal.dot(q) - limit;
      if (fp <= 0) next.push_back(p);
      if ((fp < 0 && fq > 0) || (fp > 0 && fq < 0)) next.push_back(p + (q - p) * (fp / (fp - fq)));
    }
    poly.swap(next);
  }
  Piece out;
  if (poly.size() < 3) return out;
  double area2 = 0, mx = 0, my = 0;
  for (std::size_t v = 0; v < poly.size(); ++v) {
    const Eigen::Vector2d& p = poly[v];
    const Eigen::Vector2d& q = poly[(v + 1) % poly.size()];
    const double cross = p.x() * q.y() - q.x() * p.y();
    area2 += cross;
    mx += (p.x() + q.x()) * cross;
    my += (p.y() + q.y()) * cross;
  }
  if (area2 <= 0) return out;
  out.area = area2 / 2;
  out.cx = mx / (3 * area2);
  out.cy = my / (3 * area2);
  return out;
}

}  // namespace

CellBinner::CellBinner(const optics::Grid<double>& grid, const HexAlphabet& layout)
    : grid_(grid), cell_count_(layout.size()) {
  grid.validate();
  const double samples_across = 2 * layout.cell_radius() / grid.spacing();
  if (samples_across < kMinSamplesAcrossCell) {
    std::ostringstream msg;
    msg << "cells are under-resolved: " << samples_across << " samples across a cell of radius "
        << layout.cell_radius() << " m (need " << kMinSamplesAcrossCell << ")";
    throw ResolutionError(msg.str());
  }
  const int n = grid.n;
  const double h = grid.spacing();
  const HexLattice& lattice = layout.lattice();
  auto cell_of = [&](const Eigen::Vector2d& p) {
    const auto k = layout.find(lattice.nearest(p));
    return k ? *k : -1;
  };

  // Corner lattice cells, shared between neighbouring pixels.
  std::vector<Axial> corner((n + 1) * (n + 1));
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j)
      corner[i * (n + 1) + j] = lattice.nearest({grid.coordinate(j) - h / 2, grid.coordinate(i) - h / 2});

  whole_.assign(n * n, -1);
  pixel_cell_.assign(n * n, -1);
  constexpr std::array<Axial, 7> kNeighbourhood{
      Axial{0, 0}, Axial{1, 0}, Axial{-1, 0}, Axial{0, 1}, Axial{0, -1}, Axial{1, -1}, Axial{-1, 1}};
  std::vector<Axial> candidates;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const int pixel = i * n + j;
      const Eigen::Vector2d centre(grid.coordinate(j), grid.coordinate(i));
      pixel_cell_[pixel] = cell_of(centre);
      const Axial a = corner[i * (n + 1) + j];
      if (a == corner[i * (n + 1) + j + 1] && a == corner[(i + 1) * (n + 1) + j] &&
          a == corner[(i + 1) * (n + 1) + j + 1]) {
        const auto k = layout.find(a);
        whole_[pixel] = k ? *k : -1;
        continue;
      }
      whole_[pixel] = -2;
      candidates.clear();
      for (const int ci : {i, i + 1})
        for (const int cj : {j, j + 1}) {
          const Axial base = corner[ci * (n + 1) + cj];
          for (const Axial d : kNeighbourhood) candidates.push_back({base.q + d.q, base.r + d.r});
        }
      std::sort(candidates.begin(), candidates.end());
      candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
      for (const Axial c : candidates) {
        const auto k = layout.find(c);
        if (!k) continue;
        const auto piece = clip_pixel(lattice.center(c) - centre, layout.cell_radius(), h);
        if (piece.area > 0) partial_.push_back({pixel, *k, piece.area / (h * h), piece.cx, piece.cy});
      }
    }
  }
}

CellProbabilities CellBinner::bin(const optics::ProbabilityDensity& map) const {
  const int n = grid_.n;
  if (map.grid.n != n || std::abs(map.grid.extent - grid_.extent) > 1e-12 * grid_.extent) {
    throw std::invalid_argument("probability map grid does not match the binner grid");
  }
  const double area = grid_.cell_area();
  const double h = grid_.spacing();
  const auto& d = map.density;
  auto at = [&](int i, int j) { return d(std::clamp(i, 0, n - 1), std::clamp(j, 0, n - 1)); };
  // Pixel integral to second order: midpoint plus (h^2 / 24) times the Laplacian.
  auto curvature = [&](int i, int j) {
    return (at(i + 1, j) + at(i - 1, j) + at(i, j + 1) + at(i, j - 1) - 4 * d(i, j)) / 24;
  };
  CellProbabilities out{Eigen::VectorXd::Zero(cell_count_), 0.0};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (const int c = whole_[i * n + j]; c >= 0) out.cells[c] += (d(i, j) + curvature(i, j)) * area;

  for (const auto& p : partial_) {
    const int i = p.pixel / n;
    const int j = p.pixel % n;
    const double gx = (at(i, j + 1) - at(i, j - 1)) / (2 * h);
    const double gy = (at(i + 1, j) - at(i - 1, j)) / (2 * h);
    const double value = std::max(0.0, d(i, j) + curvature(i, j) + gx * p.dx + gy * p.dy);
    out.cells[p.cell] += value * p.fraction * area;
  }
  out.residual = std::max(0.0, map.total() - out.cells.sum());
  return out;
}

CellProbabilities bin_probabilities(const optics::ProbabilityDensity& map,
                                    const HexAlphabet& alphabet) {
  return CellBinner(map.grid, alphabet).bin(map);
}

Eigen::VectorXd gaussian_cell_probabilities(const HexAlphabet& alphabet,
                                            const Eigen::Vector2d& center, double waist) {
  static const GaussRule rule = gauss_legendre(24);
  const double a = alphabet.cell_radius();
  std::array<Eigen::Vector2d, 6> vertex;
  for (int v = 0; v < 6; ++v) {
    const double t = std::numbers::pi / 6 + v * std::numbers::pi / 3;
    vertex[v] = {a * std::cos(t), a * std::sin(t)};
  }
  const double norm = 2.0 / (std::numbers::pi * waist * waist);
  Eigen::VectorXd p(alphabet.size());
  for (int k = 0; k < alphabet.size(); ++k) {
    const Eigen::Vector2d c = alphabet.center(k) - center;
    double sum = 0;
    for (int v = 0; v < 6; ++v) {
      // Collapsed square onto the triangle (c, c + v0, c + v1).
      const Eigen::Vector2d e1 = vertex[v];
      const Eigen::Vector2d e2 = vertex[(v + 1) % 6] - vertex[v];
      const double jac = std::abs(e1.x() * e2.y() - e1.y() * e2.x());
      for (std::size_t iu = 0; iu < rule.x.size(); ++iu) {
        const double u = rule.x[iu];
        for (std::size_t iv = 0; iv < rule.x.size(); ++iv) {
          const Eigen::Vector2d pt = c + u * e1 + u * rule.x[iv] * e2;
          sum += rule.w[iu] * rule.w[iv] * u * jac * std::exp(-2 * pt.squaredNorm() / (waist * waist));
        }
      }
    }
    p[k] = norm * sum;
  }
  return p;
}

SourceDistribution::SourceDistribution(Eigen::VectorXd probabilities) : p_(std::move(probabilities)) {
  if (p_.size() == 0) throw std::invalid_argument("source distribution is empty");
  if ((p_.array() < 0).any() || !p_.allFinite()) {
    throw std::invalid_argument("source probabilities must be finite and non-negative");
  }
  if (std::abs(p_.sum() - 1) > 1e-12) throw std::invalid_argument("source probabilities must sum to 1");
}

SourceDistribution SourceDistribution::uniform(int d) {
  return SourceDistribution(Eigen::VectorXd::Constant(d, 1.0 / d));
}

double calibrated_aperture_waist(const optics::Geometry<double>& geometry, const HexAlphabet& alphabet) {
  return 2 * geometry.fourier_focal_length() / (geometry.wavenumber() * calibrate_envelope(alphabet));
}

ProbabilityMap build_probability_map(const Apparatus& apparatus, const HexAlphabet& sources,
                                     const HexAlphabet& cells, double jitter_sigma) {
  const auto& g = apparatus.geometry;
  g.validate();
  if (std::abs(sources.cell_radius() - cells.cell_radius()) > 1e-12 * cells.cell_radius()) {
    throw AlphabetError("sources and detector cells must share one lattice");
  }
  const auto image_chain = optics::configuration_chain({Basis::fourier, Basis::fourier}, g);
  const auto fourier_chain = optics::configuration_chain({Basis::imaging, Basis::fourier}, g);
  const CellBinner image(optics::output_grid<double>(g.grid, image_chain, g.wavelength), cells);
  const CellBinner fourier(optics::output_grid<double>(g.grid, fourier_chain, g.wavelength), cells);

  ProbabilityMap map{sources, cells, {}, {}, {}};
  for (int k = 0; k < sources.size(); ++k) {
    const auto c = cells.find(sources.cells()[k]);
    map.cell_of_source.push_back(c ? *c : -1);
  }
  for (const BasisConfig config : kAllConfigs) {
    Eigen::MatrixXd table(cells.size(), sources.size());
    Eigen::RowVectorXd residual(sources.size());
    const CellBinner& binner = config.matched() ? image : fourier;
    for (int k = 0; k < sources.size(); ++k) {
      const optics::ApertureSpec<double> spec{apparatus.aperture_shape, apparatus.aperture_size,
                                              sources.center(k)};
      const auto amplitude = optics::analytic_amplitude(config, spec, g);
      const auto density =
          optics::blur_intensity(optics::detection_probability_map(amplitude), jitter_sigma);
      const auto binned = binner.bin(density);
      for (int c = 0; c < cells.size(); ++c) {
        const int physical = config.bob == Basis::imaging ? cells.mirror(c) : c;
        table(c, k) = binned.cells[physical];
      }
      residual[k] = binned.residual;
    }
    map.table[config.index()] = std::move(table);
    map.residual[config.index()] = std::move(residual);
  }
  return map;
}

ProbabilityMap project_cells(const ProbabilityMap& map, const HexAlphabet& subset) {
  std::vector<int> rows;
  for (const Axial& a : subset.cells()) {
    const auto c = map.cells.find(a);
    if (!c) throw AlphabetError("projection subset is not contained in the detector layout");
    rows.push_back(*c);
  }
  ProbabilityMap out{map.sources, subset, {}, {}, {}};
  for (int k = 0; k < map.sources.size(); ++k) {
    const auto c = subset.find(map.sources.cells()[k]);
    out.cell_of_source.push_back(c ? *c : -1);
  }
  for (int idx = 0; idx < 4; ++idx) {
    Eigen::MatrixXd t(rows.size(), map.sources.size());
    for (std::size_t r = 0; r < rows.size(); ++r) t.row(r) = map.table[idx].row(rows[r]);
    out.residual[idx] = (Eigen::RowVectorXd::Ones(t.cols()) - t.colwise().sum()).cwiseMax(0.0);
    out.table[idx] = std::move(t);
  }
  return out;
}

SourceDistribution source_from_conjugate(const ProbabilityMap& map) {
  const int d = map.sources.size();
  Eigen::VectorXd p(d);
  const auto& if_table = map[{Basis::imaging, Basis::fourier}];
  const auto& fi_table = map[{Basis::fourier, Basis::imaging}];
  for (int k = 0; k < d; ++k) {
    const int c = map.cell_of_source[k];
    if (c < 0) throw AlphabetError("character " + map.sources.label(k) + " has no detector cell");
    p[k] = 0.5 * (if_table.row(c).mean() + fi_table.row(c).mean());
  }
  if (!(p.sum() > 0)) throw AlphabetError("no conjugate-basis probability falls on the alphabet");
  return SourceDistribution(p / p.sum());
}

namespace {

struct Evidence {
  double conjugate;
  double matched;
};

Evidence evidence(const ProbabilityMap& map, int cell, Basis measurer) {
  return {map[{other_basis(measurer), measurer}].row(cell).maxCoeff(),
          map[{measurer, measurer}].row(cell).maxCoeff()};
}

}  // namespace

std::vector<LeakageFinding> leakage_check(const ProbabilityMap& map, double eps) {
  std::vector<LeakageFinding> out;
  for (int c = 0; c < map.cells.size(); ++c) {
    for (const Basis measurer : {Basis::imaging, Basis::fourier}) {
      const auto e = evidence(map, c, measurer);
      if (e.conjugate >= eps && e.matched < eps) {
        out.push_back({c, map.cells.label(c), measurer, e.conjugate, e.matched});
      }
    }
  }
  return out;
}

std::set<std::string> basis_revealing_characters(const ProbabilityMap& map, double eps) {
  std::set<std::string> out;
  for (int k = 0; k < map.sources.size(); ++k) {
    const int c = map.cell_of_source[k];
    if (c < 0) continue;
    for (const Basis measurer : {Basis::imaging, Basis::fourier}) {
      const auto e = evidence(map, c, measurer);
      if (e.matched >= eps && e.conjugate < eps) out.insert(map.sources.label(k));
    }
  }
  return out;
}

}  // namespace sqkd
