#include "pointwavelet/pointcloud.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Geometry>

#include "pointwavelet/errors.hpp"

namespace pw {

namespace {

bool is_blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(), [](unsigned char ch) { return std::isspace(ch); });
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return in;
}

// Next line that is neither blank nor a '#' comment.
bool next_content_line(std::istream& in, std::string& line, std::size_t& line_no) {
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (!is_blank(line)) return true;
  }
  return false;
}

}  // namespace

const char* to_string(ShapeFamily family) {
  switch (family) {
    case ShapeFamily::sphere: return "sphere";
    case ShapeFamily::cube: return "cube";
    case ShapeFamily::torus: return "torus";
  }
  return "unknown";
}

ShapeFamily shape_family_from_string(const std::string& name) {
  if (name == "sphere") return ShapeFamily::sphere;
  if (name == "cube") return ShapeFamily::cube;
  if (name == "torus") return ShapeFamily::torus;
  throw InputError("unknown shape family '" + name + "'");
}

PointCloud parse_xyz(std::istream& in) {
  std::vector<Eigen::Vector3d> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    std::istringstream ls(line);
    Eigen::Vector3d p;
    std::string extra;
    if (!(ls >> p.x() >> p.y() >> p.z()) || (ls >> extra)) {
      throw InputError("xyz parse error at line " + std::to_string(line_no) +
                       ": expected three numbers");
    }
    if (!p.allFinite()) {
      throw InputError("xyz parse error at line " + std::to_string(line_no) + ": non-finite value");
    }
    rows.push_back(p);
  }
  if (rows.empty()) throw InputError("xyz input is empty");
  PointCloud pc;
  pc.positions.resize(static_cast<Eigen::Index>(rows.size()), 3);
  for (std::size_t i = 0; i < rows.size(); ++i) pc.positions.row(static_cast<Eigen::Index>(i)) = rows[i];
  return pc;
}

PointCloud load_xyz(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return parse_xyz(in);
}

void write_xyz(std::ostream& out, const PointCloud& pc) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Eigen::Index i = 0; i < pc.positions.rows(); ++i) {
    out << pc.positions(i, 0) << ' ' << pc.positions(i, 1) << ' ' << pc.positions(i, 2) << '\n';
  }
}

void save_xyz(const std::filesystem::path& path, const PointCloud& pc) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  write_xyz(out, pc);
}

TriangleMesh parse_off(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!next_content_line(in, line, line_no)) throw InputError("OFF input is empty");
  std::istringstream header(line);
  std::string magic;
  header >> magic;
  if (magic != "OFF") throw InputError("missing OFF header at line " + std::to_string(line_no));

  // Counts may follow the magic on the same line.
  std::string rest;
  std::getline(header, rest);
  if (is_blank(rest)) {
    if (!next_content_line(in, line, line_no)) throw InputError("OFF counts line missing");
    rest = line;
  }
  std::istringstream counts(rest);
  long long nv = -1, nf = -1;
  if (!(counts >> nv >> nf) || nv < 0 || nf < 0) {
    throw InputError("bad OFF counts at line " + std::to_string(line_no));
  }

  TriangleMesh mesh;
  mesh.vertices.resize(nv, 3);
  for (long long v = 0; v < nv; ++v) {
    if (!next_content_line(in, line, line_no)) throw InputError("OFF truncated in vertex list");
    std::istringstream ls(line);
    double x, y, z;
    if (!(ls >> x >> y >> z)) throw InputError("bad OFF vertex at line " + std::to_string(line_no));
    mesh.vertices.row(v) << x, y, z;
  }
  mesh.faces.reserve(static_cast<std::size_t>(nf));
  for (long long f = 0; f < nf; ++f) {
    if (!next_content_line(in, line, line_no)) throw InputError("OFF truncated in face list");
    std::istringstream ls(line);
    long long arity = 0;
    if (!(ls >> arity)) throw InputError("bad OFF face at line " + std::to_string(line_no));
    if (arity != 3) {
      throw InputError("non-triangle face (" + std::to_string(arity) + " vertices) at line " +
                       std::to_string(line_no));
    }
    std::array<std::size_t, 3> tri{};
    for (auto& idx : tri) {
      long long raw = -1;
      if (!(ls >> raw)) throw InputError("bad OFF face at line " + std::to_string(line_no));
      if (raw < 0 || raw >= nv) {
        throw InputError("vertex index " + std::to_string(raw) + " out of range at line " +
                         std::to_string(line_no));
      }
      idx = static_cast<std::size_t>(raw);
    }
    mesh.faces.push_back(tri);
  }
  return mesh;
}

PointCloud sample_mesh(const TriangleMesh& mesh, std::size_t n_samples, std::uint64_t seed) {
  if (mesh.faces.empty()) throw InputError("mesh has no faces");
  if (n_samples == 0) throw InputError("n_samples must be positive");
  std::vector<double> cumulative(mesh.faces.size());
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto& [a, b, c] = mesh.faces[f];
    Eigen::Vector3d pa = mesh.vertices.row(static_cast<Eigen::Index>(a));
    Eigen::Vector3d pb = mesh.vertices.row(static_cast<Eigen::Index>(b));
    Eigen::Vector3d pc = mesh.vertices.row(static_cast<Eigen::Index>(c));
    total += 0.5 * (pb - pa).cross(pc - pa).norm();
    cumulative[f] = total;
  }
  if (!(total > 0.0)) throw MathError("mesh has zero surface area");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  PointCloud pc;
  pc.positions.resize(static_cast<Eigen::Index>(n_samples), 3);
  for (std::size_t s = 0; s < n_samples; ++s) {
    double pick = unit(rng) * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
    std::size_t f = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()),
                                          mesh.faces.size() - 1);
    // Zero-area faces share their cumulative value with the previous face
    // and upper_bound never lands on them.
    const auto& [a, b, c] = mesh.faces[f];
    double r1 = std::sqrt(unit(rng));
    double r2 = unit(rng);
    Eigen::Vector3d p = (1.0 - r1) * mesh.vertices.row(static_cast<Eigen::Index>(a)).transpose() +
                        r1 * (1.0 - r2) * mesh.vertices.row(static_cast<Eigen::Index>(b)).transpose() +
                        r1 * r2 * mesh.vertices.row(static_cast<Eigen::Index>(c)).transpose();
    pc.positions.row(static_cast<Eigen::Index>(s)) = p;
  }
  return pc;
}

PointCloud load_off(const std::filesystem::path& path, std::size_t n_samples, std::uint64_t seed) {
  auto in = open_or_throw(path);
  return sample_mesh(parse_off(in), n_samples, seed);
}

PointCloud normalize_unit_sphere(PointCloud pc) {
  if (pc.positions.rows() == 0) throw InputError("cannot normalize an empty point cloud");
  Eigen::RowVector3d centroid = pc.positions.colwise().mean();
  pc.positions.rowwise() -= centroid;
  double radius = pc.positions.rowwise().norm().maxCoeff();
  if (!(radius > 0.0)) throw MathError("all points coincide; normalization scale is zero");
  pc.positions /= radius;
  return pc;
}

Points sample_shape_surface(ShapeFamily family, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Points out(static_cast<Eigen::Index>(n), 3);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    switch (family) {
      case ShapeFamily::sphere: {
        // Marsaglia: uniform on S^2 from a point in the unit disk.
        double u, v, s;
        do {
          u = sym(rng);
          v = sym(rng);
          s = u * u + v * v;
        } while (s >= 1.0);
        double root = 2.0 * std::sqrt(1.0 - s);
        out.row(i) << u * root, v * root, 1.0 - 2.0 * s;
        break;
      }
      case ShapeFamily::cube: {
        // Six faces of equal area; pick one uniformly, then a uniform point on it.
        int face = static_cast<int>(unit(rng) * 6.0);
        if (face > 5) face = 5;
        int axis = face / 2;
        double side = (face % 2 == 0) ? -1.0 : 1.0;
        double a = sym(rng);
        double b = sym(rng);
        Eigen::RowVector3d p;
        p(axis) = side;
        p((axis + 1) % 3) = a;
        p((axis + 2) % 3) = b;
        out.row(i) = p;
        break;
      }
      case ShapeFamily::torus: {
        constexpr double major = 1.0;
        constexpr double minor = 0.4;
        constexpr double two_pi = 6.283185307179586;
        double theta, phi;
        // Accept with probability proportional to the area element R + r cos(phi).
        do {
          theta = two_pi * unit(rng);
          phi = two_pi * unit(rng);
        } while (unit(rng) * (major + minor) > major + minor * std::cos(phi));
        double ring = major + minor * std::cos(phi);
        out.row(i) << ring * std::cos(theta), ring * std::sin(theta), minor * std::sin(phi);
        break;
      }
    }
  }
  return out;
}

PointCloud synth_shape(const ShapeSpec& spec) {
  if (spec.n_points < 8) throw InputError("synthetic shapes need at least 8 points");
  if (!(spec.noise_sigma >= 0.0)) throw InputError("noise_sigma must be nonnegative");
  PointCloud pc;
  pc.positions = sample_shape_surface(spec.family, spec.n_points, spec.seed);
  if (spec.noise_sigma > 0.0) {
    // Separate stream so the noise-free surface is shared across noise levels.
    std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> noise(0.0, spec.noise_sigma);
    for (Eigen::Index i = 0; i < pc.positions.rows(); ++i)
      for (int d = 0; d < 3; ++d) pc.positions(i, d) += noise(rng);
  }
  pc = normalize_unit_sphere(std::move(pc));
  pc.label = static_cast<int>(spec.family);
  return pc;
}

LabeledSplit synth_dataset(std::size_t train_per_class, std::size_t test_per_class,
                           std::size_t n_points, double noise_sigma, std::uint64_t seed,
                           std::size_t n_classes) {
  if (n_classes < 2 || n_classes > 3) throw InputError("synthetic dataset supports 2 or 3 classes");
  LabeledSplit split;
  std::mt19937_64 seeder(seed);
  auto make = [&](std::size_t count, std::vector<PointCloud>& dst) {
    for (std::size_t i = 0; i < count; ++i) {
      for (std::size_t c = 0; c < n_classes; ++c) {
        ShapeSpec spec{static_cast<ShapeFamily>(c), n_points, noise_sigma, seeder()};
        dst.push_back(synth_shape(spec));
      }
    }
  };
  make(train_per_class, split.train);
  make(test_per_class, split.test);
  return split;
}

}  // namespace pw
