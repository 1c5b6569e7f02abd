#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace pw {

using Points = Eigen::Matrix<double, Eigen::Dynamic, 3>;

struct PointCloud {
  Points positions;          // n x 3
  Eigen::MatrixXd features;  // n x c, c == 0 when absent
  std::optional<int> label;

  std::size_t size() const { return static_cast<std::size_t>(positions.rows()); }
};

enum class ShapeFamily { sphere = 0, cube = 1, torus = 2 };

struct ShapeSpec {
  ShapeFamily family = ShapeFamily::sphere;
  std::size_t n_points = 256;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

const char* to_string(ShapeFamily family);
ShapeFamily shape_family_from_string(const std::string& name);

// XYZ text: one "x y z" triple per non-empty line.
PointCloud parse_xyz(std::istream& in);
PointCloud load_xyz(const std::filesystem::path& path);
void write_xyz(std::ostream& out, const PointCloud& pc);
void save_xyz(const std::filesystem::path& path, const PointCloud& pc);

struct TriangleMesh {
  Points vertices;
  std::vector<std::array<std::size_t, 3>> faces;
};

TriangleMesh parse_off(std::istream& in);
// Area-weighted uniform sampling of the mesh surface; deterministic per seed.
PointCloud sample_mesh(const TriangleMesh& mesh, std::size_t n_samples, std::uint64_t seed);
PointCloud load_off(const std::filesystem::path& path, std::size_t n_samples, std::uint64_t seed);

// Centroid to the origin, max radius to 1. Throws MathError when every point coincides.
PointCloud normalize_unit_sphere(PointCloud pc);

// Raw surface samples before noise and normalization: unit sphere, cube of
// half-side 1, torus with R = 1 and r = 0.4 around the z axis.
Points sample_shape_surface(ShapeFamily family, std::size_t n, std::uint64_t seed);

// Surface samples plus isotropic Gaussian noise, normalized; label = family index.
PointCloud synth_shape(const ShapeSpec& spec);

struct LabeledSplit {
  std::vector<PointCloud> train;
  std::vector<PointCloud> test;
};

// Balanced sphere/cube/torus dataset with per-sample seeds derived from `seed`.
LabeledSplit synth_dataset(std::size_t train_per_class, std::size_t test_per_class,
                           std::size_t n_points, double noise_sigma, std::uint64_t seed,
                           std::size_t n_classes = 3);

}  // namespace pw
