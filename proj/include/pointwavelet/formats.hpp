#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pointwavelet/graph.hpp"
#include "pointwavelet/pointcloud.hpp"

namespace pw {

// Comma-separated matrix with one header row. Values are written with
// max_digits10 so a read-back is bit exact.
void write_csv(std::ostream& out, const std::vector<std::string>& header, const Eigen::MatrixXd& values);
void save_csv(const std::filesystem::path& path, const std::vector<std::string>& header, const Eigen::MatrixXd& values);

struct CsvTable {
  std::vector<std::string> header;  // empty when the first line is numeric
  Eigen::MatrixXd values;
};
CsvTable parse_csv(std::istream& in);
CsvTable load_csv(const std::filesystem::path& path);

// Graph interchange: {"n", "k", "sigma", "points", "edges": [[i, j, w], ...], "degree"}.
// Each undirected edge appears once with i < j.
struct GraphDocument {
  LocalGraph graph;
  std::optional<std::size_t> k;
  std::optional<double> sigma;
  std::optional<Points> points;
};
std::string graph_to_json(const GraphDocument& doc);
GraphDocument graph_from_json(const std::string& text);
void save_graph(const std::filesystem::path& path, const GraphDocument& doc);
GraphDocument load_graph(const std::filesystem::path& path);

// Basis binary, little-endian:
//   "PWBS" | u32 version = 1 | u8 source (0 computed, 1 learned) | u64 n |
//   n f64 eigenvalues | n*n f64 eigenvectors, row-major.
void write_basis(std::ostream& out, const SpectralBasis& basis);
SpectralBasis read_basis(std::istream& in);
void save_basis(const std::filesystem::path& path, const SpectralBasis& basis);
SpectralBasis load_basis(const std::filesystem::path& path);

// Little-endian scalar helpers shared by the binary formats.
namespace binary {
void put_u8(std::ostream& out, std::uint8_t v);
void put_u32(std::ostream& out, std::uint32_t v);
void put_u64(std::ostream& out, std::uint64_t v);
void put_f64(std::ostream& out, double v);
std::uint8_t get_u8(std::istream& in);
std::uint32_t get_u32(std::istream& in);
std::uint64_t get_u64(std::istream& in);
double get_f64(std::istream& in);
void put_bytes(std::ostream& out, const std::string& bytes);
std::string get_bytes(std::istream& in, std::size_t count);
}  // namespace binary

}  // namespace pw
