#include "pointwavelet/formats.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "pointwavelet/errors.hpp"

namespace pw {

namespace {

std::ofstream open_out(const std::filesystem::path& path, bool binary_mode = false) {
  std::ofstream out(path, binary_mode ? std::ios::binary : std::ios::out);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path, bool binary_mode = false) {
  std::ifstream in(path, binary_mode ? std::ios::binary : std::ios::in);
  if (!in) throw InputError("cannot open " + path.string());
  return in;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::optional<double> to_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = s.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace

void write_csv(std::ostream& out, const std::vector<std::string>& header, const Eigen::MatrixXd& values) {
  if (!header.empty() && header.size() != static_cast<std::size_t>(values.cols()))
    throw InputError("csv header has " + std::to_string(header.size()) + " columns, data has " +
                     std::to_string(values.cols()));
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  if (!header.empty()) out << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) out << (c ? "," : "") << values(r, c);
    out << '\n';
  }
}

void save_csv(const std::filesystem::path& path, const std::vector<std::string>& header, const Eigen::MatrixXd& values) {
  auto out = open_out(path);
  write_csv(out, header, values);
}

CsvTable parse_csv(std::istream& in) {
  CsvTable table;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = split_fields(line);
    std::vector<double> row;
    bool numeric = true;
    for (const auto& f : fields) {
      auto v = to_number(f);
      if (!v) {
        numeric = false;
        break;
      }
      row.push_back(*v);
    }
    if (!numeric) {
      if (rows.empty() && table.header.empty()) {
        table.header = fields;
        continue;
      }
      throw InputError("csv line " + std::to_string(line_no) + ": non-numeric field");
    }
    const std::size_t width = table.header.empty() ? (rows.empty() ? row.size() : rows.front().size()) : table.header.size();
    if (row.size() != width)
      throw InputError("csv line " + std::to_string(line_no) + ": expected " + std::to_string(width) + " fields, got " +
                       std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError("csv contains no data rows");
  table.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return table;
}

CsvTable load_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return parse_csv(in);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

std::string graph_to_json(const GraphDocument& doc) {
  using nlohmann::json;
  const auto& a = doc.graph.adjacency;
  const Eigen::Index n = a.rows();
  json j;
  j["n"] = n;
  if (doc.k) j["k"] = *doc.k;
  if (doc.sigma) j["sigma"] = *doc.sigma;
  if (doc.points) {
    json pts = json::array();
    for (Eigen::Index i = 0; i < doc.points->rows(); ++i)
      pts.push_back({(*doc.points)(i, 0), (*doc.points)(i, 1), (*doc.points)(i, 2)});
    j["points"] = pts;
  }
  json edges = json::array();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = i + 1; k < n; ++k)
      if (a(i, k) != 0.0) edges.push_back({i, k, a(i, k)});
  j["edges"] = edges;
  j["degree"] = std::vector<double>(doc.graph.degree.data(), doc.graph.degree.data() + doc.graph.degree.size());
  return j.dump(1);
}

GraphDocument graph_from_json(const std::string& text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string("graph json: ") + e.what());
  }
  try {
    const auto n = j.at("n").get<std::int64_t>();
    if (n < 1) throw InputError("graph json: n must be positive");
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 3) throw InputError("graph json: each edge must be [i, j, w]");
      const auto i = e[0].get<std::int64_t>();
      const auto k = e[1].get<std::int64_t>();
      const double w = e[2].get<double>();
      if (i < 0 || k < 0 || i >= n || k >= n) throw InputError("graph json: edge index out of range");
      if (i == k) throw InputError("graph json: self-loop at vertex " + std::to_string(i));
      a(i, k) = w;
      a(k, i) = w;
    }
    GraphDocument doc{graph_from_adjacency(std::move(a)), std::nullopt, std::nullopt, std::nullopt};
    if (j.contains("k")) doc.k = j["k"].get<std::size_t>();
    if (j.contains("sigma")) doc.sigma = j["sigma"].get<double>();
    if (j.contains("points")) {
      const auto& pts = j["points"];
      if (static_cast<std::int64_t>(pts.size()) != n) throw InputError("graph json: points count differs from n");
      Points p(n, 3);
      for (std::int64_t i = 0; i < n; ++i)
        for (int c = 0; c < 3; ++c) p(i, c) = pts[static_cast<std::size_t>(i)].at(static_cast<std::size_t>(c)).get<double>();
      doc.points = std::move(p);
    }
    return doc;
  } catch (const json::exception& e) {
    throw InputError(std::string("graph json: ") + e.what());
  }
}

void save_graph(const std::filesystem::path& path, const GraphDocument& doc) {
  auto out = open_out(path);
  out << graph_to_json(doc) << '\n';
}

GraphDocument load_graph(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return graph_from_json(ss.str());
}

namespace binary {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace {
template <class T>
void put(std::ostream& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.write(buf, sizeof(T));
}
template <class T>
T get(std::istream& in) {
  char buf[sizeof(T)];
  if (!in.read(buf, sizeof(T))) throw InputError("binary file truncated");
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}
}  // namespace

void put_u8(std::ostream& out, std::uint8_t v) { put(out, v); }
void put_u32(std::ostream& out, std::uint32_t v) { put(out, v); }
void put_u64(std::ostream& out, std::uint64_t v) { put(out, v); }
void put_f64(std::ostream& out, double v) { put(out, v); }
std::uint8_t get_u8(std::istream& in) { return get<std::uint8_t>(in); }
std::uint32_t get_u32(std::istream& in) { return get<std::uint32_t>(in); }
std::uint64_t get_u64(std::istream& in) { return get<std::uint64_t>(in); }
double get_f64(std::istream& in) { return get<double>(in); }
void put_bytes(std::ostream& out, const std::string& bytes) { out.write(bytes.data(), static_cast<std::streamsize>(bytes.size())); }
std::string get_bytes(std::istream& in, std::size_t count) {
  std::string s(count, '\0');
  if (count && !in.read(s.data(), static_cast<std::streamsize>(count))) throw InputError("binary file truncated");
  return s;
}

}  // namespace binary

void write_basis(std::ostream& out, const SpectralBasis& basis) {
  const auto n = static_cast<std::uint64_t>(basis.size());
  binary::put_bytes(out, "PWBS");
  binary::put_u32(out, 1);
  binary::put_u8(out, basis.source == BasisSource::learned ? 1 : 0);
  binary::put_u64(out, n);
  for (Eigen::Index i = 0; i < basis.eigenvalues.size(); ++i) binary::put_f64(out, basis.eigenvalues(i));
  for (Eigen::Index r = 0; r < basis.eigenvectors.rows(); ++r)
    for (Eigen::Index c = 0; c < basis.eigenvectors.cols(); ++c) binary::put_f64(out, basis.eigenvectors(r, c));
}

SpectralBasis read_basis(std::istream& in) {
  if (binary::get_bytes(in, 4) != "PWBS") throw InputError("not a basis file (bad magic)");
  const auto version = binary::get_u32(in);
  if (version != 1) throw InputError("unsupported basis file version " + std::to_string(version));
  const auto source = binary::get_u8(in);
  if (source > 1) throw InputError("basis file: unknown source tag");
  const auto n = binary::get_u64(in);
  if (n == 0 || n > 65536) throw InputError("basis file: implausible dimension " + std::to_string(n));
  SpectralBasis b;
  b.source = source ? BasisSource::learned : BasisSource::computed;
  const auto m = static_cast<Eigen::Index>(n);
  b.eigenvalues.resize(m);
  b.eigenvectors.resize(m, m);
  for (Eigen::Index i = 0; i < m; ++i) b.eigenvalues(i) = binary::get_f64(in);
  for (Eigen::Index r = 0; r < m; ++r)
    for (Eigen::Index c = 0; c < m; ++c) b.eigenvectors(r, c) = binary::get_f64(in);
  return b;
}

void save_basis(const std::filesystem::path& path, const SpectralBasis& basis) {
  auto out = open_out(path, true);
  write_basis(out, basis);
}

SpectralBasis load_basis(const std::filesystem::path& path) {
  auto in = open_in(path, true);
  return read_basis(in);
}

}  // namespace pw
