#include <doctest.h>

#include <random>
#include <sstream>

#include "pointwavelet/errors.hpp"
#include "pointwavelet/formats.hpp"
#include "support.hpp"

using namespace pw;

TEST_CASE("CSV round trip is bit exact") {
  std::mt19937_64 rng(1);
  Eigen::MatrixXd m = oracle::random_matrix(7, 3, rng) * 1e-3;
  m(0, 0) = 1.0 / 3.0;
  std::stringstream buf;
  write_csv(buf, {"a", "b", "c"}, m);
  auto table = parse_csv(buf);
  CHECK(table.header == std::vector<std::string>{"a", "b", "c"});
  CHECK((table.values.array() == m.array()).all());
}

TEST_CASE("CSV without a header and with bad rows") {
  std::istringstream plain("1,2\n3,4\n");
  auto t = parse_csv(plain);
  CHECK(t.header.empty());
  CHECK(t.values.rows() == 2);
  CHECK(t.values(1, 0) == 3.0);
  std::istringstream ragged("x,y\n1,2\n3\n");
  try {
    parse_csv(ragged);
    FAIL("expected an error");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  std::istringstream text("x\n1\nfoo\n");
  CHECK_THROWS_AS(parse_csv(text), InputError);
}

TEST_CASE("graph JSON round trip") {
  Points p = oracle::random_points(12, 2);
  GraphDocument doc{build_knn_graph(p, 3), 3, 0.25, p};
  auto back = graph_from_json(graph_to_json(doc));
  CHECK((back.graph.adjacency.array() == doc.graph.adjacency.array()).all());
  CHECK((back.graph.laplacian - doc.graph.laplacian).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.k == 3);
  CHECK(back.sigma == 0.25);
  REQUIRE(back.points.has_value());
  CHECK((back.points->array() == p.array()).all());
}

TEST_CASE("graph JSON validation") {
  CHECK_THROWS_AS(graph_from_json("{\"n\": 2, \"edges\": [[0, 2, 1.0]]}"), InputError);
  CHECK_THROWS_AS(graph_from_json("{\"n\": 2, \"edges\": [[0, 1, -1.0]]}"), InputError);
  CHECK_THROWS_AS(graph_from_json("not json"), InputError);
  auto minimal = graph_from_json("{\"n\": 2, \"edges\": [[0, 1, 0.5]]}");
  CHECK(minimal.graph.adjacency(1, 0) == 0.5);
  CHECK_FALSE(minimal.k.has_value());
}

TEST_CASE("basis binary round trip and header checks") {
  auto g = build_knn_graph(oracle::random_points(9, 3), 3);
  auto b = eigendecompose(g.laplacian);
  b.source = BasisSource::learned;
  std::stringstream buf;
  write_basis(buf, b);
  CHECK(buf.str().size() == 4 + 4 + 1 + 8 + 8 * (9 + 81));
  CHECK(buf.str().substr(0, 4) == "PWBS");
  auto back = read_basis(buf);
  CHECK(back.source == BasisSource::learned);
  CHECK((back.eigenvalues.array() == b.eigenvalues.array()).all());
  CHECK((back.eigenvectors.array() == b.eigenvectors.array()).all());

  std::istringstream bad("PWXX");
  CHECK_THROWS_AS(read_basis(bad), InputError);
  std::string truncated = buf.str().substr(0, 30);
  std::istringstream cut(truncated);
  CHECK_THROWS_AS(read_basis(cut), InputError);
}

TEST_CASE("little-endian scalar helpers") {
  std::stringstream buf;
  binary::put_u32(buf, 0x01020304u);
  CHECK(buf.str() == std::string("\x04\x03\x02\x01", 4));
  binary::put_f64(buf, -2.5);
  binary::get_u32(buf);
  CHECK(binary::get_f64(buf) == -2.5);
}
