#include <doctest.h>

#include <cmath>
#include <random>

#include "hargnn/error.hpp"
#include "hargnn/graph.hpp"
#include "support.hpp"

using namespace hargnn;

TEST_CASE("path adjacency joins consecutive timestamps") {
  const auto a = path_adjacency(4);
  const std::vector<std::uint8_t> expected{0, 1, 0, 0, 1, 0, 1, 0, 0, 1, 0, 1, 0, 0, 1, 0};
  CHECK(a == expected);
}

TEST_CASE("normalized adjacency with self loops, 3 nodes") {
  const auto a = path_adjacency(3);
  const Tensor n = normalize_adjacency(a, 3, true);
  // degrees of A + I are 2, 3, 2
  CHECK(n.at({0, 0}) == doctest::Approx(0.5));
  CHECK(n.at({0, 1}) == doctest::Approx(1.0 / std::sqrt(6.0)));
  CHECK(n.at({1, 1}) == doctest::Approx(1.0 / 3.0));
  CHECK(n.at({0, 2}) == 0.0);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(n.at({i, j}) == n.at({j, i}));
}

TEST_CASE("normalized adjacency without self loops") {
  const auto a = path_adjacency(3);
  const Tensor n = normalize_adjacency(a, 3, false);
  CHECK(n.at({0, 0}) == 0.0);
  CHECK(n.at({0, 1}) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(n.at({1, 2}) == doctest::Approx(1.0 / std::sqrt(2.0)));
}

TEST_CASE("normalize_adjacency rejects bad input and zeroes isolated nodes") {
  const std::vector<std::uint8_t> asym{0, 1, 0, 0};
  CHECK_THROWS_AS(normalize_adjacency(asym, 2), DataError);
  const std::vector<std::uint8_t> weighted{0, 2, 2, 0};
  CHECK_THROWS_AS(normalize_adjacency(weighted, 2), DataError);
  const std::vector<std::uint8_t> isolated{0, 0, 0, 0};
  const Tensor n = normalize_adjacency(isolated, 2, false);
  for (double v : n.data()) CHECK(v == 0.0);
}

TEST_CASE("build_path_graph splits features per sensor") {
  const std::size_t t = 5;
  const auto layout = test_support::layout_for({3, 2});
  std::vector<double> seg(5 * t);
  for (std::size_t c = 0; c < 5; ++c)
    for (std::size_t k = 0; k < t; ++k) seg[c * t + k] = 10.0 * c + k;
  const auto g = build_path_graph(seg, t, layout, 2);
  CHECK(g.n_nodes == t);
  CHECK(g.edge_count() == t - 1);
  CHECK(g.degree(0) == 1);
  CHECK(g.degree(2) == 2);
  REQUIRE(g.sensor_features.size() == 2);
  CHECK(g.sensor_features[0].shape() == Shape{t, 3});
  CHECK(g.sensor_features[1].shape() == Shape{t, 2});
  // H[k, c] = segment[c, k]
  CHECK(g.sensor_features[0].at({4, 2}) == 24.0);
  CHECK(g.sensor_features[1].at({1, 0}) == 31.0);
  CHECK(g.label == 2);

  CHECK_THROWS_AS(build_path_graph(std::vector<double>(5), 1, layout, 0), ShapeError);
}

TEST_CASE("graph_batch stacks graphs and rejects mixed sizes") {
  std::mt19937_64 rng(2);
  const auto set = test_support::random_segments(3, 6, {3, 3}, 2, rng);
  std::vector<ActivityGraph> graphs;
  for (std::size_t i = 0; i < 3; ++i)
    graphs.push_back(build_path_graph(set.segment(i), 6, set.layout, set.labels[i]));
  const auto batch = graph_batch(graphs);
  CHECK(batch.batch == 3);
  CHECK(batch.nodes == 6);
  CHECK(batch.features.shape() == Shape{3, 6, 6});
  CHECK(batch.sensor_features[1].shape() == Shape{3, 6, 3});
  CHECK(batch.labels == set.labels);

  const std::vector<std::size_t> idx{0, 1, 2};
  const auto direct = batch_from_segments(set, idx, true);
  CHECK(direct.features.data().size() == batch.features.data().size());
  CHECK(test_support::max_abs_diff(direct.features.data(), batch.features.data()) == 0.0);
  CHECK(test_support::max_abs_diff(direct.norm_adjacency.data(), batch.norm_adjacency.data()) == 0.0);

  auto other = test_support::random_segments(1, 7, {3, 3}, 2, rng);
  graphs.push_back(build_path_graph(other.segment(0), 7, other.layout, 0));
  CHECK_THROWS_AS(graph_batch(graphs), ShapeError);
}

TEST_CASE("neighbour mask is A + I") {
  std::mt19937_64 rng(1);
  const auto set = test_support::random_segments(1, 4, {3}, 2, rng);
  const std::vector<std::size_t> idx{0};
  const auto batch = batch_from_segments(set, idx, false);
  const std::vector<std::uint8_t> expected{1, 1, 0, 0, 1, 1, 1, 0, 0, 1, 1, 1, 0, 0, 1, 1};
  CHECK(batch.neighbours == expected);
}

TEST_CASE("graph_to_json lists nodes and edges") {
  const std::size_t t = 4;
  const auto layout = test_support::layout_for({2});
  const std::vector<double> seg{1, 2, 3, 4, 5, 6, 7, 8};
  const auto g = build_path_graph(seg, t, layout, 1, true, {3, 1, 48});
  const auto j = graph_to_json(g, {"sit", "walk"});
  CHECK(j["class_name"] == "walk");
  CHECK(j["nodes"].size() == t);
  CHECK(j["edges"].size() == t - 1);
  CHECK(j["provenance"]["subject_id"] == 3);
  CHECK(j["nodes"][2]["features"][1] == 7.0);
}
