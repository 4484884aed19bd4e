#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "loadshape/dataset.hpp"
#include "loadshape/distance.hpp"
#include "loadshape/engines.hpp"
#include "loadshape/errors.hpp"

using namespace loadshape;

namespace {

// Two tight blobs separated by 10 in both coordinates.
ProfileSet two_blobs() {
  return make_profile_set(
      {{0.0, 0.0}, {0.1, 0.0}, {10.0, 10.0}, {10.1, 10.0}});
}

std::vector<std::size_t> assignment(const ProfileSet& data,
                                    const ClusterLibrary& lib) {
  std::vector<std::size_t> owner(data.size(), 0);
  for (std::size_t c = 0; c < lib.size(); ++c)
    for (std::size_t m : lib.clusters[c].members) owner[m] = c;
  return owner;
}

ProfileSet synthetic(std::size_t g, std::size_t n, std::uint64_t seed) {
  ArchetypeSpec spec;
  spec.curves = make_archetypes(g, 24);
  spec.jitter = 1;
  spec.scale_min = 0.9;
  spec.scale_max = 1.1;
  spec.noise_sigma = 0.05;
  return synth_generate(spec, n, seed).set;
}

}  // namespace

TEST_CASE("engine names round-trip") {
  CHECK(parse_engine("kmeans") == Engine::kmeans);
  CHECK(parse_engine("som") == Engine::som);
  CHECK(parse_engine("hierarchical") == Engine::hierarchical);
  CHECK(engine_name(Engine::som) == "som");
  CHECK_THROWS_AS(parse_engine("dbscan"), std::invalid_argument);
}

TEST_CASE("kmeans with k=1 returns the samplewise mean") {
  ProfileSet data = make_profile_set({{0.0, 4.0}, {2.0, 0.0}, {4.0, 2.0}});
  ClusterLibrary lib = kmeans(data, 1, 0);
  REQUIRE(lib.size() == 1);
  CHECK(lib.clusters[0].members == std::vector<std::size_t>{0, 1, 2});
  CHECK(lib.clusters[0].centroid[0] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(lib.clusters[0].centroid[1] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(lib.clusters[0].frequency == 1.0);
}

TEST_CASE("kmeans splits two separated blobs exactly") {
  ProfileSet data = two_blobs();
  for (std::uint64_t seed : {0, 1, 2, 3, 4}) {
    ClusterLibrary lib = kmeans(data, 2, seed);
    lib.validate(data);
    auto owner = assignment(data, lib);
    CHECK(owner[0] == owner[1]);
    CHECK(owner[2] == owner[3]);
    CHECK(owner[0] != owner[2]);
  }
}

TEST_CASE("kmeans with k=N yields singletons with zero spread") {
  ProfileSet data = two_blobs();
  ClusterLibrary lib = kmeans(data, 4, 1);
  REQUIRE(lib.size() == 4);
  for (const auto& c : lib.clusters) {
    REQUIRE(c.members.size() == 1);
    CHECK(c.centroid == data.samples(c.members[0]));
  }
}

TEST_CASE("kmeans bounds") {
  ProfileSet data = two_blobs();
  CHECK_THROWS_AS(kmeans(data, 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(kmeans(data, 5, 0), std::invalid_argument);
}

TEST_CASE("kmeans is deterministic per seed") {
  ProfileSet data = synthetic(4, 300, 21);
  ClusterLibrary a = kmeans(data, 6, 33);
  ClusterLibrary b = kmeans(data, 6, 33);
  REQUIRE(a.size() == b.size());
  for (std::size_t c = 0; c < a.size(); ++c) {
    CHECK(a.clusters[c].members == b.clusters[c].members);
    CHECK(a.clusters[c].centroid == b.clusters[c].centroid);
  }
}

TEST_CASE("som with zero epochs keeps its sampled prototypes") {
  ProfileSet data = synthetic(4, 100, 5);
  ClusterLibrary lib = som_train(data, 4, 9, 0);
  lib.validate(data);
  for (const auto& c : lib.clusters) {
    bool is_data_row = false;
    for (std::size_t i = 0; i < data.size() && !is_data_row; ++i)
      is_data_row = data.samples(i) == c.centroid;
    CHECK(is_data_row);
  }
}

TEST_CASE("som prototypes settle near blob means") {
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 20; ++i)
    rows.push_back({0.05 * i, 0.0});  // mean (0.475, 0)
  for (int i = 0; i < 20; ++i)
    rows.push_back({10.0 + 0.05 * i, 10.0});  // mean (10.475, 10)
  ProfileSet data = make_profile_set(std::move(rows));

  ClusterLibrary lib = som_train(data, 2, 3, 50);
  REQUIRE(lib.size() == 2);
  const std::vector<double> m1{0.475, 0.0};
  const std::vector<double> m2{10.475, 10.0};
  std::vector<int> nearest;
  for (const auto& c : lib.clusters) {
    const double d1 = euclidean(c.centroid, m1);
    const double d2 = euclidean(c.centroid, m2);
    CHECK(std::min(d1, d2) <= 0.5);
    nearest.push_back(d1 < d2 ? 0 : 1);
  }
  CHECK(nearest[0] != nearest[1]);  // one prototype per blob
}

TEST_CASE("som drops empty units but keeps full coverage") {
  ProfileSet data = synthetic(4, 400, 7);
  ClusterLibrary lib = som_train(data, 9, 11, 30);
  lib.validate(data);  // disjoint cover, frequencies sum to 1
  CHECK(lib.size() <= 9);
  CHECK(lib.size() >= 1);
}

TEST_CASE("som is deterministic per seed") {
  ProfileSet data = synthetic(3, 150, 2);
  ClusterLibrary a = som_train(data, 6, 4, 20);
  ClusterLibrary b = som_train(data, 6, 4, 20);
  REQUIRE(a.size() == b.size());
  for (std::size_t c = 0; c < a.size(); ++c) {
    CHECK(a.clusters[c].members == b.clusters[c].members);
    CHECK(a.clusters[c].centroid == b.clusters[c].centroid);
  }
}

TEST_CASE("hierarchical merges nearest constant profiles first") {
  ProfileSet data =
      make_profile_set({{0.0, 0.0}, {0.1, 0.1}, {10.0, 10.0}, {10.1, 10.1}});
  ClusterLibrary lib = hierarchical(data, 2);
  REQUIRE(lib.size() == 2);
  auto owner = assignment(data, lib);
  CHECK(owner[0] == owner[1]);
  CHECK(owner[2] == owner[3]);
  CHECK(owner[0] != owner[2]);
}

TEST_CASE("hierarchical boundary cuts") {
  ProfileSet data = two_blobs();
  ClusterLibrary singletons = hierarchical(data, 4);
  CHECK(singletons.size() == 4);
  for (const auto& c : singletons.clusters) CHECK(c.members.size() == 1);

  ClusterLibrary whole = hierarchical(data, 1);
  REQUIRE(whole.size() == 1);
  CHECK(whole.clusters[0].members.size() == 4);

  CHECK_THROWS_AS(hierarchical(data, 0), std::invalid_argument);
  CHECK_THROWS_AS(hierarchical(data, 5), std::invalid_argument);
}

TEST_CASE("overpopulate dispatches and stays deterministic") {
  ProfileSet data = synthetic(4, 200, 13);
  for (Engine engine : {Engine::kmeans, Engine::som, Engine::hierarchical}) {
    ClusterLibrary a = overpopulate(data, engine, 12, 99);
    ClusterLibrary b = overpopulate(data, engine, 12, 99);
    a.validate(data);
    REQUIRE(a.size() == b.size());
    for (std::size_t c = 0; c < a.size(); ++c)
      CHECK(a.clusters[c].members == b.clusters[c].members);
    CHECK(a.source == b.source);
  }
}

TEST_CASE("overpopulate at k_prime=N gives singletons") {
  ProfileSet data = two_blobs();
  ClusterLibrary lib = overpopulate(data, Engine::kmeans, 4, 0);
  CHECK(lib.size() == 4);
  for (const auto& c : lib.clusters) CHECK(c.members.size() == 1);
}

TEST_CASE("library validation catches broken invariants") {
  ProfileSet data = two_blobs();
  ClusterLibrary lib = kmeans(data, 2, 0);

  ClusterLibrary missing = lib;
  missing.clusters[0].members.pop_back();
  CHECK_THROWS_AS(missing.validate(data), data_error);

  ClusterLibrary overlapping = lib;
  overlapping.clusters[0].members = {0, 1};
  overlapping.clusters[1].members = {1, 2, 3};
  CHECK_THROWS_AS(overlapping.validate(data), data_error);

  ClusterLibrary badfreq = lib;
  badfreq.clusters[0].frequency = 0.9;
  CHECK_THROWS_AS(badfreq.validate(data), data_error);

  ClusterLibrary badlen = lib;
  badlen.clusters[0].centroid.push_back(0.0);
  CHECK_THROWS_AS(badlen.validate(data), data_error);
}
