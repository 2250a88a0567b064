#include <doctest.h>

#include <stdexcept>
#include <algorithm>

#include "repsample/ingest.hpp"

using namespace repsample;

namespace {

DatasetSchema small_schema() {
  DatasetSchema s;
  s.features = {{"income", ColumnKind::Ordinal},
                {"job", ColumnKind::Categorical},
                {"member", ColumnKind::Binary}};
  s.sensitive = {"age", "gender"};
  s.target = "outcome";
  s.location = "city";
  s.min_site_size = 1;
  return s;
}

CsvTable small_table() {
  return parse_csv(
      "income,job,member,age,gender,outcome,city\n"
      "10,A,yes,30,F,1,X\n"
      "20,B,no,50,M,0,X\n"
      "30,A,yes,40,F,1,Y\n");
}

}  // namespace

TEST_CASE("csv parsing handles quoting and line endings") {
  const auto t = parse_csv(
      "a,b,c\r\n"
      "1,\"two, with comma\",3\r\n"
      "4,\"quote \"\" inside\",6\n");
  REQUIRE(t.header.size() == 3);
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][1] == "two, with comma");
  CHECK(t.rows[1][1] == "quote \" inside");
  CHECK_THROWS_AS(parse_csv(""), std::runtime_error);
}

TEST_CASE("preprocess encodings") {
  const auto result = preprocess(small_table(), small_schema());
  REQUIRE(result.records.size() == 3);
  CHECK(result.rows_in == 3);
  CHECK(result.rows_dropped == 0);

  // ordinal {10,20,30} scales to {0, 0.5, 1}
  CHECK(result.records[0].x[0] == 0.0);
  CHECK(result.records[1].x[0] == 0.5);
  CHECK(result.records[2].x[0] == 1.0);

  // categorical {A,B} one-hot in sorted value order
  CHECK(result.feature_names[1] == "job=A");
  CHECK(result.feature_names[2] == "job=B");
  CHECK(result.records[0].x[1] == 1.0);
  CHECK(result.records[0].x[2] == 0.0);
  CHECK(result.records[1].x[1] == 0.0);
  CHECK(result.records[1].x[2] == 1.0);

  // binary {no,yes} maps lexicographically smaller value to 0
  CHECK(result.records[0].x[3] == 1.0);
  CHECK(result.records[1].x[3] == 0.0);

  // age mean 40: {30,50,40} -> {0,1,1}
  CHECK(result.records[0].a[0] == 0.0);
  CHECK(result.records[1].a[0] == 1.0);
  CHECK(result.records[2].a[0] == 1.0);

  // gender two-valued map
  CHECK(result.records[0].a[1] == 0.0);
  CHECK(result.records[1].a[1] == 1.0);

  CHECK(result.records[0].y == 1);
  CHECK(result.records[1].y == 0);
}

TEST_CASE("preprocess drops bad rows and counts them") {
  const auto table = parse_csv(
      "income,job,member,age,gender,outcome,city\n"
      "10,A,yes,30,F,1,X\n"
      ",B,no,50,M,0,X\n"          // missing income
      "junk,A,yes,40,F,1,Y\n"     // unparsable ordinal
      "20,B,no,45,M,0,\n");       // missing location
  const auto result = preprocess(table, small_schema());
  CHECK(result.rows_in == 4);
  CHECK(result.rows_dropped == 3);
  REQUIRE(result.records.size() == 1);
}

TEST_CASE("preprocess missing column is a schema error") {
  auto schema = small_schema();
  schema.target = "nope";
  CHECK_THROWS_AS(preprocess(small_table(), schema), std::runtime_error);
}

TEST_CASE("scaling an already scaled column is a no-op") {
  DatasetSchema s;
  s.features = {{"x", ColumnKind::Ordinal}};
  s.sensitive = {"g"};
  s.target = "y";
  const auto t = parse_csv("x,g,y\n0,a,0\n0.25,b,1\n1,a,1\n");
  const auto r = preprocess(t, s);
  CHECK(r.records[0].x[0] == 0.0);
  CHECK(r.records[1].x[0] == 0.25);
  CHECK(r.records[2].x[0] == 1.0);
}

TEST_CASE("site partitioning") {
  DatasetSchema s;
  s.features = {{"x", ColumnKind::Ordinal}};
  s.sensitive = {"g"};
  s.target = "y";
  s.location = "loc";

  std::string csv = "x,g,y,loc\n";
  for (int i = 0; i < 1200; ++i)
    csv += std::to_string(i % 7) + ",a,1,L1\n";
  for (int i = 0; i < 800; ++i)
    csv += std::to_string(i % 5) + ",b,0,L2\n";
  const auto data = preprocess(parse_csv(csv), s);

  SUBCASE("threshold excludes the small location") {
    const auto part = partition_sites(data, 1000);
    REQUIRE(part.sites.size() == 1);
    CHECK(part.site_keys[0] == "L1");
    CHECK(part.sites[0].records().size() == 1200);
    CHECK(part.excluded_records == 800);
    CHECK(part.excluded_locations == 1);
    CHECK(part.sites[0].records().size() + part.excluded_records ==
          data.records.size());
  }
  SUBCASE("min size one keeps every location") {
    const auto part = partition_sites(data, 1);
    CHECK(part.sites.size() == 2);
    CHECK(part.excluded_records == 0);
  }
  SUBCASE("shuffled input yields the same partition contents") {
    IngestResult shuffled = data;
    Rng rng(7);
    const auto perm = rng.permutation(shuffled.records.size());
    IngestResult reordered;
    for (const std::size_t i : perm) {
      reordered.records.push_back(data.records[i]);
      reordered.locations.push_back(data.locations[i]);
    }
    const auto a = partition_sites(data, 1);
    const auto b = partition_sites(reordered, 1);
    REQUIRE(a.site_keys == b.site_keys);
    for (std::size_t j = 0; j < a.sites.size(); ++j) {
      auto mean_of = [](const Site& site) {
        double s = 0;
        for (const auto& r : site.records()) s += r.x[0];
        return s / static_cast<double>(site.records().size());
      };
      CHECK(a.sites[j].records().size() == b.sites[j].records().size());
      CHECK(mean_of(a.sites[j]) == doctest::Approx(mean_of(b.sites[j])));
    }
  }
  SUBCASE("zero qualifying sites is an error") {
    CHECK_THROWS_AS(partition_sites(data, 5000), std::runtime_error);
  }
}

TEST_CASE("arm pool resizing") {
  std::vector<Site> sites;
  for (int j = 0; j < 5; ++j) {
    std::vector<Record> recs(10);
    for (auto& r : recs) r.a = {static_cast<double>(j % 2)};
    sites.push_back(Site::empirical(j, std::move(recs)));
  }

  SUBCASE("matching target is unchanged") {
    Rng rng(1);
    const auto out = resize_arm_pool(sites, 5, rng);
    CHECK(out.size() == 5);
    for (int j = 0; j < 5; ++j) CHECK(out[j].id() == j);
  }
  SUBCASE("duplication keeps every original") {
    Rng rng(2);
    const auto out = resize_arm_pool(sites, 10, rng);
    CHECK(out.size() == 10);
    std::vector<int> seen(5, 0);
    for (const auto& s : out) seen[static_cast<std::size_t>(s.id())] += 1;
    for (const int c : seen) CHECK(c >= 1);
  }
  SUBCASE("subsampling is seeded and without replacement") {
    Rng a(3), b(3);
    const auto x = resize_arm_pool(sites, 3, a);
    const auto y = resize_arm_pool(sites, 3, b);
    REQUIRE(x.size() == 3);
    std::vector<int> ids;
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(x[j].id() == y[j].id());
      ids.push_back(x[j].id());
    }
    std::sort(ids.begin(), ids.end());
    CHECK(std::unique(ids.begin(), ids.end()) == ids.end());
  }
}

TEST_CASE("schema json parsing") {
  const auto s = schema_from_json(R"({
    "features": [
      {"name": "income", "kind": "ordinal"},
      {"name": "job", "kind": "categorical"}
    ],
    "sensitive": ["age"],
    "target": "outcome",
    "location": "city",
    "min_site_size": 500
  })");
  CHECK(s.features.size() == 2);
  CHECK(s.features[1].kind == ColumnKind::Categorical);
  CHECK(s.sensitive == std::vector<std::string>{"age"});
  CHECK(s.target == "outcome");
  CHECK(s.min_site_size == 500);
}
