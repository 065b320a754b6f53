#include <sstream>

#include <gtest/gtest.h>

#include "gformula/csv.hpp"
#include "gformula/error.hpp"
#include "gformula/geo.hpp"
#include "gformula/ingest.hpp"
#include "support/generators.hpp"

using namespace gformula;

namespace {

CsvTable table(const std::string& text) {
  std::istringstream in(text);
  return CsvTable::parse(in, "fixture.csv");
}

AggregationResult aggregate(const std::string& text, const std::vector<std::string>& covs,
                            AggregationOptions opt, double km = 10.0) {
  const auto points = read_households(table(text), covs);
  return aggregate_clusters(points, cluster_households(points, km), opt);
}

}  // namespace

TEST(Ingest, CountsOneHousehold) {
  const std::string csv =
      "household_id,lat,lon,stratum,treated,outcome\n"
      "h1,0,0,child,1,0\n"
      "h1,0,0,child,1,1\n"
      "h1,0,0,child,0,1\n"
      "h1,0,0,child,0,0\n";
  const auto r = aggregate(csv, {}, {OutcomeDefinition::when_untreated, false});
  ASSERT_EQ(r.data.size(), 1u);
  EXPECT_EQ(r.data[0].n, 4);
  EXPECT_DOUBLE_EQ(r.data[0].s, 0.5);
  EXPECT_DOUBLE_EQ(r.data[0].y, 0.5);
  EXPECT_EQ(r.data[0].y_denominator, 2);
  const auto t = aggregate(csv, {}, {OutcomeDefinition::when_treated, false});
  EXPECT_DOUBLE_EQ(t.data[0].y, 0.5);
  const auto o = aggregate(csv, {}, {OutcomeDefinition::overall, false});
  EXPECT_EQ(o.data[0].y_denominator, 4);
}

TEST(Ingest, StrataFixtureByHand) {
  // Households A and B are about 1.1 km apart; C is over 100 km away.
  const std::string csv =
      "household_id,lat,lon,stratum,treated,outcome,age\n"
      "A,0,0,child,1,1,2\n"
      "A,0,0,child,0,0,4\n"
      "A,0,0,other,1,,30\n"
      "A,0,0,other,0,,40\n"
      "B,0,0.01,child,1,0,3\n"
      "B,0,0.01,child,0,NA,\n"
      "B,0,0.01,other,1,,25\n"
      "C,1,0,child,0,1,5\n"
      "C,1,0,other,0,,50\n"
      "C,1,0,other,0,,\n";
  const auto r = aggregate(csv, {"age"}, {OutcomeDefinition::overall, true});
  ASSERT_EQ(r.data.size(), 2u);
  EXPECT_EQ(r.dropped, 0u);
  const auto& ab = r.data[0];
  EXPECT_EQ(ab.id, "A");
  EXPECT_EQ(ab.n, 3);
  EXPECT_DOUBLE_EQ(ab.s, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(ab.y, 1.0 / 3.0);
  EXPECT_EQ(ab.y_denominator, 3);
  EXPECT_DOUBLE_EQ(ab.covariates[0], 3.0);
  EXPECT_EQ(*ab.n2, 3);
  EXPECT_DOUBLE_EQ(*ab.s2, 2.0 / 3.0);
  const auto& c = r.data[1];
  EXPECT_EQ(c.id, "C");
  EXPECT_EQ(c.n, 1);
  EXPECT_DOUBLE_EQ(c.s, 0.0);
  EXPECT_DOUBLE_EQ(c.y, 1.0);
  EXPECT_DOUBLE_EQ(c.covariates[0], 5.0);
  EXPECT_EQ(*c.n2, 2);
  EXPECT_DOUBLE_EQ(*c.s2, 0.0);
  EXPECT_NO_THROW(require_strata(r.data));
}

TEST(Ingest, ClustersWithoutChildrenAreDropped) {
  const std::string csv =
      "household_id,lat,lon,stratum,treated,outcome\n"
      "a,0,0,child,1,1\n"
      "b,5,5,other,1,\n"
      "c,9,9,child,0,\n";
  const auto r = aggregate(csv, {}, {});
  EXPECT_EQ(r.data.size(), 1u);
  EXPECT_EQ(r.dropped, 2u);

  const std::string none =
      "household_id,lat,lon,stratum,treated,outcome\n"
      "b,5,5,other,1,\n"
      "c,9,9,child,0,\n";
  try {
    aggregate(none, {}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::data);
  }
}

TEST(Ingest, RowErrorsNameTheLine) {
  const std::string bad_lat =
      "household_id,lat,lon,stratum,treated,outcome\n"
      "a,0,0,child,1,1\n"
      "b,95,0,child,1,1\n";
  try {
    read_households(table(bad_lat), {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::data);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
  EXPECT_THROW(read_households(table("household_id,lat,lon,stratum,treated,outcome\na,0,0,adult,1,1\n"), {}),
               Error);
  EXPECT_THROW(read_households(table("household_id,lat,lon,stratum,treated,outcome\na,0,0,child,2,1\n"), {}),
               Error);
  EXPECT_THROW(read_households(table("household_id,lat,lon,stratum,treated,outcome\na,0,0,child,1,1\na,0,1,child,1,1\n"), {}),
               Error);
  try {
    read_households(table("household_id,lat,lon,treated,outcome\na,0,0,1,1\n"), {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::schema);
  }
}

TEST(Ingest, ClusterTableRoundTrip) {
  gen::Rng rng(21);
  for (bool strata : {false, true}) {
    gen::DatasetShape shape;
    shape.strata = strata;
    const Dataset d = gen::random_dataset(rng, shape);
    const std::vector<std::string> names{"x1", "x2"};
    const std::string text = cluster_table_csv(d, names);
    const Dataset back = read_cluster_table(table(text), names, strata);
    ASSERT_EQ(back.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
      EXPECT_EQ(back[i].id, d[i].id);
      EXPECT_EQ(back[i].n, d[i].n);
      EXPECT_EQ(back[i].s, d[i].s);
      EXPECT_EQ(back[i].y, d[i].y);
      EXPECT_EQ(back[i].y_denominator, d[i].y_denominator);
      EXPECT_EQ(back[i].covariates, d[i].covariates);
      EXPECT_EQ(back[i].s2, d[i].s2);
      EXPECT_EQ(back[i].n2, d[i].n2);
    }
  }
}

TEST(Ingest, ClusterTableValidation) {
  try {
    read_cluster_table(table("id,n,s,y,y_denominator\nk,4,0.3,0.5,4\n"), {}, false);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::data);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  EXPECT_THROW(read_cluster_table(table("id,n,s,y,y_denominator\nk,4,0.5,0.5,4\n"), {}, true), Error);
  EXPECT_NO_THROW(read_cluster_table(table("id,n,s,y,y_denominator\nk,4,0.5,0.5,4\n"), {}, false));
}
