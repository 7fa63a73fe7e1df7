#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "doctest.h"
#include "fairaudit/dataset.hpp"
#include "support.hpp"

using namespace fairaudit;

namespace {

Schema basic_schema() { return parse_schema("group=a\noutcome=y\ntask=binary\n"); }

Dataset sized(std::size_t n0, std::size_t n1) {
  std::vector<int> g;
  std::vector<double> y;
  for (std::size_t i = 0; i < n0 + n1; ++i) {
    g.push_back(i < n0 ? 0 : 1);
    y.push_back(static_cast<double>(i % 2));
  }
  return fixtures::binary(g, y);
}

// Category sets of the census train file, '?' levels included.
const std::vector<std::pair<std::string, std::vector<std::string>>>& census_levels() {
  static const std::vector<std::pair<std::string, std::vector<std::string>>> levels = {
      {"workclass",
       {"?", "Federal-gov", "Local-gov", "Never-worked", "Private", "Self-emp-inc",
        "Self-emp-not-inc", "State-gov", "Without-pay"}},
      {"education",
       {"10th", "11th", "12th", "1st-4th", "5th-6th", "7th-8th", "9th", "Assoc-acdm", "Assoc-voc",
        "Bachelors", "Doctorate", "HS-grad", "Masters", "Preschool", "Prof-school", "Some-college"}},
      {"marital-status",
       {"Divorced", "Married-AF-spouse", "Married-civ-spouse", "Married-spouse-absent",
        "Never-married", "Separated", "Widowed"}},
      {"occupation",
       {"?", "Adm-clerical", "Armed-Forces", "Craft-repair", "Exec-managerial", "Farming-fishing",
        "Handlers-cleaners", "Machine-op-inspct", "Other-service", "Priv-house-serv",
        "Prof-specialty", "Protective-serv", "Sales", "Tech-support", "Transport-moving"}},
      {"relationship",
       {"Husband", "Not-in-family", "Other-relative", "Own-child", "Unmarried", "Wife"}},
      {"race", {"Amer-Indian-Eskimo", "Asian-Pac-Islander", "Black", "Other", "White"}},
      {"native-country",
       {"?", "Cambodia", "Canada", "China", "Columbia", "Cuba", "Dominican-Republic", "Ecuador",
        "El-Salvador", "England", "France", "Germany", "Greece", "Guatemala", "Haiti",
        "Holand-Netherlands", "Honduras", "Hong", "Hungary", "India", "Iran", "Ireland", "Italy",
        "Jamaica", "Japan", "Laos", "Mexico", "Nicaragua", "Outlying-US(Guam-USVI-etc)", "Peru",
        "Philippines", "Poland", "Portugal", "Puerto-Rico", "Scotland", "South", "Taiwan",
        "Thailand", "Trinadad&Tobago", "United-States", "Vietnam", "Yugoslavia"}},
  };
  return levels;
}

}  // namespace

TEST_CASE("three-row file with two features") {
  const auto d = parse_dataset("f1,f2,a,y\n1,2,m,0\n3,4,f,1\n5,6,m,1\n", basic_schema());
  CHECK(d.size() == 3);
  CHECK(d.feature_count() == 2);
  CHECK(d.group_labels() == std::vector<std::string>{"f", "m"});
  CHECK(d.group() == std::vector<int>{1, 0, 1});
  CHECK(d.features()(1, 1) == 4.0);
}

TEST_CASE("loader rejects invalid files") {
  const auto s = basic_schema();
  CHECK_THROWS_AS(parse_dataset("f1,a,y\n1,m,2\n", s), DataError);
  CHECK_THROWS_AS(parse_dataset("f1,a,y\n1,m,\n", s), DataError);
  CHECK_THROWS_AS(parse_dataset("f1,a,y\nabc,m,1\n", s), DataError);
  CHECK_THROWS_AS(parse_dataset("f1,f1,a,y\n1,2,m,1\n", s), DataError);
  CHECK_THROWS_AS(parse_dataset("f1,a\n1,m\n", s), DataError);
  CHECK_THROWS_AS(parse_dataset("f1,a,y\n1,m,1,4\n", s), DataError);
  CHECK_THROWS_AS(load_dataset("/nonexistent/file.csv", s), DataError);
  CHECK_THROWS_AS(parse_schema("group=a\n"), ConfigError);
  CHECK_THROWS_AS(parse_schema("group=a\noutcome=y\ncolour=blue\n"), ConfigError);
}

TEST_CASE("categorical columns expand in lexicographic order") {
  auto s = basic_schema();
  s.categorical = {"c"};
  const auto d = parse_dataset("c,a,y\nzeta,m,0\nalpha,f,1\nmid,m,1\n", s);
  CHECK(d.column_names() == std::vector<std::string>{"c=alpha", "c=mid", "c=zeta"});
  CHECK(d.features().row(0).sum() == 1.0);
  CHECK(d.features()(0, 2) == 1.0);
  CHECK(d.features()(1, 0) == 1.0);
}

TEST_CASE("census category sets dichotomize to 105 features") {
  const auto& levels = census_levels();
  std::size_t rows = 0;
  for (const auto& [name, lv] : levels) rows = std::max(rows, lv.size());
  std::string csv = "age,workclass,fnlwgt,education,education-num,marital-status,occupation,"
                    "relationship,race,sex,capital-gain,capital-loss,hours-per-week,native-country,income\n";
  for (std::size_t r = 0; r < rows; ++r) {
    auto pick = [&](std::size_t c) { return levels[c].second[r % levels[c].second.size()]; };
    csv += std::to_string(20 + r) + "," + pick(0) + ",1000," + pick(1) + ",9," + pick(2) + "," +
           pick(3) + "," + pick(4) + "," + pick(5) + "," + (r % 2 ? "Male" : "Female") +
           ",0,0,40," + pick(6) + "," + std::to_string(r % 2) + "\n";
  }
  const auto schema = load_schema(fixtures::data_dir() + "/adult.schema");
  const auto d = parse_dataset(csv, schema);
  CHECK(d.feature_count() == 105);
  CHECK(d.group_count() == 2);
}

TEST_CASE("bundled census file loads") {
  const auto d = load_dataset(fixtures::data_dir() + "/adult.csv",
                              load_schema(fixtures::data_dir() + "/adult.schema"));
  CHECK(d.size() == 45222);
  CHECK(d.group_labels() == std::vector<std::string>{"Female", "Male"});
  CHECK_NOTHROW(d.feature_index("occupation=Exec-managerial"));
  // '?' levels were dropped upstream and Never-worked does not occur.
  CHECK(d.feature_count() == 101);
}

TEST_CASE("split sizes, determinism and disjointness") {
  const auto d = sized(5, 5);
  const auto a = split(d, 0.2, 42);
  CHECK(a.train.size() == 8);
  CHECK(a.test.size() == 2);
  const auto b = split(d, 0.2, 42);
  CHECK(a.train_index == b.train_index);
  CHECK(a.test_index == b.test_index);
  std::set<std::size_t> all(a.train_index.begin(), a.train_index.end());
  for (auto i : a.test_index) CHECK(all.insert(i).second);
  CHECK(all.size() == d.size());
}

TEST_CASE("stratified split keeps group proportions") {
  const auto d = sized(80, 20);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = split(d, 0.25, seed, true);
    const auto t0 = static_cast<long>(s.test.group_size(0));
    const auto t1 = static_cast<long>(s.test.group_size(1));
    CHECK(std::labs(t0 - 20) <= 1);
    CHECK(std::labs(t1 - 5) <= 1);
    CHECK(s.train.size() + s.test.size() == 100);
  }
}

TEST_CASE("split rejects bad fractions and tiny strata") {
  const auto d = sized(5, 5);
  CHECK_THROWS_AS(split(d, 0.0, 1), Error);
  CHECK_THROWS_AS(split(d, 1.0, 1), Error);
  CHECK_THROWS_AS(split(d, 0.01, 1), Error);
  CHECK_THROWS_AS(split(sized(9, 1), 0.2, 1, true), DataError);
}

TEST_CASE("subsample without replacement") {
  const auto d = sized(500, 500);
  const auto full = subsample_index(d.size(), d.size(), 3);
  std::vector<std::size_t> sorted(full);
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) CHECK(sorted[i] == i);
  const auto one = subsample(d, 1, 9);
  CHECK(one.size() == 1);
  CHECK(subsample_index(1000, 100, 5) == subsample_index(1000, 100, 5));
  std::size_t differing_pairs = 0;
  for (std::uint64_t s = 0; s < 10; ++s)
    if (subsample_index(1000, 100, 2 * s) != subsample_index(1000, 100, 2 * s + 1)) ++differing_pairs;
  CHECK(differing_pairs >= 1);
  CHECK_THROWS_AS(subsample(d, 0, 1), DataError);
  CHECK_THROWS_AS(subsample(d, 1001, 1), DataError);
}

TEST_CASE("bootstrap distinct fraction approaches 1 - 1/e") {
  const auto small = bootstrap_index(5, 5, 1);
  CHECK(small.size() == 5);
  CHECK(bootstrap_index(5, 5, 1) == small);
  const double target = 1.0 - std::exp(-1.0);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto idx = bootstrap_index(10000, 10000, s);
    const std::set<std::size_t> distinct(idx.begin(), idx.end());
    CHECK(std::fabs(static_cast<double>(distinct.size()) / 10000.0 - target) < 0.02);
  }
  CHECK_THROWS_AS(bootstrap_index(5, 0, 1), DataError);
}

TEST_CASE("write then load reproduces the dataset") {
  Matrix x(4, 2);
  x << 0.1, 1e-17, -3.25, 7, 1.0 / 3.0, 2, 4, 1e300;
  const Dataset d(x, {0, 1, 1, 0}, {0.5, -1.25, 3, 1.0 / 7.0}, Task::Regression, {"u", "v,w"},
                  {"first", "second"}, {{"score", {0.1, 0.2, 0.3, 0.4}}}, "grp", "out");
  const auto dir = fixtures::scratch("roundtrip");
  write_dataset(d, dir / "d.csv", dir / "d.schema");
  const auto back = load_dataset(dir / "d.csv", load_schema(dir / "d.schema"));
  CHECK(back == d);
  CHECK(fingerprint(back) == fingerprint(d));
}
