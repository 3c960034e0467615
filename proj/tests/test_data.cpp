#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "helpers.hpp"
#include "mipnn/data.hpp"
#include "mipnn/errors.hpp"

using namespace mipnn;
namespace fs = std::filesystem;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  const std::string path = (fs::temp_directory_path() / name).string();
  std::ofstream out(path);
  out << content;
  return path;
}

ColumnSchema tiny_schema() {
  ColumnSchema schema;
  schema.columns = {{"cat", ColumnKind::Categorical, {}, 0, 0, false},
                    {"num", ColumnKind::Numerical, {}, 0, 0, false},
                    {"label", ColumnKind::Label, {}, 0, 0, false}};
  return schema;
}

}  // namespace

TEST_CASE("rows with missing values are dropped and counted") {
  const std::string path = write_temp("mipnn_missing.csv",
                                      "cat,num,label\n"
                                      "a,1.0,yes\n"
                                      "b,?,no\n"
                                      "a,2.0,no\n");
  RawTable table = load_csv(path, tiny_schema());
  CHECK(table.rows.size() == 2);
  CHECK(table.dropped_missing == 1);
  fs::remove(path);
}

TEST_CASE("header mismatches are load errors") {
  const std::string path =
      write_temp("mipnn_header.csv", "kat,num,label\na,1,yes\n");
  CHECK_THROWS_AS(load_csv(path, tiny_schema()), ParseError);
  fs::remove(path);
}

TEST_CASE("malformed numerics reject the row") {
  const std::string path = write_temp("mipnn_badnum.csv",
                                      "cat,num,label\n"
                                      "a,oops,yes\n"
                                      "a,1.5,no\n");
  RawTable table = load_csv(path, tiny_schema());
  CHECK(table.rows.size() == 1);
  CHECK(table.rejected_rows == 1);
  fs::remove(path);
}

TEST_CASE("pre-fitted schemas reject unknown categories at load time") {
  ColumnSchema schema = tiny_schema();
  schema.columns[0].categories = {"a", "b"};
  schema.columns[0].fitted = true;
  const std::string path = write_temp("mipnn_prefit.csv",
                                      "cat,num,label\n"
                                      "a,1.0,yes\n"
                                      "z,2.0,yes\n");
  RawTable table = load_csv(path, schema);
  CHECK(table.rows.size() == 1);
  CHECK(table.rejected_rows == 1);
  fs::remove(path);
}

TEST_CASE("census-style file with 14 attributes and a label parses") {
  const std::string path =
      (fs::temp_directory_path() / "mipnn_adult_mini.csv").string();
  test_helpers::write_adult_mini(path, 30, 3);
  ColumnSchema schema = test_helpers::adult_mini_schema();
  RawTable table = load_csv(path, schema);
  CHECK(table.rows.size() == 30);
  CHECK(table.rows.front().size() == 15);

  RawTable test = load_csv(path, schema);
  EncodeResult enc = fit_encode(table, test, schema);
  CHECK(enc.train.size() == 30);
  // 6 numerics + one-hot widths.
  int expected_width = 6;
  for (const auto& col : schema.columns) {
    if (col.kind == ColumnKind::Categorical) {
      expected_width += static_cast<int>(col.categories.size());
    }
  }
  CHECK(enc.train.feature_width() == expected_width);
  fs::remove(path);
}

TEST_CASE("one-hot encoding places a single 1 per categorical group") {
  ColumnSchema schema = tiny_schema();
  RawTable train;
  train.rows = {{"a", "0", "yes"}, {"b", "5", "no"}, {"c", "10", "yes"}};
  RawTable test;
  test.rows = {{"b", "5", "no"}};
  EncodeResult enc = fit_encode(train, test, schema);
  // Categories fitted sorted: a, b, c. Value b -> [0,1,0].
  CHECK(enc.test.features[0][0] == 0.0);
  CHECK(enc.test.features[0][1] == 1.0);
  CHECK(enc.test.features[0][2] == 0.0);
  // Min-max over {0,5,10}: 5 -> 0.5.
  CHECK(enc.test.features[0][3] == doctest::Approx(0.5));
}

TEST_CASE("test-set numerics are clipped to the training range") {
  ColumnSchema schema = tiny_schema();
  RawTable train;
  train.rows = {{"a", "0", "yes"}, {"a", "10", "no"}};
  RawTable test;
  test.rows = {{"a", "12", "yes"}, {"a", "-3", "no"}};
  EncodeResult enc = fit_encode(train, test, schema);
  CHECK(enc.test.features[0][1] == doctest::Approx(1.0));
  CHECK(enc.test.features[1][1] == doctest::Approx(0.0));
}

TEST_CASE("constant numeric columns encode to 0 with a warning") {
  ColumnSchema schema = tiny_schema();
  RawTable train;
  train.rows = {{"a", "4", "yes"}, {"b", "4", "no"}};
  RawTable test;
  EncodeResult enc = fit_encode(train, test, schema);
  CHECK(enc.train.features[0][2] == 0.0);
  CHECK(enc.train.features[1][2] == 0.0);
  REQUIRE(enc.warnings.size() == 1);
  CHECK(enc.warnings[0].find("constant") != std::string::npos);
}

TEST_CASE("unseen test categories reject the row and are counted") {
  ColumnSchema schema = tiny_schema();
  RawTable train;
  train.rows = {{"a", "0", "yes"}, {"b", "1", "no"}};
  RawTable test;
  test.rows = {{"z", "0.5", "yes"}, {"a", "0.5", "maybe"}, {"b", "1", "no"}};
  EncodeResult enc = fit_encode(train, test, schema);
  CHECK(enc.test.size() == 1);
  CHECK(enc.rejected_test_rows == 2);
}

TEST_CASE("every encoded feature lies in [0,1] and labels are one-hot +/-1") {
  const std::string path =
      (fs::temp_directory_path() / "mipnn_adult_rng.csv").string();
  test_helpers::write_adult_mini(path, 50, 11);
  ColumnSchema schema = test_helpers::adult_mini_schema();
  RawTable table = load_csv(path, schema);
  EncodeResult enc = fit_encode(table, table, schema);
  for (const auto& row : enc.train.features) {
    for (double v : row) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
  const int n_l = enc.train.num_classes();
  for (const auto& row : enc.train.labels) {
    int sum = 0;
    for (int v : row) sum += v;
    CHECK(sum == 2 - n_l);
  }
  fs::remove(path);
}

TEST_CASE("encoding the same table twice is identical") {
  ColumnSchema s1 = tiny_schema(), s2 = tiny_schema();
  RawTable train;
  train.rows = {{"a", "0", "yes"}, {"b", "5", "no"}, {"c", "10", "yes"}};
  RawTable empty;
  EncodeResult e1 = fit_encode(train, empty, s1);
  EncodeResult e2 = fit_encode(train, empty, s2);
  CHECK(e1.train.features == e2.train.features);
  CHECK(e1.train.labels == e2.train.labels);
}

TEST_CASE("subsample is seeded, without replacement, and size-checked") {
  EncodedDataset data = make_random_grid_dataset(20, 3, 2, 5);
  EncodedDataset a = subsample(data, 7, 42);
  EncodedDataset b = subsample(data, 7, 42);
  CHECK(a.features == b.features);
  CHECK(a.labels == b.labels);

  EncodedDataset c = subsample(data, 7, 43);
  CHECK(a.features != c.features);

  // n = |data| yields a permutation of the full set.
  EncodedDataset full = subsample(data, 20, 9);
  std::multiset<std::vector<double>> original(data.features.begin(),
                                              data.features.end());
  std::multiset<std::vector<double>> permuted(full.features.begin(),
                                              full.features.end());
  CHECK(original == permuted);

  CHECK_THROWS_AS(subsample(data, 0, 1), InputError);
  CHECK_THROWS_AS(subsample(data, 21, 1), InputError);
}

TEST_CASE("encoded dataset cache round-trips") {
  EncodedDataset data = make_random_grid_dataset(12, 4, 3, 8);
  const std::string dir =
      (fs::temp_directory_path() / "mipnn_cache_test").string();
  data.save(dir);
  EncodedDataset loaded = EncodedDataset::load(dir);
  CHECK(loaded.features == data.features);
  CHECK(loaded.labels == data.labels);
  CHECK(loaded.feature_names == data.feature_names);
  CHECK(loaded.class_names == data.class_names);
  fs::remove_all(dir);
}

TEST_CASE("schema JSON round-trips and validates") {
  ColumnSchema schema = tiny_schema();
  RawTable train;
  train.rows = {{"a", "0", "yes"}, {"b", "5", "no"}};
  RawTable empty;
  fit_encode(train, empty, schema);
  const std::string path =
      (fs::temp_directory_path() / "mipnn_schema.json").string();
  schema.save(path);
  ColumnSchema loaded = ColumnSchema::load(path);
  REQUIRE(loaded.columns.size() == 3);
  CHECK(loaded.columns[0].categories == schema.columns[0].categories);
  CHECK(loaded.columns[1].min == schema.columns[1].min);
  fs::remove(path);

  ColumnSchema no_label;
  no_label.columns = {{"x", ColumnKind::Numerical, {}, 0, 0, false}};
  CHECK_THROWS_AS(no_label.validate(), InputError);
}

TEST_CASE("separable fixture honours its margin and grid") {
  RawTable table = make_separable_table(40, 3, 0.2);
  ColumnSchema schema = separable_schema();
  RawTable empty;
  EncodeResult enc = fit_encode(table, empty, schema);
  REQUIRE(enc.train.size() == 40);
  for (size_t k = 0; k < enc.train.size(); ++k) {
    double x1 = enc.train.features[k][0], x2 = enc.train.features[k][1];
    CHECK(std::abs(x1 + x2 - 1.0) >= 0.2);
    bool is_a = enc.train.true_class(k) == 0;
    CHECK(is_a == (x1 + x2 >= 1.0));
    CHECK(x1 * 64.0 == doctest::Approx(std::round(x1 * 64.0)));
  }
}
