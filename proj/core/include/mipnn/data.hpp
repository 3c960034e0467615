#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace mipnn {

enum class ColumnKind { Categorical, Numerical, Label };

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::Numerical;
  // Categorical / label: ordered category list (fitted or user-supplied).
  std::vector<std::string> categories;
  // Numerical: min-max statistics fitted on training data.
  double min = 0.0;
  double max = 0.0;
  bool fitted = false;
};

// Column layout of a CSV dataset. Exactly one label column. Cells matching
// a missing marker cause the row to be dropped at load time.
struct ColumnSchema {
  std::vector<Column> columns;
  std::vector<std::string> missing_markers = {"", "?"};

  int label_index() const;
  void validate() const;

  static ColumnSchema load(const std::string& path);
  void save(const std::string& path) const;
};

// Typed rows, cell order aligned with schema.columns.
struct RawTable {
  std::vector<std::vector<std::string>> rows;
  int dropped_missing = 0;   // rows dropped for missing values
  int rejected_rows = 0;     // malformed numeric / unknown category
};

RawTable load_csv(const std::string& path, const ColumnSchema& schema);
void save_csv(const std::string& path, const ColumnSchema& schema,
              const RawTable& table);

// Feature matrix in [0,1] plus two-or-more-neuron +/-1 label matrix.
struct EncodedDataset {
  std::vector<std::vector<double>> features;
  std::vector<std::vector<int>> labels;  // exactly one +1 per row
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;

  size_t size() const { return features.size(); }
  int feature_width() const {
    return features.empty() ? static_cast<int>(feature_names.size())
                            : static_cast<int>(features.front().size());
  }
  int num_classes() const { return static_cast<int>(class_names.size()); }
  int true_class(size_t k) const;

  // Cache layout: <dir>/features.csv, <dir>/labels.csv, <dir>/meta.json.
  void save(const std::string& dir) const;
  static EncodedDataset load(const std::string& dir);
};

struct EncodeResult {
  EncodedDataset train;
  EncodedDataset test;
  int rejected_test_rows = 0;  // unseen categories / labels in test
  std::vector<std::string> warnings;
};

// Fits categories and numeric (min,max) on train only, then encodes both
// tables. Test numeric values are clipped to [0,1]; test rows with unseen
// categories are rejected and counted.
EncodeResult fit_encode(const RawTable& train, const RawTable& test,
                        ColumnSchema& schema);

// Uniform sample of n rows without replacement, deterministic in seed and
// independent of everything else (notably the parameter bound P).
EncodedDataset subsample(const EncodedDataset& data, size_t n, uint64_t seed);

// Linearly separable two-feature fixture: label is "a" iff x1 + x2 >= 1,
// with |x1 + x2 - 1| >= margin enforced by resampling. Feature values are
// drawn from a 1/64 grid.
RawTable make_separable_table(size_t n, uint64_t seed, double margin = 0.2);
ColumnSchema separable_schema();

// Random dataset with features on the 1/64 grid (exactly representable,
// so preactivation comparisons are float-exact) and uniform class labels.
EncodedDataset make_random_grid_dataset(size_t n, int width, int classes,
                                        uint64_t seed);

}  // namespace mipnn
