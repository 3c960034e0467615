#include "mipnn/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mipnn/errors.hpp"
#include "mipnn/rng.hpp"

namespace mipnn {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

bool parse_double(const std::string& s, double& out) {
  try {
    size_t pos = 0;
    out = std::stod(s, &pos);
    return pos == s.size() && std::isfinite(out);
  } catch (...) {
    return false;
  }
}

ColumnKind kind_from_string(const std::string& s) {
  if (s == "categorical") return ColumnKind::Categorical;
  if (s == "numerical") return ColumnKind::Numerical;
  if (s == "label") return ColumnKind::Label;
  throw ParseError("unknown column kind: " + s);
}

const char* kind_to_string(ColumnKind k) {
  switch (k) {
    case ColumnKind::Categorical: return "categorical";
    case ColumnKind::Numerical: return "numerical";
    case ColumnKind::Label: return "label";
  }
  return "?";
}

}  // namespace

int ColumnSchema::label_index() const {
  for (size_t c = 0; c < columns.size(); ++c) {
    if (columns[c].kind == ColumnKind::Label) return static_cast<int>(c);
  }
  return -1;
}

void ColumnSchema::validate() const {
  if (columns.empty()) throw InputError("schema has no columns");
  int labels = 0;
  std::set<std::string> names;
  for (const auto& col : columns) {
    if (col.name.empty()) throw InputError("schema column without a name");
    if (!names.insert(col.name).second) {
      throw InputError("duplicate schema column: " + col.name);
    }
    if (col.kind == ColumnKind::Label) ++labels;
    std::set<std::string> cats(col.categories.begin(), col.categories.end());
    if (cats.size() != col.categories.size()) {
      throw InputError("duplicate categories in column " + col.name);
    }
    if (col.fitted && col.kind == ColumnKind::Numerical && col.min > col.max) {
      throw InputError("column " + col.name + " has min > max");
    }
  }
  if (labels != 1) {
    throw InputError("schema must have exactly one label column, got " +
                     std::to_string(labels));
  }
}

ColumnSchema ColumnSchema::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot read schema file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("schema file " + path + ": " + e.what());
  }
  ColumnSchema schema;
  try {
    for (const auto& jc : j.at("columns")) {
      Column col;
      col.name = jc.at("name").get<std::string>();
      col.kind = kind_from_string(jc.at("kind").get<std::string>());
      if (jc.contains("categories")) {
        col.categories = jc["categories"].get<std::vector<std::string>>();
      }
      if (jc.contains("min") && jc.contains("max")) {
        col.min = jc["min"].get<double>();
        col.max = jc["max"].get<double>();
        col.fitted = true;
      }
      if (!col.categories.empty() && col.kind != ColumnKind::Numerical) {
        col.fitted = true;
      }
      schema.columns.push_back(std::move(col));
    }
    if (j.contains("missing_values")) {
      schema.missing_markers =
          j["missing_values"].get<std::vector<std::string>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("schema file " + path + ": " + e.what());
  }
  schema.validate();
  return schema;
}

void ColumnSchema::save(const std::string& path) const {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& col : columns) {
    nlohmann::json jc;
    jc["name"] = col.name;
    jc["kind"] = kind_to_string(col.kind);
    if (!col.categories.empty()) jc["categories"] = col.categories;
    if (col.fitted && col.kind == ColumnKind::Numerical) {
      jc["min"] = col.min;
      jc["max"] = col.max;
    }
    cols.push_back(std::move(jc));
  }
  nlohmann::json j;
  j["columns"] = std::move(cols);
  j["missing_values"] = missing_markers;
  std::ofstream out(path);
  if (!out) throw InputError("cannot write schema file: " + path);
  out << j.dump(2) << "\n";
}

RawTable load_csv(const std::string& path, const ColumnSchema& schema) {
  schema.validate();
  std::ifstream in(path);
  if (!in) throw ParseError("cannot read dataset file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": missing header row");
  const std::vector<std::string> header = split_csv_line(line);

  // Schema columns must all be present in the header.
  std::vector<int> col_pos(schema.columns.size(), -1);
  for (size_t c = 0; c < schema.columns.size(); ++c) {
    for (size_t h = 0; h < header.size(); ++h) {
      if (header[h] == schema.columns[c].name) {
        col_pos[c] = static_cast<int>(h);
        break;
      }
    }
    if (col_pos[c] < 0) {
      throw ParseError(path + ": header is missing schema column '" +
                       schema.columns[c].name + "'");
    }
  }

  const auto& missing = schema.missing_markers;
  RawTable table;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    std::vector<std::string> row(schema.columns.size());
    bool drop = false, reject = false;
    for (size_t c = 0; c < schema.columns.size() && !drop && !reject; ++c) {
      if (col_pos[c] >= static_cast<int>(cells.size())) {
        drop = true;
        break;
      }
      const std::string& cell = cells[col_pos[c]];
      if (std::find(missing.begin(), missing.end(), cell) != missing.end()) {
        drop = true;
        break;
      }
      const Column& col = schema.columns[c];
      if (col.kind == ColumnKind::Numerical) {
        double v;
        if (!parse_double(cell, v)) reject = true;
      } else if (col.fitted && !col.categories.empty()) {
        if (std::find(col.categories.begin(), col.categories.end(), cell) ==
            col.categories.end()) {
          reject = true;
        }
      }
      row[c] = cell;
    }
    if (drop) {
      ++table.dropped_missing;
    } else if (reject) {
      ++table.rejected_rows;
    } else {
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

void save_csv(const std::string& path, const ColumnSchema& schema,
              const RawTable& table) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write dataset file: " + path);
  for (size_t c = 0; c < schema.columns.size(); ++c) {
    out << (c ? "," : "") << schema.columns[c].name;
  }
  out << "\n";
  for (const auto& row : table.rows) {
    for (size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
    out << "\n";
  }
}

int EncodedDataset::true_class(size_t k) const {
  const auto& row = labels[k];
  for (size_t j = 0; j < row.size(); ++j) {
    if (row[j] == 1) return static_cast<int>(j);
  }
  throw InputError("label row " + std::to_string(k) + " has no +1 entry");
}

namespace {

void fit_schema(const RawTable& train, ColumnSchema& schema,
                std::vector<std::string>& warnings) {
  for (size_t c = 0; c < schema.columns.size(); ++c) {
    Column& col = schema.columns[c];
    if (col.kind == ColumnKind::Numerical) {
      if (col.fitted) continue;
      double lo = 0.0, hi = 0.0;
      bool first = true;
      for (const auto& row : train.rows) {
        double v;
        if (!parse_double(row[c], v)) continue;
        lo = first ? v : std::min(lo, v);
        hi = first ? v : std::max(hi, v);
        first = false;
      }
      if (first) throw BuildError("column " + col.name + " has no data to fit");
      if (lo == hi) {
        warnings.push_back("column " + col.name +
                           " is constant on the training data; encoding as 0");
      }
      col.min = lo;
      col.max = hi;
      col.fitted = true;
    } else if (col.categories.empty()) {
      std::set<std::string> seen;
      for (const auto& row : train.rows) seen.insert(row[c]);
      col.categories.assign(seen.begin(), seen.end());  // sorted, duplicate-free
      col.fitted = true;
    } else {
      col.fitted = true;
    }
  }
}

// Returns false when the row references a category outside the fitted set.
bool encode_row(const std::vector<std::string>& row, const ColumnSchema& schema,
                int n_classes, std::vector<double>& features,
                std::vector<int>& label_row) {
  features.clear();
  for (size_t c = 0; c < schema.columns.size(); ++c) {
    const Column& col = schema.columns[c];
    if (col.kind == ColumnKind::Numerical) {
      double v = 0.0;
      parse_double(row[c], v);
      double range = col.max - col.min;
      double scaled = range == 0.0 ? 0.0 : (v - col.min) / range;
      features.push_back(std::clamp(scaled, 0.0, 1.0));
    } else if (col.kind == ColumnKind::Categorical) {
      auto it = std::find(col.categories.begin(), col.categories.end(), row[c]);
      if (it == col.categories.end()) return false;
      size_t idx = static_cast<size_t>(it - col.categories.begin());
      for (size_t g = 0; g < col.categories.size(); ++g) {
        features.push_back(g == idx ? 1.0 : 0.0);
      }
    } else {
      auto it = std::find(col.categories.begin(), col.categories.end(), row[c]);
      if (it == col.categories.end()) return false;
      int idx = static_cast<int>(it - col.categories.begin());
      label_row.assign(n_classes, -1);
      label_row[idx] = 1;
    }
  }
  return true;
}

}  // namespace

EncodeResult fit_encode(const RawTable& train, const RawTable& test,
                        ColumnSchema& schema) {
  schema.validate();
  if (train.rows.empty()) throw BuildError("no training rows to fit");
  EncodeResult result;
  fit_schema(train, schema, result.warnings);

  const Column& label_col = schema.columns[schema.label_index()];
  const int n_classes = static_cast<int>(label_col.categories.size());
  if (n_classes < 2) {
    throw BuildError("label column has fewer than 2 classes");
  }

  std::vector<std::string> feature_names;
  for (const auto& col : schema.columns) {
    if (col.kind == ColumnKind::Numerical) {
      feature_names.push_back(col.name);
    } else if (col.kind == ColumnKind::Categorical) {
      for (const auto& cat : col.categories) {
        feature_names.push_back(col.name + "=" + cat);
      }
    }
  }

  auto encode_table = [&](const RawTable& table, EncodedDataset& out) {
    int rejected = 0;
    out.feature_names = feature_names;
    out.class_names = label_col.categories;
    std::vector<double> features;
    std::vector<int> label_row;
    for (const auto& row : table.rows) {
      if (!encode_row(row, schema, n_classes, features, label_row)) {
        ++rejected;
        continue;
      }
      out.features.push_back(features);
      out.labels.push_back(label_row);
    }
    return rejected;
  };

  int rejected_train = encode_table(train, result.train);
  if (rejected_train > 0) {
    // Cannot happen: categories were fitted on these rows.
    result.warnings.push_back(std::to_string(rejected_train) +
                              " training rows rejected at encode time");
  }
  result.rejected_test_rows = encode_table(test, result.test);
  return result;
}

EncodedDataset subsample(const EncodedDataset& data, size_t n, uint64_t seed) {
  if (n < 1 || n > data.size()) {
    throw InputError("subsample size " + std::to_string(n) +
                     " out of range [1, " + std::to_string(data.size()) + "]");
  }
  std::vector<size_t> idx(data.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng = Rng::stream(seed, 0x5b5e7);
  rng.shuffle(idx);
  EncodedDataset out;
  out.feature_names = data.feature_names;
  out.class_names = data.class_names;
  out.features.reserve(n);
  out.labels.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    out.features.push_back(data.features[idx[i]]);
    out.labels.push_back(data.labels[idx[i]]);
  }
  return out;
}

void EncodedDataset::save(const std::string& dir) const {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    std::ofstream out(fs::path(dir) / "features.csv");
    if (!out) throw InputError("cannot write features.csv under " + dir);
    for (size_t c = 0; c < feature_names.size(); ++c) {
      out << (c ? "," : "") << feature_names[c];
    }
    out << "\n";
    out.precision(17);
    for (const auto& row : features) {
      for (size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
      out << "\n";
    }
  }
  {
    std::ofstream out(fs::path(dir) / "labels.csv");
    if (!out) throw InputError("cannot write labels.csv under " + dir);
    for (size_t c = 0; c < class_names.size(); ++c) {
      out << (c ? "," : "") << class_names[c];
    }
    out << "\n";
    for (const auto& row : labels) {
      for (size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
      out << "\n";
    }
  }
  {
    nlohmann::json j;
    j["format_version"] = 1;
    j["n_samples"] = features.size();
    j["feature_width"] = feature_names.size();
    j["class_names"] = class_names;
    std::ofstream out(fs::path(dir) / "meta.json");
    if (!out) throw InputError("cannot write meta.json under " + dir);
    out << j.dump(2) << "\n";
  }
}

EncodedDataset EncodedDataset::load(const std::string& dir) {
  namespace fs = std::filesystem;
  EncodedDataset out;
  {
    std::ifstream in(fs::path(dir) / "features.csv");
    if (!in) throw ParseError("cannot read features.csv under " + dir);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(dir + ": empty features.csv");
    out.feature_names = split_csv_line(line);
    size_t line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      std::vector<double> row;
      for (const auto& cell : split_csv_line(line)) {
        double v;
        if (!parse_double(cell, v)) {
          throw ParseError(dir + "/features.csv:" + std::to_string(line_no) +
                           ": bad number '" + cell + "'");
        }
        row.push_back(v);
      }
      if (row.size() != out.feature_names.size()) {
        throw ParseError(dir + "/features.csv:" + std::to_string(line_no) +
                         ": width mismatch");
      }
      out.features.push_back(std::move(row));
    }
  }
  {
    std::ifstream in(fs::path(dir) / "labels.csv");
    if (!in) throw ParseError("cannot read labels.csv under " + dir);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(dir + ": empty labels.csv");
    out.class_names = split_csv_line(line);
    size_t line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      std::vector<int> row;
      int plus = 0;
      for (const auto& cell : split_csv_line(line)) {
        if (cell != "1" && cell != "-1" && cell != "+1") {
          throw ParseError(dir + "/labels.csv:" + std::to_string(line_no) +
                           ": labels must be +/-1, got '" + cell + "'");
        }
        int v = cell == "-1" ? -1 : 1;
        plus += v == 1;
        row.push_back(v);
      }
      if (row.size() != out.class_names.size() || plus != 1) {
        throw ParseError(dir + "/labels.csv:" + std::to_string(line_no) +
                         ": each row needs exactly one +1");
      }
      out.labels.push_back(std::move(row));
    }
  }
  if (out.labels.size() != out.features.size()) {
    throw ParseError(dir + ": features.csv and labels.csv row counts differ");
  }
  return out;
}

RawTable make_separable_table(size_t n, uint64_t seed, double margin) {
  if (margin < 0.0 || margin >= 1.0) {
    throw InputError("separable margin must be in [0, 1)");
  }
  Rng rng = Rng::stream(seed, 0xf1c7);
  RawTable table;
  auto grid64 = [&]() { return static_cast<double>(rng.below(65)) / 64.0; };
  while (table.rows.size() < n) {
    double x1 = grid64(), x2 = grid64();
    if (std::abs(x1 + x2 - 1.0) < margin) continue;
    const char* label = (x1 + x2 >= 1.0) ? "a" : "b";
    std::ostringstream c1, c2;
    c1.precision(17);
    c2.precision(17);
    c1 << x1;
    c2 << x2;
    table.rows.push_back({c1.str(), c2.str(), label});
  }
  return table;
}

ColumnSchema separable_schema() {
  ColumnSchema schema;
  schema.columns = {{"x1", ColumnKind::Numerical, {}, 0.0, 1.0, true},
                    {"x2", ColumnKind::Numerical, {}, 0.0, 1.0, true},
                    {"label", ColumnKind::Label, {"a", "b"}, 0.0, 0.0, true}};
  return schema;
}

EncodedDataset make_random_grid_dataset(size_t n, int width, int classes,
                                        uint64_t seed) {
  if (n == 0 || width < 1 || classes < 2) {
    throw InputError("grid dataset needs n >= 1, width >= 1, classes >= 2");
  }
  Rng rng = Rng::stream(seed, 0x9a1d);
  EncodedDataset out;
  for (int i = 0; i < width; ++i) {
    out.feature_names.push_back("f" + std::to_string(i));
  }
  for (int c = 0; c < classes; ++c) {
    out.class_names.push_back("class" + std::to_string(c));
  }
  for (size_t k = 0; k < n; ++k) {
    std::vector<double> row(width);
    for (double& v : row) v = static_cast<double>(rng.below(65)) / 64.0;
    std::vector<int> label(classes, -1);
    label[rng.below(classes)] = 1;
    out.features.push_back(std::move(row));
    out.labels.push_back(std::move(label));
  }
  return out;
}

}  // namespace mipnn
