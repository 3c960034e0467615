#pragma once

// Test-only helpers. The evaluators here are deliberately written as
// straight-line reimplementations, independent of the library code paths
// they are used to check.

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mipnn/data.hpp"
#include "mipnn/network.hpp"
#include "mipnn/rng.hpp"

namespace test_helpers {

// Naive forward pass: one flat loop per layer, no shared code with
// mipnn::forward.
inline std::vector<double> naive_forward(
    const std::vector<int>& arch,
    const std::vector<std::vector<std::vector<int>>>& w,
    const std::vector<std::vector<int>>& b, int p,
    const std::vector<double>& x) {
  const int L = static_cast<int>(arch.size()) - 1;
  std::vector<double> value(x);
  for (int l = 1; l <= L; ++l) {
    std::vector<double> next(arch[l], 0.0);
    for (int j = 0; j < arch[l]; ++j) {
      double acc = b[l - 1][j];
      for (int i = 0; i < arch[l - 1]; ++i) acc += value[i] * w[l - 1][i][j];
      next[j] = acc;
    }
    if (l < L) {
      for (double& v : next) v = v >= 0.0 ? 1.0 : -1.0;
    } else {
      const double scale = 2.0 / (p * (arch[L - 1] + 1));
      for (double& v : next) v *= scale;
    }
    value = std::move(next);
  }
  return value;
}

inline mipnn::IntegerNetwork random_net(const std::vector<int>& arch, int p,
                                        uint64_t seed) {
  mipnn::Rng rng = mipnn::Rng::stream(seed, 0x7e57);
  std::vector<std::vector<std::vector<int>>> w;
  std::vector<std::vector<int>> b;
  for (size_t l = 1; l < arch.size(); ++l) {
    std::vector<std::vector<int>> wl(arch[l - 1], std::vector<int>(arch[l]));
    std::vector<int> bl(arch[l]);
    for (auto& row : wl) {
      for (int& v : row) v = static_cast<int>(rng.below(2 * p + 1)) - p;
    }
    for (int& v : bl) v = static_cast<int>(rng.below(2 * p + 1)) - p;
    w.push_back(std::move(wl));
    b.push_back(std::move(bl));
  }
  return mipnn::IntegerNetwork(arch, p, std::move(w), std::move(b));
}

// Minimal reference MPS reader used to round-trip the writer's output.
struct MpsVar {
  double lb = 0.0;
  double ub = 0.0;
  bool is_integer = false;
  double obj_coeff = 0.0;
};

struct MpsRow {
  char sense = 'L';
  double rhs = 0.0;
  std::vector<std::pair<std::string, double>> terms;
};

struct MpsFile {
  bool maximize = false;
  std::vector<std::string> var_order;
  std::map<std::string, MpsVar> vars;
  std::vector<std::string> row_order;
  std::map<std::string, MpsRow> rows;
};

inline MpsFile parse_mps_text(const std::string& text) {
  MpsFile file;
  std::istringstream in(text);
  std::string line, section, obj_row;
  bool in_integer = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '*') {
      if (line.find("OBJSENSE: MAX") != std::string::npos) {
        file.maximize = true;
      }
      continue;
    }
    if (!std::isspace(static_cast<unsigned char>(line[0]))) {
      std::istringstream ss(line);
      ss >> section;
      continue;
    }
    std::istringstream ss(line);
    if (section == "ROWS") {
      std::string sense, name;
      ss >> sense >> name;
      if (sense == "N") {
        obj_row = name;
      } else {
        file.rows[name].sense = sense[0];
        file.row_order.push_back(name);
      }
    } else if (section == "COLUMNS") {
      std::string first, second, third;
      ss >> first >> second >> third;
      if (second == "'MARKER'") {
        in_integer = third == "'INTORG'";
        continue;
      }
      if (!file.vars.count(first)) {
        file.var_order.push_back(first);
        file.vars[first].is_integer = in_integer;
      }
      double coeff = std::stod(third);
      if (second == obj_row) {
        file.vars[first].obj_coeff += coeff;
      } else {
        file.rows.at(second).terms.push_back({first, coeff});
      }
    } else if (section == "RHS") {
      std::string tag, row, value;
      ss >> tag >> row >> value;
      if (row != obj_row) file.rows.at(row).rhs = std::stod(value);
    } else if (section == "BOUNDS") {
      std::string kind, tag, name, value;
      ss >> kind >> tag >> name >> value;
      if (kind == "LO") file.vars.at(name).lb = std::stod(value);
      if (kind == "UP") file.vars.at(name).ub = std::stod(value);
    }
  }
  return file;
}

// Fourteen attribute columns (8 categorical, 6 numerical) plus a label,
// mirroring the census-style layout the pipeline targets.
inline void write_adult_mini(const std::string& path, int rows,
                             uint64_t seed) {
  static const char* kCats[] = {"wc_a", "wc_b", "wc_c"};
  std::ofstream out(path);
  out << "age,workclass,fnlwgt,education,education_num,marital,occupation,"
         "relationship,race,sex,capital_gain,capital_loss,hours,country,"
         "income\n";
  mipnn::Rng rng = mipnn::Rng::stream(seed, 0xada);
  for (int r = 0; r < rows; ++r) {
    const char* cat = kCats[rng.below(3)];
    out << 20 + static_cast<int>(rng.below(40)) << "," << cat << ","
        << 10000 + static_cast<int>(rng.below(90000)) << "," << cat << ","
        << 1 + static_cast<int>(rng.below(16)) << "," << cat << "," << cat
        << "," << cat << "," << cat << "," << (rng.below(2) ? "m" : "f") << ","
        << static_cast<int>(rng.below(5000)) << ","
        << static_cast<int>(rng.below(2000)) << ","
        << 20 + static_cast<int>(rng.below(40)) << "," << cat << ","
        << (rng.below(2) ? ">50K" : "<=50K") << "\n";
  }
}

inline mipnn::ColumnSchema adult_mini_schema() {
  using mipnn::Column;
  using mipnn::ColumnKind;
  mipnn::ColumnSchema schema;
  auto num = [](const char* name) {
    return Column{name, ColumnKind::Numerical, {}, 0, 0, false};
  };
  auto cat = [](const char* name) {
    return Column{name, ColumnKind::Categorical, {}, 0, 0, false};
  };
  schema.columns = {num("age"),          cat("workclass"),
                    num("fnlwgt"),       cat("education"),
                    num("education_num"), cat("marital"),
                    cat("occupation"),   cat("relationship"),
                    cat("race"),         cat("sex"),
                    num("capital_gain"), num("capital_loss"),
                    num("hours"),        cat("country"),
                    Column{"income", ColumnKind::Label, {}, 0, 0, false}};
  return schema;
}

}  // namespace test_helpers
