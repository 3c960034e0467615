#include "mipnn/network.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mipnn/data.hpp"
#include "mipnn/errors.hpp"

namespace mipnn {

namespace {

void check_shape(const std::vector<int>& layer_sizes, int p_bound,
                 const std::vector<std::vector<std::vector<int>>>& weights,
                 const std::vector<std::vector<int>>& biases) {
  if (layer_sizes.size() < 3) {
    throw InputError("network needs at least one hidden layer (got " +
                     std::to_string(layer_sizes.size()) + " layer sizes)");
  }
  for (int n : layer_sizes) {
    if (n <= 0) throw InputError("layer sizes must be positive");
  }
  if (p_bound < 1) throw InputError("parameter bound P must be >= 1");
  const size_t L = layer_sizes.size() - 1;
  if (weights.size() != L || biases.size() != L) {
    throw InputError("expected " + std::to_string(L) +
                     " weight matrices and bias vectors");
  }
  for (size_t l = 1; l <= L; ++l) {
    const auto& w = weights[l - 1];
    const auto& b = biases[l - 1];
    if (static_cast<int>(w.size()) != layer_sizes[l - 1]) {
      throw InputError("weight matrix for layer " + std::to_string(l) +
                       " has " + std::to_string(w.size()) + " rows, expected " +
                       std::to_string(layer_sizes[l - 1]));
    }
    for (const auto& row : w) {
      if (static_cast<int>(row.size()) != layer_sizes[l]) {
        throw InputError("weight matrix for layer " + std::to_string(l) +
                         " has a row of width " + std::to_string(row.size()) +
                         ", expected " + std::to_string(layer_sizes[l]));
      }
      for (int v : row) {
        if (v < -p_bound || v > p_bound) {
          throw InputError("weight " + std::to_string(v) +
                           " outside {-P..P} with P=" + std::to_string(p_bound));
        }
      }
    }
    if (static_cast<int>(b.size()) != layer_sizes[l]) {
      throw InputError("bias vector for layer " + std::to_string(l) +
                       " has width " + std::to_string(b.size()) +
                       ", expected " + std::to_string(layer_sizes[l]));
    }
    for (int v : b) {
      if (v < -p_bound || v > p_bound) {
        throw InputError("bias " + std::to_string(v) +
                         " outside {-P..P} with P=" + std::to_string(p_bound));
      }
    }
  }
}

}  // namespace

IntegerNetwork::IntegerNetwork(
    std::vector<int> layer_sizes, int p_bound,
    std::vector<std::vector<std::vector<int>>> weights,
    std::vector<std::vector<int>> biases)
    : layer_sizes_(std::move(layer_sizes)),
      p_bound_(p_bound),
      weights_(std::move(weights)),
      biases_(std::move(biases)) {
  check_shape(layer_sizes_, p_bound_, weights_, biases_);
}

IntegerNetwork IntegerNetwork::zeros(const std::vector<int>& layer_sizes,
                                     int p_bound) {
  std::vector<std::vector<std::vector<int>>> weights;
  std::vector<std::vector<int>> biases;
  for (size_t l = 1; l < layer_sizes.size(); ++l) {
    weights.emplace_back(layer_sizes[l - 1],
                         std::vector<int>(layer_sizes[l], 0));
    biases.emplace_back(layer_sizes[l], 0);
  }
  return IntegerNetwork(layer_sizes, p_bound, std::move(weights),
                        std::move(biases));
}

double IntegerNetwork::output_scale() const {
  const int n_prev = layer_sizes_[layer_sizes_.size() - 2];
  return 2.0 / (static_cast<double>(p_bound_) * (n_prev + 1));
}

Activations forward(const IntegerNetwork& net, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != net.input_width()) {
    throw InputError("input width " + std::to_string(x.size()) +
                     " does not match N_0=" +
                     std::to_string(net.input_width()));
  }
  const int L = net.num_layers();
  Activations act;
  act.preactivations.resize(L - 1);
  act.signs.resize(L - 1);

  std::vector<int> prev_signs;
  for (int layer = 1; layer < L; ++layer) {
    const int width = net.layer_sizes()[layer];
    std::vector<double> pre(width, 0.0);
    std::vector<int> sgn(width, 0);
    for (int j = 0; j < width; ++j) {
      double sum = net.bias(layer, j);
      if (layer == 1) {
        for (size_t i = 0; i < x.size(); ++i)
          sum += x[i] * net.weight(static_cast<int>(i), layer, j);
      } else {
        for (size_t i = 0; i < prev_signs.size(); ++i)
          sum += prev_signs[i] * net.weight(static_cast<int>(i), layer, j);
      }
      pre[j] = sum;
      sgn[j] = sum >= 0.0 ? 1 : -1;  // sign(0) = +1
    }
    act.preactivations[layer - 1] = std::move(pre);
    act.signs[layer - 1] = sgn;
    prev_signs = std::move(sgn);
  }

  const int out_width = net.output_width();
  const double scale = net.output_scale();
  act.outputs.resize(out_width);
  for (int j = 0; j < out_width; ++j) {
    double sum = net.bias(L, j);
    if (L == 1) {
      for (size_t i = 0; i < x.size(); ++i)
        sum += x[i] * net.weight(static_cast<int>(i), L, j);
    } else {
      for (size_t i = 0; i < prev_signs.size(); ++i)
        sum += prev_signs[i] * net.weight(static_cast<int>(i), L, j);
    }
    act.outputs[j] = scale * sum;
  }
  return act;
}

int predict(const IntegerNetwork& net, const std::vector<double>& x, Rng& rng) {
  const Activations act = forward(net, x);
  double best = act.outputs[0];
  for (double v : act.outputs) best = std::max(best, v);
  std::vector<int> tied;
  for (size_t j = 0; j < act.outputs.size(); ++j) {
    if (act.outputs[j] == best) tied.push_back(static_cast<int>(j));
  }
  if (tied.size() == 1) return tied[0];
  return tied[rng.below(tied.size())];
}

double accuracy(const IntegerNetwork& net, const EncodedDataset& data,
                uint64_t seed) {
  if (data.size() == 0) throw InputError("accuracy over an empty dataset");
  if (data.feature_width() != net.input_width()) {
    throw InputError("dataset feature width does not match network input");
  }
  if (data.num_classes() != net.output_width()) {
    throw InputError("dataset class count does not match network output");
  }
  size_t correct = 0;
  for (size_t k = 0; k < data.size(); ++k) {
    Rng rng = Rng::stream(seed, k);
    if (predict(net, data.features[k], rng) == data.true_class(k)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

void IntegerNetwork::save(const std::string& path) const {
  nlohmann::json j;
  j["format_version"] = 1;
  j["layer_sizes"] = layer_sizes_;
  j["p_bound"] = p_bound_;
  j["weights"] = weights_;
  j["biases"] = biases_;
  std::ofstream out(path);
  if (!out) throw InputError("cannot write network file: " + path);
  out << j.dump(2) << "\n";
}

IntegerNetwork IntegerNetwork::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot read network file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("network file " + path + ": " + e.what());
  }
  try {
    if (j.at("format_version").get<int>() != 1) {
      throw ParseError("network file " + path + ": unsupported format_version");
    }
    auto layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
    int p = j.at("p_bound").get<int>();
    auto weights =
        j.at("weights").get<std::vector<std::vector<std::vector<int>>>>();
    auto biases = j.at("biases").get<std::vector<std::vector<int>>>();
    return IntegerNetwork(std::move(layer_sizes), p, std::move(weights),
                          std::move(biases));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("network file " + path + ": " + e.what());
  } catch (const InputError& e) {
    throw ParseError("network file " + path + ": " + e.what());
  }
}

}  // namespace mipnn
