#include "mipnn/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "mipnn/errors.hpp"
#include "mipnn/rng.hpp"

namespace mipnn {

namespace {

int sign_of(double v) { return v >= 0.0 ? 1 : -1; }

void check_arch(const std::vector<int>& layer_sizes) {
  if (layer_sizes.size() < 3) {
    throw InputError("latent network needs at least one hidden layer");
  }
  for (int n : layer_sizes) {
    if (n <= 0) throw InputError("layer sizes must be positive");
  }
}

}  // namespace

LatentNetwork::LatentNetwork(
    std::vector<int> layer_sizes,
    std::vector<std::vector<std::vector<double>>> weights,
    std::vector<std::vector<double>> biases)
    : layer_sizes_(std::move(layer_sizes)),
      weights_(std::move(weights)),
      biases_(std::move(biases)) {
  check_arch(layer_sizes_);
  const size_t L = layer_sizes_.size() - 1;
  if (weights_.size() != L || biases_.size() != L) {
    throw InputError("latent parameter shape mismatch");
  }
  for (size_t l = 1; l <= L; ++l) {
    if (static_cast<int>(weights_[l - 1].size()) != layer_sizes_[l - 1] ||
        static_cast<int>(biases_[l - 1].size()) != layer_sizes_[l]) {
      throw InputError("latent parameter shape mismatch");
    }
    for (auto& row : weights_[l - 1]) {
      if (static_cast<int>(row.size()) != layer_sizes_[l]) {
        throw InputError("latent parameter shape mismatch");
      }
      for (double v : row) {
        if (v < -1.0 || v > 1.0) {
          throw InputError("latent values must lie in [-1, 1]");
        }
      }
    }
    for (double v : biases_[l - 1]) {
      if (v < -1.0 || v > 1.0) {
        throw InputError("latent values must lie in [-1, 1]");
      }
    }
  }
}

LatentNetwork LatentNetwork::random(const std::vector<int>& layer_sizes,
                                    uint64_t seed) {
  check_arch(layer_sizes);
  Rng rng = Rng::stream(seed, 0x1a7e);
  std::vector<std::vector<std::vector<double>>> weights;
  std::vector<std::vector<double>> biases;
  for (size_t l = 1; l < layer_sizes.size(); ++l) {
    std::vector<std::vector<double>> w(layer_sizes[l - 1],
                                       std::vector<double>(layer_sizes[l]));
    std::vector<double> b(layer_sizes[l]);
    for (auto& row : w) {
      for (double& v : row) v = rng.uniform(-1.0, 1.0);
    }
    for (double& v : b) v = rng.uniform(-1.0, 1.0);
    weights.push_back(std::move(w));
    biases.push_back(std::move(b));
  }
  return LatentNetwork(layer_sizes, std::move(weights), std::move(biases));
}

IntegerNetwork LatentNetwork::binarized() const {
  const size_t L = layer_sizes_.size() - 1;
  std::vector<std::vector<std::vector<int>>> weights(L);
  std::vector<std::vector<int>> biases(L);
  for (size_t l = 0; l < L; ++l) {
    weights[l].assign(weights_[l].size(), {});
    for (size_t i = 0; i < weights_[l].size(); ++i) {
      for (double v : weights_[l][i]) weights[l][i].push_back(sign_of(v));
    }
    for (double v : biases_[l]) biases[l].push_back(sign_of(v));
  }
  return IntegerNetwork(layer_sizes_, 1, std::move(weights),
                        std::move(biases));
}

namespace {

struct ForwardState {
  std::vector<std::vector<double>> inputs;  // a_{l-1} per layer
  std::vector<std::vector<double>> preacts; // z_l per layer
  std::vector<double> outputs;              // scaled yhat
};

// Forward with binarized parameters, recording what backprop needs.
void forward_latent(const LatentNetwork& net, const std::vector<double>& x,
                    ForwardState& fs) {
  const auto& sizes = net.layer_sizes();
  const int L = static_cast<int>(sizes.size()) - 1;
  const double scale = 2.0 / (sizes[L - 1] + 1);

  fs.inputs.assign(L, {});
  fs.preacts.assign(L, {});
  std::vector<double> a(x);
  for (int l = 1; l <= L; ++l) {
    fs.inputs[l - 1] = a;
    std::vector<double> z(sizes[l], 0.0);
    for (int j = 0; j < sizes[l]; ++j) {
      double sum = sign_of(net.biases()[l - 1][j]);
      for (int i = 0; i < sizes[l - 1]; ++i) {
        sum += a[i] * sign_of(net.weights()[l - 1][i][j]);
      }
      z[j] = sum;
    }
    fs.preacts[l - 1] = z;
    if (l < L) {
      a.assign(sizes[l], 0.0);
      for (int j = 0; j < sizes[l]; ++j) a[j] = sign_of(z[j]);
    } else {
      fs.outputs.assign(sizes[L], 0.0);
      for (int j = 0; j < sizes[L]; ++j) fs.outputs[j] = scale * z[j];
    }
  }
}

}  // namespace

std::pair<LatentNetwork, std::vector<EpochStats>> train_gd(
    const EncodedDataset& data, const std::vector<int>& arch,
    const GdHyper& hyper) {
  if (hyper.learning_rate < 0.0) throw InputError("learning rate must be >= 0");
  if (hyper.epochs <= 0) throw InputError("epochs must be positive");
  if (hyper.batch_size <= 0) throw InputError("batch size must be positive");
  if (data.size() == 0) throw InputError("cannot train on an empty dataset");
  if (data.feature_width() != arch.front() ||
      data.num_classes() != arch.back()) {
    throw InputError("architecture does not match the dataset");
  }

  LatentNetwork net = LatentNetwork::random(arch, hyper.seed);
  const int L = static_cast<int>(arch.size()) - 1;
  const double scale = 2.0 / (arch[L - 1] + 1);
  const int T = static_cast<int>(data.size());

  auto& weights = net.weights_;
  auto& biases = net.biases_;

  std::vector<std::vector<std::vector<double>>> grad_w(L);
  std::vector<std::vector<double>> grad_b(L);
  for (int l = 1; l <= L; ++l) {
    grad_w[l - 1].assign(arch[l - 1], std::vector<double>(arch[l], 0.0));
    grad_b[l - 1].assign(arch[l], 0.0);
  }

  std::vector<size_t> order(data.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<EpochStats> history;
  history.reserve(hyper.epochs);
  ForwardState fs;
  Rng shuffle_rng = Rng::stream(hyper.seed, 0x0d0e);

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (size_t batch_start = 0; batch_start < order.size();
         batch_start += hyper.batch_size) {
      const size_t batch_end =
          std::min(order.size(), batch_start + hyper.batch_size);
      const double batch_n = static_cast<double>(batch_end - batch_start);
      for (int l = 1; l <= L; ++l) {
        for (auto& row : grad_w[l - 1]) std::fill(row.begin(), row.end(), 0.0);
        std::fill(grad_b[l - 1].begin(), grad_b[l - 1].end(), 0.0);
      }

      for (size_t bi = batch_start; bi < batch_end; ++bi) {
        const size_t k = order[bi];
        forward_latent(net, data.features[k], fs);

        // dL/dz at the output layer; squared hinge on y * yhat.
        std::vector<double> dz(arch[L], 0.0);
        for (int j = 0; j < arch[L]; ++j) {
          const double y = data.labels[k][j];
          const double gap = 0.5 - fs.outputs[j] * y;
          if (gap > 0.0) dz[j] = -2.0 * gap * y * scale;
        }

        for (int l = L; l >= 1; --l) {
          std::vector<double> da(arch[l - 1], 0.0);
          for (int j = 0; j < arch[l]; ++j) {
            const double g = dz[j];
            if (g == 0.0) continue;
            // Straight-through: sign(latent) treated as identity on [-1,1].
            for (int i = 0; i < arch[l - 1]; ++i) {
              if (std::abs(weights[l - 1][i][j]) <= 1.0) {
                grad_w[l - 1][i][j] += g * fs.inputs[l - 1][i] / batch_n;
              }
              da[i] += g * sign_of(weights[l - 1][i][j]);
            }
            if (std::abs(biases[l - 1][j]) <= 1.0) {
              grad_b[l - 1][j] += g / batch_n;
            }
          }
          if (l > 1) {
            // Through the hidden sign activation: identity within [-1,1].
            dz.assign(arch[l - 1], 0.0);
            for (int i = 0; i < arch[l - 1]; ++i) {
              if (std::abs(fs.preacts[l - 2][i]) <= 1.0) dz[i] = da[i];
            }
          }
        }
      }

      for (int l = 1; l <= L; ++l) {
        for (int i = 0; i < arch[l - 1]; ++i) {
          for (int j = 0; j < arch[l]; ++j) {
            double v = weights[l - 1][i][j] -
                       hyper.learning_rate * grad_w[l - 1][i][j];
            weights[l - 1][i][j] = std::clamp(v, -1.0, 1.0);
          }
        }
        for (int j = 0; j < arch[l]; ++j) {
          double v =
              biases[l - 1][j] - hyper.learning_rate * grad_b[l - 1][j];
          biases[l - 1][j] = std::clamp(v, -1.0, 1.0);
        }
      }
    }

    EpochStats stats;
    double loss = 0.0;
    for (int k = 0; k < T; ++k) {
      forward_latent(net, data.features[k], fs);
      for (int j = 0; j < arch[L]; ++j) {
        const double gap = 0.5 - fs.outputs[j] * data.labels[k][j];
        if (gap > 0.0) loss += gap * gap;
      }
    }
    stats.loss = loss / T;
    stats.train_accuracy = evaluate_gd(net, data, hyper.seed);
    history.push_back(stats);
  }

  return {std::move(net), std::move(history)};
}

double evaluate_gd(const LatentNetwork& net, const EncodedDataset& data,
                   uint64_t seed) {
  return accuracy(net.binarized(), data, seed);
}

void save_history_csv(const std::vector<EpochStats>& history,
                      const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write history file: " + path);
  out << "epoch,loss,train_accuracy\n";
  out.precision(17);
  for (size_t e = 0; e < history.size(); ++e) {
    out << e << "," << history[e].loss << "," << history[e].train_accuracy
        << "\n";
  }
}

}  // namespace mipnn
