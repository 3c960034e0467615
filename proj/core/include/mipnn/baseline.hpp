#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mipnn/data.hpp"
#include "mipnn/network.hpp"

namespace mipnn {

struct GdHyper {
  double learning_rate = 0.1;
  int epochs = 500;
  int batch_size = 16;
  uint64_t seed = 0;
};

struct EpochStats {
  double loss = 0.0;            // mean squared-hinge loss per sample
  double train_accuracy = 0.0;  // binarized forward, deterministic ties
};

// Binarized-weight MLP trained by straight-through-estimator SGD. Latent
// weights/biases are reals clipped to [-1, 1]; the forward pass uses their
// signs and the same output normalization as IntegerNetwork with P = 1.
class LatentNetwork {
 public:
  LatentNetwork(std::vector<int> layer_sizes,
                std::vector<std::vector<std::vector<double>>> weights,
                std::vector<std::vector<double>> biases);

  static LatentNetwork random(const std::vector<int>& layer_sizes,
                              uint64_t seed);

  const std::vector<int>& layer_sizes() const { return layer_sizes_; }
  const std::vector<std::vector<std::vector<double>>>& weights() const {
    return weights_;
  }
  const std::vector<std::vector<double>>& biases() const { return biases_; }

  // Sign of every latent value; P = 1, weights and biases in {-1, +1}.
  IntegerNetwork binarized() const;

 private:
  friend std::pair<LatentNetwork, std::vector<EpochStats>> train_gd(
      const EncodedDataset&, const std::vector<int>&, const GdHyper&);

  std::vector<int> layer_sizes_;
  std::vector<std::vector<std::vector<double>>> weights_;
  std::vector<std::vector<double>> biases_;
};

// Mini-batch SGD on the squared hinge loss over +/-1 labels. Gradients
// pass through the weight binarization and the hidden sign activation as
// identity within [-1, 1]; latents are clipped after every step.
// Deterministic for a given seed.
std::pair<LatentNetwork, std::vector<EpochStats>> train_gd(
    const EncodedDataset& data, const std::vector<int>& arch,
    const GdHyper& hyper);

// Binarized forward + argmax with the same tie-break rule as accuracy().
double evaluate_gd(const LatentNetwork& net, const EncodedDataset& data,
                   uint64_t seed);

void save_history_csv(const std::vector<EpochStats>& history,
                      const std::string& path);

}  // namespace mipnn
