#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mipnn/rng.hpp"

namespace mipnn {

struct EncodedDataset;

// Multi-layer perceptron with integer parameters in {-P..P} and sign
// activations on hidden layers. layer_sizes = [N_0, ..., N_L]; weights[l-1]
// is the N_{l-1} x N_l matrix feeding layer l, biases[l-1] its bias vector.
// Immutable after construction; safe to share between threads.
class IntegerNetwork {
 public:
  IntegerNetwork(std::vector<int> layer_sizes, int p_bound,
                 std::vector<std::vector<std::vector<int>>> weights,
                 std::vector<std::vector<int>> biases);

  static IntegerNetwork zeros(const std::vector<int>& layer_sizes, int p_bound);

  const std::vector<int>& layer_sizes() const { return layer_sizes_; }
  int p_bound() const { return p_bound_; }
  // Number of weight layers L; layer indices run 1..L.
  int num_layers() const { return static_cast<int>(layer_sizes_.size()) - 1; }
  int input_width() const { return layer_sizes_.front(); }
  int output_width() const { return layer_sizes_.back(); }

  // w[i][layer][j], layer in 1..L, i in 0..N_{layer-1}-1, j in 0..N_layer-1.
  int weight(int i, int layer, int j) const {
    return weights_[layer - 1][i][j];
  }
  int bias(int layer, int j) const { return biases_[layer - 1][j]; }

  const std::vector<std::vector<std::vector<int>>>& weights() const {
    return weights_;
  }
  const std::vector<std::vector<int>>& biases() const { return biases_; }

  // Output normalizer 2 / (P * (N_{L-1} + 1)); |output| <= 2 always.
  double output_scale() const;

  void save(const std::string& path) const;
  static IntegerNetwork load(const std::string& path);

 private:
  std::vector<int> layer_sizes_;
  int p_bound_;
  std::vector<std::vector<std::vector<int>>> weights_;
  std::vector<std::vector<int>> biases_;
};

// One forward pass. signs holds the +/-1 activation of each hidden layer
// (sign(0) = +1); outputs are the normalized values of the last layer.
struct Activations {
  std::vector<std::vector<double>> preactivations;  // hidden layers 1..L-1
  std::vector<std::vector<int>> signs;              // same shape, values +/-1
  std::vector<double> outputs;
};

Activations forward(const IntegerNetwork& net, const std::vector<double>& x);

// Argmax over outputs; exact ties are broken uniformly at random from the
// tied set using rng. A fixed rng state always yields the same choice.
int predict(const IntegerNetwork& net, const std::vector<double>& x, Rng& rng);

// Fraction of samples whose prediction matches the true class. Tie-break
// randomness is keyed by (seed, sample index), so the result does not
// depend on evaluation order.
double accuracy(const IntegerNetwork& net, const EncodedDataset& data,
                uint64_t seed);

}  // namespace mipnn
