#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace impact {

struct DenseLayer {
  Eigen::MatrixXd w;  // out x in
  Eigen::VectorXd b;  // out

  bool operator==(const DenseLayer& o) const { return w == o.w && b == o.b; }
};

// Fully connected net: leaky-ReLU on hidden layers, linear output.
struct Mlp {
  std::vector<DenseLayer> layers;
  double leaky_slope = 0.01;

  // He-uniform weights scaled by fan-in, zero biases. dims = {in, h1, ..., out}.
  static Mlp create(std::span<const int> dims, double leaky_slope, std::uint64_t seed);
  // All weights and biases zero.
  static Mlp zeros(std::span<const int> dims, double leaky_slope = 0.01);

  std::vector<int> dims() const;
  std::size_t parameter_count() const;
  bool same_topology(const Mlp& other) const;

  bool operator==(const Mlp& o) const {
    return leaky_slope == o.leaky_slope && layers == o.layers;
  }
};

// Default Q-net shape: (q, t, S, v) -> Q.
std::vector<int> q_net_dims(int hidden_layers = 5, int width = 30);

// Throws NumericError on non-finite input, ShapeError on wrong length.
double forward(const Mlp& net, std::span<const double> input);

// Rows of `inputs` are samples. No finiteness check (hot path).
Eigen::VectorXd forward_batch(const Mlp& net, const Eigen::MatrixXd& inputs);

double loss_mse(std::span<const double> pred, std::span<const double> target);

struct TrainBatch {
  Eigen::MatrixXd inputs;   // b x in
  Eigen::VectorXd targets;  // b
};

struct Gradients {
  std::vector<DenseLayer> layers;
};

struct BackwardResult {
  Gradients grads;
  double loss = 0.0;  // before any update
};

// Exact gradients of the mean squared error over the batch.
BackwardResult backward(const Mlp& net, const TrainBatch& batch);

struct AdamState {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::vector<DenseLayer> m;
  std::vector<DenseLayer> v;
  std::int64_t step = 0;

  static AdamState for_net(const Mlp& net, double lr = 1e-4);
};

void adam_update(AdamState& state, Mlp& net, const Gradients& grads);

// Throws ShapeError when the topologies differ.
void copy_weights(const Mlp& src, Mlp& dst);

// JSON snapshot: {"dims", "leaky_slope", "layers": [{"w": row-major, "b"}]}.
std::string mlp_to_json(const Mlp& net);
Mlp mlp_from_json(const std::string& text);
void save_weights(const Mlp& net, const std::filesystem::path& path);
Mlp load_weights(const std::filesystem::path& path);

}  // namespace impact
