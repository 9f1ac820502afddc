#include "impact_game/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <random>
#include <sstream>

#include "impact_game/errors.hpp"

namespace impact {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd leaky(const MatrixXd& z, double slope) {
  return (z.array() > 0.0).select(z, slope * z);
}

// Uniform in [0, 1) from the top 53 bits, identical on every platform.
double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::vector<DenseLayer> zero_like(const std::vector<DenseLayer>& layers) {
  std::vector<DenseLayer> out;
  out.reserve(layers.size());
  for (const auto& l : layers) {
    out.push_back({MatrixXd::Zero(l.w.rows(), l.w.cols()), VectorXd::Zero(l.b.size())});
  }
  return out;
}

void check_dims(std::span<const int> dims) {
  if (dims.size() < 2) throw ShapeError("mlp: need at least input and output dims");
  for (const int d : dims) {
    if (d < 1) throw ShapeError("mlp: layer widths must be >= 1");
  }
}

}  // namespace

Mlp Mlp::create(std::span<const int> dims, double leaky_slope, std::uint64_t seed) {
  Mlp net = zeros(dims, leaky_slope);
  std::mt19937_64 rng(seed);
  for (auto& layer : net.layers) {
    const double bound = std::sqrt(6.0 / static_cast<double>(layer.w.cols()));
    // Row-major fill so the draw order matches the snapshot layout.
    for (Eigen::Index r = 0; r < layer.w.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.w.cols(); ++c) {
        layer.w(r, c) = bound * (2.0 * unit_uniform(rng) - 1.0);
      }
    }
  }
  return net;
}

Mlp Mlp::zeros(std::span<const int> dims, double leaky_slope) {
  check_dims(dims);
  if (!(leaky_slope >= 0.0 && leaky_slope < 1.0)) throw ConfigError("mlp: leaky slope must lie in [0, 1)");
  Mlp net;
  net.leaky_slope = leaky_slope;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    net.layers.push_back({MatrixXd::Zero(dims[i + 1], dims[i]), VectorXd::Zero(dims[i + 1])});
  }
  return net;
}

std::vector<int> Mlp::dims() const {
  std::vector<int> d;
  if (layers.empty()) return d;
  d.push_back(static_cast<int>(layers.front().w.cols()));
  for (const auto& l : layers) d.push_back(static_cast<int>(l.w.rows()));
  return d;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.w.size() + l.b.size());
  return n;
}

bool Mlp::same_topology(const Mlp& other) const { return dims() == other.dims(); }

std::vector<int> q_net_dims(int hidden_layers, int width) {
  if (hidden_layers < 0 || width < 1) throw ConfigError("q-net: invalid hidden layout");
  std::vector<int> d{4};
  for (int i = 0; i < hidden_layers; ++i) d.push_back(width);
  d.push_back(1);
  return d;
}

double forward(const Mlp& net, std::span<const double> input) {
  if (net.layers.empty()) throw ShapeError("forward: empty net");
  if (static_cast<Eigen::Index>(input.size()) != net.layers.front().w.cols()) {
    throw ShapeError("forward: input has " + std::to_string(input.size()) + " features, net expects " +
                     std::to_string(net.layers.front().w.cols()));
  }
  for (const double x : input) {
    if (!std::isfinite(x)) throw NumericError("forward: non-finite input");
  }
  MatrixXd x = Eigen::Map<const MatrixXd>(input.data(), 1, static_cast<Eigen::Index>(input.size()));
  return forward_batch(net, x)(0);
}

VectorXd forward_batch(const Mlp& net, const MatrixXd& inputs) {
  // Column blocks keep the activations cache-resident.
  constexpr Eigen::Index kBlock = 1024;
  const Eigen::Index n = inputs.rows();
  Eigen::Index widest = inputs.cols();
  for (const auto& l : net.layers) widest = std::max(widest, l.w.rows());
  thread_local MatrixXd buf_a, buf_b;
  const Eigen::Index cols = std::min(kBlock, std::max<Eigen::Index>(n, 1));
  if (buf_a.rows() < widest || buf_a.cols() < cols) {
    buf_a.resize(widest, cols);
    buf_b.resize(widest, cols);
  }

  VectorXd out(n);
  for (Eigen::Index start = 0; start < n; start += kBlock) {
    const Eigen::Index m = std::min(kBlock, n - start);
    MatrixXd* cur = &buf_a;
    MatrixXd* nxt = &buf_b;
    Eigen::Index rows = inputs.cols();
    cur->topLeftCorner(rows, m) = inputs.middleRows(start, m).transpose();
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      const auto& layer = net.layers[l];
      auto z = nxt->topLeftCorner(layer.w.rows(), m);
      z.noalias() = layer.w * cur->topLeftCorner(rows, m);
      z.colwise() += layer.b;
      if (l + 1 < net.layers.size()) z = z.cwiseMax(net.leaky_slope * z);  // slope < 1
      rows = layer.w.rows();
      std::swap(cur, nxt);
    }
    out.segment(start, m) = cur->row(0).head(m).transpose();
  }
  return out;
}

double loss_mse(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size()) throw ShapeError("loss_mse: length mismatch");
  if (pred.empty()) throw ShapeError("loss_mse: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = target[i] - pred[i];
    sum += d * d;
  }
  return sum / static_cast<double>(pred.size());
}

BackwardResult backward(const Mlp& net, const TrainBatch& batch) {
  const Eigen::Index b = batch.inputs.rows();
  if (b == 0 || batch.targets.size() != b) throw ShapeError("backward: malformed batch");
  if (net.layers.empty() || batch.inputs.cols() != net.layers.front().w.cols()) {
    throw ShapeError("backward: feature count does not match the net");
  }
  const std::size_t n_layers = net.layers.size();

  // acts[l] feeds layer l; pre[l] is layer l's pre-activation.
  std::vector<MatrixXd> acts(n_layers + 1);
  std::vector<MatrixXd> pre(n_layers);
  acts[0] = batch.inputs.transpose();
  for (std::size_t l = 0; l < n_layers; ++l) {
    pre[l] = net.layers[l].w * acts[l];
    pre[l].colwise() += net.layers[l].b;
    acts[l + 1] = l + 1 < n_layers ? leaky(pre[l], net.leaky_slope) : pre[l];
  }

  const Eigen::RowVectorXd pred = acts[n_layers].row(0);
  const Eigen::RowVectorXd diff = pred - batch.targets.transpose();
  BackwardResult res;
  res.loss = diff.squaredNorm() / static_cast<double>(b);
  if (!std::isfinite(res.loss)) throw NumericError("backward: loss overflowed");

  res.grads.layers = zero_like(net.layers);
  MatrixXd delta = (2.0 / static_cast<double>(b)) * diff;
  for (std::size_t l = n_layers; l-- > 0;) {
    res.grads.layers[l].w.noalias() = delta * acts[l].transpose();
    res.grads.layers[l].b = delta.rowwise().sum();
    if (l == 0) break;
    MatrixXd back = net.layers[l].w.transpose() * delta;
    delta = (pre[l - 1].array() > 0.0).select(back, net.leaky_slope * back);
  }
  return res;
}

AdamState AdamState::for_net(const Mlp& net, double lr) {
  AdamState s;
  s.lr = lr;
  s.m = zero_like(net.layers);
  s.v = zero_like(net.layers);
  return s;
}

void adam_update(AdamState& s, Mlp& net, const Gradients& grads) {
  const std::size_t n = net.layers.size();
  if (grads.layers.size() != n || s.m.size() != n || s.v.size() != n) {
    throw ShapeError("adam_update: layer count mismatch");
  }
  for (std::size_t l = 0; l < n; ++l) {
    const auto& g = grads.layers[l];
    const auto& p = net.layers[l];
    if (g.w.rows() != p.w.rows() || g.w.cols() != p.w.cols() || g.b.size() != p.b.size() ||
        s.m[l].w.rows() != p.w.rows() || s.m[l].w.cols() != p.w.cols()) {
      throw ShapeError("adam_update: shape mismatch in layer " + std::to_string(l));
    }
  }
  ++s.step;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  auto apply = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = s.beta1 * m + (1.0 - s.beta1) * g;
    v = s.beta2 * v + (1.0 - s.beta2) * g.cwiseProduct(g);
    param.array() -= s.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + s.eps);
  };
  for (std::size_t l = 0; l < n; ++l) {
    apply(net.layers[l].w, s.m[l].w, s.v[l].w, grads.layers[l].w);
    apply(net.layers[l].b, s.m[l].b, s.v[l].b, grads.layers[l].b);
  }
}

void copy_weights(const Mlp& src, Mlp& dst) {
  if (!src.same_topology(dst)) throw ShapeError("copy_weights: topology mismatch");
  dst.layers = src.layers;
  dst.leaky_slope = src.leaky_slope;
}

std::string mlp_to_json(const Mlp& net) {
  nlohmann::json j;
  j["dims"] = net.dims();
  j["leaky_slope"] = net.leaky_slope;
  j["layers"] = nlohmann::json::array();
  for (const auto& l : net.layers) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(l.w.size()));
    for (Eigen::Index r = 0; r < l.w.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.w.cols(); ++c) w.push_back(l.w(r, c));
    }
    j["layers"].push_back({{"w", w}, {"b", std::vector<double>(l.b.data(), l.b.data() + l.b.size())}});
  }
  return j.dump();
}

Mlp mlp_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    const auto dims = j.at("dims").get<std::vector<int>>();
    Mlp net = Mlp::zeros(dims, j.at("leaky_slope").get<double>());
    const auto& layers = j.at("layers");
    if (layers.size() != net.layers.size()) throw ShapeError("snapshot: layer count mismatch");
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      auto& layer = net.layers[l];
      const auto w = layers[l].at("w").get<std::vector<double>>();
      const auto b = layers[l].at("b").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(w.size()) != layer.w.size() ||
          static_cast<Eigen::Index>(b.size()) != layer.b.size()) {
        throw ShapeError("snapshot: layer " + std::to_string(l) + " has the wrong size");
      }
      std::size_t k = 0;
      for (Eigen::Index r = 0; r < layer.w.rows(); ++r) {
        for (Eigen::Index c = 0; c < layer.w.cols(); ++c) layer.w(r, c) = w[k++];
      }
      for (Eigen::Index r = 0; r < layer.b.size(); ++r) layer.b(r) = b[static_cast<std::size_t>(r)];
    }
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("snapshot: ") + e.what());
  }
}

void save_weights(const Mlp& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << mlp_to_json(net) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

Mlp load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return mlp_from_json(ss.str());
}

}  // namespace impact
