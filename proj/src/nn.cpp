#include "uavsc/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace uavsc::nn {

namespace {

double softplus(double z) {
  // overflow-safe log(1 + exp(z))
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

std::string head_kind_name(HeadKind kind) {
  switch (kind) {
    case HeadKind::linear: return "linear";
    case HeadKind::softmax: return "softmax";
    case HeadKind::softplus: return "softplus";
  }
  throw std::logic_error("head_kind_name: unknown kind");
}

HeadKind head_kind_from_name(const std::string& name) {
  if (name == "linear") return HeadKind::linear;
  if (name == "softmax") return HeadKind::softmax;
  if (name == "softplus") return HeadKind::softplus;
  throw std::invalid_argument("head kind must be linear, softmax or softplus, got '" +
                              name + "'");
}

void MLPSpec::validate() const {
  if (input_size < 1) throw std::invalid_argument("mlp.input_size: must be >= 1");
  for (int h : hidden_sizes)
    if (h < 1) throw std::invalid_argument("mlp.hidden_sizes: entries must be >= 1");
  if (heads.empty()) throw std::invalid_argument("mlp.heads: at least one head");
  for (const auto& head : heads) {
    if (head.name.empty()) throw std::invalid_argument("mlp.heads: name required");
    if (head.size < 1) throw std::invalid_argument("mlp.heads: size must be >= 1");
    if (!(head.init_gain > 0.0))
      throw std::invalid_argument("mlp.heads: init_gain must be > 0");
    if (head.kind == HeadKind::softmax && head.floor != 0.0)
      throw std::invalid_argument("mlp.heads: softmax head cannot take a floor");
    if (head.floor < 0.0) throw std::invalid_argument("mlp.heads: floor must be >= 0");
  }
  for (std::size_t i = 0; i < heads.size(); ++i)
    for (std::size_t j = i + 1; j < heads.size(); ++j)
      if (heads[i].name == heads[j].name)
        throw std::invalid_argument("mlp.heads: duplicate head name '" +
                                    heads[i].name + "'");
}

MLP::MLP(MLPSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  std::size_t offset = 0;
  int prev = spec_.input_size;
  for (int width : spec_.hidden_sizes) {
    Block b;
    b.rows = width;
    b.cols = prev;
    b.w_off = offset;
    offset += static_cast<std::size_t>(width) * prev;
    b.b_off = offset;
    offset += width;
    trunk_.push_back(b);
    prev = width;
  }
  for (const auto& head : spec_.heads) {
    Block b;
    b.rows = head.size;
    b.cols = prev;
    b.w_off = offset;
    offset += static_cast<std::size_t>(head.size) * prev;
    b.b_off = offset;
    offset += head.size;
    heads_.push_back(b);
  }
  params_.assign(offset, 0.0);
}

void MLP::fill_orthogonal(const Block& block, double gain, RandomStream& rng) {
  const int rows = block.rows, cols = block.cols;
  const int n = std::max(rows, cols), m = std::min(rows, cols);

  // Gram-Schmidt of an iid Gaussian matrix gives a uniformly random
  // orthonormal frame; columns drawn then orthogonalized in order.
  std::vector<std::vector<double>> q(m, std::vector<double>(n));
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < n; ++i) q[j][i] = rng.normal();
    for (int k = 0; k < j; ++k) {
      double r = 0.0;
      for (int i = 0; i < n; ++i) r += q[k][i] * q[j][i];
      for (int i = 0; i < n; ++i) q[j][i] -= r * q[k][i];
    }
    double norm = 0.0;
    for (int i = 0; i < n; ++i) norm += q[j][i] * q[j][i];
    norm = std::sqrt(norm);
    if (!(norm > 0.0))
      throw std::runtime_error("orthogonal init: degenerate random matrix");
    for (int i = 0; i < n; ++i) q[j][i] /= norm;
  }

  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      params_[block.w_off + static_cast<std::size_t>(i) * cols + j] =
          gain * (rows >= cols ? q[j][i] : q[i][j]);
  for (int i = 0; i < rows; ++i) params_[block.b_off + i] = 0.0;
}

void MLP::init(RandomStream& rng) {
  const double trunk_gain = std::sqrt(2.0);
  for (const Block& b : trunk_) fill_orthogonal(b, trunk_gain, rng);
  for (std::size_t h = 0; h < heads_.size(); ++h)
    fill_orthogonal(heads_[h], spec_.heads[h].init_gain, rng);
}

MLP::Trace MLP::forward(const std::vector<double>& input) const {
  if (static_cast<int>(input.size()) != spec_.input_size)
    throw std::invalid_argument("mlp forward: input size mismatch");
  Trace tr;
  tr.input = input;
  tr.hidden.resize(trunk_.size());
  const std::vector<double>* prev = &tr.input;
  for (std::size_t l = 0; l < trunk_.size(); ++l) {
    const Block& b = trunk_[l];
    auto& out = tr.hidden[l];
    out.resize(b.rows);
    for (int i = 0; i < b.rows; ++i) {
      double z = params_[b.b_off + i];
      const double* w = &params_[b.w_off + static_cast<std::size_t>(i) * b.cols];
      for (int j = 0; j < b.cols; ++j) z += w[j] * (*prev)[j];
      out[i] = std::tanh(z);
    }
    prev = &out;
  }

  tr.head_z.resize(heads_.size());
  tr.head_out.resize(heads_.size());
  for (std::size_t h = 0; h < heads_.size(); ++h) {
    const Block& b = heads_[h];
    auto& z = tr.head_z[h];
    z.resize(b.rows);
    for (int i = 0; i < b.rows; ++i) {
      double s = params_[b.b_off + i];
      const double* w = &params_[b.w_off + static_cast<std::size_t>(i) * b.cols];
      for (int j = 0; j < b.cols; ++j) s += w[j] * (*prev)[j];
      z[i] = s;
    }
    auto& out = tr.head_out[h];
    out.resize(b.rows);
    const HeadSpec& hs = spec_.heads[h];
    switch (hs.kind) {
      case HeadKind::linear:
        for (int i = 0; i < b.rows; ++i) out[i] = z[i] + hs.floor;
        break;
      case HeadKind::softmax: {
        const double zmax = *std::max_element(z.begin(), z.end());
        double total = 0.0;
        for (int i = 0; i < b.rows; ++i) {
          out[i] = std::exp(z[i] - zmax);
          total += out[i];
        }
        for (int i = 0; i < b.rows; ++i) out[i] /= total;
        break;
      }
      case HeadKind::softplus:
        for (int i = 0; i < b.rows; ++i) out[i] = softplus(z[i]) + hs.floor;
        break;
    }
  }
  return tr;
}

void MLP::backward(const Trace& trace,
                   const std::vector<std::vector<double>>& upstream,
                   std::vector<double>& grad) const {
  if (upstream.size() != heads_.size())
    throw std::invalid_argument("mlp backward: one upstream vector per head");
  if (grad.size() != params_.size())
    throw std::invalid_argument("mlp backward: grad size mismatch");

  const std::vector<double>& last =
      trunk_.empty() ? trace.input : trace.hidden.back();
  std::vector<double> d_last(last.size(), 0.0);

  for (std::size_t h = 0; h < heads_.size(); ++h) {
    if (upstream[h].empty()) continue;
    const Block& b = heads_[h];
    const auto& up = upstream[h];
    if (static_cast<int>(up.size()) != b.rows)
      throw std::invalid_argument("mlp backward: upstream size mismatch");

    std::vector<double> dz(b.rows);
    switch (spec_.heads[h].kind) {
      case HeadKind::linear:
        for (int i = 0; i < b.rows; ++i) dz[i] = up[i];
        break;
      case HeadKind::softmax: {
        const auto& p = trace.head_out[h];
        double s = 0.0;
        for (int i = 0; i < b.rows; ++i) s += up[i] * p[i];
        for (int i = 0; i < b.rows; ++i) dz[i] = p[i] * (up[i] - s);
        break;
      }
      case HeadKind::softplus:
        for (int i = 0; i < b.rows; ++i) dz[i] = up[i] * sigmoid(trace.head_z[h][i]);
        break;
    }

    for (int i = 0; i < b.rows; ++i) {
      const std::size_t row = b.w_off + static_cast<std::size_t>(i) * b.cols;
      grad[b.b_off + i] += dz[i];
      for (int j = 0; j < b.cols; ++j) {
        grad[row + j] += dz[i] * last[j];
        d_last[j] += params_[row + j] * dz[i];
      }
    }
  }

  std::vector<double> d_out = std::move(d_last);
  for (int l = static_cast<int>(trunk_.size()) - 1; l >= 0; --l) {
    const Block& b = trunk_[l];
    const auto& a = trace.hidden[l];
    const std::vector<double>& in = (l == 0) ? trace.input : trace.hidden[l - 1];
    std::vector<double> d_in(in.size(), 0.0);
    for (int i = 0; i < b.rows; ++i) {
      const double dz = d_out[i] * (1.0 - a[i] * a[i]);
      const std::size_t row = b.w_off + static_cast<std::size_t>(i) * b.cols;
      grad[b.b_off + i] += dz;
      for (int j = 0; j < b.cols; ++j) {
        grad[row + j] += dz * in[j];
        d_in[j] += params_[row + j] * dz;
      }
    }
    d_out = std::move(d_in);
  }
}

int MLP::head_index(const std::string& name) const {
  for (std::size_t h = 0; h < spec_.heads.size(); ++h)
    if (spec_.heads[h].name == name) return static_cast<int>(h);
  throw std::invalid_argument("mlp: no head named '" + name + "'");
}

nlohmann::json MLP::to_json() const {
  nlohmann::json heads = nlohmann::json::array();
  for (const auto& h : spec_.heads) {
    heads.push_back({{"name", h.name},
                     {"size", h.size},
                     {"kind", head_kind_name(h.kind)},
                     {"init_gain", h.init_gain},
                     {"floor", h.floor}});
  }
  return {{"input_size", spec_.input_size},
          {"hidden_sizes", spec_.hidden_sizes},
          {"heads", heads},
          {"params", params_}};
}

MLP MLP::from_json(const nlohmann::json& j) {
  MLPSpec spec;
  spec.input_size = j.at("input_size").get<int>();
  spec.hidden_sizes = j.at("hidden_sizes").get<std::vector<int>>();
  spec.heads.clear();
  for (const auto& h : j.at("heads")) {
    HeadSpec head;
    head.name = h.at("name").get<std::string>();
    head.size = h.at("size").get<int>();
    head.kind = head_kind_from_name(h.at("kind").get<std::string>());
    head.init_gain = h.at("init_gain").get<double>();
    head.floor = h.at("floor").get<double>();
    spec.heads.push_back(std::move(head));
  }
  MLP net(std::move(spec));
  auto params = j.at("params").get<std::vector<double>>();
  if (params.size() != net.params_.size())
    throw std::invalid_argument("mlp checkpoint: parameter count mismatch");
  net.params_ = std::move(params);
  return net;
}

Adam::Adam(std::size_t size, AdamConfig config)
    : config_(config), m_(size, 0.0), v_(size, 0.0) {
  if (!(config_.learning_rate > 0.0))
    throw std::invalid_argument("adam.learning_rate: must be > 0");
  if (config_.beta1 < 0.0 || config_.beta1 >= 1.0)
    throw std::invalid_argument("adam.beta1: must be in [0, 1)");
  if (config_.beta2 < 0.0 || config_.beta2 >= 1.0)
    throw std::invalid_argument("adam.beta2: must be in [0, 1)");
  if (!(config_.epsilon > 0.0))
    throw std::invalid_argument("adam.epsilon: must be > 0");
}

void Adam::step(std::vector<double>& params, const std::vector<double>& grad) {
  if (params.size() != m_.size() || grad.size() != m_.size())
    throw std::invalid_argument("adam step: size mismatch");
  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * grad[i];
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * grad[i] * grad[i];
    const double m_hat = m_[i] / bc1;
    const double v_hat = v_[i] / bc2;
    params[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
  }
}

nlohmann::json Adam::to_json() const {
  return {{"learning_rate", config_.learning_rate},
          {"beta1", config_.beta1},
          {"beta2", config_.beta2},
          {"epsilon", config_.epsilon},
          {"t", t_},
          {"m", m_},
          {"v", v_}};
}

Adam Adam::from_json(const nlohmann::json& j) {
  AdamConfig config;
  config.learning_rate = j.at("learning_rate").get<double>();
  config.beta1 = j.at("beta1").get<double>();
  config.beta2 = j.at("beta2").get<double>();
  config.epsilon = j.at("epsilon").get<double>();
  auto m = j.at("m").get<std::vector<double>>();
  auto v = j.at("v").get<std::vector<double>>();
  if (m.size() != v.size())
    throw std::invalid_argument("adam checkpoint: state size mismatch");
  Adam opt(m.size(), config);
  opt.m_ = std::move(m);
  opt.v_ = std::move(v);
  opt.t_ = j.at("t").get<long long>();
  return opt;
}

}  // namespace uavsc::nn
