#ifndef UAVSC_NN_HPP
#define UAVSC_NN_HPP

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "uavsc/rng.hpp"

namespace uavsc::nn {

/// Output-head activation. softmax yields a probability vector, softplus a
/// strictly positive vector (plus an optional additive floor).
enum class HeadKind { linear, softmax, softplus };

std::string head_kind_name(HeadKind kind);
HeadKind head_kind_from_name(const std::string& name);

struct HeadSpec {
  std::string name;
  int size = 0;
  HeadKind kind = HeadKind::linear;
  double init_gain = 1.0;  ///< orthogonal-init gain of the head weights
  double floor = 0.0;      ///< added after the activation (softplus sigma floor)
};

/// Shared tanh trunk with any number of named output heads.
struct MLPSpec {
  int input_size = 0;
  std::vector<int> hidden_sizes{64, 64};
  std::vector<HeadSpec> heads;

  void validate() const;
};

/// Multi-head perceptron with a flat parameter vector and exact
/// reverse-mode gradients. No external autodiff: forward keeps the
/// activations needed for the hand-written backward pass.
class MLP {
 public:
  explicit MLP(MLPSpec spec);

  /// Orthogonal weight init (gain sqrt(2) on the tanh trunk, per-head
  /// init_gain on the heads), zero biases.
  void init(RandomStream& rng);

  struct Trace {
    std::vector<double> input;
    std::vector<std::vector<double>> hidden;    ///< post-tanh, per trunk layer
    std::vector<std::vector<double>> head_z;    ///< pre-activation, per head
    std::vector<std::vector<double>> head_out;  ///< post-activation, per head
  };

  Trace forward(const std::vector<double>& input) const;

  /// Accumulate d(loss)/d(params) into grad given d(loss)/d(head_out) for
  /// each head. An empty upstream vector skips that head.
  void backward(const Trace& trace,
                const std::vector<std::vector<double>>& upstream,
                std::vector<double>& grad) const;

  int head_index(const std::string& name) const;

  std::size_t param_count() const { return params_.size(); }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  const MLPSpec& spec() const { return spec_; }

  nlohmann::json to_json() const;
  static MLP from_json(const nlohmann::json& j);

 private:
  struct Block {
    std::size_t w_off = 0, b_off = 0;
    int rows = 0, cols = 0;
  };

  void fill_orthogonal(const Block& block, double gain, RandomStream& rng);

  MLPSpec spec_;
  std::vector<Block> trunk_;
  std::vector<Block> heads_;
  std::vector<double> params_;
};

struct AdamConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Plain Adam over a flat parameter vector.
class Adam {
 public:
  Adam(std::size_t size, AdamConfig config);

  void step(std::vector<double>& params, const std::vector<double>& grad);
  long long steps_taken() const { return t_; }
  const AdamConfig& config() const { return config_; }

  nlohmann::json to_json() const;
  static Adam from_json(const nlohmann::json& j);

 private:
  AdamConfig config_;
  std::vector<double> m_, v_;
  long long t_ = 0;
};

}  // namespace uavsc::nn

#endif  // UAVSC_NN_HPP
