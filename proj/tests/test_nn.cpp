#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "uavsc/nn.hpp"
#include "uavsc/rng.hpp"

using namespace uavsc;
using namespace uavsc::nn;

namespace {

MLPSpec small_spec() {
  MLPSpec spec;
  spec.input_size = 3;
  spec.hidden_sizes = {4};
  spec.heads = {HeadSpec{"out", 2, HeadKind::linear, 1.0, 0.0}};
  return spec;
}

/// Scalar loss sum_h sum_i upstream[h][i] * out[h][i], the test harness for
/// gradient checks (linear in the outputs, so upstream is exactly d loss/d out).
double weighted_output_sum(const MLP& net, const std::vector<double>& input,
                           const std::vector<std::vector<double>>& upstream) {
  const auto tr = net.forward(input);
  double loss = 0.0;
  for (std::size_t h = 0; h < upstream.size(); ++h)
    for (std::size_t i = 0; i < upstream[h].size(); ++i)
      loss += upstream[h][i] * tr.head_out[h][i];
  return loss;
}

}  // namespace

TEST_CASE("zero-weight networks produce the activation of zero") {
  SUBCASE("linear head gives zeros") {
    MLP net(small_spec());
    const auto tr = net.forward({1.0, -2.0, 0.5});
    CHECK(tr.head_out[0][0] == 0.0);
    CHECK(tr.head_out[0][1] == 0.0);
  }
  SUBCASE("softmax head gives the uniform distribution") {
    MLPSpec spec = small_spec();
    spec.heads = {HeadSpec{"policy", 5, HeadKind::softmax, 1.0, 0.0}};
    MLP net(spec);
    const auto tr = net.forward({1.0, -2.0, 0.5});
    for (double p : tr.head_out[0]) CHECK(p == doctest::Approx(0.2).epsilon(1e-12));
  }
  SUBCASE("softplus head gives ln 2 plus its floor") {
    MLPSpec spec = small_spec();
    spec.heads = {HeadSpec{"sigma", 3, HeadKind::softplus, 1.0, 1e-3}};
    MLP net(spec);
    const auto tr = net.forward({0.0, 0.0, 0.0});
    for (double s : tr.head_out[0])
      CHECK(s == doctest::Approx(std::log(2.0) + 1e-3).epsilon(1e-12));
  }
}

TEST_CASE("a single linear layer with identity weights passes input through") {
  MLPSpec spec;
  spec.input_size = 2;
  spec.hidden_sizes = {};
  spec.heads = {HeadSpec{"out", 2, HeadKind::linear, 1.0, 0.0}};
  MLP net(spec);
  // layout with no trunk: head W row-major (2x2), then bias (2)
  net.params()[0] = 1.0;
  net.params()[3] = 1.0;
  const auto tr = net.forward({1.0, 2.0});
  CHECK(tr.head_out[0][0] == doctest::Approx(1.0));
  CHECK(tr.head_out[0][1] == doctest::Approx(2.0));
}

TEST_CASE("forward rejects inputs of the wrong size") {
  MLP net(small_spec());
  CHECK_THROWS_AS(net.forward({1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("analytic gradients match central finite differences") {
  RandomStream rng(451);
  const double fd_step = 1e-5;
  for (int trial = 0; trial < 20; ++trial) {
    MLPSpec spec;
    spec.input_size = 2 + static_cast<int>(rng.integer(3));
    const int depth = static_cast<int>(rng.integer(3));  // 0..2 hidden layers
    spec.hidden_sizes.clear();
    for (int l = 0; l < depth; ++l)
      spec.hidden_sizes.push_back(2 + static_cast<int>(rng.integer(4)));
    spec.heads = {HeadSpec{"lin", 1 + static_cast<int>(rng.integer(3)),
                           HeadKind::linear, 1.0, 0.0},
                  HeadSpec{"soft", 2 + static_cast<int>(rng.integer(3)),
                           HeadKind::softmax, 1.0, 0.0},
                  HeadSpec{"plus", 1 + static_cast<int>(rng.integer(2)),
                           HeadKind::softplus, 1.0, 1e-3}};
    MLP net(spec);
    net.init(rng);
    REQUIRE(net.param_count() <= 200);

    std::vector<double> input(spec.input_size);
    for (auto& x : input) x = rng.uniform(-1.0, 1.0);
    std::vector<std::vector<double>> upstream(spec.heads.size());
    for (std::size_t h = 0; h < spec.heads.size(); ++h) {
      upstream[h].resize(spec.heads[h].size);
      for (auto& u : upstream[h]) u = rng.uniform(-1.0, 1.0);
    }

    std::vector<double> grad(net.param_count(), 0.0);
    const auto tr = net.forward(input);
    net.backward(tr, upstream, grad);

    double max_rel = 0.0;
    for (std::size_t p = 0; p < net.param_count(); ++p) {
      const double keep = net.params()[p];
      net.params()[p] = keep + fd_step;
      const double up = weighted_output_sum(net, input, upstream);
      net.params()[p] = keep - fd_step;
      const double dn = weighted_output_sum(net, input, upstream);
      net.params()[p] = keep;
      const double numeric = (up - dn) / (2.0 * fd_step);
      const double rel = std::abs(grad[p] - numeric) /
                         std::max({std::abs(grad[p]), std::abs(numeric), 1e-3});
      max_rel = std::max(max_rel, rel);
    }
    CHECK(max_rel < 1e-4);
  }
}

TEST_CASE("zero upstream gradient yields a zero parameter gradient") {
  RandomStream rng(7);
  MLP net(small_spec());
  net.init(rng);
  const auto tr = net.forward({0.3, -0.4, 0.9});
  std::vector<double> grad(net.param_count(), 0.0);
  net.backward(tr, {{0.0, 0.0}}, grad);
  for (double g : grad) CHECK(g == 0.0);
}

TEST_CASE("an empty upstream entry skips that head entirely") {
  MLPSpec spec = small_spec();
  spec.heads.push_back(HeadSpec{"aux", 3, HeadKind::linear, 1.0, 0.0});
  RandomStream rng(8);
  MLP net(spec);
  net.init(rng);
  const auto tr = net.forward({0.3, -0.4, 0.9});
  std::vector<double> with_aux(net.param_count(), 0.0);
  std::vector<double> without_aux(net.param_count(), 0.0);
  net.backward(tr, {{1.0, -1.0}, {0.0, 0.0, 0.0}}, with_aux);
  net.backward(tr, {{1.0, -1.0}, {}}, without_aux);
  for (std::size_t p = 0; p < net.param_count(); ++p)
    CHECK(with_aux[p] == without_aux[p]);
}

TEST_CASE("backward is linear in the upstream gradient") {
  RandomStream rng(9);
  MLPSpec spec = small_spec();
  spec.heads = {HeadSpec{"soft", 4, HeadKind::softmax, 1.0, 0.0}};
  MLP net(spec);
  net.init(rng);
  const auto tr = net.forward({0.3, -0.4, 0.9});
  std::vector<double> g1(net.param_count(), 0.0);
  std::vector<double> g2(net.param_count(), 0.0);
  const std::vector<double> u = {0.5, -0.25, 1.0, 0.125};
  std::vector<double> u2 = u;
  for (auto& x : u2) x *= 2.0;
  net.backward(tr, {u}, g1);
  net.backward(tr, {u2}, g2);
  for (std::size_t p = 0; p < net.param_count(); ++p)
    CHECK(g2[p] == doctest::Approx(2.0 * g1[p]).epsilon(1e-14));
}

TEST_CASE("softmax heads output a probability simplex point") {
  RandomStream rng(10);
  MLPSpec spec;
  spec.input_size = 6;
  spec.hidden_sizes = {16, 16};
  spec.heads = {HeadSpec{"policy", 17, HeadKind::softmax, 0.01, 0.0}};
  MLP net(spec);
  net.init(rng);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> input(6);
    for (auto& x : input) x = rng.uniform(-2.0, 2.0);
    const auto tr = net.forward(input);
    double sum = 0.0;
    for (double p : tr.head_out[0]) {
      CHECK(p >= 0.0);
      sum += p;
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
}

TEST_CASE("orthogonal init scales rows to the requested gain") {
  MLPSpec spec;
  spec.input_size = 8;
  spec.hidden_sizes = {4};
  spec.heads = {HeadSpec{"out", 2, HeadKind::linear, 0.01, 0.0}};
  RandomStream rng(11);
  MLP net(spec);
  net.init(rng);
  // trunk block: W is 4x8 row-major at offset 0; rows orthonormal * sqrt(2)
  const auto& p = net.params();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j <= i; ++j) {
      double dot = 0.0;
      for (int k = 0; k < 8; ++k) dot += p[i * 8 + k] * p[j * 8 + k];
      CHECK(std::abs(dot - (i == j ? 2.0 : 0.0)) < 1e-9);
    }
  // head block: W is 2x4 after trunk W+b (32+4); rows orthonormal * 0.01
  const std::size_t head_w = 32 + 4;
  for (int i = 0; i < 2; ++i) {
    double norm2 = 0.0;
    for (int k = 0; k < 4; ++k) {
      const double w = p[head_w + i * 4 + k];
      norm2 += w * w;
    }
    CHECK(norm2 == doctest::Approx(1e-4).epsilon(1e-9));
  }
}

TEST_CASE("checkpoint serialization round-trips bit-exactly") {
  RandomStream rng(12);
  MLPSpec spec;
  spec.input_size = 5;
  spec.hidden_sizes = {7, 3};
  spec.heads = {HeadSpec{"mu", 4, HeadKind::linear, 0.01, 0.0},
                HeadSpec{"sigma", 4, HeadKind::softplus, 0.01, 1e-3}};
  MLP net(spec);
  net.init(rng);
  const auto j = net.to_json();
  const MLP copy = MLP::from_json(j);
  REQUIRE(copy.param_count() == net.param_count());
  for (std::size_t p = 0; p < net.param_count(); ++p)
    CHECK(copy.params()[p] == net.params()[p]);

  std::vector<double> input = {0.1, -0.2, 0.3, -0.4, 0.5};
  const auto a = net.forward(input);
  const auto b = copy.forward(input);
  for (std::size_t h = 0; h < a.head_out.size(); ++h)
    for (std::size_t i = 0; i < a.head_out[h].size(); ++i)
      CHECK(a.head_out[h][i] == b.head_out[h][i]);

  // Round-tripping through text must also be exact (shortest-round-trip doubles).
  const MLP reparsed = MLP::from_json(nlohmann::json::parse(j.dump()));
  for (std::size_t p = 0; p < net.param_count(); ++p)
    CHECK(reparsed.params()[p] == net.params()[p]);
}

TEST_CASE("checkpoint loading rejects a corrupted parameter array") {
  MLP net(small_spec());
  auto j = net.to_json();
  j["params"].erase(j["params"].size() - 1);
  CHECK_THROWS(MLP::from_json(j));
}

TEST_CASE("spec validation rejects malformed head definitions") {
  MLPSpec spec = small_spec();
  spec.heads.push_back(HeadSpec{"out", 2, HeadKind::linear, 1.0, 0.0});
  CHECK_THROWS_WITH_AS(spec.validate(), doctest::Contains("duplicate"),
                       std::invalid_argument);
  spec = small_spec();
  spec.heads[0].kind = HeadKind::softmax;
  spec.heads[0].floor = 0.5;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = small_spec();
  spec.heads.clear();
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = small_spec();
  spec.input_size = 0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}

TEST_CASE("head_index resolves names and rejects unknowns") {
  MLPSpec spec = small_spec();
  spec.heads.push_back(HeadSpec{"aux", 1, HeadKind::linear, 1.0, 0.0});
  MLP net(spec);
  CHECK(net.head_index("out") == 0);
  CHECK(net.head_index("aux") == 1);
  CHECK_THROWS(net.head_index("nope"));
}

TEST_CASE("optimizer leaves parameters unchanged on zero gradients") {
  AdamConfig cfg;
  Adam opt(3, cfg);
  std::vector<double> params = {1.0, -2.0, 3.0};
  const std::vector<double> zero = {0.0, 0.0, 0.0};
  for (int i = 0; i < 10; ++i) opt.step(params, zero);
  CHECK(params[0] == 1.0);
  CHECK(params[1] == -2.0);
  CHECK(params[2] == 3.0);
  CHECK(opt.steps_taken() == 10);
}

TEST_CASE("optimizer descends against a constant gradient") {
  AdamConfig cfg;
  Adam opt(2, cfg);
  std::vector<double> params = {0.0, 0.0};
  const std::vector<double> grad = {1.0, -0.5};
  for (int i = 0; i < 100; ++i) opt.step(params, grad);
  CHECK(params[0] < 0.0);  // moves opposite the gradient
  CHECK(params[1] > 0.0);
  CHECK(std::isfinite(params[0]));
  CHECK(std::isfinite(params[1]));
}

TEST_CASE("optimizer trajectories are deterministic and serializable") {
  AdamConfig cfg;
  Adam a(2, cfg), b(2, cfg);
  std::vector<double> pa = {0.5, -0.5}, pb = {0.5, -0.5};
  RandomStream rng(13);
  std::vector<std::vector<double>> grads;
  for (int i = 0; i < 20; ++i) grads.push_back({rng.normal(), rng.normal()});

  for (int i = 0; i < 10; ++i) {
    a.step(pa, grads[i]);
    b.step(pb, grads[i]);
  }
  CHECK(pa[0] == pb[0]);
  CHECK(pa[1] == pb[1]);

  // Snapshot b, continue both: identical continuation through serialization.
  Adam c = Adam::from_json(nlohmann::json::parse(b.to_json().dump()));
  std::vector<double> pc = pb;
  for (int i = 10; i < 20; ++i) {
    a.step(pa, grads[i]);
    c.step(pc, grads[i]);
  }
  CHECK(pa[0] == pc[0]);
  CHECK(pa[1] == pc[1]);
  CHECK(c.steps_taken() == 20);
}
