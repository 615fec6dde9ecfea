#include "doctest.h"
#include "support.hpp"

#include <cmath>

using namespace scenegen;
using namespace scenegen::nn;
using namespace testsupport;

namespace {

Eigen::VectorXd random_vector(int n, Rng& rng) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.normal();
  return v;
}

void expect_gradients(const Network& net, const Eigen::VectorXd& x, const Eigen::VectorXd& w) {
  const GradientCheck c = network_gradient_check(net, x, w);
  CHECK(c.max_error < 1e-5);
  CHECK(c.skipped * 50 <= c.checked + c.skipped);
}

}  // namespace

TEST_CASE("sc mask") {
  Rng rng(51);
  const ScMask full = make_sc_mask(6, 5, 6, rng);
  for (const auto& row : full) CHECK(row == std::vector<int>{0, 1, 2, 3, 4, 5});

  double total = 0.0;
  for (int seed = 0; seed < 10; ++seed) {
    Rng r(seed);
    const ScMask m = make_sc_mask(1000, 100, 4, r);
    REQUIRE(m.size() == 100);
    for (const auto& row : m) {
      CHECK(!row.empty());
      CHECK(std::is_sorted(row.begin(), row.end()));
      total += row.size();
    }
  }
  const double mean = total / 1000.0;
  CHECK(mean >= 3.5);
  CHECK(mean <= 4.5);

  for (int seed = 0; seed < 50; ++seed) {
    Rng r(seed);
    for (const auto& row : make_sc_mask(50, 30, 1, r)) CHECK(!row.empty());
  }
}

TEST_CASE("identity fully connected layer") {
  Layer l = fully_connected(3, 3);
  l.weights = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  const Network net({l});
  const Eigen::Vector3d x(1.0, -2.0, 0.5), dy(0.3, 0.2, -0.1);
  Tape tape;
  CHECK(net.forward(x, &tape) == Eigen::VectorXd(x));
  CHECK(net.backward(tape, dy, nullptr) == Eigen::VectorXd(dy));
  CHECK_THROWS_AS(net.forward(Eigen::VectorXd::Zero(2)), ConfigError);
  CHECK_THROWS_AS(Network({fully_connected(3, 4), fully_connected(3, 2)}), ConfigError);
}

TEST_CASE("sc layer keeps its mask") {
  Rng rng(52);
  const ScMask mask = make_sc_mask(20, 8, 3, rng);
  Network net({sparsely_connected(20, mask)});
  net.init_he_uniform(rng);
  const Eigen::MatrixXd conn = net.connectivity(0);
  CHECK((net.dense_weights(0).array() * (1.0 - conn.array())).isZero(0.0));

  Tape tape;
  const Eigen::VectorXd x = random_vector(20, rng);
  net.forward(x, &tape);
  Gradients g = net.zero_gradients();
  net.backward(tape, random_vector(8, rng), &g);
  CHECK(g[0].weights.size() == net.layers()[0].weights.size());

  AdamState st = AdamState::for_network(net, {});
  for (int s = 0; s < 50; ++s) {
    Gradients gs = net.zero_gradients();
    Tape t;
    net.forward(random_vector(20, rng), &t);
    net.backward(t, random_vector(8, rng), &gs);
    adam_step(net, st, gs);
  }
  CHECK((net.dense_weights(0).array() * (1.0 - conn.array())).isZero(0.0));
  CHECK(net.connectivity(0) == conn);
}

TEST_CASE("property: layer stacks match finite differences") {
  Rng rng(53);
  for (int trial = 0; trial < 10; ++trial) {
    const int a = rng.uniform_int(2, 8), b = rng.uniform_int(2, 8), c = rng.uniform_int(1, 5);
    Network net({fully_connected(a, b), leaky_relu(b), sparsely_connected(b, make_sc_mask(b, c + 2, 2, rng)),
                 leaky_relu(c + 2), fully_connected(c + 2, c)});
    net.init_he_uniform(rng);
    for (auto& l : net.layers()) {
      for (auto& v : l.bias) v = rng.normal(0.0, 0.1);
    }
    expect_gradients(net, random_vector(a, rng), random_vector(c, rng));
  }
}

TEST_CASE("conv layer matches finite differences") {
  Rng rng(54);
  Network net({conv2d(2, 3, 2, 2, 4, 4), leaky_relu(3 * 2 * 2), fully_connected(12, 1)});
  net.init_he_uniform(rng);
  expect_gradients(net, random_vector(32, rng), random_vector(1, rng));
}

TEST_CASE("arrangement network shapes follow the reference widths") {
  std::vector<std::string> names;
  for (int k = 0; k < 30; ++k) names.push_back("c" + std::to_string(k));
  const CategoryConfig cfg = CategoryConfig::uniform(names, 4, 119);
  Rng rng(56);
  const ArrangementNets nets = build_arrangement_nets(cfg, {10, 1.0, 4, 0.2}, rng);
  CHECK(stage_dims(nets.encoder) == std::vector<int>{120 * 128, 2000, 200, 1600, 200, 400, 80, 20});
  CHECK(stage_dims(nets.decoder) == std::vector<int>{10, 80, 400, 200, 1600, 200, 2000, 120 * 128});
  CHECK(nets.discriminator.output_dim() == 1);
}

TEST_CASE("small arrangement networks") {
  Rng rng(57);
  const auto cfg = small_config({2, 2, 1}, 2);
  const ArrangementNets nets = build_arrangement_nets(*cfg, {4, 0.05, 4, 0.2}, rng);
  const int in = cfg->rows() * cfg->num_objects();
  CHECK(nets.encoder.input_dim() == in);
  CHECK(nets.encoder.output_dim() == 8);
  const Eigen::VectorXd x = random_vector(in, rng);
  const GaussianCode code = split_code(nets.encoder.forward(x));
  CHECK(nets.decoder.forward(code.mu).size() == in);
  CHECK(nets.discriminator.forward(x).size() == 1);
  expect_gradients(nets.encoder, x, random_vector(8, rng));
  expect_gradients(nets.decoder, random_vector(4, rng), random_vector(in, rng));
}

TEST_CASE("image discriminator") {
  Rng rng(58);
  const Network d = build_image_discriminator(128, 8, rng);
  std::vector<int> sizes;
  for (const auto& l : d.layers()) {
    if (l.spec.kind == LayerKind::Conv2d) sizes.push_back(l.spec.out_height);
  }
  CHECK(sizes == std::vector<int>{64, 32, 16, 8});
  CHECK(d.output_dim() == 1);

  Network z = d;
  for (auto& v : z.layers().back().weights) v = 0.0;
  CHECK(z.forward(Eigen::VectorXd::Zero(128 * 128))(0) == 0.0);

  const Network small = build_image_discriminator(16, 2, rng);
  expect_gradients(small, random_vector(256, rng), random_vector(1, rng));
  CHECK_THROWS_AS(build_image_discriminator(40, 2, rng), ConfigError);
}

TEST_CASE("kl and reparameterization") {
  GaussianCode c{Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(3)};
  CHECK(kl_gaussian(c).value == 0.0);
  c.mu(0) = 1.0;
  CHECK(kl_gaussian(c).value == 0.5);

  Rng rng(59);
  GaussianCode r{random_vector(5, rng), random_vector(5, rng)};
  const KlTerm kl = kl_gaussian(r);
  Eigen::VectorXd joint(10);
  joint << r.mu, r.logvar;
  const Eigen::VectorXd num = numeric_gradient(
      [](const Eigen::VectorXd& v) { return kl_gaussian({v.head(5), v.tail(5)}).value; }, joint, 1e-6);
  for (int i = 0; i < 5; ++i) {
    CHECK(relative_error(kl.d_mu(i), num(i)) < 1e-8);
    CHECK(relative_error(kl.d_logvar(i), num(5 + i)) < 1e-8);
  }

  Eigen::VectorXd raw(4);
  raw << 0.5, -1.0, 20.0, -0.3;
  const GaussianCode s = split_code(raw);
  CHECK(s.logvar(0) == kLogvarMax);
  const Eigen::VectorXd g = join_code_gradient(raw, Eigen::Vector2d(1, 2), Eigen::Vector2d(3, 4));
  CHECK(g == Eigen::Vector4d(1, 2, 0, 4));

  const Eigen::VectorXd noise = random_vector(5, rng);
  CHECK(reparameterize(r, noise) == reparameterize(r, noise));
  CHECK(reparameterize({r.mu, Eigen::VectorXd::Constant(5, kLogvarMin)}, Eigen::VectorXd::Zero(5)) == r.mu);
}

TEST_CASE("adam") {
  Layer l = fully_connected(1, 1);
  l.weights = {0.0};
  Network net({l});
  AdamState st = AdamState::for_network(net, {});
  Gradients g = net.zero_gradients();
  adam_step(net, st, g);
  CHECK(st.step == 1);
  CHECK(net.layers()[0].weights[0] == 0.0);

  AdamState st2 = AdamState::for_network(net, {});
  g[0].weights[0] = 1.0;
  adam_step(net, st2, g);
  CHECK(net.layers()[0].weights[0] == doctest::Approx(-9.99999e-4).epsilon(1e-9));

  double prev = net.layers()[0].weights[0];
  bool monotone = true;
  for (int s = 0; s < 1000; ++s) {
    adam_step(net, st2, g);
    monotone = monotone && net.layers()[0].weights[0] < prev;
    prev = net.layers()[0].weights[0];
  }
  CHECK(monotone);

  VectorAdam va(2, {});
  Eigen::VectorXd p = Eigen::VectorXd::Zero(2);
  va.step(p, Eigen::Vector2d(1.0, -1.0));
  CHECK(p(0) == doctest::Approx(-1e-3));
  CHECK(p(1) == doctest::Approx(1e-3));
}

TEST_CASE("lipschitz control") {
  Rng rng(60);
  Network net({fully_connected(4, 3), leaky_relu(3), fully_connected(3, 1)});
  net.layers()[0].weights.assign(12, 0.005);
  const Network before = net;
  lipschitz_control(net, 0.01);
  CHECK(net == before);
  net.layers()[0].weights[0] = 0.5;
  lipschitz_control(net, 0.01);
  CHECK(net.layers()[0].weights[0] == 0.01);
  net.init_he_uniform(rng);
  lipschitz_control(net, 0.01);
  CHECK(max_abs_parameter(net) <= 0.01);
}
