#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "refgov/error.hpp"
#include "refgov/mlp.hpp"

using namespace refgov;

namespace {

MlpNetwork tiny_net() {
  MlpNetwork net = MlpNetwork::create(2, {1}, 1);
  net.layers()[0].W << 0.5, -0.25;
  net.layers()[0].b << 0.1;
  net.layers()[1].W << 2.0;
  net.layers()[1].b << -0.3;
  return net;
}

Dataset sine_data(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-M_PI, M_PI);
  Dataset d{{"x"}, Eigen::MatrixXd(n, 1), Eigen::VectorXd(n)};
  for (int i = 0; i < n; ++i) {
    d.X(i, 0) = U(rng);
    d.y(i) = std::sin(d.X(i, 0));
  }
  return d;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("refgov_test_" + name);
}

}  // namespace

TEST_CASE("forward pass on a hand-set network") {
  const MlpNetwork net = tiny_net();
  const double in[2] = {1.0, 2.0};
  CHECK(net.forward(in) == doctest::Approx(2.0 * std::tanh(0.1) - 0.3).epsilon(1e-15));
  CHECK(net.parameter_count() == 5);
  CHECK(net.widths() == std::vector<int>{2, 1, 1});
  const double bad[3] = {1.0, 2.0, 3.0};
  CHECK_THROWS_AS(net.forward(bad), ContractViolation);
}

TEST_CASE("normalization is applied on both ends") {
  MlpNetwork net = tiny_net();
  net.feature_norm() = {{1.0, -1.0}, {2.0, 0.5}};
  net.target_norm() = {{3.0}, {0.25}};
  const double in[2] = {1.5, 3.0};
  // z = ((1.5-1)*2, (3+1)*0.5) = (1, 2); output = 4 * (2 tanh(0.1) - 0.3) + 3.
  CHECK(net.forward(in) == doctest::Approx(4.0 * (2.0 * std::tanh(0.1) - 0.3) + 3.0).epsilon(1e-14));
}

TEST_CASE("Normalizer round trip and range") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> N(3.0, 10.0);
  Eigen::MatrixXd data(50, 3);
  for (int i = 0; i < 50; ++i)
    for (int c = 0; c < 3; ++c) data(i, c) = c == 2 ? 7.0 : N(rng);
  const Normalizer n = Normalizer::fit_minmax(data);
  CHECK(n.scale[2] == 1.0);
  for (int c = 0; c < 2; ++c) {
    double lo = 1e9, hi = -1e9;
    for (int i = 0; i < 50; ++i) {
      const double z = n.normalize(c, data(i, c));
      lo = std::min(lo, z);
      hi = std::max(hi, z);
      CHECK(n.denormalize(c, z) == doctest::Approx(data(i, c)).epsilon(1e-13));
    }
    CHECK(lo == doctest::Approx(-1.0));
    CHECK(hi == doctest::Approx(1.0));
  }
}

TEST_CASE("gradient matches central differences") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> N(0.0, 1.0);
  for (const auto& hidden : {std::vector<int>{1}, std::vector<int>{4, 3}}) {
    MlpNetwork net = MlpNetwork::create(2, hidden, 5);
    Eigen::VectorXd p = net.parameters();
    for (Eigen::Index k = 0; k < p.size(); ++k) p(k) += 0.1 * N(rng);
    net.set_parameters(p);
    Eigen::MatrixXd Z(7, 2);
    Eigen::VectorXd t(7);
    for (int i = 0; i < 7; ++i) {
      Z(i, 0) = N(rng);
      Z(i, 1) = N(rng);
      t(i) = N(rng);
    }
    Eigen::VectorXd g;
    mse_and_gradient(net, Z, t, g);
    REQUIRE(g.size() == p.size());
    Eigen::VectorXd scratch;
    for (Eigen::Index k = 0; k < p.size(); ++k) {
      const double h = 1e-6;
      Eigen::VectorXd pp = p, pm = p;
      pp(k) += h;
      pm(k) -= h;
      net.set_parameters(pp);
      const double fp = mse_and_gradient(net, Z, t, scratch);
      net.set_parameters(pm);
      const double fm = mse_and_gradient(net, Z, t, scratch);
      CHECK(g(k) == doctest::Approx((fp - fm) / (2 * h)).epsilon(1e-6));
    }
    net.set_parameters(p);
  }
}

TEST_CASE("mse of the hand-set network") {
  const MlpNetwork net = tiny_net();
  Eigen::MatrixXd Z(2, 2);
  Z << 1.0, 2.0, 0.0, 0.0;
  Eigen::VectorXd t(2);
  t << 0.0, 1.0;
  const double o1 = 2.0 * std::tanh(0.1) - 0.3, o2 = o1;
  const double expect = 0.5 * (o1 * o1 + (o2 - 1.0) * (o2 - 1.0));
  Eigen::VectorXd g;
  CHECK(mse_and_gradient(net, Z, t, g) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("split_rows partitions the index set") {
  const SplitIndices s = split_rows(1000, 42, TrainParams{});
  CHECK(s.train.size() == 700);
  CHECK(s.val.size() == 150);
  CHECK(s.test.size() == 150);
  std::set<int> all(s.train.begin(), s.train.end());
  all.insert(s.val.begin(), s.val.end());
  all.insert(s.test.begin(), s.test.end());
  CHECK(all.size() == 1000);
  CHECK(split_rows(1000, 42, TrainParams{}).train == s.train);
  CHECK(split_rows(1000, 43, TrainParams{}).train != s.train);
}

TEST_CASE("training fits a sine") {
  const Dataset d = sine_data(400, 1);
  TrainParams p;
  p.max_epochs = 3000;
  p.patience = 200;
  const TrainResult r = train(d, {16}, 7, p);
  CHECK(r.metrics.rmse_test < 0.05);
  CHECK(r.metrics.rmse_val < 0.05);
  CHECK(r.metrics.best_epoch <= r.metrics.epochs);
  CHECK(rmse(r.net, d, r.split.test) == doctest::Approx(r.metrics.rmse_test).epsilon(1e-12));

  SUBCASE("deterministic for a fixed seed") {
    const TrainResult again = train(d, {16}, 7, p);
    CHECK(again.net.parameters() == r.net.parameters());
    CHECK(again.metrics.rmse_test == r.metrics.rmse_test);
  }
}

TEST_CASE("constant target trains to the constant") {
  Dataset d{{"a", "b"}, Eigen::MatrixXd::Random(60, 2), Eigen::VectorXd::Constant(60, 2.5)};
  const TrainResult r = train(d, {4}, 3);
  const double in[2] = {0.3, -0.7};
  CHECK(r.net.forward(in) == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(r.metrics.rmse_pooled < 1e-12);
}

TEST_CASE("diverging learning rate is reported") {
  const Dataset d = sine_data(100, 2);
  TrainParams p;
  p.learning_rate = 1e300;
  p.max_epochs = 50;
  CHECK_THROWS_AS(train(d, {8}, 1, p), TrainingDiverged);
}

TEST_CASE("weight files") {
  MlpNetwork net = MlpNetwork::create(3, {5, 4}, 11);
  net.feature_norm() = {{0.1, 0.2, 0.3}, {1.0 / 3.0, 2.0, 7.0}};
  net.target_norm() = {{-0.5}, {0.1}};
  const auto path = temp_file("weights.json");

  SUBCASE("save/load is bit-exact") {
    save_network(net, path);
    const MlpNetwork back = load_network(path);
    CHECK(back.parameters() == net.parameters());
    CHECK(back.feature_norm().scale == net.feature_norm().scale);
    CHECK(back.target_norm().offset == net.target_norm().offset);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> U(-3.0, 3.0);
    for (int k = 0; k < 100; ++k) {
      const double in[3] = {U(rng), U(rng), U(rng)};
      CHECK(back.forward(in) == net.forward(in));
    }
  }
  SUBCASE("wrong version") {
    std::string text = network_to_json(net);
    const auto pos = text.find("\"version\"");
    REQUIRE(pos != std::string::npos);
    const auto colon = text.find(':', pos);
    text.replace(colon + 1, text.find_first_of(",}", colon) - colon - 1, "2");
    CHECK_THROWS_AS(network_from_json(text), SchemaError);
  }
  SUBCASE("truncated file") {
    const std::string text = network_to_json(net);
    {
      std::ofstream f(path);
      f << text.substr(0, text.size() / 2);
    }
    CHECK_THROWS_AS(load_network(path), CorruptFile);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_network(temp_file("does_not_exist.json")), Error);
  }
  std::filesystem::remove(path);
}
