#include "refgov/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <random>
#include <sstream>

#include "refgov/csv.hpp"
#include "refgov/error.hpp"

namespace refgov {

using nlohmann::json;

Normalizer Normalizer::fit_minmax(const Eigen::MatrixXd& data) {
  Normalizer n;
  for (Eigen::Index c = 0; c < data.cols(); ++c) {
    const double lo = data.col(c).minCoeff(), hi = data.col(c).maxCoeff();
    n.offset.push_back(0.5 * (lo + hi));
    n.scale.push_back(hi > lo ? 2.0 / (hi - lo) : 1.0);
  }
  return n;
}

Normalizer Normalizer::identity(int width) {
  return {std::vector<double>(width, 0.0), std::vector<double>(width, 1.0)};
}

MlpNetwork MlpNetwork::create(int input_width, const std::vector<int>& hidden, std::uint64_t seed) {
  if (input_width < 1) throw ContractViolation("input width must be >= 1");
  std::mt19937_64 rng(seed);
  MlpNetwork net;
  int in = input_width;
  std::vector<int> outs = hidden;
  outs.push_back(1);
  for (int out : outs) {
    if (out < 1) throw ContractViolation("layer width must be >= 1");
    const double a = std::sqrt(6.0 / (in + out));
    std::uniform_real_distribution<double> U(-a, a);
    Layer l{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out)};
    for (int i = 0; i < out; ++i)
      for (int j = 0; j < in; ++j) l.W(i, j) = U(rng);
    net.layers_.push_back(std::move(l));
    in = out;
  }
  net.feature_norm_ = Normalizer::identity(input_width);
  net.target_norm_ = Normalizer::identity(1);
  return net;
}

std::vector<int> MlpNetwork::widths() const {
  std::vector<int> w{input_width()};
  for (const auto& l : layers_) w.push_back(static_cast<int>(l.W.rows()));
  return w;
}

double MlpNetwork::forward_normalized(const Eigen::Ref<const Eigen::VectorXd>& z) const {
  Eigen::VectorXd a = z;
  for (size_t k = 0; k < layers_.size(); ++k) {
    Eigen::VectorXd h = layers_[k].W * a + layers_[k].b;
    if (k + 1 < layers_.size()) h = h.array().tanh();
    a = std::move(h);
  }
  return a(0);
}

double MlpNetwork::forward(std::span<const double> features) const {
  if (static_cast<int>(features.size()) != input_width())
    throw ContractViolation("feature width " + std::to_string(features.size()) +
                            " does not match network input " + std::to_string(input_width()));
  Eigen::VectorXd z(features.size());
  for (size_t c = 0; c < features.size(); ++c)
    z(c) = feature_norm_.normalize(static_cast<int>(c), features[c]);
  return target_norm_.denormalize(0, forward_normalized(z));
}

Eigen::VectorXd MlpNetwork::forward_batch(const Eigen::MatrixXd& Z) const {
  Eigen::MatrixXd a = Z;
  for (size_t k = 0; k < layers_.size(); ++k) {
    Eigen::MatrixXd h = a * layers_[k].W.transpose();
    h.rowwise() += layers_[k].b.transpose();
    if (k + 1 < layers_.size()) h = h.array().tanh();
    a = std::move(h);
  }
  return a.col(0);
}

int MlpNetwork::parameter_count() const {
  int n = 0;
  for (const auto& l : layers_) n += static_cast<int>(l.W.size() + l.b.size());
  return n;
}

Eigen::VectorXd MlpNetwork::parameters() const {
  Eigen::VectorXd p(parameter_count());
  int k = 0;
  for (const auto& l : layers_) {
    for (Eigen::Index i = 0; i < l.W.rows(); ++i)
      for (Eigen::Index j = 0; j < l.W.cols(); ++j) p(k++) = l.W(i, j);
    for (Eigen::Index i = 0; i < l.b.size(); ++i) p(k++) = l.b(i);
  }
  return p;
}

void MlpNetwork::set_parameters(const Eigen::VectorXd& p) {
  if (p.size() != parameter_count()) throw ContractViolation("parameter vector size mismatch");
  int k = 0;
  for (auto& l : layers_) {
    for (Eigen::Index i = 0; i < l.W.rows(); ++i)
      for (Eigen::Index j = 0; j < l.W.cols(); ++j) l.W(i, j) = p(k++);
    for (Eigen::Index i = 0; i < l.b.size(); ++i) l.b(i) = p(k++);
  }
}

double mse_and_gradient(const MlpNetwork& net, const Eigen::MatrixXd& Z, const Eigen::VectorXd& t,
                        Eigen::VectorXd& grad) {
  const auto& layers = net.layers();
  const size_t nl = layers.size();
  const double n = static_cast<double>(Z.rows());

  std::vector<Eigen::MatrixXd> acts;  // acts[0] = input, acts[k+1] = layer k output
  acts.reserve(nl + 1);
  acts.push_back(Z);
  for (size_t k = 0; k < nl; ++k) {
    Eigen::MatrixXd h = acts.back() * layers[k].W.transpose();
    h.rowwise() += layers[k].b.transpose();
    if (k + 1 < nl) h = h.array().tanh();
    acts.push_back(std::move(h));
  }
  const Eigen::VectorXd err = acts.back().col(0) - t;
  const double loss = err.squaredNorm() / n;

  std::vector<Eigen::MatrixXd> gW(nl);
  std::vector<Eigen::VectorXd> gb(nl);
  Eigen::MatrixXd delta = (2.0 / n) * err;  // dL/dH of the output layer, n x 1
  for (size_t k = nl; k-- > 0;) {
    gW[k] = delta.transpose() * acts[k];
    gb[k] = delta.colwise().sum().transpose();
    if (k > 0) {
      Eigen::MatrixXd back = delta * layers[k].W;
      delta = back.array() * (1.0 - acts[k].array().square());
    }
  }
  grad.resize(net.parameter_count());
  int p = 0;
  for (size_t k = 0; k < nl; ++k) {
    for (Eigen::Index i = 0; i < gW[k].rows(); ++i)
      for (Eigen::Index j = 0; j < gW[k].cols(); ++j) grad(p++) = gW[k](i, j);
    for (Eigen::Index i = 0; i < gb[k].size(); ++i) grad(p++) = gb[k](i);
  }
  return loss;
}

namespace {

json normalizer_json(const Normalizer& n) { return {{"offset", n.offset}, {"scale", n.scale}}; }

Normalizer normalizer_from(const json& j, int width, const char* what) {
  Normalizer n;
  n.offset = j.at("offset").get<std::vector<double>>();
  n.scale = j.at("scale").get<std::vector<double>>();
  if (n.width() != width || static_cast<int>(n.scale.size()) != width)
    throw SchemaError(std::string(what) + " width mismatch");
  for (double s : n.scale)
    if (!(s != 0.0) || !std::isfinite(s)) throw SchemaError(std::string(what) + " has a zero scale");
  return n;
}

}  // namespace

std::string network_to_json(const MlpNetwork& net) {
  json j;
  j["version"] = kWeightFileVersion;
  j["widths"] = net.widths();
  json act = json::array(), W = json::array(), B = json::array();
  const auto& layers = net.layers();
  for (size_t k = 0; k < layers.size(); ++k) {
    act.push_back(k + 1 < layers.size() ? "tanh" : "identity");
    std::vector<double> w;
    for (Eigen::Index r = 0; r < layers[k].W.rows(); ++r)
      for (Eigen::Index c = 0; c < layers[k].W.cols(); ++c) w.push_back(layers[k].W(r, c));
    W.push_back(w);
    B.push_back(std::vector<double>(layers[k].b.data(), layers[k].b.data() + layers[k].b.size()));
  }
  j["activation"] = act;
  j["weights"] = W;
  j["biases"] = B;
  j["feature_norm"] = normalizer_json(net.feature_norm());
  j["target_norm"] = normalizer_json(net.target_norm());
  return j.dump(1);
}

MlpNetwork network_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw CorruptFile(std::string("weight file does not parse: ") + e.what());
  }
  try {
    if (!j.is_object() || !j.contains("version")) throw SchemaError("weight file has no version");
    if (j.at("version").get<int>() != kWeightFileVersion)
      throw SchemaError("weight file version " + j.at("version").dump() + ", expected " +
                        std::to_string(kWeightFileVersion));
    const auto widths = j.at("widths").get<std::vector<int>>();
    const auto act = j.at("activation").get<std::vector<std::string>>();
    const auto W = j.at("weights").get<std::vector<std::vector<double>>>();
    const auto B = j.at("biases").get<std::vector<std::vector<double>>>();
    const size_t nl = widths.size() - 1;
    if (widths.size() < 2 || widths.back() != 1 || act.size() != nl || W.size() != nl ||
        B.size() != nl)
      throw SchemaError("inconsistent layer description");
    MlpNetwork net = MlpNetwork::create(widths[0], {widths.begin() + 1, widths.end() - 1}, 0);
    for (size_t k = 0; k < nl; ++k) {
      if (act[k] != (k + 1 < nl ? "tanh" : "identity"))
        throw SchemaError("unsupported activation '" + act[k] + "'");
      auto& l = net.layers()[k];
      if (W[k].size() != static_cast<size_t>(l.W.size()) || B[k].size() != static_cast<size_t>(l.b.size()))
        throw SchemaError("layer " + std::to_string(k) + " shape mismatch");
      for (Eigen::Index r = 0; r < l.W.rows(); ++r)
        for (Eigen::Index c = 0; c < l.W.cols(); ++c) l.W(r, c) = W[k][r * l.W.cols() + c];
      for (Eigen::Index r = 0; r < l.b.size(); ++r) l.b(r) = B[k][r];
    }
    net.feature_norm() = normalizer_from(j.at("feature_norm"), widths[0], "feature_norm");
    net.target_norm() = normalizer_from(j.at("target_norm"), 1, "target_norm");
    return net;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("weight file schema: ") + e.what());
  }
}

void save_network(const MlpNetwork& net, const std::filesystem::path& path) {
  write_file_atomic(path, network_to_json(net));
}

MlpNetwork load_network(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open weight file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return network_from_json(ss.str());
}

}  // namespace refgov
