#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include "refgov/csv.hpp"
#include "refgov/error.hpp"
#include "refgov/mlp.hpp"

namespace refgov {

void write_dataset_csv(std::ostream& os, const Dataset& d) {
  auto names = d.feature_names;
  names.push_back("v");
  write_csv_header(os, names);
  std::vector<double> row;
  for (int i = 0; i < d.rows(); ++i) {
    row.clear();
    for (Eigen::Index c = 0; c < d.X.cols(); ++c) row.push_back(d.X(i, c));
    row.push_back(d.y(i));
    write_csv_row(os, row);
  }
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  if (t.header.size() < 2 || t.header.back() != "v")
    throw SchemaError("dataset must end with a 'v' target column");
  Dataset d;
  d.feature_names.assign(t.header.begin(), t.header.end() - 1);
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  const auto w = static_cast<Eigen::Index>(d.feature_names.size());
  d.X.resize(n, w);
  d.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index c = 0; c < w; ++c) d.X(i, c) = t.rows[i][c];
    d.y(i) = t.rows[i][w];
  }
  return d;
}

SplitIndices split_rows(int n, std::uint64_t seed, const TrainParams& params) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed ^ 0x5eedf00dULL);
  std::shuffle(idx.begin(), idx.end(), rng);
  const int n_train = static_cast<int>(std::lround(params.train_fraction * n));
  const int n_val = static_cast<int>(std::lround(params.val_fraction * n));
  SplitIndices s;
  s.train.assign(idx.begin(), idx.begin() + n_train);
  s.val.assign(idx.begin() + n_train, idx.begin() + std::min(n, n_train + n_val));
  s.test.assign(idx.begin() + std::min(n, n_train + n_val), idx.end());
  return s;
}

double rmse(const MlpNetwork& net, const Dataset& data, const std::vector<int>& rows) {
  if (rows.empty()) return 0.0;
  double acc = 0.0;
  std::vector<double> f(data.X.cols());
  for (int i : rows) {
    for (Eigen::Index c = 0; c < data.X.cols(); ++c) f[c] = data.X(i, c);
    const double e = net.forward(f) - data.y(i);
    acc += e * e;
  }
  return std::sqrt(acc / rows.size());
}

namespace {

Eigen::MatrixXd gather_normalized(const Dataset& d, const std::vector<int>& rows,
                                  const Normalizer& fn) {
  Eigen::MatrixXd Z(rows.size(), d.X.cols());
  for (size_t r = 0; r < rows.size(); ++r)
    for (Eigen::Index c = 0; c < d.X.cols(); ++c)
      Z(r, c) = fn.normalize(static_cast<int>(c), d.X(rows[r], c));
  return Z;
}

Eigen::VectorXd gather_target(const Dataset& d, const std::vector<int>& rows, const Normalizer& tn) {
  Eigen::VectorXd t(rows.size());
  for (size_t r = 0; r < rows.size(); ++r) t(r) = tn.normalize(0, d.y(rows[r]));
  return t;
}

}  // namespace

TrainResult train(const Dataset& data, const std::vector<int>& hidden, std::uint64_t seed,
                  const TrainParams& params) {
  if (data.rows() < 10) throw ContractViolation("training needs at least 10 rows");
  if (data.y.size() != data.X.rows()) throw ContractViolation("dataset target size mismatch");

  TrainResult res;
  res.split = split_rows(data.rows(), seed, params);
  const auto& tr = res.split.train;
  const auto& va = res.split.val.empty() ? tr : res.split.val;

  Eigen::MatrixXd Xtr(tr.size(), data.X.cols());
  Eigen::MatrixXd ytr(tr.size(), 1);
  for (size_t r = 0; r < tr.size(); ++r) {
    Xtr.row(r) = data.X.row(tr[r]);
    ytr(r, 0) = data.y(tr[r]);
  }

  MlpNetwork net = MlpNetwork::create(static_cast<int>(data.X.cols()), hidden, seed);
  net.feature_norm() = Normalizer::fit_minmax(Xtr);
  net.target_norm() = Normalizer::fit_minmax(ytr);

  auto finish = [&](MlpNetwork&& best) {
    res.net = std::move(best);
    res.metrics.rmse_train = rmse(res.net, data, res.split.train);
    res.metrics.rmse_val = rmse(res.net, data, res.split.val);
    res.metrics.rmse_test = rmse(res.net, data, res.split.test);
    std::vector<int> all(data.rows());
    std::iota(all.begin(), all.end(), 0);
    res.metrics.rmse_pooled = rmse(res.net, data, all);
    return res;
  };

  // A constant target is fitted exactly by the output bias alone.
  if (ytr.maxCoeff() == ytr.minCoeff()) {
    net.layers().back().W.setZero();
    net.layers().back().b.setZero();
    return finish(std::move(net));
  }

  const Eigen::MatrixXd Ztr = gather_normalized(data, tr, net.feature_norm());
  const Eigen::VectorXd ttr = gather_target(data, tr, net.target_norm());
  const Eigen::MatrixXd Zva = gather_normalized(data, va, net.feature_norm());
  const Eigen::VectorXd tva = gather_target(data, va, net.target_norm());

  Eigen::VectorXd p = net.parameters();
  Eigen::VectorXd m = Eigen::VectorXd::Zero(p.size()), v = m, g;
  Eigen::VectorXd best = p;
  double best_val = std::numeric_limits<double>::infinity();
  int since_best = 0;
  double b1t = 1.0, b2t = 1.0;
  int epoch = 0;
  for (; epoch < params.max_epochs; ++epoch) {
    const double loss = mse_and_gradient(net, Ztr, ttr, g);
    if (!std::isfinite(loss) || !g.allFinite()) throw TrainingDiverged("non-finite loss", epoch);
    b1t *= params.beta1;
    b2t *= params.beta2;
    m = params.beta1 * m + (1.0 - params.beta1) * g;
    v = params.beta2 * v + (1.0 - params.beta2) * g.cwiseAbs2();
    const Eigen::VectorXd mhat = m / (1.0 - b1t);
    const Eigen::VectorXd vhat = v / (1.0 - b2t);
    p -= params.learning_rate * (mhat.array() / (vhat.array().sqrt() + params.adam_eps)).matrix();
    net.set_parameters(p);

    const double val = std::sqrt((net.forward_batch(Zva) - tva).squaredNorm() / tva.size());
    if (!std::isfinite(val)) throw TrainingDiverged("non-finite validation error", epoch);
    if (val < best_val) {
      best_val = val;
      best = p;
      res.metrics.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= params.patience) {
      ++epoch;
      break;
    }
  }
  res.metrics.epochs = epoch;
  net.set_parameters(best);
  return finish(std::move(net));
}

}  // namespace refgov
