#include "ffd/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "ffd/error.hpp"

namespace ffd {

Activation parse_activation(std::string_view s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  if (s == "logistic") return Activation::logistic;
  if (s == "identity") return Activation::identity;
  throw InputError(fmt::format("unknown activation '{}'", s));
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::logistic: return "logistic";
    case Activation::identity: return "identity";
  }
  return "?";
}

namespace {

void activate(Activation a, Eigen::MatrixXd& z) {
  switch (a) {
    case Activation::relu: z = z.cwiseMax(0.0); break;
    case Activation::tanh: z = z.array().tanh().matrix(); break;
    case Activation::logistic: z = (1.0 / (1.0 + (-z.array()).exp())).matrix(); break;
    case Activation::identity: break;
  }
}

// Derivative expressed through the activation output.
void scale_by_derivative(Activation a, const Eigen::MatrixXd& out, Eigen::MatrixXd& delta) {
  switch (a) {
    case Activation::relu: delta = (out.array() > 0.0).select(delta.array(), 0.0).matrix(); break;
    case Activation::tanh: delta = (delta.array() * (1.0 - out.array().square())).matrix(); break;
    case Activation::logistic: delta = (delta.array() * out.array() * (1.0 - out.array())).matrix(); break;
    case Activation::identity: break;
  }
}

void softmax_rows(Eigen::MatrixXd& z) {
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double top = z.row(i).maxCoeff();
    z.row(i) = (z.row(i).array() - top).exp().matrix();
    z.row(i) /= z.row(i).sum();
  }
}

// Activations of every layer; the last entry holds the class probabilities.
std::vector<Eigen::MatrixXd> forward_all(const MlpModel& m, const Eigen::MatrixXd& input) {
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(m.weights.size() + 1);
  acts.push_back(input);
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    Eigen::MatrixXd z = acts.back() * m.weights[l];
    z.rowwise() += m.biases[l].transpose();
    if (l + 1 < m.weights.size()) activate(m.activation, z);
    else softmax_rows(z);
    acts.push_back(std::move(z));
  }
  return acts;
}

struct Gradients {
  std::vector<Eigen::MatrixXd> w;
  std::vector<Eigen::VectorXd> b;
};

double loss_and_grads(const MlpModel& m, const Eigen::MatrixXd& input, std::span<const int> labels,
                      double alpha, Gradients* grads) {
  const auto acts = forward_all(m, input);
  const Eigen::MatrixXd& proba = acts.back();
  const auto n = static_cast<double>(input.rows());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < proba.rows(); ++i)
    loss -= std::log(std::max(proba(i, labels[static_cast<std::size_t>(i)]), 1e-300));
  loss /= n;
  double sq = 0.0;
  for (const auto& w : m.weights) sq += w.squaredNorm();
  loss += 0.5 * alpha * sq / n;
  if (!grads) return loss;

  const std::size_t layers = m.weights.size();
  grads->w.resize(layers);
  grads->b.resize(layers);
  Eigen::MatrixXd delta = proba;
  for (Eigen::Index i = 0; i < delta.rows(); ++i) delta(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
  delta /= n;
  for (std::size_t l = layers; l-- > 0;) {
    grads->w[l] = acts[l].transpose() * delta + (alpha / n) * m.weights[l];
    grads->b[l] = delta.colwise().sum().transpose();
    if (l > 0) {
      Eigen::MatrixXd back = delta * m.weights[l].transpose();
      scale_by_derivative(m.activation, acts[l], back);
      delta = std::move(back);
    }
  }
  return loss;
}

Eigen::MatrixXd standardise(const MlpModel& m, const FeatureMatrix& x, std::span<const std::size_t> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(x.cols));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < x.cols; ++c) {
      const auto ci = static_cast<Eigen::Index>(c);
      out(static_cast<Eigen::Index>(r), ci) = (x(rows[r], c) - m.input_mean(ci)) / m.input_scale(ci);
    }
  return out;
}

}  // namespace

Eigen::MatrixXd MlpModel::forward(const Eigen::MatrixXd& standardised) const {
  return forward_all(*this, standardised).back();
}

std::vector<double> MlpModel::predict_proba(std::span<const double> x) const {
  Eigen::MatrixXd row(1, static_cast<Eigen::Index>(x.size()));
  for (std::size_t c = 0; c < x.size(); ++c) {
    const auto ci = static_cast<Eigen::Index>(c);
    row(0, ci) = (x[c] - input_mean(ci)) / input_scale(ci);
  }
  const Eigen::MatrixXd p = forward(row);
  return {p.data(), p.data() + p.size()};
}

MlpModel init_mlp(std::size_t n_features, int n_classes, const MlpParams& params, Rng& rng) {
  MlpModel m;
  m.activation = params.activation;
  std::vector<Eigen::Index> sizes{static_cast<Eigen::Index>(n_features)};
  for (int h : params.hidden_layers) {
    if (h < 1) throw InputError("hidden layer sizes must be positive");
    sizes.push_back(h);
  }
  sizes.push_back(n_classes);
  const double factor = params.activation == Activation::logistic ? 2.0 : 6.0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const double bound = std::sqrt(factor / static_cast<double>(sizes[l] + sizes[l + 1]));
    std::uniform_real_distribution<double> u(-bound, bound);
    Eigen::MatrixXd w(sizes[l], sizes[l + 1]);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = u(rng);
    Eigen::VectorXd b(sizes[l + 1]);
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = u(rng);
    m.weights.push_back(std::move(w));
    m.biases.push_back(std::move(b));
  }
  m.input_mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_features));
  m.input_scale = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n_features));
  return m;
}

std::vector<double> flatten_parameters(const MlpModel& model) {
  std::vector<double> flat;
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    flat.insert(flat.end(), model.weights[l].data(), model.weights[l].data() + model.weights[l].size());
    flat.insert(flat.end(), model.biases[l].data(), model.biases[l].data() + model.biases[l].size());
  }
  return flat;
}

void set_parameters(MlpModel& model, std::span<const double> flat) {
  std::size_t pos = 0;
  auto take = [&](double* dst, Eigen::Index size) {
    const auto count = static_cast<std::size_t>(size);
    if (pos + count > flat.size()) throw InputError("parameter vector too short");
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), count, dst);
    pos += count;
  };
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    take(model.weights[l].data(), model.weights[l].size());
    take(model.biases[l].data(), model.biases[l].size());
  }
  if (pos != flat.size()) throw InputError("parameter vector too long");
}

double mlp_loss(const MlpModel& model, const Eigen::MatrixXd& inputs, std::span<const int> labels, double alpha,
                std::vector<double>* gradient) {
  if (!gradient) return loss_and_grads(model, inputs, labels, alpha, nullptr);
  Gradients g;
  const double loss = loss_and_grads(model, inputs, labels, alpha, &g);
  gradient->clear();
  for (std::size_t l = 0; l < g.w.size(); ++l) {
    gradient->insert(gradient->end(), g.w[l].data(), g.w[l].data() + g.w[l].size());
    gradient->insert(gradient->end(), g.b[l].data(), g.b[l].data() + g.b[l].size());
  }
  return loss;
}

MlpModel fit_mlp(const FeatureMatrix& x, std::span<const int> labels, int n_classes, const MlpParams& params,
                 std::uint64_t seed) {
  const std::size_t n = x.rows;
  if (n == 0) throw InputError("MLP needs at least one sample");
  if (n_classes < 2) throw InputError("MLP needs at least two classes");
  if (params.max_iter < 1) throw InputError("max_iter must be at least 1");

  Rng rng = make_rng(seed, 0);
  MlpModel m = init_mlp(x.cols, n_classes, params, rng);
  for (std::size_t c = 0; c < x.cols; ++c) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += x(i, c);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (x(i, c) - mean) * (x(i, c) - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    m.input_mean(static_cast<Eigen::Index>(c)) = mean;
    m.input_scale(static_cast<Eigen::Index>(c)) = sd > 1e-12 ? sd : 1.0;
  }

  const std::size_t batch = params.batch_size > 0 ? std::min<std::size_t>(static_cast<std::size_t>(params.batch_size), n)
                                                  : std::min<std::size_t>(200, n);
  const std::size_t layers = m.weights.size();
  std::vector<Eigen::MatrixXd> mw(layers), vw(layers);
  std::vector<Eigen::VectorXd> mb(layers), vb(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    mw[l] = vw[l] = Eigen::MatrixXd::Zero(m.weights[l].rows(), m.weights[l].cols());
    mb[l] = vb[l] = Eigen::VectorXd::Zero(m.biases[l].size());
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<int> batch_labels;
  double best_loss = std::numeric_limits<double>::infinity();
  int no_improvement = 0;
  long step = 0;
  Gradients g;
  for (int epoch = 0; epoch < params.max_iter; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(n, start + batch);
      std::span<const std::size_t> rows(order.data() + start, stop - start);
      const Eigen::MatrixXd input = standardise(m, x, rows);
      batch_labels.clear();
      for (std::size_t r : rows) batch_labels.push_back(labels[r]);
      epoch_loss += loss_and_grads(m, input, batch_labels, params.alpha, &g) * static_cast<double>(rows.size());

      ++step;
      const double lr = params.learning_rate_init * std::sqrt(1.0 - std::pow(params.beta2, step)) /
                        (1.0 - std::pow(params.beta1, step));
      for (std::size_t l = 0; l < layers; ++l) {
        mw[l] = params.beta1 * mw[l] + (1.0 - params.beta1) * g.w[l];
        vw[l] = params.beta2 * vw[l] + (1.0 - params.beta2) * g.w[l].cwiseProduct(g.w[l]);
        mb[l] = params.beta1 * mb[l] + (1.0 - params.beta1) * g.b[l];
        vb[l] = params.beta2 * vb[l] + (1.0 - params.beta2) * g.b[l].cwiseProduct(g.b[l]);
        m.weights[l].array() -= lr * mw[l].array() / (vw[l].array().sqrt() + params.epsilon);
        m.biases[l].array() -= lr * mb[l].array() / (vb[l].array().sqrt() + params.epsilon);
      }
    }
    epoch_loss /= static_cast<double>(n);
    m.loss_curve.push_back(epoch_loss);

    if (epoch_loss > best_loss - params.tol) ++no_improvement;
    else no_improvement = 0;
    best_loss = std::min(best_loss, epoch_loss);
    if (no_improvement > params.n_iter_no_change) break;
  }
  return m;
}

}  // namespace ffd
