#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ffd/tree.hpp"

namespace ffd {

enum class Activation { relu, tanh, logistic, identity };

Activation parse_activation(std::string_view s);
std::string_view to_string(Activation a);

struct MlpParams {
  std::vector<int> hidden_layers{25, 10};
  Activation activation = Activation::relu;
  double alpha = 1e-5;  // L2 penalty
  int batch_size = 0;   // 0: min(200, n)
  double learning_rate_init = 1e-3;
  int max_iter = 300;   // epochs
  double tol = 1e-6;
  int n_iter_no_change = 10;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Fully connected network with a softmax output. Inputs are standardised
// with the training mean/scale stored alongside the weights.
struct MlpModel {
  Activation activation = Activation::relu;
  std::vector<Eigen::MatrixXd> weights;  // [layer] fan_in x fan_out
  std::vector<Eigen::VectorXd> biases;
  Eigen::VectorXd input_mean;
  Eigen::VectorXd input_scale;
  std::vector<double> loss_curve;

  int n_classes() const { return static_cast<int>(weights.back().cols()); }
  std::vector<double> predict_proba(std::span<const double> x) const;
  // Row-wise class probabilities for already standardised inputs.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& standardised) const;
};

// Randomly initialised network (Glorot-uniform) with identity scaling.
MlpModel init_mlp(std::size_t n_features, int n_classes, const MlpParams& params, Rng& rng);

std::vector<double> flatten_parameters(const MlpModel& model);
void set_parameters(MlpModel& model, std::span<const double> flat);

// Mean cross-entropy plus alpha/(2n) * sum of squared weights on standardised
// inputs; fills the gradient (flattened like flatten_parameters) when given.
double mlp_loss(const MlpModel& model, const Eigen::MatrixXd& inputs, std::span<const int> labels, double alpha,
                std::vector<double>* gradient);

MlpModel fit_mlp(const FeatureMatrix& x, std::span<const int> labels, int n_classes, const MlpParams& params,
                 std::uint64_t seed);

}  // namespace ffd
