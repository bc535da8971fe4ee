#pragma once

// Plaintext comparison of losses across network depths: gradient size at
// initialization and accuracy after mini-batch training.

#include <string>
#include <vector>

#include "revolver/data_io.hpp"
#include "revolver/nn.hpp"

namespace revolver::pipeline {

/// Layer sizes for a network with `depth` weight layers: in, 32, 16, 16, ..., classes.
std::vector<std::size_t> arch_for_depth(std::size_t depth, std::size_t in, std::size_t classes);

/// NAG over consecutive mini-batches (the tail batch is dropped), constant
/// step cfg.learning_rate. Returns the reported iterate V.
nn::Weights train_epochs(const nn::NetworkConfig& cfg, const Matrix& x, const std::vector<int>& y,
                         int epochs, std::size_t batch);

/// Mean |dL/dW| of the first weight layer at the seed's initial weights.
double first_layer_grad(const nn::NetworkConfig& cfg, const Matrix& x, const std::vector<int>& y);

struct LossStudyOptions {
  std::vector<std::size_t> depths{1, 3};
  std::vector<nn::Loss> losses{nn::Loss::bce, nn::Loss::sle, nn::Loss::msle};
  int seeds = 20;
  int epochs = 30;
  std::size_t batch = 128;
  /// Each (depth, loss) takes the rate with the best mean training
  /// accuracy over the first `tune_seeds` seeds.
  std::vector<double> lr_grid{0.001, 0.003, 0.01, 0.03, 0.1, 0.3, 1.0, 3.0};
  int tune_seeds = 5;
  /// Samples used for the initial-gradient measurement.
  std::size_t grad_samples = 128;
};

struct LossStudyRow {
  std::size_t depth = 0;
  std::string dims;
  int seed = 0;
  nn::Loss loss = nn::Loss::bce;
  double lr = 0.0;
  double init_grad = 0.0;
  double train_acc = 0.0;
  double test_acc = 0.0;

  bool operator==(const LossStudyRow&) const = default;
};

std::vector<LossStudyRow> loss_study(const LossStudyOptions& opts, const data::Dataset& train,
                                     const data::Dataset& test);

void write_loss_study_csv(const std::string& path, const std::vector<LossStudyRow>& rows);

}  // namespace revolver::pipeline
