#pragma once

// Fully connected network with bias nodes, its losses and gradients, and
// the Nesterov optimizer. Everything here is plaintext; the encrypted
// pipeline mirrors these formulas.
//
// Layer l maps a^(l) (n x dims[l], with a leading column of ones
// prepended) to z^(l+1) = [1 a^(l)] W[l]ᵀ. Column 0 of every W[l] is the
// bias weight.

#include <cstdint>
#include <string>
#include <vector>

#include "revolver/approx.hpp"
#include "revolver/matrix.hpp"

namespace revolver::nn {

using approx::Activation;

enum class Loss { bce, sle, msle, softmax_ce };

Loss parse_loss(const std::string& name);
std::string to_string(Loss l);

enum class StepSchedule {
  constant,
  /// lr * (1 + 1 / (n * k)) at iteration k.
  decaying,
};

struct NetworkConfig {
  std::vector<std::size_t> layer_dims{64, 32, 16, 10};
  /// One per weight layer. Defaults: quadratic, cubic, sigmoid.
  std::vector<Activation> activations;
  Loss loss = Loss::bce;
  double learning_rate = 1.0;
  int iterations = 1;
  bool use_preconditioner = false;
  StepSchedule schedule = StepSchedule::constant;
  std::uint64_t seed = 1;

  std::size_t num_layers() const { return layer_dims.size() - 1; }
  /// Fills default activations and checks the configuration.
  void validate();
};

NetworkConfig default_config();
/// Multiclass logistic regression: a single [d, c] layer with `output` as
/// its activation.
NetworkConfig mlr_config(std::size_t d, std::size_t c, Activation output = Activation::sigmoid);

using Weights = std::vector<Matrix>;

/// Zero weights when `zero`, else Xavier-uniform U[-r, r],
/// r = sqrt(6 / (fan_in + fan_out)), from a seeded generator.
Weights init_weights(const std::vector<std::size_t>& dims, std::uint64_t seed, bool zero);

/// [1 M].
Matrix with_bias(const Matrix& m);

struct ForwardTrace {
  /// z[l] for l = 1..L stored at index l-1.
  std::vector<Matrix> z;
  /// a[0] = X, a[l] = act(z[l]); no bias column.
  std::vector<Matrix> a;

  const Matrix& output() const { return a.back(); }
};

ForwardTrace forward(const Weights& w, const std::vector<Activation>& acts, const Matrix& x);

/// Predictions for the configured loss: softmax of the last pre-activation
/// for softmax_ce, the output activation otherwise.
Matrix predictions(const ForwardTrace& t, Loss loss);

constexpr double kProbEpsilon = 1e-12;

double bce_loss(const Matrix& p, const Matrix& y);
/// Sum over samples and classes of (y - p)^2.
double sle_loss(const Matrix& p, const Matrix& y);
/// sle_loss / n.
double msle_loss(const Matrix& p, const Matrix& y);
/// Mean cross-entropy of softmax(z).
double softmax_ce_loss(const Matrix& z, const Matrix& y);
double loss_value(Loss kind, const ForwardTrace& t, const Matrix& y);

Matrix softmax_rows(const Matrix& z);

/// (P - Y) / n.
Matrix bce_output_delta(const Matrix& p, const Matrix& y, std::size_t n);

/// dLoss / dz at the output layer.
Matrix output_delta(Loss kind, const ForwardTrace& t, const Matrix& y, Activation output);

/// Gradients of the loss with respect to every W[l], given dLoss/dz at the
/// output.
Weights backward(const ForwardTrace& t, const Matrix& delta_out, const Weights& w,
                 const std::vector<Activation>& acts);

/// Per-coordinate scale for the layer fed by X (X includes any bias
/// column): H = -X'X / 4, B[j] = 1 / (eps + sum_i |H[i][j]|), repeated on
/// `classes` rows.
Matrix build_preconditioner(const Matrix& x, std::size_t classes, double epsilon = 1e-10);

struct NAGState {
  /// Plain iterate; the model that is reported.
  Weights V;
  /// Extrapolated point where the next gradient is taken.
  Weights W;
  double alpha0 = 0.01;
  double alpha1 = 0.0;
  int count = 0;
};

NAGState nag_init(const Weights& w0);

double nag_eta(const NAGState& s);
double step_size(StepSchedule schedule, double lr, std::size_t n, int k);

/// One update with a gradient G taken at state.W:
///   w_temp = W - step * G
///   W <- (1 - eta) w_temp + eta V,  V <- w_temp
/// then the alpha recurrence.
void nag_step(NAGState& state, const Weights& grads, double step);

/// Fraction of rows whose argmax (lowest index on ties) equals the label.
double precision(const Matrix& p, const std::vector<int>& labels);
std::vector<int> argmax_rows(const Matrix& p);

}  // namespace revolver::nn
