#pragma once

// Training under the simulator, and the plaintext path it is checked
// against.
//
// Every layer shares one padded width, chosen so each product takes the
// two-level Volley Revolver path. Activations carry the bias node in
// column 0 and their values in columns [1, width]; the output layer and
// the labels start at column 0. Weights are stored in the replicated
// layout, which is also what the gradient kernel emits, so the update is
// slot-wise.

#include <functional>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "revolver/encoding.hpp"
#include "revolver/he.hpp"
#include "revolver/matmul.hpp"
#include "revolver/nn.hpp"

namespace revolver::pipeline {

using enc::PackedMatrix;

struct IterationRecord {
  int iter = 0;
  double loss = std::numeric_limits<double>::quiet_NaN();
  double precision = std::numeric_limits<double>::quiet_NaN();
  /// Lowest level across the weight ciphertexts after the iteration; -1 on
  /// the plaintext path.
  int min_level = -1;
  he::OpCounts ops;
  double wall_ms = 0.0;
};

struct TrainHistory {
  std::vector<IterationRecord> records;
  /// The reported model (NAG iterate V) after the last completed iteration.
  nn::Weights weights;
};

void write_history_csv(std::ostream& out, const TrainHistory& h);
void write_history_csv(const std::string& path, const TrainHistory& h);

struct Report {
  double loss = std::numeric_limits<double>::quiet_NaN();
  double precision = std::numeric_limits<double>::quiet_NaN();
};
using Reporter = std::function<Report(const nn::Weights&)>;

/// Loss and precision of the weights on a plaintext batch.
Reporter batch_reporter(const nn::NetworkConfig& cfg, const Matrix& x, const std::vector<int>& y);

struct TrainOptions {
  bool bootstrap = false;
  mm::Exec exec = mm::Exec::parallel;
  /// Called with the decrypted model after each iteration; may be empty.
  Reporter report;
};

/// Zero weights for a single layer, Xavier-uniform from cfg.seed otherwise.
nn::Weights initial_weights(const nn::NetworkConfig& cfg);

/// Smallest padded width that gives every layer of `dims` the two-level
/// product path.
std::size_t choose_padded_cols(const he::HEParams& params, const std::vector<std::size_t>& dims);

struct EncryptedTrainState {
  PackedMatrix X;
  PackedMatrix Y;
  /// Empty unless the preconditioner is enabled.
  PackedMatrix Bbar;
  std::vector<PackedMatrix> V;
  std::vector<PackedMatrix> W;
  int iteration = 0;
  /// Momentum coefficients only; the weights live in W and V.
  nn::NAGState momentum = nn::nag_init({});
  he::OpCounts op_counts;
  int min_level = 0;
  std::size_t n = 0;
  std::size_t classes = 0;
  /// Records of the iterations completed so far.
  std::vector<IterationRecord> history;
};

/// X is n x d without a bias column; labels index cfg.layer_dims.back()
/// classes.
EncryptedTrainState pack_batch(he::Evaluator& ev, const Matrix& x, const std::vector<int>& y,
                               const nn::NetworkConfig& cfg);

/// Runs cfg.iterations iterations. On LevelExhausted the state keeps the
/// last completed iteration and the exception carries the failing
/// iteration and stage.
TrainHistory train_encrypted_sim(he::Evaluator& ev, EncryptedTrainState& state,
                                 const nn::NetworkConfig& cfg, const TrainOptions& opts = {});

/// Decrypts weight ciphertexts (reporting only).
nn::Weights decrypt_weights(const he::Evaluator& ev, const std::vector<PackedMatrix>& w);

/// The same iteration on plain matrices.
TrainHistory train_plain(const nn::NetworkConfig& cfg, const Matrix& x, const std::vector<int>& y,
                         const TrainOptions& opts = {});

struct PathComparison {
  TrainHistory plain;
  TrainHistory encrypted;
  /// Max |V_plain - V_encrypted| per layer.
  std::vector<double> layer_max_diff;
  /// |loss_plain - loss_encrypted| per iteration.
  std::vector<double> loss_diff;

  double max_weight_diff() const;
};

PathComparison compare_paths(he::Evaluator& ev, nn::NetworkConfig cfg, const Matrix& x,
                             const std::vector<int>& y, int iterations, const TrainOptions& opts = {});

}  // namespace revolver::pipeline
