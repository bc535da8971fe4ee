#include "revolver/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "revolver/data_io.hpp"

namespace revolver::pipeline {

namespace {

using approx::Activation;
using Clock = std::chrono::steady_clock;

class Iteration {
 public:
  Iteration(he::Evaluator& ev, const TrainOptions& opts, int iteration)
      : ev_(ev), opts_(opts), iteration_(iteration) {}

  /// Runs f, tagging a budget failure with the iteration and stage.
  template <typename F>
  auto stage(const std::string& name, F&& f) {
    try {
      return f();
    } catch (const LevelExhausted& e) {
      throw LevelExhausted(std::string(e.what()) + " [iteration " + std::to_string(iteration_) +
                               ", " + name + "]",
                           iteration_, name);
    }
  }

  /// Bootstraps when the operand cannot afford `need` more levels.
  PackedMatrix ready(const PackedMatrix& pm, int need) {
    if (opts_.bootstrap && pm.min_level() < need) return enc::bootstrap(ev_, pm);
    return pm;
  }

  PackedMatrix map(const PackedMatrix& pm, const std::function<he::Ciphertext(const he::Ciphertext&)>& f) {
    PackedMatrix out = pm;
    for (auto& ct : out.cts) ct = f(ct);
    return out;
  }

  PackedMatrix zip(const PackedMatrix& a, const PackedMatrix& b,
                   he::Ciphertext (he::Evaluator::*op)(const he::Ciphertext&, const he::Ciphertext&)) {
    if (a.team_size() != b.team_size() || a.padded_cols != b.padded_cols) {
      throw ShapeMismatch("slot-wise operands differ in layout");
    }
    PackedMatrix out = a;
    for (std::size_t q = 0; q < a.team_size(); ++q) out.cts[q] = (ev_.*op)(a.cts[q], b.cts[q]);
    return out;
  }

  PackedMatrix activation(Activation a, const PackedMatrix& z) {
    const int depth = approx::activation_depth(a);
    const PackedMatrix in = ready(z, depth);
    if (a == Activation::extended_sigmoid) {
      const auto& s = approx::default_extended_sigmoid();
      return map(in, [&](const he::Ciphertext& ct) { return approx::eval_extended_encrypted(ev_, s, ct); });
    }
    const auto& p = approx::activation_polynomial(a);
    return map(in, [&](const he::Ciphertext& ct) { return approx::eval_poly_encrypted(ev_, p, ct); });
  }

  /// d act / dz, from z for polynomials and from the activation value a
  /// (as a - a*a) for sigmoid-like outputs.
  PackedMatrix activation_slope(Activation a, const PackedMatrix& z, const PackedMatrix& value) {
    if (a == Activation::extended_sigmoid) {
      const PackedMatrix v = ready(value, 1);
      return zip(v, zip(v, v, &he::Evaluator::mult), &he::Evaluator::sub);
    }
    const auto d = approx::activation_polynomial(a).derivative();
    const PackedMatrix in = ready(z, d.degree());
    return map(in, [&](const he::Ciphertext& ct) { return approx::eval_poly_encrypted(ev_, d, ct); });
  }

  /// Puts the constant 1 in column 0 of every row.
  PackedMatrix set_bias(const PackedMatrix& a, double value_at_zero) {
    const auto mask = enc::make_mask(ev_.slots(), a.padded_cols, [&](std::size_t, std::size_t c) {
      return c == 0 ? 1.0 - value_at_zero : 0.0;
    });
    return map(a, [&](const he::Ciphertext& ct) { return ev_.add_const(ct, mask); });
  }

  he::Evaluator& ev() { return ev_; }
  mm::Exec exec() const { return opts_.exec; }

 private:
  he::Evaluator& ev_;
  const TrainOptions& opts_;
  int iteration_;
};

int lowest_level(const std::vector<PackedMatrix>& w) {
  int lvl = std::numeric_limits<int>::max();
  for (const auto& pm : w) lvl = std::min(lvl, pm.min_level());
  return lvl;
}

void check_encryptable(const nn::NetworkConfig& cfg) {
  for (auto a : cfg.activations) {
    if (a == Activation::sigmoid) {
      throw std::invalid_argument("the exact sigmoid has no encrypted form; use extended_sigmoid or cubic");
    }
  }
  if (cfg.loss == nn::Loss::softmax_ce) {
    throw std::invalid_argument("softmax-ce is only available on the plaintext path");
  }
}

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

void record(std::vector<IterationRecord>& out, IterationRecord rec, const TrainOptions& opts,
            const nn::Weights& model) {
  if (opts.report) {
    const auto r = opts.report(model);
    rec.loss = r.loss;
    rec.precision = r.precision;
  }
  out.push_back(rec);
}

}  // namespace

void write_history_csv(std::ostream& out, const TrainHistory& h) {
  out << "iter,loss,precision,min_level,n_add,n_mult,n_cmult,n_rot,n_bootstrap,wall_ms\n";
  out.precision(10);
  for (const auto& r : h.records) {
    out << r.iter << ',' << r.loss << ',' << r.precision << ',' << r.min_level << ',' << r.ops.n_add
        << ',' << r.ops.n_mult << ',' << r.ops.n_cmult << ',' << r.ops.n_rot << ','
        << r.ops.n_bootstrap << ',' << r.wall_ms << '\n';
  }
}

void write_history_csv(const std::string& path, const TrainHistory& h) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  write_history_csv(out, h);
}

Reporter batch_reporter(const nn::NetworkConfig& cfg, const Matrix& x, const std::vector<int>& y) {
  const Matrix yy = data::one_hot(y, static_cast<int>(cfg.layer_dims.back()));
  return [cfg, x, y, yy](const nn::Weights& w) {
    const auto t = nn::forward(w, cfg.activations, x);
    return Report{nn::loss_value(cfg.loss, t, yy), nn::precision(nn::predictions(t, cfg.loss), y)};
  };
}

nn::Weights initial_weights(const nn::NetworkConfig& cfg) {
  return nn::init_weights(cfg.layer_dims, cfg.seed, cfg.num_layers() == 1);
}

std::size_t choose_padded_cols(const he::HEParams& params, const std::vector<std::size_t>& dims) {
  std::size_t pc = 1;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const bool hidden = l + 2 < dims.size();
    // Input is [1 a] (dims[l] + 1 columns); hidden outputs sit after the
    // bias column.
    const auto plan = mm::plan_matmul(params, 1, dims[l] + 1, dims[l + 1] + (hidden ? 1 : 0));
    pc = std::max(pc, plan.padded_cols);
  }
  return pc;
}

EncryptedTrainState pack_batch(he::Evaluator& ev, const Matrix& x, const std::vector<int>& y,
                               const nn::NetworkConfig& cfg_in) {
  nn::NetworkConfig cfg = cfg_in;
  cfg.validate();
  if (static_cast<std::size_t>(x.cols()) != cfg.layer_dims.front()) {
    throw ShapeMismatch("batch has " + std::to_string(x.cols()) + " features, network expects " +
                        std::to_string(cfg.layer_dims.front()));
  }
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw ShapeMismatch("features and labels differ in length");
  if (static_cast<std::size_t>(x.cols()) + 1 > ev.slots()) {
    throw MatrixTooWide(std::to_string(x.cols() + 1) + " columns exceed " + std::to_string(ev.slots()) + " slots");
  }
  const std::size_t pc = choose_padded_cols(ev.params(), cfg.layer_dims);
  EncryptedTrainState s;
  s.n = y.size();
  s.classes = cfg.layer_dims.back();
  const Matrix xb = nn::with_bias(x);
  s.X = enc::pack_row_major(ev, xb, pc);
  s.Y = enc::pack_row_major(ev, data::one_hot(y, static_cast<int>(s.classes)), pc);
  if (cfg.use_preconditioner) {
    s.Bbar = enc::pack_replicated(ev, nn::build_preconditioner(xb, cfg.layer_dims[1]), pc);
  }
  for (const auto& w : initial_weights(cfg)) {
    s.W.push_back(enc::pack_replicated(ev, w, pc));
    s.V.push_back(s.W.back());
  }
  s.min_level = lowest_level(s.W);
  s.momentum = nn::nag_init({});
  return s;
}

nn::Weights decrypt_weights(const he::Evaluator& ev, const std::vector<PackedMatrix>& w) {
  nn::Weights out;
  for (const auto& pm : w) out.push_back(enc::unpack(ev, pm));
  return out;
}

TrainHistory train_encrypted_sim(he::Evaluator& ev, EncryptedTrainState& state,
                                 const nn::NetworkConfig& cfg_in, const TrainOptions& opts) {
  nn::NetworkConfig cfg = cfg_in;
  cfg.validate();
  check_encryptable(cfg);
  const std::size_t layers = cfg.num_layers();
  if (state.W.size() != layers) throw ShapeMismatch("state does not match the network");
  const double n = static_cast<double>(state.n);

  for (int it = 0; it < cfg.iterations; ++it) {
    const int k = state.iteration + 1;
    Iteration run(ev, opts, k);
    const auto start = Clock::now();
    const auto ops_before = ev.counts();

    // Forward at the extrapolated point W.
    std::vector<PackedMatrix> z(layers), a(layers + 1);
    a[0] = state.X;
    for (std::size_t l = 0; l < layers; ++l) {
      const bool hidden = l + 1 < layers;
      const std::string tag = " layer " + std::to_string(l + 1);
      z[l] = run.stage("forward" + tag, [&] {
        return mm::dvr_mult(ev, run.ready(a[l], 2), run.ready(state.W[l], 2),
                            {.out_col_offset = hidden ? 1u : 0u, .exec = opts.exec});
      });
      a[l + 1] = run.stage("activation" + tag, [&] { return run.activation(cfg.activations[l], z[l]); });
      if (hidden) a[l + 1] = run.set_bias(a[l + 1], approx::activate(cfg.activations[l], 0.0));
    }

    // Output delta without its constant factor, which is linear through the
    // backward pass and folded into each gradient kernel.
    const PackedMatrix& p = a[layers];
    PackedMatrix delta;
    double delta_scale = 1.0 / n;
    delta = run.stage("output delta", [&] {
      PackedMatrix diff = run.zip(p, state.Y, &he::Evaluator::sub);
      if (cfg.loss == nn::Loss::bce) return diff;
      const auto slope = run.activation_slope(cfg.activations.back(), z.back(), p);
      return run.zip(run.ready(diff, 1), run.ready(slope, 1), &he::Evaluator::mult);
    });
    if (cfg.loss == nn::Loss::sle) delta_scale = 2.0;
    if (cfg.loss == nn::Loss::msle) delta_scale = 2.0 / n;

    const double step = nn::step_size(cfg.schedule, cfg.learning_rate, state.n, k);
    std::vector<PackedMatrix> grads(layers);
    for (std::size_t l = layers; l-- > 0;) {
      const std::size_t off = l + 1 < layers ? 1 : 0;
      const std::string tag = " layer " + std::to_string(l + 1);
      const bool precondition = cfg.use_preconditioner && l == 0;
      const double scale = step * delta_scale * (precondition ? n : 1.0);
      grads[l] = run.stage("gradient" + tag, [&] {
        return mm::vr_mult_transposed_first(
            ev, run.ready(delta, 3), run.ready(a[l], 3),
            {.at_col_offset = off, .scale = scale, .replicated_out = true, .exec = opts.exec});
      });
      if (precondition) {
        grads[l] = run.stage("preconditioner", [&] {
          return run.zip(run.ready(grads[l], 1), state.Bbar, &he::Evaluator::mult);
        });
      }
      if (l == 0) break;
      delta = run.stage("backprop" + tag, [&] {
        const auto back = mm::broadcast_mult(ev, run.ready(delta, 2), run.ready(state.W[l], 2),
                                             {.a_col_offset = off, .b_col_begin = 1, .exec = opts.exec});
        const auto slope = run.activation_slope(cfg.activations[l - 1], z[l - 1], a[l]);
        return run.zip(run.ready(back, 1), run.ready(slope, 1), &he::Evaluator::mult);
      });
    }

    // NAG: w_temp = W - G, W <- (1 - eta) w_temp + eta V, V <- w_temp.
    const double eta = nn::nag_eta(state.momentum);
    std::vector<PackedMatrix> next_w(layers), next_v(layers);
    for (std::size_t l = 0; l < layers; ++l) {
      run.stage("update layer " + std::to_string(l + 1), [&] {
        PackedMatrix w_temp = run.zip(state.W[l], grads[l], &he::Evaluator::sub);
        const PackedMatrix wt = run.ready(w_temp, 1), v = run.ready(state.V[l], 1);
        PackedMatrix left = run.map(wt, [&](const he::Ciphertext& ct) { return ev.cmult(ct, 1.0 - eta); });
        PackedMatrix right = run.map(v, [&](const he::Ciphertext& ct) { return ev.cmult(ct, eta); });
        next_w[l] = run.zip(left, right, &he::Evaluator::add);
        next_v[l] = std::move(w_temp);
        return 0;
      });
    }

    // Commit.
    state.W = std::move(next_w);
    state.V = std::move(next_v);
    state.iteration = k;
    nn::nag_step(state.momentum, {}, 0.0);
    state.min_level = std::min(lowest_level(state.W), lowest_level(state.V));
    const auto delta_ops = ev.counts() - ops_before;
    state.op_counts = state.op_counts + delta_ops;

    IterationRecord rec;
    rec.iter = k;
    rec.min_level = state.min_level;
    rec.ops = delta_ops;
    rec.wall_ms = elapsed_ms(start);
    // Reporting decryption, outside the encrypted computation.
    record(state.history, rec, opts, opts.report ? decrypt_weights(ev, state.V) : nn::Weights{});
  }

  TrainHistory h;
  h.records = state.history;
  h.weights = decrypt_weights(ev, state.V);
  return h;
}

TrainHistory train_plain(const nn::NetworkConfig& cfg_in, const Matrix& x, const std::vector<int>& y,
                         const TrainOptions& opts) {
  nn::NetworkConfig cfg = cfg_in;
  cfg.validate();
  const std::size_t n = y.size();
  const Matrix yy = data::one_hot(y, static_cast<int>(cfg.layer_dims.back()));
  Matrix bbar;
  if (cfg.use_preconditioner) bbar = nn::build_preconditioner(nn::with_bias(x), cfg.layer_dims[1]);

  auto state = nn::nag_init(initial_weights(cfg));
  TrainHistory h;
  for (int it = 0; it < cfg.iterations; ++it) {
    const int k = state.count + 1;
    const auto start = Clock::now();
    const auto trace = nn::forward(state.W, cfg.activations, x);
    auto grads = nn::backward(trace, nn::output_delta(cfg.loss, trace, yy, cfg.activations.back()),
                              state.W, cfg.activations);
    if (cfg.use_preconditioner) grads[0] = grads[0].cwiseProduct(bbar) * static_cast<double>(n);
    nn::nag_step(state, grads, nn::step_size(cfg.schedule, cfg.learning_rate, n, k));

    IterationRecord rec;
    rec.iter = k;
    rec.wall_ms = elapsed_ms(start);
    record(h.records, rec, opts, state.V);
  }
  h.weights = state.V;
  return h;
}

double PathComparison::max_weight_diff() const {
  double m = 0.0;
  for (double d : layer_max_diff) m = std::max(m, d);
  return m;
}

PathComparison compare_paths(he::Evaluator& ev, nn::NetworkConfig cfg, const Matrix& x,
                             const std::vector<int>& y, int iterations, const TrainOptions& opts_in) {
  cfg.validate();
  cfg.iterations = iterations;
  TrainOptions opts = opts_in;
  if (!opts.report) opts.report = batch_reporter(cfg, x, y);

  PathComparison c;
  c.plain = train_plain(cfg, x, y, opts);
  auto state = pack_batch(ev, x, y, cfg);
  c.encrypted = train_encrypted_sim(ev, state, cfg, opts);
  for (std::size_t l = 0; l < c.plain.weights.size(); ++l) {
    c.layer_max_diff.push_back((c.plain.weights[l] - c.encrypted.weights[l]).cwiseAbs().maxCoeff());
  }
  for (std::size_t i = 0; i < c.plain.records.size(); ++i) {
    c.loss_diff.push_back(std::abs(c.plain.records[i].loss - c.encrypted.records[i].loss));
  }
  return c;
}

}  // namespace revolver::pipeline
