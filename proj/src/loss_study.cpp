#include "revolver/loss_study.hpp"

#include <fstream>

#include "revolver/errors.hpp"

namespace revolver::pipeline {

namespace {

double accuracy(const nn::NetworkConfig& cfg, const nn::Weights& w, const Matrix& x,
                const std::vector<int>& y) {
  return nn::precision(nn::predictions(nn::forward(w, cfg.activations, x), cfg.loss), y);
}

std::string join_dims(const std::vector<std::size_t>& dims) {
  std::string s;
  for (auto d : dims) s += (s.empty() ? "" : "-") + std::to_string(d);
  return s;
}

}  // namespace

std::vector<std::size_t> arch_for_depth(std::size_t depth, std::size_t in, std::size_t classes) {
  if (depth == 0) throw ShapeMismatch("depth must be at least 1");
  std::vector<std::size_t> dims{in};
  for (std::size_t l = 1; l < depth; ++l) dims.push_back(l == 1 ? 32 : 16);
  dims.push_back(classes);
  return dims;
}

nn::Weights train_epochs(const nn::NetworkConfig& cfg_in, const Matrix& x, const std::vector<int>& y,
                         int epochs, std::size_t batch) {
  nn::NetworkConfig cfg = cfg_in;
  cfg.validate();
  const std::size_t n = y.size();
  if (batch == 0 || batch > n) throw ShapeMismatch("batch size must be in [1, n]");
  const Matrix yy = data::one_hot(y, static_cast<int>(cfg.layer_dims.back()));
  auto state = nn::nag_init(nn::init_weights(cfg.layer_dims, cfg.seed, cfg.num_layers() == 1));
  for (int e = 0; e < epochs; ++e) {
    for (std::size_t b = 0; b + batch <= n; b += batch) {
      const auto rows = static_cast<Eigen::Index>(b), len = static_cast<Eigen::Index>(batch);
      const auto t = nn::forward(state.W, cfg.activations, x.middleRows(rows, len));
      const auto delta = nn::output_delta(cfg.loss, t, yy.middleRows(rows, len), cfg.activations.back());
      nn::nag_step(state, nn::backward(t, delta, state.W, cfg.activations), cfg.learning_rate);
    }
  }
  return state.V;
}

double first_layer_grad(const nn::NetworkConfig& cfg_in, const Matrix& x, const std::vector<int>& y) {
  nn::NetworkConfig cfg = cfg_in;
  cfg.validate();
  const auto w = nn::init_weights(cfg.layer_dims, cfg.seed, false);
  const auto t = nn::forward(w, cfg.activations, x);
  const Matrix yy = data::one_hot(y, static_cast<int>(cfg.layer_dims.back()));
  return nn::backward(t, nn::output_delta(cfg.loss, t, yy, cfg.activations.back()), w, cfg.activations)[0]
      .cwiseAbs()
      .mean();
}

std::vector<LossStudyRow> loss_study(const LossStudyOptions& opts, const data::Dataset& train,
                                     const data::Dataset& test) {
  const Matrix xtr = train.has_bias ? train.features() : train.X;
  const Matrix xte = test.has_bias ? test.features() : test.X;
  if (xtr.cols() != xte.cols()) throw ShapeMismatch("train and test feature widths differ");
  int classes = 0;
  for (int label : train.y) classes = std::max(classes, label + 1);
  const std::size_t gn = std::min(opts.grad_samples, train.size());
  const Matrix xg = xtr.topRows(static_cast<Eigen::Index>(gn));
  const std::vector<int> yg(train.y.begin(), train.y.begin() + static_cast<std::ptrdiff_t>(gn));

  std::vector<LossStudyRow> rows;
  for (auto depth : opts.depths) {
    nn::NetworkConfig base;
    base.layer_dims = arch_for_depth(depth, static_cast<std::size_t>(xtr.cols()), classes);
    base.validate();
    for (auto loss : opts.losses) {
      nn::NetworkConfig cfg = base;
      cfg.loss = loss;
      double best_lr = opts.lr_grid.front(), best = -1.0;
      for (double lr : opts.lr_grid) {
        cfg.learning_rate = lr;
        double acc = 0.0;
        for (int s = 1; s <= opts.tune_seeds; ++s) {
          cfg.seed = static_cast<std::uint64_t>(s);
          acc += accuracy(cfg, train_epochs(cfg, xtr, train.y, opts.epochs, opts.batch), xtr, train.y);
        }
        if (acc > best) {
          best = acc;
          best_lr = lr;
        }
      }
      cfg.learning_rate = best_lr;
      for (int s = 1; s <= opts.seeds; ++s) {
        cfg.seed = static_cast<std::uint64_t>(s);
        const auto w = train_epochs(cfg, xtr, train.y, opts.epochs, opts.batch);
        rows.push_back({depth, join_dims(cfg.layer_dims), s, loss, best_lr, first_layer_grad(cfg, xg, yg),
                        accuracy(cfg, w, xtr, train.y), accuracy(cfg, w, xte, test.y)});
      }
    }
  }
  return rows;
}

void write_loss_study_csv(const std::string& path, const std::vector<LossStudyRow>& rows) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out.precision(10);
  out << "depth,dims,seed,loss,lr,init_grad_mean_abs,train_acc,test_acc\n";
  for (const auto& r : rows) {
    out << r.depth << ',' << r.dims << ',' << r.seed << ',' << nn::to_string(r.loss) << ',' << r.lr << ','
        << r.init_grad << ',' << r.train_acc << ',' << r.test_acc << '\n';
  }
}

}  // namespace revolver::pipeline
