#include "revolver/nn.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace revolver::nn {

namespace {

void require_same(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeMismatch(std::string(what) + ": " + std::to_string(a.rows()) + "x" +
                        std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                        std::to_string(b.cols()));
  }
}

Matrix apply(Activation a, const Matrix& z) {
  return z.unaryExpr([a](double v) { return approx::activate(a, v); });
}

Matrix derivative(Activation a, const Matrix& z, const Matrix& value) {
  Matrix d(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    for (Eigen::Index j = 0; j < z.cols(); ++j)
      d(i, j) = approx::activation_derivative(a, z(i, j), value(i, j));
  return d;
}

}  // namespace

Loss parse_loss(const std::string& name) {
  if (name == "bce") return Loss::bce;
  if (name == "sle") return Loss::sle;
  if (name == "msle") return Loss::msle;
  if (name == "softmax-ce" || name == "softmax_ce") return Loss::softmax_ce;
  throw std::invalid_argument("unknown loss: " + name);
}

std::string to_string(Loss l) {
  switch (l) {
    case Loss::bce: return "bce";
    case Loss::sle: return "sle";
    case Loss::msle: return "msle";
    case Loss::softmax_ce: return "softmax-ce";
  }
  return "?";
}

void NetworkConfig::validate() {
  if (layer_dims.size() < 2) throw ShapeMismatch("a network needs at least two layer sizes");
  for (auto d : layer_dims)
    if (d == 0) throw ShapeMismatch("layer sizes must be positive");
  if (activations.empty()) {
    for (std::size_t l = 0; l + 1 < num_layers(); ++l)
      activations.push_back(l % 2 == 0 ? Activation::quadratic : Activation::cubic);
    activations.push_back(Activation::sigmoid);
  }
  if (activations.size() != num_layers()) {
    throw ShapeMismatch("expected " + std::to_string(num_layers()) + " activations, got " +
                        std::to_string(activations.size()));
  }
}

NetworkConfig default_config() {
  NetworkConfig c;
  c.validate();
  return c;
}

NetworkConfig mlr_config(std::size_t d, std::size_t c, Activation output) {
  NetworkConfig cfg;
  cfg.layer_dims = {d, c};
  cfg.activations = {output};
  cfg.validate();
  return cfg;
}

Weights init_weights(const std::vector<std::size_t>& dims, std::uint64_t seed, bool zero) {
  Weights w;
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const auto out = static_cast<Eigen::Index>(dims[l + 1]);
    const auto in = static_cast<Eigen::Index>(dims[l] + 1);
    Matrix m = Matrix::Zero(out, in);
    if (!zero) {
      const double r = std::sqrt(6.0 / static_cast<double>(dims[l] + dims[l + 1]));
      std::uniform_real_distribution<double> u(-r, r);
      for (Eigen::Index i = 0; i < out; ++i)
        for (Eigen::Index j = 0; j < in; ++j) m(i, j) = u(rng);
    }
    w.push_back(std::move(m));
  }
  return w;
}

Matrix with_bias(const Matrix& m) {
  Matrix out(m.rows(), m.cols() + 1);
  out.col(0).setOnes();
  out.rightCols(m.cols()) = m;
  return out;
}

ForwardTrace forward(const Weights& w, const std::vector<Activation>& acts, const Matrix& x) {
  if (w.size() != acts.size()) throw ShapeMismatch("one activation per layer required");
  ForwardTrace t;
  t.a.push_back(x);
  for (std::size_t l = 0; l < w.size(); ++l) {
    const Matrix& in = t.a.back();
    if (in.cols() + 1 != w[l].cols()) {
      throw ShapeMismatch("layer " + std::to_string(l) + " expects " +
                          std::to_string(w[l].cols() - 1) + " inputs, got " +
                          std::to_string(in.cols()));
    }
    Matrix z = with_bias(in) * w[l].transpose();
    t.a.push_back(apply(acts[l], z));
    t.z.push_back(std::move(z));
  }
  return t;
}

Matrix softmax_rows(const Matrix& z) {
  Matrix p(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double m = z.row(i).maxCoeff();
    double s = 0;
    for (Eigen::Index j = 0; j < z.cols(); ++j) s += (p(i, j) = std::exp(z(i, j) - m));
    p.row(i) /= s;
  }
  return p;
}

Matrix predictions(const ForwardTrace& t, Loss loss) {
  return loss == Loss::softmax_ce ? softmax_rows(t.z.back()) : t.output();
}

double bce_loss(const Matrix& p, const Matrix& y) {
  require_same(p, y, "bce_loss");
  double s = 0;
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      const double q = std::clamp(p(i, j), kProbEpsilon, 1.0 - kProbEpsilon);
      s -= y(i, j) * std::log(q) + (1.0 - y(i, j)) * std::log(1.0 - q);
    }
  return s / static_cast<double>(p.rows());
}

double sle_loss(const Matrix& p, const Matrix& y) {
  require_same(p, y, "sle_loss");
  return (y - p).squaredNorm();
}

double msle_loss(const Matrix& p, const Matrix& y) {
  return sle_loss(p, y) / static_cast<double>(p.rows());
}

double softmax_ce_loss(const Matrix& z, const Matrix& y) {
  require_same(z, y, "softmax_ce_loss");
  const Matrix p = softmax_rows(z);
  double s = 0;
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (Eigen::Index j = 0; j < p.cols(); ++j)
      if (y(i, j) != 0) s -= y(i, j) * std::log(std::max(p(i, j), kProbEpsilon));
  return s / static_cast<double>(p.rows());
}

double loss_value(Loss kind, const ForwardTrace& t, const Matrix& y) {
  switch (kind) {
    case Loss::bce: return bce_loss(t.output(), y);
    case Loss::sle: return sle_loss(t.output(), y);
    case Loss::msle: return msle_loss(t.output(), y);
    case Loss::softmax_ce: return softmax_ce_loss(t.z.back(), y);
  }
  return 0;
}

Matrix bce_output_delta(const Matrix& p, const Matrix& y, std::size_t n) {
  require_same(p, y, "bce_output_delta");
  return (p - y) / static_cast<double>(n);
}

Matrix output_delta(Loss kind, const ForwardTrace& t, const Matrix& y, Activation output) {
  const Matrix& p = t.output();
  const auto n = static_cast<std::size_t>(p.rows());
  switch (kind) {
    case Loss::bce: return bce_output_delta(p, y, n);
    case Loss::softmax_ce: return bce_output_delta(softmax_rows(t.z.back()), y, n);
    case Loss::sle:
    case Loss::msle: {
      require_same(p, y, "output_delta");
      Matrix d = 2.0 * (p - y).cwiseProduct(derivative(output, t.z.back(), p));
      if (kind == Loss::msle) d /= static_cast<double>(n);
      return d;
    }
  }
  return {};
}

Weights backward(const ForwardTrace& t, const Matrix& delta_out, const Weights& w,
                 const std::vector<Activation>& acts) {
  const std::size_t layers = w.size();
  if (t.z.size() != layers) throw ShapeMismatch("trace does not match the weights");
  require_same(delta_out, t.z.back(), "backward");
  Weights g(layers);
  Matrix delta = delta_out;
  for (std::size_t l = layers; l-- > 0;) {
    g[l] = delta.transpose() * with_bias(t.a[l]);
    if (l == 0) break;
    const Matrix back = delta * w[l].rightCols(w[l].cols() - 1);
    delta = back.cwiseProduct(derivative(acts[l - 1], t.z[l - 1], t.a[l]));
  }
  return g;
}

Matrix build_preconditioner(const Matrix& x, std::size_t classes, double epsilon) {
  if (x.rows() == 0 || x.cols() == 0) throw ShapeMismatch("empty batch");
  const Matrix h = -0.25 * (x.transpose() * x);
  Matrix b(static_cast<Eigen::Index>(classes), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    double s = epsilon;
    for (Eigen::Index i = 0; i < h.rows(); ++i) s += std::abs(h(i, j));
    b.col(j).setConstant(1.0 / s);
  }
  return b;
}

NAGState nag_init(const Weights& w0) {
  NAGState s;
  s.V = w0;
  s.W = w0;
  s.alpha0 = 0.01;
  s.alpha1 = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * s.alpha0 * s.alpha0));
  return s;
}

double nag_eta(const NAGState& s) { return (1.0 - s.alpha0) / s.alpha1; }

double step_size(StepSchedule schedule, double lr, std::size_t n, int k) {
  if (schedule == StepSchedule::constant) return lr;
  return lr * (1.0 + 1.0 / (static_cast<double>(n) * k));
}

void nag_step(NAGState& state, const Weights& grads, double step) {
  if (grads.size() != state.W.size()) throw ShapeMismatch("gradient has the wrong layer count");
  const double eta = nag_eta(state);
  for (std::size_t l = 0; l < grads.size(); ++l) {
    require_same(grads[l], state.W[l], "nag_step");
    Matrix w_temp = state.W[l] - step * grads[l];
    state.W[l] = (1.0 - eta) * w_temp + eta * state.V[l];
    state.V[l] = std::move(w_temp);
  }
  state.alpha0 = state.alpha1;
  state.alpha1 = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * state.alpha0 * state.alpha0));
  ++state.count;
}

std::vector<int> argmax_rows(const Matrix& p) {
  std::vector<int> out(static_cast<std::size_t>(p.rows()));
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < p.cols(); ++j)
      if (p(i, j) > p(i, best)) best = j;
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

double precision(const Matrix& p, const std::vector<int>& labels) {
  if (static_cast<std::size_t>(p.rows()) != labels.size()) {
    throw ShapeMismatch("predictions and labels differ in length");
  }
  if (labels.empty()) return 0.0;
  const auto pred = argmax_rows(p);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hit += pred[i] == labels[i];
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

}  // namespace revolver::nn
