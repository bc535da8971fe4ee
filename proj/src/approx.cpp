#include "revolver/approx.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace revolver::approx {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Polynomial Polynomial::derivative() const {
  Polynomial d;
  d.domain = domain;
  if (coeffs.size() <= 1) return d;
  d.coeffs.assign(coeffs.size() - 1, 0.0);
  for (std::size_t k = 1; k < coeffs.size(); ++k) d.coeffs[k - 1] = static_cast<double>(k) * coeffs[k];
  return d;
}

Polynomial fit_least_squares_points(const std::vector<double>& xs, const std::vector<double>& ys,
                                    int degree, Interval domain) {
  if (degree < 0) throw SingularFit("negative degree");
  if (!(domain.lo < domain.hi)) throw SingularFit("empty fitting domain");
  if (xs.size() != ys.size()) throw SingularFit("sample vectors differ in length");
  const int cols = degree + 1;
  const auto n = static_cast<Eigen::Index>(xs.size());
  if (n < cols) {
    throw SingularFit(std::to_string(n) + " points cannot determine degree " + std::to_string(degree));
  }
  const double h = std::max(std::abs(domain.lo), std::abs(domain.hi));
  Eigen::MatrixXd v(n, cols);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = xs[static_cast<std::size_t>(i)] / h;
    double pw = 1.0;
    for (int k = 0; k < cols; ++k, pw *= t) v(i, k) = pw;
    y(i) = ys[static_cast<std::size_t>(i)];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(v);
  if (qr.rank() < cols) throw SingularFit("degenerate fitting grid");
  const Eigen::VectorXd c = qr.solve(y);

  Polynomial p;
  p.domain = domain;
  p.coeffs.resize(static_cast<std::size_t>(cols));
  for (int k = 0; k < cols; ++k) p.coeffs[static_cast<std::size_t>(k)] = c(k) / std::pow(h, k);
  return p;
}

Polynomial fit_least_squares(const std::function<double(double)>& f, int degree, Interval domain,
                             int grid) {
  if (grid < degree + 1) {
    throw SingularFit("grid of " + std::to_string(grid) + " points cannot determine degree " +
                      std::to_string(degree));
  }
  std::vector<double> xs(static_cast<std::size_t>(grid)), ys(xs.size());
  for (int i = 0; i < grid; ++i) {
    const double x = grid == 1 ? domain.lo : domain.lo + (domain.hi - domain.lo) * i / (grid - 1);
    xs[static_cast<std::size_t>(i)] = x;
    ys[static_cast<std::size_t>(i)] = f(x);
  }
  return fit_least_squares_points(xs, ys, degree, domain);
}

double eval_poly_plain(const Polynomial& p, double x, bool* out_of_domain) {
  if (out_of_domain) *out_of_domain = !p.covers(x);
  const auto& c = p.coeffs;
  double acc = c.back();
  for (std::size_t k = c.size() - 1; k-- > 0;) acc = acc * x + c[k];
  return acc;
}

he::Ciphertext eval_poly_encrypted(he::Evaluator& ev, const Polynomial& p, const he::Ciphertext& ct) {
  const auto& c = p.coeffs;
  const std::size_t d = c.size() - 1;
  if (d == 0) return ev.constant(c[0], ct.level);
  // First step c_d * x is a plaintext scalar product; the rest are
  // ciphertext products against x. Zero coefficients skip the addition.
  he::Ciphertext acc = ev.cmult(ct, c[d]);
  if (c[d - 1] != 0.0) acc = ev.add_scalar(acc, c[d - 1]);
  for (std::size_t k = d - 1; k-- > 0;) {
    acc = ev.mult(acc, ct);
    if (c[k] != 0.0) acc = ev.add_scalar(acc, c[k]);
  }
  return acc;
}

double ExtendedSigmoid::operator()(double x) const {
  for (const auto& g : extension_maps) x = eval_poly_plain(g, x);
  return eval_poly_plain(base, x);
}

int ExtendedSigmoid::depth() const {
  int d = base.degree();
  for (const auto& g : extension_maps) d += g.degree();
  return d;
}

ExtendedSigmoid build_extended_sigmoid(int n_ext, int base_degree, double base_half_width, int grid) {
  if (n_ext < 0 || base_half_width <= 0) throw DomainNotCovered("invalid extension parameters");
  if (grid < 2) throw SingularFit("grid needs at least two points");
  ExtendedSigmoid s;
  const double reach = base_half_width * std::ldexp(1.0, n_ext);
  if (reach < 64.0) {
    throw DomainNotCovered("extension reaches only [-" + std::to_string(reach) + ", " +
                           std::to_string(reach) + "], short of [-64, 64]");
  }
  s.target_domain = {-reach, reach};
  for (int i = n_ext - 1; i >= 0; --i) {
    const double r = base_half_width * std::ldexp(1.0, i);
    Polynomial g;
    g.coeffs = {0.0, 1.0, 0.0, -4.0 / (27.0 * r * r)};
    g.domain = {-2.0 * r, 2.0 * r};
    s.extension_maps.push_back(std::move(g));
  }

  std::vector<double> xs(static_cast<std::size_t>(grid)), ys(xs.size());
  for (int i = 0; i < grid; ++i) {
    const double x = -reach + 2.0 * reach * i / (grid - 1);
    double y = x;
    for (const auto& g : s.extension_maps) y = eval_poly_plain(g, y);
    if (std::abs(y) > base_half_width * (1 + 1e-12)) {
      throw DomainNotCovered("composed maps leave the base domain");
    }
    xs[static_cast<std::size_t>(i)] = y;
    ys[static_cast<std::size_t>(i)] = sigmoid(x);
  }
  s.base = fit_least_squares_points(xs, ys, base_degree, {-base_half_width, base_half_width});
  return s;
}

he::Ciphertext eval_extended_encrypted(he::Evaluator& ev, const ExtendedSigmoid& s,
                                       const he::Ciphertext& ct) {
  he::Ciphertext x = ct;
  for (const auto& g : s.extension_maps) x = eval_poly_encrypted(ev, g, x);
  return eval_poly_encrypted(ev, s.base, x);
}

Activation parse_activation(const std::string& name) {
  if (name == "quadratic") return Activation::quadratic;
  if (name == "cubic") return Activation::cubic;
  if (name == "extended_sigmoid" || name == "extended-sigmoid") return Activation::extended_sigmoid;
  if (name == "sigmoid") return Activation::sigmoid;
  throw std::invalid_argument("unknown activation: " + name);
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::quadratic: return "quadratic";
    case Activation::cubic: return "cubic";
    case Activation::extended_sigmoid: return "extended_sigmoid";
    case Activation::sigmoid: return "sigmoid";
  }
  return "?";
}

const Polynomial& quadratic_activation() {
  static const Polynomial p{{0.0, 0.5, 0.25}, {-8.0, 8.0}};
  return p;
}

const Polynomial& cubic_sigmoid() {
  static const Polynomial p = fit_least_squares(sigmoid, 3, {-8.0, 8.0}, 2001);
  return p;
}

const ExtendedSigmoid& default_extended_sigmoid() {
  static const ExtendedSigmoid s = build_extended_sigmoid();
  return s;
}

double activate(Activation a, double z) {
  switch (a) {
    case Activation::quadratic: return eval_poly_plain(quadratic_activation(), z);
    case Activation::cubic: return eval_poly_plain(cubic_sigmoid(), z);
    case Activation::extended_sigmoid: return default_extended_sigmoid()(z);
    case Activation::sigmoid: return sigmoid(z);
  }
  return 0.0;
}

double activation_derivative(Activation a, double z, double value) {
  switch (a) {
    case Activation::quadratic: return eval_poly_plain(quadratic_activation().derivative(), z);
    case Activation::cubic: return eval_poly_plain(cubic_sigmoid().derivative(), z);
    case Activation::extended_sigmoid:
    case Activation::sigmoid: return value * (1.0 - value);
  }
  return 0.0;
}

const Polynomial& activation_polynomial(Activation a) {
  switch (a) {
    case Activation::quadratic: return quadratic_activation();
    case Activation::cubic: return cubic_sigmoid();
    default: throw std::invalid_argument(to_string(a) + " has no single polynomial form");
  }
}

int activation_depth(Activation a) {
  switch (a) {
    case Activation::quadratic: return quadratic_activation().degree();
    case Activation::cubic: return cubic_sigmoid().degree();
    case Activation::extended_sigmoid: return default_extended_sigmoid().depth();
    case Activation::sigmoid: throw std::invalid_argument("exact sigmoid has no encrypted form");
  }
  return 0;
}

}  // namespace revolver::approx
