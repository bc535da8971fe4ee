#pragma once

// Polynomial approximation of activations and their evaluation on plain
// values and on ciphertexts.

#include <functional>
#include <string>
#include <vector>

#include "revolver/he.hpp"

namespace revolver::approx {

struct Interval {
  double lo = -1.0;
  double hi = 1.0;
};

struct Polynomial {
  /// Ascending degree.
  std::vector<double> coeffs{0.0};
  Interval domain{-1.0, 1.0};

  int degree() const { return static_cast<int>(coeffs.size()) - 1; }
  bool covers(double x) const { return x >= domain.lo && x <= domain.hi; }
  Polynomial derivative() const;
};

/// Least-squares fit of f on `grid` uniform points of the domain. The
/// Vandermonde system is solved by pivoted QR in the scaled variable
/// x / max(|lo|, |hi|), which keeps it well conditioned up to degree ~15.
Polynomial fit_least_squares(const std::function<double(double)>& f, int degree, Interval domain,
                             int grid);

/// Least-squares fit through arbitrary sample points (xs[i], ys[i]).
Polynomial fit_least_squares_points(const std::vector<double>& xs, const std::vector<double>& ys,
                                    int degree, Interval domain);

/// Horner evaluation. Values outside the domain are computed anyway; pass
/// `out_of_domain` to learn about it.
double eval_poly_plain(const Polynomial& p, double x, bool* out_of_domain = nullptr);

/// Horner on a ciphertext, slot-wise. Consumes exactly degree() levels and
/// performs the same floating-point operations as eval_poly_plain.
he::Ciphertext eval_poly_encrypted(he::Evaluator& ev, const Polynomial& p, const he::Ciphertext& ct);

/// Sigmoid over a wide interval: odd cubic maps g_R(x) = x - 4x^3 / (27R^2)
/// shrink the input step by step into the base polynomial's domain. Each
/// g_R is increasing on [-1.5R, 1.5R] with g_R(1.5R) = R and stays in
/// (0, R] up to 2R, so far inputs land where the sigmoid is flat.
struct ExtendedSigmoid {
  Polynomial base;
  std::vector<Polynomial> extension_maps;
  Interval target_domain;

  double operator()(double x) const;
  /// Total level cost: sum of all degrees.
  int depth() const;
};

/// n_ext maps with R = base_half_width * 2^(n_ext-1), ..., base_half_width
/// cover [-base_half_width * 2^n_ext, +...]. Throws DomainNotCovered if that
/// is narrower than [-64, 64]. The base is fitted on `grid` points of the
/// target interval pushed through the maps, so it corrects the maps' own
/// distortion of the input.
ExtendedSigmoid build_extended_sigmoid(int n_ext = 3, int base_degree = 9,
                                       double base_half_width = 8.0, int grid = 2001);

he::Ciphertext eval_extended_encrypted(he::Evaluator& ev, const ExtendedSigmoid& s,
                                       const he::Ciphertext& ct);

/// Activation kinds. `sigmoid` is the exact logistic function and exists
/// only for plaintext reference runs.
enum class Activation { quadratic, cubic, extended_sigmoid, sigmoid };

Activation parse_activation(const std::string& name);
std::string to_string(Activation a);

/// 0.25 x^2 + 0.5 x.
const Polynomial& quadratic_activation();
/// Degree-3 least-squares sigmoid on [-8, 8].
const Polynomial& cubic_sigmoid();
/// build_extended_sigmoid() with default arguments, computed once.
const ExtendedSigmoid& default_extended_sigmoid();

double activate(Activation a, double z);
/// d activation / dz. Polynomials differentiate exactly at z; sigmoid-like
/// kinds use s * (1 - s) with s the activation value.
double activation_derivative(Activation a, double z, double value);

/// Polynomial form of the activation (throws for exact sigmoid).
const Polynomial& activation_polynomial(Activation a);
/// Levels one encrypted application costs.
int activation_depth(Activation a);

double sigmoid(double x);

}  // namespace revolver::approx
