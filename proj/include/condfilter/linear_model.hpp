#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "condfilter/embedding_set.hpp"

namespace condfilter {

// Per-feature z-score transform shared by training and inference.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> stddev;  // clamped to >= 1e-8

  std::size_t dim() const { return mean.size(); }
  double apply(double v, std::size_t d) const {
    return (v - mean[d]) / stddev[d];
  }
};

Standardizer fit_standardizer(const EmbeddingSet& rows);

// Standardized copy of the rows in double precision, row-major n x dim.
std::vector<double> standardized_matrix(const EmbeddingSet& rows,
                                        const Standardizer& st);

// Numerically stable logistic function.
double sigmoid(double z);

// log(1 + e^z) without overflow.
double softplus(double z);

// Mean binary cross-entropy of y against sigmoid(X w + b) and its gradient.
// X is n x dim standardized doubles, y holds 0/1. Gradient accumulation is
// chunk-merged in fixed order, so results are worker-count independent.
double logistic_loss_grad(std::span<const double> X, std::size_t n,
                          std::size_t dim, std::span<const std::int32_t> y,
                          std::span<const double> w, double b,
                          std::span<double> grad_w, double& grad_b);

// Loss only (for finite-difference checks and monitoring).
double logistic_loss(std::span<const double> X, std::size_t n, std::size_t dim,
                     std::span<const std::int32_t> y, std::span<const double> w,
                     double b);

// Mean multiclass cross-entropy of one-hot y against softmax(W x + c) and
// its gradient. W is classes x dim row-major, biases length classes.
double softmax_loss_grad(std::span<const double> X, std::size_t n,
                         std::size_t dim, std::span<const std::int32_t> y,
                         std::size_t classes, std::span<const double> W,
                         std::span<const double> biases,
                         std::span<double> grad_W, std::span<double> grad_b);

double softmax_loss(std::span<const double> X, std::size_t n, std::size_t dim,
                    std::span<const std::int32_t> y, std::size_t classes,
                    std::span<const double> W, std::span<const double> biases);

// Softmax probabilities for one row of logits, in place.
void softmax_inplace(std::span<double> logits);

}  // namespace condfilter
