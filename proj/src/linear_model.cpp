#include "condfilter/linear_model.hpp"

#include <algorithm>
#include <cmath>

#include "condfilter/errors.hpp"
#include "condfilter/parallel.hpp"

namespace condfilter {

namespace {

constexpr std::size_t kRowChunk = 4096;
constexpr double kStdFloor = 1e-8;

}  // namespace

Standardizer fit_standardizer(const EmbeddingSet& rows) {
  if (rows.count == 0) throw ArgumentError("standardizer: no rows");
  const std::size_t dim = rows.dim;
  Standardizer st;
  st.mean.assign(dim, 0.0);
  st.stddev.assign(dim, 0.0);
  for (std::size_t i = 0; i < rows.count; ++i) {
    const float* row = rows.data.data() + i * dim;
    for (std::size_t d = 0; d < dim; ++d) st.mean[d] += row[d];
  }
  for (std::size_t d = 0; d < dim; ++d) {
    st.mean[d] /= static_cast<double>(rows.count);
  }
  for (std::size_t i = 0; i < rows.count; ++i) {
    const float* row = rows.data.data() + i * dim;
    for (std::size_t d = 0; d < dim; ++d) {
      const double diff = row[d] - st.mean[d];
      st.stddev[d] += diff * diff;
    }
  }
  for (std::size_t d = 0; d < dim; ++d) {
    st.stddev[d] =
        std::max(std::sqrt(st.stddev[d] / static_cast<double>(rows.count)),
                 kStdFloor);
  }
  return st;
}

std::vector<double> standardized_matrix(const EmbeddingSet& rows,
                                        const Standardizer& st) {
  if (rows.dim != st.dim())
    throw ArgumentError("standardizer: dimension mismatch");
  std::vector<double> out(rows.count * rows.dim);
  for (std::size_t i = 0; i < rows.count; ++i) {
    const float* row = rows.data.data() + i * rows.dim;
    double* dst = out.data() + i * rows.dim;
    for (std::size_t d = 0; d < rows.dim; ++d) dst[d] = st.apply(row[d], d);
  }
  return out;
}

double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double z) {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

namespace {

struct BinChunk {
  std::vector<double> grad_w;
  double grad_b = 0.0;
  double loss = 0.0;
};

}  // namespace

double logistic_loss_grad(std::span<const double> X, std::size_t n,
                          std::size_t dim, std::span<const std::int32_t> y,
                          std::span<const double> w, double b,
                          std::span<double> grad_w, double& grad_b) {
  const std::size_t n_chunks = (n + kRowChunk - 1) / kRowChunk;
  std::vector<BinChunk> parts(n_chunks);
  parallel_chunks(n, kRowChunk, [&](std::size_t ci, std::size_t begin,
                                    std::size_t end) {
    BinChunk& part = parts[ci];
    part.grad_w.assign(dim, 0.0);
    for (std::size_t i = begin; i < end; ++i) {
      const double* row = X.data() + i * dim;
      double z = b;
      for (std::size_t d = 0; d < dim; ++d) z += w[d] * row[d];
      const double yi = static_cast<double>(y[i]);
      // BCE(z, y) = softplus(z) - y*z, exact and overflow-free.
      part.loss += softplus(z) - yi * z;
      const double err = sigmoid(z) - yi;
      for (std::size_t d = 0; d < dim; ++d) part.grad_w[d] += err * row[d];
      part.grad_b += err;
    }
  });

  std::fill(grad_w.begin(), grad_w.end(), 0.0);
  grad_b = 0.0;
  double loss = 0.0;
  for (const auto& part : parts) {
    for (std::size_t d = 0; d < dim; ++d) grad_w[d] += part.grad_w[d];
    grad_b += part.grad_b;
    loss += part.loss;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t d = 0; d < dim; ++d) grad_w[d] *= inv_n;
  grad_b *= inv_n;
  return loss * inv_n;
}

double logistic_loss(std::span<const double> X, std::size_t n, std::size_t dim,
                     std::span<const std::int32_t> y, std::span<const double> w,
                     double b) {
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = X.data() + i * dim;
    double z = b;
    for (std::size_t d = 0; d < dim; ++d) z += w[d] * row[d];
    loss += softplus(z) - static_cast<double>(y[i]) * z;
  }
  return loss / static_cast<double>(n);
}

void softmax_inplace(std::span<double> logits) {
  double hi = logits[0];
  for (double v : logits) hi = std::max(hi, v);
  double sum = 0.0;
  for (double& v : logits) {
    v = std::exp(v - hi);
    sum += v;
  }
  for (double& v : logits) v /= sum;
}

namespace {

struct SoftChunk {
  std::vector<double> grad_W;
  std::vector<double> grad_b;
  double loss = 0.0;
};

}  // namespace

double softmax_loss_grad(std::span<const double> X, std::size_t n,
                         std::size_t dim, std::span<const std::int32_t> y,
                         std::size_t classes, std::span<const double> W,
                         std::span<const double> biases,
                         std::span<double> grad_W, std::span<double> grad_b) {
  const std::size_t n_chunks = (n + kRowChunk - 1) / kRowChunk;
  std::vector<SoftChunk> parts(n_chunks);
  parallel_chunks(n, kRowChunk, [&](std::size_t ci, std::size_t begin,
                                    std::size_t end) {
    SoftChunk& part = parts[ci];
    part.grad_W.assign(classes * dim, 0.0);
    part.grad_b.assign(classes, 0.0);
    std::vector<double> logits(classes);
    for (std::size_t i = begin; i < end; ++i) {
      const double* row = X.data() + i * dim;
      double hi = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < classes; ++c) {
        const double* wr = W.data() + c * dim;
        double z = biases[c];
        for (std::size_t d = 0; d < dim; ++d) z += wr[d] * row[d];
        logits[c] = z;
        hi = std::max(hi, z);
      }
      double sum = 0.0;
      for (std::size_t c = 0; c < classes; ++c) {
        logits[c] = std::exp(logits[c] - hi);
        sum += logits[c];
      }
      const auto target = static_cast<std::size_t>(y[i]);
      // -log p_target = -(z_t - hi) + log sum(exp(z - hi))
      part.loss += std::log(sum) - std::log(logits[target]);
      for (std::size_t c = 0; c < classes; ++c) {
        const double err = logits[c] / sum - (c == target ? 1.0 : 0.0);
        double* g = part.grad_W.data() + c * dim;
        for (std::size_t d = 0; d < dim; ++d) g[d] += err * row[d];
        part.grad_b[c] += err;
      }
    }
  });

  std::fill(grad_W.begin(), grad_W.end(), 0.0);
  std::fill(grad_b.begin(), grad_b.end(), 0.0);
  double loss = 0.0;
  for (const auto& part : parts) {
    for (std::size_t v = 0; v < grad_W.size(); ++v) grad_W[v] += part.grad_W[v];
    for (std::size_t c = 0; c < classes; ++c) grad_b[c] += part.grad_b[c];
    loss += part.loss;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (double& v : grad_W) v *= inv_n;
  for (double& v : grad_b) v *= inv_n;
  return loss * inv_n;
}

double softmax_loss(std::span<const double> X, std::size_t n, std::size_t dim,
                    std::span<const std::int32_t> y, std::size_t classes,
                    std::span<const double> W, std::span<const double> biases) {
  double loss = 0.0;
  std::vector<double> logits(classes);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = X.data() + i * dim;
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < classes; ++c) {
      const double* wr = W.data() + c * dim;
      double z = biases[c];
      for (std::size_t d = 0; d < dim; ++d) z += wr[d] * row[d];
      logits[c] = z;
      hi = std::max(hi, z);
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < classes; ++c) sum += std::exp(logits[c] - hi);
    const auto target = static_cast<std::size_t>(y[i]);
    loss += std::log(sum) - (logits[target] - hi);
  }
  return loss / static_cast<double>(n);
}

}  // namespace condfilter
