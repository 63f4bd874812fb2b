#include "wrd/encoders/layers.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "../numerics/eigen_maps.hpp"
#include "wrd/error.hpp"

namespace wrd::enc {

using num::Node;
using num::detail::ConstMatrixMap;
using num::detail::MatrixMap;
using num::detail::RowMatrix;

void SequenceLayout::validate() const {
  if (batch == 0 || seq_len == 0) throw DimensionError("sequence layout needs a nonempty batch");
  if (lengths.size() != batch) {
    throw DimensionError("sequence layout has " + std::to_string(lengths.size()) + " lengths for batch " +
                         std::to_string(batch));
  }
  for (std::size_t len : lengths) {
    if (len == 0 || len > seq_len) {
      throw DimensionError("sequence length " + std::to_string(len) + " outside [1, " + std::to_string(seq_len) +
                           "]");
    }
  }
}

namespace {

void require_rows(const Tensor& t, const SequenceLayout& layout, const char* what) {
  if (t.rank() != 2 || t.dim(0) != layout.rows()) {
    throw DimensionError(std::string(what) + " has shape " + num::shape_str(t.shape()) + ", expected " +
                         std::to_string(layout.rows()) + " rows");
  }
}

bool key_visible(HeadDirection dir, std::size_t query, std::size_t key) {
  switch (dir) {
    case HeadDirection::forward:
      return key <= query;
    case HeadDirection::backward:
      return key >= query;
    case HeadDirection::all:
      break;
  }
  return true;
}

}  // namespace

Tensor multi_head_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                            std::span<const HeadDirection> heads, const SequenceLayout& layout) {
  layout.validate();
  require_rows(q, layout, "attention queries");
  require_rows(k, layout, "attention keys");
  require_rows(v, layout, "attention values");
  const std::size_t d = q.dim(1);
  if (k.dim(1) != d || v.dim(1) != d) throw DimensionError("attention q/k/v widths differ");
  if (heads.empty() || d % heads.size() != 0) {
    throw ConfigError("attention width " + std::to_string(d) + " not divisible into " +
                      std::to_string(heads.size()) + " heads");
  }
  const std::size_t num_heads = heads.size();
  const std::size_t dh = d / num_heads;
  const double factor = 1.0 / std::sqrt(static_cast<double>(dh));
  const std::size_t rows = layout.rows();

  ConstMatrixMap Q(q.data().data(), rows, d), K(k.data().data(), rows, d), V(v.data().data(), rows, d);
  std::vector<double> out(rows * d, 0.0);
  MatrixMap O(out.data(), rows, d);
  // attention weights per (sequence, head), row-major n x n
  std::vector<RowMatrix> weights(layout.batch * num_heads);
  for (std::size_t b = 0; b < layout.batch; ++b) {
    const auto n = static_cast<Eigen::Index>(layout.lengths[b]);
    const auto row0 = static_cast<Eigen::Index>(b * layout.seq_len);
    for (std::size_t h = 0; h < num_heads; ++h) {
      const auto col0 = static_cast<Eigen::Index>(h * dh);
      const auto w = static_cast<Eigen::Index>(dh);
      RowMatrix scores = (Q.block(row0, col0, n, w) * K.block(row0, col0, n, w).transpose()) * factor;
      for (Eigen::Index i = 0; i < n; ++i) {
        double max = -std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < n; ++j)
          if (key_visible(heads[h], i, j)) max = std::max(max, scores(i, j));
        double total = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
          scores(i, j) = key_visible(heads[h], i, j) ? std::exp(scores(i, j) - max) : 0.0;
          total += scores(i, j);
        }
        scores.row(i) /= total;
      }
      O.block(row0, col0, n, w).noalias() = scores * V.block(row0, col0, n, w);
      weights[b * num_heads + h] = std::move(scores);
    }
  }

  SequenceLayout saved = layout;
  return Tensor::make_result(
      {rows, d}, std::move(out), {q, k, v},
      [saved = std::move(saved), weights = std::move(weights), num_heads, dh, d, factor](Node& self) {
        Node& qn = *self.inputs[0];
        Node& kn = *self.inputs[1];
        Node& vn = *self.inputs[2];
        const std::size_t rows = saved.rows();
        ConstMatrixMap G(self.grad.data(), rows, d);
        ConstMatrixMap Q(qn.value.data(), rows, d), K(kn.value.data(), rows, d), V(vn.value.data(), rows, d);
        for (std::size_t b = 0; b < saved.batch; ++b) {
          const auto n = static_cast<Eigen::Index>(saved.lengths[b]);
          const auto row0 = static_cast<Eigen::Index>(b * saved.seq_len);
          for (std::size_t h = 0; h < num_heads; ++h) {
            const auto col0 = static_cast<Eigen::Index>(h * dh);
            const auto w = static_cast<Eigen::Index>(dh);
            const RowMatrix& A = weights[b * num_heads + h];
            const auto dO = G.block(row0, col0, n, w);
            if (vn.requires_grad) {
              MatrixMap(vn.grad.data(), rows, d).block(row0, col0, n, w).noalias() += A.transpose() * dO;
            }
            if (!qn.requires_grad && !kn.requires_grad) continue;
            RowMatrix dA = dO * V.block(row0, col0, n, w).transpose();
            // softmax backward; masked entries have A == 0
            const Eigen::VectorXd row_dot = (dA.array() * A.array()).rowwise().sum();
            RowMatrix dS = (A.array() * (dA.colwise() - row_dot).array()).matrix() * factor;
            if (qn.requires_grad) {
              MatrixMap(qn.grad.data(), rows, d).block(row0, col0, n, w).noalias() +=
                  dS * K.block(row0, col0, n, w);
            }
            if (kn.requires_grad) {
              MatrixMap(kn.grad.data(), rows, d).block(row0, col0, n, w).noalias() +=
                  dS.transpose() * Q.block(row0, col0, n, w);
            }
          }
        }
      });
}

Tensor gru_scan(const Tensor& x, const GruDirectionParams& params, const SequenceLayout& layout, bool reverse) {
  layout.validate();
  require_rows(x, layout, "gru input");
  const std::size_t d_in = x.dim(1);
  const std::size_t h = params.w_hidden.dim(0);
  if (params.w_input.shape() != num::Shape{d_in, 3 * h} || params.w_hidden.shape() != num::Shape{h, 3 * h} ||
      params.bias.size() != 3 * h) {
    throw DimensionError("gru parameters " + num::shape_str(params.w_input.shape()) + "/" +
                         num::shape_str(params.w_hidden.shape()) + "/" + num::shape_str(params.bias.shape()) +
                         " do not match input width " + std::to_string(d_in));
  }
  const std::size_t rows = layout.rows();
  const std::size_t B = layout.batch, L = layout.seq_len;
  const auto hi = static_cast<Eigen::Index>(h);

  // input contributions for every row: x Wx + b
  RowMatrix xw = ConstMatrixMap(x.data().data(), rows, d_in) * ConstMatrixMap(params.w_input.data().data(), d_in, 3 * h);
  xw.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(params.bias.data().data(), static_cast<Eigen::Index>(3 * h));
  ConstMatrixMap Wh(params.w_hidden.data().data(), h, 3 * h);

  // per-row caches for backward
  RowMatrix h_prev = RowMatrix::Zero(rows, hi), z = RowMatrix::Zero(rows, hi), r = RowMatrix::Zero(rows, hi),
            c = RowMatrix::Zero(rows, hi);
  std::vector<double> out(rows * h, 0.0);
  MatrixMap O(out.data(), rows, h);

  RowMatrix state = RowMatrix::Zero(static_cast<Eigen::Index>(B), hi);
  RowMatrix reset_state(static_cast<Eigen::Index>(B), hi);
  for (std::size_t step = 0; step < L; ++step) {
    const std::size_t t = reverse ? L - 1 - step : step;
    const RowMatrix zr = state * Wh.leftCols(2 * hi);
    reset_state.setZero();
    for (std::size_t b = 0; b < B; ++b) {
      if (t >= layout.lengths[b]) continue;
      const auto row = static_cast<Eigen::Index>(b * L + t);
      const auto bi = static_cast<Eigen::Index>(b);
      for (Eigen::Index j = 0; j < hi; ++j) {
        z(row, j) = 1.0 / (1.0 + std::exp(-(xw(row, j) + zr(bi, j))));
        r(row, j) = 1.0 / (1.0 + std::exp(-(xw(row, hi + j) + zr(bi, hi + j))));
        h_prev(row, j) = state(bi, j);
        reset_state(bi, j) = r(row, j) * state(bi, j);
      }
    }
    const RowMatrix cand = reset_state * Wh.rightCols(hi);
    for (std::size_t b = 0; b < B; ++b) {
      if (t >= layout.lengths[b]) continue;
      const auto row = static_cast<Eigen::Index>(b * L + t);
      const auto bi = static_cast<Eigen::Index>(b);
      for (Eigen::Index j = 0; j < hi; ++j) {
        c(row, j) = std::tanh(xw(row, 2 * hi + j) + cand(bi, j));
        state(bi, j) = (1.0 - z(row, j)) * state(bi, j) + z(row, j) * c(row, j);
        O(row, j) = state(bi, j);
      }
    }
  }

  SequenceLayout saved = layout;
  return Tensor::make_result(
      {rows, h}, std::move(out), {x, params.w_input, params.w_hidden, params.bias},
      [saved = std::move(saved), reverse, d_in, h, h_prev = std::move(h_prev), z = std::move(z), r = std::move(r),
       c = std::move(c)](Node& self) {
        Node& xn = *self.inputs[0];
        Node& wxn = *self.inputs[1];
        Node& whn = *self.inputs[2];
        Node& bn = *self.inputs[3];
        const std::size_t B = saved.batch, L = saved.seq_len, rows = saved.rows();
        const auto hi = static_cast<Eigen::Index>(h);
        const auto Bi = static_cast<Eigen::Index>(B);
        ConstMatrixMap G(self.grad.data(), rows, h);
        ConstMatrixMap Wh(whn.value.data(), h, 3 * h);

        RowMatrix dxw = RowMatrix::Zero(static_cast<Eigen::Index>(rows), 3 * hi);
        RowMatrix dWh = RowMatrix::Zero(hi, 3 * hi);
        RowMatrix carry = RowMatrix::Zero(Bi, hi);
        RowMatrix dh(Bi, hi), dcand(Bi, hi), dgates(Bi, 2 * hi), reset_state(Bi, hi), prev(Bi, hi);
        for (std::size_t step = L; step-- > 0;) {
          const std::size_t t = reverse ? L - 1 - step : step;
          dh = carry;
          dcand.setZero();
          dgates.setZero();
          reset_state.setZero();
          prev.setZero();
          for (std::size_t b = 0; b < B; ++b) {
            if (t >= saved.lengths[b]) continue;
            const auto row = static_cast<Eigen::Index>(b * L + t);
            const auto bi = static_cast<Eigen::Index>(b);
            for (Eigen::Index j = 0; j < hi; ++j) {
              const double g = dh(bi, j) + G(row, j);
              dh(bi, j) = g;
              const double dc = g * z(row, j);
              dcand(bi, j) = dc * (1.0 - c(row, j) * c(row, j));
              dxw(row, 2 * hi + j) = dcand(bi, j);
              // update gate pre-activation
              dgates(bi, j) = g * (c(row, j) - h_prev(row, j)) * z(row, j) * (1.0 - z(row, j));
              reset_state(bi, j) = r(row, j) * h_prev(row, j);
              prev(bi, j) = h_prev(row, j);
            }
          }
          dWh.rightCols(hi).noalias() += reset_state.transpose() * dcand;
          const RowMatrix d_reset_state = dcand * Wh.rightCols(hi).transpose();
          for (std::size_t b = 0; b < B; ++b) {
            const auto bi = static_cast<Eigen::Index>(b);
            if (t >= saved.lengths[b]) {
              continue;  // padded step: state passes through untouched
            }
            const auto row = static_cast<Eigen::Index>(b * L + t);
            for (Eigen::Index j = 0; j < hi; ++j) {
              const double dr = d_reset_state(bi, j) * h_prev(row, j);
              dgates(bi, hi + j) = dr * r(row, j) * (1.0 - r(row, j));
              dxw(row, j) = dgates(bi, j);
              dxw(row, hi + j) = dgates(bi, hi + j);
              carry(bi, j) = dh(bi, j) * (1.0 - z(row, j)) + d_reset_state(bi, j) * r(row, j);
            }
          }
          dWh.leftCols(2 * hi).noalias() += prev.transpose() * dgates;
          const RowMatrix d_prev = dgates * Wh.leftCols(2 * hi).transpose();
          for (std::size_t b = 0; b < B; ++b) {
            const auto bi = static_cast<Eigen::Index>(b);
            if (t >= saved.lengths[b]) continue;
            carry.row(bi) += d_prev.row(bi);
          }
        }

        if (xn.requires_grad) {
          MatrixMap(xn.grad.data(), rows, d_in).noalias() +=
              dxw * ConstMatrixMap(wxn.value.data(), d_in, 3 * h).transpose();
        }
        if (wxn.requires_grad) {
          MatrixMap(wxn.grad.data(), d_in, 3 * h).noalias() += ConstMatrixMap(xn.value.data(), rows, d_in).transpose() * dxw;
        }
        if (whn.requires_grad) MatrixMap(whn.grad.data(), h, 3 * h) += dWh;
        if (bn.requires_grad) {
          Eigen::Map<Eigen::RowVectorXd>(bn.grad.data(), 3 * hi) += dxw.colwise().sum();
        }
      });
}

}  // namespace wrd::enc
