// Copyright 2026 The DIVE Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dive/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

#include "dive/error.hpp"

namespace dive {
namespace {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using MapMat = Eigen::Map<Mat<S>>;
template <typename S>
using ConstMapMat = Eigen::Map<const Mat<S>>;
template <typename S>
using StridedMap = Eigen::Map<Mat<S>, 0, Eigen::OuterStride<>>;
template <typename S>
using ConstStridedMap = Eigen::Map<const Mat<S>, 0, Eigen::OuterStride<>>;
template <typename S>
using RowVec = Eigen::Matrix<S, 1, Eigen::Dynamic>;

template <typename S>
ConstMapMat<S> as_matrix(const BasicTensor<S>& t, std::size_t rows, std::size_t cols) {
  return ConstMapMat<S>(t.data(), static_cast<Eigen::Index>(rows),
                        static_cast<Eigen::Index>(cols));
}

template <typename S>
MapMat<S> as_matrix(std::span<S> buf, std::size_t rows, std::size_t cols) {
  return MapMat<S>(buf.data(), static_cast<Eigen::Index>(rows),
                   static_cast<Eigen::Index>(cols));
}

template <typename S>
ConstMapMat<S> as_matrix(std::span<const S> buf, std::size_t rows, std::size_t cols) {
  return ConstMapMat<S>(buf.data(), static_cast<Eigen::Index>(rows),
                        static_cast<Eigen::Index>(cols));
}

[[noreturn]] void shape_error(const std::string& op, const std::string& detail) {
  throw InvalidArgument(op + ": " + detail);
}

void require_rank(const std::string& op, const Shape& s, std::size_t rank) {
  if (s.size() != rank) {
    shape_error(op, "expected rank " + std::to_string(rank) + ", got " + shape_string(s));
  }
}

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

template <typename S>
Tape<S>& tape_of(const Var<S>& v) {
  if (!v.valid()) throw InvalidArgument("operation on an unbound variable");
  return *v.tape();
}

}  // namespace

template <typename S>
Var<S> conv1d(const Var<S>& input, const Var<S>& kernel, const Var<S>& bias,
              std::size_t stride, std::size_t dilation) {
  const Shape& xs = input.shape();
  const Shape& ks = kernel.shape();
  require_rank("conv1d input", xs, 2);
  require_rank("conv1d kernel", ks, 3);
  if (stride < 1 || dilation < 1) shape_error("conv1d", "stride and dilation must be >= 1");
  const std::size_t t_in = xs[0], c_in = xs[1];
  const std::size_t taps = ks[0], c_out = ks[2];
  if (taps < 1) shape_error("conv1d", "kernel size must be >= 1");
  if (ks[1] != c_in) {
    shape_error("conv1d", "kernel " + shape_string(ks) + " expects " + std::to_string(ks[1]) +
                              " input channels, input " + shape_string(xs) + " has " +
                              std::to_string(c_in));
  }
  if (bias.valid() && bias.shape() != Shape{c_out}) {
    shape_error("conv1d", "bias " + shape_string(bias.shape()) + " vs " + std::to_string(c_out) +
                              " output channels");
  }
  if (t_in == 0) shape_error("conv1d", "empty input");

  const std::size_t t_out = ceil_div(t_in, stride);
  const std::size_t left = (taps - 1) * dilation / 2;
  const std::size_t t_pad = (t_out - 1) * stride + (taps - 1) * dilation + 1;

  // Zero-padded copy; rows outside the input stay zero.
  Buffer<S> padded(t_pad * c_in, S(0));
  const BasicTensor<S>& x = input.value();
  for (std::size_t j = left; j < t_pad && j - left < t_in; ++j) {
    std::copy_n(x.data() + (j - left) * c_in, c_in, padded.data() + j * c_in);
  }

  BasicTensor<S> out(Shape{t_out, c_out});
  auto y = as_matrix(out.values(), t_out, c_out);
  y.setZero();
  if (bias.valid()) y.rowwise() += as_matrix(bias.value(), 1, c_out).row(0);
  const BasicTensor<S>& w = kernel.value();
  const auto outer = Eigen::OuterStride<>(static_cast<Eigen::Index>(stride * c_in));
  for (std::size_t k = 0; k < taps; ++k) {
    ConstStridedMap<S> xk(padded.data() + k * dilation * c_in, static_cast<Eigen::Index>(t_out),
                          static_cast<Eigen::Index>(c_in), outer);
    y.noalias() += xk * as_matrix(std::span<const S>(w.data() + k * c_in * c_out, c_in * c_out), c_in, c_out);
  }

  Tape<S>& tape = tape_of(input);
  std::vector<Var<S>> inputs{input, kernel};
  if (bias.valid()) inputs.push_back(bias);
  return tape.record(
      std::move(out), inputs,
      [input, kernel, bias, stride, dilation, t_in, c_in, taps, c_out, t_out, left, t_pad,
       padded = std::move(padded)](Tape<S>& tp, std::span<const S> g) {
        auto dy = as_matrix(g, t_out, c_out);
        const auto outer = Eigen::OuterStride<>(static_cast<Eigen::Index>(stride * c_in));
        if (bias.valid() && tp.requires_grad(bias)) {
          auto db = as_matrix(tp.grad_buffer(bias), 1, c_out);
          db += dy.colwise().sum();
        }
        if (tp.requires_grad(kernel)) {
          auto dw = tp.grad_buffer(kernel);
          for (std::size_t k = 0; k < taps; ++k) {
            ConstStridedMap<S> xk(padded.data() + k * dilation * c_in,
                                  static_cast<Eigen::Index>(t_out),
                                  static_cast<Eigen::Index>(c_in), outer);
            as_matrix(dw.subspan(k * c_in * c_out, c_in * c_out), c_in, c_out).noalias() +=
                xk.transpose() * dy;
          }
        }
        if (tp.requires_grad(input)) {
          Buffer<S> dpad(t_pad * c_in, S(0));
          const BasicTensor<S>& w = kernel.value();
          for (std::size_t k = 0; k < taps; ++k) {
            StridedMap<S> dk(dpad.data() + k * dilation * c_in, static_cast<Eigen::Index>(t_out),
                             static_cast<Eigen::Index>(c_in), outer);
            dk.noalias() +=
                dy * as_matrix(std::span<const S>(w.data() + k * c_in * c_out, c_in * c_out),
                               c_in, c_out)
                         .transpose();
          }
          auto dx = tp.grad_buffer(input);
          for (std::size_t j = left; j < t_pad && j - left < t_in; ++j) {
            const S* src = dpad.data() + j * c_in;
            S* dst = dx.data() + (j - left) * c_in;
            for (std::size_t c = 0; c < c_in; ++c) dst[c] += src[c];
          }
        }
      });
}

template <typename S>
Var<S> avg_pool1d(const Var<S>& input, std::size_t kernel, std::size_t stride) {
  const Shape& xs = input.shape();
  require_rank("avg_pool1d input", xs, 2);
  if (kernel < 1 || stride < 1) shape_error("avg_pool1d", "kernel and stride must be >= 1");
  const std::size_t t_in = xs[0], channels = xs[1];
  if (t_in == 0) shape_error("avg_pool1d", "empty input");
  const std::size_t t_out = ceil_div(t_in, stride);
  const std::size_t left = (kernel - 1) / 2;
  const S inv = S(1) / static_cast<S>(kernel);
  const BasicTensor<S>& x = input.value();

  BasicTensor<S> out(Shape{t_out, channels});
  for (std::size_t t = 0; t < t_out; ++t) {
    S* dst = out.data() + t * channels;
    for (std::size_t k = 0; k < kernel; ++k) {
      const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t * stride + k) -
                                 static_cast<std::ptrdiff_t>(left);
      if (src < 0 || src >= static_cast<std::ptrdiff_t>(t_in)) continue;
      const S* row = x.data() + static_cast<std::size_t>(src) * channels;
      for (std::size_t c = 0; c < channels; ++c) dst[c] += row[c];
    }
    for (std::size_t c = 0; c < channels; ++c) dst[c] *= inv;
  }
  return tape_of(input).record(
      std::move(out), {input},
      [input, kernel, stride, t_in, t_out, channels, left, inv](Tape<S>& tp,
                                                                 std::span<const S> g) {
        auto dx = tp.grad_buffer(input);
        for (std::size_t t = 0; t < t_out; ++t) {
          const S* gt = g.data() + t * channels;
          for (std::size_t k = 0; k < kernel; ++k) {
            const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t * stride + k) -
                                       static_cast<std::ptrdiff_t>(left);
            if (src < 0 || src >= static_cast<std::ptrdiff_t>(t_in)) continue;
            S* row = dx.data() + static_cast<std::size_t>(src) * channels;
            for (std::size_t c = 0; c < channels; ++c) row[c] += gt[c] * inv;
          }
        }
      });
}

template <typename S>
Var<S> prelu(const Var<S>& x, const Var<S>& slope) {
  const std::size_t cols = x.value().cols();
  const std::size_t ns = slope.value().size();
  if (ns != 1 && ns != cols) {
    shape_error("prelu", "slope " + shape_string(slope.shape()) + " vs input " +
                             shape_string(x.shape()));
  }
  const BasicTensor<S>& xv = x.value();
  const BasicTensor<S>& a = slope.value();
  BasicTensor<S> out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) {
    const S v = xv[i];
    out[i] = v > S(0) ? v : a[ns == 1 ? 0 : i % cols] * v;
  }
  return tape_of(x).record(std::move(out), {x, slope},
                           [x, slope, cols, ns](Tape<S>& tp, std::span<const S> g) {
                             const BasicTensor<S>& xv = x.value();
                             const BasicTensor<S>& a = slope.value();
                             if (tp.requires_grad(x)) {
                               auto dx = tp.grad_buffer(x);
                               for (std::size_t i = 0; i < xv.size(); ++i) {
                                 dx[i] += xv[i] > S(0) ? g[i] : a[ns == 1 ? 0 : i % cols] * g[i];
                               }
                             }
                             if (tp.requires_grad(slope)) {
                               auto da = tp.grad_buffer(slope);
                               for (std::size_t i = 0; i < xv.size(); ++i) {
                                 if (xv[i] <= S(0)) da[ns == 1 ? 0 : i % cols] += g[i] * xv[i];
                               }
                             }
                           });
}

namespace {
template <typename S>
S stable_sigmoid(S v) {
  if (v >= S(0)) return S(1) / (S(1) + std::exp(-v));
  const S e = std::exp(v);
  return e / (S(1) + e);
}
}  // namespace

template <typename S>
Var<S> sigmoid(const Var<S>& x) {
  const BasicTensor<S>& xv = x.value();
  BasicTensor<S> out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = stable_sigmoid(xv[i]);
  Tape<S>& tape = tape_of(x);
  const std::size_t id = tape.size();
  return tape.record(std::move(out), {x}, [x, id](Tape<S>& tp, std::span<const S> g) {
    const BasicTensor<S>& y = tp.value(id);
    auto dx = tp.grad_buffer(x);
    for (std::size_t i = 0; i < y.size(); ++i) dx[i] += g[i] * y[i] * (S(1) - y[i]);
  });
}

template <typename S>
Var<S> log_sigmoid(const Var<S>& x) {
  const BasicTensor<S>& xv = x.value();
  BasicTensor<S> out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) {
    const S v = xv[i];
    out[i] = std::min(v, S(0)) - std::log1p(std::exp(-std::abs(v)));
  }
  return tape_of(x).record(std::move(out), {x}, [x](Tape<S>& tp, std::span<const S> g) {
    const BasicTensor<S>& xv = x.value();
    auto dx = tp.grad_buffer(x);
    for (std::size_t i = 0; i < xv.size(); ++i) dx[i] += g[i] * stable_sigmoid(-xv[i]);
  });
}

template <typename S>
Var<S> softmax(const Var<S>& x) {
  const BasicTensor<S>& xv = x.value();
  const std::size_t rows = xv.rows(), cols = xv.cols();
  BasicTensor<S> out(xv.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const S* src = xv.data() + r * cols;
    S* dst = out.data() + r * cols;
    const S mx = *std::max_element(src, src + cols);
    S total = 0;
    for (std::size_t c = 0; c < cols; ++c) {
      dst[c] = std::exp(src[c] - mx);
      total += dst[c];
    }
    for (std::size_t c = 0; c < cols; ++c) dst[c] /= total;
  }
  Tape<S>& tape = tape_of(x);
  const std::size_t id = tape.size();
  return tape.record(std::move(out), {x}, [x, id, rows, cols](Tape<S>& tp, std::span<const S> g) {
    const BasicTensor<S>& y = tp.value(id);
    auto dx = tp.grad_buffer(x);
    for (std::size_t r = 0; r < rows; ++r) {
      const S* yr = y.data() + r * cols;
      const S* gr = g.data() + r * cols;
      S inner = 0;
      for (std::size_t c = 0; c < cols; ++c) inner += gr[c] * yr[c];
      for (std::size_t c = 0; c < cols; ++c) dx[r * cols + c] += yr[c] * (gr[c] - inner);
    }
  });
}

template <typename S>
Var<S> layer_norm(const Var<S>& x, const Var<S>& gain, const Var<S>& bias, double eps) {
  const BasicTensor<S>& xv = x.value();
  const std::size_t rows = xv.rows(), cols = xv.cols();
  if (gain.value().size() != cols || bias.value().size() != cols) {
    shape_error("layer_norm", "gain/bias " + shape_string(gain.shape()) + "/" +
                                  shape_string(bias.shape()) + " vs input " +
                                  shape_string(xv.shape()));
  }
  BasicTensor<S> out(xv.shape());
  std::vector<S> normalized(xv.size());
  std::vector<S> rstd(rows);
  const S* gv = gain.value().data();
  const S* bv = bias.value().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const S* src = xv.data() + r * cols;
    S mean = 0;
    for (std::size_t c = 0; c < cols; ++c) mean += src[c];
    mean /= static_cast<S>(cols);
    S var = 0;
    for (std::size_t c = 0; c < cols; ++c) var += (src[c] - mean) * (src[c] - mean);
    var /= static_cast<S>(cols);
    const S inv = S(1) / std::sqrt(var + static_cast<S>(eps));
    rstd[r] = inv;
    for (std::size_t c = 0; c < cols; ++c) {
      const S h = (src[c] - mean) * inv;
      normalized[r * cols + c] = h;
      out[r * cols + c] = h * gv[c] + bv[c];
    }
  }
  return tape_of(x).record(
      std::move(out), {x, gain, bias},
      [x, gain, bias, rows, cols, normalized = std::move(normalized),
       rstd = std::move(rstd)](Tape<S>& tp, std::span<const S> g) {
        const S* gv = gain.value().data();
        if (tp.requires_grad(gain) || tp.requires_grad(bias)) {
          auto dg = tp.grad_buffer(gain);
          auto db = tp.grad_buffer(bias);
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) {
              dg[c] += g[r * cols + c] * normalized[r * cols + c];
              db[c] += g[r * cols + c];
            }
          }
        }
        if (tp.requires_grad(x)) {
          auto dx = tp.grad_buffer(x);
          const S n = static_cast<S>(cols);
          for (std::size_t r = 0; r < rows; ++r) {
            S mean_dh = 0, mean_dh_h = 0;
            for (std::size_t c = 0; c < cols; ++c) {
              const S dh = g[r * cols + c] * gv[c];
              mean_dh += dh;
              mean_dh_h += dh * normalized[r * cols + c];
            }
            mean_dh /= n;
            mean_dh_h /= n;
            for (std::size_t c = 0; c < cols; ++c) {
              const S dh = g[r * cols + c] * gv[c];
              dx[r * cols + c] +=
                  rstd[r] * (dh - mean_dh - normalized[r * cols + c] * mean_dh_h);
            }
          }
        }
      });
}

template <typename S>
Var<S> linear(const Var<S>& x, const Var<S>& weight, const Var<S>& bias) {
  const Shape& xs = x.shape();
  require_rank("linear weight", weight.shape(), 2);
  if (xs.empty()) shape_error("linear", "scalar input");
  const std::size_t c_in = weight.shape()[0], c_out = weight.shape()[1];
  if (xs.back() != c_in) {
    shape_error("linear", "input " + shape_string(xs) + " vs weight " +
                              shape_string(weight.shape()));
  }
  if (bias.valid() && bias.shape() != Shape{c_out}) {
    shape_error("linear", "bias " + shape_string(bias.shape()) + " vs weight " +
                              shape_string(weight.shape()));
  }
  const std::size_t rows = x.value().rows();
  Shape out_shape = xs;
  out_shape.back() = c_out;
  BasicTensor<S> out(out_shape);
  auto y = as_matrix(out.values(), rows, c_out);
  y.noalias() = as_matrix(x.value(), rows, c_in) * as_matrix(weight.value(), c_in, c_out);
  if (bias.valid()) y.rowwise() += as_matrix(bias.value(), 1, c_out).row(0);

  std::vector<Var<S>> inputs{x, weight};
  if (bias.valid()) inputs.push_back(bias);
  return tape_of(x).record(
      std::move(out), inputs,
      [x, weight, bias, rows, c_in, c_out](Tape<S>& tp, std::span<const S> g) {
        auto dy = as_matrix(g, rows, c_out);
        if (tp.requires_grad(x)) {
          as_matrix(tp.grad_buffer(x), rows, c_in).noalias() +=
              dy * as_matrix(weight.value(), c_in, c_out).transpose();
        }
        if (tp.requires_grad(weight)) {
          as_matrix(tp.grad_buffer(weight), c_in, c_out).noalias() +=
              as_matrix(x.value(), rows, c_in).transpose() * dy;
        }
        if (bias.valid() && tp.requires_grad(bias)) {
          as_matrix(tp.grad_buffer(bias), 1, c_out) += dy.colwise().sum();
        }
      });
}

template <typename S>
Var<S> matmul(const Var<S>& a, const Var<S>& b) {
  require_rank("matmul lhs", a.shape(), 2);
  require_rank("matmul rhs", b.shape(), 2);
  const std::size_t n = a.shape()[0], k = a.shape()[1], m = b.shape()[1];
  if (b.shape()[0] != k) {
    shape_error("matmul", shape_string(a.shape()) + " x " + shape_string(b.shape()));
  }
  BasicTensor<S> out(Shape{n, m});
  as_matrix(out.values(), n, m).noalias() = as_matrix(a.value(), n, k) * as_matrix(b.value(), k, m);
  return tape_of(a).record(std::move(out), {a, b}, [a, b, n, k, m](Tape<S>& tp, std::span<const S> g) {
    auto dy = as_matrix(g, n, m);
    if (tp.requires_grad(a)) {
      as_matrix(tp.grad_buffer(a), n, k).noalias() += dy * as_matrix(b.value(), k, m).transpose();
    }
    if (tp.requires_grad(b)) {
      as_matrix(tp.grad_buffer(b), k, m).noalias() += as_matrix(a.value(), n, k).transpose() * dy;
    }
  });
}

template <typename S>
Var<S> transpose(const Var<S>& a) {
  require_rank("transpose", a.shape(), 2);
  const std::size_t n = a.shape()[0], m = a.shape()[1];
  BasicTensor<S> out(Shape{m, n});
  as_matrix(out.values(), m, n) = as_matrix(a.value(), n, m).transpose();
  return tape_of(a).record(std::move(out), {a}, [a, n, m](Tape<S>& tp, std::span<const S> g) {
    as_matrix(tp.grad_buffer(a), n, m) += as_matrix(g, m, n).transpose();
  });
}

template <typename S>
Var<S> dot(const Var<S>& a, const Var<S>& b) {
  require_rank("dot lhs", a.shape(), 1);
  if (a.shape() != b.shape()) {
    shape_error("dot", shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
  S total = 0;
  const std::size_t n = a.value().size();
  for (std::size_t i = 0; i < n; ++i) total += a.value()[i] * b.value()[i];
  return tape_of(a).record(BasicTensor<S>::scalar(total), {a, b},
                           [a, b, n](Tape<S>& tp, std::span<const S> g) {
                             if (tp.requires_grad(a)) {
                               auto da = tp.grad_buffer(a);
                               for (std::size_t i = 0; i < n; ++i) da[i] += g[0] * b.value()[i];
                             }
                             if (tp.requires_grad(b)) {
                               auto db = tp.grad_buffer(b);
                               for (std::size_t i = 0; i < n; ++i) db[i] += g[0] * a.value()[i];
                             }
                           });
}

template <typename S>
Var<S> concat(std::span<const Var<S>> parts) {
  if (parts.empty()) shape_error("concat", "no inputs");
  Shape lead = parts[0].shape();
  if (lead.empty()) shape_error("concat", "scalar input");
  lead.pop_back();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    Shape s = p.shape();
    if (s.empty()) shape_error("concat", "scalar input");
    widths.push_back(s.back());
    total += s.back();
    s.pop_back();
    if (s != lead) {
      shape_error("concat", "leading dims " + shape_string(s) + " vs " + shape_string(lead));
    }
  }
  const std::size_t rows = shape_size(lead);
  Shape out_shape = lead;
  out_shape.push_back(total);
  BasicTensor<S> out(out_shape);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const BasicTensor<S>& v = parts[k].value();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(v.data() + r * widths[k], widths[k], out.data() + r * total + offset);
    }
    offset += widths[k];
  }
  std::vector<Var<S>> saved(parts.begin(), parts.end());
  return tape_of(parts[0]).record(
      std::move(out), parts,
      [saved, widths, rows, total](Tape<S>& tp, std::span<const S> g) {
        std::size_t offset = 0;
        for (std::size_t k = 0; k < saved.size(); ++k) {
          if (tp.requires_grad(saved[k])) {
            auto d = tp.grad_buffer(saved[k]);
            for (std::size_t r = 0; r < rows; ++r) {
              for (std::size_t c = 0; c < widths[k]; ++c) {
                d[r * widths[k] + c] += g[r * total + offset + c];
              }
            }
          }
          offset += widths[k];
        }
      });
}

template <typename S>
Var<S> concat_rows(std::span<const Var<S>> parts) {
  if (parts.empty()) shape_error("concat_rows", "no inputs");
  Shape trail = parts[0].shape();
  if (trail.empty()) shape_error("concat_rows", "scalar input");
  trail.erase(trail.begin());
  std::size_t leading = 0;
  std::vector<std::size_t> sizes;
  for (const auto& p : parts) {
    Shape s = p.shape();
    if (s.empty()) shape_error("concat_rows", "scalar input");
    leading += s[0];
    sizes.push_back(p.value().size());
    s.erase(s.begin());
    if (s != trail) {
      shape_error("concat_rows", "trailing dims " + shape_string(s) + " vs " + shape_string(trail));
    }
  }
  Shape out_shape = trail;
  out_shape.insert(out_shape.begin(), leading);
  BasicTensor<S> out(out_shape);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    std::copy_n(parts[k].value().data(), sizes[k], out.data() + offset);
    offset += sizes[k];
  }
  std::vector<Var<S>> saved(parts.begin(), parts.end());
  return tape_of(parts[0]).record(std::move(out), parts,
                                  [saved, sizes](Tape<S>& tp, std::span<const S> g) {
                                    std::size_t offset = 0;
                                    for (std::size_t k = 0; k < saved.size(); ++k) {
                                      if (tp.requires_grad(saved[k])) {
                                        auto d = tp.grad_buffer(saved[k]);
                                        for (std::size_t i = 0; i < sizes[k]; ++i) {
                                          d[i] += g[offset + i];
                                        }
                                      }
                                      offset += sizes[k];
                                    }
                                  });
}

template <typename S>
Var<S> slice_last(const Var<S>& x, std::size_t begin, std::size_t count) {
  const BasicTensor<S>& xv = x.value();
  if (xv.rank() == 0) shape_error("slice_last", "scalar input");
  const std::size_t rows = xv.rows(), cols = xv.cols();
  if (begin + count > cols) {
    shape_error("slice_last", "range [" + std::to_string(begin) + ", " +
                                  std::to_string(begin + count) + ") exceeds " +
                                  shape_string(xv.shape()));
  }
  Shape out_shape = xv.shape();
  out_shape.back() = count;
  BasicTensor<S> out(out_shape);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(xv.data() + r * cols + begin, count, out.data() + r * count);
  }
  return tape_of(x).record(std::move(out), {x},
                           [x, rows, cols, begin, count](Tape<S>& tp, std::span<const S> g) {
                             auto dx = tp.grad_buffer(x);
                             for (std::size_t r = 0; r < rows; ++r) {
                               for (std::size_t c = 0; c < count; ++c) {
                                 dx[r * cols + begin + c] += g[r * count + c];
                               }
                             }
                           });
}

template <typename S>
Var<S> row(const Var<S>& x, std::size_t index) {
  require_rank("row", x.shape(), 2);
  const std::size_t rows = x.shape()[0], cols = x.shape()[1];
  if (index >= rows) {
    shape_error("row", "index " + std::to_string(index) + " outside " + shape_string(x.shape()));
  }
  BasicTensor<S> out(Shape{cols});
  std::copy_n(x.value().data() + index * cols, cols, out.data());
  return tape_of(x).record(std::move(out), {x}, [x, index, cols](Tape<S>& tp, std::span<const S> g) {
    auto dx = tp.grad_buffer(x);
    for (std::size_t c = 0; c < cols; ++c) dx[index * cols + c] += g[c];
  });
}

template <typename S>
Var<S> reduce_mean(const Var<S>& x, std::size_t axis) {
  const Shape& xs = x.shape();
  if (axis >= xs.size()) {
    shape_error("reduce_mean", "axis " + std::to_string(axis) + " outside " + shape_string(xs));
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= xs[i];
  for (std::size_t i = axis + 1; i < xs.size(); ++i) inner *= xs[i];
  const std::size_t n = xs[axis];
  if (n == 0) shape_error("reduce_mean", "empty axis");
  Shape out_shape = xs;
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  BasicTensor<S> out(out_shape);
  const S inv = S(1) / static_cast<S>(n);
  const BasicTensor<S>& xv = x.value();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t i = 0; i < inner; ++i) {
        out[o * inner + i] += xv[(o * n + k) * inner + i];
      }
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= inv;
  return tape_of(x).record(std::move(out), {x},
                           [x, outer, inner, n, inv](Tape<S>& tp, std::span<const S> g) {
                             auto dx = tp.grad_buffer(x);
                             for (std::size_t o = 0; o < outer; ++o) {
                               for (std::size_t k = 0; k < n; ++k) {
                                 for (std::size_t i = 0; i < inner; ++i) {
                                   dx[(o * n + k) * inner + i] += g[o * inner + i] * inv;
                                 }
                               }
                             }
                           });
}

template <typename S>
Var<S> sum(const Var<S>& x) {
  S total = 0;
  for (S v : x.value().values()) total += v;
  return tape_of(x).record(BasicTensor<S>::scalar(total), {x},
                           [x](Tape<S>& tp, std::span<const S> g) {
                             for (S& d : tp.grad_buffer(x)) d += g[0];
                           });
}

namespace {
template <typename S>
void require_same(const char* op, const Var<S>& a, const Var<S>& b) {
  if (a.shape() != b.shape()) {
    shape_error(op, shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
}
}  // namespace

template <typename S>
Var<S> add(const Var<S>& a, const Var<S>& b) {
  require_same("add", a, b);
  BasicTensor<S> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
  return tape_of(a).record(std::move(out), {a, b}, [a, b](Tape<S>& tp, std::span<const S> g) {
    if (tp.requires_grad(a)) {
      auto d = tp.grad_buffer(a);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i];
    }
    if (tp.requires_grad(b)) {
      auto d = tp.grad_buffer(b);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i];
    }
  });
}

template <typename S>
Var<S> sub(const Var<S>& a, const Var<S>& b) {
  require_same("sub", a, b);
  BasicTensor<S> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] - b.value()[i];
  return tape_of(a).record(std::move(out), {a, b}, [a, b](Tape<S>& tp, std::span<const S> g) {
    if (tp.requires_grad(a)) {
      auto d = tp.grad_buffer(a);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i];
    }
    if (tp.requires_grad(b)) {
      auto d = tp.grad_buffer(b);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] -= g[i];
    }
  });
}

template <typename S>
Var<S> mul(const Var<S>& a, const Var<S>& b) {
  require_same("mul", a, b);
  BasicTensor<S> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  return tape_of(a).record(std::move(out), {a, b}, [a, b](Tape<S>& tp, std::span<const S> g) {
    if (tp.requires_grad(a)) {
      auto d = tp.grad_buffer(a);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i] * b.value()[i];
    }
    if (tp.requires_grad(b)) {
      auto d = tp.grad_buffer(b);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i] * a.value()[i];
    }
  });
}

template <typename S>
Var<S> scale(const Var<S>& x, double factor) {
  const S f = static_cast<S>(factor);
  BasicTensor<S> out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.value()[i] * f;
  return tape_of(x).record(std::move(out), {x}, [x, f](Tape<S>& tp, std::span<const S> g) {
    auto d = tp.grad_buffer(x);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i] * f;
  });
}

template <typename S>
Var<S> reshape(const Var<S>& x, Shape shape) {
  BasicTensor<S> out = x.value().reshaped(std::move(shape));
  return tape_of(x).record(std::move(out), {x}, [x](Tape<S>& tp, std::span<const S> g) {
    auto d = tp.grad_buffer(x);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i];
  });
}

template <typename S>
Var<S> mean_of(std::span<const Var<S>> parts) {
  if (parts.empty()) shape_error("mean_of", "no inputs");
  const Shape& s = parts[0].shape();
  for (const auto& p : parts) {
    if (p.shape() != s) shape_error("mean_of", shape_string(p.shape()) + " vs " + shape_string(s));
  }
  const S inv = S(1) / static_cast<S>(parts.size());
  BasicTensor<S> out(s);
  for (const auto& p : parts) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += p.value()[i];
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= inv;
  std::vector<Var<S>> saved(parts.begin(), parts.end());
  return tape_of(parts[0]).record(std::move(out), parts,
                                  [saved, inv](Tape<S>& tp, std::span<const S> g) {
                                    for (const auto& p : saved) {
                                      if (!tp.requires_grad(p)) continue;
                                      auto d = tp.grad_buffer(p);
                                      for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i] * inv;
                                    }
                                  });
}

#define DIVE_INSTANTIATE_OPS(S)                                                              \
  template Var<S> conv1d(const Var<S>&, const Var<S>&, const Var<S>&, std::size_t,           \
                         std::size_t);                                                       \
  template Var<S> avg_pool1d(const Var<S>&, std::size_t, std::size_t);                       \
  template Var<S> prelu(const Var<S>&, const Var<S>&);                                       \
  template Var<S> sigmoid(const Var<S>&);                                                    \
  template Var<S> log_sigmoid(const Var<S>&);                                                \
  template Var<S> softmax(const Var<S>&);                                                    \
  template Var<S> layer_norm(const Var<S>&, const Var<S>&, const Var<S>&, double);           \
  template Var<S> linear(const Var<S>&, const Var<S>&, const Var<S>&);                       \
  template Var<S> matmul(const Var<S>&, const Var<S>&);                                      \
  template Var<S> transpose(const Var<S>&);                                                  \
  template Var<S> dot(const Var<S>&, const Var<S>&);                                         \
  template Var<S> concat(std::span<const Var<S>>);                                           \
  template Var<S> concat_rows(std::span<const Var<S>>);                                      \
  template Var<S> slice_last(const Var<S>&, std::size_t, std::size_t);                       \
  template Var<S> row(const Var<S>&, std::size_t);                                           \
  template Var<S> reduce_mean(const Var<S>&, std::size_t);                                   \
  template Var<S> sum(const Var<S>&);                                                        \
  template Var<S> add(const Var<S>&, const Var<S>&);                                         \
  template Var<S> sub(const Var<S>&, const Var<S>&);                                         \
  template Var<S> mul(const Var<S>&, const Var<S>&);                                         \
  template Var<S> scale(const Var<S>&, double);                                              \
  template Var<S> reshape(const Var<S>&, Shape);                                             \
  template Var<S> mean_of(std::span<const Var<S>>);

DIVE_INSTANTIATE_OPS(float)
DIVE_INSTANTIATE_OPS(double)

}  // namespace dive
