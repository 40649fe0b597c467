#include "structpred/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "structpred/error.hpp"

namespace structpred::ad {

namespace {

[[noreturn]] void dimension_error(const std::string& op, const Shape& a,
                                  const Shape& b) {
  fail(ErrorCode::kDimension,
       op + ": incompatible shapes " + shape_string(a) + " and " + shape_string(b));
}

void require_rank(const std::string& op, const Shape& s, std::size_t rank) {
  if (s.size() != rank) {
    fail(ErrorCode::kDimension, op + ": expected rank " + std::to_string(rank) +
                                    ", got " + shape_string(s));
  }
}

// Flat source offsets of each output element for a broadcast operand.
struct Broadcast {
  Shape out;
  std::vector<std::size_t> a_index;
  std::vector<std::size_t> b_index;
  bool same = false;
};

Broadcast plan_broadcast(const std::string& op, const Shape& a, const Shape& b) {
  Broadcast plan;
  if (a == b) {
    plan.out = a;
    plan.same = true;
    return plan;
  }
  const std::size_t rank = std::max(a.size(), b.size());
  Shape pa(rank, 1), pb(rank, 1);
  std::copy(a.begin(), a.end(), pa.begin() + (rank - a.size()));
  std::copy(b.begin(), b.end(), pb.begin() + (rank - b.size()));
  plan.out.resize(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    if (pa[i] != pb[i] && pa[i] != 1 && pb[i] != 1) dimension_error(op, a, b);
    plan.out[i] = std::max(pa[i], pb[i]);
  }
  const std::size_t total = numel(plan.out);
  plan.a_index.resize(total);
  plan.b_index.resize(total);
  std::vector<std::size_t> sa(rank, 0), sb(rank, 0);
  std::size_t stride_a = 1, stride_b = 1;
  for (std::size_t i = rank; i-- > 0;) {
    sa[i] = pa[i] == 1 ? 0 : stride_a;
    sb[i] = pb[i] == 1 ? 0 : stride_b;
    stride_a *= pa[i];
    stride_b *= pb[i];
  }
  std::vector<std::size_t> idx(rank, 0);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t oa = 0, ob = 0;
    for (std::size_t i = 0; i < rank; ++i) {
      oa += idx[i] * sa[i];
      ob += idx[i] * sb[i];
    }
    plan.a_index[flat] = oa;
    plan.b_index[flat] = ob;
    for (std::size_t i = rank; i-- > 0;) {
      if (++idx[i] < plan.out[i]) break;
      idx[i] = 0;
    }
  }
  return plan;
}

// Splits a shape around `axis` into (outer, length, inner) extents.
struct AxisSplit {
  std::size_t outer = 1, length = 1, inner = 1;
};

AxisSplit split_axis(const Shape& s, std::size_t axis) {
  AxisSplit r;
  for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
  r.length = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
  return r;
}

template <Real T, typename Fwd, typename Deriv>
Tensor<T> unary(const Tensor<T>& a, Fwd fwd, Deriv deriv) {
  std::vector<T> out(a.size());
  auto in = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(in[i]);
  return make_result<T>(a.shape(), std::move(out), {a}, [deriv](Node<T>& self) {
    auto& x = *self.inputs[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      x.grad[i] += self.grad[i] * deriv(x.value[i], self.value[i]);
    }
  });
}

enum class BinaryKind { kAdd, kSub, kMul };

template <Real T>
Tensor<T> binary(const Tensor<T>& a, const Tensor<T>& b, BinaryKind kind,
                 const char* name) {
  auto plan = std::make_shared<Broadcast>(plan_broadcast(name, a.shape(), b.shape()));
  const std::size_t total = numel(plan->out);
  std::vector<T> out(total);
  auto av = a.data();
  auto bv = b.data();
  for (std::size_t i = 0; i < total; ++i) {
    const T x = av[plan->same ? i : plan->a_index[i]];
    const T y = bv[plan->same ? i : plan->b_index[i]];
    switch (kind) {
      case BinaryKind::kAdd: out[i] = x + y; break;
      case BinaryKind::kSub: out[i] = x - y; break;
      case BinaryKind::kMul: out[i] = x * y; break;
    }
  }
  return make_result<T>(plan->out, std::move(out), {a, b},
                        [plan, kind](Node<T>& self) {
    auto& x = *self.inputs[0];
    auto& y = *self.inputs[1];
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const std::size_t ia = plan->same ? i : plan->a_index[i];
      const std::size_t ib = plan->same ? i : plan->b_index[i];
      const T g = self.grad[i];
      switch (kind) {
        case BinaryKind::kAdd:
          if (x.requires_grad) x.grad[ia] += g;
          if (y.requires_grad) y.grad[ib] += g;
          break;
        case BinaryKind::kSub:
          if (x.requires_grad) x.grad[ia] += g;
          if (y.requires_grad) y.grad[ib] -= g;
          break;
        case BinaryKind::kMul:
          if (x.requires_grad) x.grad[ia] += g * y.value[ib];
          if (y.requires_grad) y.grad[ib] += g * x.value[ia];
          break;
      }
    }
  });
}

}  // namespace

template <Real T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    dimension_error("matmul", a.shape(), b.shape());
  }
  const std::size_t p = a.dim(0), q = a.dim(1), r = b.dim(1);
  std::vector<T> out(p * r, T(0));
  auto av = a.data();
  auto bv = b.data();
  for (std::size_t i = 0; i < p; ++i) {
    T* row = out.data() + i * r;
    for (std::size_t k = 0; k < q; ++k) {
      const T s = av[i * q + k];
      if (s == T(0)) continue;
      const T* brow = bv.data() + k * r;
      for (std::size_t j = 0; j < r; ++j) row[j] += s * brow[j];
    }
  }
  return make_result<T>({p, r}, std::move(out), {a, b}, [p, q, r](Node<T>& self) {
    auto& x = *self.inputs[0];
    auto& y = *self.inputs[1];
    const T* g = self.grad.data();
    if (x.requires_grad) {
      // dA = dC * B^T
      for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t k = 0; k < q; ++k) {
          T acc = 0;
          const T* yrow = y.value.data() + k * r;
          const T* grow = g + i * r;
          for (std::size_t j = 0; j < r; ++j) acc += grow[j] * yrow[j];
          x.grad[i * q + k] += acc;
        }
      }
    }
    if (y.requires_grad) {
      // dB = A^T * dC
      for (std::size_t i = 0; i < p; ++i) {
        const T* grow = g + i * r;
        for (std::size_t k = 0; k < q; ++k) {
          const T s = x.value[i * q + k];
          if (s == T(0)) continue;
          T* yg = y.grad.data() + k * r;
          for (std::size_t j = 0; j < r; ++j) yg[j] += s * grow[j];
        }
      }
    }
  });
}

template <Real T>
Tensor<T> transpose(const Tensor<T>& a) {
  require_rank("transpose", a.shape(), 2);
  const std::size_t rows = a.dim(0), cols = a.dim(1);
  std::vector<T> out(rows * cols);
  auto av = a.data();
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out[j * rows + i] = av[i * cols + j];
  return make_result<T>({cols, rows}, std::move(out), {a}, [rows, cols](Node<T>& self) {
    auto& x = *self.inputs[0];
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j)
        x.grad[i * cols + j] += self.grad[j * rows + i];
  });
}

template <Real T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape) {
  if (numel(shape) != a.size()) dimension_error("reshape", a.shape(), shape);
  std::vector<T> out(a.data().begin(), a.data().end());
  return make_result<T>(std::move(shape), std::move(out), {a}, [](Node<T>& self) {
    auto& x = *self.inputs[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) x.grad[i] += self.grad[i];
  });
}

template <Real T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(a, b, BinaryKind::kAdd, "add");
}

template <Real T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(a, b, BinaryKind::kSub, "sub");
}

template <Real T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(a, b, BinaryKind::kMul, "mul");
}

template <Real T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  return unary<T>(a, [factor](T x) { return x * factor; },
                  [factor](T, T) { return factor; });
}

template <Real T>
Tensor<T> tanh(const Tensor<T>& a) {
  return unary<T>(a, [](T x) { return std::tanh(x); },
                  [](T, T y) { return T(1) - y * y; });
}

template <Real T>
Tensor<T> sigmoid(const Tensor<T>& a) {
  return unary<T>(
      a,
      [](T x) {
        if (x >= 0) return T(1) / (T(1) + std::exp(-x));
        const T e = std::exp(x);
        return e / (T(1) + e);
      },
      [](T, T y) { return y * (T(1) - y); });
}

template <Real T>
Tensor<T> relu(const Tensor<T>& a) {
  return unary<T>(a, [](T x) { return x > 0 ? x : T(0); },
                  [](T x, T) { return x > 0 ? T(1) : T(0); });
}

template <Real T>
Tensor<T> exp(const Tensor<T>& a) {
  return unary<T>(a, [](T x) { return std::exp(x); }, [](T, T y) { return y; });
}

template <Real T>
Tensor<T> sum(const Tensor<T>& a) {
  T total = 0;
  for (T v : a.data()) total += v;
  return make_result<T>({}, {total}, {a}, [](Node<T>& self) {
    auto& x = *self.inputs[0];
    for (auto& g : x.grad) g += self.grad[0];
  });
}

template <Real T>
Tensor<T> mean(const Tensor<T>& a) {
  if (a.size() == 0) fail(ErrorCode::kDimension, "mean of empty tensor");
  return scale(sum(a), T(1) / static_cast<T>(a.size()));
}

template <Real T>
Tensor<T> concat(std::span<const Tensor<T>> parts, std::size_t axis) {
  if (parts.empty()) fail(ErrorCode::kDimension, "concat of zero tensors");
  const Shape& first = parts[0].shape();
  if (axis >= first.size()) {
    fail(ErrorCode::kDimension, "concat axis " + std::to_string(axis) +
                                    " out of range for " + shape_string(first));
  }
  Shape out_shape = first;
  out_shape[axis] = 0;
  std::vector<std::size_t> lengths;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != first.size()) dimension_error("concat", first, s);
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i != axis && s[i] != first[i]) dimension_error("concat", first, s);
    }
    lengths.push_back(s[axis]);
    out_shape[axis] += s[axis];
  }
  const AxisSplit split = split_axis(out_shape, axis);
  std::vector<T> out(numel(out_shape));
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    auto src = parts[k].data();
    const std::size_t chunk = lengths[k] * split.inner;
    for (std::size_t o = 0; o < split.outer; ++o) {
      std::copy_n(src.begin() + o * chunk, chunk,
                  out.begin() + o * split.length * split.inner + offset);
    }
    offset += chunk;
  }
  std::vector<Tensor<T>> inputs(parts.begin(), parts.end());
  return make_result<T>(out_shape, std::move(out), std::move(inputs),
                        [split, lengths](Node<T>& self) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < lengths.size(); ++k) {
      auto& x = *self.inputs[k];
      const std::size_t chunk = lengths[k] * split.inner;
      if (x.requires_grad) {
        for (std::size_t o = 0; o < split.outer; ++o) {
          const T* g = self.grad.data() + o * split.length * split.inner + off;
          T* dst = x.grad.data() + o * chunk;
          for (std::size_t i = 0; i < chunk; ++i) dst[i] += g[i];
        }
      }
      off += chunk;
    }
  });
}

template <Real T>
Tensor<T> slice(const Tensor<T>& a, std::size_t axis, std::size_t begin,
                std::size_t end) {
  if (axis >= a.rank() || begin > end || end > a.dim(axis)) {
    fail(ErrorCode::kDimension, "slice [" + std::to_string(begin) + "," +
                                    std::to_string(end) + ") on axis " +
                                    std::to_string(axis) + " of " +
                                    shape_string(a.shape()));
  }
  const AxisSplit split = split_axis(a.shape(), axis);
  Shape out_shape = a.shape();
  out_shape[axis] = end - begin;
  const std::size_t chunk = (end - begin) * split.inner;
  std::vector<T> out(split.outer * chunk);
  auto src = a.data();
  for (std::size_t o = 0; o < split.outer; ++o) {
    std::copy_n(src.begin() + (o * split.length + begin) * split.inner, chunk,
                out.begin() + o * chunk);
  }
  return make_result<T>(std::move(out_shape), std::move(out), {a},
                        [split, begin, chunk](Node<T>& self) {
    auto& x = *self.inputs[0];
    for (std::size_t o = 0; o < split.outer; ++o) {
      T* dst = x.grad.data() + (o * split.length + begin) * split.inner;
      const T* g = self.grad.data() + o * chunk;
      for (std::size_t i = 0; i < chunk; ++i) dst[i] += g[i];
    }
  });
}

template <Real T>
Tensor<T> gather_rows(const Tensor<T>& table, std::span<const std::size_t> ids) {
  require_rank("gather_rows", table.shape(), 2);
  const std::size_t rows = table.dim(0), width = table.dim(1);
  std::vector<std::size_t> index(ids.begin(), ids.end());
  std::vector<T> out(index.size() * width);
  auto src = table.data();
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] >= rows) {
      fail(ErrorCode::kDimension, "gather_rows: id " + std::to_string(index[r]) +
                                      " outside table of " + std::to_string(rows) +
                                      " rows");
    }
    std::copy_n(src.begin() + index[r] * width, width, out.begin() + r * width);
  }
  return make_result<T>({index.size(), width}, std::move(out), {table},
                        [index, width](Node<T>& self) {
    auto& x = *self.inputs[0];
    for (std::size_t r = 0; r < index.size(); ++r) {
      T* dst = x.grad.data() + index[r] * width;
      const T* g = self.grad.data() + r * width;
      for (std::size_t i = 0; i < width; ++i) dst[i] += g[i];
    }
  });
}

template <Real T>
Tensor<T> logsumexp(const Tensor<T>& x, std::size_t axis) {
  if (axis >= x.rank()) {
    fail(ErrorCode::kDimension, "logsumexp axis out of range for " +
                                    shape_string(x.shape()));
  }
  const AxisSplit split = split_axis(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  std::vector<T> out(split.outer * split.inner);
  auto v = x.data();
  constexpr T kNegInf = -std::numeric_limits<T>::infinity();
  for (std::size_t o = 0; o < split.outer; ++o) {
    for (std::size_t i = 0; i < split.inner; ++i) {
      T mx = kNegInf;
      for (std::size_t k = 0; k < split.length; ++k)
        mx = std::max(mx, v[(o * split.length + k) * split.inner + i]);
      if (mx == kNegInf) {
        out[o * split.inner + i] = kNegInf;
        continue;
      }
      T acc = 0;
      for (std::size_t k = 0; k < split.length; ++k)
        acc += std::exp(v[(o * split.length + k) * split.inner + i] - mx);
      out[o * split.inner + i] = mx + std::log(acc);
    }
  }
  return make_result<T>(std::move(out_shape), std::move(out), {x}, [split](Node<T>& self) {
    auto& in = *self.inputs[0];
    for (std::size_t o = 0; o < split.outer; ++o) {
      for (std::size_t i = 0; i < split.inner; ++i) {
        const T lse = self.value[o * split.inner + i];
        if (std::isinf(lse) && lse < 0) continue;
        const T g = self.grad[o * split.inner + i];
        for (std::size_t k = 0; k < split.length; ++k) {
          const std::size_t at = (o * split.length + k) * split.inner + i;
          in.grad[at] += g * std::exp(in.value[at] - lse);
        }
      }
    }
  });
}

template <Real T>
Tensor<T> softmax(const Tensor<T>& x) {
  if (x.rank() == 0) fail(ErrorCode::kDimension, "softmax of a scalar");
  const std::size_t width = x.shape().back();
  const std::size_t rows = x.size() / width;
  std::vector<T> out(x.size());
  auto v = x.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = v.data() + r * width;
    const T mx = *std::max_element(row, row + width);
    T total = 0;
    for (std::size_t j = 0; j < width; ++j) {
      out[r * width + j] = std::exp(row[j] - mx);
      total += out[r * width + j];
    }
    for (std::size_t j = 0; j < width; ++j) out[r * width + j] /= total;
  }
  return make_result<T>(x.shape(), std::move(out), {x}, [rows, width](Node<T>& self) {
    auto& in = *self.inputs[0];
    for (std::size_t r = 0; r < rows; ++r) {
      const T* y = self.value.data() + r * width;
      const T* g = self.grad.data() + r * width;
      T dot = 0;
      for (std::size_t j = 0; j < width; ++j) dot += g[j] * y[j];
      for (std::size_t j = 0; j < width; ++j) in.grad[r * width + j] += y[j] * (g[j] - dot);
    }
  });
}

template <Real T>
Tensor<T> softmax_cross_entropy(const Tensor<T>& logits,
                                std::span<const std::size_t> gold,
                                const CrossEntropyOptions& options) {
  require_rank("softmax_cross_entropy", logits.shape(), 2);
  const std::size_t rows = logits.dim(0), classes = logits.dim(1);
  if (gold.size() != rows) {
    fail(ErrorCode::kDimension, "softmax_cross_entropy: " + std::to_string(gold.size()) +
                                    " gold indices for " + std::to_string(rows) + " rows");
  }
  const auto& row_mask = options.row_mask;
  const auto& entry_mask = options.entry_mask;
  if (row_mask && row_mask->size() != rows)
    fail(ErrorCode::kDimension, "softmax_cross_entropy: row mask length mismatch");
  if (entry_mask && entry_mask->size() != rows * classes)
    fail(ErrorCode::kDimension, "softmax_cross_entropy: entry mask length mismatch");

  auto v = logits.data();
  auto probs = std::make_shared<std::vector<T>>(rows * classes, T(0));
  std::vector<std::size_t> gold_index(gold.begin(), gold.end());
  std::vector<bool> active(rows, true);
  std::size_t count = 0;
  T total = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (row_mask && !(*row_mask)[r]) {
      active[r] = false;
      continue;
    }
    const std::size_t g = gold_index[r];
    if (g >= classes) {
      fail(ErrorCode::kInput, "softmax_cross_entropy: gold index " + std::to_string(g) +
                                  " out of range [0," + std::to_string(classes) + ")");
    }
    auto allowed = [&](std::size_t j) {
      return !entry_mask || (*entry_mask)[r * classes + j];
    };
    if (!allowed(g)) {
      fail(ErrorCode::kInput, "softmax_cross_entropy: gold index " + std::to_string(g) +
                                  " is masked in row " + std::to_string(r));
    }
    T mx = -std::numeric_limits<T>::infinity();
    for (std::size_t j = 0; j < classes; ++j)
      if (allowed(j)) mx = std::max(mx, v[r * classes + j]);
    T acc = 0;
    for (std::size_t j = 0; j < classes; ++j) {
      if (!allowed(j)) continue;
      const T e = std::exp(v[r * classes + j] - mx);
      (*probs)[r * classes + j] = e;
      acc += e;
    }
    for (std::size_t j = 0; j < classes; ++j) (*probs)[r * classes + j] /= acc;
    total += mx + std::log(acc) - v[r * classes + g];
    ++count;
  }
  const T factor = (options.reduction == Reduction::kMean && count > 0)
                       ? T(1) / static_cast<T>(count)
                       : T(1);
  return make_result<T>({}, {total * factor}, {logits},
                        [probs, gold_index, active, classes, factor](Node<T>& self) {
    auto& in = *self.inputs[0];
    const T g = self.grad[0] * factor;
    for (std::size_t r = 0; r < active.size(); ++r) {
      if (!active[r]) continue;
      for (std::size_t j = 0; j < classes; ++j) {
        const T target = j == gold_index[r] ? T(1) : T(0);
        in.grad[r * classes + j] += g * ((*probs)[r * classes + j] - target);
      }
    }
  });
}

template <Real T>
Tensor<T> sigmoid_cross_entropy(const Tensor<T>& logits, std::span<const T> targets,
                                const std::optional<std::vector<bool>>& mask) {
  if (targets.size() != logits.size()) {
    fail(ErrorCode::kDimension, "sigmoid_cross_entropy: " + std::to_string(targets.size()) +
                                    " targets for logits of shape " +
                                    shape_string(logits.shape()));
  }
  if (mask && mask->size() != logits.size())
    fail(ErrorCode::kDimension, "sigmoid_cross_entropy: mask length mismatch");
  std::vector<T> t(targets.begin(), targets.end());
  for (T value : t) {
    if (value != T(0) && value != T(1))
      fail(ErrorCode::kInput, "sigmoid_cross_entropy: targets must be 0 or 1");
  }
  auto v = logits.data();
  std::vector<bool> active = mask ? *mask : std::vector<bool>(v.size(), true);
  std::size_t count = 0;
  T total = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!active[i]) continue;
    const T x = v[i];
    total += std::max(x, T(0)) - x * t[i] + std::log1p(std::exp(-std::abs(x)));
    ++count;
  }
  const T factor = count > 0 ? T(1) / static_cast<T>(count) : T(0);
  return make_result<T>({}, {total * factor}, {logits},
                        [t, active, factor](Node<T>& self) {
    auto& in = *self.inputs[0];
    const T g = self.grad[0] * factor;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (!active[i]) continue;
      const T x = in.value[i];
      const T s = x >= 0 ? T(1) / (T(1) + std::exp(-x))
                         : std::exp(x) / (T(1) + std::exp(x));
      in.grad[i] += g * (s - t[i]);
    }
  });
}

template <Real T>
Tensor<T> dropout_mask(Shape shape, double rate, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) {
    fail(ErrorCode::kInput, "dropout rate must lie in [0, 1), got " + std::to_string(rate));
  }
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  std::vector<T> mask(numel(shape));
  for (auto& m : mask) m = rng.bernoulli(rate) ? T(0) : keep_scale;
  return Tensor<T>::from(std::move(shape), std::move(mask));
}

template <Real T>
Tensor<T> dropout(const Tensor<T>& x, double rate, DropoutMode mode, bool training,
                  Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) {
    fail(ErrorCode::kInput, "dropout rate must lie in [0, 1), got " + std::to_string(rate));
  }
  if (!training || rate == 0.0) return x;
  switch (mode) {
    case DropoutMode::kStandard:
      return mul(x, dropout_mask<T>(x.shape(), rate, rng));
    case DropoutMode::kWord:
      require_rank("word dropout", x.shape(), 2);
      return mul(x, dropout_mask<T>({x.dim(0), 1}, rate, rng));
    case DropoutMode::kVariational:
      require_rank("variational dropout", x.shape(), 2);
      return mul(x, dropout_mask<T>({1, x.dim(1)}, rate, rng));
  }
  return x;
}

template <Real T>
Tensor<T> bilinear(const Tensor<T>& left, const Tensor<T>& weights,
                   const Tensor<T>& right) {
  require_rank("bilinear left", left.shape(), 2);
  require_rank("bilinear weights", weights.shape(), 3);
  require_rank("bilinear right", right.shape(), 2);
  const std::size_t P = left.dim(0), A = left.dim(1);
  const std::size_t M = weights.dim(0), B = weights.dim(2);
  const std::size_t Q = right.dim(0);
  if (weights.dim(1) != A) dimension_error("bilinear", left.shape(), weights.shape());
  if (right.dim(1) != B) dimension_error("bilinear", weights.shape(), right.shape());

  auto L = left.data();
  auto W = weights.data();
  auto R = right.data();
  // mid[i][p][b] = sum_a L[p][a] W[i][a][b]
  auto mid = std::make_shared<std::vector<T>>(M * P * B, T(0));
  for (std::size_t i = 0; i < M; ++i) {
    for (std::size_t p = 0; p < P; ++p) {
      T* dst = mid->data() + (i * P + p) * B;
      for (std::size_t a = 0; a < A; ++a) {
        const T s = L[p * A + a];
        if (s == T(0)) continue;
        const T* w = W.data() + (i * A + a) * B;
        for (std::size_t b = 0; b < B; ++b) dst[b] += s * w[b];
      }
    }
  }
  std::vector<T> out(M * P * Q);
  for (std::size_t i = 0; i < M; ++i) {
    for (std::size_t p = 0; p < P; ++p) {
      const T* m = mid->data() + (i * P + p) * B;
      for (std::size_t q = 0; q < Q; ++q) {
        const T* r = R.data() + q * B;
        T acc = 0;
        for (std::size_t b = 0; b < B; ++b) acc += m[b] * r[b];
        out[(i * P + p) * Q + q] = acc;
      }
    }
  }
  return make_result<T>({M, P, Q}, std::move(out), {left, weights, right},
                        [mid, P, A, M, B, Q](Node<T>& self) {
    auto& l = *self.inputs[0];
    auto& w = *self.inputs[1];
    auto& r = *self.inputs[2];
    std::vector<T> dmid(M * P * B, T(0));
    for (std::size_t i = 0; i < M; ++i) {
      for (std::size_t p = 0; p < P; ++p) {
        const T* g = self.grad.data() + (i * P + p) * Q;
        T* dm = dmid.data() + (i * P + p) * B;
        const T* m = mid->data() + (i * P + p) * B;
        for (std::size_t q = 0; q < Q; ++q) {
          const T gq = g[q];
          if (gq == T(0)) continue;
          const T* rv = r.value.data() + q * B;
          for (std::size_t b = 0; b < B; ++b) dm[b] += gq * rv[b];
          if (r.requires_grad) {
            T* rg = r.grad.data() + q * B;
            for (std::size_t b = 0; b < B; ++b) rg[b] += gq * m[b];
          }
        }
      }
    }
    for (std::size_t i = 0; i < M; ++i) {
      for (std::size_t p = 0; p < P; ++p) {
        const T* dm = dmid.data() + (i * P + p) * B;
        for (std::size_t a = 0; a < A; ++a) {
          const T* wv = w.value.data() + (i * A + a) * B;
          if (l.requires_grad) {
            T acc = 0;
            for (std::size_t b = 0; b < B; ++b) acc += dm[b] * wv[b];
            l.grad[p * A + a] += acc;
          }
          if (w.requires_grad) {
            const T s = l.value[p * A + a];
            if (s == T(0)) continue;
            T* wg = w.grad.data() + (i * A + a) * B;
            for (std::size_t b = 0; b < B; ++b) wg[b] += s * dm[b];
          }
        }
      }
    }
  });
}

template <Real T>
Tensor<T> select_pairs(const Tensor<T>& scores,
                       std::span<const std::pair<std::size_t, std::size_t>> pairs) {
  require_rank("select_pairs", scores.shape(), 3);
  const std::size_t M = scores.dim(0), P = scores.dim(1), Q = scores.dim(2);
  std::vector<std::pair<std::size_t, std::size_t>> index(pairs.begin(), pairs.end());
  std::vector<T> out(index.size() * M);
  auto v = scores.data();
  for (std::size_t k = 0; k < index.size(); ++k) {
    const auto [p, q] = index[k];
    if (p >= P || q >= Q) fail(ErrorCode::kDimension, "select_pairs: pair out of range");
    for (std::size_t i = 0; i < M; ++i) out[k * M + i] = v[(i * P + p) * Q + q];
  }
  return make_result<T>({index.size(), M}, std::move(out), {scores},
                        [index, M, P, Q](Node<T>& self) {
    auto& s = *self.inputs[0];
    for (std::size_t k = 0; k < index.size(); ++k) {
      const auto [p, q] = index[k];
      for (std::size_t i = 0; i < M; ++i)
        s.grad[(i * P + p) * Q + q] += self.grad[k * M + i];
    }
  });
}

#define STRUCTPRED_INSTANTIATE_OPS(T)                                                  \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                       \
  template Tensor<T> transpose(const Tensor<T>&);                                      \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                 \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                          \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                          \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                          \
  template Tensor<T> scale(const Tensor<T>&, T);                                       \
  template Tensor<T> tanh(const Tensor<T>&);                                           \
  template Tensor<T> sigmoid(const Tensor<T>&);                                        \
  template Tensor<T> relu(const Tensor<T>&);                                           \
  template Tensor<T> exp(const Tensor<T>&);                                            \
  template Tensor<T> sum(const Tensor<T>&);                                            \
  template Tensor<T> mean(const Tensor<T>&);                                           \
  template Tensor<T> concat(std::span<const Tensor<T>>, std::size_t);                  \
  template Tensor<T> slice(const Tensor<T>&, std::size_t, std::size_t, std::size_t);   \
  template Tensor<T> gather_rows(const Tensor<T>&, std::span<const std::size_t>);      \
  template Tensor<T> logsumexp(const Tensor<T>&, std::size_t);                         \
  template Tensor<T> softmax(const Tensor<T>&);                                        \
  template Tensor<T> softmax_cross_entropy(const Tensor<T>&, std::span<const std::size_t>, \
                                           const CrossEntropyOptions&);                \
  template Tensor<T> sigmoid_cross_entropy(const Tensor<T>&, std::span<const T>,       \
                                           const std::optional<std::vector<bool>>&);   \
  template Tensor<T> dropout_mask<T>(Shape, double, Rng&);                             \
  template Tensor<T> dropout(const Tensor<T>&, double, DropoutMode, bool, Rng&);       \
  template Tensor<T> bilinear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);   \
  template Tensor<T> select_pairs(const Tensor<T>&,                                    \
                                  std::span<const std::pair<std::size_t, std::size_t>>);

STRUCTPRED_INSTANTIATE_OPS(float)
STRUCTPRED_INSTANTIATE_OPS(double)

}  // namespace structpred::ad
