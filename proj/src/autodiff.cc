#include "vecplan/autodiff.h"

#include <algorithm>
#include <cmath>

#include "vecplan/error.h"

namespace vecplan {

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw Error(ErrorCategory::kShape, "tensor: " + std::to_string(data_.size()) +
                                           " values for shape " + shape_string());
  }
}

Tensor Tensor::row(std::initializer_list<double> values) {
  return Tensor(1, values.size(), std::vector<double>(values));
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw Error(ErrorCategory::kShape, "tensor: ragged rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor(r, c, std::move(data));
}

std::string Tensor::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

namespace {

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw Error(ErrorCategory::kShape,
              std::string(op) + ": incompatible shapes " + a.shape_string() + " and " +
                  b.shape_string());
}

void matmul_into(const Tensor& a, const Tensor& b, Tensor& out, bool trans_a, bool trans_b) {
  // out += op(a) * op(b)
  const std::size_t m = out.rows();
  const std::size_t n = out.cols();
  const std::size_t k = trans_a ? a.rows() : a.cols();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double av = trans_a ? a(p, i) : a(i, p);
      if (av == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) {
        out(i, j) += av * (trans_b ? b(j, p) : b(p, j));
      }
    }
  }
}

}  // namespace

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

const Tape::Node& Tape::node(Var v) const {
  if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) {
    throw Error(ErrorCategory::kInvalidArgument, "tape: unknown node id " + std::to_string(v.id));
  }
  return nodes_[static_cast<std::size_t>(v.id)];
}

const Tensor& Tape::value(Var v) const { return node(v).value; }
const Tensor& Tape::grad(Var v) const { return node(v).grad; }

Var Tape::leaf(Tensor value) {
  Node n;
  n.op = Op::kLeaf;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  if (x.cols() != y.rows()) shape_error("matmul", x, y);
  Node n;
  n.op = Op::kMatmul;
  n.inputs = {a.id, b.id};
  n.value = Tensor(x.rows(), y.cols());
  matmul_into(x, y, n.value, false, false);
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  if (x.rows() != y.rows() || x.cols() != y.cols()) shape_error("add", x, y);
  Node n;
  n.op = Op::kAdd;
  n.inputs = {a.id, b.id};
  n.value = x;
  for (std::size_t i = 0; i < y.size(); ++i) n.value[i] += y[i];
  return push(std::move(n));
}

Var Tape::add_bias_row(Var a, Var bias) {
  const Tensor& x = value(a);
  const Tensor& b = value(bias);
  if (b.rows() != 1 || b.cols() != x.cols()) shape_error("add_bias_row", x, b);
  Node n;
  n.op = Op::kAddBiasRow;
  n.inputs = {a.id, bias.id};
  n.value = x;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) n.value(r, c) += b[c];
  }
  return push(std::move(n));
}

Var Tape::scalar_mul(Var a, double s) {
  Node n;
  n.op = Op::kScalarMul;
  n.inputs = {a.id};
  n.scalar = s;
  n.value = value(a);
  for (double& v : n.value.values()) v *= s;
  return push(std::move(n));
}

Var Tape::relu(Var a) {
  Node n;
  n.op = Op::kRelu;
  n.inputs = {a.id};
  n.value = value(a);
  for (double& v : n.value.values()) v = v > 0.0 ? v : 0.0;
  return push(std::move(n));
}

Var Tape::tanh(Var a) {
  Node n;
  n.op = Op::kTanh;
  n.inputs = {a.id};
  n.value = value(a);
  for (double& v : n.value.values()) v = std::tanh(v);
  return push(std::move(n));
}

Var Tape::softmax_rows(Var a) {
  Node n;
  n.op = Op::kSoftmaxRows;
  n.inputs = {a.id};
  n.value = value(a);
  Tensor& y = n.value;
  for (std::size_t r = 0; r < y.rows(); ++r) {
    double mx = -INFINITY;
    for (std::size_t c = 0; c < y.cols(); ++c) mx = std::max(mx, y(r, c));
    double total = 0.0;
    for (std::size_t c = 0; c < y.cols(); ++c) {
      y(r, c) = std::exp(y(r, c) - mx);
      total += y(r, c);
    }
    for (std::size_t c = 0; c < y.cols(); ++c) y(r, c) /= total;
  }
  return push(std::move(n));
}

Var Tape::concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw Error(ErrorCategory::kShape, "concat_cols: no inputs");
  const std::size_t rows = value(parts[0]).rows();
  std::size_t cols = 0;
  Node n;
  n.op = Op::kConcatCols;
  for (Var p : parts) {
    const Tensor& x = value(p);
    if (x.rows() != rows) shape_error("concat_cols", value(parts[0]), x);
    cols += x.cols();
    n.inputs.push_back(p.id);
  }
  n.value = Tensor(rows, cols);
  std::size_t offset = 0;
  for (Var p : parts) {
    const Tensor& x = value(p);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < x.cols(); ++c) n.value(r, offset + c) = x(r, c);
    }
    offset += x.cols();
  }
  return push(std::move(n));
}

Var Tape::slice_cols(Var a, std::size_t begin, std::size_t end) {
  const Tensor& x = value(a);
  if (begin > end || end > x.cols()) {
    throw Error(ErrorCategory::kShape, "slice_cols: range [" + std::to_string(begin) + ", " +
                                           std::to_string(end) + ") out of bounds for " +
                                           x.shape_string());
  }
  Node n;
  n.op = Op::kSliceCols;
  n.inputs = {a.id};
  n.begin = begin;
  n.value = Tensor(x.rows(), end - begin);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = begin; c < end; ++c) n.value(r, c - begin) = x(r, c);
  }
  return push(std::move(n));
}

Var Tape::transpose(Var a) {
  const Tensor& x = value(a);
  Node n;
  n.op = Op::kTranspose;
  n.inputs = {a.id};
  n.value = Tensor(x.cols(), x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) n.value(c, r) = x(r, c);
  }
  return push(std::move(n));
}

Var Tape::mean_all(Var a) {
  const Tensor& x = value(a);
  if (x.size() == 0) throw Error(ErrorCategory::kShape, "mean_all: empty tensor");
  double total = 0.0;
  for (double v : x.values()) total += v;
  Node n;
  n.op = Op::kMeanAll;
  n.inputs = {a.id};
  n.value = Tensor(1, 1, total / static_cast<double>(x.size()));
  return push(std::move(n));
}

Var Tape::sum_all(Var a) {
  double total = 0.0;
  for (double v : value(a).values()) total += v;
  Node n;
  n.op = Op::kSumAll;
  n.inputs = {a.id};
  n.value = Tensor(1, 1, total);
  return push(std::move(n));
}

Var Tape::l1_to_target(Var a, Tensor target) {
  const Tensor& x = value(a);
  if (x.rows() != target.rows() || x.cols() != target.cols()) {
    shape_error("l1_to_target", x, target);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) total += std::abs(x[i] - target[i]);
  Node n;
  n.op = Op::kL1ToTarget;
  n.inputs = {a.id};
  n.aux = std::move(target);
  n.value = Tensor(1, 1, total);
  return push(std::move(n));
}

Var Tape::attach_loss(Var a, double loss_value, Tensor grad) {
  const Tensor& x = value(a);
  if (x.rows() != grad.rows() || x.cols() != grad.cols()) shape_error("attach_loss", x, grad);
  Node n;
  n.op = Op::kAttachLoss;
  n.inputs = {a.id};
  n.aux = std::move(grad);
  n.value = Tensor(1, 1, loss_value);
  return push(std::move(n));
}

void Tape::accumulate(int id, const Tensor& g) {
  Tensor& dst = nodes_[static_cast<std::size_t>(id)].grad;
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
}

void Tape::backward(Var loss) {
  const Tensor& lv = value(loss);
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw Error(ErrorCategory::kShape, "backward: loss must be 1x1, got " + lv.shape_string());
  }
  for (Node& n : nodes_) n.grad = Tensor(n.value.rows(), n.value.cols());
  nodes_[static_cast<std::size_t>(loss.id)].grad[0] = 1.0;
  for (int i = loss.id; i >= 0; --i) backprop(nodes_[static_cast<std::size_t>(i)]);
}

void Tape::backprop(const Node& n) {
  const Tensor& g = n.grad;
  auto in = [&](std::size_t k) -> const Tensor& {
    return nodes_[static_cast<std::size_t>(n.inputs[k])].value;
  };
  switch (n.op) {
    case Op::kLeaf:
      return;
    case Op::kMatmul: {
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      Tensor ga(a.rows(), a.cols());
      matmul_into(g, b, ga, false, true);
      Tensor gb(b.rows(), b.cols());
      matmul_into(a, g, gb, true, false);
      accumulate(n.inputs[0], ga);
      accumulate(n.inputs[1], gb);
      return;
    }
    case Op::kAdd:
      accumulate(n.inputs[0], g);
      accumulate(n.inputs[1], g);
      return;
    case Op::kAddBiasRow: {
      accumulate(n.inputs[0], g);
      Tensor gb(1, g.cols());
      for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t c = 0; c < g.cols(); ++c) gb[c] += g(r, c);
      }
      accumulate(n.inputs[1], gb);
      return;
    }
    case Op::kScalarMul: {
      Tensor ga = g;
      for (double& v : ga.values()) v *= n.scalar;
      accumulate(n.inputs[0], ga);
      return;
    }
    case Op::kRelu: {
      Tensor ga = g;
      const Tensor& x = in(0);
      for (std::size_t i = 0; i < ga.size(); ++i) {
        if (!(x[i] > 0.0)) ga[i] = 0.0;
      }
      accumulate(n.inputs[0], ga);
      return;
    }
    case Op::kTanh: {
      Tensor ga = g;
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= 1.0 - n.value[i] * n.value[i];
      accumulate(n.inputs[0], ga);
      return;
    }
    case Op::kSoftmaxRows: {
      const Tensor& y = n.value;
      Tensor ga(y.rows(), y.cols());
      for (std::size_t r = 0; r < y.rows(); ++r) {
        double inner = 0.0;
        for (std::size_t c = 0; c < y.cols(); ++c) inner += g(r, c) * y(r, c);
        for (std::size_t c = 0; c < y.cols(); ++c) ga(r, c) = y(r, c) * (g(r, c) - inner);
      }
      accumulate(n.inputs[0], ga);
      return;
    }
    case Op::kConcatCols: {
      std::size_t offset = 0;
      for (std::size_t k = 0; k < n.inputs.size(); ++k) {
        const Tensor& x = in(k);
        Tensor gx(x.rows(), x.cols());
        for (std::size_t r = 0; r < x.rows(); ++r) {
          for (std::size_t c = 0; c < x.cols(); ++c) gx(r, c) = g(r, offset + c);
        }
        offset += x.cols();
        accumulate(n.inputs[k], gx);
      }
      return;
    }
    case Op::kSliceCols: {
      const Tensor& x = in(0);
      Tensor gx(x.rows(), x.cols());
      for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t c = 0; c < g.cols(); ++c) gx(r, n.begin + c) = g(r, c);
      }
      accumulate(n.inputs[0], gx);
      return;
    }
    case Op::kTranspose: {
      Tensor gx(g.cols(), g.rows());
      for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t c = 0; c < g.cols(); ++c) gx(c, r) = g(r, c);
      }
      accumulate(n.inputs[0], gx);
      return;
    }
    case Op::kMeanAll: {
      const Tensor& x = in(0);
      accumulate(n.inputs[0], Tensor(x.rows(), x.cols(), g[0] / static_cast<double>(x.size())));
      return;
    }
    case Op::kSumAll: {
      const Tensor& x = in(0);
      accumulate(n.inputs[0], Tensor(x.rows(), x.cols(), g[0]));
      return;
    }
    case Op::kL1ToTarget: {
      const Tensor& x = in(0);
      Tensor gx(x.rows(), x.cols());
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = x[i] - n.aux[i];
        gx[i] = g[0] * static_cast<double>((r > 0.0) - (r < 0.0));
      }
      accumulate(n.inputs[0], gx);
      return;
    }
    case Op::kAttachLoss: {
      Tensor gx = n.aux;
      for (double& v : gx.values()) v *= g[0];
      accumulate(n.inputs[0], gx);
      return;
    }
  }
}

}  // namespace vecplan
