#pragma once

#include <cstddef>
#include <filesystem>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace vecplan {

// Dense row-major matrix of doubles. Zero-row tensors are legal.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> data);
  static Tensor row(std::initializer_list<double> values);
  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  std::string shape_string() const;
  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Handle to a node recorded on a Tape.
struct Var {
  int id = -1;
};

// Records primitive applications in order; backward() replays them in
// strict reverse order. Single-writer.
class Tape {
 public:
  Var leaf(Tensor value);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var add_bias_row(Var a, Var bias);
  Var scalar_mul(Var a, double s);
  Var relu(Var a);
  Var tanh(Var a);
  Var softmax_rows(Var a);
  Var concat_cols(std::span<const Var> parts);
  Var slice_cols(Var a, std::size_t begin, std::size_t end);
  Var transpose(Var a);
  Var mean_all(Var a);
  Var sum_all(Var a);
  // Sum of absolute differences to a constant target.
  Var l1_to_target(Var a, Tensor target);
  // Scalar node with externally computed value and gradient d value / d a.
  Var attach_loss(Var a, double value, Tensor grad);

  const Tensor& value(Var v) const;
  // Valid after backward(); zero-shaped to value for unreached nodes.
  const Tensor& grad(Var v) const;

  // Seeds d loss / d loss = 1 and accumulates into every node. Throws on a
  // non-scalar loss.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  enum class Op {
    kLeaf, kMatmul, kAdd, kAddBiasRow, kScalarMul, kRelu, kTanh, kSoftmaxRows,
    kConcatCols, kSliceCols, kTranspose, kMeanAll, kSumAll, kL1ToTarget, kAttachLoss,
  };
  struct Node {
    Op op = Op::kLeaf;
    std::vector<int> inputs;
    Tensor value;
    Tensor grad;
    Tensor aux;  // l1 target or attached gradient
    double scalar = 0.0;
    std::size_t begin = 0;
  };

  Var push(Node node);
  const Node& node(Var v) const;
  void accumulate(int id, const Tensor& g);
  void backprop(const Node& n);

  std::vector<Node> nodes_;
};

// Ordered named tensors; order is part of the checkpoint format.
using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

// Text format: header line "vecplan-checkpoint 1", then one line per tensor:
// name rows cols v0 v1 ... (row-major, shortest round-trip decimal).
void save_checkpoint(const std::filesystem::path& path, const NamedTensors& tensors);
NamedTensors load_checkpoint(const std::filesystem::path& path);
std::string format_double(double v);

}  // namespace vecplan
