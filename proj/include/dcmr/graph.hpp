#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace dcmr {

/// Channel-major activation shape (channels, height, width).
struct Shape {
  int c = 1;
  int h = 1;
  int w = 1;
  std::size_t numel() const { return static_cast<std::size_t>(c) * h * w; }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

/// Largest group count <= 8 that divides `channels`.
int norm_groups(int channels);

/// Reverse-mode tape over the handful of layers the denoiser uses. Every op
/// appends a node; when recording, it also appends the closure that pushes
/// the node's gradient to its inputs. Parameter nodes may be bound to an
/// external gradient buffer, which backward() accumulates into.
template <typename T>
class Graph {
 public:
  using Id = int;

  explicit Graph(bool record) : record_(record) {}

  Id constant(Shape s, std::vector<T> values);
  /// Borrows `values`; they must outlive the graph. `grad` may be null.
  Id parameter(Shape s, const T* values, T* grad);

  /// Same-padded convolution; weight laid out [cout][cin][k][k].
  Id conv2d(Id x, Id weight, Id bias, int cout, int kernel, int stride);
  Id add(Id a, Id b);
  /// a + scale * b
  Id add_scaled(Id a, Id b, T scale);
  /// Adds v[c] to every pixel of channel c.
  Id add_channel_bias(Id x, Id v);
  /// W[out][in] * v + b
  Id linear(Id v, Id weight, Id bias, int out);
  /// Row `index` of a [rows][dim] table.
  Id row(Id table, int index, int dim);
  Id silu(Id x);
  Id group_norm(Id x, Id gamma, Id beta, int groups);
  Id concat(Id a, Id b);
  Id upsample2x(Id x);
  /// Mean over non-overlapping 2x2 blocks; h and w must be even.
  Id avg_pool2x(Id x);

  /// Mean squared error against `target`; seeds d(weight * loss)/d(pred).
  T mse(Id pred, std::span<const T> target, T weight = T(1));
  void backward();

  Shape shape(Id id) const { return nodes_[id].shape; }
  std::span<const T> value(Id id) const { return {val(id), nodes_[id].shape.numel()}; }

 private:
  struct Node {
    Shape shape;
    std::vector<T> data;
    const T* ext = nullptr;
    std::vector<T> grad;
    T* ext_grad = nullptr;
    bool needs_grad = false;
  };

  Id push(Shape s, bool needs_grad);
  const T* val(Id id) const { return nodes_[id].ext ? nodes_[id].ext : nodes_[id].data.data(); }
  T* mut(Id id) { return nodes_[id].data.data(); }
  T* grad(Id id) { return nodes_[id].ext_grad ? nodes_[id].ext_grad : nodes_[id].grad.data(); }
  bool needs(Id id) const { return nodes_[id].needs_grad; }
  void on_backward(std::function<void()> fn) { tape_.push_back(std::move(fn)); }

  bool record_;
  std::vector<Node> nodes_;
  std::vector<std::function<void()>> tape_;
};

extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace dcmr
