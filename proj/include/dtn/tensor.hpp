#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "dtn/errors.hpp"

namespace dtn {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

struct Node {
    Shape shape;
    std::vector<double> values;
    std::vector<double> grad;      // same length as values, zero-initialized
    bool requires_grad = false;    // trainable leaf
    bool produced = false;         // output of a tape op (not a leaf)
};

}  // namespace detail

// Dense double-precision array with a gradient slot. Value-semantics handle:
// copies share the underlying node, so parameters held by a model and the
// same parameters appearing in a tape refer to one storage.
class Tensor {
public:
    Tensor() = default;

    static Tensor from(std::vector<double> values, Shape shape, bool requires_grad = false);
    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);
    // 2-D convenience: rows x cols, row-major.
    static Tensor matrix(std::vector<double> values, std::size_t rows, std::size_t cols,
                         bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t size() const { return node_->values.size(); }
    std::size_t rows() const;
    std::size_t cols() const;
    bool is_scalar() const { return defined() && node_->values.size() == 1; }

    const std::vector<double>& values() const { return node_->values; }
    std::vector<double>& values_mut() { return node_->values; }
    const std::vector<double>& grad() const { return node_->grad; }
    std::vector<double>& grad_mut() { return node_->grad; }

    double item() const;
    bool requires_grad() const { return node_->requires_grad; }

    void zero_grad();
    bool all_finite() const;

    bool same_node(const Tensor& other) const { return node_ == other.node_; }

    detail::Node* node() const { return node_.get(); }
    std::shared_ptr<detail::Node> node_ptr() const { return node_; }

private:
    explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
    std::shared_ptr<detail::Node> node_;

    friend class Tape;
};

// Define-by-run computation graph. Ops append one record per produced tensor,
// so records are already topologically ordered; backward() replays them in
// reverse exactly once. A Tape and its tensors are single-threaded during
// construction and backward.
class Tape {
public:
    // Allocates the output node of an op and appends its record. The op fills
    // the values, then attaches its backward closure via set_backward.
    Tensor emit(Shape shape);

    // Attaches the backward closure to the most recent record. The closure
    // reads the output's grad and accumulates into the inputs' grads.
    void set_backward(std::function<void()> backward_fn);

    // Seeds d(loss)/d(loss) = 1 and accumulates gradients into every leaf
    // reachable from the tape. Grads of op outputs are reset per call, leaf
    // grads accumulate across calls until zero_grad.
    void backward(const Tensor& loss);

    std::size_t num_records() const { return records_.size(); }
    void clear() { records_.clear(); }

private:
    struct Record {
        std::shared_ptr<detail::Node> out;
        std::function<void()> backward_fn;
    };
    std::vector<Record> records_;
};

}  // namespace dtn
