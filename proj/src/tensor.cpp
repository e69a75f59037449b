#include "dtn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dtn {

std::size_t shape_size(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

Tensor Tensor::from(std::vector<double> values, Shape shape, bool requires_grad) {
    if (values.size() != shape_size(shape)) {
        throw DimensionError("tensor: " + std::to_string(values.size()) +
                             " values do not fill shape " + shape_str(shape));
    }
    auto node = std::make_shared<detail::Node>();
    node->shape = std::move(shape);
    node->values = std::move(values);
    node->grad.assign(node->values.size(), 0.0);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    const std::size_t n = shape_size(shape);
    return from(std::vector<double>(n, 0.0), std::move(shape), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return from({value}, Shape{1}, requires_grad);
}

Tensor Tensor::matrix(std::vector<double> values, std::size_t rows, std::size_t cols,
                      bool requires_grad) {
    return from(std::move(values), Shape{rows, cols}, requires_grad);
}

std::size_t Tensor::rows() const {
    if (shape().size() != 2) {
        throw DimensionError("rows(): tensor is not 2-D, shape " + shape_str(shape()));
    }
    return shape()[0];
}

std::size_t Tensor::cols() const {
    if (shape().size() != 2) {
        throw DimensionError("cols(): tensor is not 2-D, shape " + shape_str(shape()));
    }
    return shape()[1];
}

double Tensor::item() const {
    if (!is_scalar()) {
        throw ContractError("item(): tensor has " + std::to_string(size()) + " elements");
    }
    return node_->values[0];
}

void Tensor::zero_grad() {
    std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

bool Tensor::all_finite() const {
    for (double v : node_->values) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

Tensor Tape::emit(Shape shape) {
    Tensor out = Tensor::zeros(std::move(shape));
    out.node_->produced = true;
    records_.push_back({out.node_, nullptr});
    return out;
}

void Tape::set_backward(std::function<void()> backward_fn) {
    if (records_.empty()) {
        throw ContractError("set_backward: tape has no records");
    }
    records_.back().backward_fn = std::move(backward_fn);
}

void Tape::backward(const Tensor& loss) {
    if (!loss.defined() || !loss.is_scalar()) {
        throw ContractError("backward: loss must be a scalar node");
    }
    if (!loss.node()->produced) {
        // a bare leaf has no recorded ops; nothing would flow anywhere
        throw ContractError("backward: loss is not part of this graph");
    }
    // Op outputs get fresh gradients each call; leaves keep accumulating.
    for (auto& rec : records_) {
        std::fill(rec.out->grad.begin(), rec.out->grad.end(), 0.0);
    }
    loss.node()->grad[0] = 1.0;
    for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
        if (it->backward_fn) it->backward_fn();
    }
}

}  // namespace dtn
