#include "sinceeg/tensor.hpp"

#include "sinceeg/error.hpp"

#include <algorithm>
#include <sstream>

namespace sinceeg {

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (auto extent : shape) n *= extent;
    return n;
}

std::string shape_string(const Shape& shape) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ", ";
        os << shape[i];
    }
    os << ')';
    return os.str();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    return filled(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::filled(Shape shape, double value, bool requires_grad) {
    const auto n = shape_numel(shape);
    return from(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
    if (shape.empty()) throw ShapeError("tensor", "rank", "shape must have at least one axis");
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (shape[i] == 0)
            throw ShapeError("tensor", std::to_string(i), "extents must be positive");
    }
    if (shape_numel(shape) != values.size())
        throw ShapeError("tensor", "data",
                         "shape " + shape_string(shape) + " needs " +
                             std::to_string(shape_numel(shape)) + " values, got " +
                             std::to_string(values.size()));
    Tensor t;
    t.impl_ = std::make_shared<Impl>();
    t.impl_->shape = std::move(shape);
    t.impl_->data = std::move(values);
    t.impl_->requires_grad = requires_grad;
    return t;
}

double Tensor::item() const {
    if (numel() != 1) throw ShapeError("item", "numel", "tensor is not a scalar");
    return impl_->data[0];
}

std::span<double> Tensor::grad() const {
    if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0);
    return impl_->grad;
}

void Tensor::zero_grad() const {
    std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

Tensor Tensor::clone() const {
    Tensor t = from(impl_->shape, impl_->data, impl_->requires_grad);
    t.impl_->grad = impl_->grad;
    return t;
}

bool Tape::should_record(std::initializer_list<const Tensor*> inputs) const {
    if (!enabled_) return false;
    return std::any_of(inputs.begin(), inputs.end(),
                       [](const Tensor* t) { return t && t->defined() && t->requires_grad(); });
}

void Tape::record(std::string name, std::vector<Tensor> inputs, Tensor output,
                  std::function<void()> backward) {
    output.set_requires_grad(true);
    entries_.push_back({std::move(name), std::move(inputs), std::move(output), std::move(backward)});
}

void Tape::backward(const Tensor& root) {
    const double one = 1.0;
    if (root.numel() != 1)
        throw ShapeError("backward", "root", "implicit seed needs a single-element root");
    backward(root, std::span<const double>(&one, 1));
}

void Tape::backward(const Tensor& root, std::span<const double> seed) {
    if (seed.size() != root.numel())
        throw ShapeError("backward", "seed", "seed length must equal root numel");
    // Intermediate buffers are reset so a replay reproduces a fresh pass;
    // leaves keep accumulating until the caller zeroes them.
    for (auto& e : entries_) {
        e.output.grad();
        e.output.zero_grad();
    }
    Tensor r = root;
    auto g = r.grad();
    for (std::size_t i = 0; i < seed.size(); ++i) g[i] += seed[i];
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) it->backward();
}

}  // namespace sinceeg
