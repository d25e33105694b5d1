#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace sinceeg {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

// Dense row-major f64 array. Copies share storage; use clone() for a deep copy.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor filled(Shape shape, double value, bool requires_grad = false);
    static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);

    bool defined() const noexcept { return impl_ != nullptr; }
    bool same(const Tensor& other) const noexcept { return impl_ == other.impl_; }

    const Shape& shape() const { return impl_->shape; }
    std::size_t dim(std::size_t axis) const { return impl_->shape.at(axis); }
    std::size_t rank() const { return impl_->shape.size(); }
    std::size_t numel() const { return impl_->data.size(); }

    std::span<double> data() { return impl_->data; }
    std::span<const double> data() const { return impl_->data; }
    double item() const;

    bool requires_grad() const { return impl_->requires_grad; }
    void set_requires_grad(bool flag) { impl_->requires_grad = flag; }

    bool has_grad() const { return !impl_->grad.empty(); }
    /// Allocates a zero gradient buffer when none exists. Tensors are
    /// shared handles, so a const handle still grants write access.
    std::span<double> grad() const;
    void zero_grad() const;

    Tensor clone() const;

private:
    struct Impl {
        Shape shape;
        std::vector<double> data;
        std::vector<double> grad;
        bool requires_grad = false;
    };
    std::shared_ptr<Impl> impl_;
};

/// One recorded differentiable operation.
struct TapeEntry {
    std::string name;
    std::vector<Tensor> inputs;
    Tensor output;
    std::function<void()> backward;
};

// Records operations in execution order so gradients can be replayed in
// reverse. Disabled tapes record nothing (inference).
class Tape {
public:
    Tape() = default;
    explicit Tape(bool enabled) : enabled_(enabled) {}

    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;
    Tape(Tape&&) = default;
    Tape& operator=(Tape&&) = default;

    bool enabled() const noexcept { return enabled_; }
    void set_enabled(bool enabled) noexcept { enabled_ = enabled; }

    /// True when an operation over `inputs` should be recorded.
    bool should_record(std::initializer_list<const Tensor*> inputs) const;

    /// Marks `output` as requiring grad and appends the entry.
    void record(std::string name, std::vector<Tensor> inputs, Tensor output,
                std::function<void()> backward);

    /// Seeds d(root)/d(root) = 1 for a single-element root and replays.
    void backward(const Tensor& root);
    /// Seeds the root gradient with `seed` (same length as root) and replays.
    void backward(const Tensor& root, std::span<const double> seed);

    std::span<const TapeEntry> entries() const { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    void clear() { entries_.clear(); }

private:
    bool enabled_ = true;
    std::vector<TapeEntry> entries_;
};

}  // namespace sinceeg
