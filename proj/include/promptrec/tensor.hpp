#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace promptrec {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& shape);
std::size_t shape_size(const Shape& shape);

// Dense row-major tensor of doubles with an optional gradient buffer.
// Tensor is a cheap shared handle: copies alias the same storage, which is
// what the backward closures rely on to accumulate gradients.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
    static Tensor scalar(double value);

    bool defined() const { return data_ != nullptr; }
    const Shape& shape() const { return data_->shape; }
    std::size_t rank() const { return data_->shape.size(); }
    std::size_t size() const { return data_->values.size(); }

    std::span<double> values() { return data_->values; }
    std::span<const double> values() const { return data_->values; }

    // Value of a single-element tensor.
    double item() const;

    bool requires_grad() const { return data_->requires_grad; }
    void set_requires_grad(bool on) { data_->requires_grad = on; }

    bool has_grad() const { return data_ && data_->grad_present; }
    std::span<double> grad();
    std::span<const double> grad() const;
    void ensure_grad();
    void zero_grad();
    void drop_grad();

    bool same_storage(const Tensor& other) const { return data_ == other.data_; }

    // Throws ValueError naming `op` if any value is non-finite.
    void check_finite(const char* op) const;

private:
    struct Data {
        Shape shape;
        std::vector<double> values;
        std::vector<double> grad;
        bool grad_present = false;
        bool requires_grad = false;
    };
    std::shared_ptr<Data> data_;

    explicit Tensor(std::shared_ptr<Data> d) : data_(std::move(d)) {}
};

// Ordered record of executed operations. Each forward op pushes a closure
// that propagates gradients from its output to its inputs; backward() runs
// them in exact reverse execution order and then clears the record.
class Graph {
public:
    void record(std::string op, std::function<void()> backward_fn);

    // loss must be a single-element tensor; seeds its gradient with 1 and
    // runs the reverse pass. The graph is cleared afterwards for reuse.
    void backward(Tensor loss);

    std::size_t size() const { return nodes_.size(); }
    bool empty() const { return nodes_.empty(); }
    void clear() { nodes_.clear(); }

private:
    struct Node {
        std::string op;
        std::function<void()> fn;
    };
    std::vector<Node> nodes_;
};

}  // namespace promptrec
