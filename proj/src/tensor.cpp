#include "promptrec/tensor.hpp"

#include <cmath>
#include <sstream>

#include "promptrec/error.hpp"

namespace promptrec {

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ')';
    return os.str();
}

std::size_t shape_size(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

static void validate_shape(const Shape& shape) {
    for (std::size_t d : shape) {
        if (d == 0) throw ShapeError("tensor: zero extent in shape " + shape_str(shape));
    }
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    validate_shape(shape);
    auto d = std::make_shared<Data>();
    d->values.assign(shape_size(shape), 0.0);
    d->shape = std::move(shape);
    d->requires_grad = requires_grad;
    return Tensor(std::move(d));
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    Tensor t = zeros(std::move(shape), requires_grad);
    for (double& v : t.data_->values) v = value;
    return t;
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
    validate_shape(shape);
    if (shape_size(shape) != values.size()) {
        throw ShapeError("tensor: shape " + shape_str(shape) + " does not match " +
                         std::to_string(values.size()) + " values");
    }
    auto d = std::make_shared<Data>();
    d->shape = std::move(shape);
    d->values = std::move(values);
    d->requires_grad = requires_grad;
    return Tensor(std::move(d));
}

Tensor Tensor::scalar(double value) { return from({1}, {value}); }

double Tensor::item() const {
    if (size() != 1) {
        throw ShapeError("tensor: item() requires a single-element tensor, got " +
                         shape_str(shape()));
    }
    return data_->values[0];
}

std::span<double> Tensor::grad() {
    if (!has_grad()) throw ValueError("tensor: gradient not allocated");
    return data_->grad;
}

std::span<const double> Tensor::grad() const {
    if (!has_grad()) throw ValueError("tensor: gradient not allocated");
    return data_->grad;
}

void Tensor::ensure_grad() {
    if (!data_->grad_present) {
        data_->grad.assign(data_->values.size(), 0.0);
        data_->grad_present = true;
    }
}

void Tensor::zero_grad() {
    if (data_->grad_present) data_->grad.assign(data_->values.size(), 0.0);
}

void Tensor::drop_grad() {
    data_->grad.clear();
    data_->grad_present = false;
}

void Tensor::check_finite(const char* op) const {
    for (double v : data_->values) {
        if (!std::isfinite(v)) {
            throw NumericalError(std::string(op) + ": non-finite input value");
        }
    }
}

void Graph::record(std::string op, std::function<void()> backward_fn) {
    nodes_.push_back({std::move(op), std::move(backward_fn)});
}

void Graph::backward(Tensor loss) {
    if (!loss.defined() || loss.size() != 1) {
        throw ShapeError("backward: loss must be a single-element tensor");
    }
    if (nodes_.empty()) throw ValueError("backward: graph is empty");
    loss.ensure_grad();
    loss.grad()[0] = 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) it->fn();
    clear();
}

}  // namespace promptrec
