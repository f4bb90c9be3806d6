#include "tepinn/autodiff/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "tepinn/error.hpp"

namespace tepinn::ad {

namespace {

std::size_t element_count(const Shape& shape) {
    if (shape.empty() || shape.size() > 2) {
        throw Error(ErrorKind::ShapeMismatch, "tensors must have rank 1 or 2, got " + shape_string(shape));
    }
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

std::string shape_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
    os << ']';
    return os.str();
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
    data_.assign(element_count(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (element_count(shape_) != data_.size()) {
        throw Error(ErrorKind::ShapeMismatch, "buffer of " + std::to_string(data_.size()) +
                                                  " values does not fit shape " + shape_string(shape_));
    }
}

Tensor Tensor::row(std::initializer_list<double> values) { return Tensor({values.size()}, values); }

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values) {
    return Tensor({rows, cols}, values);
}

double Tensor::item() const {
    if (data_.size() != 1) {
        throw Error(ErrorKind::ShapeMismatch, "item() on tensor of shape " + shape_string(shape_));
    }
    return data_[0];
}

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

}  // namespace tepinn::ad
