#include "wgnn/tensor.hpp"

#include <cmath>
#include <sstream>

namespace wgnn {

std::size_t shape_numel(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d < 0) throw DimensionError("negative dimension in shape");
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

Tensor::Tensor(std::vector<int> shape)
    : shape_(std::move(shape)), data_(shape_numel(shape_), 0.0) {}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_numel(shape_) != data_.size()) {
        throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                             " does not match shape " + shape_str());
    }
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
    const int m = static_cast<int>(rows.size());
    const int n = m > 0 ? static_cast<int>(rows.begin()->size()) : 0;
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(m) * n);
    for (const auto& row : rows) {
        if (static_cast<int>(row.size()) != n) throw DimensionError("ragged matrix literal");
        data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor({m, n}, std::move(data));
}

Tensor Tensor::vector(std::vector<double> v) {
    const int n = static_cast<int>(v.size());
    return Tensor({n}, std::move(v));
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

int Tensor::dim(int axis) const {
    if (axis < 0 || axis >= rank()) throw DimensionError("axis out of range");
    return shape_[axis];
}

int Tensor::rows() const {
    if (rank() == 1) return shape_[0];
    if (rank() == 2) return shape_[0];
    throw DimensionError("rows() requires rank <= 2, got shape " + shape_str());
}

int Tensor::cols() const {
    if (rank() == 1) return 1;
    if (rank() == 2) return shape_[1];
    throw DimensionError("cols() requires rank <= 2, got shape " + shape_str());
}

double& Tensor::at(int r, int c) {
    return data_[static_cast<std::size_t>(r) * cols() + c];
}

double Tensor::at(int r, int c) const {
    return data_[static_cast<std::size_t>(r) * cols() + c];
}

bool Tensor::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Tensor::require_finite(const std::string& where) const {
    if (!all_finite()) throw NumericError("non-finite value in " + where);
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        if (i) os << ',';
        os << shape_[i];
    }
    os << ')';
    return os.str();
}

} // namespace wgnn
