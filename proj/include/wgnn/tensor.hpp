#ifndef WGNN_TENSOR_HPP
#define WGNN_TENSOR_HPP

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "wgnn/errors.hpp"

namespace wgnn {

/// Dense row-major tensor of doubles. Complex quantities are carried as two
/// stacked real channels; there is no complex element type.
class Tensor {
public:
    Tensor() = default;

    /// Zero-filled tensor of the given shape.
    explicit Tensor(std::vector<int> shape);

    /// Tensor with explicit data; product(shape) must equal data.size().
    Tensor(std::vector<int> shape, std::vector<double> data);

    /// 2-D convenience constructor from nested initializer lists.
    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);

    /// 1-D tensor.
    static Tensor vector(std::vector<double> v);

    /// Scalar tensor (shape {1}).
    static Tensor scalar(double v);

    const std::vector<int>& shape() const { return shape_; }
    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    int rank() const { return static_cast<int>(shape_.size()); }
    std::size_t numel() const { return data_.size(); }

    int dim(int axis) const;

    /// Rows/cols of a rank-2 tensor (rank-1 is treated as a column).
    int rows() const;
    int cols() const;

    double& at(int r, int c);
    double at(int r, int c) const;
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;

    /// Throws NumericError if any entry is NaN or infinite.
    void require_finite(const std::string& where) const;

    std::string shape_str() const;

    bool operator==(const Tensor& other) const {
        return shape_ == other.shape_ && data_ == other.data_;
    }

private:
    std::vector<int> shape_;
    std::vector<double> data_;
};

std::size_t shape_numel(const std::vector<int>& shape);

} // namespace wgnn

#endif
