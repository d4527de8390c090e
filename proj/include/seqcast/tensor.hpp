#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace seqcast {

// Dense row-major array of doubles. All model arithmetic is 64-bit.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0)
        : shape_(std::move(shape)), data_(numel_of(shape_), fill) {}
    Tensor(std::vector<std::size_t> shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (numel_of(shape_) != data_.size())
            throw std::invalid_argument("Tensor: shape/data size mismatch");
    }

    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_.at(i); }
    std::size_t numel() const { return data_.size(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& at(std::initializer_list<std::size_t> idx) { return data_[flat(idx)]; }
    double at(std::initializer_list<std::size_t> idx) const { return data_[flat(idx)]; }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    // Reinterprets the buffer under a new shape with equal element count.
    Tensor reshaped(std::vector<std::size_t> shape) const {
        if (numel_of(shape) != data_.size())
            throw std::invalid_argument("Tensor::reshaped: element count mismatch");
        return Tensor(std::move(shape), data_);
    }

    void fill(double v) { for (auto& x : data_) x = v; }
    bool all_finite() const;
    // Index of the first non-finite element, or numel() when all finite.
    std::size_t first_nonfinite() const;

    static std::size_t numel_of(const std::vector<std::size_t>& shape) {
        std::size_t n = 1;
        for (auto d : shape) {
            if (d == 0) throw std::invalid_argument("Tensor: zero dimension");
            n *= d;
        }
        return n;
    }

    std::string shape_str() const;

private:
    std::size_t flat(std::initializer_list<std::size_t> idx) const {
        if (idx.size() != shape_.size())
            throw std::invalid_argument("Tensor::at: rank mismatch");
        std::size_t f = 0, k = 0;
        for (auto i : idx) {
            if (i >= shape_[k]) throw std::out_of_range("Tensor::at: index out of range");
            f = f * shape_[k] + i;
            ++k;
        }
        return f;
    }

    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

} // namespace seqcast
