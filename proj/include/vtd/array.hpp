#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace vtd::diff {

// Dense 64-bit real array, rank 1 or 2, row-major storage.
class Array {
public:
    Array() = default;

    explicit Array(std::vector<std::size_t> shape)
        : shape_(std::move(shape)), data_(count(shape_), 0.0) {
        check_rank();
    }

    Array(std::vector<std::size_t> shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        check_rank();
        if (count(shape_) != data_.size())
            throw std::invalid_argument("Array: shape " + shape_str() + " does not match data length " +
                                        std::to_string(data_.size()));
    }

    static Array scalar(double v) { return Array({1}, {v}); }

    static Array zeros(std::vector<std::size_t> shape) { return Array(std::move(shape)); }

    static Array full(std::vector<std::size_t> shape, double v) {
        Array a(std::move(shape));
        for (auto& x : a.data_) x = v;
        return a;
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    // rank-2 accessors
    std::size_t rows() const { return rank() == 2 ? shape_[0] : 1; }
    std::size_t cols() const { return rank() == 2 ? shape_[1] : (rank() == 1 ? shape_[0] : 0); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    double& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
    double at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Array& o) const { return shape_ == o.shape_; }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    bool operator==(const Array& o) const { return shape_ == o.shape_ && data_ == o.data_; }

    std::string shape_str() const {
        std::string s = "(";
        for (std::size_t i = 0; i < shape_.size(); ++i) {
            if (i) s += ", ";
            s += std::to_string(shape_[i]);
        }
        s += ")";
        return s;
    }

    static std::size_t count(const std::vector<std::size_t>& shape) {
        std::size_t n = 1;
        for (std::size_t d : shape) n *= d;
        return shape.empty() ? 0 : n;
    }

private:
    void check_rank() const {
        if (shape_.empty() || shape_.size() > 2)
            throw std::invalid_argument("Array: rank must be 1 or 2, got shape " + shape_str());
        for (std::size_t d : shape_)
            if (d == 0) throw std::invalid_argument("Array: zero-sized dimension in shape " + shape_str());
    }

    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

} // namespace vtd::diff
