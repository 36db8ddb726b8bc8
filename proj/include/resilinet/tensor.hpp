#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace resilinet {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_to_string(const Shape& shape);

/// Dense row-major array of binary32 values.
///
/// Every dimension is at least 1 and the element count always equals the
/// product of the shape. A default-constructed tensor is the one exception:
/// it has no shape and no data and stands for "absent" (e.g. the gradient slot
/// of a non-trainable parameter).
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, float fill = 0.0f);
    Tensor(Shape shape, std::vector<float> data);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::span<float> data() noexcept { return data_; }
    std::span<const float> data() const noexcept { return data_; }
    float* raw() noexcept { return data_.data(); }
    const float* raw() const noexcept { return data_.data(); }

    float& operator[](std::size_t i) { return data_[i]; }
    float operator[](std::size_t i) const { return data_[i]; }

    /// Same element count, new shape.
    void reshape(Shape shape);

    /// Shape equality plus identical bit patterns (NaN payloads included).
    bool bitwise_equal(const Tensor& other) const noexcept;

private:
    Shape shape_;
    std::vector<float> data_;
};

}  // namespace resilinet
