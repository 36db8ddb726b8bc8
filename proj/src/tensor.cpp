#include "resilinet/tensor.hpp"

#include "resilinet/errors.hpp"

#include <cstring>
#include <fmt/format.h>
#include <fmt/ranges.h>

namespace resilinet {

std::size_t shape_size(const Shape& shape)
{
    std::size_t n = 1;
    for (const auto d : shape) n *= d;
    return n;
}

std::string shape_to_string(const Shape& shape) { return fmt::format("[{}]", fmt::join(shape, ", ")); }

namespace {

void check_dims(const Shape& shape)
{
    if (shape.empty()) throw ShapeError("tensor shape must have at least one dimension");
    for (const auto d : shape) {
        if (d == 0) throw ShapeError(fmt::format("tensor shape {} has a zero dimension", shape_to_string(shape)));
    }
}

}  // namespace

Tensor::Tensor(Shape shape, float fill) : shape_(std::move(shape))
{
    check_dims(shape_);
    data_.assign(shape_size(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<float> data) : shape_(std::move(shape)), data_(std::move(data))
{
    check_dims(shape_);
    if (shape_size(shape_) != data_.size()) {
        throw ShapeError(fmt::format("shape {} needs {} elements, got {}", shape_to_string(shape_), shape_size(shape_),
                                     data_.size()));
    }
}

void Tensor::reshape(Shape shape)
{
    check_dims(shape);
    if (shape_size(shape) != data_.size()) {
        throw ShapeError(fmt::format("cannot reshape {} elements to {}", data_.size(), shape_to_string(shape)));
    }
    shape_ = std::move(shape);
}

bool Tensor::bitwise_equal(const Tensor& other) const noexcept
{
    return shape_ == other.shape_ && data_.size() == other.data_.size() &&
           (data_.empty() || std::memcmp(data_.data(), other.data_.data(), data_.size() * sizeof(float)) == 0);
}

}  // namespace resilinet
