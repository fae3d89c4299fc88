#include "rmis/tensor.hpp"

#include <functional>
#include <numeric>
#include <sstream>

#include "rmis/error.hpp"
#include "kernels.hpp"

namespace rmis {

namespace {

std::size_t element_count(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(element_count(shape_), fill) {
  if (shape_.size() > 2) {
    throw ShapeError("tensors are limited to rank 2, got " + shape_string(shape_));
  }
}

Tensor::Tensor(std::vector<std::size_t> shape, const std::vector<double>& data)
    : Tensor(std::move(shape), AlignedDoubles(data.begin(), data.end())) {}

Tensor::Tensor(std::vector<std::size_t> shape, AlignedDoubles data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_.size() > 2) {
    throw ShapeError("tensors are limited to rank 2, got " + shape_string(shape_));
  }
  if (element_count(shape_) != data_.size()) {
    throw ShapeError("shape " + shape_string(shape_) + " does not match " +
                     std::to_string(data_.size()) + " elements");
  }
}

double Tensor::item() const {
  if (data_.size() != 1) {
    throw ShapeError("item() on tensor of shape " + shape_string(shape_));
  }
  return data_[0];
}

bool Tensor::all_finite() const noexcept {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor Tensor::reshaped(std::vector<std::size_t> shape) const {
  return Tensor(std::move(shape), data_);
}

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

void require_finite(const Tensor& t, std::string_view where) {
  if (!t.all_finite()) {
    throw NumericError("non-finite value in " + std::string(where));
  }
}

void require_finite(double v, std::string_view where) {
  if (!std::isfinite(v)) {
    throw NumericError("non-finite value in " + std::string(where));
  }
}

Tensor swish(const Tensor& z) {
  Tensor out(z.shape());
  detail::swish(z.raw(), out.raw(), z.size());
  return out;
}

}  // namespace rmis
