#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mf {

// Raised when a computation produces NaN/Inf.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Shape {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t size() const { return channels * height * width; }
  std::size_t plane() const { return height * width; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

// channels x height x width grid of doubles, row-major within a channel.
// Holds pixel images x_t as well as latent codes z_t.
class ImageTensor {
 public:
  ImageTensor() = default;
  ImageTensor(std::size_t channels, std::size_t height, std::size_t width, double fill = 0.0);
  ImageTensor(Shape shape, std::vector<double> data);
  explicit ImageTensor(Shape shape, double fill = 0.0)
      : ImageTensor(shape.channels, shape.height, shape.width, fill) {}

  const Shape& shape() const { return shape_; }
  std::size_t channels() const { return shape_.channels; }
  std::size_t height() const { return shape_.height; }
  std::size_t width() const { return shape_.width; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& at(std::size_t c, std::size_t y, std::size_t x) {
    return data_[(c * shape_.height + y) * shape_.width + x];
  }
  double at(std::size_t c, std::size_t y, std::size_t x) const {
    return data_[(c * shape_.height + y) * shape_.width + x];
  }

  std::span<double> channel(std::size_t c) {
    return {data_.data() + c * shape_.plane(), shape_.plane()};
  }
  std::span<const double> channel(std::size_t c) const {
    return {data_.data() + c * shape_.plane(), shape_.plane()};
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  ImageTensor& operator+=(const ImageTensor& other);
  ImageTensor& operator-=(const ImageTensor& other);
  ImageTensor& operator*=(double s);

  bool all_finite() const;
  bool operator==(const ImageTensor&) const = default;

 private:
  Shape shape_{};
  std::vector<double> data_;
};

ImageTensor operator+(ImageTensor a, const ImageTensor& b);
ImageTensor operator-(ImageTensor a, const ImageTensor& b);
ImageTensor operator*(ImageTensor a, double s);
ImageTensor operator*(double s, ImageTensor a);

// a*x + b*y, elementwise.
ImageTensor lincomb(double a, const ImageTensor& x, double b, const ImageTensor& y);

ImageTensor gaussian_noise(Shape shape, class Rng& rng);

// Channel-wise concatenation; spatial dims must match.
ImageTensor concat_channels(const ImageTensor& a, const ImageTensor& b);

double max_abs_diff(const ImageTensor& a, const ImageTensor& b);

void require_same_shape(const ImageTensor& a, const ImageTensor& b, const char* what);
void require_finite(const ImageTensor& x, const std::string& where);

}  // namespace mf
