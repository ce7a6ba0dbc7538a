#include "mf/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "mf/rng.hpp"

namespace mf {

std::string Shape::str() const {
  return std::to_string(channels) + "x" + std::to_string(height) + "x" + std::to_string(width);
}

ImageTensor::ImageTensor(std::size_t channels, std::size_t height, std::size_t width, double fill)
    : shape_{channels, height, width}, data_(channels * height * width, fill) {
  if (channels == 0 || height == 0 || width == 0) {
    throw std::invalid_argument("ImageTensor: dimensions must be positive");
  }
}

ImageTensor::ImageTensor(Shape shape, std::vector<double> data)
    : shape_(shape), data_(std::move(data)) {
  if (shape.channels == 0 || shape.height == 0 || shape.width == 0) {
    throw std::invalid_argument("ImageTensor: dimensions must be positive");
  }
  if (data_.size() != shape.size()) {
    throw std::invalid_argument("ImageTensor: data length " + std::to_string(data_.size()) +
                                " does not match shape " + shape.str());
  }
}

void require_same_shape(const ImageTensor& a, const ImageTensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch " + a.shape().str() +
                                " vs " + b.shape().str());
  }
}

void require_finite(const ImageTensor& x, const std::string& where) {
  if (!x.all_finite()) throw NumericError("non-finite values in " + where);
}

ImageTensor& ImageTensor::operator+=(const ImageTensor& other) {
  require_same_shape(*this, other, "operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

ImageTensor& ImageTensor::operator-=(const ImageTensor& other) {
  require_same_shape(*this, other, "operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

ImageTensor& ImageTensor::operator*=(double s) {
  for (auto& v : data_) v *= s;
  return *this;
}

bool ImageTensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

ImageTensor operator+(ImageTensor a, const ImageTensor& b) { return a += b; }
ImageTensor operator-(ImageTensor a, const ImageTensor& b) { return a -= b; }
ImageTensor operator*(ImageTensor a, double s) { return a *= s; }
ImageTensor operator*(double s, ImageTensor a) { return a *= s; }

ImageTensor lincomb(double a, const ImageTensor& x, double b, const ImageTensor& y) {
  require_same_shape(x, y, "lincomb");
  ImageTensor out(x.shape());
  auto& o = out.data();
  const auto& xd = x.data();
  const auto& yd = y.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = a * xd[i] + b * yd[i];
  return out;
}

ImageTensor gaussian_noise(Shape shape, Rng& rng) {
  ImageTensor out(shape);
  for (auto& v : out.data()) v = rng.normal();
  return out;
}

ImageTensor concat_channels(const ImageTensor& a, const ImageTensor& b) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw std::invalid_argument("concat_channels: spatial mismatch " + a.shape().str() + " vs " +
                                b.shape().str());
  }
  std::vector<double> data;
  data.reserve(a.size() + b.size());
  data.insert(data.end(), a.data().begin(), a.data().end());
  data.insert(data.end(), b.data().begin(), b.data().end());
  return ImageTensor(Shape{a.channels() + b.channels(), a.height(), a.width()}, std::move(data));
}

double max_abs_diff(const ImageTensor& a, const ImageTensor& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

}  // namespace mf
