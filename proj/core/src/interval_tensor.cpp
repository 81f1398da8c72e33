#include "ivcert/interval_tensor.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <sstream>

#include "ivcert/error.hpp"

namespace ivcert {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;

[[maybe_unused]] bool ordered(std::span<const double> lower, std::span<const double> upper) {
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (!(lower[i] <= upper[i])) return false;
  }
  return true;
}

// Midpoint and a radius large enough that mid +- rad covers [lo, hi]
// despite the rounding of both computations.
void midpoint_radius(const ConstMap& lo, const ConstMap& hi, RowMatrix& mid, RowMatrix& rad) {
  constexpr double kUp = 1.0 + 2.0 * std::numeric_limits<double>::epsilon();
  mid = 0.5 * (lo + hi);
  rad = (hi - mid).cwiseMax(mid - lo) * kUp;
  rad = rad.unaryExpr([](double v) { return v > 0.0 ? std::nextafter(v, INFINITY) : v; });
}

}  // namespace

struct TensorAccess {
  static IntervalTensor make(Shape shape, std::vector<double> lower, std::vector<double> upper) {
    return IntervalTensor(std::move(shape), std::move(lower), std::move(upper));
  }
};

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

// ---------------------------------------------------------------------------
// Scalar intervals

Interval operator+(Interval a, Interval b) { return {a.lower + b.lower, a.upper + b.upper}; }

Interval operator-(Interval a, Interval b) { return {a.lower - b.upper, a.upper - b.lower}; }

Interval operator-(Interval a) { return {-a.upper, -a.lower}; }

Interval operator*(Interval a, Interval b) {
  const double p1 = a.lower * b.lower;
  const double p2 = a.lower * b.upper;
  const double p3 = a.upper * b.lower;
  const double p4 = a.upper * b.upper;
  return {std::min({p1, p2, p3, p4}), std::max({p1, p2, p3, p4})};
}

Interval operator*(double s, Interval a) {
  return s >= 0.0 ? Interval{s * a.lower, s * a.upper} : Interval{s * a.upper, s * a.lower};
}

Interval reciprocal(Interval b) {
  if (b.lower <= 0.0 && 0.0 <= b.upper) {
    std::ostringstream os;
    os << "division by interval [" << b.lower << ", " << b.upper << "] containing zero";
    throw DomainError(os.str());
  }
  return {1.0 / b.upper, 1.0 / b.lower};
}

Interval operator/(Interval a, Interval b) { return a * reciprocal(b); }

// ---------------------------------------------------------------------------
// IntervalTensor

IntervalTensor::IntervalTensor() : shape_{0} {}

IntervalTensor::IntervalTensor(Shape shape, std::vector<double> lower, std::vector<double> upper)
    : shape_(std::move(shape)), lower_(std::move(lower)), upper_(std::move(upper)) {
  assert(lower_.size() == upper_.size());
  assert(shape_size(shape_) == lower_.size());
  assert(ordered(lower_, upper_) || !all_finite());
}

IntervalTensor IntervalTensor::from_point(std::vector<double> values, Shape shape) {
  if (shape_size(shape) != values.size()) {
    throw ShapeError("from_point: " + std::to_string(values.size()) +
                     " values do not fill shape " + shape_string(shape));
  }
  std::vector<double> upper = values;
  return IntervalTensor(std::move(shape), std::move(values), std::move(upper));
}

IntervalTensor IntervalTensor::from_point(std::vector<double> values) {
  Shape shape{values.size()};
  return from_point(std::move(values), std::move(shape));
}

IntervalTensor IntervalTensor::from_bounds(std::vector<double> lower, std::vector<double> upper,
                                           Shape shape) {
  if (lower.size() != upper.size() || shape_size(shape) != lower.size()) {
    throw ShapeError("from_bounds: bound arrays do not match shape " + shape_string(shape));
  }
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (!(lower[i] <= upper[i])) {
      std::ostringstream os;
      os << "from_bounds: element " << i << " has lower " << lower[i] << " > upper " << upper[i];
      throw DomainError(os.str());
    }
  }
  return IntervalTensor(std::move(shape), std::move(lower), std::move(upper));
}

IntervalTensor IntervalTensor::from_center_radius(std::span<const double> center,
                                                  std::span<const double> radius, Shape shape) {
  if (center.size() != radius.size() || shape_size(shape) != center.size()) {
    throw ShapeError("from_center_radius: arrays do not match shape " + shape_string(shape));
  }
  std::vector<double> lower(center.size());
  std::vector<double> upper(center.size());
  for (std::size_t i = 0; i < center.size(); ++i) {
    if (!(radius[i] >= 0.0)) throw DomainError("from_center_radius: negative radius");
    lower[i] = center[i] - radius[i];
    upper[i] = center[i] + radius[i];
  }
  return IntervalTensor(std::move(shape), std::move(lower), std::move(upper));
}

IntervalTensor IntervalTensor::inflate(std::span<const double> x, double eps, Shape shape) {
  if (!(eps >= 0.0)) throw DomainError("inflate: eps must be non-negative");
  if (shape_size(shape) != x.size()) {
    throw ShapeError("inflate: values do not fill shape " + shape_string(shape));
  }
  std::vector<double> lower(x.size());
  std::vector<double> upper(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    lower[i] = x[i] - eps;
    upper[i] = x[i] + eps;
  }
  return IntervalTensor(std::move(shape), std::move(lower), std::move(upper));
}

IntervalTensor IntervalTensor::inflate(std::span<const double> x, double eps) {
  return inflate(x, eps, Shape{x.size()});
}

IntervalTensor IntervalTensor::zeros(Shape shape) {
  const std::size_t n = shape_size(shape);
  return IntervalTensor(std::move(shape), std::vector<double>(n, 0.0), std::vector<double>(n, 0.0));
}

std::size_t IntervalTensor::rows() const {
  if (rank() != 2) throw ShapeError("rows: tensor of shape " + shape_string(shape_) + " is not rank 2");
  return shape_[0];
}

std::size_t IntervalTensor::cols() const {
  if (rank() != 2) throw ShapeError("cols: tensor of shape " + shape_string(shape_) + " is not rank 2");
  return shape_[1];
}

Interval IntervalTensor::at(std::size_t row, std::size_t col) const {
  const std::size_t i = row * cols() + col;
  return {lower_[i], upper_[i]};
}

std::vector<double> IntervalTensor::center() const {
  std::vector<double> m(size());
  for (std::size_t i = 0; i < size(); ++i) m[i] = 0.5 * (lower_[i] + upper_[i]);
  return m;
}

std::vector<double> IntervalTensor::radius() const {
  std::vector<double> r(size());
  for (std::size_t i = 0; i < size(); ++i) r[i] = 0.5 * (upper_[i] - lower_[i]);
  return r;
}

double IntervalTensor::max_radius() const {
  double r = 0.0;
  for (std::size_t i = 0; i < size(); ++i) r = std::max(r, 0.5 * (upper_[i] - lower_[i]));
  return r;
}

double IntervalTensor::mean_radius() const {
  if (empty()) return 0.0;
  double r = 0.0;
  for (std::size_t i = 0; i < size(); ++i) r += 0.5 * (upper_[i] - lower_[i]);
  return r / static_cast<double>(size());
}

bool IntervalTensor::is_degenerate() const { return lower_ == upper_; }

bool IntervalTensor::all_finite() const {
  for (std::size_t i = 0; i < size(); ++i) {
    if (!std::isfinite(lower_[i]) || !std::isfinite(upper_[i])) return false;
  }
  return true;
}

IntervalTensor IntervalTensor::reshaped(Shape shape) const {
  if (shape_size(shape) != size()) {
    throw ShapeError("reshape: " + shape_string(shape_) + " -> " + shape_string(shape));
  }
  return IntervalTensor(std::move(shape), lower_, upper_);
}

IntervalTensor IntervalTensor::row_slice(std::size_t begin, std::size_t end) const {
  const std::size_t c = cols();
  if (begin > end || end > rows()) throw ShapeError("row_slice: range out of bounds");
  std::vector<double> lo(lower_.begin() + begin * c, lower_.begin() + end * c);
  std::vector<double> hi(upper_.begin() + begin * c, upper_.begin() + end * c);
  return IntervalTensor(Shape{end - begin, c}, std::move(lo), std::move(hi));
}

void IntervalTensor::set(std::size_t i, Interval value) {
  if (i >= size()) throw ShapeError("set: index out of range");
  if (!(value.lower <= value.upper)) throw DomainError("set: lower > upper");
  lower_[i] = value.lower;
  upper_[i] = value.upper;
}

// ---------------------------------------------------------------------------
// Elementwise operations

namespace {

// Index mapping for bias-style broadcasting: either equal shapes, or a
// rank-1 operand whose length equals the column count of a rank-2 operand.
struct Broadcast {
  Shape shape;
  std::size_t a_mod = 0;  // 0 means "no broadcast", otherwise index % mod
  std::size_t b_mod = 0;

  std::size_t ai(std::size_t i) const { return a_mod ? i % a_mod : i; }
  std::size_t bi(std::size_t i) const { return b_mod ? i % b_mod : i; }
};

Broadcast broadcast(const IntervalTensor& a, const IntervalTensor& b, const char* op) {
  if (a.shape() == b.shape()) return {a.shape()};
  if (a.rank() == 2 && b.rank() == 1 && b.shape()[0] == a.shape()[1]) {
    return {a.shape(), 0, b.shape()[0]};
  }
  if (b.rank() == 2 && a.rank() == 1 && a.shape()[0] == b.shape()[1]) {
    return {b.shape(), a.shape()[0], 0};
  }
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_string(a.shape()) + " and " +
                   shape_string(b.shape()));
}

template <typename Op>
IntervalTensor elementwise(const IntervalTensor& a, const IntervalTensor& b, const char* name,
                           Op op) {
  Broadcast bc = broadcast(a, b, name);
  const std::size_t n = shape_size(bc.shape);
  std::vector<double> lo(n);
  std::vector<double> hi(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Interval r = op(a[bc.ai(i)], b[bc.bi(i)]);
    lo[i] = r.lower;
    hi[i] = r.upper;
  }
  return TensorAccess::make(std::move(bc.shape), std::move(lo), std::move(hi));
}

template <typename Op>
IntervalTensor unary(const IntervalTensor& a, Op op) {
  std::vector<double> lo(a.size());
  std::vector<double> hi(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Interval r = op(a[i]);
    lo[i] = r.lower;
    hi[i] = r.upper;
  }
  return TensorAccess::make(a.shape(), std::move(lo), std::move(hi));
}

}  // namespace

IntervalTensor add(const IntervalTensor& a, const IntervalTensor& b) {
  return elementwise(a, b, "add", [](Interval x, Interval y) { return x + y; });
}

IntervalTensor sub(const IntervalTensor& a, const IntervalTensor& b) {
  return elementwise(a, b, "sub", [](Interval x, Interval y) { return x - y; });
}

IntervalTensor mul(const IntervalTensor& a, const IntervalTensor& b) {
  return elementwise(a, b, "mul", [](Interval x, Interval y) { return x * y; });
}

IntervalTensor div(const IntervalTensor& a, const IntervalTensor& b) {
  return elementwise(a, b, "div", [](Interval x, Interval y) { return x / y; });
}

IntervalTensor neg(const IntervalTensor& a) {
  return unary(a, [](Interval x) { return -x; });
}

IntervalTensor scale(const IntervalTensor& a, double s) {
  return unary(a, [s](Interval x) { return s * x; });
}

IntervalTensor shift(const IntervalTensor& a, std::span<const double> offset) {
  if (offset.size() != a.size()) throw ShapeError("shift: offset size mismatch");
  std::vector<double> lo(a.size());
  std::vector<double> hi(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    lo[i] = a.lower()[i] + offset[i];
    hi[i] = a.upper()[i] + offset[i];
  }
  return TensorAccess::make(a.shape(), std::move(lo), std::move(hi));
}

IntervalTensor transpose(const IntervalTensor& a) {
  const std::size_t r = a.rows();
  const std::size_t c = a.cols();
  std::vector<double> lo(a.size());
  std::vector<double> hi(a.size());
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      lo[j * r + i] = a.lower()[i * c + j];
      hi[j * r + i] = a.upper()[i * c + j];
    }
  }
  return TensorAccess::make(Shape{c, r}, std::move(lo), std::move(hi));
}

IntervalTensor reduce_sum(const IntervalTensor& a, std::size_t axis) {
  const std::size_t r = a.rows();
  const std::size_t c = a.cols();
  if (axis > 1) throw ShapeError("reduce_sum: axis must be 0 or 1");
  const std::size_t n = axis == 0 ? c : r;
  std::vector<double> lo(n, 0.0);
  std::vector<double> hi(n, 0.0);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      const std::size_t k = axis == 0 ? j : i;
      lo[k] += a.lower()[i * c + j];
      hi[k] += a.upper()[i * c + j];
    }
  }
  return TensorAccess::make(Shape{n}, std::move(lo), std::move(hi));
}

IntervalTensor reduce_mean(const IntervalTensor& a, std::size_t axis) {
  const std::size_t count = axis == 0 ? a.rows() : a.cols();
  IntervalTensor sum = reduce_sum(a, axis);
  if (count == 0) return sum;
  return scale(sum, 1.0 / static_cast<double>(count));
}

IntervalTensor rump_matmul(const IntervalTensor& a, const IntervalTensor& b) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  const std::size_t p = b.cols();
  if (b.rows() != n) {
    throw ShapeError("rump_matmul: inner dimensions differ " + shape_string(a.shape()) + " * " +
                     shape_string(b.shape()));
  }
  const auto ea = static_cast<Eigen::Index>(m);
  const auto en = static_cast<Eigen::Index>(n);
  const auto ep = static_cast<Eigen::Index>(p);

  ConstMap a_lo(a.lower().data(), ea, en);
  ConstMap a_hi(a.upper().data(), ea, en);
  ConstMap b_lo(b.lower().data(), en, ep);
  ConstMap b_hi(b.upper().data(), en, ep);

  const bool a_point = a.is_degenerate();
  const bool b_point = b.is_degenerate();
  if (a_point && b_point) {
    // Plain product, identical to concrete evaluation.
    std::vector<double> c(m * p);
    Eigen::Map<RowMatrix>(c.data(), ea, ep).noalias() = a_lo * b_lo;
    return TensorAccess::make(Shape{m, p}, c, c);
  }

  RowMatrix a_mid, a_rad, b_mid, b_rad;
  midpoint_radius(a_lo, a_hi, a_mid, a_rad);
  midpoint_radius(b_lo, b_hi, b_mid, b_rad);
  const RowMatrix a_abs = a_mid.cwiseAbs();
  const RowMatrix b_abs = b_mid.cwiseAbs();

  const RowMatrix c_mid = a_mid * b_mid;
  RowMatrix c_rad;
  if (a_point) {
    c_rad.noalias() = a_abs * b_rad;
  } else if (b_point) {
    c_rad.noalias() = a_rad * b_abs;
  } else {
    c_rad.noalias() = (a_abs + a_rad) * b_rad;
    c_rad.noalias() += a_rad * b_abs;
  }

  // Rounding: |fl(m_A m_B) - m_A m_B| <= g_n |m_A||m_B| and the non-negative
  // radius products are at most a factor (1 + 2 g_n) too small, where
  // g_n = n u / (1 - n u). A doubled g_{n+2} covers the error of evaluating
  // this bound itself; the final sums are rounded outward.
  const double u = std::numeric_limits<double>::epsilon() / 2;
  const double nu = static_cast<double>(n + 2) * u;
  const double gamma = 2.0 * nu / (1.0 - nu);
  const double eta = static_cast<double>(n + 2) * std::numeric_limits<double>::denorm_min();
  const RowMatrix slack =
      ((gamma * (a_abs * b_abs + 2.0 * c_rad)).array() + eta).matrix();
  const RowMatrix rad = c_rad + slack;

  std::vector<double> lo(m * p);
  std::vector<double> hi(m * p);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      const auto r = static_cast<Eigen::Index>(i), c = static_cast<Eigen::Index>(j);
      lo[i * p + j] = std::nextafter(c_mid(r, c) - rad(r, c), -INFINITY);
      hi[i * p + j] = std::nextafter(c_mid(r, c) + rad(r, c), INFINITY);
    }
  }
  return TensorAccess::make(Shape{m, p}, std::move(lo), std::move(hi));
}

IntervalTensor apply_monotonic(const IntervalTensor& a, const std::function<double(double)>& f,
                               Monotonicity direction) {
  std::vector<double> lo(a.size());
  std::vector<double> hi(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double fl = f(a.lower()[i]);
    const double fu = f(a.upper()[i]);
    if (direction == Monotonicity::kIncreasing) {
      lo[i] = fl;
      hi[i] = fu;
    } else {
      lo[i] = fu;
      hi[i] = fl;
    }
  }
  return TensorAccess::make(a.shape(), std::move(lo), std::move(hi));
}

bool contains(const IntervalTensor& a, std::span<const double> x, double slack) {
  if (x.size() != a.size()) throw ShapeError("contains: size mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(a.lower()[i] - slack <= x[i] && x[i] <= a.upper()[i] + slack)) return false;
  }
  return true;
}

}  // namespace ivcert
