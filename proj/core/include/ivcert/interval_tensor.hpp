#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace ivcert {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// A closed real interval [lower, upper].
struct Interval {
  double lower = 0.0;
  double upper = 0.0;

  double center() const { return 0.5 * (lower + upper); }
  double radius() const { return 0.5 * (upper - lower); }
  bool contains(double x, double slack = 0.0) const {
    return lower - slack <= x && x <= upper + slack;
  }

  friend bool operator==(const Interval&, const Interval&) = default;
};

// Scalar interval arithmetic. Each result is the exact hull of the
// pointwise operation under round-to-nearest.
Interval operator+(Interval a, Interval b);
Interval operator-(Interval a, Interval b);
Interval operator-(Interval a);
Interval operator*(Interval a, Interval b);
Interval operator*(double s, Interval a);
/// Throws DomainError when `b` contains zero.
Interval operator/(Interval a, Interval b);
Interval reciprocal(Interval b);

enum class Monotonicity { kIncreasing, kDecreasing };

/// N-dimensional array of intervals stored as separate lower/upper arrays
/// (row-major). Lower/upper is the canonical form; center and radius are
/// derived on demand.
///
/// Invariant: lower[i] <= upper[i] for every element. Construction from
/// bounds rejects violations (including NaN).
class IntervalTensor {
 public:
  /// Empty tensor of shape {0}.
  IntervalTensor();

  /// Degenerate interval embedding of concrete values; radius is exactly 0.
  static IntervalTensor from_point(std::vector<double> values, Shape shape);
  static IntervalTensor from_point(std::vector<double> values);

  static IntervalTensor from_bounds(std::vector<double> lower, std::vector<double> upper,
                                    Shape shape);

  /// Center/radius form. Radii must be non-negative.
  static IntervalTensor from_center_radius(std::span<const double> center,
                                           std::span<const double> radius, Shape shape);

  /// l-infinity box of radius `eps` around `x`, without clamping to any data range.
  static IntervalTensor inflate(std::span<const double> x, double eps, Shape shape);
  static IntervalTensor inflate(std::span<const double> x, double eps);

  static IntervalTensor zeros(Shape shape);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return lower_.size(); }
  bool empty() const { return lower_.empty(); }
  std::size_t rank() const { return shape_.size(); }
  /// Rank-2 accessors.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> lower() const { return lower_; }
  std::span<const double> upper() const { return upper_; }
  Interval operator[](std::size_t i) const { return {lower_[i], upper_[i]}; }
  Interval at(std::size_t row, std::size_t col) const;

  std::vector<double> center() const;
  std::vector<double> radius() const;

  double max_radius() const;
  double mean_radius() const;
  bool is_degenerate() const;
  bool all_finite() const;

  IntervalTensor reshaped(Shape shape) const;
  /// Copy of rows [begin, end) of a rank-2 tensor.
  IntervalTensor row_slice(std::size_t begin, std::size_t end) const;

  /// Replace one element. Throws DomainError if lower > upper.
  void set(std::size_t i, Interval value);

 private:
  IntervalTensor(Shape shape, std::vector<double> lower, std::vector<double> upper);

  Shape shape_;
  std::vector<double> lower_;
  std::vector<double> upper_;

  friend struct TensorAccess;
};

// Elementwise operations. Shapes must be equal, or one operand may be a
// vector whose length equals the column count of a rank-2 operand (bias
// broadcasting over rows). Anything else throws ShapeError.
IntervalTensor add(const IntervalTensor& a, const IntervalTensor& b);
IntervalTensor sub(const IntervalTensor& a, const IntervalTensor& b);
IntervalTensor mul(const IntervalTensor& a, const IntervalTensor& b);
/// Throws DomainError if any divisor element contains zero.
IntervalTensor div(const IntervalTensor& a, const IntervalTensor& b);

IntervalTensor neg(const IntervalTensor& a);
IntervalTensor scale(const IntervalTensor& a, double s);
/// Adds a concrete offset to every element (exact interval shift).
IntervalTensor shift(const IntervalTensor& a, std::span<const double> offset);

/// Rank-2 transpose.
IntervalTensor transpose(const IntervalTensor& a);

/// Sum over `axis` of a rank-2 tensor; the result has rank 1.
IntervalTensor reduce_sum(const IntervalTensor& a, std::size_t axis);
IntervalTensor reduce_mean(const IntervalTensor& a, std::size_t axis);

/// Interval matrix product in midpoint-radius form:
///   m_C = m_A m_B,  r_C = (|m_A| + r_A) r_B + r_A |m_B|.
/// When either operand has a non-zero radius the result also absorbs an
/// a-priori bound on the floating-point error and is rounded outward, so it
/// encloses the real-valued product. Two point operands give the plain
/// floating-point product.
IntervalTensor rump_matmul(const IntervalTensor& a, const IntervalTensor& b);

/// Image of a monotone scalar function, evaluated at the endpoints.
IntervalTensor apply_monotonic(const IntervalTensor& a, const std::function<double(double)>& f,
                               Monotonicity direction);

/// True iff lower - slack <= x <= upper + slack elementwise.
bool contains(const IntervalTensor& a, std::span<const double> x, double slack = 0.0);

inline IntervalTensor operator+(const IntervalTensor& a, const IntervalTensor& b) {
  return add(a, b);
}
inline IntervalTensor operator-(const IntervalTensor& a, const IntervalTensor& b) {
  return sub(a, b);
}
inline IntervalTensor operator*(const IntervalTensor& a, const IntervalTensor& b) {
  return mul(a, b);
}
inline IntervalTensor operator-(const IntervalTensor& a) { return neg(a); }

}  // namespace ivcert
