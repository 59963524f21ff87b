#include "armour/interval.hpp"
#include "armour/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

namespace armour {

Interval::Interval(double lo, double hi) : lo_(lo), hi_(hi)
{
    if (!(lo <= hi)) {
        std::ostringstream msg;
        msg << "invalid interval [" << lo << ", " << hi << "]";
        throw std::invalid_argument(msg.str());
    }
}

Interval Interval::centered(double mid, double rad)
{
    return Interval(mid - rad, mid + rad);
}

double Interval::mag() const
{
    return std::max(std::abs(lo_), std::abs(hi_));
}

Interval& Interval::operator+=(const Interval& o) { return *this = *this + o; }
Interval& Interval::operator-=(const Interval& o) { return *this = *this - o; }
Interval& Interval::operator*=(const Interval& o) { return *this = *this * o; }

Interval operator+(const Interval& a, const Interval& b)
{
    return {a.lo_ + b.lo_, a.hi_ + b.hi_, Interval::Unchecked{}};
}

Interval operator-(const Interval& a, const Interval& b)
{
    return {a.lo_ - b.hi_, a.hi_ - b.lo_, Interval::Unchecked{}};
}

Interval operator*(const Interval& a, const Interval& b)
{
    const double p1 = a.lo_ * b.lo_;
    const double p2 = a.lo_ * b.hi_;
    const double p3 = a.hi_ * b.lo_;
    const double p4 = a.hi_ * b.hi_;
    return {std::min({p1, p2, p3, p4}), std::max({p1, p2, p3, p4}), Interval::Unchecked{}};
}

Interval iv_add_sub(const Interval& a, const Interval& b, AddMode mode)
{
    return mode == AddMode::sum ? a + b : a - b;
}

Interval iv_mul(const Interval& a, const Interval& b) { return a * b; }

Interval hull(const Interval& a, const Interval& b)
{
    return {std::min(a.lo_, b.lo_), std::max(a.hi_, b.hi_), Interval::Unchecked{}};
}

namespace {

// true if some x0 + 2*pi*n lies in [lo, hi]
bool hits_phase(double lo, double hi, double x0)
{
    constexpr double two_pi = 2.0 * std::numbers::pi;
    const double n = std::ceil((lo - x0) / two_pi);
    return x0 + n * two_pi <= hi;
}

} // namespace

Interval iv_sin(const Interval& x)
{
    constexpr double pi = std::numbers::pi;
    if (!std::isfinite(x.lo_) || !std::isfinite(x.hi_) || x.width() >= 2.0 * pi) {
        return {-1.0, 1.0, Interval::Unchecked{}};
    }
    const double s1 = std::sin(x.lo_);
    const double s2 = std::sin(x.hi_);
    double lo = std::min(s1, s2);
    double hi = std::max(s1, s2);
    if (hits_phase(x.lo_, x.hi_, 0.5 * pi)) hi = 1.0;
    if (hits_phase(x.lo_, x.hi_, -0.5 * pi)) lo = -1.0;
    return {lo, hi, Interval::Unchecked{}};
}

Interval iv_cos(const Interval& x)
{
    constexpr double pi = std::numbers::pi;
    if (!std::isfinite(x.lo_) || !std::isfinite(x.hi_) || x.width() >= 2.0 * pi) {
        return {-1.0, 1.0, Interval::Unchecked{}};
    }
    const double c1 = std::cos(x.lo_);
    const double c2 = std::cos(x.hi_);
    double lo = std::min(c1, c2);
    double hi = std::max(c1, c2);
    if (hits_phase(x.lo_, x.hi_, 0.0)) hi = 1.0;
    if (hits_phase(x.lo_, x.hi_, pi)) lo = -1.0;
    return {lo, hi, Interval::Unchecked{}};
}

std::ostream& operator<<(std::ostream& os, const Interval& x)
{
    return os << '[' << x.lo() << ", " << x.hi() << ']';
}

IntervalMatrix::IntervalMatrix(int rows, int cols)
    : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols)
{
    if (rows < 0 || cols < 0) throw DimensionError("negative interval matrix shape");
}

IntervalMatrix::IntervalMatrix(const Eigen::MatrixXd& m)
    : IntervalMatrix(static_cast<int>(m.rows()), static_cast<int>(m.cols()))
{
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j) (*this)(i, j) = Interval(m(i, j));
}

IntervalMatrix::IntervalMatrix(const Eigen::MatrixXd& lo, const Eigen::MatrixXd& hi)
    : IntervalMatrix(static_cast<int>(lo.rows()), static_cast<int>(lo.cols()))
{
    if (lo.rows() != hi.rows() || lo.cols() != hi.cols())
        throw DimensionError("interval matrix bound shapes differ");
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j) (*this)(i, j) = Interval(lo(i, j), hi(i, j));
}

namespace {

template <class F>
Eigen::MatrixXd map_entries(const IntervalMatrix& m, F f)
{
    Eigen::MatrixXd out(m.rows(), m.cols());
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) out(i, j) = f(m(i, j));
    return out;
}

void require_same_shape(const IntervalMatrix& A, const IntervalMatrix& B, const char* what)
{
    if (A.rows() != B.rows() || A.cols() != B.cols()) {
        std::ostringstream msg;
        msg << what << ": shape " << A.rows() << "x" << A.cols() << " vs " << B.rows() << "x"
            << B.cols();
        throw DimensionError(msg.str());
    }
}

} // namespace

Eigen::MatrixXd IntervalMatrix::lo() const { return map_entries(*this, [](auto& x) { return x.lo(); }); }
Eigen::MatrixXd IntervalMatrix::hi() const { return map_entries(*this, [](auto& x) { return x.hi(); }); }
Eigen::MatrixXd IntervalMatrix::mid() const { return map_entries(*this, [](auto& x) { return x.mid(); }); }
Eigen::MatrixXd IntervalMatrix::rad() const { return map_entries(*this, [](auto& x) { return x.rad(); }); }
Eigen::MatrixXd IntervalMatrix::mag() const { return map_entries(*this, [](auto& x) { return x.mag(); }); }

bool IntervalMatrix::contains(const Eigen::MatrixXd& m) const
{
    if (m.rows() != rows_ || m.cols() != cols_) return false;
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j)
            if (!(*this)(i, j).contains(m(i, j))) return false;
    return true;
}

bool IntervalMatrix::contains(const IntervalMatrix& o) const
{
    if (o.rows_ != rows_ || o.cols_ != cols_) return false;
    for (size_t i = 0; i < data_.size(); ++i)
        if (!data_[i].contains(o.data_[i])) return false;
    return true;
}

IntervalMatrix IntervalMatrix::transpose() const
{
    IntervalMatrix t(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

IntervalMatrix iv_matmul(const IntervalMatrix& A, const IntervalMatrix& B)
{
    if (A.cols() != B.rows()) {
        std::ostringstream msg;
        msg << "iv_matmul: " << A.rows() << "x" << A.cols() << " times " << B.rows() << "x"
            << B.cols();
        throw DimensionError(msg.str());
    }
    IntervalMatrix C(A.rows(), B.cols());
    for (int i = 0; i < A.rows(); ++i) {
        for (int j = 0; j < B.cols(); ++j) {
            Interval acc(0.0);
            for (int k = 0; k < A.cols(); ++k) acc = acc + A(i, k) * B(k, j);
            C(i, j) = acc;
        }
    }
    return C;
}

IntervalMatrix iv_skew(const IntervalMatrix& a)
{
    if (a.rows() != 3 || a.cols() != 1) throw DimensionError("iv_skew expects a 3-vector");
    IntervalMatrix S(3, 3);
    S(0, 1) = -a[2];
    S(0, 2) = a[1];
    S(1, 0) = a[2];
    S(1, 2) = -a[0];
    S(2, 0) = -a[1];
    S(2, 1) = a[0];
    return S;
}

IntervalMatrix iv_cross(const IntervalMatrix& a, const IntervalMatrix& b)
{
    if (b.rows() != 3 || b.cols() != 1) throw DimensionError("iv_cross expects 3-vectors");
    return iv_matmul(iv_skew(a), b);
}

IntervalMatrix operator+(const IntervalMatrix& A, const IntervalMatrix& B)
{
    require_same_shape(A, B, "interval matrix sum");
    IntervalMatrix C(A.rows(), A.cols());
    for (int i = 0; i < A.size(); ++i) C[i] = A[i] + B[i];
    return C;
}

IntervalMatrix operator-(const IntervalMatrix& A, const IntervalMatrix& B)
{
    require_same_shape(A, B, "interval matrix difference");
    IntervalMatrix C(A.rows(), A.cols());
    for (int i = 0; i < A.size(); ++i) C[i] = A[i] - B[i];
    return C;
}

IntervalMatrix operator-(const IntervalMatrix& A)
{
    IntervalMatrix C(A.rows(), A.cols());
    for (int i = 0; i < A.size(); ++i) C[i] = -A[i];
    return C;
}

IntervalMatrix operator*(const IntervalMatrix& A, const IntervalMatrix& B) { return iv_matmul(A, B); }

IntervalMatrix operator*(const Interval& s, const IntervalMatrix& A)
{
    IntervalMatrix C(A.rows(), A.cols());
    for (int i = 0; i < A.size(); ++i) C[i] = s * A[i];
    return C;
}

IntervalMatrix operator*(const Eigen::MatrixXd& A, const IntervalMatrix& B)
{
    if (A.cols() != B.rows()) throw DimensionError("real times interval matrix: shape mismatch");
    IntervalMatrix C(static_cast<int>(A.rows()), B.cols());
    for (int i = 0; i < A.rows(); ++i) {
        for (int j = 0; j < B.cols(); ++j) {
            Interval acc(0.0);
            for (int k = 0; k < A.cols(); ++k) acc = acc + Interval(A(i, k)) * B(k, j);
            C(i, j) = acc;
        }
    }
    return C;
}

} // namespace armour
