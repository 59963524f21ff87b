#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <vector>

namespace armour {

// Closed interval [lo, hi]. Plain double arithmetic, no outward rounding.
class Interval {
public:
    constexpr Interval() = default;
    constexpr Interval(double v) : lo_(v), hi_(v) {}
    Interval(double lo, double hi);

    static Interval centered(double mid, double rad);

    double lo() const { return lo_; }
    double hi() const { return hi_; }
    double mid() const { return 0.5 * (lo_ + hi_); }
    double rad() const { return 0.5 * (hi_ - lo_); }
    double width() const { return hi_ - lo_; }
    // max(|lo|, |hi|)
    double mag() const;
    bool degenerate() const { return lo_ == hi_; }
    bool contains(double x) const { return lo_ <= x && x <= hi_; }
    bool contains(const Interval& o) const { return lo_ <= o.lo_ && o.hi_ <= hi_; }

    Interval operator-() const { return {-hi_, -lo_, Unchecked{}}; }
    Interval& operator+=(const Interval& o);
    Interval& operator-=(const Interval& o);
    Interval& operator*=(const Interval& o);

    friend bool operator==(const Interval& a, const Interval& b) = default;

private:
    struct Unchecked {};
    constexpr Interval(double lo, double hi, Unchecked) : lo_(lo), hi_(hi) {}

    double lo_ = 0.0;
    double hi_ = 0.0;

    friend Interval operator+(const Interval&, const Interval&);
    friend Interval operator-(const Interval&, const Interval&);
    friend Interval operator*(const Interval&, const Interval&);
    friend Interval hull(const Interval&, const Interval&);
    friend Interval iv_sin(const Interval&);
    friend Interval iv_cos(const Interval&);
};

enum class AddMode { sum, diff };

Interval iv_add_sub(const Interval& a, const Interval& b, AddMode mode);
Interval iv_mul(const Interval& a, const Interval& b);

Interval operator+(const Interval& a, const Interval& b);
Interval operator-(const Interval& a, const Interval& b);
Interval operator*(const Interval& a, const Interval& b);

Interval hull(const Interval& a, const Interval& b);

// Exact ranges of sin/cos over an interval.
Interval iv_sin(const Interval& x);
Interval iv_cos(const Interval& x);

std::ostream& operator<<(std::ostream& os, const Interval& x);

// Row-major interval matrix; a vector is a single column.
class IntervalMatrix {
public:
    IntervalMatrix() = default;
    IntervalMatrix(int rows, int cols);
    explicit IntervalMatrix(const Eigen::MatrixXd& m);
    IntervalMatrix(const Eigen::MatrixXd& lo, const Eigen::MatrixXd& hi);

    static IntervalMatrix zeros(int rows, int cols) { return IntervalMatrix(rows, cols); }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int size() const { return rows_ * cols_; }

    Interval& operator()(int i, int j) { return data_[i * cols_ + j]; }
    const Interval& operator()(int i, int j) const { return data_[i * cols_ + j]; }
    Interval& operator[](int i) { return data_[i]; }
    const Interval& operator[](int i) const { return data_[i]; }

    Eigen::MatrixXd lo() const;
    Eigen::MatrixXd hi() const;
    Eigen::MatrixXd mid() const;
    Eigen::MatrixXd rad() const;
    // Elementwise max(|lo|, |hi|).
    Eigen::MatrixXd mag() const;

    bool contains(const Eigen::MatrixXd& m) const;
    bool contains(const IntervalMatrix& o) const;

    IntervalMatrix transpose() const;

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<Interval> data_;
};

IntervalMatrix iv_matmul(const IntervalMatrix& A, const IntervalMatrix& B);
IntervalMatrix iv_cross(const IntervalMatrix& a, const IntervalMatrix& b);
IntervalMatrix iv_skew(const IntervalMatrix& a);

IntervalMatrix operator+(const IntervalMatrix& A, const IntervalMatrix& B);
IntervalMatrix operator-(const IntervalMatrix& A, const IntervalMatrix& B);
IntervalMatrix operator-(const IntervalMatrix& A);
IntervalMatrix operator*(const IntervalMatrix& A, const IntervalMatrix& B);
IntervalMatrix operator*(const Interval& s, const IntervalMatrix& A);
IntervalMatrix operator*(const Eigen::MatrixXd& A, const IntervalMatrix& B);

} // namespace armour
