#pragma once

#include "armour/interval.hpp"

#include <Eigen/Dense>

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace armour {

enum class IdKind : std::uint8_t { time = 0, param = 1, err_pos = 2, err_vel = 3, robust = 4, fresh = 5 };

struct IndeterminateId {
    IdKind kind = IdKind::fresh;
    std::uint32_t index = 0;

    static IndeterminateId time(std::uint32_t i) { return {IdKind::time, i}; }
    static IndeterminateId param(std::uint32_t j) { return {IdKind::param, j}; }
    static IndeterminateId err_pos(std::uint32_t j) { return {IdKind::err_pos, j}; }
    static IndeterminateId err_vel(std::uint32_t j) { return {IdKind::err_vel, j}; }
    static IndeterminateId robust(std::uint32_t j) { return {IdKind::robust, j}; }

    std::uint64_t key() const { return (std::uint64_t(kind) << 32) | index; }
    std::string name() const;

    friend bool operator==(const IndeterminateId& a, const IndeterminateId& b) { return a.key() == b.key(); }
    friend auto operator<=>(const IndeterminateId& a, const IndeterminateId& b) { return a.key() <=> b.key(); }
};

// Process-wide fresh id allocation (atomic counter).
IndeterminateId fresh_id();
std::vector<IndeterminateId> fresh_ids(int n);

// Set { c + sum_i g_i x^{a_i} + B : x in [-1,1]^p }, B the independent box diag(box)[-1,1]^dim.
//
// Matrix-valued sets are flattened row-major; rows()/cols() carry the shape. The box holds
// everything that has been reduced away or bounded by a remainder; each of its dimensions
// behaves as its own fresh indeterminate that never appears anywhere else, so box terms never
// cancel and are never sliced.
class PolyZonotope {
public:
    PolyZonotope() : PolyZonotope(Eigen::VectorXd::Zero(1)) {}
    explicit PolyZonotope(const Eigen::VectorXd& center, int rows = -1, int cols = 1);
    // Generic constructor; merges duplicate exponents, folds zero exponents into the center.
    // exponents is n_ids x n_generators.
    PolyZonotope(int rows, int cols, const Eigen::VectorXd& center, const Eigen::MatrixXd& generators,
                 const Eigen::MatrixXi& exponents, std::vector<IndeterminateId> ids,
                 const Eigen::VectorXd& box = Eigen::VectorXd());

    static PolyZonotope constant(const Eigen::MatrixXd& m);
    static PolyZonotope scalar(double c) { return PolyZonotope(Eigen::VectorXd::Constant(1, c)); }
    // c + coef * x_id
    static PolyZonotope variable(IndeterminateId id, double c = 0.0, double coef = 1.0);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int dim() const { return rows_ * cols_; }
    bool is_scalar() const { return rows_ == 1 && cols_ == 1; }
    int n_generators() const { return static_cast<int>(gens_.cols()); }
    int n_ids() const { return static_cast<int>(ids_.size()); }

    const Eigen::VectorXd& center() const { return center_; }
    Eigen::MatrixXd center_matrix() const;
    const Eigen::MatrixXd& generators() const { return gens_; }
    const std::vector<IndeterminateId>& ids() const { return ids_; }
    int exponent(int id_index, int generator) const { return exps_[size_t(generator) * stride_ + id_index]; }
    Eigen::MatrixXi exponents() const;
    // Exponent of a specific id in a generator (0 if the id is absent).
    int exponent_of(const IndeterminateId& id, int generator) const;
    const Eigen::VectorXd& box() const { return box_; }
    bool has_box() const { return box_.size() > 0 && box_.maxCoeff() > 0.0; }

    // Value of the dependent part at an assignment (missing ids read as 0); box excluded.
    Eigen::VectorXd evaluate(const std::map<IndeterminateId, double>& x) const;
    // Same, with x aligned to ids().
    Eigen::VectorXd evaluate(const Eigen::VectorXd& x) const;

    PolyZonotope reshaped(int rows, int cols) const;
    PolyZonotope transpose() const;
    PolyZonotope entry(int i, int j = 0) const;
    PolyZonotope with_box(const Eigen::VectorXd& extra) const;

private:
    friend struct PzAccess;

    int rows_ = 1;
    int cols_ = 1;
    Eigen::VectorXd center_;
    Eigen::MatrixXd gens_;                // dim x n_g
    std::vector<IndeterminateId> ids_;    // sorted ascending
    int stride_ = 0;                      // bytes per exponent row, multiple of 8
    std::vector<std::uint8_t> exps_;      // n_g rows of stride_ bytes
    Eigen::VectorXd box_;                 // dim, >= 0
};

struct PzBounds {
    Eigen::VectorXd inf;
    Eigen::VectorXd sup;
};

PolyZonotope pz_from_interval(const IntervalMatrix& z, const std::vector<IndeterminateId>& ids);
// Interval enclosure as a center plus independent box, no indeterminates.
PolyZonotope pz_box(const IntervalMatrix& z);

PolyZonotope pz_sum(const PolyZonotope& a, const PolyZonotope& b);
PolyZonotope pz_scale(double s, const PolyZonotope& p);
// Real matrix times PZ (left) or PZ times real matrix (right).
PolyZonotope pz_linear_map(const Eigen::MatrixXd& M, const PolyZonotope& p);
PolyZonotope pz_right_map(const PolyZonotope& p, const Eigen::MatrixXd& M);
// Scalar PZ times real matrix, result has the matrix shape.
PolyZonotope pz_outer(const PolyZonotope& s, const Eigen::MatrixXd& M);
PolyZonotope pz_add_constant(const PolyZonotope& p, const Eigen::MatrixXd& c);

// Matrix product; a 1x1 operand broadcasts as a scalar. reduce_to >= 0 applies pz_reduce
// before canonical ordering.
PolyZonotope pz_mul(const PolyZonotope& a, const PolyZonotope& b, int reduce_to = -1);
PolyZonotope pz_pow(const PolyZonotope& p, int m, int reduce_to = -1);
PolyZonotope pz_skew(const PolyZonotope& a);
PolyZonotope pz_cross(const PolyZonotope& a, const PolyZonotope& b, int reduce_to = -1);
// Stack scalars or column PZs vertically.
PolyZonotope pz_vstack(const std::vector<PolyZonotope>& parts);

PolyZonotope operator+(const PolyZonotope& a, const PolyZonotope& b);
PolyZonotope operator-(const PolyZonotope& a, const PolyZonotope& b);
PolyZonotope operator-(const PolyZonotope& a);
PolyZonotope operator*(double s, const PolyZonotope& p);
PolyZonotope operator*(const PolyZonotope& a, const PolyZonotope& b);

PolyZonotope pz_slice(const PolyZonotope& p, const std::map<IndeterminateId, double>& assignment);
// Slice param(j) = k[j] for every j.
PolyZonotope pz_slice_k(const PolyZonotope& p, const Eigen::VectorXd& k);

// tight = true treats all-even monomials as ranging over [0, 1].
PzBounds pz_bounds(const PolyZonotope& p, bool tight = false);
IntervalMatrix pz_interval(const PolyZonotope& p, bool tight = false);

struct PzReduceOptions {
    // Param-involving generators smaller than this fraction of the largest generator lose
    // their priority and are ranked with the rest.
    double param_floor = 1e-9;
};

PolyZonotope pz_reduce(const PolyZonotope& p, int max_generators, const PzReduceOptions& opts = {});

// f and its derivatives, pointwise and over intervals.
struct AnalyticFunction {
    std::function<double(int order, double x)> derivative;
    std::function<Interval(int order, const Interval& x)> derivative_range;

    static AnalyticFunction sin();
    static AnalyticFunction cos();
};

struct TaylorOptions {
    int degree = 6;
    int reduce_to = 100;
};

PolyZonotope pz_taylor(const AnalyticFunction& f, const PolyZonotope& p, const TaylorOptions& opts = {});

// Bounds of pz_slice_k(P, k) as functions of k, compiled for repeated evaluation.
//
// For each row: sup/inf = c(k) +/- (sum_g |p_g(k)| + rad) where c and p_g are polynomials in k;
// the p_g group generators by their non-param exponent.
class SlicedBounds {
public:
    SlicedBounds() = default;
    SlicedBounds(const PolyZonotope& p, int n_k);

    int rows() const { return static_cast<int>(rows_.size()); }
    int n_k() const { return n_k_; }

    // sup if upper, inf otherwise; grad (optional) receives the (sub)gradient.
    double bound(int row, bool upper, const Eigen::VectorXd& k, Eigen::VectorXd* grad = nullptr) const;
    double sup(int row, const Eigen::VectorXd& k, Eigen::VectorXd* grad = nullptr) const
    {
        return bound(row, true, k, grad);
    }
    double inf(int row, const Eigen::VectorXd& k, Eigen::VectorXd* grad = nullptr) const
    {
        return bound(row, false, k, grad);
    }
    // k-independent outer bounds (all |k_j| <= 1).
    double max_sup(int row) const;
    double min_inf(int row) const;

private:
    struct Row {
        int center_begin = 0, center_end = 0;
        std::vector<int> group_ends;  // groups follow the center terms contiguously
        double rad = 0.0;
        double center0 = 0.0;
    };

    double poly(int begin, int end, const std::vector<double>& pw, Eigen::VectorXd* grad, double sign) const;
    void powers(const Eigen::VectorXd& k, std::vector<double>& pw) const;

    int n_k_ = 0;
    int max_deg_ = 0;
    std::vector<double> coef_;
    std::vector<std::uint8_t> kexp_;  // n_k_ bytes per term
    std::vector<Row> rows_;
};

enum class BoundSide { sup, inf };

// Replace every non-param exponent pattern by a single fresh degree-1 indeterminate.
PolyZonotope pz_make_k_independent(const PolyZonotope& p, int n_k);
// Gradient of sup/inf of pz_slice_k(P, k) for a preprocessed scalar PZ.
Eigen::VectorXd pz_grad_k(const PolyZonotope& p, BoundSide which, const Eigen::VectorXd& k);

// Canonical JSON text: shape, center, generators, exponents, id names, box.
std::string pz_to_json(const PolyZonotope& p);

} // namespace armour
