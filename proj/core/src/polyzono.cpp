#include "armour/polyzono.hpp"
#include "armour/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

namespace armour {

std::string IndeterminateId::name() const
{
    static const char* prefix[] = {"t", "k", "ep", "ev", "v", "f"};
    return prefix[static_cast<int>(kind)] + std::to_string(index);
}

namespace {
std::atomic<std::uint32_t> g_fresh_counter{0};
}

IndeterminateId fresh_id()
{
    return {IdKind::fresh, g_fresh_counter.fetch_add(1, std::memory_order_relaxed)};
}

std::vector<IndeterminateId> fresh_ids(int n)
{
    const std::uint32_t first = g_fresh_counter.fetch_add(static_cast<std::uint32_t>(n));
    std::vector<IndeterminateId> out(n);
    for (int i = 0; i < n; ++i) out[i] = {IdKind::fresh, first + static_cast<std::uint32_t>(i)};
    return out;
}

namespace {

int stride_for(size_t n_ids) { return static_cast<int>((n_ids + 7) / 8 * 8); }

std::uint64_t load_word(const std::uint8_t* p)
{
    std::uint64_t w;
    std::memcpy(&w, p, 8);
    return w;
}

// Open-addressing map from exponent rows to dense indices.
class ExponentTable {
public:
    ExponentTable(int stride, size_t expected) : stride_(stride)
    {
        size_t cap = 16;
        while (cap < 2 * expected) cap <<= 1;
        slots_.assign(cap, -1);
        mask_ = cap - 1;
        keys_.reserve(expected * stride_);
    }

    int find_or_insert(const std::uint8_t* key, bool& inserted)
    {
        if (2 * (count_ + 1) > slots_.size()) grow();
        size_t h = hash(key) & mask_;
        while (true) {
            const int s = slots_[h];
            if (s < 0) {
                slots_[h] = static_cast<int>(count_);
                keys_.insert(keys_.end(), key, key + stride_);
                inserted = true;
                return static_cast<int>(count_++);
            }
            if (std::memcmp(&keys_[size_t(s) * stride_], key, stride_) == 0) {
                inserted = false;
                return s;
            }
            h = (h + 1) & mask_;
        }
    }

    size_t size() const { return count_; }
    std::vector<std::uint8_t>& keys() { return keys_; }

private:
    std::uint64_t hash(const std::uint8_t* key) const
    {
        std::uint64_t h = 0x9E3779B97F4A7C15ull;
        for (int i = 0; i < stride_; i += 8) {
            h ^= load_word(key + i);
            h *= 0xff51afd7ed558ccdull;
            h ^= h >> 33;
        }
        h *= 0xc4ceb9fe1a85ec53ull;
        h ^= h >> 29;
        return h;
    }

    void grow()
    {
        const size_t cap = slots_.size() * 2;
        slots_.assign(cap, -1);
        mask_ = cap - 1;
        for (size_t s = 0; s < count_; ++s) {
            size_t h = hash(&keys_[s * stride_]) & mask_;
            while (slots_[h] >= 0) h = (h + 1) & mask_;
            slots_[h] = static_cast<int>(s);
        }
    }

    int stride_;
    size_t count_ = 0;
    size_t mask_ = 0;
    std::vector<int> slots_;
    std::vector<std::uint8_t> keys_;
};

bool all_zero(const std::uint8_t* row, int stride)
{
    for (int i = 0; i < stride; i += 8)
        if (load_word(row + i) != 0) return false;
    return true;
}

// Raw generator data in some id layout; finalize() turns it into a canonical PolyZonotope.
struct RawPz {
    int rows = 1, cols = 1;
    Eigen::VectorXd center;
    std::vector<double> gens;  // n * dim, generator-major
    std::vector<IndeterminateId> ids;
    int stride = 0;
    std::vector<std::uint8_t> exps;  // n * stride
    Eigen::VectorXd box;

    int dim() const { return rows * cols; }
    size_t count() const { return dim() == 0 ? 0 : gens.size() / dim(); }
};

std::vector<IndeterminateId> union_ids(const std::vector<IndeterminateId>& a,
                                       const std::vector<IndeterminateId>& b)
{
    std::vector<IndeterminateId> out;
    out.reserve(a.size() + b.size());
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

} // namespace

struct PzAccess {
    static const std::vector<std::uint8_t>& exps(const PolyZonotope& p) { return p.exps_; }
    static int stride(const PolyZonotope& p) { return p.stride_; }

    // Exponent rows of p laid out over the (superset) id list `ids`.
    static std::vector<std::uint8_t> remap(const PolyZonotope& p, const std::vector<IndeterminateId>& ids,
                                           int stride)
    {
        const int n = p.n_generators();
        std::vector<std::uint8_t> out(size_t(n) * stride, 0);
        if (p.ids_ == ids && p.stride_ == stride) {
            std::copy(p.exps_.begin(), p.exps_.end(), out.begin());
            return out;
        }
        std::vector<int> pos(p.ids_.size());
        for (size_t i = 0, j = 0; i < p.ids_.size(); ++i) {
            while (ids[j] != p.ids_[i]) ++j;
            pos[i] = static_cast<int>(j);
        }
        for (int g = 0; g < n; ++g)
            for (size_t i = 0; i < p.ids_.size(); ++i)
                out[size_t(g) * stride + pos[i]] = p.exps_[size_t(g) * p.stride_ + i];
        return out;
    }

    static RawPz raw(const PolyZonotope& p)
    {
        RawPz r;
        r.rows = p.rows_;
        r.cols = p.cols_;
        r.center = p.center_;
        r.gens.assign(p.gens_.data(), p.gens_.data() + p.gens_.size());
        r.ids = p.ids_;
        r.stride = p.stride_;
        r.exps = p.exps_;
        r.box = p.box_;
        return r;
    }

    static void select_and_box(RawPz& r, int max_generators, const PzReduceOptions& opts);

    // merged: exponent rows are already unique (and the zero row, if any, is absent).
    static PolyZonotope finalize(RawPz r, bool merged, int reduce_to = -1,
                                 const PzReduceOptions& opts = {});
};

void PzAccess::select_and_box(RawPz& r, int max_generators, const PzReduceOptions& opts)
{
    const int dim = r.dim();
    const size_t n = r.count();
    if (max_generators < 0 || n <= size_t(max_generators)) return;

    std::vector<double> norm(n);
    std::vector<char> is_param(n, 0);
    std::vector<int> param_pos;
    for (size_t i = 0; i < r.ids.size(); ++i)
        if (r.ids[i].kind == IdKind::param) param_pos.push_back(static_cast<int>(i));
    double max_norm = 0.0;
    for (size_t g = 0; g < n; ++g) {
        double m = 0.0;
        for (int d = 0; d < dim; ++d) m = std::max(m, std::abs(r.gens[g * dim + d]));
        norm[g] = m;
        max_norm = std::max(max_norm, m);
        for (int p : param_pos)
            if (r.exps[g * r.stride + p] != 0) is_param[g] = 1;
    }
    const double floor = opts.param_floor * max_norm;
    for (size_t g = 0; g < n; ++g)
        if (is_param[g] && norm[g] < floor) is_param[g] = 0;

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    const int stride = r.stride;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (is_param[a] != is_param[b]) return is_param[a] > is_param[b];
        if (norm[a] != norm[b]) return norm[a] > norm[b];
        return std::memcmp(&r.exps[size_t(a) * stride], &r.exps[size_t(b) * stride], stride) < 0;
    });

    std::vector<double> gens;
    std::vector<std::uint8_t> exps;
    gens.reserve(size_t(max_generators) * dim);
    exps.reserve(size_t(max_generators) * stride);
    if (r.box.size() != dim) r.box = Eigen::VectorXd::Zero(dim);
    for (size_t rank = 0; rank < n; ++rank) {
        const int g = order[rank];
        if (rank < size_t(max_generators)) {
            gens.insert(gens.end(), r.gens.begin() + size_t(g) * dim, r.gens.begin() + size_t(g + 1) * dim);
            exps.insert(exps.end(), r.exps.begin() + size_t(g) * stride, r.exps.begin() + size_t(g + 1) * stride);
        } else {
            for (int d = 0; d < dim; ++d) r.box[d] += std::abs(r.gens[size_t(g) * dim + d]);
        }
    }
    r.gens = std::move(gens);
    r.exps = std::move(exps);
}

PolyZonotope PzAccess::finalize(RawPz r, bool merged, int reduce_to, const PzReduceOptions& opts)
{
    const int dim = r.dim();
    if (r.box.size() != dim) r.box = Eigen::VectorXd::Zero(dim);
    if (r.center.size() != dim) throw DimensionError("PZ center size does not match its shape");

    if (!merged) {
        const size_t n = r.count();
        ExponentTable table(r.stride, n);
        std::vector<double> acc;
        acc.reserve(n * dim);
        for (size_t g = 0; g < n; ++g) {
            const std::uint8_t* e = &r.exps[g * r.stride];
            const double* src = &r.gens[g * dim];
            if (all_zero(e, r.stride)) {
                for (int d = 0; d < dim; ++d) r.center[d] += src[d];
                continue;
            }
            bool inserted;
            const int idx = table.find_or_insert(e, inserted);
            if (inserted) acc.resize(acc.size() + dim, 0.0);
            for (int d = 0; d < dim; ++d) acc[size_t(idx) * dim + d] += src[d];
        }
        r.gens = std::move(acc);
        r.exps = std::move(table.keys());
    }

    // drop exact zero generators
    {
        const size_t n = r.count();
        size_t w = 0;
        for (size_t g = 0; g < n; ++g) {
            bool zero = true;
            for (int d = 0; d < dim && zero; ++d) zero = r.gens[g * dim + d] == 0.0;
            if (zero) continue;
            if (w != g) {
                std::copy_n(&r.gens[g * dim], dim, &r.gens[w * dim]);
                std::copy_n(&r.exps[g * r.stride], r.stride, &r.exps[w * r.stride]);
            }
            ++w;
        }
        r.gens.resize(w * dim);
        r.exps.resize(w * r.stride);
    }

    select_and_box(r, reduce_to, opts);

    const size_t n = r.count();
    std::vector<char> used(r.ids.size(), 0);
    for (size_t g = 0; g < n; ++g)
        for (size_t i = 0; i < r.ids.size(); ++i)
            if (r.exps[g * r.stride + i]) used[i] = 1;

    PolyZonotope out;
    out.rows_ = r.rows;
    out.cols_ = r.cols;
    out.center_ = r.center;
    out.box_ = r.box;
    std::vector<int> keep;
    for (size_t i = 0; i < r.ids.size(); ++i)
        if (used[i]) {
            keep.push_back(static_cast<int>(i));
            out.ids_.push_back(r.ids[i]);
        }
    out.stride_ = stride_for(out.ids_.size());
    const int stride = out.stride_;

    std::vector<std::uint8_t> compact(n * stride, 0);
    for (size_t g = 0; g < n; ++g)
        for (size_t i = 0; i < keep.size(); ++i) compact[g * stride + i] = r.exps[g * r.stride + keep[i]];

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return std::memcmp(&compact[size_t(a) * stride], &compact[size_t(b) * stride], stride) < 0;
    });

    out.gens_.resize(dim, static_cast<Eigen::Index>(n));
    out.exps_.assign(n * stride, 0);
    for (size_t c = 0; c < n; ++c) {
        const int g = order[c];
        for (int d = 0; d < dim; ++d) out.gens_(d, c) = r.gens[size_t(g) * dim + d];
        std::copy_n(&compact[size_t(g) * stride], stride, &out.exps_[c * stride]);
    }
    return out;
}

PolyZonotope::PolyZonotope(const Eigen::VectorXd& center, int rows, int cols)
    : rows_(rows < 0 ? static_cast<int>(center.size()) : rows),
      cols_(rows < 0 ? 1 : cols),
      center_(center),
      gens_(center.size(), 0),
      box_(Eigen::VectorXd::Zero(center.size()))
{
    if (rows_ * cols_ != center.size()) throw DimensionError("PZ shape does not match center size");
}

PolyZonotope::PolyZonotope(int rows, int cols, const Eigen::VectorXd& center, const Eigen::MatrixXd& generators,
                           const Eigen::MatrixXi& exponents, std::vector<IndeterminateId> ids,
                           const Eigen::VectorXd& box)
{
    const int dim = rows * cols;
    if (center.size() != dim) throw DimensionError("PZ center size does not match shape");
    if (generators.rows() != dim && generators.cols() > 0) throw DimensionError("PZ generator rows != dim");
    if (exponents.cols() != generators.cols() || exponents.rows() != static_cast<Eigen::Index>(ids.size()))
        throw DimensionError("PZ exponent matrix must be n_ids x n_generators");
    if (box.size() != 0 && box.size() != dim) throw DimensionError("PZ box size != dim");
    if ((exponents.array() < 0).any() || (exponents.array() > 255).any())
        throw RangeError("PZ exponents must lie in [0, 255]");

    std::vector<int> order(ids.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return ids[a] < ids[b]; });
    for (size_t i = 1; i < order.size(); ++i)
        if (ids[order[i]] == ids[order[i - 1]]) throw IdCollisionError("duplicate id " + ids[order[i]].name());

    RawPz r;
    r.rows = rows;
    r.cols = cols;
    r.center = center;
    r.box = box.size() ? box : Eigen::VectorXd::Zero(dim);
    if ((r.box.array() < 0).any()) throw RangeError("PZ box radii must be nonnegative");
    for (size_t i = 0; i < ids.size(); ++i) r.ids.push_back(ids[order[i]]);
    r.stride = stride_for(ids.size());
    const Eigen::Index n = generators.cols();
    r.gens.resize(size_t(n) * dim);
    r.exps.assign(size_t(n) * r.stride, 0);
    for (Eigen::Index g = 0; g < n; ++g) {
        for (int d = 0; d < dim; ++d) r.gens[size_t(g) * dim + d] = generators(d, g);
        for (size_t i = 0; i < ids.size(); ++i)
            r.exps[size_t(g) * r.stride + i] = static_cast<std::uint8_t>(exponents(order[i], g));
    }
    *this = PzAccess::finalize(std::move(r), false);
}

PolyZonotope PolyZonotope::constant(const Eigen::MatrixXd& m)
{
    Eigen::VectorXd c(m.size());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) c[i * m.cols() + j] = m(i, j);
    return PolyZonotope(c, static_cast<int>(m.rows()), static_cast<int>(m.cols()));
}

PolyZonotope PolyZonotope::variable(IndeterminateId id, double c, double coef)
{
    Eigen::MatrixXi e(1, 1);
    e(0, 0) = 1;
    return PolyZonotope(1, 1, Eigen::VectorXd::Constant(1, c), Eigen::MatrixXd::Constant(1, 1, coef), e, {id});
}

Eigen::MatrixXd PolyZonotope::center_matrix() const
{
    Eigen::MatrixXd m(rows_, cols_);
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j) m(i, j) = center_[i * cols_ + j];
    return m;
}

Eigen::MatrixXi PolyZonotope::exponents() const
{
    Eigen::MatrixXi e(n_ids(), n_generators());
    for (int g = 0; g < n_generators(); ++g)
        for (int i = 0; i < n_ids(); ++i) e(i, g) = exponent(i, g);
    return e;
}

int PolyZonotope::exponent_of(const IndeterminateId& id, int generator) const
{
    auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
    if (it == ids_.end() || *it != id) return 0;
    return exponent(static_cast<int>(it - ids_.begin()), generator);
}

Eigen::VectorXd PolyZonotope::evaluate(const std::map<IndeterminateId, double>& x) const
{
    Eigen::VectorXd xv = Eigen::VectorXd::Zero(n_ids());
    for (int i = 0; i < n_ids(); ++i) {
        auto it = x.find(ids_[i]);
        if (it != x.end()) xv[i] = it->second;
    }
    return evaluate(xv);
}

Eigen::VectorXd PolyZonotope::evaluate(const Eigen::VectorXd& x) const
{
    if (x.size() != n_ids()) throw DimensionError("PZ evaluate: assignment size != n_ids");
    Eigen::VectorXd out = center_;
    for (int g = 0; g < n_generators(); ++g) {
        double m = 1.0;
        for (int i = 0; i < n_ids(); ++i) {
            const int e = exponent(i, g);
            if (e) m *= std::pow(x[i], e);
        }
        out += m * gens_.col(g);
    }
    return out;
}

namespace {

// Apply a linear map L (dim_out x dim_in) to every vector of the set.
PolyZonotope apply_linear(const PolyZonotope& p, const Eigen::MatrixXd& L, int rows, int cols)
{
    RawPz r = PzAccess::raw(p);
    const int dim_in = p.dim();
    const int dim_out = rows * cols;
    r.rows = rows;
    r.cols = cols;
    r.center = L * p.center();
    r.box = L.cwiseAbs() * p.box();
    Eigen::MatrixXd G = L * p.generators();
    r.gens.assign(G.data(), G.data() + G.size());
    (void)dim_in;
    (void)dim_out;
    return PzAccess::finalize(std::move(r), true);
}

Eigen::MatrixXd left_map_matrix(const Eigen::MatrixXd& M, int m, int l)
{
    // (n x m) * (m x l), row-major flattening
    const int n = static_cast<int>(M.rows());
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n * l, m * l);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < l; ++j)
            for (int k = 0; k < m; ++k) L(i * l + j, k * l + j) = M(i, k);
    return L;
}

} // namespace

PolyZonotope PolyZonotope::reshaped(int rows, int cols) const
{
    if (rows * cols != dim()) throw DimensionError("PZ reshape changes size");
    PolyZonotope out = *this;
    out.rows_ = rows;
    out.cols_ = cols;
    return out;
}

PolyZonotope PolyZonotope::transpose() const
{
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(dim(), dim());
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j) P(j * rows_ + i, i * cols_ + j) = 1.0;
    return apply_linear(*this, P, cols_, rows_);
}

PolyZonotope PolyZonotope::entry(int i, int j) const
{
    if (i < 0 || i >= rows_ || j < 0 || j >= cols_) throw RangeError("PZ entry index out of range");
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(1, dim());
    L(0, i * cols_ + j) = 1.0;
    return apply_linear(*this, L, 1, 1);
}

PolyZonotope PolyZonotope::with_box(const Eigen::VectorXd& extra) const
{
    if (extra.size() != dim()) throw DimensionError("PZ with_box: size mismatch");
    if ((extra.array() < 0).any()) throw RangeError("PZ box radii must be nonnegative");
    PolyZonotope out = *this;
    out.box_ += extra;
    return out;
}

PolyZonotope pz_from_interval(const IntervalMatrix& z, const std::vector<IndeterminateId>& ids)
{
    const int n = z.size();
    if (static_cast<int>(ids.size()) != n) throw DimensionError("pz_from_interval: need one id per entry");
    Eigen::VectorXd c(n);
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXi E = Eigen::MatrixXi::Identity(n, n);
    for (int i = 0; i < n; ++i) {
        c[i] = z[i].mid();
        G(i, i) = z[i].rad();
    }
    return PolyZonotope(z.rows(), z.cols(), c, G, E, ids);
}

PolyZonotope pz_box(const IntervalMatrix& z)
{
    Eigen::VectorXd c(z.size()), r(z.size());
    for (int i = 0; i < z.size(); ++i) {
        c[i] = z[i].mid();
        r[i] = z[i].rad();
    }
    PolyZonotope out(c, z.rows(), z.cols());
    return out.with_box(r);
}

PolyZonotope pz_sum(const PolyZonotope& a, const PolyZonotope& b)
{
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        std::ostringstream msg;
        msg << "pz_sum: shape " << a.rows() << "x" << a.cols() << " vs " << b.rows() << "x" << b.cols();
        throw DimensionError(msg.str());
    }
    RawPz r;
    r.rows = a.rows();
    r.cols = a.cols();
    r.center = a.center() + b.center();
    r.box = a.box() + b.box();
    r.ids = union_ids(a.ids(), b.ids());
    r.stride = stride_for(r.ids.size());
    r.exps = PzAccess::remap(a, r.ids, r.stride);
    auto eb = PzAccess::remap(b, r.ids, r.stride);
    r.exps.insert(r.exps.end(), eb.begin(), eb.end());
    r.gens.assign(a.generators().data(), a.generators().data() + a.generators().size());
    r.gens.insert(r.gens.end(), b.generators().data(), b.generators().data() + b.generators().size());
    return PzAccess::finalize(std::move(r), false);
}

PolyZonotope pz_scale(double s, const PolyZonotope& p)
{
    RawPz r = PzAccess::raw(p);
    r.center *= s;
    r.box *= std::abs(s);
    for (double& g : r.gens) g *= s;
    return PzAccess::finalize(std::move(r), true);
}

PolyZonotope pz_linear_map(const Eigen::MatrixXd& M, const PolyZonotope& p)
{
    if (M.cols() != p.rows()) throw DimensionError("pz_linear_map: shape mismatch");
    return apply_linear(p, left_map_matrix(M, p.rows(), p.cols()), static_cast<int>(M.rows()), p.cols());
}

PolyZonotope pz_right_map(const PolyZonotope& p, const Eigen::MatrixXd& M)
{
    if (M.rows() != p.cols()) throw DimensionError("pz_right_map: shape mismatch");
    const int n = p.rows(), m = p.cols(), l = static_cast<int>(M.cols());
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n * l, n * m);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < l; ++j)
            for (int k = 0; k < m; ++k) L(i * l + j, i * m + k) = M(k, j);
    return apply_linear(p, L, n, l);
}

PolyZonotope pz_outer(const PolyZonotope& s, const Eigen::MatrixXd& M)
{
    if (!s.is_scalar()) throw DimensionError("pz_outer: first operand must be scalar");
    Eigen::MatrixXd L(M.size(), 1);
    for (Eigen::Index i = 0; i < M.rows(); ++i)
        for (Eigen::Index j = 0; j < M.cols(); ++j) L(i * M.cols() + j, 0) = M(i, j);
    return apply_linear(s, L, static_cast<int>(M.rows()), static_cast<int>(M.cols()));
}

PolyZonotope pz_add_constant(const PolyZonotope& p, const Eigen::MatrixXd& c)
{
    if (c.rows() != p.rows() || c.cols() != p.cols()) throw DimensionError("pz_add_constant: shape mismatch");
    RawPz r = PzAccess::raw(p);
    for (int i = 0; i < p.rows(); ++i)
        for (int j = 0; j < p.cols(); ++j) r.center[i * p.cols() + j] += c(i, j);
    return PzAccess::finalize(std::move(r), true);
}

namespace {

enum class MulMode { matmul, scalar_left, scalar_right };

struct MulShape {
    MulMode mode;
    int n, m, l;  // matmul: (n x m)(m x l)
    int rows, cols;
};

MulShape mul_shape(const PolyZonotope& a, const PolyZonotope& b)
{
    if (a.cols() == b.rows()) return {MulMode::matmul, a.rows(), a.cols(), b.cols(), a.rows(), b.cols()};
    if (a.is_scalar()) return {MulMode::scalar_left, 0, 0, 0, b.rows(), b.cols()};
    if (b.is_scalar()) return {MulMode::scalar_right, 0, 0, 0, a.rows(), a.cols()};
    std::ostringstream msg;
    msg << "pz_mul: " << a.rows() << "x" << a.cols() << " times " << b.rows() << "x" << b.cols();
    throw DimensionError(msg.str());
}

inline void product_acc(const MulShape& s, const double* A, const double* B, double* out, int dim_out)
{
    switch (s.mode) {
    case MulMode::matmul:
        for (int i = 0; i < s.n; ++i)
            for (int k = 0; k < s.m; ++k) {
                const double aik = A[i * s.m + k];
                if (aik == 0.0) continue;
                const double* brow = B + k * s.l;
                double* orow = out + i * s.l;
                for (int j = 0; j < s.l; ++j) orow[j] += aik * brow[j];
            }
        break;
    case MulMode::scalar_left:
        for (int t = 0; t < dim_out; ++t) out[t] += A[0] * B[t];
        break;
    case MulMode::scalar_right:
        for (int t = 0; t < dim_out; ++t) out[t] += A[t] * B[0];
        break;
    }
}

Eigen::VectorXd abs_bound(const PolyZonotope& p)
{
    Eigen::VectorXd m = p.center().cwiseAbs();
    if (p.n_generators()) m += p.generators().cwiseAbs().rowwise().sum();
    return m;
}

} // namespace

PolyZonotope pz_mul(const PolyZonotope& a, const PolyZonotope& b, int reduce_to)
{
    const MulShape s = mul_shape(a, b);
    const int dim_out = s.rows * s.cols;
    const int dim_a = a.dim(), dim_b = b.dim();

    RawPz r;
    r.rows = s.rows;
    r.cols = s.cols;
    r.ids = union_ids(a.ids(), b.ids());
    r.stride = stride_for(r.ids.size());
    const int stride = r.stride;

    // Term lists with the center as term 0 (zero exponent).
    const int na = a.n_generators() + 1, nb = b.n_generators() + 1;
    std::vector<std::uint8_t> ea(size_t(na) * stride, 0), eb(size_t(nb) * stride, 0);
    {
        auto ra = PzAccess::remap(a, r.ids, stride);
        auto rb = PzAccess::remap(b, r.ids, stride);
        std::copy(ra.begin(), ra.end(), ea.begin() + stride);
        std::copy(rb.begin(), rb.end(), eb.begin() + stride);
    }
    std::vector<double> ta(size_t(na) * dim_a), tb(size_t(nb) * dim_b);
    std::copy_n(a.center().data(), dim_a, ta.begin());
    std::copy_n(a.generators().data(), a.generators().size(), ta.begin() + dim_a);
    std::copy_n(b.center().data(), dim_b, tb.begin());
    std::copy_n(b.generators().data(), b.generators().size(), tb.begin() + dim_b);

    std::vector<int> maxa(na, 0), maxb(nb, 0);
    for (int i = 0; i < na; ++i)
        for (int k = 0; k < stride; ++k) maxa[i] = std::max<int>(maxa[i], ea[size_t(i) * stride + k]);
    for (int j = 0; j < nb; ++j)
        for (int k = 0; k < stride; ++k) maxb[j] = std::max<int>(maxb[j], eb[size_t(j) * stride + k]);

    ExponentTable table(stride, std::min<size_t>(size_t(na) * nb, 1 << 16));
    std::vector<double> acc;
    acc.reserve(size_t(std::min(na * nb, 1 << 14)) * dim_out);
    std::vector<std::uint8_t> key(stride);
    Eigen::VectorXd overflow_box = Eigen::VectorXd::Zero(dim_out);
    std::vector<double> scratch(dim_out);

    for (int i = 0; i < na; ++i) {
        const std::uint8_t* xa = &ea[size_t(i) * stride];
        const double* A = &ta[size_t(i) * dim_a];
        for (int j = 0; j < nb; ++j) {
            const std::uint8_t* xb = &eb[size_t(j) * stride];
            const double* B = &tb[size_t(j) * dim_b];
            bool overflow = false;
            if (maxa[i] + maxb[j] > 255) {
                for (int k = 0; k < stride && !overflow; ++k) overflow = int(xa[k]) + int(xb[k]) > 255;
            }
            if (overflow) {
                std::fill(scratch.begin(), scratch.end(), 0.0);
                product_acc(s, A, B, scratch.data(), dim_out);
                for (int d = 0; d < dim_out; ++d) overflow_box[d] += std::abs(scratch[d]);
                continue;
            }
            for (int k = 0; k < stride; ++k) key[k] = static_cast<std::uint8_t>(xa[k] + xb[k]);
            bool inserted;
            const int idx = table.find_or_insert(key.data(), inserted);
            if (inserted) acc.resize(acc.size() + dim_out, 0.0);
            product_acc(s, A, B, &acc[size_t(idx) * dim_out], dim_out);
        }
    }

    // Term 0 is the (center, center) product with zero exponent.
    r.center = Eigen::Map<const Eigen::VectorXd>(acc.data(), dim_out);
    r.gens.assign(acc.begin() + dim_out, acc.end());
    auto& keys = table.keys();
    r.exps.assign(keys.begin() + stride, keys.end());

    // Box terms: |Da| rb + ra |Db| + ra rb.
    Eigen::VectorXd box = overflow_box;
    if (a.has_box() || b.has_box()) {
        const Eigen::VectorXd da = abs_bound(a), db = abs_bound(b);
        const Eigen::VectorXd& ra = a.box();
        const Eigen::VectorXd& rb = b.box();
        std::vector<double> tmp(dim_out, 0.0);
        product_acc(s, da.data(), rb.data(), tmp.data(), dim_out);
        product_acc(s, ra.data(), db.data(), tmp.data(), dim_out);
        product_acc(s, ra.data(), rb.data(), tmp.data(), dim_out);
        for (int d = 0; d < dim_out; ++d) box[d] += tmp[d];
    }
    r.box = box;
    return PzAccess::finalize(std::move(r), true, reduce_to);
}

PolyZonotope pz_pow(const PolyZonotope& p, int m, int reduce_to)
{
    if (m < 0) throw RangeError("pz_pow: negative exponent");
    if (p.rows() != p.cols()) throw DimensionError("pz_pow: square PZ required");
    if (m == 0) return PolyZonotope::constant(Eigen::MatrixXd::Identity(p.rows(), p.cols()));
    PolyZonotope out = p;
    for (int i = 1; i < m; ++i) out = pz_mul(out, p, reduce_to);
    return out;
}

PolyZonotope pz_skew(const PolyZonotope& a)
{
    if (a.dim() != 3 || a.cols() != 1) throw DimensionError("pz_skew expects a 3-vector");
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(9, 3);
    L(1, 2) = -1.0;
    L(2, 1) = 1.0;
    L(3, 2) = 1.0;
    L(5, 0) = -1.0;
    L(6, 1) = -1.0;
    L(7, 0) = 1.0;
    return apply_linear(a, L, 3, 3);
}

PolyZonotope pz_cross(const PolyZonotope& a, const PolyZonotope& b, int reduce_to)
{
    if (b.dim() != 3 || b.cols() != 1) throw DimensionError("pz_cross expects 3-vectors");
    return pz_mul(pz_skew(a), b, reduce_to);
}

PolyZonotope pz_vstack(const std::vector<PolyZonotope>& parts)
{
    if (parts.empty()) throw DimensionError("pz_vstack: nothing to stack");
    RawPz r;
    int rows = 0;
    for (const auto& p : parts) {
        if (p.cols() != 1) throw DimensionError("pz_vstack: parts must be columns");
        rows += p.rows();
        r.ids = union_ids(r.ids, p.ids());
    }
    r.rows = rows;
    r.cols = 1;
    r.stride = stride_for(r.ids.size());
    r.center.resize(rows);
    r.box.resize(rows);
    int off = 0;
    for (const auto& p : parts) {
        r.center.segment(off, p.rows()) = p.center();
        r.box.segment(off, p.rows()) = p.box();
        auto e = PzAccess::remap(p, r.ids, r.stride);
        r.exps.insert(r.exps.end(), e.begin(), e.end());
        for (int g = 0; g < p.n_generators(); ++g) {
            const size_t base = r.gens.size();
            r.gens.resize(base + rows, 0.0);
            for (int d = 0; d < p.rows(); ++d) r.gens[base + off + d] = p.generators()(d, g);
        }
        off += p.rows();
    }
    return PzAccess::finalize(std::move(r), false);
}

PolyZonotope operator+(const PolyZonotope& a, const PolyZonotope& b) { return pz_sum(a, b); }
PolyZonotope operator-(const PolyZonotope& a, const PolyZonotope& b) { return pz_sum(a, pz_scale(-1.0, b)); }
PolyZonotope operator-(const PolyZonotope& a) { return pz_scale(-1.0, a); }
PolyZonotope operator*(double s, const PolyZonotope& p) { return pz_scale(s, p); }
PolyZonotope operator*(const PolyZonotope& a, const PolyZonotope& b) { return pz_mul(a, b); }

PolyZonotope pz_slice(const PolyZonotope& p, const std::map<IndeterminateId, double>& assignment)
{
    std::vector<int> pos;
    std::vector<double> val;
    for (const auto& [id, sigma] : assignment) {
        if (!(std::abs(sigma) <= 1.0)) {
            std::ostringstream msg;
            msg << "pz_slice: value " << sigma << " for " << id.name() << " outside [-1, 1]";
            throw RangeError(msg.str());
        }
        auto it = std::lower_bound(p.ids().begin(), p.ids().end(), id);
        if (it != p.ids().end() && *it == id) {
            pos.push_back(static_cast<int>(it - p.ids().begin()));
            val.push_back(sigma);
        }
    }
    RawPz r = PzAccess::raw(p);
    if (pos.empty()) return p;
    const int dim = p.dim();
    for (size_t g = 0; g < r.count(); ++g) {
        double f = 1.0;
        for (size_t q = 0; q < pos.size(); ++q) {
            std::uint8_t& e = r.exps[g * r.stride + pos[q]];
            if (e) f *= std::pow(val[q], e);
            e = 0;
        }
        if (f != 1.0)
            for (int d = 0; d < dim; ++d) r.gens[g * dim + d] *= f;
    }
    return PzAccess::finalize(std::move(r), false);
}

PolyZonotope pz_slice_k(const PolyZonotope& p, const Eigen::VectorXd& k)
{
    std::map<IndeterminateId, double> a;
    for (Eigen::Index j = 0; j < k.size(); ++j) a[IndeterminateId::param(static_cast<std::uint32_t>(j))] = k[j];
    return pz_slice(p, a);
}

PzBounds pz_bounds(const PolyZonotope& p, bool tight)
{
    Eigen::VectorXd c = p.center();
    Eigen::VectorXd rad = p.box();
    for (int g = 0; g < p.n_generators(); ++g) {
        bool even = tight;
        for (int i = 0; i < p.n_ids() && even; ++i) even = p.exponent(i, g) % 2 == 0;
        if (even) {
            c += 0.5 * p.generators().col(g);
            rad += 0.5 * p.generators().col(g).cwiseAbs();
        } else {
            rad += p.generators().col(g).cwiseAbs();
        }
    }
    return {c - rad, c + rad};
}

IntervalMatrix pz_interval(const PolyZonotope& p, bool tight)
{
    const PzBounds b = pz_bounds(p, tight);
    IntervalMatrix out(p.rows(), p.cols());
    for (int i = 0; i < p.dim(); ++i) out[i] = Interval(b.inf[i], b.sup[i]);
    return out;
}

PolyZonotope pz_reduce(const PolyZonotope& p, int max_generators, const PzReduceOptions& opts)
{
    if (max_generators < 0) throw RangeError("pz_reduce: negative budget");
    if (p.n_generators() <= max_generators) return p;
    RawPz r = PzAccess::raw(p);
    return PzAccess::finalize(std::move(r), true, max_generators, opts);
}

AnalyticFunction AnalyticFunction::sin()
{
    return {[](int n, double x) {
                switch (n % 4) {
                case 0: return std::sin(x);
                case 1: return std::cos(x);
                case 2: return -std::sin(x);
                default: return -std::cos(x);
                }
            },
            [](int n, const Interval& x) {
                switch (n % 4) {
                case 0: return iv_sin(x);
                case 1: return iv_cos(x);
                case 2: return -iv_sin(x);
                default: return -iv_cos(x);
                }
            }};
}

AnalyticFunction AnalyticFunction::cos()
{
    return {[](int n, double x) {
                switch (n % 4) {
                case 0: return std::cos(x);
                case 1: return -std::sin(x);
                case 2: return -std::cos(x);
                default: return std::sin(x);
                }
            },
            [](int n, const Interval& x) {
                switch (n % 4) {
                case 0: return iv_cos(x);
                case 1: return -iv_sin(x);
                case 2: return -iv_cos(x);
                default: return iv_sin(x);
                }
            }};
}

PolyZonotope pz_taylor(const AnalyticFunction& f, const PolyZonotope& p, const TaylorOptions& opts)
{
    if (!p.is_scalar()) throw DimensionError("pz_taylor expects a scalar PZ");
    if (opts.degree < 1) throw RangeError("pz_taylor: degree must be >= 1");
    const double c = p.center()[0];
    const PolyZonotope dp = pz_add_constant(p, Eigen::MatrixXd::Constant(1, 1, -c));

    PolyZonotope out = PolyZonotope::scalar(f.derivative(0, c));
    PolyZonotope power = PolyZonotope::scalar(1.0);
    double factorial = 1.0;
    for (int n = 1; n <= opts.degree; ++n) {
        power = pz_mul(power, dp, opts.reduce_to);
        factorial *= n;
        const double coef = f.derivative(n, c) / factorial;
        if (coef != 0.0) out = out + pz_scale(coef, power);
    }
    power = pz_mul(power, dp, opts.reduce_to);
    factorial *= opts.degree + 1;

    const PzBounds dom = pz_bounds(p);
    const PzBounds pw = pz_bounds(power);
    const Interval rem = f.derivative_range(opts.degree + 1, Interval(dom.inf[0], dom.sup[0])) *
                         Interval(pw.inf[0], pw.sup[0]) * Interval(1.0 / factorial);
    if (!std::isfinite(rem.lo()) || !std::isfinite(rem.hi()))
        throw DivergenceError("pz_taylor: remainder interval is not finite");
    out = pz_add_constant(out, Eigen::MatrixXd::Constant(1, 1, rem.mid()));
    return out.with_box(Eigen::VectorXd::Constant(1, rem.rad()));
}

namespace {

// Split a generator's exponent row into its k part (first n_k params) and the rest.
void split_exponent(const PolyZonotope& p, int g, int n_k, std::vector<std::uint8_t>& kexp,
                    std::vector<std::uint8_t>& rest)
{
    kexp.assign(n_k, 0);
    rest.assign(p.n_ids(), 0);
    for (int i = 0; i < p.n_ids(); ++i) {
        const int e = p.exponent(i, g);
        if (!e) continue;
        const auto& id = p.ids()[i];
        if (id.kind == IdKind::param) {
            if (static_cast<int>(id.index) >= n_k) {
                std::ostringstream msg;
                msg << "param id " << id.name() << " outside k of size " << n_k;
                throw DimensionError(msg.str());
            }
            kexp[id.index] = static_cast<std::uint8_t>(e);
        } else {
            rest[i] = static_cast<std::uint8_t>(e);
        }
    }
}

} // namespace

SlicedBounds::SlicedBounds(const PolyZonotope& p, int n_k) : n_k_(n_k)
{
    std::vector<std::uint8_t> kexp, rest;
    const int n_g = p.n_generators();
    std::vector<std::vector<std::uint8_t>> kx(n_g), rx(n_g);
    for (int g = 0; g < n_g; ++g) {
        split_exponent(p, g, n_k, kexp, rest);
        kx[g] = kexp;
        rx[g] = rest;
        for (auto e : kexp) max_deg_ = std::max<int>(max_deg_, e);
    }
    const bool has_rest = std::any_of(rx.begin(), rx.end(), [](const auto& r) {
        return std::any_of(r.begin(), r.end(), [](auto e) { return e != 0; });
    });

    std::map<std::vector<std::uint8_t>, std::vector<int>> groups;
    std::vector<int> center_terms;
    for (int g = 0; g < n_g; ++g) {
        bool zero_rest = true;
        for (auto e : rx[g]) zero_rest = zero_rest && e == 0;
        if (zero_rest) center_terms.push_back(g);
        else groups[rx[g]].push_back(g);
    }
    (void)has_rest;

    rows_.resize(p.dim());
    for (int d = 0; d < p.dim(); ++d) {
        Row& row = rows_[d];
        row.center0 = p.center()[d];
        row.rad = p.box()[d];
        auto push = [&](int g) {
            const double c = p.generators()(d, g);
            if (c == 0.0) return false;
            coef_.push_back(c);
            kexp_.insert(kexp_.end(), kx[g].begin(), kx[g].end());
            return true;
        };
        row.center_begin = static_cast<int>(coef_.size());
        for (int g : center_terms) push(g);
        row.center_end = static_cast<int>(coef_.size());
        for (const auto& [pattern, members] : groups) {
            bool any = false;
            for (int g : members) any = push(g) || any;
            if (any) row.group_ends.push_back(static_cast<int>(coef_.size()));
        }
    }
}

void SlicedBounds::powers(const Eigen::VectorXd& k, std::vector<double>& pw) const
{
    if (k.size() != n_k_) throw DimensionError("SlicedBounds: k has the wrong size");
    const int w = max_deg_ + 1;
    pw.assign(size_t(n_k_) * w, 1.0);
    for (int j = 0; j < n_k_; ++j)
        for (int e = 1; e < w; ++e) pw[j * w + e] = pw[j * w + e - 1] * k[j];
}

double SlicedBounds::poly(int begin, int end, const std::vector<double>& pw, Eigen::VectorXd* grad,
                          double sign) const
{
    const int w = max_deg_ + 1;
    double value = 0.0;
    for (int t = begin; t < end; ++t) {
        const std::uint8_t* e = &kexp_[size_t(t) * n_k_];
        double m = coef_[t];
        for (int j = 0; j < n_k_; ++j) m *= pw[j * w + e[j]];
        value += m;
        if (!grad) continue;
        for (int j = 0; j < n_k_; ++j) {
            if (!e[j]) continue;
            double d = sign * coef_[t] * e[j] * pw[j * w + e[j] - 1];
            for (int l = 0; l < n_k_; ++l)
                if (l != j) d *= pw[l * w + e[l]];
            (*grad)[j] += d;
        }
    }
    return value;
}

double SlicedBounds::bound(int row, bool upper, const Eigen::VectorXd& k, Eigen::VectorXd* grad) const
{
    thread_local std::vector<double> pw;
    thread_local Eigen::VectorXd tmp;
    powers(k, pw);
    const Row& r = rows_.at(row);
    if (grad) grad->setZero(n_k_);
    const double c = r.center0 + poly(r.center_begin, r.center_end, pw, grad, 1.0);
    double rad = r.rad;
    int begin = r.center_end;
    for (int end : r.group_ends) {
        const double v = poly(begin, end, pw, nullptr, 1.0);
        rad += std::abs(v);
        if (grad && v != 0.0) {
            const double s = (v > 0 ? 1.0 : -1.0) * (upper ? 1.0 : -1.0);
            poly(begin, end, pw, grad, s);
        }
        begin = end;
    }
    return upper ? c + rad : c - rad;
}

double SlicedBounds::max_sup(int row) const
{
    const Row& r = rows_.at(row);
    double s = r.center0 + r.rad;
    const int end = r.group_ends.empty() ? r.center_end : r.group_ends.back();
    for (int t = r.center_begin; t < end; ++t) s += std::abs(coef_[t]);
    return s;
}

double SlicedBounds::min_inf(int row) const
{
    const Row& r = rows_.at(row);
    double s = r.center0 - r.rad;
    const int end = r.group_ends.empty() ? r.center_end : r.group_ends.back();
    for (int t = r.center_begin; t < end; ++t) s -= std::abs(coef_[t]);
    return s;
}

PolyZonotope pz_make_k_independent(const PolyZonotope& p, int n_k)
{
    std::vector<std::uint8_t> kexp, rest;
    std::map<std::vector<std::uint8_t>, int> pattern_index;
    std::vector<std::pair<std::vector<std::uint8_t>, int>> terms;  // (kexp, pattern or -1)
    for (int g = 0; g < p.n_generators(); ++g) {
        split_exponent(p, g, n_k, kexp, rest);
        int pat = -1;
        if (std::any_of(rest.begin(), rest.end(), [](auto e) { return e != 0; })) {
            auto [it, inserted] = pattern_index.emplace(rest, static_cast<int>(pattern_index.size()));
            pat = it->second;
        }
        terms.emplace_back(kexp, pat);
    }
    const auto fresh = fresh_ids(static_cast<int>(pattern_index.size()));
    std::vector<IndeterminateId> ids;
    for (int j = 0; j < n_k; ++j) ids.push_back(IndeterminateId::param(j));
    ids.insert(ids.end(), fresh.begin(), fresh.end());
    Eigen::MatrixXi E = Eigen::MatrixXi::Zero(static_cast<int>(ids.size()), p.n_generators());
    for (int g = 0; g < p.n_generators(); ++g) {
        for (int j = 0; j < n_k; ++j) E(j, g) = terms[g].first[j];
        if (terms[g].second >= 0) E(n_k + terms[g].second, g) = 1;
    }
    return PolyZonotope(p.rows(), p.cols(), p.center(), p.generators(), E, ids, p.box());
}

Eigen::VectorXd pz_grad_k(const PolyZonotope& p, BoundSide which, const Eigen::VectorXd& k)
{
    if (!p.is_scalar()) throw DimensionError("pz_grad_k expects a scalar PZ");
    for (int g = 0; g < p.n_generators(); ++g) {
        int non_param = 0;
        for (int i = 0; i < p.n_ids(); ++i) {
            const int e = p.exponent(i, g);
            if (!e || p.ids()[i].kind == IdKind::param) continue;
            non_param += e;
        }
        if (non_param > 1)
            throw StructureError("pz_grad_k: generator mixes non-param indeterminates; run pz_make_k_independent");
    }
    SlicedBounds sb(p, static_cast<int>(k.size()));
    Eigen::VectorXd grad;
    sb.bound(0, which == BoundSide::sup, k, &grad);
    return grad;
}

std::string pz_to_json(const PolyZonotope& p)
{
    nlohmann::ordered_json j;
    j["shape"] = {p.rows(), p.cols()};
    j["center"] = std::vector<double>(p.center().data(), p.center().data() + p.dim());
    std::vector<std::string> names;
    for (const auto& id : p.ids()) names.push_back(id.name());
    j["ids"] = names;
    auto gens = nlohmann::json::array();
    auto exps = nlohmann::json::array();
    for (int g = 0; g < p.n_generators(); ++g) {
        gens.push_back(std::vector<double>(p.generators().col(g).data(), p.generators().col(g).data() + p.dim()));
        std::vector<int> e(p.n_ids());
        for (int i = 0; i < p.n_ids(); ++i) e[i] = p.exponent(i, g);
        exps.push_back(e);
    }
    j["generators"] = gens;
    j["exponents"] = exps;
    j["box"] = std::vector<double>(p.box().data(), p.box().data() + p.dim());
    return j.dump();
}

} // namespace armour
