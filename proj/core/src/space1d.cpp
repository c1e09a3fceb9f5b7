#include "evoconv/space1d.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <sstream>

namespace evoconv {

SpaceGrid::SpaceGrid(std::size_t cells) : cells_(cells), h_(1.0 / static_cast<double>(cells)) {
    if (cells < 4) throw PreconditionError("SpaceGrid: at least 4 cells are required");
}

FieldLayout FieldLayout::staggered(const SpaceGrid& grid) {
    FieldLayout l;
    Block u{"u", 0, grid.interior_nodes(), {}};
    for (std::size_t j = 0; j < u.size; ++j) u.positions.push_back(grid.node(j));
    Block v{"v", u.size, grid.cells(), {}};
    for (std::size_t i = 0; i < v.size; ++i) v.positions.push_back(grid.cell(i));
    l.width_ = u.size + v.size;
    l.measure_ = grid.h();
    l.blocks_ = {std::move(u), std::move(v)};
    return l;
}

FieldLayout FieldLayout::nodes(const SpaceGrid& grid) {
    FieldLayout l;
    Block u{"u", 0, grid.interior_nodes(), {}};
    for (std::size_t j = 0; j < u.size; ++j) u.positions.push_back(grid.node(j));
    l.width_ = u.size;
    l.measure_ = grid.h();
    l.blocks_ = {std::move(u)};
    return l;
}

FieldLayout FieldLayout::cells(const SpaceGrid& grid) {
    FieldLayout l;
    Block v{"v", 0, grid.cells(), {}};
    for (std::size_t i = 0; i < v.size; ++i) v.positions.push_back(grid.cell(i));
    l.width_ = v.size;
    l.measure_ = grid.h();
    l.blocks_ = {std::move(v)};
    return l;
}

FieldLayout FieldLayout::scalar() {
    FieldLayout l;
    l.width_ = 1;
    l.measure_ = 1.0;
    l.blocks_ = {Block{"s", 0, 1, {0.5}}};
    return l;
}

const Block& FieldLayout::block(const std::string& name) const {
    for (const auto& b : blocks_)
        if (b.name == name) return b;
    throw PreconditionError("FieldLayout: no block named '" + name + "'");
}

bool FieldLayout::has_block(const std::string& name) const {
    return std::any_of(blocks_.begin(), blocks_.end(), [&](const Block& b) { return b.name == name; });
}

BlockOperatorA::BlockOperatorA(const SpaceGrid& grid) : grid_(grid) {
    const std::size_t N = grid.cells();
    const std::size_t M = grid.interior_nodes();
    const double inv_h = static_cast<double>(N);
    std::vector<Eigen::Triplet<double>> tri;
    // cells <- nodes: cell i sits between nodes i and i+1 (node index j stores node j+1)
    for (std::size_t i = 0; i < N; ++i) {
        if (i < M) tri.emplace_back(i, i, inv_h);
        if (i >= 1) tri.emplace_back(i, i - 1, -inv_h);
    }
    d1_dirichlet_.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(M));
    d1_dirichlet_.setFromTriplets(tri.begin(), tri.end());
    d1_max_ = -Eigen::SparseMatrix<double>(d1_dirichlet_.transpose());

    band_order_.resize(M + N);
    for (std::size_t i = 0; i < N; ++i) band_order_[2 * i] = M + i;
    for (std::size_t j = 0; j < M; ++j) band_order_[2 * j + 1] = j;
}

void BlockOperatorA::apply(std::span<const cplx> w, std::span<cplx> out) const {
    const std::size_t N = grid_.cells();
    const std::size_t M = grid_.interior_nodes();
    const double inv_h = static_cast<double>(N);
    const cplx* u = w.data();
    const cplx* v = w.data() + M;
    for (std::size_t j = 0; j < M; ++j) out[j] = (v[j + 1] - v[j]) * inv_h;
    for (std::size_t i = 0; i < N; ++i) {
        const cplx right = i < M ? u[i] : cplx(0.0);
        const cplx left = i >= 1 ? u[i - 1] : cplx(0.0);
        out[M + i] = (right - left) * inv_h;
    }
}

BandedMatrix BlockOperatorA::shifted_band(cplx lambda) const {
    return SpatialOperator::block(*this).band_with_diagonal(std::vector<cplx>(width(), lambda));
}

std::shared_ptr<const BandedLU> BlockOperatorA::factorization(cplx lambda) const {
    const CacheKey key{lambda.real(), lambda.imag()};
    {
        std::shared_lock lock(cache_->mutex);
        auto it = cache_->entries.find(key);
        if (it != cache_->entries.end()) return it->second;
    }
    auto lu = std::make_shared<const BandedLU>(shifted_band(lambda));
    std::unique_lock lock(cache_->mutex);
    return cache_->entries.emplace(key, std::move(lu)).first->second;
}

BlockOperatorA assemble_block_A(const SpaceGrid& grid) { return BlockOperatorA(grid); }

std::vector<cplx> resolvent_A(const BlockOperatorA& A, cplx lambda, std::span<const cplx> rhs) {
    if (!(lambda.real() > 0.0)) throw PreconditionError("resolvent_A: Re(lambda) must be positive");
    if (rhs.size() != A.width()) throw PreconditionError("resolvent_A: right-hand side has the wrong size");
    auto lu = A.factorization(lambda);
    if (lu->singular() || lu->min_pivot() <= 1e-14 * lu->max_pivot())
        throw Error("resolvent_A: singular factorization");
    const auto& order = A.band_order();
    std::vector<cplx> b(rhs.size());
    for (std::size_t r = 0; r < order.size(); ++r) b[r] = rhs[order[r]];
    lu->solve(b);
    std::vector<cplx> out(rhs.size());
    for (std::size_t r = 0; r < order.size(); ++r) out[order[r]] = b[r];
    return out;
}

std::vector<cplx> project_out_mean(std::span<const cplx> g) {
    std::vector<cplx> out(g.begin(), g.end());
    if (out.empty()) return out;
    const cplx mean = std::accumulate(out.begin(), out.end(), cplx(0.0)) / static_cast<double>(out.size());
    for (auto& x : out) x -= mean;
    return out;
}

SpatialOperator::SpatialOperator(Eigen::SparseMatrix<cplx, Eigen::RowMajor> m, std::vector<std::size_t> order,
                                 std::size_t bandwidth)
    : matrix_(std::move(m)), order_(std::move(order)), bandwidth_(bandwidth) {
    matrix_.makeCompressed();
}

SpatialOperator SpatialOperator::block(const BlockOperatorA& A, double sign) {
    const auto M = static_cast<Eigen::Index>(A.grid().interior_nodes());
    const auto W = static_cast<Eigen::Index>(A.width());
    std::vector<Eigen::Triplet<cplx>> tri;
    for (Eigen::Index k = 0; k < A.d1_max().outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(A.d1_max(), k); it; ++it)
            tri.emplace_back(it.row(), M + it.col(), sign * it.value());
    for (Eigen::Index k = 0; k < A.d1_dirichlet().outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(A.d1_dirichlet(), k); it; ++it)
            tri.emplace_back(M + it.row(), it.col(), sign * it.value());
    Eigen::SparseMatrix<cplx, Eigen::RowMajor> m(W, W);
    m.setFromTriplets(tri.begin(), tri.end());
    return SpatialOperator(std::move(m), A.band_order(), 1);
}

SpatialOperator SpatialOperator::scalar(std::size_t width, cplx value) {
    Eigen::SparseMatrix<cplx, Eigen::RowMajor> m(static_cast<Eigen::Index>(width), static_cast<Eigen::Index>(width));
    if (value != cplx(0.0)) {
        std::vector<Eigen::Triplet<cplx>> tri;
        for (std::size_t i = 0; i < width; ++i) tri.emplace_back(i, i, value);
        m.setFromTriplets(tri.begin(), tri.end());
    }
    std::vector<std::size_t> order(width);
    std::iota(order.begin(), order.end(), 0);
    return SpatialOperator(std::move(m), std::move(order), 0);
}

SpatialOperator SpatialOperator::dirichlet_laplacian(const SpaceGrid& grid, double lambda) {
    BlockOperatorA A(grid);
    Eigen::SparseMatrix<double> lap = -(A.d1_max() * A.d1_dirichlet());
    const auto M = static_cast<Eigen::Index>(grid.interior_nodes());
    Eigen::SparseMatrix<cplx, Eigen::RowMajor> m(M, M);
    std::vector<Eigen::Triplet<cplx>> tri;
    for (Eigen::Index k = 0; k < lap.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(lap, k); it; ++it)
            tri.emplace_back(it.row(), it.col(), it.value());
    for (Eigen::Index i = 0; i < M; ++i) tri.emplace_back(i, i, -lambda);
    m.setFromTriplets(tri.begin(), tri.end());
    std::vector<std::size_t> order(static_cast<std::size_t>(M));
    std::iota(order.begin(), order.end(), 0);
    return SpatialOperator(std::move(m), std::move(order), 1);
}

void SpatialOperator::apply(std::span<const cplx> w, std::span<cplx> out) const {
    for (Eigen::Index r = 0; r < matrix_.outerSize(); ++r) {
        cplx s = 0.0;
        for (Eigen::SparseMatrix<cplx, Eigen::RowMajor>::InnerIterator it(matrix_, r); it; ++it)
            s += it.value() * w[static_cast<std::size_t>(it.col())];
        out[static_cast<std::size_t>(r)] = s;
    }
}

TimeSignal SpatialOperator::apply(const TimeSignal& u) const {
    if (u.width() != width()) throw PreconditionError("SpatialOperator::apply: width mismatch");
    TimeSignal out = u.zeros_like();
    for (std::size_t k = 0; k < u.steps(); ++k) apply(u.row(k), out.row(k));
    return out;
}

BandedMatrix SpatialOperator::band_with_diagonal(std::span<const cplx> d) const {
    const std::size_t n = width();
    std::vector<std::size_t> inverse(n);
    for (std::size_t r = 0; r < n; ++r) inverse[order_[r]] = r;
    BandedMatrix b(n, bandwidth_, bandwidth_);
    for (std::size_t r = 0; r < n; ++r) {
        const std::size_t s = order_[r];
        b.at(r, r) += d[s];
        for (Eigen::SparseMatrix<cplx, Eigen::RowMajor>::InnerIterator it(matrix_, static_cast<Eigen::Index>(s)); it;
             ++it)
            b.at(r, inverse[static_cast<std::size_t>(it.col())]) += it.value();
    }
    return b;
}

std::function<double(double)> oscillated(std::function<double(double)> g, double n) {
    return [g = std::move(g), n](double x) {
        const double y = n * x;
        return g(y - std::floor(y));
    };
}

std::function<double(double)> two_phase(double left, double right, double split) {
    return [=](double x) { return x < split ? left : right; };
}

std::function<double(double)> indicator(std::vector<std::pair<double, double>> intervals) {
    return [iv = std::move(intervals)](double x) {
        for (const auto& [a, b] : iv)
            if ((a <= x && x < b) || (x == b && b == 1.0)) return 1.0;
        return 0.0;
    };
}

std::vector<double> sample_cells(const SpaceGrid& grid, const std::function<double(double)>& g) {
    std::vector<double> out(grid.cells());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = g(grid.cell(i));
    return out;
}

std::vector<double> sample_nodes(const SpaceGrid& grid, const std::function<double(double)>& g) {
    std::vector<double> out(grid.interior_nodes());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = 0.5 * (g(grid.cell(j)) + g(grid.cell(j + 1)));
    return out;
}

}  // namespace evoconv
