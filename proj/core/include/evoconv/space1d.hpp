#pragma once

#include <Eigen/Sparse>

#include <complex>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <shared_mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "evoconv/banded.hpp"
#include "evoconv/timeaxis.hpp"

namespace evoconv {

/// Uniform partition of (0,1) into N cells of width h = 1/N.
/// Staggered storage: N-1 interior nodes x_j = j h (j = 1..N-1) and N cell centres (i + 1/2) h.
/// Boundary node values are identically zero under the Dirichlet condition and are not stored.
class SpaceGrid {
public:
    explicit SpaceGrid(std::size_t cells);

    std::size_t cells() const noexcept { return cells_; }
    std::size_t interior_nodes() const noexcept { return cells_ - 1; }
    double h() const noexcept { return h_; }
    /// Position of the stored node with index j (j = 0..N-2), i.e. (j+1) h.
    double node(std::size_t j) const noexcept { return static_cast<double>(j + 1) * h_; }
    double cell(std::size_t i) const noexcept { return (static_cast<double>(i) + 0.5) * h_; }

    bool operator==(const SpaceGrid& other) const = default;

private:
    std::size_t cells_;
    double h_;
};

struct Block {
    std::string name;
    std::size_t offset;
    std::size_t size;
    std::vector<double> positions;
};

/// Arrangement of spatial unknowns inside one time step of a TimeSignal.
class FieldLayout {
public:
    /// u on interior nodes followed by v on cell centres (width 2N-1).
    static FieldLayout staggered(const SpaceGrid& grid);
    /// Interior nodes only (width N-1), e.g. for the Dirichlet Laplacian.
    static FieldLayout nodes(const SpaceGrid& grid);
    /// Independent points at the cell centres (width N).
    static FieldLayout cells(const SpaceGrid& grid);
    /// A single scalar unknown with unit measure.
    static FieldLayout scalar();

    std::size_t width() const noexcept { return width_; }
    double measure() const noexcept { return measure_; }
    const std::vector<Block>& blocks() const noexcept { return blocks_; }
    const Block& block(const std::string& name) const;
    bool has_block(const std::string& name) const;

    TimeSignal zeros(const TimeGrid& grid) const { return TimeSignal(grid, width_, measure_); }

private:
    std::vector<Block> blocks_;
    std::size_t width_ = 0;
    double measure_ = 1.0;
};

/// The staggered difference pair on (0,1):
/// d1_dirichlet maps nodes to cells, (u_{i+1} - u_i)/h with zero boundary values;
/// d1_max maps cells to interior nodes, (v_j - v_{j-1})/h. d1_dirichlet = -d1_max^T.
class BlockOperatorA {
public:
    explicit BlockOperatorA(const SpaceGrid& grid);

    const SpaceGrid& grid() const noexcept { return grid_; }
    const Eigen::SparseMatrix<double>& d1_max() const noexcept { return d1_max_; }
    const Eigen::SparseMatrix<double>& d1_dirichlet() const noexcept { return d1_dirichlet_; }
    std::size_t width() const noexcept { return 2 * grid_.cells() - 1; }

    /// [[0, d1_max], [d1_dirichlet, 0]] acting on (u, v).
    void apply(std::span<const cplx> w, std::span<cplx> out) const;
    /// (A + lambda) as a band matrix in the interleaved ordering v_0, u_1, v_1, ..., u_{N-1}, v_{N-1}.
    BandedMatrix shifted_band(cplx lambda) const;
    /// Permutation from the interleaved ordering back to storage: storage index of band row r.
    const std::vector<std::size_t>& band_order() const noexcept { return band_order_; }

    /// Cached factorization of A + lambda.
    std::shared_ptr<const BandedLU> factorization(cplx lambda) const;

private:
    SpaceGrid grid_;
    Eigen::SparseMatrix<double> d1_max_;
    Eigen::SparseMatrix<double> d1_dirichlet_;
    std::vector<std::size_t> band_order_;

    struct CacheKey {
        double re, im;
        bool operator<(const CacheKey& o) const { return re < o.re || (re == o.re && im < o.im); }
    };
    struct Cache {
        std::shared_mutex mutex;
        std::map<CacheKey, std::shared_ptr<const BandedLU>> entries;
    };
    std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

/// Throws PreconditionError for N < 4.
BlockOperatorA assemble_block_A(const SpaceGrid& grid);

/// Solves (A + lambda) w = rhs; requires Re(lambda) > 0.
std::vector<cplx> resolvent_A(const BlockOperatorA& A, cplx lambda, std::span<const cplx> rhs);

/// Subtracts the arithmetic mean (the orthogonal projection onto mean-zero vectors).
std::vector<cplx> project_out_mean(std::span<const cplx> g);

/// Spatial operator acting on one time step of a field: a sparse matrix with a known
/// permutation that makes it banded. All solver-facing variants go through this type.
class SpatialOperator {
public:
    /// sign * A for the staggered block operator.
    static SpatialOperator block(const BlockOperatorA& A, double sign = 1.0);
    /// value * identity on `width` unknowns.
    static SpatialOperator scalar(std::size_t width, cplx value);
    static SpatialOperator zero(std::size_t width) { return scalar(width, 0.0); }
    /// -Laplacian - lambda on interior nodes, as the composition -d1_max d1_dirichlet.
    static SpatialOperator dirichlet_laplacian(const SpaceGrid& grid, double lambda = 0.0);

    std::size_t width() const noexcept { return static_cast<std::size_t>(matrix_.rows()); }
    const Eigen::SparseMatrix<cplx, Eigen::RowMajor>& matrix() const noexcept { return matrix_; }
    const std::vector<std::size_t>& band_order() const noexcept { return order_; }
    std::size_t bandwidth() const noexcept { return bandwidth_; }

    void apply(std::span<const cplx> w, std::span<cplx> out) const;
    /// Applies the operator to every time step of a signal.
    TimeSignal apply(const TimeSignal& u) const;

    /// Band matrix of diag(d) + this operator in the banded ordering.
    BandedMatrix band_with_diagonal(std::span<const cplx> d) const;

private:
    SpatialOperator(Eigen::SparseMatrix<cplx, Eigen::RowMajor> m, std::vector<std::size_t> order,
                    std::size_t bandwidth);

    Eigen::SparseMatrix<cplx, Eigen::RowMajor> matrix_;
    std::vector<std::size_t> order_;
    std::size_t bandwidth_;
};

/// x -> g(frac(n x)).
std::function<double(double)> oscillated(std::function<double(double)> g, double n);
/// Piecewise-constant two-phase function: `left` on [0, split), `right` on [split, 1].
std::function<double(double)> two_phase(double left, double right, double split = 0.5);
/// Indicator of a union of intervals [a, b], evaluated with half-open cells [a, b).
std::function<double(double)> indicator(std::vector<std::pair<double, double>> intervals);

/// g sampled at cell midpoints.
std::vector<double> sample_cells(const SpaceGrid& grid, const std::function<double(double)>& g);
/// Average of the midpoint samples of the two cells adjacent to each interior node.
std::vector<double> sample_nodes(const SpaceGrid& grid, const std::function<double(double)>& g);

}  // namespace evoconv
