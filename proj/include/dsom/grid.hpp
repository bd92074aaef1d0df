#ifndef DSOM_GRID_HPP
#define DSOM_GRID_HPP

#include "dsom/core.hpp"
#include "dsom/random.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

namespace dsom {

/**
 * Rectangular lattice of map nodes, each holding a prototype vector.
 *
 * Prototypes are stored as one row per node in row-major node order, so the
 * storage row of node (r,c) is (r-1)*cols + (c-1). Row-major node order is the
 * same as lexicographic (row, col) order, which the BMU tie-break relies on.
 * The matrix itself is column-major: one feature across all nodes is contiguous,
 * which is the access pattern of the BMU search.
 */
template <typename Scalar = double>
class SomGrid {
public:
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    SomGrid() = default;

    SomGrid(int rows, int cols, Index dim) : rows_(rows), cols_(cols)
    {
        if (rows < 1 || cols < 1 || dim < 1)
            throw InputError("SomGrid: rows, cols and dim must all be >= 1");
        prototypes_ = Matrix::Zero(Index(rows) * cols, dim);
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    Index dim() const { return prototypes_.cols(); }
    Index node_count() const { return prototypes_.rows(); }

    bool contains(const NodeCoord& c) const
    {
        return c.row >= 1 && c.row <= rows_ && c.col >= 1 && c.col <= cols_;
    }

    Index index_of(const NodeCoord& c) const { return Index(c.row - 1) * cols_ + (c.col - 1); }

    NodeCoord coord_of(Index node) const
    {
        return {static_cast<int>(node / cols_) + 1, static_cast<int>(node % cols_) + 1};
    }

    auto prototype(const NodeCoord& c) { return prototypes_.row(index_of(c)); }
    auto prototype(const NodeCoord& c) const { return prototypes_.row(index_of(c)); }

    Matrix& prototypes() { return prototypes_; }
    const Matrix& prototypes() const { return prototypes_; }

    friend bool operator==(const SomGrid& a, const SomGrid& b)
    {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.prototypes_.rows() == b.prototypes_.rows()
            && a.prototypes_.cols() == b.prototypes_.cols() && a.prototypes_ == b.prototypes_;
    }

private:
    int rows_ = 0;
    int cols_ = 0;
    Matrix prototypes_;
};

/// Euclidean distance between two lattice positions.
inline double grid_distance(const NodeCoord& a, const NodeCoord& b)
{
    const double dr = double(a.row) - double(b.row);
    const double dc = double(a.col) - double(b.col);
    return std::sqrt(dr * dr + dc * dc);
}

/// Squared Euclidean distance, summed strictly left to right.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar squared_distance(const Eigen::MatrixBase<DerivedA>& a,
                                           const Eigen::MatrixBase<DerivedB>& b)
{
    using Scalar = typename DerivedA::Scalar;
    Scalar sum(0);
    for (Index i = 0; i < a.size(); ++i) {
        const Scalar diff = a(i) - b(i);
        sum += diff * diff;
    }
    return sum;
}

/**
 * Scratch space for repeated BMU searches on one grid.
 *
 * Distances to all nodes are accumulated feature by feature, so every node's sum is
 * still formed in feature order 0..D-1 and matches squared_distance() bit for bit;
 * only the nodes are processed side by side.
 */
template <typename Scalar>
class BmuSearch {
public:
    template <typename Derived>
    Index operator()(const SomGrid<Scalar>& grid, const Eigen::MatrixBase<Derived>& f)
    {
        if (f.size() != grid.dim())
            throw InputError("bmu: sample has dimension " + std::to_string(f.size()) + ", grid expects "
                             + std::to_string(grid.dim()));
        const auto& protos = grid.prototypes();
        const Index nodes = protos.rows();
        dist_.setZero(nodes);
        Scalar* dist = dist_.data();
        const Scalar* column = protos.data();
        for (Index i = 0; i < protos.cols(); ++i, column += nodes) {
            const Scalar fi = f(i);
            for (Index n = 0; n < nodes; ++n) {
                const Scalar diff = column[n] - fi;
                dist[n] += diff * diff;
            }
        }

        Index best = 0;
        Scalar bestDist = std::numeric_limits<Scalar>::infinity();
        for (Index n = 0; n < dist_.size(); ++n)
            if (dist_(n) < bestDist) {
                bestDist = dist_(n);
                best = n;
            }
        return best;
    }

private:
    Eigen::Array<Scalar, Eigen::Dynamic, 1> dist_;
};

/// Storage index of the best match unit; first strict minimum in row-major order.
template <typename Scalar, typename Derived>
Index bmu_index(const SomGrid<Scalar>& grid, const Eigen::MatrixBase<Derived>& f)
{
    BmuSearch<Scalar> search;
    return search(grid, f);
}

/// Node whose prototype is nearest to f. Ties go to the smallest (row, col).
template <typename Scalar, typename Derived>
NodeCoord bmu(const SomGrid<Scalar>& grid, const Eigen::MatrixBase<Derived>& f)
{
    return grid.coord_of(bmu_index(grid, f));
}

/**
 * Gradient initialization: every component of node (a,b) is the lattice distance
 * from (1,1) to (a,b), divided by the distance from (1,1) to (rows,cols). The
 * prototypes therefore run smoothly from all-zeros at the top-left corner to
 * all-ones at the bottom-right one.
 *
 * A 1x1 lattice has no extent to divide by; its single prototype is all zeros.
 */
template <typename Scalar = double>
SomGrid<Scalar> gradient_init(int rows, int cols, Index dim)
{
    SomGrid<Scalar> grid(rows, cols, dim);
    const NodeCoord origin{1, 1};
    const double span = grid_distance(origin, {rows, cols});
    if (span == 0.0)
        return grid;
    for (Index n = 0; n < grid.node_count(); ++n) {
        const double level = grid_distance(origin, grid.coord_of(n)) / span;
        grid.prototypes().row(n).setConstant(static_cast<Scalar>(level));
    }
    return grid;
}

/// Gradient initialization followed by the per-feature affine map [0,1] -> [lo_i, hi_i].
template <typename Scalar, typename DerivedLo, typename DerivedHi>
SomGrid<Scalar> gradient_init_rescaled(int rows, int cols, const Eigen::MatrixBase<DerivedLo>& lo,
                                       const Eigen::MatrixBase<DerivedHi>& hi)
{
    if (lo.size() != hi.size())
        throw InputError("gradient_init_rescaled: lo and hi differ in length");
    SomGrid<Scalar> grid = gradient_init<Scalar>(rows, cols, lo.size());
    for (Index n = 0; n < grid.node_count(); ++n)
        for (Index i = 0; i < grid.dim(); ++i) {
            const Scalar level = grid.prototypes()(n, i);
            grid.prototypes()(n, i) = lo(i) + level * (hi(i) - lo(i));
        }
    return grid;
}

/**
 * Uniform random initialization: component i of every prototype is drawn from
 * [lo_i, hi_i]. Draws are taken node by node in row-major order, component by
 * component, from SeededRandom(seed).
 */
template <typename Scalar, typename DerivedLo, typename DerivedHi>
SomGrid<Scalar> random_init(int rows, int cols, Index dim, std::uint64_t seed,
                            const Eigen::MatrixBase<DerivedLo>& lo, const Eigen::MatrixBase<DerivedHi>& hi)
{
    if (lo.size() != dim || hi.size() != dim)
        throw InputError("random_init: lo/hi must have length dim");
    for (Index i = 0; i < dim; ++i)
        if (!(lo(i) <= hi(i)))
            throw InputError("random_init: lo[" + std::to_string(i) + "] > hi[" + std::to_string(i) + "]");

    SomGrid<Scalar> grid(rows, cols, dim);
    SeededRandom rng(seed);
    for (Index n = 0; n < grid.node_count(); ++n)
        for (Index i = 0; i < dim; ++i) {
            const Scalar u = static_cast<Scalar>(rng.uniform01());
            // Rounding can step past hi when the interval is wide.
            grid.prototypes()(n, i) = std::min<Scalar>(lo(i) + u * (hi(i) - lo(i)), hi(i));
        }
    return grid;
}

} // namespace dsom

#endif // DSOM_GRID_HPP
