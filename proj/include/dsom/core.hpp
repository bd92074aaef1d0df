#ifndef DSOM_CORE_HPP
#define DSOM_CORE_HPP

#include <Eigen/Core>

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace dsom {

using Index = Eigen::Index;

/// Dense sample table, one sample per row.
template <typename Scalar>
using SampleMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using FeatureVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Samples = SampleMatrix<double>;

/// Raised for inputs that violate an operation's preconditions.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a quantity is mathematically undefined for the given input.
class UndefinedResult : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Lattice position of a map node. One-based: the top-left node is (1,1).
struct NodeCoord {
    int row = 1;
    int col = 1;

    friend constexpr auto operator<=>(const NodeCoord&, const NodeCoord&) = default;
};

inline std::string to_string(const NodeCoord& c)
{
    return "(" + std::to_string(c.row) + "," + std::to_string(c.col) + ")";
}

} // namespace dsom

#endif // DSOM_CORE_HPP
