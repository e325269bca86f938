#pragma once

#include <Eigen/Dense>

#include <vector>

namespace agglo {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;
using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Cluster assignment, one entry per sample.
using Labels = std::vector<int>;

enum class Mode { ann, annld };

}  // namespace agglo
