#pragma once

#include <Eigen/Core>

namespace wrd::num::detail {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;
using RowVectorMap = Eigen::Map<Eigen::RowVectorXd>;
using ConstRowVectorMap = Eigen::Map<const Eigen::RowVectorXd>;

}  // namespace wrd::num::detail
