#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>

namespace coastflow {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using ArrayX = Eigen::ArrayXd;
using ArrayXX = Eigen::ArrayXXd;
using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;

} // namespace coastflow
