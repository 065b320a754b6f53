#include "gformula/sandwich.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "gformula/error.hpp"

namespace gformula {
namespace {

constexpr double kSingularRatio = 1e-13;

}  // namespace

Eigen::MatrixXd EstimatingEquations::mean_jacobian(const Eigen::VectorXd& theta) const {
  return finite_difference_jacobian(*this, theta);
}

std::vector<ParameterBlock> EstimatingEquations::blocks() const {
  std::vector<ParameterBlock> out;
  for (Eigen::Index j = 0; j < dimension(); ++j)
    out.push_back({"theta[" + std::to_string(j) + "]", j, 1});
  return out;
}

Eigen::VectorXd mean_psi(const EstimatingEquations& equations, const Eigen::VectorXd& theta) {
  Eigen::VectorXd total = Eigen::VectorXd::Zero(equations.dimension());
  for (std::size_t i = 0; i < equations.units(); ++i) total += equations.psi(i, theta);
  return total / static_cast<double>(equations.units());
}

Eigen::MatrixXd finite_difference_jacobian(const EstimatingEquations& equations,
                                           const Eigen::VectorXd& theta, double relative_step) {
  const Eigen::Index d = equations.dimension();
  Eigen::MatrixXd jac(d, d);
  Eigen::VectorXd shifted = theta;
  for (Eigen::Index j = 0; j < d; ++j) {
    const double h = relative_step * std::max(1.0, std::abs(theta[j]));
    shifted[j] = theta[j] + h;
    const Eigen::VectorXd plus = mean_psi(equations, shifted);
    shifted[j] = theta[j] - h;
    const Eigen::VectorXd minus = mean_psi(equations, shifted);
    shifted[j] = theta[j];
    jac.col(j) = (plus - minus) / (2.0 * h);
  }
  return jac;
}

SandwichResult sandwich(const EstimatingEquations& equations, const Eigen::VectorXd& theta_hat) {
  const Eigen::Index d = equations.dimension();
  const std::size_t m = equations.units();
  if (theta_hat.size() != d) throw Error(ErrorKind::data, "sandwich: parameter dimension mismatch");
  if (m == 0) throw Error(ErrorKind::data, "sandwich: no units");

  SandwichResult out;
  out.U = -equations.mean_jacobian(theta_hat);
  out.W = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t i = 0; i < m; ++i) {
    const Eigen::VectorXd psi = equations.psi(i, theta_hat);
    out.W.selfadjointView<Eigen::Lower>().rankUpdate(psi);
  }
  out.W = out.W.selfadjointView<Eigen::Lower>();
  out.W /= static_cast<double>(m);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(out.U, Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double smax = sv[0];
  const double smin = sv[d - 1];
  out.condition_number = smin > 0 ? smax / smin : std::numeric_limits<double>::infinity();
  if (!(smin > kSingularRatio * smax)) {
    const Eigen::VectorXd null_dir = svd.matrixV().col(d - 1);
    std::string offending = "?";
    double best = -1.0;
    for (const auto& block : equations.blocks()) {
      const double share = null_dir.segment(block.offset, block.size).squaredNorm();
      if (share > best) {
        best = share;
        offending = block.name;
      }
    }
    std::ostringstream msg;
    msg << "sandwich: bread matrix is singular (condition number " << out.condition_number
        << "); offending block: " << offending;
    throw Error(ErrorKind::singular_information, msg.str());
  }

  const Eigen::FullPivLU<Eigen::MatrixXd> lu(out.U);
  const Eigen::MatrixXd inverse = lu.inverse();
  out.sigma = inverse * out.W * inverse.transpose() / static_cast<double>(m);
  out.sigma = 0.5 * (out.sigma + out.sigma.transpose()).eval();
  out.se = out.sigma.diagonal().cwiseMax(0.0).cwiseSqrt();
  return out;
}

}  // namespace gformula
