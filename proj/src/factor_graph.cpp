#include "pollinator/factor_graph.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>

namespace pollinator {

namespace {

Eigen::MatrixXd sqrt_information_of(const Eigen::MatrixXd& covariance) {
  if (covariance.rows() != covariance.cols()) throw FactorGraphError("covariance must be square");
  if (!covariance.isApprox(covariance.transpose(), 1e-9))
    throw FactorGraphError("covariance must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  if (llt.info() != Eigen::Success) throw FactorGraphError("covariance must be positive definite");
  const Eigen::MatrixXd l = llt.matrixL();
  return l.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(l.rows(), l.cols()));
}

}  // namespace

Eigen::VectorXd PixelDepthModel::predict(const Vec3& x) const {
  const Vec3 pc = invert_pose(camera_).transform_point(x);
  const PixelCoord px = project(pc, k_);
  return Eigen::Vector3d(px.u, px.v, pc.z());
}

Eigen::MatrixXd PixelDepthModel::jacobian(const Vec3& x) const {
  const Mat3 rt = camera_.rotation().transpose();
  const Vec3 pc = rt * (x - camera_.position());
  if (!(pc.z() > 0.0)) throw GeometryError("point behind camera");
  const double iz = 1.0 / pc.z();
  Mat3 dproj;
  dproj << k_.fx * iz, 0.0, -k_.fx * pc.x() * iz * iz,
           0.0, k_.fy * iz, -k_.fy * pc.y() * iz * iz,
           0.0, 0.0, 1.0;
  return dproj * rt;
}

VariableId FactorGraph::add_variable() { return static_cast<VariableId>(num_variables_++); }

void FactorGraph::check_variable(VariableId v) const {
  if (v < 0 || static_cast<std::size_t>(v) >= num_variables_) throw FactorGraphError("unknown variable");
}

void FactorGraph::add_prior(VariableId x, const Vec3& mean, const Mat3& covariance) {
  check_variable(x);
  factors_.push_back({Kind::kPrior, x, -1, mean, sqrt_information_of(covariance), nullptr});
}

void FactorGraph::add_dynamics(VariableId from, VariableId to, const Mat3& covariance) {
  check_variable(from);
  check_variable(to);
  if (from == to) throw FactorGraphError("dynamics factor needs two distinct variables");
  factors_.push_back({Kind::kDynamics, from, to, Eigen::Vector3d::Zero(), sqrt_information_of(covariance), nullptr});
}

void FactorGraph::add_measurement(VariableId x, std::shared_ptr<const MeasurementModel> model,
                                  const Eigen::VectorXd& z, const Eigen::MatrixXd& covariance) {
  check_variable(x);
  if (!model) throw FactorGraphError("null measurement model");
  if (z.size() != model->dimension() || covariance.rows() != model->dimension())
    throw FactorGraphError("measurement dimension mismatch");
  factors_.push_back({Kind::kMeasurement, x, -1, z, sqrt_information_of(covariance), std::move(model)});
}

Eigen::VectorXd FactorGraph::residual(const Factor& f, const Values& values) const {
  switch (f.kind) {
    case Kind::kPrior: return values[f.a] - f.z;
    case Kind::kDynamics: return values[f.b] - values[f.a];
    case Kind::kMeasurement: return f.model->predict(values[f.a]) - f.z;
  }
  return {};
}

double FactorGraph::cost(const Values& values) const {
  if (values.size() != num_variables_) throw FactorGraphError("value count mismatch");
  double c = 0.0;
  for (const Factor& f : factors_) c += (f.sqrt_information * residual(f, values)).squaredNorm();
  return c;
}

void FactorGraph::check_constrained() const {
  std::vector<bool> touched(num_variables_, false);
  for (const Factor& f : factors_) {
    touched[f.a] = true;
    if (f.b >= 0) touched[f.b] = true;
  }
  for (std::size_t v = 0; v < num_variables_; ++v)
    if (!touched[v]) throw SingularSystemError("variable " + std::to_string(v) + " has no factor");
}

FactorGraph::Linearization FactorGraph::linearize(const Values& values) const {
  const auto n = static_cast<Eigen::Index>(3 * num_variables_);
  Linearization lin;
  lin.hessian = Eigen::MatrixXd::Zero(n, n);
  lin.gradient = Eigen::VectorXd::Zero(n);
  for (const Factor& f : factors_) {
    const Eigen::VectorXd e = f.sqrt_information * residual(f, values);
    lin.cost += e.squaredNorm();
    if (f.kind == Kind::kDynamics) {
      // e = x_b - x_a
      const Eigen::MatrixXd& w = f.sqrt_information;
      const Eigen::MatrixXd wtw = w.transpose() * w;
      const Eigen::VectorXd wte = w.transpose() * e;
      const Eigen::Index ia = 3 * f.a, ib = 3 * f.b;
      lin.hessian.block(ia, ia, 3, 3) += wtw;
      lin.hessian.block(ib, ib, 3, 3) += wtw;
      lin.hessian.block(ia, ib, 3, 3) -= wtw;
      lin.hessian.block(ib, ia, 3, 3) -= wtw;
      lin.gradient.segment(ia, 3) -= wte;
      lin.gradient.segment(ib, 3) += wte;
    } else {
      const Eigen::MatrixXd j = f.kind == Kind::kPrior
                                    ? Eigen::MatrixXd(f.sqrt_information)
                                    : Eigen::MatrixXd(f.sqrt_information * f.model->jacobian(values[f.a]));
      const Eigen::Index ia = 3 * f.a;
      lin.hessian.block(ia, ia, 3, 3) += j.transpose() * j;
      lin.gradient.segment(ia, 3) += j.transpose() * e;
    }
  }
  return lin;
}

Mat3 LmResult::marginal_covariance(VariableId v) const {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(information);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw SingularSystemError("information matrix is singular");
  const Eigen::MatrixXd cov = ldlt.solve(Eigen::MatrixXd::Identity(information.rows(), information.cols()));
  Mat3 block = cov.block<3, 3>(3 * v, 3 * v);
  return 0.5 * (block + block.transpose());
}

LmResult optimize_tracks(const FactorGraph& graph, Values initial, const LmOptions& options) {
  if (initial.size() != graph.num_variables()) throw FactorGraphError("initial value count mismatch");
  graph.check_constrained();

  LmResult result;
  result.values = std::move(initial);
  FactorGraph::Linearization lin = graph.linearize(result.values);
  result.initial_cost = lin.cost;
  double cost = lin.cost;
  double lambda = options.initial_lambda;
  const auto n = lin.hessian.rows();

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    result.iterations = iter + 1;
    const Eigen::VectorXd diag = lin.hessian.diagonal();
    if ((diag.array() <= 0.0).any()) throw SingularSystemError("normal equations are singular");

    bool accepted = false;
    double decrease = 0.0;
    while (lambda <= options.max_lambda) {
      Eigen::MatrixXd damped = lin.hessian;
      damped.diagonal() += lambda * diag;
      Eigen::LLT<Eigen::MatrixXd> llt(damped);
      if (llt.info() != Eigen::Success) {
        lambda *= 10.0;
        continue;
      }
      const Eigen::VectorXd delta = llt.solve(-lin.gradient);
      Values candidate = result.values;
      for (Eigen::Index v = 0; v < n / 3; ++v) candidate[v] += delta.segment<3>(3 * v);
      const double new_cost = graph.cost(candidate);
      if (std::isfinite(new_cost) && new_cost <= cost) {
        decrease = cost - new_cost;
        result.values = std::move(candidate);
        cost = new_cost;
        lambda = std::max(lambda * 0.1, 1e-15);
        accepted = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) {
      // No descent step exists at any damping: at a minimum to working precision.
      result.converged = true;
      break;
    }
    lin = graph.linearize(result.values);
    if (decrease < options.cost_tolerance) {
      result.converged = true;
      break;
    }
  }

  result.final_cost = cost;
  result.information = lin.hessian;
  Eigen::LDLT<Eigen::MatrixXd> check(result.information);
  if (check.info() != Eigen::Success || !check.isPositive() ||
      check.vectorD().minCoeff() <= 1e-14 * std::max(1.0, check.vectorD().maxCoeff()))
    throw SingularSystemError("information matrix is singular at the solution");
  return result;
}

}  // namespace pollinator
