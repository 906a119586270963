#pragma once

#include "pollinator/geometry.hpp"

#include <Eigen/Core>

#include <memory>
#include <stdexcept>
#include <vector>

namespace pollinator {

class FactorGraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Normal equations could not be solved (a variable is unconstrained).
class SingularSystemError : public FactorGraphError {
 public:
  using FactorGraphError::FactorGraphError;
};

/// Observation function h(x) of a 3-D position state.
class MeasurementModel {
 public:
  virtual ~MeasurementModel() = default;
  virtual int dimension() const = 0;
  virtual Eigen::VectorXd predict(const Vec3& x) const = 0;
  virtual Eigen::MatrixXd jacobian(const Vec3& x) const = 0;
};

/// h(x) = x, the world-frame position.
class PositionModel final : public MeasurementModel {
 public:
  int dimension() const override { return 3; }
  Eigen::VectorXd predict(const Vec3& x) const override { return x; }
  Eigen::MatrixXd jacobian(const Vec3&) const override { return Eigen::Matrix3d::Identity(); }
};

/// h(x) = (u, v, depth) of the world point seen by a pinhole camera at `camera_pose`.
class PixelDepthModel final : public MeasurementModel {
 public:
  PixelDepthModel(const Pose3& camera_pose, const CameraIntrinsics& k) : camera_(camera_pose), k_(k) {}
  int dimension() const override { return 3; }
  Eigen::VectorXd predict(const Vec3& x) const override;
  Eigen::MatrixXd jacobian(const Vec3& x) const override;

 private:
  Pose3 camera_;
  CameraIntrinsics k_;
};

using VariableId = int;
using Values = std::vector<Vec3>;

/// Posterior over static 3-D positions as prior, dynamics and measurement factors.
/// The cost is the sum of squared Mahalanobis residuals of all factors.
class FactorGraph {
 public:
  VariableId add_variable();
  std::size_t num_variables() const { return num_variables_; }

  /// ||x_o - x||^2_Sigma
  void add_prior(VariableId x, const Vec3& mean, const Mat3& covariance);
  /// ||x_to - f(x_from)||^2_Lambda with f the identity (static motion model).
  void add_dynamics(VariableId from, VariableId to, const Mat3& covariance);
  /// ||z - h(x)||^2_Xi
  void add_measurement(VariableId x, std::shared_ptr<const MeasurementModel> model, const Eigen::VectorXd& z,
                       const Eigen::MatrixXd& covariance);

  std::size_t num_factors() const { return factors_.size(); }
  double cost(const Values& values) const;

  /// Whitened residual and Jacobian blocks; used by the optimizer.
  struct Linearization {
    Eigen::MatrixXd hessian;   // J^T J
    Eigen::VectorXd gradient;  // J^T e
    double cost = 0.0;
  };
  Linearization linearize(const Values& values) const;

  /// Throws when a variable has no factor.
  void check_constrained() const;

 private:
  enum class Kind { kPrior, kDynamics, kMeasurement };
  struct Factor {
    Kind kind;
    VariableId a = -1;
    VariableId b = -1;
    Eigen::VectorXd z;
    Eigen::MatrixXd sqrt_information;  // L^-1 with covariance = L L^T
    std::shared_ptr<const MeasurementModel> model;
  };

  Eigen::VectorXd residual(const Factor& f, const Values& values) const;
  void check_variable(VariableId v) const;

  std::size_t num_variables_ = 0;
  std::vector<Factor> factors_;
};

struct LmOptions {
  int max_iterations = 100;
  double cost_tolerance = 1e-9;  // stop when an accepted step decreases cost by less
  double initial_lambda = 1e-4;
  double max_lambda = 1e12;
};

struct LmResult {
  Values values;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int iterations = 0;
  bool converged = false;
  Eigen::MatrixXd information;  // J^T J at the solution

  /// Marginal covariance of one variable (block of the inverse information).
  Mat3 marginal_covariance(VariableId v) const;
};

/// Levenberg-Marquardt with multiplicative diagonal damping.
LmResult optimize_tracks(const FactorGraph& graph, Values initial, const LmOptions& options = {});

}  // namespace pollinator
