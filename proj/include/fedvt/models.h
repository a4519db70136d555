//
// Copyright 2026 The fedvt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

// Parametric families P_theta with samplers, log densities, scores and
// analytic Fisher information.

#ifndef FEDVT_MODELS_H_
#define FEDVT_MODELS_H_

#include <algorithm>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fedvt/error.h"
#include "fedvt/rng.h"

namespace fedvt {

template <typename Scalar = double>
struct FisherMatrix {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> matrix;
  Scalar op_norm = 0;
  Scalar trace = 0;
};

// Checks symmetry and positive semidefiniteness (relative tolerance `tol`)
// and fills in the operator norm (largest eigenvalue) and trace.
template <typename Derived>
FisherMatrix<typename Derived::Scalar> MakeFisherMatrix(
    const Eigen::MatrixBase<Derived>& matrix,
    typename Derived::Scalar tol = 1e-10) {
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (matrix.rows() != matrix.cols() || matrix.rows() == 0) {
    throw Error(ErrorCode::kInvalidParameter, "Fisher matrix must be square");
  }
  const Mat m = matrix;
  const Scalar scale = std::max<Scalar>(Scalar(1), m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol * scale) {
    throw Error(ErrorCode::kInvalidParameter, "Fisher matrix is not symmetric");
  }
  const Mat sym = Scalar(0.5) * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> eig(sym, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -tol * scale) {
    throw Error(ErrorCode::kInvalidParameter,
                "Fisher matrix is not positive semidefinite");
  }
  FisherMatrix<Scalar> out;
  out.matrix = sym;
  out.op_norm = std::max<Scalar>(Scalar(0), eig.eigenvalues().maxCoeff());
  out.trace = sym.trace();
  return out;
}

// Symmetric PSD check shared by design covariances and Fisher matrices.
bool IsSymmetricPsd(const Eigen::MatrixXd& m, double tol = 1e-10);

using Observation = Eigen::VectorXd;

class ModelFamily {
 public:
  virtual ~ModelFamily() = default;

  virtual std::string Name() const = 0;
  virtual int ParamDim() const = 0;
  virtual int ObservationDim() const = 0;

  // Throws kInvalidParameter when theta is outside the parameter space.
  virtual void ValidateParameter(const Eigen::VectorXd& theta) const = 0;

  virtual Observation Sample(const Eigen::VectorXd& theta,
                             StreamRng& rng) const = 0;
  virtual double LogDensity(const Observation& x,
                            const Eigen::VectorXd& theta) const = 0;
  virtual Eigen::VectorXd Score(const Observation& x,
                                const Eigen::VectorXd& theta) const = 0;
  virtual FisherMatrix<double> Fisher(const Eigen::VectorXd& theta) const = 0;

  // Finite observation alphabet, when there is one.
  virtual std::optional<std::vector<Observation>> DiscreteSupport() const {
    return std::nullopt;
  }
};

// N(theta, sigma^2 I_d).
class GaussianMeanFamily final : public ModelFamily {
 public:
  GaussianMeanFamily(int d, double sigma);

  std::string Name() const override { return "gaussian_mean"; }
  int ParamDim() const override { return d_; }
  int ObservationDim() const override { return d_; }
  void ValidateParameter(const Eigen::VectorXd& theta) const override;
  Observation Sample(const Eigen::VectorXd& theta,
                     StreamRng& rng) const override;
  double LogDensity(const Observation& x,
                    const Eigen::VectorXd& theta) const override;
  Eigen::VectorXd Score(const Observation& x,
                        const Eigen::VectorXd& theta) const override;
  FisherMatrix<double> Fisher(const Eigen::VectorXd& theta) const override;

  double sigma() const { return sigma_; }

 private:
  int d_;
  double sigma_;
};

// Bernoulli(theta), theta in (0, 1); observations are the 1-vectors {0}, {1}.
class BernoulliFamily final : public ModelFamily {
 public:
  std::string Name() const override { return "bernoulli"; }
  int ParamDim() const override { return 1; }
  int ObservationDim() const override { return 1; }
  void ValidateParameter(const Eigen::VectorXd& theta) const override;
  Observation Sample(const Eigen::VectorXd& theta,
                     StreamRng& rng) const override;
  double LogDensity(const Observation& x,
                    const Eigen::VectorXd& theta) const override;
  Eigen::VectorXd Score(const Observation& x,
                        const Eigen::VectorXd& theta) const override;
  FisherMatrix<double> Fisher(const Eigen::VectorXd& theta) const override;
  std::optional<std::vector<Observation>> DiscreteSupport() const override;
};

// Gaussian random design Z ~ N(0, covariance).
class LinRegDesign {
 public:
  // Throws kInvalidParameter unless `covariance` is symmetric PSD.
  explicit LinRegDesign(Eigen::MatrixXd covariance);

  const Eigen::MatrixXd& covariance() const { return covariance_; }
  int dim() const { return static_cast<int>(covariance_.rows()); }
  Eigen::VectorXd Sample(StreamRng& rng) const;
  // log N(z; 0, covariance); std::nullopt for singular designs.
  std::optional<double> LogDensity(const Eigen::VectorXd& z) const;

 private:
  Eigen::MatrixXd covariance_;
  Eigen::MatrixXd root_;  // root_ * root_^T == covariance_
  std::optional<Eigen::LLT<Eigen::MatrixXd>> llt_;
};

// Y = Z^T theta + xi, xi ~ N(0, sigma^2); an observation is (Z, Y) stacked
// into a (d + 1)-vector.
class LinearRegressionFamily final : public ModelFamily {
 public:
  LinearRegressionFamily(LinRegDesign design, double sigma);

  std::string Name() const override { return "linear_regression"; }
  int ParamDim() const override { return design_.dim(); }
  int ObservationDim() const override { return design_.dim() + 1; }
  void ValidateParameter(const Eigen::VectorXd& theta) const override;
  Observation Sample(const Eigen::VectorXd& theta,
                     StreamRng& rng) const override;
  // Includes the design density when the design is nonsingular; otherwise
  // only the conditional density of Y given Z (the theta-dependent part).
  double LogDensity(const Observation& x,
                    const Eigen::VectorXd& theta) const override;
  Eigen::VectorXd Score(const Observation& x,
                        const Eigen::VectorXd& theta) const override;
  FisherMatrix<double> Fisher(const Eigen::VectorXd& theta) const override;

  const LinRegDesign& design() const { return design_; }
  double sigma() const { return sigma_; }

 private:
  LinRegDesign design_;
  double sigma_;
};

std::unique_ptr<ModelFamily> MakeGaussianMeanFamily(int d, double sigma);
std::unique_ptr<ModelFamily> MakeBernoulliFamily();
std::unique_ptr<ModelFamily> MakeLinearRegressionFamily(LinRegDesign design,
                                                        double sigma);

enum class FisherMethod { kExactEnumeration, kMonteCarlo };

struct FisherConsistencyReport {
  FisherMethod method = FisherMethod::kMonteCarlo;
  int trials = 0;
  Eigen::MatrixXd estimate;
  Eigen::MatrixXd std_errors;
  Eigen::MatrixXd analytic;
  // Entries whose |estimate - analytic| exceeds 4 standard errors (or, for
  // exact enumeration, a 1e-10 relative tolerance).
  std::vector<std::pair<int, int>> flagged;
  bool consistent() const { return flagged.empty(); }
};

// Compares E[s s^T] against Fisher(theta): exactly over the discrete support
// when the family has one, otherwise by Monte Carlo with per-entry standard
// errors. `trials` must be >= 1000 for the Monte Carlo branch.
FisherConsistencyReport CheckFisherConsistency(const ModelFamily& family,
                                               const Eigen::VectorXd& theta,
                                               int trials, uint64_t seed,
                                               bool allow_enumeration = true);

}  // namespace fedvt

#endif  // FEDVT_MODELS_H_
