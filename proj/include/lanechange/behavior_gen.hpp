#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "lanechange/behavior.hpp"
#include "lanechange/random.hpp"

namespace lanechange {

enum class ScenarioKind { Independent, Correlated, FullyCorrelated };

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::Independent;
  double rho = 0.75;  ///< only meaningful for Correlated

  static ScenarioSpec independent() { return {ScenarioKind::Independent, 0.0}; }
  static ScenarioSpec correlated(double rho) {
    if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("rho must lie in (0, 1)");
    return {ScenarioKind::Correlated, rho};
  }
  static ScenarioSpec fully_correlated() { return {ScenarioKind::FullyCorrelated, 1.0}; }

  friend bool operator==(const ScenarioSpec&, const ScenarioSpec&) = default;
};

inline std::string_view scenario_name(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::Independent: return "independent";
    case ScenarioKind::Correlated: return "correlated";
    case ScenarioKind::FullyCorrelated: return "full";
  }
  return "?";
}

inline ScenarioKind parse_scenario(std::string_view s) {
  if (s == "independent") return ScenarioKind::Independent;
  if (s == "correlated") return ScenarioKind::Correlated;
  if (s == "full" || s == "fully_correlated") return ScenarioKind::FullyCorrelated;
  throw std::invalid_argument("unknown scenario: " + std::string(s));
}

/// Standard normal CDF.
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// Samples correlated uniforms through a Gaussian copula with an
/// equicorrelation covariance (unit diagonal, rho elsewhere).
class GaussianCopula {
 public:
  GaussianCopula(double rho, std::size_t dim) : dim_(dim) {
    if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("rho must lie in (0, 1)");
    if (dim == 0) throw std::invalid_argument("copula dimension must be positive");
    Eigen::MatrixXd cov = Eigen::MatrixXd::Constant(dim, dim, rho);
    cov.diagonal().setOnes();
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) throw std::runtime_error("copula covariance not positive definite");
    chol_ = llt.matrixL();
  }

  std::vector<double> sample(Rng& rng) const {
    Eigen::VectorXd eps(dim_);
    for (std::size_t i = 0; i < dim_; ++i) eps[i] = standard_normal(rng);
    const Eigen::VectorXd z = chol_ * eps;
    std::vector<double> u(dim_);
    for (std::size_t i = 0; i < dim_; ++i) u[i] = normal_cdf(z[i]);
    return u;
  }

  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }

 private:
  std::size_t dim_;
  Eigen::MatrixXd chol_;
};

inline std::vector<double> gaussian_copula_uniforms(double rho, std::size_t dim, Rng& rng) {
  return GaussianCopula(rho, dim).sample(rng);
}

/// Driver-population distribution for one scenario, with an optional fixed
/// override used when planning under an assumed behavior.
class BehaviorPrior {
 public:
  explicit BehaviorPrior(ScenarioSpec spec) : spec_(spec) {
    if (spec.kind == ScenarioKind::Correlated) copula_.emplace(spec.rho, kVaryingParams);
  }

  static BehaviorPrior fixed(const BehaviorParams& theta) {
    BehaviorPrior p(ScenarioSpec::fully_correlated());
    p.fixed_ = theta;
    return p;
  }

  BehaviorParams sample(Rng& rng) const {
    if (fixed_) return *fixed_;
    switch (spec_.kind) {
      case ScenarioKind::FullyCorrelated:
        return params_from_aggressiveness(Aggressiveness(uniform01(rng)));
      case ScenarioKind::Independent: {
        BehaviorParams out;
        for (std::size_t i = 0; i < kVaryingParams; ++i)
          param_ref(out, i) = param_on_span(i, uniform01(rng));
        return out;
      }
      case ScenarioKind::Correlated: {
        const auto u = copula_->sample(rng);
        BehaviorParams out;
        for (std::size_t i = 0; i < kVaryingParams; ++i) param_ref(out, i) = param_on_span(i, u[i]);
        return out;
      }
    }
    return driver_types::kNormal;
  }

  [[nodiscard]] const ScenarioSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] bool is_fixed() const noexcept { return fixed_.has_value(); }

 private:
  ScenarioSpec spec_;
  std::optional<GaussianCopula> copula_;
  std::optional<BehaviorParams> fixed_;
};

inline BehaviorParams sample_behavior(const ScenarioSpec& spec, Rng& rng) {
  return BehaviorPrior(spec).sample(rng);
}

}  // namespace lanechange
