#include "ldpx/tilted_family.hpp"

#include <cmath>

#include "ldpx/errors.hpp"

namespace ldpx {

TiltedFamily TiltedFamily::diffusion(const TorusDiffusionSpec& spec, const PeriodicGrid& grid) {
  return diffusion(build_generator(spec, grid), grid);
}

TiltedFamily TiltedFamily::diffusion(GeneratorMatrix base, PeriodicGrid grid) {
  TiltedFamily f;
  f.time_ = TimeKind::continuous;
  f.symmetric_ = (base.base - base.base.transpose()).cwiseAbs().maxCoeff() <=
                 1e-14 * base.base.cwiseAbs().maxCoeff();
  f.generator_ = std::move(base);
  f.generator_->z = 0.0;
  f.generator_->tag = GeneratorTag::base;
  f.grid_ = std::move(grid);
  return f;
}

TiltedFamily TiltedFamily::chain(const DiscreteChainSpec& spec) {
  const auto report = validate_spec(spec);
  if (!report.ok()) throw PreconditionError("invalid chain: " + report.issues.front());
  TiltedFamily f;
  f.time_ = TimeKind::discrete;
  f.lattice_ = spec.lattice();
  f.chain_ = spec;
  f.chain_shift_ = spec.transition_increment;
  f.chain_shift_.colwise() += spec.increment_mean;
  // Symmetric only when every tilt keeps M symmetric, i.e. P and the increments are.
  f.symmetric_ = (spec.transition - spec.transition.transpose()).cwiseAbs().maxCoeff() == 0.0 &&
                 (f.chain_shift_ - f.chain_shift_.transpose()).cwiseAbs().maxCoeff() == 0.0 &&
                 spec.increment_var.maxCoeff() == spec.increment_var.minCoeff();
  return f;
}

TiltedFamily TiltedFamily::from_model(const ModelSpec& spec, std::size_t grid_n) {
  if (const auto* torus = std::get_if<TorusDiffusionSpec>(&spec)) {
    return diffusion(*torus, PeriodicGrid(torus->dim, grid_n));
  }
  return chain(std::get<DiscreteChainSpec>(spec));
}

Eigen::Index TiltedFamily::size() const {
  return generator_ ? generator_->size() : chain_->transition.rows();
}

const Eigen::VectorXd& TiltedFamily::noise_var() const {
  return generator_ ? generator_->obs_var : chain_->increment_var;
}

Eigen::MatrixXcd TiltedFamily::matrix(cplx z) const {
  if (generator_) return generator_->retilted(z).entries();
  const auto& c = *chain_;
  const Eigen::Index n = size();
  Eigen::MatrixXcd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const cplx row = 0.5 * z * z * c.increment_var[i];
    for (Eigen::Index j = 0; j < n; ++j) {
      m(i, j) = c.transition(i, j) * std::exp(z * chain_shift_(i, j) + row);
    }
  }
  return m;
}

Eigen::MatrixXd TiltedFamily::real_matrix(double theta) const {
  if (generator_) return generator_->retilted(theta).real_entries();
  const auto& c = *chain_;
  const Eigen::Index n = size();
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double row = 0.5 * theta * theta * c.increment_var[i];
    for (Eigen::Index j = 0; j < n; ++j) {
      m(i, j) = c.transition(i, j) * std::exp(theta * chain_shift_(i, j) + row);
    }
  }
  return m;
}

Eigen::MatrixXd TiltedFamily::real_derivative(double theta) const {
  if (generator_) {
    Eigen::VectorXd d = generator_->obs_drift + theta * generator_->obs_var;
    return d.asDiagonal();
  }
  Eigen::MatrixXd m = real_matrix(theta);
  Eigen::MatrixXd slope = chain_shift_;
  slope.colwise() += theta * chain_->increment_var;
  return m.cwiseProduct(slope);
}

void TiltedFamily::check_time(double t) const {
  if (!(t >= 0.0) || !std::isfinite(t)) throw PreconditionError("time must be finite and nonnegative");
  if (discrete() && t != std::floor(t)) throw PreconditionError("chains need an integer number of steps");
}

Eigen::MatrixXcd TiltedFamily::propagator(cplx z, double t, cplx shift) const {
  check_time(t);
  if (generator_) {
    Eigen::MatrixXcd g = matrix(z);
    g.diagonal().array() -= shift;
    return expm((t * g).eval());
  }
  return matrix_power<Eigen::MatrixXcd>(matrix(z) * std::exp(-shift), static_cast<long long>(t));
}

Eigen::MatrixXd TiltedFamily::real_propagator(double theta, double t, double shift) const {
  check_time(t);
  if (generator_) {
    Eigen::MatrixXd g = real_matrix(theta);
    g.diagonal().array() -= shift;
    return expm((t * g).eval());
  }
  return matrix_power<Eigen::MatrixXd>(real_matrix(theta) * std::exp(-shift), static_cast<long long>(t));
}

cplx TiltedFamily::normalized_power(cplx eigenvalue, double mu, double t) const {
  if (!discrete()) return std::exp(t * (eigenvalue - mu));
  if (eigenvalue == cplx{0.0, 0.0}) return t == 0.0 ? cplx{1.0, 0.0} : cplx{0.0, 0.0};
  const cplx ratio = eigenvalue * std::exp(-mu);
  // Integer power: exp(t log r) is branch-independent.
  return std::exp(t * std::log(ratio));
}

cplx TiltedFamily::exponent(cplx eigenvalue) const {
  if (!discrete()) return eigenvalue;
  if (eigenvalue == cplx{0.0, 0.0}) return {-INFINITY, 0.0};
  return std::log(eigenvalue);
}

}  // namespace ldpx
