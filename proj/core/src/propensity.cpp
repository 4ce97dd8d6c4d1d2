#include "etk/propensity.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace etk {
namespace {

Eigen::MatrixXd design_matrix(const Dataset& dataset) {
  const auto n = static_cast<Eigen::Index>(dataset.size());
  const auto k = static_cast<Eigen::Index>(dataset.covariate_count());
  Eigen::MatrixXd x(n, k + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    const auto& cov = dataset.unit(static_cast<std::size_t>(i)).covariates;
    for (Eigen::Index j = 0; j < k; ++j) x(i, j + 1) = cov[static_cast<std::size_t>(j)];
  }
  return x;
}

Eigen::VectorXd treatment_vector(const Dataset& dataset) {
  Eigen::VectorXd t(static_cast<Eigen::Index>(dataset.size()));
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    t(static_cast<Eigen::Index>(i)) = dataset.treatments()[i];
  }
  return t;
}

double sigmoid(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double z = std::exp(eta);
  return z / (1.0 + z);
}

std::string column_name(const Dataset& dataset, Eigen::Index column) {
  if (column == 0) return "(intercept)";
  return dataset.covariate_names().at(static_cast<std::size_t>(column - 1));
}

void require_full_rank(const Dataset& dataset, const Eigen::MatrixXd& x) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  const Eigen::Index rank = qr.rank();
  if (rank == x.cols()) return;
  // Each pivoted-out column is a combination of the leading ones; name every
  // column that takes part in some dependency.
  const auto& perm = qr.colsPermutation().indices();
  const Eigen::MatrixXd r = qr.matrixR().topRows(rank);
  const Eigen::MatrixXd coef = r.topLeftCorner(rank, rank).triangularView<Eigen::Upper>().solve(
      r.rightCols(x.cols() - rank));
  std::vector<bool> involved(static_cast<std::size_t>(x.cols()), false);
  for (Eigen::Index k = 0; k < coef.cols(); ++k) {
    involved[static_cast<std::size_t>(perm(rank + k))] = true;
    for (Eigen::Index b = 0; b < rank; ++b) {
      if (std::fabs(coef(b, k)) > 1e-8) involved[static_cast<std::size_t>(perm(b))] = true;
    }
  }
  std::string names;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    if (!involved[static_cast<std::size_t>(c)]) continue;
    if (!names.empty()) names += ", ";
    names += column_name(dataset, c);
  }
  throw ValidationError("propensity design matrix is rank deficient; collinear columns: " +
                        names);
}

Eigen::Map<const Eigen::VectorXd> as_vector(std::span<const double> v) {
  return {v.data(), static_cast<Eigen::Index>(v.size())};
}

}  // namespace

PropensityModel fit_logistic(const Dataset& dataset, const LogisticOptions& options) {
  require_valid(dataset);
  const Eigen::MatrixXd x = design_matrix(dataset);
  const Eigen::VectorXd t = treatment_vector(dataset);
  require_full_rank(dataset, x);

  const Eigen::Index p = x.cols();
  const double treated_share = t.mean();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  beta(0) = std::log(treated_share / (1.0 - treated_share));

  PropensityModel model;
  bool divergence_checked = false;
  for (int it = 1; it <= options.max_iterations; ++it) {
    const Eigen::VectorXd eta = x * beta;
    Eigen::VectorXd e(eta.size());
    bool at_clamp = false;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      const double raw = sigmoid(eta(i));
      e(i) = std::clamp(raw, options.clamp, 1.0 - options.clamp);
      at_clamp = at_clamp || e(i) != raw;
    }
    const Eigen::VectorXd w = e.array() * (1.0 - e.array());
    Eigen::MatrixXd hessian = x.transpose() * w.asDiagonal() * x;
    hessian.diagonal().array() += options.ridge;
    const Eigen::VectorXd step = hessian.ldlt().solve(x.transpose() * (t - e));
    if (!step.allFinite()) throw SolverError("IRLS produced a non-finite update");
    beta += step;
    model.iterations = it;

    // The clamp can stall a diverging coefficient below the bound, so a
    // clamped score also triggers the check.
    if (!divergence_checked &&
        (at_clamp || beta.cwiseAbs().maxCoeff() > options.divergence_bound)) {
      divergence_checked = true;
      const Eigen::VectorXd lin = x * beta;
      bool complete = true;
      for (Eigen::Index i = 0; i < lin.size() && complete; ++i) {
        complete = t(i) == 1.0 ? lin(i) > 0.0 : lin(i) < 0.0;
      }
      if (complete) {
        throw SolverError(
            "perfect separation: the covariates predict treatment exactly, so the "
            "propensity score is 0 or 1 for every unit; use exact stratification on the "
            "separating covariates instead");
      }
      model.quasi_separated = true;
    }
    if (step.cwiseAbs().maxCoeff() < options.tolerance) {
      model.converged = !model.quasi_separated;
      break;
    }
  }

  model.coefficients.assign(beta.data(), beta.data() + beta.size());
  const Eigen::VectorXd eta = x * beta;
  model.scores.resize(static_cast<std::size_t>(eta.size()));
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    model.scores[static_cast<std::size_t>(i)] =
        std::clamp(sigmoid(eta(i)), options.clamp, 1.0 - options.clamp);
  }
  return model;
}

double logit(double score) {
  if (!(score > 0.0 && score < 1.0)) {
    throw ValidationError("logit undefined for score " + std::to_string(score) +
                          " (must lie strictly inside (0,1))");
  }
  return std::log(score / (1.0 - score));
}

std::vector<double> logit(std::span<const double> scores) {
  std::vector<double> out;
  out.reserve(scores.size());
  for (double s : scores) out.push_back(logit(s));
  return out;
}

double logistic_log_likelihood(const Dataset& dataset, std::span<const double> coefficients) {
  const Eigen::MatrixXd x = design_matrix(dataset);
  const Eigen::VectorXd t = treatment_vector(dataset);
  if (static_cast<Eigen::Index>(coefficients.size()) != x.cols()) {
    throw ValidationError("coefficient vector has the wrong length");
  }
  const Eigen::VectorXd eta = x * as_vector(coefficients);
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    // log(1 + exp(eta)) evaluated without overflow
    const double softplus =
        eta(i) > 0.0 ? eta(i) + std::log1p(std::exp(-eta(i))) : std::log1p(std::exp(eta(i)));
    ll += t(i) * eta(i) - softplus;
  }
  return ll;
}

std::vector<double> logistic_gradient(const Dataset& dataset,
                                      std::span<const double> coefficients) {
  const Eigen::MatrixXd x = design_matrix(dataset);
  const Eigen::VectorXd t = treatment_vector(dataset);
  if (static_cast<Eigen::Index>(coefficients.size()) != x.cols()) {
    throw ValidationError("coefficient vector has the wrong length");
  }
  const Eigen::VectorXd eta = x * as_vector(coefficients);
  Eigen::VectorXd resid(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) resid(i) = t(i) - sigmoid(eta(i));
  const Eigen::VectorXd g = x.transpose() * resid;
  return {g.data(), g.data() + g.size()};
}

}  // namespace etk
