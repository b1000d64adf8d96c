#include "pdmala/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pdmala {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool is_constant(const Vector& column) {
  return column.size() == 0 || column.maxCoeff() == column.minCoeff();
}

Matrix sample_covariance(const Matrix& x) {
  const Vector mu = x.colwise().mean().transpose();
  const Matrix centered = x.rowwise() - mu.transpose();
  return centered.transpose() * centered / static_cast<double>(x.rows() - 1);
}

// b / (a - 1) * sum_k (batch_mean_k - mu)(batch_mean_k - mu)^T with mu the
// mean of the whole chain.
Matrix batch_means_covariance(const Matrix& x, Index b) {
  const Index a = x.rows() / b;
  const Vector mu = x.colwise().mean().transpose();
  Matrix acc = Matrix::Zero(x.cols(), x.cols());
  for (Index k = 0; k < a; ++k) {
    const Vector dev = x.middleRows(k * b, b).colwise().mean().transpose() - mu;
    acc.selfadjointView<Eigen::Lower>().rankUpdate(dev);
  }
  acc = acc.selfadjointView<Eigen::Lower>();
  return acc * (static_cast<double>(b) / static_cast<double>(a - 1));
}

}  // namespace

std::vector<double> acf(const Vector& column, Index max_lag) {
  const Index n = column.size();
  if (max_lag < 0 || n <= max_lag) throw invalid_argument("acf: need more iterations than max_lag");
  if (is_constant(column)) throw numerical_error("acf: zero-variance column");
  const Vector c = column.array() - column.mean();
  const double c0 = c.squaredNorm();
  std::vector<double> out(static_cast<std::size_t>(max_lag + 1));
  out[0] = 1.0;
  for (Index k = 1; k <= max_lag; ++k) {
    out[static_cast<std::size_t>(k)] = c.head(n - k).dot(c.tail(n - k)) / c0;
  }
  return out;
}

Index batch_size(Index n) {
  return static_cast<Index>(std::floor(std::sqrt(static_cast<double>(n))));
}

double ess(const Vector& column) {
  const Index n = column.size();
  if (n < 100) throw invalid_argument("ess: need at least 100 iterations");
  if (is_constant(column)) throw numerical_error("ess: zero-variance column");
  const Matrix x = column;
  const double sample_var = sample_covariance(x)(0, 0);
  const double clt_var = batch_means_covariance(x, batch_size(n))(0, 0);
  return static_cast<double>(n) * sample_var / clt_var;
}

MessResult mess(const Matrix& states) {
  const Index n = states.rows();
  const Index p = states.cols();
  const Index b = batch_size(n);
  if (n < 100 || b < 2) throw invalid_argument("mess: need at least 100 iterations");
  const Index a = n / b;

  MessResult result;
  std::vector<Index> coords;
  if (p < a) {
    for (Index j = 0; j < p; ++j) coords.push_back(j);
  } else {
    // Too few batches for a full-rank batch-means covariance.
    const Index keep = a - 1;
    for (Index i = 0; i < keep; ++i) coords.push_back((i * p) / keep);
    result.subsampled = true;
  }
  Matrix x(n, static_cast<Index>(coords.size()));
  for (std::size_t i = 0; i < coords.size(); ++i) x.col(static_cast<Index>(i)) = states.col(coords[i]);
  result.coordinates = coords;

  const Eigen::LLT<Matrix> lambda(sample_covariance(x));
  const Eigen::LLT<Matrix> sigma(batch_means_covariance(x, b));
  if (lambda.info() != Eigen::Success || sigma.info() != Eigen::Success) {
    result.positive_definite = false;
    result.value = kNaN;
    return result;
  }
  const Matrix ll = lambda.matrixL();
  const Matrix ls = sigma.matrixL();
  const double log_ratio = 2.0 * (ll.diagonal().array().log().sum() - ls.diagonal().array().log().sum());
  result.value = static_cast<double>(n) * std::exp(log_ratio / static_cast<double>(x.cols()));
  return result;
}

double msjd(const Matrix& states) {
  const Index n = states.rows();
  if (n < 2) throw invalid_argument("msjd: need at least 2 iterations");
  double total = 0.0;
  for (Index t = 1; t < n; ++t) total += (states.row(t) - states.row(t - 1)).squaredNorm();
  return total / static_cast<double>(n - 1);
}

std::vector<Index> even_checkpoints(Index n, Index count) {
  std::vector<Index> out;
  if (count <= 0) return out;
  for (Index i = 1; i <= count; ++i) {
    const Index k = (n * i) / count;
    if (k >= 2 && (out.empty() || k > out.back())) out.push_back(k);
  }
  return out;
}

MpsrfTrajectory mpsrf(const std::vector<const Matrix*>& chains, const std::vector<Index>& checkpoints) {
  const auto count = static_cast<Index>(chains.size());
  if (count < 2) throw invalid_argument("mpsrf: need at least two chains");
  const Index n = chains.front()->rows();
  const Index p = chains.front()->cols();
  for (const Matrix* c : chains) {
    if (c->rows() != n || c->cols() != p) throw invalid_argument("mpsrf: chains must have equal shape");
  }
  const double mc = static_cast<double>(count);
  // Shift by one reference state to limit cancellation in the running sums.
  const Vector shift = chains.front()->row(0).transpose();
  std::vector<Vector> sums(chains.size(), Vector::Zero(p));
  std::vector<Matrix> squares(chains.size(), Matrix::Zero(p, p));

  MpsrfTrajectory out;
  Index t = 0;
  for (Index k : checkpoints) {
    if (k < 2 || k > n) throw invalid_argument("mpsrf: checkpoint outside [2, n]");
    if (k < t) throw invalid_argument("mpsrf: checkpoints must be increasing");
    for (; t < k; ++t) {
      for (std::size_t j = 0; j < chains.size(); ++j) {
        const Vector v = chains[j]->row(t).transpose() - shift;
        sums[j] += v;
        squares[j].selfadjointView<Eigen::Lower>().rankUpdate(v);
      }
    }
    const double kd = static_cast<double>(k);
    Matrix within = Matrix::Zero(p, p);
    std::vector<Vector> means(chains.size());
    Vector grand = Vector::Zero(p);
    for (std::size_t j = 0; j < chains.size(); ++j) {
      means[j] = sums[j] / kd;
      grand += means[j];
      Matrix s = squares[j].selfadjointView<Eigen::Lower>();
      within += s - kd * means[j] * means[j].transpose();
    }
    grand /= mc;
    within /= mc * (kd - 1.0);
    Matrix between = Matrix::Zero(p, p);  // B / n
    for (const Vector& mu : means) {
      const Vector d = mu - grand;
      between += d * d.transpose();
    }
    between /= mc - 1.0;

    MpsrfPoint point;
    point.iteration = k;
    Eigen::LLT<Matrix> llt(within);
    bool ok = llt.info() == Eigen::Success && llt.matrixLLT().diagonal().minCoeff() > 0.0;
    if (ok) {
      const Matrix lower = llt.matrixL();
      // lambda_max(W^{-1} B) = lambda_max(L^{-1} B L^{-T})
      Matrix tmp = lower.triangularView<Eigen::Lower>().solve(between);
      Matrix sym = lower.triangularView<Eigen::Lower>().solve(tmp.transpose());
      sym = 0.5 * (sym + sym.transpose());
      Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
      ok = eig.info() == Eigen::Success;
      if (ok) {
        const double lambda = eig.eigenvalues().maxCoeff();
        point.value = (kd - 1.0) / kd + (mc + 1.0) / mc * lambda;
      }
    }
    if (!ok) {
      point.flagged = true;
      point.value = kNaN;
    }
    out.points.push_back(point);
  }
  return out;
}

MpsrfTrajectory mpsrf(const std::vector<Matrix>& chains, const std::vector<Index>& checkpoints) {
  std::vector<const Matrix*> ptrs;
  for (const Matrix& c : chains) ptrs.push_back(&c);
  return mpsrf(ptrs, checkpoints);
}

DiagnosticsReport diagnose(const ChainTrace& trace, const DiagnosticsOptions& options) {
  if (options.burn_in < 0 || options.burn_in >= trace.iterations()) {
    throw invalid_argument("diagnose: burn-in must leave at least one iteration");
  }
  const Matrix states = trace.states.bottomRows(trace.iterations() - options.burn_in);
  const Index n = states.rows();
  const Index p = states.cols();

  DiagnosticsReport r;
  r.iterations = n;
  r.burn_in = options.burn_in;
  r.wall_time = trace.wall_time;
  r.acceptance_rate = trace.acceptance_rate;
  r.msjd = msjd(states);

  r.acf_coordinates = options.acf_coordinates;
  if (r.acf_coordinates.empty()) {
    for (Index j = 0; j < p; ++j) r.acf_coordinates.push_back(j);
  }
  const Index max_lag = std::min(options.max_lag, n - 1);
  for (Index j : r.acf_coordinates) {
    if (j < 0 || j >= p) throw invalid_argument("diagnose: ACF coordinate out of range");
    try {
      r.acf.push_back(acf(states.col(j), max_lag));
    } catch (const Error& e) {
      r.acf.emplace_back(static_cast<std::size_t>(max_lag + 1), kNaN);
      r.warnings.push_back("coordinate " + std::to_string(j) + ": " + e.what());
    }
  }

  if (options.univariate_ess) {
    r.has_ess = true;
    const double minutes = trace.wall_time / 60.0;
    for (Index j = 0; j < p; ++j) {
      double value = kNaN;
      try {
        value = ess(states.col(j));
      } catch (const Error& e) {
        r.warnings.push_back("ESS coordinate " + std::to_string(j) + ": " + e.what());
      }
      r.ess.push_back(value);
      r.ess_per_minute.push_back(minutes > 0.0 ? value / minutes : kNaN);
    }
    r.mess = mess(states);
    if (!r.mess.positive_definite) r.warnings.push_back("mESS: batch-means covariance is not positive definite");
    if (r.mess.subsampled) {
      r.warnings.push_back("mESS computed on " + std::to_string(r.mess.coordinates.size()) +
                           " evenly spaced coordinates");
    }
  }
  return r;
}

nlohmann::json to_json(const DiagnosticsReport& report) {
  nlohmann::json j;
  j["iterations"] = report.iterations;
  j["burn_in"] = report.burn_in;
  j["acceptance_rate"] = report.acceptance_rate;
  j["wall_time"] = report.wall_time;
  j["msjd"] = report.msjd;
  nlohmann::json acf_json = nlohmann::json::array();
  for (std::size_t i = 0; i < report.acf.size(); ++i) {
    acf_json.push_back({{"coordinate", report.acf_coordinates[i]}, {"values", report.acf[i]}});
  }
  j["acf"] = acf_json;
  if (report.has_ess) {
    j["ess"] = report.ess;
    j["ess_per_minute"] = report.ess_per_minute;
    j["mess"] = {{"value", report.mess.value},
                 {"positive_definite", report.mess.positive_definite},
                 {"subsampled", report.mess.subsampled},
                 {"coordinates", report.mess.coordinates.size()}};
  }
  j["warnings"] = report.warnings;
  return j;
}

nlohmann::json to_json(const MpsrfTrajectory& trajectory) {
  nlohmann::json points = nlohmann::json::array();
  for (const MpsrfPoint& p : trajectory.points) {
    points.push_back({{"iteration", p.iteration}, {"value", p.value}, {"flagged", p.flagged}});
  }
  return points;
}

}  // namespace pdmala
