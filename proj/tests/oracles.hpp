#ifndef FDPOMM_TESTS_ORACLES_HPP_
#define FDPOMM_TESTS_ORACLES_HPP_

// Reference computations that share no code with the library. They are slow
// and only meant for small inputs.

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

inline constexpr double kPi = 3.14159265358979323846;

inline double normal_logpdf(double x, double mean, double var) {
  return -0.5 * std::log(2.0 * kPi * var) - 0.5 * (x - mean) * (x - mean) / var;
}

// Textbook scalar Kalman filter for X_{k+1} = a X_k + N(0, qz),
// Y_k = b X_k + N(0, qx), with X_1 ~ N(m1, p1).
inline double scalar_ssm_loglik(double a, double b, double qz, double qx,
                                const std::vector<double>& y, double m1, double p1) {
  double m = m1, p = p1, ll = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double s = b * b * p + qx;
    ll += normal_logpdf(y[k], b * m, s);
    const double gain = p * b / s;
    const double mf = m + gain * (y[k] - b * m);
    const double pf = (1.0 - gain * b) * p;
    m = a * mf;
    p = a * a * pf + qz;
  }
  return ll;
}

// X_1 under a stationary start.
inline double scalar_ssm_stationary_loglik(double a, double b, double qz, double qx,
                                           const std::vector<double>& y) {
  return scalar_ssm_loglik(a, b, qz, qx, y, 0.0, qz / (1.0 - a * a));
}

// Stationary row vector of a stochastic matrix by power iteration.
inline Eigen::VectorXd stationary(const Eigen::MatrixXd& P) {
  Eigen::RowVectorXd pi = Eigen::RowVectorXd::Constant(P.rows(), 1.0 / static_cast<double>(P.rows()));
  for (int it = 0; it < 100000; ++it) {
    Eigen::RowVectorXd next = pi * P;
    const double diff = (next - pi).cwiseAbs().sum();
    pi = next;
    if (diff < 1e-17) break;
  }
  return pi.transpose() / pi.sum();
}

// p(y_1..y_n) = sum over x_0..x_n of eta(x_0) prod P(x_{k-1}, x_k) G(x_k, y_k),
// by visiting every hidden path.
inline double finite_path_likelihood(const Eigen::MatrixXd& P, const Eigen::MatrixXd& G,
                                     const Eigen::VectorXd& eta, const std::vector<int>& y) {
  const int K = static_cast<int>(P.rows());
  const std::size_t n = y.size();
  std::vector<int> path(n + 1, 0);
  double total = 0.0;
  while (true) {
    double w = eta(path[0]);
    for (std::size_t k = 1; k <= n && w > 0.0; ++k) w *= P(path[k - 1], path[k]) * G(path[k], y[k - 1]);
    total += w;
    std::size_t pos = 0;
    while (pos <= n && ++path[pos] == K) path[pos++] = 0;
    if (pos > n) break;
  }
  return total;
}

// Posterior masses by direct exponentiation; prior is an unnormalized mass.
inline std::vector<double> bayes_masses(const std::vector<double>& prior,
                                        const std::vector<double>& likelihood) {
  std::vector<double> post(prior.size());
  double z = 0.0;
  for (std::size_t i = 0; i < prior.size(); ++i) z += post[i] = prior[i] * likelihood[i];
  for (auto& v : post) v /= z;
  return post;
}

inline double gaussian_kl_scalar(double m0, double v0, double m1, double v1) {
  return 0.5 * (v0 / v1 + (m1 - m0) * (m1 - m0) / v1 - 1.0 + std::log(v1 / v0));
}

// Random row-stochastic matrix with entries bounded away from zero.
template <typename Uniform>
Eigen::MatrixXd random_stochastic(int rows, int cols, Uniform&& u) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = 0.05 + u();
    m.row(i) /= m.row(i).sum();
  }
  return m;
}

}  // namespace oracle

#endif  // FDPOMM_TESTS_ORACLES_HPP_
