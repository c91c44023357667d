#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace pbc::ad {

struct AdamState {
  std::vector<double> m;  // first moment
  std::vector<double> v;  // second moment
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double lr = 1e-3;

  explicit AdamState(std::size_t dim, double learning_rate = 1e-3)
      : m(dim, 0.0), v(dim, 0.0), lr(learning_rate) {}
};

inline void adam_step(std::span<double> theta, std::span<const double> grad, AdamState& st) {
  if (theta.size() != grad.size() || theta.size() != st.m.size()) {
    throw std::invalid_argument("adam_step: dimension mismatch");
  }
  st.step += 1;
  const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  for (std::size_t i = 0; i < theta.size(); ++i) {
    st.m[i] = st.beta1 * st.m[i] + (1.0 - st.beta1) * grad[i];
    st.v[i] = st.beta2 * st.v[i] + (1.0 - st.beta2) * grad[i] * grad[i];
    const double mhat = st.m[i] / bc1;
    const double vhat = st.v[i] / bc2;
    theta[i] -= st.lr * mhat / (std::sqrt(vhat) + st.eps);
  }
}

// Rescales grad in place so its Euclidean norm is at most max_norm.
// Returns the pre-clip norm.
inline double clip_global_norm(std::span<double> grad, double max_norm) {
  double sq = 0.0;
  for (double g : grad) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double f = max_norm / norm;
    for (double& g : grad) g *= f;
  }
  return norm;
}

}  // namespace pbc::ad
