#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <memory>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pbc/rng.hpp"

namespace pbc::sig {

// Finite-horizon vector-valued time sequence, indexed t = 0..horizon().
// Immutable by convention once built; cheap to copy.
class Signal {
 public:
  Signal(int dim, int steps) : dim_(dim), data_(static_cast<std::size_t>(dim) * steps, 0.0) {
    if (dim < 1) throw std::invalid_argument("Signal: dim must be positive");
    if (steps < 1) throw std::invalid_argument("Signal: empty signal is disallowed");
  }

  int dim() const { return dim_; }
  int steps() const { return static_cast<int>(data_.size()) / dim_; }
  int horizon() const { return steps() - 1; }

  std::span<double> at(int t) {
    return {data_.data() + static_cast<std::size_t>(t) * dim_, static_cast<std::size_t>(dim_)};
  }
  std::span<const double> at(int t) const {
    return {data_.data() + static_cast<std::size_t>(t) * dim_, static_cast<std::size_t>(dim_)};
  }

  double& operator()(int t, int i) { return data_[static_cast<std::size_t>(t) * dim_ + i]; }
  double operator()(int t, int i) const { return data_[static_cast<std::size_t>(t) * dim_ + i]; }

  std::span<const double> flat() const { return data_; }
  std::span<double> flat() { return data_; }

  static Signal gaussian(int dim, int steps, double std, Rng& rng) {
    Signal s(dim, steps);
    for (double& v : s.data_) v = std * rng.normal();
    return s;
  }

  static Signal impulse(int dim, int steps, int coord, double amp = 1.0) {
    Signal s(dim, steps);
    s(0, coord) = amp;
    return s;
  }

 private:
  int dim_;
  std::vector<double> data_;
};

inline double l2_norm_sq(const Signal& s) {
  double acc = 0.0;
  for (double v : s.flat()) acc += v * v;
  return acc;
}

inline double l2_norm(const Signal& s) { return std::sqrt(l2_norm_sq(s)); }

// Single-owner causal operator: one output vector per input vector, in time
// order. reset() must restore the exact initial state.
class CausalOperator {
 public:
  virtual ~CausalOperator() = default;
  virtual int input_dim() const = 0;
  virtual int output_dim() const = 0;
  virtual void reset() = 0;
  virtual void step(std::span<const double> in, std::span<double> out) = 0;
};

inline Signal apply(CausalOperator& op, const Signal& in) {
  if (in.dim() != op.input_dim()) throw std::invalid_argument("apply: dimension mismatch");
  op.reset();
  Signal out(op.output_dim(), in.steps());
  for (int t = 0; t < in.steps(); ++t) op.step(in.at(t), out.at(t));
  return out;
}

struct GainEstimate {
  double value = 0.0;  // max over probes of ||op(w)|| / ||w||; lower bound on the true gain
  int probe_count = 0;
  int p = 2;
};

inline GainEstimate estimate_gain(CausalOperator& op, std::span<const Signal> probes) {
  GainEstimate g;
  for (const Signal& w : probes) {
    const double wn = l2_norm(w);
    if (wn == 0.0) throw std::invalid_argument("estimate_gain: zero-norm probe");
    const Signal y = apply(op, w);
    g.value = std::max(g.value, l2_norm(y) / wn);
    ++g.probe_count;
  }
  return g;
}

// Default probe set: canonical impulses at t = 0 plus random Gaussian
// signals. Impulses catch transient amplification, random probes catch
// resonance-like behavior.
inline std::vector<Signal> default_gain_probes(int dim, std::uint64_t seed, int random_count = 256,
                                               int horizon = 200) {
  std::vector<Signal> probes;
  probes.reserve(static_cast<std::size_t>(dim + random_count));
  for (int i = 0; i < dim; ++i) probes.push_back(Signal::impulse(dim, horizon + 1, i));
  Rng rng(seed);
  for (int k = 0; k < random_count; ++k) {
    probes.push_back(Signal::gaussian(dim, horizon + 1, 1.0, rng));
  }
  return probes;
}

// --- serialization ------------------------------------------------------

// Shortest decimal text that round-trips binary64 exactly (17 significant
// digits at most).
inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc()) throw std::invalid_argument("parse_double: bad value '" + s + "'");
  return v;
}

inline void to_csv(const Signal& s, std::ostream& os) {
  os << "t";
  for (int i = 0; i < s.dim(); ++i) os << ",v" << i;
  os << "\n";
  for (int t = 0; t < s.steps(); ++t) {
    os << t;
    for (int i = 0; i < s.dim(); ++i) os << "," << format_double(s(t, i));
    os << "\n";
  }
}

Signal from_csv(std::istream& is);
std::string to_json(const Signal& s);
Signal from_json(const std::string& text);

}  // namespace pbc::sig
