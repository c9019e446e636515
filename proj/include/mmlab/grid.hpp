// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "mmlab/errors.hpp"

namespace mmlab {

class ModelParams;

// Uniform (t,s) lattice with equal steps in both directions, so the
// transport operator d/dt + d/ds maps nodes onto nodes.
struct GridSpec {
  double dt = 0.0;    // time step, equal to the s step
  double horizon = 0.0;
  double s_max = 0.0; // truncation of the s-axis
  int nt = 0;         // number of time steps; rows are 0..nt
  int ns = 0;         // number of s nodes (index 0..ns-1)

  static GridSpec make(double dt, double horizon, double s_max);

  double t_at(int it) const { return dt * it; }
  double s_at(int js) const { return dt * js; }
  int nearest_t(double t) const;
  int nearest_s(double s) const;
  std::size_t num_nodes() const { return static_cast<std::size_t>(nt + 1) * static_cast<std::size_t>(ns); }
  bool same_as(const GridSpec& o) const {
    return dt == o.dt && horizon == o.horizon && s_max == o.s_max && nt == o.nt && ns == o.ns;
  }
};

// throws StabilityViolation unless dt * (sigma2_max + lambda_max) <= 1/2
void check_stability(const ModelParams& params, const GridSpec& grid);

enum class FieldTag {
  Theta,
  Omega,
  Zeta1,
  Zeta0,
  GPlus,
  GMinus,
  GTrdPlus,
  GTrdMinus,
  GJmpPlus,
  GJmpMinus,
  APlus,
  AMinus,
  BPlus,
  BMinus,
};

std::string field_tag_name(FieldTag tag);

// One scalar field over the (t,s) lattice, row-major in t.
class ValueGrid {
 public:
  ValueGrid(FieldTag tag, GridSpec grid) : tag_(tag), grid_(grid), v_(grid.num_nodes(), 0.0) {}

  FieldTag tag() const { return tag_; }
  const GridSpec& grid() const { return grid_; }

  double& at(int it, int js) { return v_[static_cast<std::size_t>(it) * grid_.ns + js]; }
  double at(int it, int js) const { return v_[static_cast<std::size_t>(it) * grid_.ns + js]; }

  // nearest-node evaluation; throws OutOfGrid for t outside [0, horizon]
  double value(double t, double s) const;

  const std::vector<double>& data() const { return v_; }
  std::vector<double>& data() { return v_; }

 private:
  FieldTag tag_;
  GridSpec grid_;
  std::vector<double> v_;
};

// q-indexed family of (t,s) lattices for the exact risk deformation.
class ZetaField {
 public:
  ZetaField(GridSpec grid, int q_max, double eta)
      : grid_(grid), q_max_(q_max), eta_(eta),
        v_(static_cast<std::size_t>(2 * q_max + 1) * grid.num_nodes(), 0.0) {}

  const GridSpec& grid() const { return grid_; }
  int q_max() const { return q_max_; }
  double eta() const { return eta_; }

  double& at(int it, int js, long q) { return v_[index(it, js, q)]; }
  double at(int it, int js, long q) const { return v_[index(it, js, q)]; }

  // lookup with the quadratic extension beyond |q| <= q_max:
  // zeta(t,s,q) ~ zeta(t,s,sign(q) q_max) + eta (q^2 - q_max^2)
  double at_extended(int it, int js, long q) const {
    if (q > q_max_) {
      return at(it, js, q_max_) + eta_ * (static_cast<double>(q) * q - static_cast<double>(q_max_) * q_max_);
    }
    if (q < -q_max_) {
      return at(it, js, -q_max_) + eta_ * (static_cast<double>(q) * q - static_cast<double>(q_max_) * q_max_);
    }
    return at(it, js, q);
  }

  double value(double t, double s, long q) const;

  const std::vector<double>& data() const { return v_; }
  std::vector<double>& data() { return v_; }

 private:
  std::size_t index(int it, int js, long q) const {
    return (static_cast<std::size_t>(q + q_max_)) * grid_.num_nodes() +
           static_cast<std::size_t>(it) * grid_.ns + js;
  }
  GridSpec grid_;
  int q_max_;
  double eta_;
  std::vector<double> v_;
};

}  // namespace mmlab
