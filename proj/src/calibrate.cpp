// SPDX-License-Identifier: Apache-2.0
#include "mmlab/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "mmlab/errors.hpp"

namespace mmlab {

namespace {

struct JumpSeq {
  std::vector<double> times;
  std::vector<int> dirs;
};

JumpSeq jump_sequence(const EventTape& tape) {
  JumpSeq js;
  for (const auto& r : tape) {
    if (r.kind == TapeRow::Kind::Jump) {
      js.times.push_back(r.time);
      js.dirs.push_back(r.direction);
    }
  }
  return js;
}

double sample_se(double sum, double sum2, long n) {
  if (n < 2) return 0.0;
  const double mean = sum / n;
  const double var = std::max(0.0, (sum2 - n * mean * mean) / (n - 1.0));
  return std::sqrt(var / n);
}

RenewalDist empirical_cdf(std::vector<double> samples) {
  std::sort(samples.begin(), samples.end());
  std::vector<double> xs{0.0};
  std::vector<double> Fs{0.0};
  const double n = static_cast<double>(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i] <= xs.back()) continue;  // duplicates collapse into one step
    xs.push_back(samples[i]);
    Fs.push_back(static_cast<double>(i + 1) / n);
  }
  Fs.back() = 1.0;
  return RenewalDist::empirical(std::move(xs), std::move(Fs));
}

}  // namespace

AlphaEstimate estimate_alpha(const EventTape& tape) {
  const JumpSeq js = jump_sequence(tape);
  if (js.dirs.size() < 2) throw InsufficientData("alpha estimation needs at least two jumps");
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t k = 1; k < js.dirs.size(); ++k) {
    const double b = js.dirs[k] * js.dirs[k - 1];
    sum += b;
    sum2 += b * b;
  }
  const long n = static_cast<long>(js.dirs.size()) - 1;
  return {sum / n, sample_se(sum, sum2, n), n};
}

RenewalEstimate estimate_renewal(const EventTape& tape) {
  const JumpSeq js = jump_sequence(tape);
  if (js.times.size() < 2) throw InsufficientData("renewal estimation needs at least two jumps");
  std::vector<double> s_plus, s_minus, pooled;
  for (std::size_t k = 1; k < js.times.size(); ++k) {
    const double s = js.times[k] - js.times[k - 1];
    pooled.push_back(s);
    (js.dirs[k] * js.dirs[k - 1] > 0 ? s_plus : s_minus).push_back(s);
  }

  RenewalEstimate out;
  out.n_plus = static_cast<long>(s_plus.size());
  out.n_minus = static_cast<long>(s_minus.size());
  if (out.n_plus >= 2) out.f_plus = empirical_cdf(s_plus);
  if (out.n_minus >= 2) out.f_minus = empirical_cdf(s_minus);

  // bins on the pooled renewal-quantile axis, >= 30 events per bin where the
  // sample allows, sparse tail bins merged
  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  const long n = static_cast<long>(sorted.size());
  const int want = static_cast<int>(std::clamp<long>(n / 50, 1, 20));
  std::vector<double> edges{0.0};
  std::vector<double> qedges{0.0};
  for (int b = 1; b < want; ++b) {
    const double q = static_cast<double>(b) / want;
    const double s_edge = sorted[static_cast<std::size_t>(q * (n - 1))];
    if (s_edge > edges.back()) {
      edges.push_back(s_edge);
      qedges.push_back(q);
    }
  }
  edges.push_back(sorted.back());
  qedges.push_back(1.0);

  const std::size_t nb = edges.size() - 1;
  std::vector<HazardBin> bins(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    bins[b].s_lo = edges[b];
    bins[b].s_hi = edges[b + 1];
    bins[b].q_lo = qedges[b];
    bins[b].q_hi = qedges[b + 1];
  }
  for (std::size_t k = 1; k < js.times.size(); ++k) {
    const double s = js.times[k] - js.times[k - 1];
    const bool concordant = js.dirs[k] * js.dirs[k - 1] > 0;
    for (auto& bin : bins) {
      if (s <= bin.s_lo) break;
      bin.exposure += std::min(s, bin.s_hi) - bin.s_lo;
      if (s > bin.s_lo && s <= bin.s_hi) {
        (concordant ? bin.events_plus : bin.events_minus) += 1;
      }
    }
  }
  // merge trailing bins with too little data into their left neighbour
  for (std::size_t b = nb; b-- > 1;) {
    if (bins[b].events_plus + bins[b].events_minus < 30 && bins.size() > 1 && b == bins.size() - 1) {
      bins[b - 1].s_hi = bins[b].s_hi;
      bins[b - 1].q_hi = bins[b].q_hi;
      bins[b - 1].exposure += bins[b].exposure;
      bins[b - 1].events_plus += bins[b].events_plus;
      bins[b - 1].events_minus += bins[b].events_minus;
      bins.pop_back();
    }
  }
  for (auto& bin : bins) {
    if (bin.exposure > 0.0) {
      bin.h_plus = bin.events_plus / bin.exposure;
      bin.h_minus = bin.events_minus / bin.exposure;
      bin.se_plus = std::sqrt(static_cast<double>(bin.events_plus)) / bin.exposure;
      bin.se_minus = std::sqrt(static_cast<double>(bin.events_minus)) / bin.exposure;
    }
  }
  out.bins = std::move(bins);
  return out;
}

namespace {

struct LambdaData {
  std::vector<double> trade_s;    // elapsed time at each trade
  std::vector<double> seg_len;    // inter-jump segment lengths in the window
  double window = 0.0;
};

LambdaData lambda_data(const EventTape& tape) {
  LambdaData d;
  double last_jump = 0.0;
  bool seen_jump = false;
  double first_jump = 0.0;
  for (const auto& r : tape) {
    if (r.kind == TapeRow::Kind::Jump) {
      if (seen_jump) d.seg_len.push_back(r.time - last_jump);
      if (!seen_jump) first_jump = r.time;
      last_jump = r.time;
      seen_jump = true;
    } else if (seen_jump) {
      d.trade_s.push_back(r.time - last_jump);
    }
  }
  if (!seen_jump) throw InsufficientData("lambda estimation needs at least one jump");
  const double t_end = tape.back().time;
  if (t_end > last_jump) d.seg_len.push_back(t_end - last_jump);
  d.window = t_end - first_jump;
  if (d.trade_s.empty()) throw InsufficientData("lambda estimation needs trades after the first jump");
  return d;
}

// log-likelihood and gradient in (lam0, a, k). The compensator pieces use
// expm1/series forms: the naive 1 - exp(-k len) cancels to zero for tiny k
// and silently removes the penalty that keeps `a` finite.
double lambda_loglik(const LambdaData& d, double lam0, double a, double k, double grad[3]) {
  double ll = 0.0;
  double g0 = 0.0, ga = 0.0, gk = 0.0;
  for (double s : d.trade_s) {
    const double e = std::exp(-k * s);
    const double lam = lam0 + a * e;
    ll += std::log(lam);
    g0 += 1.0 / lam;
    ga += e / lam;
    gk += -a * s * e / lam;
  }
  for (double len : d.seg_len) {
    const double x = k * len;
    double comp, dcomp_dk;  // integral of exp(-k s) over the segment, and its k-derivative
    if (x < 1e-5) {
      comp = len * (1.0 - 0.5 * x + x * x / 6.0);
      dcomp_dk = len * len * (-0.5 + x / 3.0 - x * x / 8.0);
    } else {
      comp = -std::expm1(-x) / k;
      dcomp_dk = (len * std::exp(-x) - comp) / k;
    }
    ll -= lam0 * len + a * comp;
    g0 -= len;
    ga -= comp;
    gk -= a * dcomp_dk;
  }
  if (grad != nullptr) {
    grad[0] = g0;
    grad[1] = ga;
    grad[2] = gk;
  }
  return ll;
}

}  // namespace

LambdaFit estimate_lambda_mle(const EventTape& tape) {
  const LambdaData d = lambda_data(tape);
  const double n = static_cast<double>(d.trade_s.size());
  const double base_rate = n / d.window;
  double mean_seg = d.window / static_cast<double>(d.seg_len.size());

  // quasi-Newton (BFGS) in log parameters; 5 deterministic starts
  const double starts[5][3] = {{base_rate, base_rate, 1.0 / mean_seg},
                               {0.5 * base_rate, 2.0 * base_rate, 2.0 / mean_seg},
                               {base_rate, 0.1 * base_rate, 0.5 / mean_seg},
                               {0.8 * base_rate, base_rate, 1.0},
                               {1.2 * base_rate, 3.0 * base_rate, 3.0}};

  double best_ll = -std::numeric_limits<double>::infinity();
  double best_p[3] = {base_rate, 0.0, 1.0};
  double best_grad = std::numeric_limits<double>::infinity();
  bool any_converged = false;
  const double gtol = 1e-6 * n + 1e-8;

  for (const auto& st : starts) {
    double u[3] = {std::log(st[0]), std::log(st[1]), std::log(st[2])};
    double H[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};  // inverse-Hessian approx
    double p[3], gp[3];
    auto eval = [&](const double uu[3], double gu[3]) {
      const double l0 = std::exp(uu[0]), aa = std::exp(uu[1]), kk = std::exp(uu[2]);
      double gr[3];
      const double ll = lambda_loglik(d, l0, aa, kk, gr);
      gu[0] = gr[0] * l0;
      gu[1] = gr[1] * aa;
      gu[2] = gr[2] * kk;
      return ll;
    };
    double ll = eval(u, gp);
    bool converged = false;
    for (int iter = 0; iter < 300; ++iter) {
      const double gnorm = std::max({std::abs(gp[0]), std::abs(gp[1]), std::abs(gp[2])});
      if (gnorm <= gtol) {
        converged = true;
        break;
      }
      double dir[3];
      for (int i = 0; i < 3; ++i) {
        dir[i] = H[i][0] * gp[0] + H[i][1] * gp[1] + H[i][2] * gp[2];  // ascent
      }
      double step = 1.0;
      double u_new[3], g_new[3], ll_new = ll;
      bool moved = false;
      for (int bt = 0; bt < 40; ++bt) {
        for (int i = 0; i < 3; ++i) u_new[i] = u[i] + step * dir[i];
        if (u_new[1] < -40.0) u_new[1] = -40.0;  // a pinned to ~0
        ll_new = eval(u_new, g_new);
        if (std::isfinite(ll_new) && ll_new > ll + 1e-12 * std::abs(ll)) {
          moved = true;
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;
      // BFGS update of the inverse Hessian
      double svec[3], yvec[3];
      double sy = 0.0;
      for (int i = 0; i < 3; ++i) {
        svec[i] = u_new[i] - u[i];
        yvec[i] = -(g_new[i] - gp[i]);  // maximize: flip curvature sign
        sy += svec[i] * yvec[i];
      }
      if (sy > 1e-12) {
        double Hy[3];
        for (int i = 0; i < 3; ++i) Hy[i] = H[i][0] * yvec[0] + H[i][1] * yvec[1] + H[i][2] * yvec[2];
        double yHy = yvec[0] * Hy[0] + yvec[1] * Hy[1] + yvec[2] * Hy[2];
        for (int i = 0; i < 3; ++i) {
          for (int j = 0; j < 3; ++j) {
            H[i][j] += ((sy + yHy) * svec[i] * svec[j]) / (sy * sy) - (Hy[i] * svec[j] + svec[i] * Hy[j]) / sy;
          }
        }
      }
      for (int i = 0; i < 3; ++i) {
        u[i] = u_new[i];
        gp[i] = g_new[i];
      }
      ll = ll_new;
    }
    p[0] = std::exp(u[0]);
    p[1] = std::exp(u[1]);
    p[2] = std::exp(u[2]);
    const double gnorm = std::max({std::abs(gp[0]), std::abs(gp[1]), std::abs(gp[2])});
    if (ll > best_ll) {
      best_ll = ll;
      best_grad = gnorm;
      for (int i = 0; i < 3; ++i) best_p[i] = p[i];
    }
    any_converged = any_converged || (converged && ll >= best_ll - 1e-9 * std::abs(best_ll));
  }

  if (!any_converged) {
    throw OptimizerNotConverged("lambda MLE stalled; best iterate lam0=" + std::to_string(best_p[0]) +
                                " a=" + std::to_string(best_p[1]) + " k=" + std::to_string(best_p[2]) +
                                " |grad|=" + std::to_string(best_grad));
  }

  LambdaFit fit;
  fit.lam0 = best_p[0];
  fit.a = best_p[1];
  fit.k = best_p[2];
  fit.loglik = best_ll;
  fit.grad_norm = best_grad;
  fit.converged = true;
  fit.n_trades = static_cast<long>(d.trade_s.size());
  fit.window = d.window;

  // observed information: central-difference Hessian in the original scale
  double Hm[3][3];
  const double h[3] = {1e-4 * std::max(fit.lam0, 1e-3), 1e-4 * std::max(fit.a, 1e-3), 1e-4 * std::max(fit.k, 1e-3)};
  auto ll_at = [&](double x0, double x1, double x2) { return lambda_loglik(d, x0, x1, x2, nullptr); };
  const double pbar[3] = {fit.lam0, fit.a, fit.k};
  for (int i = 0; i < 3; ++i) {
    for (int j = i; j < 3; ++j) {
      double pp[3], pm[3], mp[3], mm[3];
      for (int c = 0; c < 3; ++c) pp[c] = pm[c] = mp[c] = mm[c] = pbar[c];
      pp[i] += h[i]; pp[j] += h[j];
      pm[i] += h[i]; pm[j] -= h[j];
      mp[i] -= h[i]; mp[j] += h[j];
      mm[i] -= h[i]; mm[j] -= h[j];
      Hm[i][j] = Hm[j][i] =
          (ll_at(pp[0], pp[1], pp[2]) - ll_at(pm[0], pm[1], pm[2]) - ll_at(mp[0], mp[1], mp[2]) +
           ll_at(mm[0], mm[1], mm[2])) /
          (4.0 * h[i] * h[j]);
    }
  }
  // invert -H by adjugate; singular information leaves the SEs at 0
  double I[3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) I[i][j] = -Hm[i][j];
  const double det = I[0][0] * (I[1][1] * I[2][2] - I[1][2] * I[2][1]) -
                     I[0][1] * (I[1][0] * I[2][2] - I[1][2] * I[2][0]) +
                     I[0][2] * (I[1][0] * I[2][1] - I[1][1] * I[2][0]);
  if (std::abs(det) > 1e-30) {
    const double c00 = (I[1][1] * I[2][2] - I[1][2] * I[2][1]) / det;
    const double c11 = (I[0][0] * I[2][2] - I[0][2] * I[2][0]) / det;
    const double c22 = (I[0][0] * I[1][1] - I[0][1] * I[1][0]) / det;
    if (c00 > 0.0) fit.se[0] = std::sqrt(c00);
    if (c11 > 0.0) fit.se[1] = std::sqrt(c11);
    if (c22 > 0.0) fit.se[2] = std::sqrt(c22);
  }
  return fit;
}

RhoEstimate estimate_rho(const EventTape& tape) {
  double sum = 0.0, sum2 = 0.0;
  long n = 0;
  int dir = 0;  // unknown before the first jump
  for (const auto& r : tape) {
    if (r.kind == TapeRow::Kind::Jump) {
      dir = r.direction;
    } else if (dir != 0) {
      const double g = r.direction * dir;
      sum += g;
      sum2 += g * g;
      ++n;
    }
  }
  if (n < 1) throw InsufficientData("rho estimation needs a trade with a preceding jump");
  return {sum / n, sample_se(sum, sum2, n), n};
}

VarthetaEstimate estimate_vartheta(const EventTape& tape, int lot_size) {
  if (lot_size < 1) throw SchemaError("lot size must be >= 1");
  const std::size_t L = static_cast<std::size_t>(lot_size);
  // counts indexed by side (0: +, 1: -) and size 1..L
  std::array<std::vector<double>, 2> e{std::vector<double>(L + 1, 0.0), std::vector<double>(L + 1, 0.0)};
  std::array<double, 2> E{0.0, 0.0};
  std::array<long, 2> trades{0, 0};

  int prev_dir = 0;
  bool in_interval = false;
  std::array<std::vector<double>, 2> e_k = e;
  std::array<double, 2> E_k{0.0, 0.0};
  for (const auto& r : tape) {
    if (r.kind == TapeRow::Kind::Trade) {
      if (!in_interval) continue;  // before the first jump
      const int side = r.direction * prev_dir;  // strong/weak relative to the last move
      const std::size_t si = side > 0 ? 0 : 1;
      E_k[si] += 1.0;
      trades[si] += 1;
      if (r.fill >= 1 && r.fill <= lot_size) e_k[si][static_cast<std::size_t>(r.fill)] += 1.0;
      continue;
    }
    // jump row closes the interval (T_{k-1}, T_k]
    if (in_interval) {
      const int b = r.direction * prev_dir;
      const std::size_t bi = b > 0 ? 0 : 1;
      // the big order itself prints as one more execution of the full lot on
      // side B_k; count it and take it back out, as the corrections dictate
      E_k[bi] += 1.0;
      if (r.fill == lot_size) e_k[bi][L] += 1.0;
      E_k[bi] -= 1.0;
      e_k[bi][L] -= (r.fill == lot_size ? 1.0 : 0.0);
      for (int s = 0; s < 2; ++s) {
        E[s] += E_k[s];
        for (std::size_t i = 1; i <= L; ++i) e[s][i] += e_k[s][i];
        E_k[s] = 0.0;
        std::fill(e_k[s].begin(), e_k[s].end(), 0.0);
      }
    }
    prev_dir = r.direction;
    in_interval = true;
  }

  VarthetaEstimate out;
  for (int s = 0; s < 2; ++s) {
    if (E[s] <= 0.0) {
      throw InsufficientData(std::string("no trades between jumps on the ") + (s == 0 ? "strong" : "weak") + " side");
    }
    std::vector<double> probs(L + 1, 0.0);
    double tail = 0.0;
    for (std::size_t i = 1; i <= L; ++i) {
      probs[i] = e[s][i] / E[s];
      tail += probs[i];
    }
    probs[0] = 1.0 - tail;
    (s == 0 ? out.probs_plus : out.probs_minus) = std::move(probs);
  }
  out.trades_plus = trades[0];
  out.trades_minus = trades[1];
  return out;
}

CalibrationReport calibrate(const EventTape& tape, std::optional<int> lot_size) {
  CalibrationReport rep;
  rep.alpha = estimate_alpha(tape);
  rep.renewal = estimate_renewal(tape);
  rep.lambda = estimate_lambda_mle(tape);
  rep.rho = estimate_rho(tape);
  if (lot_size.has_value()) rep.vartheta = estimate_vartheta(tape, *lot_size);
  return rep;
}

}  // namespace mmlab
