// SPDX-License-Identifier: Apache-2.0
#include "mmlab/order_flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <sstream>

#include "mmlab/errors.hpp"

namespace mmlab {

double PricePath::s_before(double t) const {
  // last jump strictly before t, else the initial clock
  double last = t0 - s0;
  for (auto it = jumps.rbegin(); it != jumps.rend(); ++it) {
    if (it->time < t) {
      last = it->time;
      break;
    }
  }
  return t - last;
}

int PricePath::dir_before(double t) const {
  int dir = dir0;
  for (const auto& j : jumps) {
    if (j.time < t) {
      dir = j.direction;
    } else {
      break;
    }
  }
  return dir;
}

// integral of frozen lambda while the elapsed clock runs from s_a to s_b
static double frozen_lambda_integral(const TradeIntensitySpec& spec, double s_cap, double s_a, double s_b) {
  if (s_a >= s_cap) return spec.value(s_cap) * (s_b - s_a);
  if (s_b <= s_cap) return spec.integral(s_a, s_b);
  return spec.integral(s_a, s_cap) + spec.value(s_cap) * (s_b - s_cap);
}

double PricePath::intensity_integral(const ModelParams& params, double a, double b) const {
  if (b <= a) return 0.0;
  const auto& spec = params.lambda_spec();
  const double s_cap = params.s_max();
  double anchor = t0 - s0;  // time of the last reset before the current segment
  std::size_t k = 0;
  while (k < jumps.size() && jumps[k].time <= a) anchor = jumps[k++].time;
  double acc = 0.0;
  double lo = a;
  while (lo < b) {
    const double hi = (k < jumps.size() && jumps[k].time < b) ? jumps[k].time : b;
    acc += frozen_lambda_integral(spec, s_cap, lo - anchor, hi - anchor);
    if (k < jumps.size() && jumps[k].time == hi) anchor = jumps[k++].time;
    lo = hi;
  }
  return acc;
}

PricePath simulate_price_path(const ModelParams& params, double t0, int dir0, double s0, double horizon, Rng& rng) {
  PricePath path;
  path.t0 = t0;
  path.horizon = horizon;
  path.dir0 = dir0;
  path.s0 = s0;
  double t = t0;
  double s = s0;
  int dir = dir0;
  const double t_end = t0 + horizon;
  while (true) {
    const auto draw = params.sample_next_jump(dir, s, rng);
    if (t + draw.wait > t_end) break;
    t += draw.wait;
    dir = draw.direction;
    path.jumps.push_back({t, dir});
    s = 0.0;
  }
  return path;
}

double side_intensity(const ModelParams& params, int side, double s) {
  return 0.5 * (1.0 + side * params.rho()) * params.lambda_at(s);
}

std::vector<TradeEvent> simulate_trades(const PricePath& path, const ModelParams& params, Rng& rng) {
  std::vector<TradeEvent> trades;
  const double bound = params.lambda_max();
  if (bound <= 0.0) return trades;
  const double t_end = path.t0 + path.horizon;
  double t = path.t0;
  while (true) {
    t += rng.exponential(bound);
    if (t >= t_end) break;
    const double s = path.s_before(t);
    const double lam = params.lambda_at(s);
    if (lam > bound * (1.0 + 1e-12)) throw ThinningBoundViolated("lambda(s) exceeds the cached thinning bound");
    if (rng.uniform() * bound < lam) {
      const int gamma = rng.sign_bernoulli(0.5 * (1.0 + params.rho()));
      const int z = gamma * path.dir_before(t);
      trades.push_back({t, z, gamma});
    }
  }
  return trades;
}

int draw_fill(const FillDist& dist, Rng& rng) { return dist.sample(rng); }

EventTape make_event_tape(const PricePath& path, const std::vector<TradeEvent>& trades, const ModelParams& params,
                          double p0) {
  EventTape tape;
  tape.reserve(path.jumps.size() + trades.size());
  const double delta = params.delta();
  std::size_t ij = 0, it = 0;
  std::int64_t ticks = 0;
  while (ij < path.jumps.size() || it < trades.size()) {
    const bool jump_next =
        it >= trades.size() || (ij < path.jumps.size() && path.jumps[ij].time < trades[it].time);
    if (jump_next) {
      const auto& j = path.jumps[ij++];
      tape.push_back({j.time, TapeRow::Kind::Jump, j.direction, 0, path.s_before(j.time),
                      p0 + 2.0 * delta * static_cast<double>(ticks)});
      ticks += j.direction;
    } else {
      const auto& tr = trades[it++];
      tape.push_back({tr.time, TapeRow::Kind::Trade, tr.side, 0, path.s_before(tr.time),
                      p0 + 2.0 * delta * static_cast<double>(ticks)});
    }
  }
  return tape;
}

std::string tape_to_csv(const EventTape& tape) {
  std::string out = "time,kind,direction,fill,state_s,price\n";
  char buf[192];
  for (const auto& r : tape) {
    std::snprintf(buf, sizeof(buf), "%.17g,%s,%d,%d,%.17g,%.17g\n", r.time,
                  r.kind == TapeRow::Kind::Jump ? "JUMP" : "TRADE", r.direction, r.fill, r.state_s, r.price);
    out += buf;
  }
  return out;
}

EventTape tape_from_csv(const std::string& text) {
  EventTape tape;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty tape file");
  if (line.rfind("time,kind,direction,fill,state_s,price", 0) != 0) throw SchemaError("unexpected tape header");
  double prev_time = -std::numeric_limits<double>::infinity();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    TapeRow r{};
    char kind[16];
    if (std::sscanf(line.c_str(), "%lg,%15[^,],%d,%d,%lg,%lg", &r.time, kind, &r.direction, &r.fill, &r.state_s,
                    &r.price) != 6) {
      throw SchemaError("malformed tape row: " + line);
    }
    if (std::strcmp(kind, "JUMP") == 0) {
      r.kind = TapeRow::Kind::Jump;
    } else if (std::strcmp(kind, "TRADE") == 0) {
      r.kind = TapeRow::Kind::Trade;
    } else {
      throw SchemaError("unknown tape row kind: " + std::string(kind));
    }
    if (r.direction != +1 && r.direction != -1) throw SchemaError("tape direction must be +/-1");
    if (!(r.time > prev_time)) throw SchemaError("tape times must be strictly increasing");
    prev_time = r.time;
    tape.push_back(r);
  }
  return tape;
}

}  // namespace mmlab
