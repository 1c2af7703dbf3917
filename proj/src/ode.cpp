#include "lqmfg/ode.hpp"

#include <cmath>

namespace lqmfg {

double max_block_norm(const BlockState& y) {
  double nrm = 0.0;
  for (const auto& b : y) nrm = std::max(nrm, b.norm());
  return nrm;
}

bool blocks_finite(const BlockState& y) {
  for (const auto& b : y)
    if (!b.allFinite()) return false;
  return true;
}

namespace {

BlockState axpy(const BlockState& y, double c, const BlockState& k) {
  BlockState out = y;
  for (std::size_t b = 0; b < y.size(); ++b) out[b] += c * k[b];
  return out;
}

bool guard(const BlockState& y, double cap) {
  return blocks_finite(y) && max_block_norm(y) <= cap;
}

// One RK4 step from node k_from to node k_to (adjacent nodes; h carries the
// sign). Stage evaluations sit on the lattice: samples 2*k_from, the shared
// half sample, and 2*k_to. The half-step solution sample is the 4th-order
// cubic Hermite midpoint, which needs the derivative at the landing node;
// that evaluation doubles as the next step's first stage (FSAL).
struct Stepper {
  const LatticeRhs& rhs;
  double h;

  BlockState k1, k2, k3, k4;

  BlockState step(int j_from, int j_half, int j_to, const BlockState& y,
                  const BlockState& f_from) {
    k1 = f_from;
    k2 = rhs(j_half, axpy(y, 0.5 * h, k1));
    k3 = rhs(j_half, axpy(y, 0.5 * h, k2));
    k4 = rhs(j_to, axpy(y, h, k3));
    BlockState out = y;
    for (std::size_t b = 0; b < y.size(); ++b)
      out[b] += (h / 6.0) * (k1[b] + 2.0 * k2[b] + 2.0 * k3[b] + k4[b]);
    return out;
  }
};

BlockState hermite_mid(const BlockState& ya, const BlockState& fa,
                       const BlockState& yb, const BlockState& fb, double h) {
  BlockState mid = ya;
  for (std::size_t b = 0; b < ya.size(); ++b)
    mid[b] = 0.5 * (ya[b] + yb[b]) + (h / 8.0) * (fa[b] - fb[b]);
  return mid;
}

LatticeSolution run(const TimeGrid& grid, const LatticeRhs& rhs,
                    BlockState boundary, double norm_cap,
                    const SampleHook& hook, bool backward) {
  LatticeSolution out;
  out.samples.resize(grid.samples());
  const double h = backward ? -grid.dt() : grid.dt();
  Stepper st{rhs, h, {}, {}, {}, {}};

  const int start_node = backward ? grid.M : 0;
  if (hook) hook(boundary);
  if (!guard(boundary, norm_cap)) {
    out.blowup = BlowUp{grid.node_time(start_node), max_block_norm(boundary)};
    return out;
  }
  out.samples[2 * start_node] = boundary;

  BlockState y = std::move(boundary);
  BlockState f = rhs(2 * start_node, y);
  for (int step = 0; step < grid.M; ++step) {
    const int from = backward ? grid.M - step : step;
    const int to = backward ? from - 1 : from + 1;
    const int j_half = backward ? 2 * to + 1 : 2 * from + 1;

    BlockState y_next = st.step(2 * from, j_half, 2 * to, y, f);
    if (hook) hook(y_next);
    if (!guard(y_next, norm_cap)) {
      out.blowup = BlowUp{grid.node_time(to), max_block_norm(y_next)};
      return out;
    }
    BlockState f_next = rhs(2 * to, y_next);

    BlockState mid = hermite_mid(y, f, y_next, f_next, h);
    if (hook) hook(mid);
    if (!guard(mid, norm_cap)) {
      out.blowup = BlowUp{grid.sample_time(j_half), max_block_norm(mid)};
      return out;
    }
    out.samples[j_half] = std::move(mid);
    out.samples[2 * to] = y_next;
    y = std::move(y_next);
    f = std::move(f_next);
  }
  return out;
}

}  // namespace

LatticeSolution integrate_backward(const TimeGrid& grid, const LatticeRhs& rhs,
                                   BlockState terminal, double norm_cap,
                                   const SampleHook& hook) {
  return run(grid, rhs, std::move(terminal), norm_cap, hook, true);
}

LatticeSolution integrate_forward(const TimeGrid& grid, const LatticeRhs& rhs,
                                  BlockState initial, double norm_cap,
                                  const SampleHook& hook) {
  return run(grid, rhs, std::move(initial), norm_cap, hook, false);
}

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y,
                    double exact_floor) {
  SlopeFit fit;
  double ymax = 0.0;
  for (double v : y) ymax = std::max(ymax, v);
  if (ymax <= exact_floor) {
    fit.exact = true;
    return fit;
  }
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (y[i] > 0.0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  }
  fit.points = static_cast<int>(lx.size());
  if (fit.points < 2) return fit;
  double sx = 0, sy = 0;
  for (int i = 0; i < fit.points; ++i) {
    sx += lx[i];
    sy += ly[i];
  }
  const double mx = sx / fit.points, my = sy / fit.points;
  double sxx = 0, sxy = 0, syy = 0;
  for (int i = 0; i < fit.points; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (int i = 0; i < fit.points; ++i) {
    const double e = ly[i] - (fit.intercept + fit.slope * lx[i]);
    ss_res += e * e;
  }
  fit.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

}  // namespace lqmfg
