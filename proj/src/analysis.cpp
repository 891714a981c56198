#include "homlab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <set>

#include "homlab/errors.hpp"
#include "homlab/krylov.hpp"
#include "homlab/spectral.hpp"

namespace homlab {

namespace {

void check_sizes(const NseSolver& solver, const FlowState& s, const CorrectorPair& pair) {
  const StaggeredMesh& mesh = solver.mesh();
  if (s.rho.size() != mesh.cell_count() || s.u.size() != mesh.face_dofs())
    throw DomainError("flow state does not live on the solver grid");
  if (pair.r.size() != mesh.cell_count() || pair.w_tilde.size() != mesh.face_dofs())
    throw DomainError("corrector pair does not live on the solver grid");
  if (std::abs(pair.epsilon - solver.epsilon()) > 1e-14)
    throw DomainError("corrector pair was built for a different epsilon");
}

}  // namespace

double relative_energy(const NseSolver& solver, const FlowState& s, const CorrectorPair& pair) {
  check_sizes(solver, s, pair);
  const StaggeredMesh& mesh = solver.mesh();
  const NseParams& prm = solver.params();
  const FaceField rf = solver.face_density(s.rho);
  double kin = 0.0;
  for (const std::int32_t gi : mesh.open_faces()) {
    const double v = s.u[gi] - pair.w_tilde[gi];
    kin += rf[gi] * v * v;
  }
  double pot = 0.0;
  for (std::size_t c = 0; c < s.rho.size(); ++c) {
    if (!mesh.fluid()[c]) continue;
    if (!(pair.r[c] > 0.0)) throw DomainError("relative energy needs r > 0");
    pot += entropy_h(prm.law, s.rho[c], pair.r[c]);
  }
  const double vol = mesh.lattice().cell_volume();
  return (0.5 * std::pow(solver.epsilon(), prm.lambda) * kin + pot) * vol;
}

PairRate pair_rate(const PressureLaw& law, const CorrectorPair& p0, const CorrectorPair& p1, double dt) {
  if (!(dt > 0.0)) throw DomainError("pair rate needs a positive time step");
  PairRate rate;
  rate.w_t.resize(p0.w_tilde.size());
  for (std::size_t i = 0; i < rate.w_t.size(); ++i) rate.w_t[i] = (p1.w_tilde[i] - p0.w_tilde[i]) / dt;
  rate.Hr_t.resize(p0.r.size());
  for (std::size_t c = 0; c < rate.Hr_t.size(); ++c)
    rate.Hr_t[c] = (potential_H(law, p1.r[c], 1) - potential_H(law, p0.r[c], 1)) / dt;
  return rate;
}

PairRate zero_rate(const CorrectorPair& p) {
  return {FaceField(p.w_tilde.size(), 0.0), CellField(p.r.size(), 0.0)};
}

RemainderTerms remainder(const NseSolver& solver, const FlowState& s, const CorrectorPair& pair,
                         const PairRate& rate) {
  check_sizes(solver, s, pair);
  const StaggeredMesh& mesh = solver.mesh();
  const Lattice& lat = mesh.lattice();
  const NseParams& prm = solver.params();
  const int d = lat.dim;
  const double h = lat.h, vol = lat.cell_volume();
  const double eps = solver.epsilon();
  const double eps_l = std::pow(eps, prm.lambda);
  const FaceField& w = pair.w_tilde;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (!mesh.open()[i] && w[i] != 0.0)
      throw DomainError("comparison velocity is not admissible: nonzero on a closed face");

  const FaceField rf = solver.face_density(s.rho);
  FaceField f(mesh.face_dofs(), 0.0);
  if (prm.force) f = sample_force(lat, prm.force, s.t);
  RemainderTerms R{};
  const auto& open = mesh.open_faces();

  for (std::size_t k = 0; k < open.size(); ++k) {
    const std::int32_t gi = open[k];
    const int a = mesh.face_axis(gi);
    const std::int32_t L = mesh.face_lower_cell(gi), Rc = mesh.face_upper_cell(gi);
    const auto nb = mesh.neighbours(k);
    double conv = 0.0;
    for (int b = 0; b < d; ++b) {
      double ub, dw;
      if (b == a) {
        ub = s.u[gi];
        dw = (w[mesh.cell_face(Rc, a, 1)] - w[mesh.cell_face(L, a, 0)]) / (2.0 * h);
      } else {
        ub = 0.25 * (s.u[mesh.cell_face(L, b, 0)] + s.u[mesh.cell_face(L, b, 1)] + s.u[mesh.cell_face(Rc, b, 0)] +
                     s.u[mesh.cell_face(Rc, b, 1)]);
        const std::int32_t lo = nb[2 * b], hi = nb[2 * b + 1];
        const double wl = lo == StaggeredMesh::kWall ? -w[gi] : w[lo];
        const double wh = hi == StaggeredMesh::kWall ? -w[gi] : w[hi];
        dw = (wh - wl) / (2.0 * h);
      }
      conv += ub * dw;
    }
    R[0] += eps_l * rf[gi] * (rate.w_t[gi] + conv) * (w[gi] - s.u[gi]);
    R[2] += rf[gi] * f[gi] * (s.u[gi] - w[gi]);
    const double rL = pair.r[L], rR = pair.r[Rc];
    const double gH = (potential_H(prm.law, rR, 1) - potential_H(prm.law, rL, 1)) / h;
    R[3] += gH * (0.5 * (rL + rR) * w[gi] - rf[gi] * s.u[gi]);
  }

  FaceField diff(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) diff[i] = w[i] - s.u[i];
  R[1] = eps * eps * solver.viscous_form(w, diff) / vol;

  CellField divw(mesh.cell_count());
  mesh.divergence(w, divw);
  for (std::size_t c = 0; c < s.rho.size(); ++c) {
    if (!mesh.fluid()[c]) continue;
    R[3] += (pair.r[c] - s.rho[c]) * rate.Hr_t[c];
    R[4] -= divw[c] * (pressure_eval(prm.law, s.rho[c], 0) - pressure_eval(prm.law, pair.r[c], 0));
  }
  for (double& x : R) x *= vol;
  return R;
}

double relative_dissipation_rate(const NseSolver& solver, const FlowState& s, const CorrectorPair& pair) {
  check_sizes(solver, s, pair);
  FaceField v(s.u.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = s.u[i] - pair.w_tilde[i];
  const double eps = solver.epsilon();
  return eps * eps * solver.viscous_form(v, v);
}

RelativeEnergyMonitor::RelativeEnergyMonitor(const NseSolver& solver, double tolerance_constant) : solver_(&solver) {
  rep_.tolerance_constant = tolerance_constant;
  rep_.h = solver.mesh().lattice().h;
}

void RelativeEnergyMonitor::start(const FlowState& s, const CorrectorPair& pair) {
  E0_ = relative_energy(*solver_, s, pair);
  diss_ = 0.0;
  rint_ = {};
  rep_.times = {s.t};
  rep_.E = {E0_};
  rep_.dissipation = {0.0};
  rep_.remainder = {rint_};
  rep_.defect = {0.0};
  rep_.max_dt = 0.0;
}

void RelativeEnergyMonitor::advance(const FlowState& prev, const CorrectorPair& prev_pair, const FlowState& next,
                                    const CorrectorPair& next_pair, double dt) {
  if (rep_.times.empty()) throw DomainError("relative energy monitor used before start()");
  const PairRate rate = pair_rate(solver_->params().law, prev_pair, next_pair, dt);
  const RemainderTerms r0 = remainder(*solver_, prev, prev_pair, rate);
  const RemainderTerms r1 = remainder(*solver_, next, next_pair, rate);
  double rsum = 0.0;
  for (int i = 0; i < 5; ++i) {
    rint_[i] += 0.5 * dt * (r0[i] + r1[i]);
    rsum += rint_[i];
  }
  diss_ += dt * relative_dissipation_rate(*solver_, next, next_pair);
  const double E = relative_energy(*solver_, next, next_pair);
  const double defect = E + diss_ - E0_ - rsum;
  rep_.times.push_back(next.t);
  rep_.E.push_back(E);
  rep_.dissipation.push_back(diss_);
  rep_.remainder.push_back(rint_);
  rep_.defect.push_back(defect);
  rep_.max_dt = std::max(rep_.max_dt, dt);
  rep_.max_defect = std::max(rep_.max_defect, defect);
  rep_.max_abs_defect = std::max(rep_.max_abs_defect, std::abs(defect));
}

EnergyReport RelativeEnergyMonitor::finish() {
  const double scale = rep_.h + rep_.max_dt;
  rep_.constant = rep_.max_defect / scale;
  rep_.pass = rep_.max_defect <= rep_.tolerance_constant * scale;
  return rep_;
}

EnergyReport check_relen_inequality(const NseSolver& solver, const std::vector<FlowState>& traj,
                                    const std::vector<CorrectorPair>& pairs, double tolerance_constant) {
  if (traj.empty() || traj.size() != pairs.size()) throw ConfigError("one corrector pair per flow state is required");
  RelativeEnergyMonitor mon(solver, tolerance_constant);
  mon.start(traj[0], pairs[0]);
  for (std::size_t i = 1; i < traj.size(); ++i) {
    const double dt = traj[i].t - traj[i - 1].t;
    mon.advance(traj[i - 1], pairs[i - 1], traj[i], pairs[i], dt);
  }
  return mon.finish();
}

EnergyReport run_relen_check(const NseSolver& solver, const FlowState& initial, double T, const NseDtPolicy& policy,
                             const CellSolution& cell, const LimitTrajectory& limit, double tolerance_constant) {
  const PerforatedGrid& grid = solver.grid();
  const PressureLaw& law = solver.params().law;
  RelativeEnergyMonitor mon(solver, tolerance_constant);
  CorrectorPair prev_pair = build_correctors(cell, limit, grid, law, initial.t);
  mon.start(initial, prev_pair);
  NseDtPolicy pol = policy;
  pol.output_interval = 0.0;
  solve_nse(solver, initial, T, pol, [&](const FlowState& prev, const FlowState& next, double dt) {
    CorrectorPair next_pair = build_correctors(cell, limit, grid, law, next.t);
    mon.advance(prev, prev_pair, next, next_pair, dt);
    prev_pair = std::move(next_pair);
  });
  return mon.finish();
}

double norm_neg_sobolev_cells(const Lattice& lat, const CellField& g) {
  if (!lat.periodic) throw DomainError("spectral negative Sobolev norm needs a periodic lattice");
  if (g.size() != lat.cell_count()) throw DomainError("field does not match the lattice");
  return negative_sobolev_norm(lat, g);
}

NegSobolevResult norm_neg_sobolev(const Lattice& lat, const FaceField& g) {
  const int d = lat.dim;
  const auto off = lat.face_offsets();
  if (g.size() != off[d]) throw DomainError("face field does not match the lattice");
  NegSobolevResult res;
  double sum = 0.0;
  if (lat.periodic) {
    for (int a = 0; a < d; ++a) {
      const double v = negative_sobolev_norm(lat, std::span<const double>(g.data() + off[a], off[a + 1] - off[a]));
      sum += v * v;
    }
    res.value = std::sqrt(sum);
    return res;
  }
  res.approximate = true;
  Index3 n2 = lat.n;
  for (int a = 0; a < d; ++a) n2[a] *= 2;
  const Lattice ext = Lattice::make(d, n2, lat.h, lat.origin, true);
  CellField refl(ext.cell_count());
  for (int a = 0; a < d; ++a) {
    for (std::size_t e = 0; e < ext.cell_count(); ++e) {
      Index3 c = ext.cell_coords(e);
      for (int b = 0; b < d; ++b)
        if (c[b] >= lat.n[b]) c[b] = 2 * lat.n[b] - 1 - c[b];
      Index3 up = c;
      up[a] += 1;
      refl[e] = 0.5 * (g[off[a] + lat.face_index(a, c[0], c[1], c[2])] + g[off[a] + lat.face_index(a, up[0], up[1], up[2])]);
    }
    const double v = negative_sobolev_norm(ext, refl);
    sum += v * v;
  }
  res.value = std::sqrt(sum / std::pow(2.0, d));
  return res;
}

PoincareReport poincare_constant(const PerforatedGrid& grid, double tol, int max_iter) {
  const StaggeredMesh mesh = grid.mesh();
  PoincareReport rep;
  const bool solid = mesh.fluid_cell_count() < mesh.cell_count();
  rep.has_holes = grid.hole_count() > 0 && solid;
  if (!rep.has_holes) {
    if (grid.kind == DomainKind::torus)
      throw DomainError("torus without holes: the masked Laplacian is singular on constants");
    rep.warning = "no holes: constant is the Poincare constant of the box and does not scale with epsilon";
  }
  const std::size_t nf = mesh.face_dofs();
  const auto& open = mesh.open();
  FaceField x(nf, 0.0), y(nf, 0.0);
  for (const std::int32_t gi : mesh.open_faces()) x[gi] = 1.0;
  double nx = std::sqrt(dot(x, x));
  if (nx == 0.0) throw DomainError("no open faces");
  for (double& v : x) v /= nx;

  auto apply = [&](std::span<const double> in, std::span<double> out) { mesh.laplacian(in, out); };
  auto ident = [&](std::span<const double> r, std::span<double> z) {
    for (std::size_t i = 0; i < nf; ++i) z[i] = open[i] ? r[i] : 0.0;
  };
  double q_prev = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    std::fill(y.begin(), y.end(), 0.0);
    const KrylovResult kr = conjugate_gradient(apply, ident, x, y, 1e-12, 20000);
    if (!kr.converged) throw SolverError("inner solve of the inverse iteration did not converge", kr.residual);
    const double yy = dot(y, y);
    const double q = dot(y, x) / yy;
    rep.iterations = it;
    rep.lambda_min = q;
    const double ny = std::sqrt(yy);
    for (std::size_t i = 0; i < nf; ++i) x[i] = y[i] / ny;
    if (it > 1 && std::abs(q - q_prev) <= tol * q) break;
    q_prev = q;
  }
  rep.constant = 1.0 / std::sqrt(rep.lambda_min);
  return rep;
}

double annulus_poincare_estimate(double epsilon, double r0) {
  const double a = epsilon * r0;
  const double b = 2.0 * epsilon / std::sqrt(std::numbers::pi);
  if (!(a > 0.0 && a < b)) throw DomainError("annulus estimate needs 0 < eps r0 < cell radius");
  auto f = [&](double k) {
    return std::cyl_bessel_j(0.0, k * a) * std::cyl_neumann(1.0, k * b) -
           std::cyl_neumann(0.0, k * a) * std::cyl_bessel_j(1.0, k * b);
  };
  const double dk = std::numbers::pi / (b - a) / 400.0;
  double lo = dk, flo = f(lo);
  for (int i = 0; i < 4000; ++i) {
    const double hi = lo + dk, fhi = f(hi);
    if ((flo < 0.0) != (fhi < 0.0)) {
      double l = lo, r = hi;
      for (int j = 0; j < 200 && r - l > 1e-15 * r; ++j) {
        const double m = 0.5 * (l + r);
        if ((f(m) < 0.0) == (flo < 0.0)) l = m; else r = m;
      }
      return 1.0 / (0.5 * (l + r));
    }
    lo = hi;
    flo = fhi;
  }
  throw SolverError("no annulus eigenvalue found", 0.0);
}

TraceReport thickened_trace_constant(const PerforatedGrid& grid, const std::vector<double>& delta_sweep) {
  if (grid.kind != DomainKind::box) throw DomainError("thickened trace constant is defined for the box");
  const Lattice& lat = grid.lattice;
  const int d = lat.dim;
  const double vol = lat.cell_volume();
  const Vec3 L = grid.length;
  const double pi = std::numbers::pi;
  // value and |grad| of each dictionary function
  using Fn = std::function<std::pair<double, double>(const Vec3&)>;
  std::vector<Fn> dict{
      [](const Vec3&) { return std::pair{1.0, 0.0}; },
      [&](const Vec3& x) { return std::pair{grid.distance_to_boundary(x), 1.0}; },
      [](const Vec3& x) { return std::pair{1.0 + x[0], 1.0}; },
      [&](const Vec3& x) {
        double s = 0.0;
        for (int a = 0; a < d; ++a) s += x[a];
        return std::pair{std::exp(s), std::sqrt(double(d)) * std::exp(s)};
      },
      [&](const Vec3& x) {
        double v = 1.0, g2 = 0.0;
        for (int a = 0; a < d; ++a) v *= std::sin(pi * x[a] / L[a]);
        for (int a = 0; a < d; ++a) {
          double ga = pi / L[a] * std::cos(pi * x[a] / L[a]);
          for (int b = 0; b < d; ++b)
            if (b != a) ga *= std::sin(pi * x[b] / L[b]);
          g2 += ga * ga;
        }
        return std::pair{v, std::sqrt(g2)};
      },
      [&](const Vec3& x) {
        double v = 1.0, g2 = 0.0;
        for (int a = 0; a < d; ++a) v *= std::cos(pi * x[a] / L[a]);
        for (int a = 0; a < d; ++a) {
          double ga = -pi / L[a] * std::sin(pi * x[a] / L[a]);
          for (int b = 0; b < d; ++b)
            if (b != a) ga *= std::cos(pi * x[b] / L[b]);
          g2 += ga * ga;
        }
        return std::pair{v, std::sqrt(g2)};
      },
  };
  TraceReport rep;
  for (double delta : delta_sweep) {
    if (!(delta > 0.0)) throw ConfigError("collar width must be positive");
    TraceRow row;
    row.delta = delta;
    for (const Fn& fn : dict) {
      double collar = 0.0, full = 0.0;
      for (std::size_t c = 0; c < lat.cell_count(); ++c) {
        const Vec3 x = lat.cell_center(lat.cell_coords(c));
        const auto [v, g] = fn(x);
        full += (std::abs(v) + g) * vol;
        if (grid.distance_to_boundary(x) < delta) collar += std::abs(v) * vol;
      }
      row.ratio = std::max(row.ratio, collar / (delta * full));
    }
    rep.constant = std::max(rep.constant, row.ratio);
    rep.rows.push_back(row);
  }
  rep.bounded = true;
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    const double q = rep.rows[i].ratio / rep.rows[i - 1].ratio;
    if (!(q >= 0.5 && q <= 2.0)) rep.bounded = false;
  }
  return rep;
}

ErrorFunctional error_functional(const NseSolver& solver, const std::vector<FlowState>& traj,
                                 const std::vector<CorrectorPair>& pairs) {
  if (traj.empty() || traj.size() != pairs.size()) throw ConfigError("one corrector pair per flow state is required");
  const StaggeredMesh& mesh = solver.mesh();
  const Lattice& lat = mesh.lattice();
  ErrorFunctional ef;
  std::vector<double> vel(traj.size()), corr(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const FlowState& s = traj[i];
    const CorrectorPair& p = pairs[i];
    if (std::abs(s.t - p.t) > 1e-9 * std::max(1.0, std::abs(s.t)))
      throw ConfigError("flow state and corrector pair times are not aligned");
    check_sizes(solver, s, p);
    double dens = 0.0;
    for (std::size_t c = 0; c < s.rho.size(); ++c)
      if (mesh.fluid()[c]) dens += (s.rho[c] - p.rho[c]) * (s.rho[c] - p.rho[c]);
    ef.density_error = std::max(ef.density_error, dens * lat.cell_volume());
    FaceField g(s.u.size());
    for (std::size_t f = 0; f < g.size(); ++f) g[f] = s.u[f] - p.u[f];
    const NegSobolevResult ns = norm_neg_sobolev(lat, g);
    ef.approximate = ef.approximate || ns.approximate;
    vel[i] = ns.value * ns.value;
    for (std::size_t f = 0; f < g.size(); ++f) g[f] = s.u[f] - p.w_tilde[f];
    corr[i] = mesh.face_inner(g, g);
  }
  for (std::size_t i = 1; i < traj.size(); ++i) {
    const double dt = traj[i].t - traj[i - 1].t;
    if (!(dt > 0.0)) throw ConfigError("sample times must increase");
    ef.velocity_error += 0.5 * dt * (vel[i] + vel[i - 1]);
    ef.corrector_velocity_error += 0.5 * dt * (corr[i] + corr[i - 1]);
  }
  return ef;
}

TheoreticalRate theoretical_rate(double gamma, double lambda, DomainKind kind) {
  if (!(gamma > 1.0) || !(lambda > 0.0)) throw ConfigError("theoretical rate needs gamma > 1 and lambda > 0");
  TheoreticalRate tr;
  tr.lambda0 = gamma >= 3.0 ? 1.0 + 3.0 / gamma : 5.0 / 3.0 + 1.0 / gamma;
  const double cap = kind == DomainKind::torus ? 1.0 : 0.5;
  tr.beta = std::min({cap, 2.0 * lambda - 2.0, lambda - 3.0 / gamma});
  tr.boundary = std::abs(lambda - tr.lambda0) <= 1e-12 * tr.lambda0;
  tr.within_hypotheses = gamma >= 2.0 && lambda > tr.lambda0 && !tr.boundary;
  tr.extra_initial_condition = gamma >= 2.0 && gamma < 3.0;
  return tr;
}

RateReport fit_rate(std::vector<std::pair<double, double>> pairs) {
  std::set<double> distinct;
  for (const auto& [e, err] : pairs) {
    if (!(e > 0.0)) throw ConfigError("rate fit needs positive epsilon values");
    if (!(err > 0.0)) throw ConfigError("rate fit needs positive errors");
    distinct.insert(e);
  }
  if (distinct.size() < 3) throw ConfigError("rate fit needs at least three distinct epsilon values");
  std::sort(pairs.begin(), pairs.end(), [](const auto& l, const auto& r) { return l.first > r.first; });
  RateReport rep;
  rep.pairs = pairs;
  const double m = double(pairs.size());
  double sx = 0.0, sy = 0.0;
  for (const auto& [e, err] : pairs) {
    sx += std::log(e);
    sy += std::log(err);
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [e, err] : pairs) {
    const double dx = std::log(e) - mx, dy = std::log(err) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  rep.beta_emp = sxy / sxx;
  rep.intercept = my - rep.beta_emp * mx;
  rep.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  rep.monotone = true;
  for (std::size_t i = 1; i < pairs.size(); ++i)
    if (!(pairs[i].second < pairs[i - 1].second)) rep.monotone = false;
  return rep;
}

RateReport fit_rate(std::vector<std::pair<double, double>> pairs, double gamma, double lambda, DomainKind kind) {
  RateReport rep = fit_rate(std::move(pairs));
  rep.theory = theoretical_rate(gamma, lambda, kind);
  return rep;
}

}  // namespace homlab
