#include "csslab/cli.hpp"

#include <CLI11.hpp>

#include <boost/version.hpp>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "csslab/diagnostics.hpp"
#include "csslab/evolve.hpp"
#include "csslab/gauge.hpp"
#include "csslab/linops.hpp"
#include "csslab/modulation.hpp"
#include "csslab/profiles.hpp"

namespace csslab {

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(RunConfig, subcommand, m, eta, eta_list, n, r_max, core, degree, dt,
                                                t0, t1, max_iter, step_tol, snapshots, data, mode, file, B, shoot_tol,
                                                tau, zstar, alpha_star, dt_factor, sample_every, lyapunov, series, s,
                                                p, q, input, out, seed)

namespace {

const char* kVersion = "0.1.0";
const std::vector<std::string> kSubcommands{"profiles", "verify", "evolve", "instability", "envcheck", "report"};

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

std::vector<double> to_std(const RVec& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

json to_json(const RunConfig& c) {
  json j;
  nlohmann::to_json(j, c);
  return j;
}

RunConfig config_from_json(const json& j) {
  require(j.is_object(), "config must be a JSON object");
  const json known = to_json(RunConfig{});
  for (const auto& [key, value] : j.items())
    if (!known.contains(key)) throw ValidationError("config: unknown field '" + key + "'");
  RunConfig c;
  try {
    nlohmann::from_json(j, c);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  return c;
}

void validate(const RunConfig& c) {
  auto field = [](bool ok, const std::string& name, const std::string& what) {
    if (!ok) throw ValidationError("config field '" + name + "': " + what);
  };
  field(std::find(kSubcommands.begin(), kSubcommands.end(), c.subcommand) != kSubcommands.end(), "subcommand",
        "unknown subcommand '" + c.subcommand + "'");
  field(c.m >= 1, "m", "must be >= 1");
  field(c.eta >= 0 && std::isfinite(c.eta), "eta", "must be >= 0");
  for (double e : c.eta_list) field(e > 0 && std::isfinite(e), "eta_list", "entries must be > 0");
  field(c.degree >= 2, "degree", "must be >= 2");
  field(c.n >= c.degree && c.n % c.degree == 0, "n", "must be a positive multiple of degree");
  field(c.r_max >= 0 && c.core >= 0, "r_max/core", "must be nonnegative (0 selects the default)");
  field(c.dt > 0, "dt", "must be > 0");
  field(c.step_tol > 0, "step_tol", "must be > 0");
  field(c.max_iter >= 1, "max_iter", "must be >= 1");
  field(c.B >= 1, "B", "must be >= 1");
  field(c.shoot_tol > 0, "shoot_tol", "must be > 0");
  field(c.tau > 0, "tau", "must be > 0");
  field(c.alpha_star > 0, "alpha_star", "must be > 0");
  field(c.dt_factor > 0, "dt_factor", "must be > 0");
  field(c.sample_every >= 1, "sample_every", "must be >= 1");
  field(c.data == "q" || c.data == "s" || c.data == "qeta" || c.data == "zbump" || c.data == "file", "data",
        "must be one of q, s, qeta, zbump, file");
  field(c.mode == "css" || c.mode == "tilde" || c.mode == "potential", "mode", "must be css, tilde or potential");
  field(c.zstar == "none" || c.zstar == "file" || c.zstar.rfind("bump:", 0) == 0, "zstar",
        "must be none, file or bump:<alpha>");
  if (c.subcommand == "evolve") {
    field(c.t1 != c.t0, "t1", "must differ from t0");
    field(c.data != "s" || (c.t0 < 0 && c.t1 < 0), "t0/t1", "the explicit blow-up solution needs t < 0");
    field(c.data != "file" || !c.file.empty(), "file", "required for data = file");
  }
  if (c.subcommand == "instability") {
    field(!c.eta_list.empty(), "eta_list", "must not be empty");
    field(c.zstar != "file" || !c.file.empty(), "file", "required for zstar = file");
  }
  if (c.subcommand == "envcheck") field(!c.series.empty(), "series", "required");
  if (c.subcommand == "report") field(!c.input.empty(), "input", "required");
  field(!c.out.empty(), "out", "must not be empty");
}

RunConfig resolved(RunConfig c) {
  if (c.r_max == 0) c.r_max = c.subcommand == "evolve" ? 1e2 : c.subcommand == "instability" ? 50.0 : 1e3;
  if (c.core == 0) c.core = c.subcommand == "instability" ? 0.2 : 2.0;
  return c;
}

GridSpec grid_spec(const RunConfig& c) {
  const RunConfig r = resolved(c);
  return GridSpec{r.m, r.n, r.r_max, r.core, r.degree};
}

namespace {

// r^m sum_k c_k exp(-(r - mu_k)^2 / s_k): smooth, vanishing at the origin, rapidly decaying.
CVec random_field(const RadialGrid& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.0, 2.0), wid(0.3, 1.5);
  CVec f = CVec::Zero(g.size());
  for (int k = 0; k < 3; ++k) {
    const cplx c(u(rng), u(rng));
    const double mu = pos(rng), s = wid(rng);
    for (int i = 0; i < g.size(); ++i) {
      const double r = g.r()(i);
      f(i) += c * std::pow(r, g.m()) * std::exp(-(r - mu) * (r - mu) / s);
    }
  }
  return f;
}

}  // namespace

std::vector<IdentityCheck> identity_ledger(const RunConfig& cin) {
  RunConfig c = cin;
  c.subcommand = "verify";
  const GridPtr g = make_grid(grid_spec(c));
  const int m = c.m;
  const RadialGrid& gr = *g;
  std::vector<IdentityCheck> out;
  auto add = [&](const std::string& name, double res, double tol) { out.push_back({name, res, tol, res <= tol}); };

  const RadialField q = q_profile(g), lq = lambda_q_profile(g), psi = psi_profile(g);
  const RhoSolution rs = rho_solve(g);
  const CVec& qv = q.values;
  const double qn = gr.norm(qv);

  add("mass_Q", rel(gr.integrate<double>(qv.cwiseAbs2()), 8.0 * kPi * (m + 1)), 1e-8);
  const CVec qr = gr.deriv(qv);
  add("energy_Q", std::abs(energy_forms(gr, qv, m).bogomolnyi) / gr.inner(qr, qr), 1e-8);
  const GaugeData gd = gauge_data(gr, qv, m);
  const RVec half_q2 = 0.5 * qv.cwiseAbs2();
  add("a_zero_Q", (gd.a_zero - half_q2).cwiseAbs().maxCoeff() / half_q2.maxCoeff(), 1e-6);
  const double rmax = gr.r_max();
  // The missing charge beyond r_max puts A_theta(r_max) at -2(m+1) + 2(m+1) r_max^{-2m-2}; the
  // tolerance doubles that tail and allows for roundoff in the accumulated integral.
  add("a_theta_Q_rmax", std::abs(gd.a_theta(gr.size() - 1) + 2.0 * (m + 1)),
      4.0 * (m + 1) * std::pow(rmax, -2.0 * m - 2.0) + 1e-12);

  auto lq_apply = [&](const CVec& f) { return l_w(gr, qv, f, m); };
  add("dplus_Q", gr.norm(d_plus(gr, qv, qv, m)) / qn, 1e-6);
  add("LQ_LambdaQ", gr.norm(lq_apply(lq.values)) / gr.norm(lq.values), 1e-6);
  add("LQ_iQ", gr.norm(lq_apply(kI * qv)) / qn, 1e-6);
  add("LQstar_psi_minus_Q", gr.norm(l_w_star(gr, qv, psi.values, m) - qv) / gr.norm(psi.values), 1e-6);
  add("LQ_rho_minus_psi", gr.norm(lq_apply(rs.rho.values) - psi.values) / gr.norm(rs.rho.values), 1e-6);
  const LinearizedContext ctx = make_context(q);
  const CVec r2q = gr.r().cwiseAbs2().cast<cplx>().cwiseProduct(qv);
  add("Lcal_ir2Q_plus_4iLambdaQ", gr.norm(lcal_apply(ctx, CVec(kI * r2q)) + 4.0 * kI * lq.values) / gr.norm(r2q),
      1e-6);
  add("iLcal_rho_minus_iQ", gr.norm(kI * lcal_apply(ctx, rs.rho.values) - kI * qv) / gr.norm(rs.rho.values), 1e-6);
  add("rho_dot_Q", rel(inner_r(rs.rho, q), psi_norm_sq(m)), 1e-5);

  std::mt19937_64 rng(c.seed);
  // The phase e^{-i b r^2/4} is only resolved on a short grid; the identities are local.
  const GridPtr gc = make_grid(GridSpec{m, 2048, 20.0, 2.0, c.degree});
  const RadialField qc = q_profile(gc);
  const ConjugationResiduals cr = conjugation_check(0.1, qc, qc, make_field(gc, random_field(*gc, rng)));
  add("conjugation_bogomolnyi", cr.phase_bogomolnyi, 1e-6);
  add("conjugation_linearized", cr.phase_linearized, 1e-6);
  add("conjugation_algebraic", cr.algebraic, 1e-6);
  add("conjugation_ladder", conjugation_check(0.05, qc, qc, qc).ladder, 1e-6);

  const VirialWeight w = virial_weight(gr, std::numeric_limits<double>::infinity());
  double dual[5] = {0, 0, 0, 0, 0};
  for (int k = 0; k < 100; ++k) {
    std::vector<CVec> p;
    for (int j = 0; j < 6; ++j) p.push_back(random_field(gr, rng));
    auto pair = [&](const CVec& a, const CVec& b) { return gr.inner(a, b); };
    const double m40 = form_m40(gr, w, p[0], p[1], p[2], p[3]);
    const double m41a = form_m41(gr, w, p[0], p[1], p[2], p[3]);
    const double m41b = form_m41(gr, w, p[2], p[3], p[0], p[1]);
    const double m6a = form_m6(gr, w, p[0], p[1], p[2], p[3], p[4], p[5]);
    const double m6b = form_m6(gr, w, p[0], p[1], p[4], p[5], p[2], p[3]);
    const double res[5] = {
        rel(pair(n30(gr, p[0], p[1], p[2]), p[3]), -m40),
        rel(pair(n31(gr, m, p[0], p[1], p[2]), p[3]), -m * m41a),
        rel(pair(n32(gr, m, p[0], p[1], p[2]), p[3]), -m * m41b),
        rel(pair(n51(gr, p[0], p[1], p[2], p[3], p[4]), p[5]), 0.25 * m6a),
        rel(pair(n52(gr, p[0], p[1], p[2], p[3], p[4]), p[5]), 0.5 * m6b),
    };
    for (int i = 0; i < 5; ++i) dual[i] = std::max(dual[i], res[i]);
  }
  const char* names[5] = {"duality_n30", "duality_n31", "duality_n32", "duality_n51", "duality_n52"};
  for (int i = 0; i < 5; ++i) add(names[i], dual[i], 1e-8);

  const double eta = c.eta > 0 ? c.eta : 0.01;
  const QEtaSolution qs = q_eta_solve(g, eta, c.B, c.shoot_tol);
  add("q_eta_second_order_residual", qs.residual_rel, 1e-6);
  add("theta_eta_mass_vs_connection", std::abs(qs.theta_eta - qs.theta_ode), 1e-6);
  return out;
}

namespace {

json ledger_json(const std::vector<IdentityCheck>& l) {
  json a = json::array();
  for (const auto& e : l)
    a.push_back({{"identity", e.name}, {"residual", num(e.residual)}, {"tolerance", e.tolerance}, {"pass", e.pass}});
  return a;
}

int cmd_profiles(const RunConfig& c, const std::filesystem::path& dir, json& summary, std::ostream& log) {
  const GridPtr g = make_grid(grid_spec(c));
  const ProfileBundle b = build_profiles(g, c.eta, c.B, c.shoot_tol);
  CsvTable t;
  t.add("r", g->r());
  t.add("Q", RVec(b.Q.values.real()));
  t.add("LambdaQ", RVec(b.LambdaQ.values.real()));
  t.add("psi", RVec(b.psi.values.real()));
  t.add("rho", RVec(b.rho.values.real()));
  t.add("rho_tilde", b.rho_tilde);
  t.add("Q_eta", RVec(b.Q_eta.values.real()));
  t.add("P_eta", RVec(b.P_eta.values.real()));
  write_csv(dir / "profiles.csv", t);
  const double mass = g->integrate<double>(b.Q.values.cwiseAbs2());
  const double expected = 8.0 * kPi * (c.m + 1);
  summary = {{"mass_Q", mass},
             {"mass_Q_expected", expected},
             {"mass_Q_rel_error", rel(mass, expected)},
             {"energy_Q", energy_forms(*g, b.Q.values, c.m).bogomolnyi},
             {"rho_dot_Q", inner_r(b.rho, b.Q)},
             {"psi_norm_sq", psi_norm_sq(c.m)},
             {"eta", c.eta},
             {"theta_eta", b.theta_eta},
             {"R_eta", num(b.R_eta)},
             {"q_eta_residual", b.q_eta_residual}};
  log << "profiles: M[Q] = " << fmt17(mass) << " (expected " << fmt17(expected) << ")\n";
  return rel(mass, expected) <= 1e-8 ? kExitPass : kExitNumerical;
}

int cmd_verify(const RunConfig& c, const std::filesystem::path& dir, json& summary, std::ostream& log) {
  const std::vector<IdentityCheck> l = identity_ledger(c);
  bool ok = true;
  for (const auto& e : l) {
    ok = ok && e.pass;
    log << (e.pass ? "PASS " : "FAIL ") << e.name << " residual " << fmt17(e.residual) << " tol " << e.tolerance
        << '\n';
  }
  summary = {{"m", c.m}, {"all_pass", ok}, {"ledger", ledger_json(l)}};
  write_json(dir / "ledger.json", summary["ledger"]);
  return ok ? kExitPass : kExitNumerical;
}

int cmd_evolve(const RunConfig& c, const std::filesystem::path& dir, json& summary, std::ostream& log) {
  const GridPtr g = make_grid(grid_spec(c));
  const int m = c.m;
  double theta = 0;
  if (c.data == "qeta") theta = QEtaShooter(m, c.eta).theta_from_connection();
  auto exact = [&](double t) -> std::optional<CVec> {
    if (c.data == "s") return s_explicit(t, g).values;
    if (c.data == "qeta") return modulated_profile(*g, m, c.eta, theta, t);
    if (c.data == "q") return q_profile(g).values;
    return std::nullopt;
  };
  RadialField u0 = c.data == "zbump" ? z_bump(g, 1e-2)
                   : c.data == "file" ? read_field(c.file, g)
                                      : make_field(g, *exact(c.t0));
  if (c.data == "zbump" && c.zstar.rfind("bump:", 0) == 0) u0 = z_bump(g, std::stod(c.zstar.substr(5)));
  StepOptions opt;
  opt.max_iter = c.max_iter;
  opt.tol = c.step_tol;
  const bool zmode = c.mode != "css";
  const ZMode zm = c.mode == "potential" ? ZMode::potential : ZMode::tilde;
  EvolutionState s;
  ZState zs;
  if (zmode)
    zs = make_zstate(u0, c.t0, zm, opt);
  else
    s = make_state(u0, c.t0, opt);

  const long steps = std::lround(std::abs(c.t1 - c.t0) / c.dt);
  require(steps >= 1, "time span shorter than one step");
  const double h = (c.t1 - c.t0) / steps;
  std::vector<MonitorRecord> mon;
  auto current = [&]() -> const CVec& { return zmode ? zs.z.values : s.u.values; };
  auto record = [&](double t) { mon.push_back(monitors(*g, current(), m, t)); };
  record(c.t0);
  std::vector<double> snaps = c.snapshots;
  std::sort(snaps.begin(), snaps.end(), [&](double a, double b) { return h > 0 ? a < b : a > b; });
  std::size_t next_snap = 0;
  int snap_id = 0, unconverged = 0;
  double max_flux = 0;
  for (long k = 1; k <= steps; ++k) {
    StepStats st;
    if (zmode) {
      zs = step_zcss(std::move(zs), h, zm);
      st = zs.last;
    } else {
      s = step_css(std::move(s), h);
      st = s.last;
    }
    if (!st.converged) ++unconverged;
    const double t = c.t0 + k * h;
    record(t);
    max_flux = std::max(max_flux, std::abs(mon.back().flux));
    while (next_snap < snaps.size() && (h > 0 ? snaps[next_snap] <= t + 0.5 * std::abs(h)
                                               : snaps[next_snap] >= t - 0.5 * std::abs(h))) {
      CsvTable sn;
      sn.add("r", g->r());
      sn.add("re", RVec(current().real()));
      sn.add("im", RVec(current().imag()));
      write_csv(dir / ("snapshot_" + std::to_string(snap_id++) + ".csv"), sn);
      ++next_snap;
    }
  }
  CsvTable t;
  std::vector<double> tt, mm, ee, ph, wm, fl;
  for (const auto& r : mon) {
    tt.push_back(r.t);
    mm.push_back(r.mass);
    ee.push_back(r.energy);
    ph.push_back(r.phi);
    wm.push_back(r.weighted_mass);
    fl.push_back(r.flux);
  }
  t.add("t", tt);
  t.add("M", mm);
  t.add("E", ee);
  t.add("Phi", ph);
  t.add("weighted_mass", wm);
  t.add("flux_at_rmax", fl);
  write_csv(dir / "monitors.csv", t);
  const double m0 = mon.front().mass;
  double mass_drift = 0, min_energy = mon.front().energy;
  for (const auto& r : mon) {
    mass_drift = std::max(mass_drift, std::abs(r.mass - m0) / (m0 > 0 ? m0 : 1.0));
    min_energy = std::min(min_energy, r.energy);
  }
  if (max_flux > 1e-6 * std::max(m0, 1e-300)) warn("outgoing flux at r_max exceeds 1e-6 of the mass");
  summary = {{"steps", steps},
             {"dt", h},
             {"mass_drift", mass_drift},
             {"energy_initial", mon.front().energy},
             {"energy_final", mon.back().energy},
             {"energy_min", min_energy},
             {"max_flux_at_rmax", max_flux},
             {"unconverged_steps", unconverged}};
  if (!zmode) {
    if (const auto ex = exact(c.t1)) {
      const double err = g->norm(s.u.values - *ex) / g->norm(*ex);
      summary["rel_error_vs_exact"] = err;
      log << "evolve: relative L2 error vs closed form " << fmt17(err) << '\n';
    }
  }
  log << "evolve: " << steps << " steps, mass drift " << fmt17(mass_drift) << '\n';
  return kExitPass;
}

int cmd_instability(const RunConfig& c, const std::filesystem::path& dir, json& summary, std::ostream& log) {
  InstabilityConfig ic;
  ic.m = c.m;
  ic.etas = c.eta_list;
  ic.tau = c.tau;
  ic.grid = grid_spec(c);
  ic.dt_factor = c.dt_factor;
  ic.sample_every = c.sample_every;
  ic.alpha_star = c.alpha_star;
  ic.lyapunov = c.lyapunov;
  ic.step.tol = c.step_tol;
  if (c.zstar == "none")
    ic.alpha = 0.0;
  else if (c.zstar == "file")
    ic.zstar_file = c.file;
  else
    ic.alpha = std::stod(c.zstar.substr(5));
  const InstabilityReport rep = instability_experiment(ic);
  json runs = json::array();
  for (const InstabilityRun& r : rep.runs) {
    for (const auto& [tag, tr] : {std::pair<const char*, const ModulationTrack*>{"fwd", &r.forward},
                                  std::pair<const char*, const ModulationTrack*>{"bwd", &r.backward}}) {
      CsvTable t;
      std::vector<std::vector<double>> cols(15);
      for (const TrackSample& s : tr->samples) {
        const double v[15] = {s.t,       s.b,          s.lambda,     s.gamma,          s.eps_l2,
                              s.eps_h1,  s.eps_dot_qb, s.e_qd,       s.phi_a,          s.lyapunov_i,
                              s.ortho_residual, s.law_residual, s.theta_cor, s.gamma_cor, s.gamma - r.theta_eta * std::atan(s.t / r.eta)};
        for (int k = 0; k < 15; ++k) cols[k].push_back(v[k]);
      }
      const char* names[15] = {"t",         "b",          "lambda",      "gamma",          "eps_l2",
                               "eps_h1",    "eps_dot_Qb", "E_qd",        "Phi_A",          "I",
                               "ortho_res", "law_res",    "theta_cor",   "gamma_cor",      "gamma_minus_exact"};
      for (int k = 0; k < 15; ++k) t.add(names[k], cols[k]);
      std::ostringstream name;
      name << "track_eta" << fmt17(r.eta) << "_" << tag << ".csv";
      write_csv(dir / name.str(), t);
    }
    runs.push_back({{"eta", r.eta},
                    {"theta_eta", r.theta_eta},
                    {"delta_gamma", num(r.delta_gamma)},
                    {"closed_form_zstar0", r.closed_form},
                    {"max_lambda_over_bracket_dev", r.max_lambda_dev},
                    {"max_b_plus_t", r.max_b_dev},
                    {"lost", r.forward.lost || r.backward.lost},
                    {"message", r.forward.message + r.backward.message},
                    {"hypothesis_H", {{"pass", r.h.pass},
                                      {"origin_exponent", num(r.h.origin_exponent)},
                                      {"hk_norm", r.h.hk_norm},
                                      {"margin", r.h.margin}}}});
    log << "instability: eta " << fmt17(r.eta) << " delta_gamma " << fmt17(r.delta_gamma) << '\n';
  }
  summary = {{"target", rep.target},
             {"tau", rep.tau},
             {"monotone", rep.monotone},
             {"extrapolated", num(rep.extrapolated)},
             {"runs", runs}};
  write_json(dir / "report.json", summary);
  return kExitPass;
}

int cmd_envcheck(const RunConfig& c, const std::filesystem::path& dir, json& summary, std::ostream& log) {
  const TimeSeries s = read_series(c.series);
  CsvTable t;
  std::vector<double> tm, blocks;
  for (double ti : s.times) {
    const TMaxResult r = t_maximal_detail(s, ti, c.eta, c.s);
    tm.push_back(r.value);
    blocks.push_back(r.last_block);
  }
  t.add("t", s.times);
  t.add("value", s.values);
  t.add("T", tm);
  t.add("last_block", blocks);
  write_csv(dir / "tmax.csv", t);
  const EnvReport rep = env_properties_check(s, c.eta, c.s, c.p, c.q);
  summary = {{"domination", rep.domination},           {"domination_max", rep.domination_max},
             {"idempotence_min", num(rep.idempotence_min)}, {"idempotence_max", num(rep.idempotence_max)},
             {"weight_min", num(rep.weight_min)},        {"weight_max", num(rep.weight_max)},
             {"integral_max", num(rep.integral_max)},    {"evaluated", rep.evaluated}};
  log << "envcheck: domination " << (rep.domination ? "holds" : "fails") << '\n';
  return rep.domination ? kExitPass : kExitNumerical;
}

int cmd_report(const RunConfig& c, const std::filesystem::path& dir, json& summary, std::ostream& log) {
  const std::filesystem::path in(c.input);
  require(std::filesystem::is_directory(in), "report input is not a directory: " + c.input);
  std::vector<std::filesystem::path> found;
  for (const auto& e : std::filesystem::recursive_directory_iterator(in))
    if (e.path().filename() == "summary.json" && e.path().parent_path() != dir) found.push_back(e.path());
  std::sort(found.begin(), found.end());
  json runs = json::array();
  for (const auto& p : found) {
    json entry{{"path", std::filesystem::relative(p.parent_path(), in).string()}, {"summary", read_json(p)}};
    const auto man = p.parent_path() / "manifest.json";
    if (std::filesystem::exists(man)) {
      const json mj = read_json(man);
      entry["subcommand"] = mj["config"].value("subcommand", "");
      entry["exit_code"] = mj.value("exit_code", -1);
    }
    log << "report: " << entry["path"].get<std::string>() << '\n';
    runs.push_back(entry);
  }
  summary = {{"runs", runs}, {"count", runs.size()}};
  write_json(dir / "report.json", summary);
  return kExitPass;
}

}  // namespace

int run(const RunConfig& cin, std::ostream& log) {
  const RunConfig c = resolved(cin);
  validate(c);
  const std::filesystem::path dir(c.out);
  std::filesystem::create_directories(dir);
  const auto start = std::chrono::steady_clock::now();
  json summary = json::object();
  int code = kExitPass;
  std::string error;
  try {
    if (c.subcommand == "profiles") code = cmd_profiles(c, dir, summary, log);
    else if (c.subcommand == "verify") code = cmd_verify(c, dir, summary, log);
    else if (c.subcommand == "evolve") code = cmd_evolve(c, dir, summary, log);
    else if (c.subcommand == "instability") code = cmd_instability(c, dir, summary, log);
    else if (c.subcommand == "envcheck") code = cmd_envcheck(c, dir, summary, log);
    else code = cmd_report(c, dir, summary, log);
  } catch (const ValidationError& e) {
    code = kExitValidation;
    error = e.what();
  } catch (const NumericalError& e) {
    code = kExitNumerical;
    error = e.what();
  } catch (const std::exception& e) {
    code = kExitRuntime;
    error = e.what();
  }
  if (!error.empty()) log << "error: " << error << '\n';
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_json(dir / "summary.json", summary);
  json sums = json::object();
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() != "manifest.json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) sums[f.filename().string()] = hex(file_checksum(f));
  const json manifest{{"config", to_json(c)},
                      {"versions",
                       {{"csslab", kVersion},
                        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                      "." + std::to_string(EIGEN_MINOR_VERSION)},
                        {"boost", BOOST_LIB_VERSION},
                        {"compiler", __VERSION__}}},
                      {"checksums", sums},
                      {"wall_time_s", wall},
                      {"seed", c.seed},
                      {"exit_code", code},
                      {"error", error}};
  write_json(dir / "manifest.json", manifest);
  return code;
}

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"csslab: self-dual Chern-Simons-Schroedinger numerical lab"};
  app.require_subcommand(1);
  RunConfig c;
  // A config file seeds every field; explicit flags override it.
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    std::string path;
    if (a == "--config" && i + 1 < argc) path = argv[i + 1];
    if (a.rfind("--config=", 0) == 0) path = a.substr(9);
    if (!path.empty()) {
      try {
        c = config_from_json(read_json(path));
      } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
      }
    }
  }
  std::string config_path;
  std::string eta_list_str;
  auto common = [&](CLI::App* sc) {
    sc->add_option("--config", config_path, "JSON config document");
    sc->add_option("--m", c.m, "equivariance index (>= 1)");
    sc->add_option("--n", c.n, "grid nodes (multiple of the degree)");
    sc->add_option("--rmax", c.r_max, "outer radius (0: subcommand default)");
    sc->add_option("--core", c.core, "uniform core radius (0: subcommand default)");
    sc->add_option("--degree", c.degree, "element polynomial degree");
    sc->add_option("--out", c.out, "output directory");
    sc->add_option("--seed", c.seed, "seed for randomized checks");
  };
  CLI::App* prof = app.add_subcommand("profiles", "build Q, Lambda Q, psi, rho, Q_eta");
  common(prof);
  prof->add_option("--eta", c.eta, "eta >= 0");
  prof->add_option("--B", c.B, "shooting constant");
  prof->add_option("--shoot-tol", c.shoot_tol, "profile ODE tolerance");
  CLI::App* ver = app.add_subcommand("verify", "identity ledger");
  common(ver);
  ver->add_option("--eta", c.eta, "eta for the modified profile check");
  CLI::App* evo = app.add_subcommand("evolve", "time evolution with monitors");
  common(evo);
  evo->add_option("--data", c.data, "q | s | qeta | zbump | file");
  evo->add_option("--mode", c.mode, "css | tilde | potential");
  evo->add_option("--file", c.file, "field CSV (r, re, im) for data = file");
  evo->add_option("--eta", c.eta, "eta for data = qeta");
  evo->add_option("--t0", c.t0, "start time");
  evo->add_option("--t1", c.t1, "end time");
  evo->add_option("--dt", c.dt, "time step");
  evo->add_option("--max-iter", c.max_iter, "Picard cap per step");
  evo->add_option("--step-tol", c.step_tol, "midpoint residual tolerance");
  evo->add_option("--snapshots", c.snapshots, "snapshot times")->delimiter(',');
  evo->add_option("--zstar", c.zstar, "bump:alpha amplitude for data = zbump");
  CLI::App* ins = app.add_subcommand("instability", "rotational instability experiment");
  common(ins);
  ins->add_option("--eta-list", eta_list_str, "comma-separated decreasing eta values");
  ins->add_option("--zstar", c.zstar, "none | file | bump:alpha");
  ins->add_option("--file", c.file, "z* CSV (r, re, im) for zstar = file");
  ins->add_option("--tspan", c.tau, "tau: runs cover [-tau, tau]");
  ins->add_option("--dt-factor", c.dt_factor, "dt = c (eta^2 + t^2)");
  ins->add_option("--sample-every", c.sample_every, "steps between decompositions");
  ins->add_option("--alpha-star", c.alpha_star, "smallness threshold for hypothesis (H)");
  ins->add_flag("--lyapunov", c.lyapunov, "evaluate Lyapunov functionals along the track");
  CLI::App* env = app.add_subcommand("envcheck", "time maximal function checks on a CSV series");
  common(env);
  env->add_option("--series", c.series, "CSV with columns t, value")->required();
  env->add_option("--eta", c.eta, "eta >= 0");
  env->add_option("--s", c.s, "weight exponent");
  env->add_option("--p", c.p, "integral exponent (<= 0 for inf)");
  env->add_option("--q", c.q, "power weight");
  CLI::App* rep = app.add_subcommand("report", "collect run summaries");
  common(rep);
  rep->add_option("--input", c.input, "directory of runs")->required();

  if (argc <= 1) {
    out << app.help();
    return kExitValidation;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitValidation;
  }
  c.subcommand = app.get_subcommands().front()->get_name();
  if (!eta_list_str.empty()) {
    c.eta_list.clear();
    std::stringstream ss(eta_list_str);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        c.eta_list.push_back(std::stod(item));
      } catch (const std::exception&) {
        err << "error: config field 'eta_list': not a number '" << item << "'\n";
        return kExitValidation;
      }
    }
  }
  try {
    validate(resolved(c));
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  try {
    return run(c, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace csslab
