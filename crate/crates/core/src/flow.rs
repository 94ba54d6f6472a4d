//! Hermitian-Yang-Mills metric flow, Yang-Mills connection flow, and the
//! monitors tracked along them.

use crate::bundle::BundleModel;
use crate::curvature::{
    chern_curvature, chern_numbers, connection_curvature, dstar_f, lambda_curvature, real_one_form_norm2,
    unitary_connection, Connection, CurvatureBundle, RealCurvature,
};
use crate::error::{Error, Result};
use crate::field::MatrixField;
use crate::functionals::{approx_critical_deviation, hym_alpha_n_spectrum, sigma_distance};
use crate::lattice::{integrate, TorusLattice};
use crate::linalg;
use crate::C64;

/// A hermitian metric relative to `H₀ = I` along the metric flow.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricState {
    pub h: MatrixField,
    pub t: f64,
    /// Sum of all determinant corrections applied so far.
    pub log_det_shift: f64,
}

impl MetricState {
    /// Starts a flow at `h`, rescaling it so that the grid mean of
    /// `log det h` vanishes.
    pub fn new(mut h: MatrixField) -> Result<Self> {
        hermitize_field(&mut h);
        let shift = normalize_det(&mut h)?;
        Ok(Self { h, t: 0.0, log_det_shift: shift })
    }

    pub fn identity(model: &BundleModel) -> Self {
        let h = MatrixField::identity(model.lattice(), model.rank(), model.twist());
        Self { h, t: 0.0, log_det_shift: 0.0 }
    }

    pub fn mean_log_det(&self) -> Result<f64> {
        mean_log_det(&self.h)
    }
}

pub fn hermitize_field(h: &mut MatrixField) {
    let r = h.rows();
    for p in 0..h.npts() {
        linalg::hermitize(h.at_mut(p), r);
    }
}

fn mean_log_det(h: &MatrixField) -> Result<f64> {
    let r = h.rows();
    let mut s = 0.0;
    for p in 0..h.npts() {
        s += linalg::log_det_pos(h.at(p), r).ok_or(Error::NotPositive(p))?;
    }
    Ok(s / h.npts() as f64)
}

fn normalize_det(h: &mut MatrixField) -> Result<f64> {
    let m = mean_log_det(h)?;
    let c = (-m / h.rows() as f64).exp();
    for v in h.data_mut() {
        *v *= c;
    }
    Ok(m)
}

/// `-2 h (iΛF_h - μ I)`, hermitized.
fn hym_rhs(model: &BundleModel, h: &MatrixField, mu: f64) -> Result<MatrixField> {
    let r = model.rank();
    let lam = lambda_curvature(model, h)?;
    let mut out = h.zeros_like();
    for p in 0..h.npts() {
        let mut x = linalg::buf();
        for (e, v) in lam.at(p).iter().enumerate() {
            x[e] = *v * linalg::I;
        }
        for i in 0..r {
            x[i * r + i] -= mu;
        }
        let mut y = linalg::buf();
        linalg::matmul(h.at(p), &x, &mut y, r);
        linalg::hermitize(&mut y, r);
        for (o, v) in out.at_mut(p).iter_mut().zip(&y[..r * r]) {
            *o = *v * -2.0;
        }
    }
    Ok(out)
}

fn check_positive(h: &MatrixField) -> Result<()> {
    let r = h.rows();
    let mut c = linalg::buf();
    for p in 0..h.npts() {
        linalg::cholesky(h.at(p), &mut c, r).ok_or(Error::NotPositive(p))?;
    }
    Ok(())
}

fn stage(h: &MatrixField, k: &MatrixField, c: f64) -> Result<MatrixField> {
    let mut out = h.clone();
    out.axpy(C64::new(c, 0.0), k);
    hermitize_field(&mut out);
    check_positive(&out)?;
    Ok(out)
}

/// One RK4 step of `∂h/∂t = -2h(iΛF_h - μI)` with `μ` the slope of the
/// bundle, followed by hermitization and determinant renormalization.
pub fn hym_flow_step(state: &MetricState, model: &BundleModel, dt: f64) -> Result<MetricState> {
    if !(dt > 0.0) {
        return Err(Error::Argument(format!("time step must be positive, got {dt}")));
    }
    let mu = model.slope();
    let h = &state.h;
    let k1 = hym_rhs(model, h, mu)?;
    let k2 = hym_rhs(model, &stage(h, &k1, dt / 2.0)?, mu)?;
    let k3 = hym_rhs(model, &stage(h, &k2, dt / 2.0)?, mu)?;
    let k4 = hym_rhs(model, &stage(h, &k3, dt)?, mu)?;
    let mut next = h.clone();
    next.axpy(C64::new(dt / 6.0, 0.0), &k1);
    next.axpy(C64::new(dt / 3.0, 0.0), &k2);
    next.axpy(C64::new(dt / 3.0, 0.0), &k3);
    next.axpy(C64::new(dt / 6.0, 0.0), &k4);
    hermitize_field(&mut next);
    check_positive(&next)?;
    let shift = normalize_det(&mut next)?;
    Ok(MetricState { h: next, t: state.t + dt, log_det_shift: state.log_det_shift + shift })
}

/// Retries a step with halved `dt` on positivity loss. Returns the new
/// state and the step actually taken.
pub fn hym_step_adaptive(state: &MetricState, model: &BundleModel, dt: f64, max_halvings: usize) -> Result<(MetricState, f64)> {
    let mut dt = dt;
    for _ in 0..=max_halvings {
        match hym_flow_step(state, model, dt) {
            Ok(s) => return Ok((s, dt)),
            Err(Error::NotPositive(_)) => dt /= 2.0,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Invariant(format!("metric lost positivity after {max_halvings} step halvings at t = {}", state.t)))
}

/// `dt = c / (1 + sup|ΛF| + spectral bound of the discrete Laplacian)`.
pub fn stable_dt(cfl: f64, sup_lambda: f64, lat: &TorusLattice) -> f64 {
    cfl / (1.0 + sup_lambda + lat.laplacian_bound())
}

/// Everything measured along the metric flow at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct Monitors {
    pub ym: f64,
    pub hym: f64,
    /// `HYM_{α,N}` in the order of the configured pairs.
    pub hym_an: Vec<f64>,
    pub sup_lambda: f64,
    /// `‖DΛF‖_{L²}`.
    pub grad_l2: f64,
    pub deg: f64,
    pub c1_sq: f64,
    pub topo: f64,
    pub f02: f64,
    pub sup_f: f64,
    /// `sup_x max_j |λ_j - μ|` over the eigenvalues of `iΛF`.
    pub sup_dev: f64,
}

/// `‖DΛF‖² = 2‖D''ΛF‖²` for the `h`-skew part of `ΛF`, with
/// `(D''X)_b̄ = ∂̄_b X + [β_b̄, X]`.
pub fn grad_norm(model: &BundleModel, f: &CurvatureBundle) -> f64 {
    let lat = model.lattice();
    let x = &f.lambda_skew();
    let mut pts = vec![0.0; lat.npts()];
    for b in 0..lat.n() {
        let mut d = x.delbar(lat, b);
        if model.has_beta() {
            d.axpy(linalg::ONE, &model.beta()[b].commutator(x));
        }
        let w = 2.0 * 2.0 / lat.kappa(b);
        for (p, v) in pts.iter_mut().enumerate() {
            *v += w * f.frame.norm2_at(d.at(p), p);
        }
    }
    integrate(&pts, lat).unwrap().sqrt()
}

pub fn measure(model: &BundleModel, h: &MatrixField, pairs: &[(f64, f64)]) -> Result<(Monitors, CurvatureBundle)> {
    let lat = model.lattice();
    let f = chern_curvature(model, h)?;
    let (deg, c1_sq, topo) = chern_numbers(&f);
    let spectra: Vec<Vec<f64>> = (0..lat.npts()).map(|p| f.eigenvalues_at(p)).collect();
    let hym_an = pairs.iter().map(|&(a, n)| hym_alpha_n_spectrum(&spectra, lat, a, n)).collect::<Result<Vec<_>>>()?;
    let f2: Vec<f64> = (0..lat.npts()).map(|p| f.f_norm2_at(p)).collect();
    let mu = model.slope();
    let sup_dev = spectra.iter().flatten().map(|v| (v - mu).abs()).fold(0.0, f64::max);
    let m = Monitors {
        ym: integrate(&f2, lat)?,
        hym: f.hym(),
        hym_an,
        sup_lambda: f.sup_lambda(),
        grad_l2: grad_norm(model, &f),
        deg,
        c1_sq,
        topo,
        f02: f.f02_residual,
        sup_f: f2.iter().cloned().fold(0.0, f64::max).sqrt(),
        sup_dev,
    };
    Ok((m, f))
}

/// Allowed increase of a monotone quantity over one accepted step.
pub fn monotone_slack(dt: f64, value: f64) -> f64 {
    1e-8 + 10.0 * dt * 1e-6 * (1.0 + value.abs())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowOptions {
    pub cfl: f64,
    pub t_max: f64,
    pub grad_tol: f64,
    /// Record a trace row every this many accepted steps.
    pub sample_every: usize,
    /// `(α, N)` pairs for `HYM_{α,N}`.
    pub alpha_n: Vec<(f64, f64)>,
    /// Lower bound for HYM, usually `hym_of_type` of the expected type.
    pub floor: Option<f64>,
    /// Stop at the first invariant violation.
    pub abort_on_violation: bool,
    pub max_halvings: usize,
    /// Target `Ψ` (unitary frame) whose `L²` distance to `iΛF` is sampled.
    pub psi: Option<MatrixField>,
}

impl Default for FlowOptions {
    fn default() -> Self {
        let mut alpha_n = Vec::new();
        for n in [0.0, 10.0] {
            for a in [1.0, 1.5, 2.0, 3.0] {
                alpha_n.push((a, n));
            }
        }
        Self {
            cfl: 1.0,
            t_max: 10.0,
            grad_tol: 1e-5,
            sample_every: 10,
            alpha_n,
            floor: None,
            abort_on_violation: true,
            max_halvings: 20,
            psi: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub dt: f64,
    pub m: Monitors,
    /// `‖iΛF - Ψ‖_{L²}` when a target `Ψ` is configured.
    pub crit_dev: Option<f64>,
    pub sigma_sup: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Converged,
    TimeLimit,
    Violation(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrace {
    pub alpha_n: Vec<(f64, f64)>,
    pub samples: Vec<Sample>,
    /// Every monotonicity, floor or conservation failure seen.
    pub violations: Vec<String>,
    pub steps: usize,
    /// Largest `|mean log det h|` after renormalization.
    pub det_drift: f64,
}

impl FlowTrace {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("a trace always holds the initial sample")
    }

    pub fn first(&self) -> &Sample {
        &self.samples[0]
    }
}

#[derive(Debug, Clone)]
pub struct FlowResult {
    pub trace: FlowTrace,
    pub state: MetricState,
    pub paired: Option<MetricState>,
    pub curvature: CurvatureBundle,
    pub outcome: Outcome,
}

const MONOTONE_NAMES: [&str; 3] = ["YM", "HYM", "sup|ΛF|"];

fn check_step(prev: &Monitors, cur: &Monitors, dt: f64, pairs: &[(f64, f64)], t: f64) -> Vec<String> {
    let mut out = Vec::new();
    let scalar = [(prev.ym, cur.ym), (prev.hym, cur.hym), (prev.sup_lambda, cur.sup_lambda)];
    for (name, (a, b)) in MONOTONE_NAMES.iter().zip(scalar) {
        if b > a + monotone_slack(dt, a) {
            out.push(format!("{name} increased by {:.3e} at t = {t:.6}", b - a));
        }
    }
    for (k, &(al, n)) in pairs.iter().enumerate() {
        let (a, b) = (prev.hym_an[k], cur.hym_an[k]);
        if b > a + monotone_slack(dt, a) {
            out.push(format!("HYM_({al},{n}) increased by {:.3e} at t = {t:.6}", b - a));
        }
    }
    out
}

/// Integrates the metric flow from `h0` (and optionally a second metric
/// `k0` in lockstep, for the σ monitor) until `‖DΛF‖ < grad_tol` or
/// `t ≥ t_max`, checking the monitor battery after every accepted step.
pub fn run(model: &BundleModel, h0: MatrixField, k0: Option<MatrixField>, opts: &FlowOptions) -> Result<FlowResult> {
    let lat = model.lattice();
    let mut state = MetricState::new(h0)?;
    let mut paired = k0.map(MetricState::new).transpose()?;
    let (mut cur, mut curv) = measure(model, &state.h, &opts.alpha_n)?;
    let sigma = |s: &MetricState, p: &Option<MetricState>| -> Result<Option<f64>> {
        p.as_ref().map(|k| sigma_distance(&s.h, &k.h).map(|x| x.1)).transpose()
    };
    let crit = |f: &CurvatureBundle| -> Result<Option<f64>> {
        opts.psi.as_ref().map(|psi| approx_critical_deviation(f, psi, 2.0)).transpose()
    };
    let mut trace = FlowTrace {
        alpha_n: opts.alpha_n.clone(),
        samples: vec![Sample { t: 0.0, dt: 0.0, m: cur.clone(), crit_dev: crit(&curv)?, sigma_sup: sigma(&state, &paired)? }],
        violations: Vec::new(),
        steps: 0,
        det_drift: state.mean_log_det()?.abs(),
    };
    let initial = cur.clone();
    let mut sigma_prev = trace.samples[0].sigma_sup;
    let mut outcome = Outcome::TimeLimit;
    let mut pending = false;
    loop {
        if cur.grad_l2 < opts.grad_tol {
            outcome = Outcome::Converged;
            break;
        }
        if state.t >= opts.t_max * (1.0 - 1e-12) {
            break;
        }
        let mut dt = stable_dt(opts.cfl, cur.sup_lambda, lat).min(opts.t_max - state.t);
        if let Some(k) = &paired {
            let (km, _) = measure(model, &k.h, &[])?;
            dt = dt.min(stable_dt(opts.cfl, km.sup_lambda, lat));
        }
        let stepped = hym_step_adaptive(&state, model, dt, opts.max_halvings).and_then(|(next, taken)| {
            let k = paired.as_ref().map(|k| hym_flow_step(k, model, taken)).transpose()?;
            Ok((next, taken, k))
        });
        let (next, taken, next_paired) = match stepped {
            Ok(v) => v,
            Err(Error::NotPositive(p)) => {
                let msg = format!("metric lost positivity at grid point {p} near t = {:.6}", state.t);
                trace.violations.push(msg.clone());
                outcome = Outcome::Violation(msg);
                break;
            }
            Err(e) => return Err(e),
        };
        let (m, f) = measure(model, &next.h, &opts.alpha_n)?;
        let mut bad = check_step(&cur, &m, taken, &opts.alpha_n, next.t);
        if let Some(floor) = opts.floor {
            if m.hym < floor - 1e-6 {
                bad.push(format!("HYM = {} fell below the floor {floor} at t = {:.6}", m.hym, next.t));
            }
        }
        if (m.deg - initial.deg).abs() > 1e-6 || (m.topo - initial.topo).abs() > 1e-6 {
            bad.push(format!("Chern numbers drifted at t = {:.6}", next.t));
        }
        if m.sup_f > 1e3 * (1.0 + initial.sup_f) {
            bad.push(format!("curvature concentrating (sup|F| = {:.3e}) at t = {:.6}", m.sup_f, next.t));
        }
        let s = sigma(&next, &next_paired)?;
        if let (Some(a), Some(b)) = (sigma_prev, s) {
            if b > a + monotone_slack(taken, a) {
                bad.push(format!("sup σ increased by {:.3e} at t = {:.6}", b - a, next.t));
            }
        }
        sigma_prev = s;
        trace.det_drift = trace.det_drift.max(next.mean_log_det()?.abs());
        state = next;
        paired = next_paired;
        cur = m;
        curv = f;
        trace.steps += 1;
        pending = true;
        let stop = !bad.is_empty() && opts.abort_on_violation;
        if stop {
            outcome = Outcome::Violation(bad[0].clone());
        }
        trace.violations.extend(bad);
        if trace.steps % opts.sample_every.max(1) == 0 || stop {
            trace.samples.push(Sample { t: state.t, dt: taken, m: cur.clone(), crit_dev: crit(&curv)?, sigma_sup: s });
            pending = false;
        }
        if stop {
            break;
        }
    }
    if pending {
        let s = sigma(&state, &paired)?;
        trace.samples.push(Sample { t: state.t, dt: 0.0, m: cur.clone(), crit_dev: crit(&curv)?, sigma_sup: s });
    }
    Ok(FlowResult { trace, state, paired, curvature: curv, outcome })
}

/// Series of `sup σ(H_t, K_t)` recorded by a paired run.
pub fn paired_sigma_monitor(trace: &FlowTrace) -> Result<Vec<(f64, f64)>> {
    trace
        .samples
        .iter()
        .map(|s| s.sigma_sup.map(|v| (s.t, v)).ok_or_else(|| Error::Argument("run has no paired metric".into())))
        .collect()
}

/// `-(D*F)` with the pointwise trace removed.
fn ym_rhs(model: &BundleModel, conn: &Connection) -> (Vec<MatrixField>, RealCurvature) {
    let curv = connection_curvature(model, conn);
    let mut g = dstar_f(model, conn, &curv);
    let r = model.rank();
    for c in g.iter_mut() {
        for p in 0..c.npts() {
            let m = c.at_mut(p);
            let tr = linalg::trace(m, r) / r as f64;
            for i in 0..r {
                m[i * r + i] -= tr;
            }
            for v in m.iter_mut() {
                *v = -*v;
            }
        }
    }
    (g, curv)
}

fn conn_axpy(a: &Connection, k: &[MatrixField], c: f64) -> Connection {
    let mut out = a.clone();
    for (x, y) in out.a.iter_mut().zip(k) {
        x.axpy(C64::new(c, 0.0), y);
    }
    out
}

fn skew_project(conn: &mut Connection) {
    let r = conn.a[0].rows();
    for c in conn.a.iter_mut() {
        for p in 0..c.npts() {
            let m = c.at_mut(p);
            for i in 0..r {
                for j in i..r {
                    let v = (m[i * r + j] - m[j * r + i].conj()) * 0.5;
                    m[i * r + j] = v;
                    m[j * r + i] = -v.conj();
                }
            }
        }
    }
}

/// `YM` of a unitary connection and `‖D*F‖²` (trace-free part).
pub fn ym_energy(model: &BundleModel, conn: &Connection) -> (f64, f64) {
    let (g, curv) = ym_rhs(model, conn);
    (curv.ym(model.lattice()), real_one_form_norm2(&g, model.lattice()))
}

/// One RK4 step of `∂A/∂t = -D*F_A` on the trace-free part.
pub fn ym_flow_step(conn: &Connection, model: &BundleModel, dt: f64) -> Connection {
    let (k1, _) = ym_rhs(model, conn);
    ym_step_from(conn, &k1, model, dt)
}

/// RK4 step given the first stage `k1 = -D*F` at `conn`.
fn ym_step_from(conn: &Connection, k1: &[MatrixField], model: &BundleModel, dt: f64) -> Connection {
    let (k2, _) = ym_rhs(model, &conn_axpy(conn, k1, dt / 2.0));
    let (k3, _) = ym_rhs(model, &conn_axpy(conn, &k2, dt / 2.0));
    let (k4, _) = ym_rhs(model, &conn_axpy(conn, &k3, dt));
    let mut next = conn_axpy(conn, k1, dt / 6.0);
    for (k, c) in [(&k2, dt / 3.0), (&k3, dt / 3.0), (&k4, dt / 6.0)] {
        next = conn_axpy(&next, k, c);
    }
    skew_project(&mut next);
    next
}

#[derive(Debug, Clone)]
pub struct ConnectionSnapshot {
    pub t: f64,
    pub ym: f64,
    pub conn: Connection,
}

/// Runs the connection flow to `t_max`, halving `dt` whenever YM rises by
/// more than the monotone slack, and keeps snapshots at the given times.
pub fn ym_run(
    model: &BundleModel,
    conn0: Connection,
    cfl: f64,
    t_max: f64,
    snapshot_times: &[f64],
) -> Result<Vec<ConnectionSnapshot>> {
    let lat = model.lattice();
    let mut conn = conn0;
    let mut t = 0.0;
    let (mut k1, curv) = ym_rhs(model, &conn);
    let mut ym = curv.ym(lat);
    let mut times: Vec<f64> = snapshot_times.to_vec();
    times.sort_by(f64::total_cmp);
    let mut out = Vec::new();
    let mut next_snap = 0;
    let base_dt = stable_dt(cfl, 0.0, lat);
    while next_snap < times.len() && times[next_snap] <= 0.0 {
        out.push(ConnectionSnapshot { t, ym, conn: conn.clone() });
        next_snap += 1;
    }
    while t < t_max * (1.0 - 1e-12) && next_snap < times.len() {
        let mut dt = base_dt.min(times[next_snap] - t).min(t_max - t);
        let mut halvings = 0;
        let (cand, e, k) = loop {
            let cand = ym_step_from(&conn, &k1, model, dt);
            let (k, curv) = ym_rhs(model, &cand);
            let e = curv.ym(lat);
            if e <= ym + monotone_slack(dt, ym) {
                break (cand, e, k);
            }
            halvings += 1;
            if halvings > 20 {
                return Err(Error::Invariant(format!("connection flow energy rose at t = {t}")));
            }
            dt /= 2.0;
        };
        conn = cand;
        k1 = k;
        ym = e;
        t += dt;
        while next_snap < times.len() && times[next_snap] <= t + 1e-12 {
            out.push(ConnectionSnapshot { t, ym, conn: conn.clone() });
            next_snap += 1;
        }
    }
    Ok(out)
}

/// Outcome of checking `‖D_{t'} - D_t‖² ≤ ½(YM(D_t) - YM(D_{t'})) + 1e-8`
/// on every pair of snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchyReport {
    pub pairs: usize,
    pub failures: usize,
    /// Largest `lhs - rhs` over all pairs.
    pub worst_margin: f64,
    /// Largest `lhs - (t'-t)·rhs`, the form with the Cauchy-Schwarz factor.
    pub worst_margin_weighted: f64,
}

pub fn cauchy_monitor(snaps: &[ConnectionSnapshot], lat: &TorusLattice) -> CauchyReport {
    let mut rep = CauchyReport { pairs: 0, failures: 0, worst_margin: f64::NEG_INFINITY, worst_margin_weighted: f64::NEG_INFINITY };
    for i in 0..snaps.len() {
        for j in i + 1..snaps.len() {
            let (a, b) = if snaps[i].t <= snaps[j].t { (&snaps[i], &snaps[j]) } else { (&snaps[j], &snaps[i]) };
            let diff: Vec<MatrixField> = a.conn.a.iter().zip(&b.conn.a).map(|(x, y)| y.sub(x)).collect();
            let lhs = real_one_form_norm2(&diff, lat);
            let rhs = 0.5 * (a.ym - b.ym);
            rep.pairs += 1;
            if lhs > rhs + 1e-8 {
                rep.failures += 1;
            }
            rep.worst_margin = rep.worst_margin.max(lhs - rhs);
            rep.worst_margin_weighted = rep.worst_margin_weighted.max(lhs - (b.t - a.t) * rhs);
        }
    }
    if rep.pairs == 0 {
        rep.worst_margin = 0.0;
        rep.worst_margin_weighted = 0.0;
    }
    rep
}

/// Unitary connection matching a metric, for paired connection runs.
pub fn connection_from_metric(model: &BundleModel, h: &MatrixField) -> Result<Connection> {
    unitary_connection(model, h)
}

/// Pointwise descending eigenvalues of `iΛF` for a unitary connection.
pub fn connection_spectrum(model: &BundleModel, conn: &Connection) -> Vec<Vec<f64>> {
    let lat = model.lattice();
    let r = model.rank();
    let lam = connection_curvature(model, conn).lambda(lat);
    (0..lat.npts())
        .map(|p| {
            let mut m: Vec<C64> = lam.at(p).iter().map(|v| *v * linalg::I).collect();
            linalg::hermitize(&mut m, r);
            linalg::eigvalsh(&m, r)
        })
        .collect()
}

/// Same spectra for the metric flow, through the unitary frame.
pub fn metric_spectrum(model: &BundleModel, h: &MatrixField) -> Result<Vec<Vec<f64>>> {
    let f = chern_curvature(model, h)?;
    Ok((0..model.lattice().npts()).map(|p| f.eigenvalues_at(p)).collect())
}
