//! Scenario construction and execution: models, initial metrics, flow
//! runs, trace CSV and JSON summaries.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bundle::{build_background, one_form_norm, project_holomorphic, Block, BundleModel};
use crate::checkpoint::Checkpoint;
use crate::config::{ExtensionKind, MetricConfig, MetricKind, ScenarioConfig};
use crate::error::{Error, Result};
use crate::field::MatrixField;
use crate::flow::{self, CauchyReport, FlowOptions, FlowResult, Outcome};
use crate::functionals::{hn_projection, hym_of_type, HNProjectionData, SlopeVector};
use crate::hn::{self, DEFAULT_CLUSTER_TOL};
use crate::lattice::{scalar_field, TorusLattice};
use crate::sample::{random_metric, smooth_random_in};
use crate::C64;

/// Everything needed to start a run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub model: BundleModel,
    pub h0: MatrixField,
    pub k0: Option<MatrixField>,
    pub expected_type: SlopeVector,
    pub options: FlowOptions,
}

fn rng_for(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ salt)
}

/// Smooth periodic bump with zero mean and unit sup norm.
fn bump(lat: &TorusLattice) -> Vec<f64> {
    let raw = scalar_field(lat, |p| {
        let s: f64 = (0..lat.dims().len()).map(|d| (2.0 * PI * lat.coord(p, d)).cos()).sum();
        s.exp()
    });
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    let sup = raw.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    raw.iter().map(|v| (v - mean) / sup).collect()
}

/// Initial metric described by `m`.
pub fn initial_metric(model: &BundleModel, m: &MetricConfig, seed: u64) -> Result<MatrixField> {
    let lat = model.lattice();
    let r = model.rank();
    let tw = model.twist();
    Ok(match m.kind {
        MetricKind::Identity => MatrixField::identity(lat, r, tw),
        MetricKind::Bump => {
            let b = bump(lat);
            let mut h = MatrixField::identity(lat, r, tw);
            for (p, v) in b.iter().enumerate() {
                let c = (m.amplitude * v).exp();
                h.at_mut(p).iter_mut().for_each(|z| *z *= c);
            }
            h
        }
        MetricKind::Random => random_metric(lat, tw, &mut rng_for(seed, 0x6d65_7472 + m.seed), m.amplitude, m.factors),
        MetricKind::Diagonal => {
            let d = m.diag.as_ref().ok_or_else(|| Error::Config("diagonal metric needs diag".into()))?;
            if d.len() != r || d.iter().any(|v| !(*v > 0.0)) {
                return Err(Error::Config(format!("diag must hold {r} positive entries")));
            }
            MatrixField::from_fn(lat, r, r, tw, |_, a| {
                for (i, v) in d.iter().enumerate() {
                    a[i * r + i] = C64::new(*v, 0.0);
                }
            })
        }
    })
}

/// Builds the bundle model, including a projected extension form.
pub fn build_model(cfg: &ScenarioConfig) -> Result<BundleModel> {
    let lat = TorusLattice::new(cfg.torus.n, &cfg.grid())?;
    let blocks: Vec<Block> =
        cfg.bundle.blocks.iter().map(|b| Block { rank: b.rank, charges: b.charges.clone() }).collect();
    let model = build_background(&lat, &blocks)?;
    let Some(ext) = &cfg.extension else {
        return Ok(model);
    };
    let n = lat.n();
    let r = model.rank();
    let trial: Vec<MatrixField> = match ext.kind {
        ExtensionKind::Constant => (0..n)
            .map(|a| {
                let active = a < ext.factors.unwrap_or(n);
                MatrixField::from_fn(&lat, r, r, model.twist(), |_, m| {
                    if active {
                        for i in 0..r {
                            for j in i + 1..r {
                                m[i * r + j] = C64::new(1.0, 0.0);
                            }
                        }
                    }
                })
            })
            .collect(),
        ExtensionKind::Random => {
            let mut rng = rng_for(cfg.seed, 0x6265_7461);
            (0..n)
                .map(|a| {
                    let f = smooth_random_in(&lat, model.twist(), &mut rng, 1.0, ext.factors);
                    if a < ext.factors.unwrap_or(n) {
                        f
                    } else {
                        f.zeros_like()
                    }
                })
                .collect()
        }
    };
    let proj = project_holomorphic(&trial, &model, ext.tol)?;
    if !proj.nonzero {
        return Err(Error::Model("the extension form vanishes after projection".into()));
    }
    let norm = one_form_norm(&proj.beta, &lat);
    let beta = proj.beta.iter().map(|b| b.scaled(C64::new(ext.strength / norm, 0.0))).collect();
    model.with_beta(beta)
}

impl Scenario {
    pub fn build(config: &ScenarioConfig) -> Result<Self> {
        let model = build_model(config)?;
        let h0 = initial_metric(&model, &config.metric, config.seed)?;
        let k0 = config.paired.as_ref().map(|m| initial_metric(&model, m, config.seed)).transpose()?;
        let expected = match &config.expected_type {
            Some(t) => t.clone(),
            None => model.block_type().ok_or_else(|| {
                Error::Config("block slopes increase along the extension; set expected_type".into())
            })?,
        };
        let expected_type = SlopeVector::new(expected)?;
        let floor = hym_of_type(&expected_type, 2.0, 0.0)?;
        let mut options = config.flow.options(Some(floor));
        if config.expected_type.is_none() {
            // The blocks are the HN filtration; Ψ is the coordinate flag.
            let lat = model.lattice();
            let ranks: Vec<usize> = model.blocks().iter().map(|b| b.rank).collect();
            let mus: Vec<f64> = (0..ranks.len()).map(|k| model.block_degree(k) / ranks[k] as f64).collect();
            let data = HNProjectionData::coordinate_flag(lat, &ranks, &mus, model.twist())?;
            options.psi = Some(hn_projection(&data)?);
        }
        Ok(Self { config: config.clone(), model, h0, k0, expected_type, options })
    }
}

/// Result of a scenario run.
#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub name: String,
    pub result: FlowResult,
    pub expected_type: SlopeVector,
    /// `None` when the final spectrum is not yet equilibrated.
    pub final_type: Option<SlopeVector>,
    pub hym_floor: f64,
    pub cauchy: Option<CauchyReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub name: String,
    pub final_type: Option<Vec<f64>>,
    pub expected_type: Vec<f64>,
    pub type_matches: bool,
    pub hym_final: f64,
    pub hym_floor: f64,
    pub monotone_ok: bool,
    pub chern_drift: f64,
    pub converged: bool,
    pub t_final: f64,
    pub steps: usize,
    pub grad_final: f64,
    /// `sup |iΛF - μI|` at the end.
    pub dev_final: f64,
    /// `‖iΛF - Ψ‖_{L²}` at the end, when the blocks give the HN flag.
    pub crit_dev_final: Option<f64>,
    pub violations: Vec<String>,
    pub sigma_final: Option<f64>,
    pub cauchy_failures: Option<usize>,
}

impl ScenarioReport {
    pub fn converged(&self) -> bool {
        self.result.outcome == Outcome::Converged
    }

    pub fn type_matches(&self) -> bool {
        self.final_type.as_ref().is_some_and(|t| {
            t.rank() == self.expected_type.rank()
                && t.values().iter().zip(self.expected_type.values()).all(|(a, b)| (a - b).abs() < 1e-3)
        })
    }

    /// Largest change of the degree and of `∫tr F∧F` over the samples.
    pub fn chern_drift(&self) -> f64 {
        let s = &self.result.trace.samples;
        let (d0, t0) = (s[0].m.deg, s[0].m.topo);
        s.iter().map(|x| (x.m.deg - d0).abs().max((x.m.topo - t0).abs())).fold(0.0, f64::max)
    }

    pub fn summary(&self) -> Summary {
        let tr = &self.result.trace;
        Summary {
            name: self.name.clone(),
            final_type: self.final_type.as_ref().map(|t| t.values().to_vec()),
            expected_type: self.expected_type.values().to_vec(),
            type_matches: self.type_matches(),
            hym_final: tr.last().m.hym,
            hym_floor: self.hym_floor,
            monotone_ok: tr.violations.is_empty(),
            chern_drift: self.chern_drift(),
            converged: self.converged(),
            t_final: self.result.state.t,
            steps: tr.steps,
            grad_final: tr.last().m.grad_l2,
            dev_final: tr.last().m.sup_dev,
            crit_dev_final: tr.last().crit_dev,
            violations: tr.violations.clone(),
            sigma_final: tr.last().sigma_sup,
            cauchy_failures: self.cauchy.as_ref().map(|c| c.failures),
        }
    }

    /// CLI exit code: 0 ok, 2 invariant violation, 3 no convergence.
    pub fn exit_code(&self) -> i32 {
        if !self.result.trace.violations.is_empty() || self.cauchy.as_ref().is_some_and(|c| c.failures > 0) {
            2
        } else if !self.converged() {
            3
        } else if !self.type_matches() {
            2
        } else {
            0
        }
    }

    pub fn trace_csv(&self) -> String {
        let tr = &self.result.trace;
        let mut out = String::from("t,ym,hym");
        for (a, n) in &tr.alpha_n {
            let _ = write!(out, ",hym_{a}_{n}");
        }
        out.push_str(",sup_lambdaF,grad_l2,deg,topo,sigma_sup\n");
        for s in &tr.samples {
            let m = &s.m;
            let _ = write!(out, "{:.10e},{:.15e},{:.15e}", s.t, m.ym, m.hym);
            for v in &m.hym_an {
                let _ = write!(out, ",{v:.15e}");
            }
            let sig = s.sigma_sup.map_or(String::new(), |v| format!("{v:.15e}"));
            let _ = writeln!(out, ",{:.15e},{:.15e},{:.15e},{:.15e},{sig}", m.sup_lambda, m.grad_l2, m.deg, m.topo);
        }
        out
    }

    pub fn checkpoint(&self, model: &BundleModel) -> Checkpoint {
        let st = &self.result.state;
        let mut fields = vec![("h".to_string(), st.h.clone())];
        if let Some(k) = &self.result.paired {
            fields.push(("k".into(), k.h.clone()));
        }
        for (a, b) in model.beta().iter().enumerate() {
            fields.push((format!("beta{a}"), b.clone()));
        }
        Checkpoint { t: st.t, log_det_shift: st.log_det_shift, steps: self.result.trace.steps, config: None, fields }
    }

    /// Writes `trace.csv`, `summary.json` and `final.ckpt` into `dir`.
    pub fn write_outputs(&self, sc: &Scenario, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let trace = dir.join("trace.csv");
        std::fs::write(&trace, self.trace_csv())?;
        let summary = dir.join("summary.json");
        std::fs::write(&summary, serde_json::to_string_pretty(&self.summary())?)?;
        let ckpt = dir.join("final.ckpt");
        let mut cp = self.checkpoint(&sc.model);
        cp.config = Some(sc.config.clone());
        cp.save(&ckpt)?;
        Ok(vec![trace, summary, ckpt])
    }
}

/// Runs the metric flow (and the companion connection flow when
/// configured) and extracts the limiting type.
pub fn run_scenario(sc: &Scenario) -> Result<ScenarioReport> {
    let result = flow::run(&sc.model, sc.h0.clone(), sc.k0.clone(), &sc.options)?;
    let final_type = match hn::type_from_spectrum(&result.curvature.i_lambda_unitary(), DEFAULT_CLUSTER_TOL) {
        Ok(t) => Some(t),
        Err(Error::NotEquilibrated { .. }) => None,
        Err(e) => return Err(e),
    };
    let cauchy = match &sc.config.connection_flow {
        Some(c) => {
            let conn0 = flow::connection_from_metric(&sc.model, &sc.h0)?;
            let t_max = c.snapshots.iter().cloned().fold(0.0, f64::max);
            let snaps = flow::ym_run(&sc.model, conn0, c.cfl, t_max, &c.snapshots)?;
            Some(flow::cauchy_monitor(&snaps, sc.model.lattice()))
        }
        None => None,
    };
    Ok(ScenarioReport {
        name: sc.config.name.clone(),
        hym_floor: sc.options.floor.unwrap_or(0.0),
        expected_type: sc.expected_type.clone(),
        final_type,
        result,
        cauchy,
    })
}
