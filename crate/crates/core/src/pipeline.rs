//! Configuration ingestion, end-to-end pipelines and structured reporting.
//!
//! Three jobs share one diagnostics format:
//!   - forward: solve for the metric from moduli data, build (C, g), report;
//!   - verify: recompute the residual panel for externally supplied fields;
//!   - roundtrip: forward plus moduli recovery against the inputs.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Chart, ComplexField, ScalarField};
use crate::higgs::{build_c_from_moduli, build_nabla, check_statistical_connection};
use crate::io::{self, ChartMeta};
use crate::solver::{newton_solve, pde_residual, SolverConfig, EPS0};
use crate::tensor::{
    decompose3, extract_abelian, extract_cubic, field_equation_residual, harmonicity_residual,
    normalization_residual, trace3, AbelianDifferential, ConformalMetric, CubicDifferential,
    Sym3Tensor,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::Parse(_) => 4,
            PipelineError::Io(_) => 5,
        }
    }
}

/// Terminal status of a job; distinct from hard errors because a report is
/// still produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JobStatus {
    Success,
    NonConverged,
    Obstruction,
}

impl JobStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            JobStatus::Success => 0,
            JobStatus::NonConverged => 2,
            JobStatus::Obstruction => 3,
        }
    }
}

// ---------------------------------------------------------------------------
// Job configuration

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChartSpec {
    pub kind: String,
    pub nx: usize,
    pub ny: usize,
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default)]
    pub half_width: Option<f64>,
}

impl ChartSpec {
    pub fn build(&self) -> Result<Arc<Chart>, PipelineError> {
        match self.kind.as_str() {
            "torus" => Chart::torus(self.nx, self.ny, self.rho.unwrap_or(1.0))
                .map_err(|e| PipelineError::Config(e.to_string())),
            "disk" => Chart::disk(self.nx, self.ny, self.half_width.unwrap_or(1.0))
                .map_err(|e| PipelineError::Config(e.to_string())),
            other => Err(PipelineError::Config(format!(
                "unknown chart kind {other:?} (expected \"torus\" or \"disk\")"
            ))),
        }
    }
}

/// Moduli coefficient: a real constant, a complex constant, or polynomial
/// coefficients in z (constant term first).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PolySpec {
    Real(f64),
    Complex([f64; 2]),
    Coeffs(Vec<[f64; 2]>),
}

impl PolySpec {
    pub fn coefficients(&self) -> Vec<Complex64> {
        match self {
            PolySpec::Real(r) => vec![Complex64::new(*r, 0.0)],
            PolySpec::Complex([re, im]) => vec![Complex64::new(*re, *im)],
            PolySpec::Coeffs(cs) => cs.iter().map(|[re, im]| Complex64::new(*re, *im)).collect(),
        }
    }

    pub fn is_constant(&self) -> bool {
        self.coefficients()[1..].iter().all(|c| c.norm_sqr() == 0.0)
    }

    pub fn eval(&self, chart: &Arc<Chart>) -> ComplexField {
        let coeffs = self.coefficients();
        ComplexField::from_fn(chart, |x, y| {
            let z = Complex64::new(x, y);
            coeffs
                .iter()
                .rev()
                .fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModuliSpec {
    pub w: PolySpec,
    pub q: PolySpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSpec {
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
    pub linear_tol: f64,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let c = SolverConfig::default();
        SolverSpec {
            tol: c.tol,
            max_iter: c.max_iter,
            damping: c.damping,
            linear_tol: c.linear_tol,
        }
    }
}

impl SolverSpec {
    pub fn to_config(&self) -> SolverConfig {
        SolverConfig {
            tol: self.tol,
            max_iter: self.max_iter,
            damping: self.damping,
            linear_tol: self.linear_tol,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputSpec {
    pub dir: PathBuf,
    #[serde(default)]
    pub dump_fields: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    pub conservative: f64,
    pub normalized: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            conservative: 1e-6,
            normalized: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JobConfig {
    #[serde(default)]
    pub chart: Option<ChartSpec>,
    #[serde(default)]
    pub moduli: Option<ModuliSpec>,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub outputs: Option<OutputSpec>,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub allow_nonholomorphic: bool,
    /// Input directory for verify jobs (a dump written by a forward run).
    #[serde(default)]
    pub fields_dir: Option<PathBuf>,
}

impl JobConfig {
    pub fn from_json(text: &str) -> Result<JobConfig, PipelineError> {
        serde_json::from_str(text).map_err(|e| PipelineError::Parse(e.to_string()))
    }
}

// ---------------------------------------------------------------------------
// Diagnostics report

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormPair {
    pub sup: f64,
    pub l2: f64,
}

impl NormPair {
    fn of_scalar(f: &ScalarField) -> Self {
        NormPair {
            sup: f.sup_norm(),
            l2: f.l2_norm(),
        }
    }

    fn of_complex(f: &ComplexField) -> Self {
        NormPair {
            sup: f.sup_norm(),
            l2: f.l2_norm(),
        }
    }

    fn of_fields(fields: &[&ScalarField]) -> Self {
        NormPair {
            sup: fields.iter().map(|f| f.sup_norm()).fold(0.0, f64::max),
            l2: fields
                .iter()
                .map(|f| f.l2_norm().powi(2))
                .sum::<f64>()
                .sqrt(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualPanel {
    pub hitchin_residual: NormPair,
    pub normalization_residual: NormPair,
    pub field_equation_residual: NormPair,
    pub dtau: NormPair,
    pub divtau: NormPair,
    pub dbar_q: NormPair,
    pub dbar_w: NormPair,
    pub torsion: NormPair,
    #[serde(rename = "nabla_g_plus_C")]
    pub nabla_g_plus_c: NormPair,
    pub roundtrip_w_error: NormPair,
    pub roundtrip_q_error: NormPair,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverSummary {
    pub converged: bool,
    pub iterations: usize,
    pub obstruction_detected: bool,
    pub final_residual: f64,
    pub residual_history: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Verdicts {
    pub conservative: bool,
    pub normalized: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Conventions {
    pub curvature: String,
    pub tensor_norm: String,
    pub trace: String,
}

impl Default for Conventions {
    fn default() -> Self {
        Conventions {
            curvature: "S_g = 2K = -exp(-u) laplacian(u)".into(),
            tensor_norm: "full inverse-metric contraction on all three slots".into(),
            trace: "trace over the last two slots".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub schema: String,
    pub job: String,
    pub grid: ChartMeta,
    pub conventions: Conventions,
    pub solver: Option<SolverSummary>,
    pub panel: ResidualPanel,
    pub verdicts: Verdicts,
    /// Wall-clock duration; excluded from any determinism comparison.
    pub timing_ms: f64,
}

impl DiagnosticsReport {
    /// Canonical JSON with the timing key removed, for byte comparisons.
    pub fn deterministic_json(&self) -> String {
        let mut clone = self.clone();
        clone.timing_ms = 0.0;
        serde_json::to_string_pretty(&clone).expect("report serialization")
    }
}

pub struct RunOutput {
    pub report: DiagnosticsReport,
    pub status: JobStatus,
}

// ---------------------------------------------------------------------------
// Residual panel assembly

struct PanelInputs<'a> {
    g: &'a ConformalMetric,
    c: &'a Sym3Tensor,
    /// Reference moduli for round-trip errors; verify jobs pass None and get
    /// re-extraction self-consistency instead.
    w_ref: Option<&'a ComplexField>,
    q_ref: Option<&'a ComplexField>,
}

fn compute_panel(inp: &PanelInputs) -> Result<ResidualPanel, PipelineError> {
    let g = inp.g;
    let c = inp.c;

    let tau = trace3(c, g);
    let (c0, _) = decompose3(c, g);
    let q_ext = extract_cubic(&c0, Some(g))
        .map_err(|e| PipelineError::Parse(e.to_string()))?
        .q;
    let w_ext = extract_abelian(&tau).w;

    let q_used = inp.q_ref.unwrap_or(&q_ext);
    let w_used = inp.w_ref.unwrap_or(&w_ext);

    let hitchin = pde_residual(&g.u, q_used, None);
    let norm_res = normalization_residual(&c0, g);
    let fe = field_equation_residual(c, g);
    let (dtau, divtau) = harmonicity_residual(&tau, g);
    let (_, dbar_q) = q_used.wirtinger();
    let (_, dbar_w) = w_used.wirtinger();

    let nabla = build_nabla(c, g);
    let (torsion_sup, metric_sup, _) = check_statistical_connection(&nabla, c, g);
    let metric_l2 = metric_residual_l2(&nabla, c, g);

    let (rt_w, rt_q) = match (inp.w_ref, inp.q_ref) {
        (Some(w_ref), Some(q_ref)) => (w_ext.sub(w_ref), q_ext.sub(q_ref)),
        _ => {
            // self-consistency: rebuild from the extracted moduli and extract
            // again
            let w2 = AbelianDifferential { w: w_ext.clone() };
            let q2 = CubicDifferential { q: q_ext.clone() };
            let c2 = build_c_from_moduli(&w2, &q2, g);
            let tau2 = trace3(&c2, g);
            let (c02, _) = decompose3(&c2, g);
            let q_again = extract_cubic(&c02, Some(g))
                .map_err(|e| PipelineError::Parse(e.to_string()))?
                .q;
            let w_again = extract_abelian(&tau2).w;
            (w_again.sub(&w_ext), q_again.sub(&q_ext))
        }
    };

    Ok(ResidualPanel {
        hitchin_residual: NormPair::of_scalar(&hitchin),
        normalization_residual: NormPair::of_scalar(&norm_res),
        field_equation_residual: NormPair::of_fields(&fe.components()),
        dtau: NormPair::of_scalar(&dtau),
        divtau: NormPair::of_scalar(&divtau),
        dbar_q: NormPair::of_complex(&dbar_q),
        dbar_w: NormPair::of_complex(&dbar_w),
        torsion: NormPair {
            sup: torsion_sup,
            l2: 0.0,
        },
        nabla_g_plus_c: NormPair {
            sup: metric_sup,
            l2: metric_l2,
        },
        roundtrip_w_error: NormPair::of_complex(&rt_w),
        roundtrip_q_error: NormPair::of_complex(&rt_q),
    })
}

/// Area-weighted l2 norm of the six metric-compatibility residual fields
/// (nabla_i g)_{jk} + c_{ijk}.
fn metric_residual_l2(
    nabla: &crate::higgs::ConnectionCoefficients,
    c: &Sym3Tensor,
    g: &ConformalMetric,
) -> f64 {
    let chart = c.chart().clone();
    let h = g.h();
    let dh = [h.dx(), h.dy()];
    let mut s = 0.0;
    for node in 0..chart.len() {
        if !chart.is_interior(node) {
            continue;
        }
        let hv = h.at(node);
        for (i, j, k) in [
            (0, 0, 0),
            (0, 0, 1),
            (0, 1, 1),
            (1, 0, 0),
            (1, 0, 1),
            (1, 1, 1),
        ] {
            let mut v = if j == k { dh[i].at(node) } else { 0.0 };
            v -= nabla.at(node, k, i, j) * hv;
            v -= nabla.at(node, j, i, k) * hv;
            s += (v + c.comp_at(node, i, j, k)).powi(2);
        }
    }
    (s * chart.cell_area()).sqrt()
}

fn verdicts(panel: &ResidualPanel, thr: &Thresholds) -> Verdicts {
    Verdicts {
        conservative: panel.field_equation_residual.sup <= thr.conservative
            && panel.dtau.sup <= thr.conservative
            && panel.divtau.sup <= thr.conservative,
        normalized: panel.normalization_residual.sup <= thr.normalized,
    }
}

// ---------------------------------------------------------------------------
// Pipelines

struct ForwardArtifacts {
    chart: Arc<Chart>,
    g: ConformalMetric,
    c: Sym3Tensor,
    w_field: ComplexField,
    q_field: ComplexField,
}

fn forward_core(
    cfg: &JobConfig,
    job: &str,
) -> Result<(RunOutput, Option<ForwardArtifacts>), PipelineError> {
    let start = Instant::now();
    let chart_spec = cfg
        .chart
        .as_ref()
        .ok_or_else(|| PipelineError::Config("chart section required".into()))?;
    let moduli = cfg
        .moduli
        .as_ref()
        .ok_or_else(|| PipelineError::Config("moduli section required".into()))?;
    let chart = chart_spec.build()?;

    if chart.is_torus() && !(moduli.w.is_constant() && moduli.q.is_constant()) {
        return Err(PipelineError::Config(
            "holomorphic sections in the torus chart are constants; \
             non-constant moduli are only meaningful on the disk"
                .into(),
        ));
    }

    let w_field = moduli.w.eval(&chart);
    let q_field = moduli.q.eval(&chart);

    let bc = if chart.is_torus() {
        None
    } else {
        // default Dirichlet data matches the constant-solution asymptotic
        let q2 = q_field.norm_sqr_field();
        Some(q2.map(|v| (v + EPS0).ln() / 3.0))
    };

    let solver_cfg = cfg.solver.to_config();
    let report = newton_solve(&q_field, &solver_cfg, None, None, bc.as_ref())
        .map_err(|e| PipelineError::Config(e.to_string()))?;

    let summary = SolverSummary {
        converged: report.converged,
        iterations: report.iterations,
        obstruction_detected: report.obstruction_detected,
        final_residual: *report.residual_history.last().unwrap(),
        residual_history: report.residual_history.clone(),
    };

    let status = if report.obstruction_detected {
        JobStatus::Obstruction
    } else if !report.converged {
        JobStatus::NonConverged
    } else {
        JobStatus::Success
    };

    let g = ConformalMetric::new(report.final_u);
    let c = build_c_from_moduli(
        &AbelianDifferential { w: w_field.clone() },
        &CubicDifferential { q: q_field.clone() },
        &g,
    );

    let panel = compute_panel(&PanelInputs {
        g: &g,
        c: &c,
        w_ref: Some(&w_field),
        q_ref: Some(&q_field),
    })?;
    let v = verdicts(&panel, &cfg.thresholds);

    let diag = DiagnosticsReport {
        schema: io::SCHEMA.into(),
        job: job.into(),
        grid: ChartMeta::of(&chart),
        conventions: Conventions::default(),
        solver: Some(summary),
        panel,
        verdicts: v,
        timing_ms: start.elapsed().as_secs_f64() * 1e3,
    };

    let artifacts = ForwardArtifacts {
        chart,
        g,
        c,
        w_field,
        q_field,
    };
    Ok((
        RunOutput {
            report: diag,
            status,
        },
        Some(artifacts),
    ))
}

fn write_outputs(
    cfg: &JobConfig,
    out: &RunOutput,
    artifacts: Option<&ForwardArtifacts>,
) -> Result<(), PipelineError> {
    let Some(spec) = &cfg.outputs else {
        return Ok(());
    };
    io::write_report(&out.report, &spec.dir)?;
    if spec.dump_fields {
        if let Some(a) = artifacts {
            let w_re = a.w_field.re();
            let w_im = a.w_field.im();
            let q_re = a.q_field.re();
            let q_im = a.q_field.im();
            io::dump_fields(
                &spec.dir,
                &a.chart,
                &[
                    ("u", &a.g.u),
                    ("c_xxx", &a.c.xxx),
                    ("c_xxy", &a.c.xxy),
                    ("c_xyy", &a.c.xyy),
                    ("c_yyy", &a.c.yyy),
                    ("q.re", &q_re),
                    ("q.im", &q_im),
                    ("w.re", &w_re),
                    ("w.im", &w_im),
                ],
            )?;
        }
    }
    Ok(())
}

/// Solve for the metric, synthesize (C, g) and report the residual panel.
pub fn run_forward(cfg: &JobConfig) -> Result<RunOutput, PipelineError> {
    let (out, artifacts) = forward_core(cfg, "solve")?;
    write_outputs(cfg, &out, artifacts.as_ref())?;
    Ok(out)
}

/// Forward run whose panel is read for the moduli-recovery errors; the
/// construction and the report layout are shared with [`run_forward`].
pub fn run_roundtrip(cfg: &JobConfig) -> Result<RunOutput, PipelineError> {
    let (out, artifacts) = forward_core(cfg, "roundtrip")?;
    write_outputs(cfg, &out, artifacts.as_ref())?;
    Ok(out)
}

/// Recompute the residual panel for externally supplied (u, C) dumps and
/// classify the structure.
pub fn run_verify(cfg: &JobConfig) -> Result<RunOutput, PipelineError> {
    let start = Instant::now();
    let dir = cfg
        .fields_dir
        .as_ref()
        .ok_or_else(|| PipelineError::Config("verify requires fields_dir".into()))?;
    let (chart, fields) = io::load_fields(dir)?;
    let need = |name: &str| -> Result<ScalarField, PipelineError> {
        fields
            .get(name)
            .cloned()
            .ok_or_else(|| PipelineError::Parse(format!("dump is missing component {name:?}")))
    };
    let g = ConformalMetric::new(need("u")?);
    let c = Sym3Tensor {
        xxx: need("c_xxx")?,
        xxy: need("c_xxy")?,
        xyy: need("c_xyy")?,
        yyy: need("c_yyy")?,
    };
    for f in c.components() {
        f.assert_finite();
    }

    let panel = compute_panel(&PanelInputs {
        g: &g,
        c: &c,
        w_ref: None,
        q_ref: None,
    })?;
    let v = verdicts(&panel, &cfg.thresholds);

    let out = RunOutput {
        report: DiagnosticsReport {
            schema: io::SCHEMA.into(),
            job: "verify".into(),
            grid: ChartMeta::of(&chart),
            conventions: Conventions::default(),
            solver: None,
            panel,
            verdicts: v,
            timing_ms: start.elapsed().as_secs_f64() * 1e3,
        },
        status: JobStatus::Success,
    };
    write_outputs(cfg, &out, None)?;
    Ok(out)
}
