//! Batch sweeps behind the CLI: error-versus-`dt`, error-versus-`h`,
//! commutator norms, `β` coefficients and the symbolic verification
//! suite. Each run yields CSV rows and, where it makes sense, a log-log
//! plot.

mod config;
mod fit;
mod output;

use std::path::{Path, PathBuf};

use rayon::prelude::*;

pub use config::{ExperimentKind, GaussianState, GridScaling, Precision, RunConfig};
pub use fit::{fit_slope, SlopeFit};
pub use output::{
    emit_csv, emit_svg, read_csv, render_svg, sort_rows, write_csv, Plot, RefLine, Row, Series,
    CSV_HEADER,
};

use crate::commutator_lab::{compute_alpha_comm, compute_alpha_tilde, compute_beta_comm};
use crate::discretize::{build_diag, build_dk, build_forward_diff, Grid};
use crate::error::{Error, Result};
use crate::expr::parse_expr;
use crate::extended::{exact_unitary_dd, suzuki_plan_dd, DdMatrix, DdSplitting};
use crate::linalg::{commutator, matmul, spectral_norm, ComplexMatrix, C64};
use crate::model::{build_a, build_b, build_observable_with, ModelParams, PolyObservableSpec};
use crate::splitting::{conjugate, exact_unitary, suzuki_plan, trotter_step};
use crate::symbolic::{
    discrete_height_estimate, sym_commutator, verify_height_width, CoeffSymbol, SymOp,
};

pub const METRIC_OBSERVABLE: &str = "observable_error";
pub const METRIC_UNITARY: &str = "unitary_error";
pub const METRIC_STATE: &str = "state_error";
pub const METRIC_LOCAL: &str = "local_error";
pub const METRIC_LOCAL_BOUND: &str = "local_bound";
pub const METRIC_ALPHA: &str = "alpha_comm";
pub const METRIC_ALPHA_TILDE: &str = "alpha_tilde";
pub const METRIC_BETA: &str = "beta_comm";

/// Grid sizes for the discrete height estimates.
pub const HEIGHT_NS: [usize; 4] = [16, 32, 64, 128];
/// Allowed excess of a fitted discrete height over its bound.
pub const HEIGHT_SLACK: f64 = 0.15;

/// Operators of one model instance.
#[derive(Debug, Clone)]
pub struct Model {
    pub h: f64,
    pub grid: Grid,
    pub a: ComplexMatrix,
    pub b: ComplexMatrix,
    pub ham: ComplexMatrix,
    pub o: ComplexMatrix,
}

impl Model {
    pub fn new(cfg: &RunConfig, h: f64) -> Result<Self> {
        let grid = cfg.grid_for(h)?;
        let params = ModelParams::new(h, grid, cfg.scheme)?
            .with_potential(parse_expr(&cfg.potential)?)
            .with_kinetic_coeff(cfg.kinetic_coeff)?;
        let a = build_a(&params)?;
        let b = build_b(&params)?;
        let spec = PolyObservableSpec::parse(&cfg.observable, h)?;
        let o = build_observable_with(&spec, &grid, cfg.scheme, cfg.observable_options())?;
        let ham = a.try_add(&b)?;
        Ok(Self {
            h,
            grid,
            a,
            b,
            ham,
            o,
        })
    }

    /// Normalized Gaussian packet on the grid.
    pub fn gaussian(&self, st: &GaussianState) -> Vec<C64> {
        let sigma = st.width.unwrap_or(self.h.sqrt());
        let mut psi: Vec<C64> = self
            .grid
            .nodes()
            .into_iter()
            .map(|x| {
                let amp = (-(x - st.center).powi(2) / (2.0 * sigma * sigma)).exp();
                C64::from_polar(amp, st.momentum * x / self.h)
            })
            .collect();
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in &mut psi {
            *z /= norm;
        }
        psi
    }
}

/// `|⟨ψ, M ψ⟩|`.
fn expectation(m: &ComplexMatrix, psi: &[C64]) -> f64 {
    let mpsi = m.matvec(psi);
    psi.iter()
        .zip(&mpsi)
        .map(|(a, b)| a.conj() * b)
        .sum::<C64>()
        .norm()
}

/// Errors of `n` steps of size `dt` against the exact evolution to `n·dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepErrors {
    pub observable: f64,
    pub unitary: f64,
    pub state: Option<f64>,
}

/// Exact `e^{−iH n dt}` and `T(n dt)` per step size, shared by every order.
/// In extended precision the reference is `e^{−iH dt}` raised to the `n`-th
/// power, so it spans exactly the same time as the split product.
enum Reference {
    Double {
        exact: Vec<(f64, ComplexMatrix, ComplexMatrix)>,
    },
    Extended {
        split: Box<DdSplitting>,
        o: DdMatrix,
        exact: Vec<(f64, DdMatrix, DdMatrix)>,
    },
}

impl Reference {
    fn new(model: &Model, steps: &[(f64, usize)], precision: Precision) -> Result<Self> {
        Ok(match precision {
            Precision::Double => {
                let mut exact = Vec::with_capacity(steps.len());
                for &(dt, n) in steps {
                    let e = exact_unitary(&model.ham, dt * n as f64)?;
                    let evolved = conjugate(&e, &model.o)?;
                    exact.push((dt, e, evolved));
                }
                Reference::Double { exact }
            }
            Precision::DoubleDouble => {
                let split = DdSplitting::new(&model.a, &model.b).map_err(|e| {
                    Error::Config(format!(
                        "precision = double-double is unavailable for this model: {e}"
                    ))
                })?;
                let o = DdMatrix::from_matrix(&model.o)?;
                let ham = split.hamiltonian();
                let exact = steps
                    .iter()
                    .map(|&(dt, n)| {
                        let e = exact_unitary_dd(&ham, dt).pow(n);
                        let evolved = e.conjugate(&o);
                        (dt, e, evolved)
                    })
                    .collect();
                Reference::Extended {
                    split: Box::new(split),
                    o,
                    exact,
                }
            }
        })
    }

    /// Returns `(U^n − e^{−iHt}, T_{p,n} − T(t))`.
    fn differences(
        &self,
        model: &Model,
        p: usize,
        dt: f64,
        n: usize,
    ) -> Result<(ComplexMatrix, ComplexMatrix)> {
        let missing = || Error::InvalidParameter(format!("no reference propagator for dt = {dt}"));
        match self {
            Reference::Double { exact } => {
                let (_, e, evolved) = exact.iter().find(|r| r.0 == dt).ok_or_else(missing)?;
                let un = trotter_step(&suzuki_plan(p)?, &model.a, &model.b, dt)?.pow(n)?;
                let approx = conjugate(&un, &model.o)?;
                Ok((un.try_sub(e)?, approx.try_sub(evolved)?))
            }
            Reference::Extended { split, o, exact } => {
                let (_, e, evolved) = exact.iter().find(|r| r.0 == dt).ok_or_else(missing)?;
                let un = split.step(&suzuki_plan_dd(p)?, dt).pow(n);
                let approx = un.conjugate(o);
                Ok((un.sub(e).to_matrix(), approx.sub(evolved).to_matrix()))
            }
        }
    }
}

pub fn sweep_errors(
    model: &Model,
    p: usize,
    dt: f64,
    n: usize,
    precision: Precision,
    state: Option<&GaussianState>,
) -> Result<SweepErrors> {
    let reference = Reference::new(model, &[(dt, n)], precision)?;
    errors_against(&reference, model, p, dt, n, state)
}

fn errors_against(
    reference: &Reference,
    model: &Model,
    p: usize,
    dt: f64,
    n: usize,
    state: Option<&GaussianState>,
) -> Result<SweepErrors> {
    let (du, dobs) = reference.differences(model, p, dt, n)?;
    Ok(SweepErrors {
        observable: spectral_norm(&dobs)?,
        unitary: spectral_norm(&du)?,
        state: state.map(|st| expectation(&dobs, &model.gaussian(st))),
    })
}

/// One-step observable error and the commutator bound
/// `(α + ᾶ) dt^{p+1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalWitness {
    pub error: f64,
    pub alpha: f64,
    pub alpha_tilde: f64,
    pub bound: f64,
}

pub fn local_witness(model: &Model, p: usize, dt: f64) -> Result<LocalWitness> {
    let plan = suzuki_plan(p)?;
    let alpha = compute_alpha_comm(p, &plan, &model.a, &model.b, &model.o)?;
    let alpha_tilde = compute_alpha_tilde(p, &model.ham, &model.o)?;
    local_witness_with(model, p, dt, alpha, alpha_tilde)
}

fn local_witness_with(
    model: &Model,
    p: usize,
    dt: f64,
    alpha: f64,
    alpha_tilde: f64,
) -> Result<LocalWitness> {
    let u = trotter_step(&suzuki_plan(p)?, &model.a, &model.b, dt)?;
    let e = exact_unitary(&model.ham, dt)?;
    let error = spectral_norm(&conjugate(&u, &model.o)?.try_sub(&conjugate(&e, &model.o)?)?)?;
    Ok(LocalWitness {
        error,
        alpha,
        alpha_tilde,
        bound: (alpha + alpha_tilde) * dt.powi(p as i32 + 1),
    })
}

/// Worker pool capped by `SEMITROTTER_THREADS`.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("SEMITROTTER_THREADS") {
        let k: usize = v.trim().parse().ok().filter(|k| *k > 0).ok_or_else(|| {
            Error::Config(format!(
                "SEMITROTTER_THREADS must be a positive integer, got `{v}`"
            ))
        })?;
        builder = builder.num_threads(k);
    }
    builder
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))
}

fn par_collect<J: Sync, T: Send>(
    jobs: &[J],
    f: impl Fn(&J) -> Result<Vec<T>> + Sync + Send,
) -> Result<Vec<T>> {
    let pool = thread_pool()?;
    let parts: Vec<Result<Vec<T>>> = pool.install(|| jobs.par_iter().map(&f).collect());
    let mut out = Vec::new();
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

struct RowTemplate<'a> {
    cfg: &'a RunConfig,
    n: usize,
    h: f64,
}

impl RowTemplate<'_> {
    fn row(
        &self,
        p: Option<usize>,
        dt: Option<f64>,
        t: Option<f64>,
        metric: &str,
        value: f64,
    ) -> Row {
        Row {
            experiment: self.cfg.experiment.name().to_string(),
            p,
            scheme: self.cfg.scheme.name().to_string(),
            n: Some(self.n),
            h: Some(self.h),
            dt,
            t,
            metric: metric.to_string(),
            value,
        }
    }
}

/// Error rows for every `(h, p, dt)` of the config.
fn error_sweep(cfg: &RunConfig) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for &h in &cfg.h {
        let model = Model::new(cfg, h)?;
        let steps = cfg
            .dt
            .iter()
            .map(|&dt| Ok((dt, cfg.steps(dt)?)))
            .collect::<Result<Vec<_>>>()?;
        let reference = Reference::new(&model, &steps, cfg.precision)?;
        let tpl = RowTemplate {
            cfg,
            n: model.grid.n(),
            h,
        };
        let jobs: Vec<(usize, f64)> = cfg
            .orders
            .iter()
            .flat_map(|&p| cfg.dt.iter().map(move |&dt| (p, dt)))
            .collect();
        rows.extend(par_collect(&jobs, |&(p, dt)| {
            let steps = cfg.steps(dt)?;
            let e = errors_against(&reference, &model, p, dt, steps, cfg.state.as_ref())?;
            let t = Some(steps as f64 * dt);
            let mut out = vec![
                tpl.row(Some(p), Some(dt), t, METRIC_OBSERVABLE, e.observable),
                tpl.row(Some(p), Some(dt), t, METRIC_UNITARY, e.unitary),
            ];
            if let Some(s) = e.state {
                out.push(tpl.row(Some(p), Some(dt), t, METRIC_STATE, s));
            }
            Ok(out)
        })?);
        if cfg.local_bound {
            rows.extend(par_collect(&cfg.orders, |&p| {
                let plan = suzuki_plan(p)?;
                let alpha = compute_alpha_comm(p, &plan, &model.a, &model.b, &model.o)?;
                let alpha_tilde = compute_alpha_tilde(p, &model.ham, &model.o)?;
                let mut out = vec![
                    tpl.row(Some(p), None, None, METRIC_ALPHA, alpha),
                    tpl.row(Some(p), None, None, METRIC_ALPHA_TILDE, alpha_tilde),
                ];
                for &dt in &cfg.dt {
                    let w = local_witness_with(&model, p, dt, alpha, alpha_tilde)?;
                    out.push(tpl.row(Some(p), Some(dt), Some(dt), METRIC_LOCAL, w.error));
                    out.push(tpl.row(Some(p), Some(dt), Some(dt), METRIC_LOCAL_BOUND, w.bound));
                }
                Ok(out)
            })?);
        }
    }
    sort_rows(&mut rows);
    Ok(rows)
}

pub fn run_dt_sweep(cfg: &RunConfig) -> Result<Vec<Row>> {
    error_sweep(cfg)
}

pub fn run_h_sweep(cfg: &RunConfig) -> Result<Vec<Row>> {
    error_sweep(cfg)
}

pub fn run_comm_sweep(cfg: &RunConfig) -> Result<Vec<Row>> {
    let mut rows = par_collect(&cfg.h, |&h| {
        let model = Model::new(cfg, h)?;
        let tpl = RowTemplate {
            cfg,
            n: model.grid.n(),
            h,
        };
        let mut out = Vec::new();
        for w in &cfg.words {
            let norm = spectral_norm(&w.eval(&model.a, &model.b, &model.o)?)?;
            out.push(tpl.row(None, None, None, &w.to_string(), norm));
        }
        for &p in &cfg.orders {
            let beta = compute_beta_comm(p, &model.a, &model.b, &model.o)?;
            out.push(tpl.row(Some(p), None, None, METRIC_BETA, beta));
        }
        Ok(out)
    })?;
    sort_rows(&mut rows);
    Ok(rows)
}

pub fn run_beta(cfg: &RunConfig) -> Result<Vec<Row>> {
    let jobs: Vec<(f64, usize)> = cfg
        .h
        .iter()
        .flat_map(|&h| cfg.orders.iter().map(move |&p| (h, p)))
        .collect();
    let mut rows = par_collect(&jobs, |&(h, p)| {
        let model = Model::new(cfg, h)?;
        let tpl = RowTemplate {
            cfg,
            n: model.grid.n(),
            h,
        };
        Ok(vec![
            tpl.row(
                Some(p),
                None,
                None,
                METRIC_BETA,
                compute_beta_comm(p, &model.a, &model.b, &model.o)?,
            ),
            tpl.row(
                Some(p),
                None,
                None,
                METRIC_ALPHA_TILDE,
                compute_alpha_tilde(p, &model.ham, &model.o)?,
            ),
        ])
    })?;
    sort_rows(&mut rows);
    Ok(rows)
}

/// A discrete operator family with a known height bound.
pub type OperatorBuilder = Box<dyn Fn(&Grid) -> Result<ComplexMatrix> + Sync + Send>;

pub struct HeightCase {
    pub name: String,
    pub bound: f64,
    /// The bound is attained (`D_k`), so the slope must match it.
    pub exact: bool,
    pub build: OperatorBuilder,
}

fn diag_of(g: &Grid, f: &str) -> Result<ComplexMatrix> {
    build_diag(g, &parse_expr(f)?)
}

pub fn height_cases() -> Vec<HeightCase> {
    let mut cases = Vec::new();
    for k in 1..=4usize {
        cases.push(HeightCase {
            name: format!("D_{k}"),
            bound: k as f64,
            exact: true,
            build: Box::new(move |g| Ok(build_dk(g, k))),
        });
    }
    cases.push(HeightCase {
        name: "[D_F,Y]".into(),
        bound: 0.0,
        exact: false,
        build: Box::new(|g| commutator(&build_forward_diff(g), &diag_of(g, "cos(x)")?)),
    });
    for k in 1..=2usize {
        for j in 1..=2usize {
            cases.push(HeightCase {
                name: format!("[Y_{k}D_{k},Z_{j}D_{j}]"),
                bound: (k + j - 1) as f64,
                exact: false,
                build: Box::new(move |g| {
                    let p = matmul(&diag_of(g, "sin(x)")?, &build_dk(g, k))?;
                    let q = matmul(&diag_of(g, "cos(2*x) + 2")?, &build_dk(g, j))?;
                    commutator(&p, &q)
                }),
            });
        }
    }
    cases
}

/// `[V, ∂²]` computed symbolically and compared with `−V'' − 2V'∂`.
pub fn laplacian_hand_check() -> (SymOp, bool) {
    let got = sym_commutator(&SymOp::b_sym(), &SymOp::a_sym());
    let one = |n: i128| num_rational::Ratio::from_integer(n);
    let v = |d: u32| CoeffSymbol::from_factors(vec![("V".into(), d)]);
    let want = SymOp::term(one(-1), v(2), 0, 0).plus(&SymOp::term(one(-2), v(1), 0, 1));
    let ok = got == want;
    (got, ok)
}

/// Rows plus pass/fail for the symbolic and discrete height checks.
pub fn run_verify_symbolic(cfg: &RunConfig) -> Result<(Vec<Row>, bool)> {
    let report = verify_height_width(cfg.trials, cfg.seed);
    let (_, hand_ok) = laplacian_hand_check();
    let row = |metric: &str, value: f64| Row {
        experiment: cfg.experiment.name().to_string(),
        p: None,
        scheme: String::new(),
        n: None,
        h: None,
        dt: None,
        t: None,
        metric: metric.to_string(),
        value,
    };
    let mut rows = vec![
        row("trials", report.trials as f64),
        row("checks", report.checks as f64),
        row("failures", report.failures as f64),
        row("hand_check", if hand_ok { 1.0 } else { 0.0 }),
    ];
    let mut passed = report.passed() && hand_ok;
    if let Some(c) = &report.first_counterexample {
        eprintln!("first counterexample:\n{c}");
    }
    let cases = height_cases();
    let slopes = par_collect(&cases, |c| {
        Ok(vec![discrete_height_estimate(&c.build, &HEIGHT_NS)?])
    })?;
    for (c, slope) in cases.iter().zip(slopes) {
        let ok = if c.exact {
            (slope - c.bound).abs() <= 0.1
        } else {
            slope <= c.bound + HEIGHT_SLACK
        };
        passed &= ok;
        rows.push(row(&format!("height:{}", c.name), slope));
    }
    Ok((rows, passed))
}

/// Everything one subcommand produces.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub rows: Vec<Row>,
    pub plot: Option<Plot>,
    /// `(series label, fit)` for every plotted series with enough points.
    pub fits: Vec<(String, SlopeFit)>,
    /// False only when a verification run found violations.
    pub passed: bool,
}

pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    let (rows, passed) = match cfg.experiment {
        ExperimentKind::DtSweep => (run_dt_sweep(cfg)?, true),
        ExperimentKind::HSweep => (run_h_sweep(cfg)?, true),
        ExperimentKind::CommSweep => (run_comm_sweep(cfg)?, true),
        ExperimentKind::Beta => (run_beta(cfg)?, true),
        ExperimentKind::VerifySymbolic => run_verify_symbolic(cfg)?,
    };
    let plot = make_plot(cfg, &rows);
    let fits = plot
        .as_ref()
        .map(|pl| {
            pl.series
                .iter()
                .filter_map(|s| fit_slope(&s.points).ok().map(|f| (s.label.clone(), f)))
                .collect()
        })
        .unwrap_or_default();
    Ok(Outcome {
        rows,
        plot,
        fits,
        passed,
    })
}

/// Points `(x, value)` of `metric` at order `p`, with `x` the sweep axis.
pub fn series_points(rows: &[Row], metric: &str, p: Option<usize>, by_dt: bool) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.metric == metric && (p.is_none() || r.p == p))
        .filter_map(|r| Some((if by_dt { r.dt? } else { r.h? }, r.value)))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts
}

fn make_plot(cfg: &RunConfig, rows: &[Row]) -> Option<Plot> {
    let mut series = Vec::new();
    let mut refs = Vec::new();
    let (title, x_label, y_label) = match cfg.experiment {
        ExperimentKind::DtSweep => {
            for &p in &cfg.orders {
                for metric in [METRIC_OBSERVABLE, METRIC_UNITARY] {
                    series.push(Series {
                        label: format!("p={p} {metric}"),
                        points: series_points(rows, metric, Some(p), true),
                    });
                }
                if let Some(&anchor) = series_points(rows, METRIC_OBSERVABLE, Some(p), true).last()
                {
                    refs.push(RefLine {
                        label: format!("dt^{p}"),
                        exponent: p as f64,
                        anchor,
                    });
                }
            }
            ("Error versus time step", "dt", "error")
        }
        ExperimentKind::HSweep => {
            for &p in &cfg.orders {
                for metric in [METRIC_OBSERVABLE, METRIC_UNITARY] {
                    series.push(Series {
                        label: format!("p={p} {metric}"),
                        points: series_points(rows, metric, Some(p), false),
                    });
                }
            }
            if let Some(&anchor) =
                series_points(rows, METRIC_UNITARY, cfg.orders.first().copied(), false).first()
            {
                refs.push(RefLine {
                    label: "1/h".into(),
                    exponent: -1.0,
                    anchor,
                });
            }
            ("Error versus h", "h", "error")
        }
        ExperimentKind::CommSweep => {
            for w in &cfg.words {
                series.push(Series {
                    label: w.to_string(),
                    points: series_points(rows, &w.to_string(), None, false),
                });
            }
            for &p in &cfg.orders {
                series.push(Series {
                    label: format!("beta_comm p={p}"),
                    points: series_points(rows, METRIC_BETA, Some(p), false),
                });
            }
            if let Some(&anchor) = series.first().and_then(|s| s.points.first()) {
                refs.push(RefLine {
                    label: "1/h".into(),
                    exponent: -1.0,
                    anchor,
                });
            }
            ("Commutator norms versus h", "h", "norm")
        }
        ExperimentKind::Beta => {
            for &p in &cfg.orders {
                for metric in [METRIC_BETA, METRIC_ALPHA_TILDE] {
                    series.push(Series {
                        label: format!("p={p} {metric}"),
                        points: series_points(rows, metric, Some(p), false),
                    });
                }
            }
            ("Commutator coefficients versus h", "h", "value")
        }
        ExperimentKind::VerifySymbolic => return None,
    };
    Some(Plot {
        title: title.into(),
        x_label: x_label.into(),
        y_label: y_label.into(),
        series,
        refs,
    })
}

/// Writes `<experiment>.csv`, `<experiment>.svg` and
/// `<experiment>_fits.csv` into `dir`.
pub fn write_outputs(cfg: &RunConfig, outcome: &Outcome, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let stem = cfg.experiment.name();
    let mut written = vec![dir.join(format!("{stem}.csv"))];
    emit_csv(&written[0], &outcome.rows)?;
    if let Some(plot) = &outcome.plot {
        let svg = dir.join(format!("{stem}.svg"));
        emit_svg(&svg, plot)?;
        written.push(svg);
        let fits = dir.join(format!("{stem}_fits.csv"));
        let mut w = csv::Writer::from_path(&fits)?;
        w.write_record(["series", "slope", "intercept", "r2"])?;
        for (label, f) in &outcome.fits {
            w.write_record([
                label.clone(),
                format!("{:e}", f.slope),
                format!("{:e}", f.intercept),
                format!("{:e}", f.r2),
            ])?;
        }
        w.flush()?;
        written.push(fits);
    }
    Ok(written)
}
