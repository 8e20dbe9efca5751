//! `key = value` run configuration.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::commutator_lab::CommExpr;
use crate::discretize::{Grid, SchemeKind};
use crate::error::{Error, Result};
use crate::expr::parse_expr;
use crate::model::{
    ObservableOptions, OddDifference, PolyObservableSpec, DEFAULT_OBSERVABLE, DEFAULT_POTENTIAL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExperimentKind {
    DtSweep,
    HSweep,
    CommSweep,
    Beta,
    VerifySymbolic,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::DtSweep,
        ExperimentKind::HSweep,
        ExperimentKind::CommSweep,
        ExperimentKind::Beta,
        ExperimentKind::VerifySymbolic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::DtSweep => "dt-sweep",
            ExperimentKind::HSweep => "h-sweep",
            ExperimentKind::CommSweep => "comm-sweep",
            ExperimentKind::Beta => "beta",
            ExperimentKind::VerifySymbolic => "verify-symbolic",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown experiment `{}`", s.trim())))
    }
}

/// How the grid size follows `h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridScaling {
    /// `N` from the config for every `h`.
    Fixed,
    /// `N = grid_factor / h`, rounded to an even count.
    InverseH,
}

impl FromStr for GridScaling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "fixed" => Ok(GridScaling::Fixed),
            "inverse-h" => Ok(GridScaling::InverseH),
            other => Err(Error::Config(format!(
                "unknown grid_scaling `{other}` (fixed | inverse-h)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    Double,
    /// About 32 significant digits; needs a circulant `A`.
    DoubleDouble,
}

impl FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "double" => Ok(Precision::Double),
            "double-double" => Ok(Precision::DoubleDouble),
            other => Err(Error::Config(format!(
                "unknown precision `{other}` (double | double-double)"
            ))),
        }
    }
}

/// Gaussian wave packet `exp(−(x−x0)²/(2σ²) + i k x / h)` used for the
/// state-expectation metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianState {
    pub center: f64,
    /// `σ`; `None` means `√h`.
    pub width: Option<f64>,
    pub momentum: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: ExperimentKind,
    pub a: f64,
    pub b: f64,
    pub n: usize,
    pub grid_scaling: GridScaling,
    pub grid_factor: f64,
    pub h: Vec<f64>,
    pub dt: Vec<f64>,
    pub t_final: f64,
    pub orders: Vec<usize>,
    pub potential: String,
    pub observable: String,
    pub scheme: SchemeKind,
    pub kinetic_coeff: f64,
    pub odd_difference: OddDifference,
    pub symmetrize: bool,
    pub precision: Precision,
    pub words: Vec<CommExpr>,
    pub seed: u64,
    pub trials: usize,
    pub state: Option<GaussianState>,
    /// Adds one-step error and local-bound rows to a dt-sweep.
    pub local_bound: bool,
    pub output_dir: Option<PathBuf>,
}

fn pow2_list(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|k| 2f64.powi(-k)).collect()
}

const DEFAULT_WORDS: [&str; 4] = ["[A,B]", "[[A,B],O]", "[A,[[A,B],O]]", "[A,[A,[[A,B],O]]]"];

impl RunConfig {
    pub fn defaults(experiment: ExperimentKind) -> Self {
        let mut cfg = Self {
            experiment,
            a: -std::f64::consts::PI,
            b: std::f64::consts::PI,
            n: 64,
            grid_scaling: GridScaling::InverseH,
            grid_factor: 1.0,
            h: pow2_list(5, 10),
            dt: vec![0.1],
            t_final: 0.5,
            orders: vec![2, 4, 6],
            potential: DEFAULT_POTENTIAL.into(),
            observable: DEFAULT_OBSERVABLE.into(),
            scheme: SchemeKind::FiniteDifference,
            kinetic_coeff: 0.5,
            odd_difference: OddDifference::Forward,
            symmetrize: false,
            precision: Precision::Double,
            words: Vec::new(),
            seed: 42,
            trials: 1000,
            state: None,
            local_bound: false,
            output_dir: None,
        };
        match experiment {
            ExperimentKind::DtSweep => {
                cfg.grid_scaling = GridScaling::Fixed;
                cfg.h = vec![1.0 / 64.0];
                cfg.dt = pow2_list(2, 6);
                cfg.orders = vec![1, 2, 4, 6];
                cfg.precision = Precision::DoubleDouble;
            }
            ExperimentKind::HSweep => {}
            ExperimentKind::CommSweep => {
                cfg.orders = vec![2];
                cfg.words = DEFAULT_WORDS
                    .iter()
                    .map(|w| w.parse().expect("default word"))
                    .collect();
            }
            ExperimentKind::Beta => cfg.orders = vec![2],
            ExperimentKind::VerifySymbolic => {}
        }
        cfg
    }

    pub fn from_file(path: &Path, experiment: ExperimentKind) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, experiment)
    }

    /// Applies `text` on top of the defaults for `experiment`.
    pub fn parse(text: &str, experiment: ExperimentKind) -> Result<Self> {
        let mut cfg = Self::defaults(experiment);
        let mut seen = std::collections::HashSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            let at = |e: Error| Error::Config(format!("line {}: {}", lineno + 1, strip_prefix(&e)));
            let (key, value) = line.split_once('=').ok_or_else(|| {
                at(Error::Config(format!(
                    "expected `key = value`, got `{line}`"
                )))
            })?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(at(Error::Config(format!("duplicate key `{key}`"))));
            }
            cfg.set(key, value.trim()).map_err(at)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "experiment" => {
                let k: ExperimentKind = unquote(value).parse()?;
                if k != self.experiment {
                    return Err(Error::Config(format!(
                        "config is for `{k}` but `{}` was requested",
                        self.experiment
                    )));
                }
            }
            "a" => self.a = number(value)?,
            "b" => self.b = number(value)?,
            "N" | "n" => self.n = count(value)?,
            "grid_scaling" => self.grid_scaling = unquote(value).parse()?,
            "grid_factor" => self.grid_factor = number(value)?,
            "h" => self.h = number_list(value)?,
            "dt" => self.dt = number_list(value)?,
            "t" | "t_final" => self.t_final = number(value)?,
            "orders" | "p" => {
                self.orders = split_list(value)?
                    .iter()
                    .map(|s| count(s))
                    .collect::<Result<_>>()?
            }
            "potential" => self.potential = unquote(value).to_string(),
            "observable" => self.observable = unquote(value).to_string(),
            "scheme" => self.scheme = unquote(value).parse()?,
            "kinetic_coeff" => self.kinetic_coeff = number(value)?,
            "odd_difference" => self.odd_difference = unquote(value).parse()?,
            "symmetrize" => self.symmetrize = boolean(value)?,
            "precision" => self.precision = unquote(value).parse()?,
            "words" => {
                self.words = split_list(value)?
                    .iter()
                    .map(|w| unquote(w).parse())
                    .collect::<Result<_>>()?
            }
            "seed" => self.seed = count(value)? as u64,
            "trials" => self.trials = count(value)?,
            "state" => {
                self.state = match unquote(value) {
                    "none" | "off" => None,
                    "gaussian" => Some(self.state.unwrap_or(GaussianState {
                        center: 0.0,
                        width: None,
                        momentum: 0.0,
                    })),
                    other => {
                        return Err(Error::Config(format!(
                            "unknown state `{other}` (none | gaussian)"
                        )))
                    }
                }
            }
            "state_center" | "state_width" | "state_momentum" => {
                let st = self.state.get_or_insert(GaussianState {
                    center: 0.0,
                    width: None,
                    momentum: 0.0,
                });
                let v = number(value)?;
                match key {
                    "state_center" => st.center = v,
                    "state_width" => st.width = Some(v),
                    _ => st.momentum = v,
                }
            }
            "local_bound" => self.local_bound = boolean(value)?,
            "output_dir" => self.output_dir = Some(PathBuf::from(unquote(value))),
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.a.is_finite() && self.b.is_finite() && self.a < self.b) {
            return bad(format!("domain [{}, {}) is empty", self.a, self.b));
        }
        if self.n < 4 || self.n % 2 == 1 {
            return bad(format!("N must be even and at least 4, got {}", self.n));
        }
        if !(self.grid_factor > 0.0 && self.grid_factor.is_finite()) {
            return bad(format!(
                "grid_factor must be positive, got {}",
                self.grid_factor
            ));
        }
        for (name, list) in [("h", &self.h), ("dt", &self.dt)] {
            if list.is_empty() {
                return bad(format!("`{name}` list is empty"));
            }
            if let Some(v) = list.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
                return bad(format!("`{name}` values must be positive, got {v}"));
            }
        }
        if let Some(h) = self.h.iter().find(|h| **h > 1.0) {
            return bad(format!("h must lie in (0, 1], got {h}"));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return bad(format!("t must be positive, got {}", self.t_final));
        }
        if !(self.kinetic_coeff > 0.0 && self.kinetic_coeff.is_finite()) {
            return bad(format!(
                "kinetic_coeff must be positive, got {}",
                self.kinetic_coeff
            ));
        }
        if self.orders.is_empty() {
            return bad("`orders` list is empty".into());
        }
        for &p in &self.orders {
            if p == 0 || (p > 1 && p % 2 == 1) || p > crate::splitting::MAX_ORDER {
                return bad(format!(
                    "order {p} is not 1 or an even number up to {}",
                    crate::splitting::MAX_ORDER
                ));
            }
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if let Some(GaussianState { width: Some(w), .. }) = self.state {
            if w.is_nan() || w <= 0.0 {
                return bad(format!("state_width must be positive, got {w}"));
            }
        }
        parse_expr(&self.potential).map_err(|e| Error::Config(format!("potential: {e}")))?;
        PolyObservableSpec::parse(&self.observable, 0.5)
            .map_err(|e| Error::Config(format!("observable: {}", strip_prefix(&e))))?;
        if matches!(
            self.experiment,
            ExperimentKind::DtSweep | ExperimentKind::HSweep
        ) {
            for &dt in &self.dt {
                self.steps(dt)?;
            }
        }
        if self.experiment == ExperimentKind::CommSweep && self.words.is_empty() {
            return bad("`words` list is empty".into());
        }
        for &h in &self.h {
            self.grid_for(h)?;
        }
        Ok(())
    }

    /// `n = t / dt`, rejecting non-integral ratios.
    pub fn steps(&self, dt: f64) -> Result<usize> {
        let ratio = self.t_final / dt;
        let n = ratio.round();
        if n < 1.0 || (ratio - n).abs() > 1e-9 * n.max(1.0) {
            return Err(Error::Config(format!(
                "t / dt = {} / {} = {ratio} is not a whole number of steps",
                self.t_final, dt
            )));
        }
        Ok(n as usize)
    }

    pub fn grid_size(&self, h: f64) -> usize {
        match self.grid_scaling {
            GridScaling::Fixed => self.n,
            GridScaling::InverseH => {
                let n = (self.grid_factor / h).round() as usize;
                (n + n % 2).max(4)
            }
        }
    }

    pub fn grid_for(&self, h: f64) -> Result<Grid> {
        Grid::new(self.a, self.b, self.grid_size(h)).map_err(|e| Error::Config(strip_prefix(&e)))
    }

    pub fn observable_options(&self) -> ObservableOptions {
        ObservableOptions {
            odd_difference: self.odd_difference,
            symmetrize: self.symmetrize,
        }
    }
}

fn strip_prefix(e: &Error) -> String {
    let s = e.to_string();
    s.strip_prefix("config error: ")
        .map(str::to_string)
        .unwrap_or(s)
}

/// Drops a `#` comment that is not inside quotes.
fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

fn unquote(s: &str) -> &str {
    let s = s.trim();
    s.strip_prefix('"')
        .and_then(|t| t.strip_suffix('"'))
        .unwrap_or(s)
}

/// Splits on commas outside quotes and brackets.
fn split_list(value: &str) -> Result<Vec<String>> {
    let mut items = Vec::new();
    let mut cur = String::new();
    let (mut quoted, mut depth) = (false, 0i32);
    for c in value.chars() {
        match c {
            '"' => quoted = !quoted,
            '[' | '(' if !quoted => depth += 1,
            ']' | ')' if !quoted => depth -= 1,
            ',' if !quoted && depth == 0 => {
                items.push(std::mem::take(&mut cur));
                continue;
            }
            _ => {}
        }
        cur.push(c);
    }
    if quoted || depth != 0 {
        return Err(Error::Config(format!(
            "unbalanced quotes or brackets in `{value}`"
        )));
    }
    items.push(cur);
    let items: Vec<String> = items.into_iter().map(|s| s.trim().to_string()).collect();
    if items.iter().any(String::is_empty) {
        return Err(Error::Config(format!("empty item in list `{value}`")));
    }
    Ok(items)
}

/// Constant expression such as `1/64` or `-pi`.
fn number(value: &str) -> Result<f64> {
    let text = unquote(value);
    let e = parse_expr(text).map_err(|e| Error::Config(format!("bad number `{text}`: {e}")))?;
    if !e.is_constant() {
        return Err(Error::Config(format!("`{text}` must not depend on x")));
    }
    let v = e
        .eval(0.0)
        .map_err(|e| Error::Config(format!("bad number `{text}`: {e}")))?;
    if !v.is_finite() {
        return Err(Error::Config(format!("`{text}` is not finite")));
    }
    Ok(v)
}

fn number_list(value: &str) -> Result<Vec<f64>> {
    split_list(value)?.iter().map(|s| number(s)).collect()
}

fn count(value: &str) -> Result<usize> {
    let text = unquote(value);
    text.parse()
        .map_err(|_| Error::Config(format!("expected a non-negative integer, got `{text}`")))
}

fn boolean(value: &str) -> Result<bool> {
    match unquote(value) {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(Error::Config(format!(
            "expected true or false, got `{other}`"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        for k in ExperimentKind::ALL {
            let cfg = RunConfig::defaults(k);
            cfg.validate().unwrap();
            assert_eq!(k.name().parse::<ExperimentKind>().unwrap(), k);
        }
        let dt = RunConfig::defaults(ExperimentKind::DtSweep);
        assert_eq!(dt.dt, vec![0.25, 0.125, 0.0625, 0.03125, 0.015625]);
        assert_eq!(dt.grid_size(1.0 / 64.0), 64);
        assert_eq!(dt.steps(1.0 / 64.0).unwrap(), 32);
        let hs = RunConfig::defaults(ExperimentKind::HSweep);
        assert_eq!(hs.steps(0.1).unwrap(), 5);
        assert_eq!(hs.grid_size(1.0 / 1024.0), 1024);
        assert_eq!(
            RunConfig::defaults(ExperimentKind::CommSweep).words.len(),
            4
        );
    }

    #[test]
    fn parses_keys_lists_and_comments() {
        let text = r#"
            # sweep
            experiment = dt-sweep
            N = 32            # grid
            h = 1/32
            dt = 1/4, 1/8, 1/16
            t = 0.5
            orders = 2, 4
            potential = "cos(x) + 0.5*sin(2*x)"   # quoted expression
            observable = "0: cos(x); 1: 1"
            scheme = spectral
            precision = double
            a = -pi
            b = pi
            state = gaussian
            state_center = 0.5
        "#;
        let cfg = RunConfig::parse(text, ExperimentKind::DtSweep).unwrap();
        assert_eq!(cfg.n, 32);
        assert_eq!(cfg.dt, vec![0.25, 0.125, 0.0625]);
        assert_eq!(cfg.orders, vec![2, 4]);
        assert_eq!(cfg.potential, "cos(x) + 0.5*sin(2*x)");
        assert_eq!(cfg.scheme, SchemeKind::Spectral);
        assert_eq!(cfg.precision, Precision::Double);
        assert_eq!(cfg.state.unwrap().center, 0.5);
    }

    #[test]
    fn parses_word_lists() {
        let cfg = RunConfig::parse(
            r#"words = [A,B], "[[A,B],O]", [A, [B, O]]"#,
            ExperimentKind::CommSweep,
        )
        .unwrap();
        let shown: Vec<String> = cfg.words.iter().map(|w| w.to_string()).collect();
        assert_eq!(shown, ["[A,B]", "[[A,B],O]", "[A,[B,O]]"]);
    }

    #[test]
    fn rejects_bad_configs() {
        let cases = [
            "dt = 0.3",
            "dt = 0.1, 0.15",
            "t = 0.55\ndt = 0.1",
            "h = 0",
            "h = 2",
            "dt = ",
            "orders = 3",
            "orders = 0",
            "N = 7",
            "a = 1\nb = 0",
            "potential = \"cos(\"",
            "observable = \"cos(x)\"",
            "bogus = 1",
            "N = 8\nN = 16",
            "just words",
            "dt = x",
            "experiment = h-sweep",
            "scheme = wavelet",
            "symmetrize = maybe",
            "words = [A,B",
        ];
        for c in cases {
            let err = RunConfig::parse(c, ExperimentKind::DtSweep).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{c}: {err}");
        }
        assert!(RunConfig::parse("words = [A,C]", ExperimentKind::CommSweep).is_err());
    }

    #[test]
    fn integral_steps_tolerate_rounding() {
        let cfg = RunConfig::parse("t = 0.3\ndt = 0.1", ExperimentKind::HSweep).unwrap();
        assert_eq!(cfg.steps(0.1).unwrap(), 3);
    }
}
