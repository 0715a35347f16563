//! Flat key-value experiment configuration with `[section]` headers.
//!
//! The parser records the line number of every diagnostic and reports all
//! violations at once rather than stopping at the first.

use std::fmt;

use wed_core::solver::SolverOptions;
use wed_core::spatial::{InitialDatum, Nonlinearity, SpatialDomain};

#[derive(Debug)]
pub struct ConfigError(pub Vec<String>);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, msg) in self.0.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{msg}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialKind {
    Power,
    Quadratic,
    Zero,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub dimension: u8,
    pub potential: PotentialKind,
    pub p: f64,
    pub u0: InitialDatum,
    pub u1: InitialDatum,
    pub half_length: f64,
    pub interior: usize,
    pub t_final: f64,
    pub steps: usize,
    pub eps: Vec<f64>,
    pub energy_checks: bool,
    pub tol_grad: Option<f64>,
    pub tol_step: f64,
    pub max_newton: usize,
    pub max_cg: usize,
    pub beta: f64,
    pub c_armijo: f64,
    pub reference_dt: f64,
    pub directory: String,
    pub precision: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dimension: 0,
            potential: PotentialKind::Power,
            p: 4.0,
            u0: InitialDatum::Constant(1.0),
            u1: InitialDatum::Zero,
            half_length: 8.0,
            interior: 127,
            t_final: 3.0,
            steps: 300,
            eps: vec![0.4, 0.2, 0.1, 0.05],
            energy_checks: true,
            tol_grad: None,
            tol_step: 1e-9,
            max_newton: 100,
            max_cg: 0,
            beta: 0.5,
            c_armijo: 1e-4,
            reference_dt: 1e-3,
            directory: "out".into(),
            precision: 12,
        }
    }
}

impl ExperimentConfig {
    pub fn domain(&self) -> Result<SpatialDomain, ConfigError> {
        match self.dimension {
            0 => Ok(SpatialDomain::scalar()),
            1 => SpatialDomain::interval(self.half_length, self.interior)
                .map_err(|e| ConfigError(vec![e.to_string()])),
            _ => unreachable!("dimension validated at parse time"),
        }
    }

    pub fn nonlinearity(&self) -> Result<Nonlinearity, ConfigError> {
        match self.potential {
            PotentialKind::Power => {
                Nonlinearity::power(self.p).map_err(|e| ConfigError(vec![e.to_string()]))
            }
            PotentialKind::Quadratic => Ok(Nonlinearity::Quadratic),
            PotentialKind::Zero => Ok(Nonlinearity::Zero),
        }
    }

    pub fn solver_options(&self) -> SolverOptions {
        let domain = if self.dimension == 0 {
            SpatialDomain::scalar()
        } else {
            SpatialDomain::Interval {
                half_length: self.half_length,
                interior: self.interior,
                mesh: 2.0 * self.half_length / (self.interior as f64 + 1.0),
            }
        };
        let mut opts = SolverOptions::default_for(&domain);
        if let Some(t) = self.tol_grad {
            opts.tol_grad = t;
        }
        opts.tol_step = self.tol_step;
        opts.max_newton = self.max_newton;
        opts.max_cg = if self.max_cg == 0 { None } else { Some(self.max_cg) };
        opts.backtrack_beta = self.beta;
        opts.armijo_c = self.c_armijo;
        opts
    }
}

fn parse_datum(value: &str, line: usize, errors: &mut Vec<String>) -> InitialDatum {
    let mut it = value.split_whitespace();
    match (it.next(), it.next(), it.next()) {
        (Some("zero"), None, _) => InitialDatum::Zero,
        (Some("constant"), Some(c), None) => match c.parse() {
            Ok(v) => InitialDatum::Constant(v),
            Err(_) => {
                errors.push(format!("line {line}: invalid constant value '{c}'"));
                InitialDatum::Zero
            }
        },
        (Some("bump"), Some(r), None) => match r.parse() {
            Ok(v) => InitialDatum::Bump { radius: v },
            Err(_) => {
                errors.push(format!("line {line}: invalid bump radius '{r}'"));
                InitialDatum::Zero
            }
        },
        _ => {
            errors.push(format!(
                "line {line}: datum must be 'zero', 'constant <c>' or 'bump <r0>', got '{value}'"
            ));
            InitialDatum::Zero
        }
    }
}

/// Parse and fully validate a configuration document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = ExperimentConfig::default();
    let mut errors = Vec::new();
    let mut section = String::new();
    let mut seen_eps = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(k) => &raw[..k],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            if !line.ends_with(']') {
                errors.push(format!("line {line_no}: malformed section header '{line}'"));
                continue;
            }
            section = line[1..line.len() - 1].trim().to_string();
            if !matches!(
                section.as_str(),
                "problem" | "time" | "sweep" | "solver" | "reference" | "output"
            ) {
                errors.push(format!("line {line_no}: unknown section '[{section}]'"));
            }
            continue;
        }
        let Some(eq) = line.find('=') else {
            errors.push(format!("line {line_no}: expected 'key = value', got '{line}'"));
            continue;
        };
        let key = line[..eq].trim();
        let value = line[eq + 1..].trim();
        let mut num = |slot: &mut f64| match value.parse::<f64>() {
            Ok(v) => *slot = v,
            Err(_) => errors.push(format!("line {line_no}: '{key}' expects a number, got '{value}'")),
        };
        match (section.as_str(), key) {
            ("problem", "dimension") => match value {
                "0" => cfg.dimension = 0,
                "1" => cfg.dimension = 1,
                _ => errors.push(format!("line {line_no}: dimension must be 0 or 1, got '{value}'")),
            },
            ("problem", "potential") => match value {
                "power" => cfg.potential = PotentialKind::Power,
                "quadratic" => cfg.potential = PotentialKind::Quadratic,
                "zero" => cfg.potential = PotentialKind::Zero,
                _ => errors.push(format!(
                    "line {line_no}: potential must be power | quadratic | zero, got '{value}'"
                )),
            },
            ("problem", "p") => num(&mut cfg.p),
            ("problem", "u0") => cfg.u0 = parse_datum(value, line_no, &mut errors),
            ("problem", "u1") => cfg.u1 = parse_datum(value, line_no, &mut errors),
            ("problem", "L") => num(&mut cfg.half_length),
            ("problem", "m") => match value.parse() {
                Ok(v) => cfg.interior = v,
                Err(_) => errors.push(format!("line {line_no}: 'm' expects an integer")),
            },
            ("time", "T") => num(&mut cfg.t_final),
            ("time", "n") => match value.parse() {
                Ok(v) => cfg.steps = v,
                Err(_) => errors.push(format!("line {line_no}: 'n' expects an integer")),
            },
            ("sweep", "eps") => {
                seen_eps = true;
                cfg.eps.clear();
                for part in value.split(',') {
                    match part.trim().parse::<f64>() {
                        Ok(v) => cfg.eps.push(v),
                        Err(_) => errors
                            .push(format!("line {line_no}: invalid eps entry '{}'", part.trim())),
                    }
                }
                if cfg.eps.is_empty() {
                    errors.push(format!("line {line_no}: eps list must be nonempty"));
                }
            }
            ("sweep", "energy_checks") => match value {
                "true" => cfg.energy_checks = true,
                "false" => cfg.energy_checks = false,
                _ => errors.push(format!(
                    "line {line_no}: energy_checks must be true or false, got '{value}'"
                )),
            },
            ("solver", "tol_grad") => match value.parse() {
                Ok(v) => cfg.tol_grad = Some(v),
                Err(_) => errors.push(format!("line {line_no}: 'tol_grad' expects a number")),
            },
            ("solver", "tol_step") => num(&mut cfg.tol_step),
            ("solver", "max_newton") => match value.parse() {
                Ok(v) => cfg.max_newton = v,
                Err(_) => errors.push(format!("line {line_no}: 'max_newton' expects an integer")),
            },
            ("solver", "max_cg") => match value.parse() {
                Ok(v) => cfg.max_cg = v,
                Err(_) => errors.push(format!("line {line_no}: 'max_cg' expects an integer")),
            },
            ("solver", "beta") => num(&mut cfg.beta),
            ("solver", "c_armijo") => num(&mut cfg.c_armijo),
            ("reference", "dt") => num(&mut cfg.reference_dt),
            ("output", "directory") => cfg.directory = value.to_string(),
            ("output", "precision") => match value.parse() {
                Ok(v) => cfg.precision = v,
                Err(_) => errors.push(format!("line {line_no}: 'precision' expects an integer")),
            },
            ("", _) => errors.push(format!("line {line_no}: key '{key}' outside any section")),
            (s, k) => errors.push(format!("line {line_no}: unknown key '{k}' in section '[{s}]'")),
        }
    }

    // cross-field constraints, collected rather than short-circuited
    if !(cfg.t_final > 0.0) {
        errors.push(format!("T must be positive, got {}", cfg.t_final));
    }
    if cfg.steps < 4 {
        errors.push(format!("n too small: need n >= 4, got {}", cfg.steps));
    }
    if cfg.potential == PotentialKind::Power && !(cfg.p > 2.0) {
        errors.push(format!("power potential needs p > 2, got {}", cfg.p));
    }
    if seen_eps || !cfg.eps.is_empty() {
        for w in cfg.eps.windows(2) {
            if !(w[1] < w[0]) {
                errors.push("eps list must be strictly descending".into());
                break;
            }
        }
        if cfg.eps.iter().any(|&e| !(e > 0.0)) {
            errors.push("eps values must be positive".into());
        }
        if cfg.energy_checks {
            for &e in &cfg.eps {
                if e >= 0.5 {
                    errors.push(format!(
                        "eps must be < 1/2 when energy checks are enabled, got {e}"
                    ));
                }
            }
        }
    }
    if cfg.dimension == 1 {
        if !(cfg.half_length > 0.0) {
            errors.push(format!("L must be positive, got {}", cfg.half_length));
        }
        if cfg.interior < 3 {
            errors.push(format!("m must be at least 3, got {}", cfg.interior));
        }
    }
    if cfg.dimension == 0 {
        if let InitialDatum::Bump { .. } = cfg.u0 {
            errors.push("bump datum requires dimension = 1".into());
        }
        if let InitialDatum::Bump { .. } = cfg.u1 {
            errors.push("bump datum requires dimension = 1".into());
        }
    }
    if let Some(t) = cfg.tol_grad {
        if !(t > 0.0) {
            errors.push(format!("tol_grad must be positive, got {t}"));
        }
    }
    if !(cfg.tol_step > 0.0) {
        errors.push(format!("tol_step must be positive, got {}", cfg.tol_step));
    }
    if cfg.max_newton == 0 {
        errors.push("max_newton must be at least 1".into());
    }
    if !(cfg.beta > 0.0 && cfg.beta < 1.0) {
        errors.push(format!("beta must lie in (0, 1), got {}", cfg.beta));
    }
    if !(cfg.c_armijo > 0.0 && cfg.c_armijo < 1.0) {
        errors.push(format!("c_armijo must lie in (0, 1), got {}", cfg.c_armijo));
    }
    if !(cfg.reference_dt > 0.0) {
        errors.push(format!("reference dt must be positive, got {}", cfg.reference_dt));
    }
    if cfg.precision < 1 || cfg.precision > 17 {
        errors.push(format!("precision must lie in 1..=17, got {}", cfg.precision));
    }

    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError(errors))
    }
}
