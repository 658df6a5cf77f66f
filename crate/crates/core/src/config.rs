//! Experiment configuration in a flat `namespace.key = value` text format.
//!
//! Lists are comma separated, matrix rows are separated by `;`, and `#`
//! starts a comment. Real numbers may be written as multiples of `pi`
//! (`4pi`, `pi/4`). [`ExperimentConfig::to_text`] writes the canonical form,
//! which parses back to the same configuration.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use thiserror::Error;

use crate::csv_float;
use crate::quadrature::Rule;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}, field '{field}': {message}")]
    Field { line: usize, field: String, message: String },
    #[error("missing field '{0}'")]
    Missing(String),
    #[error("field '{field}': {message}")]
    Invalid { field: String, message: String },
    #[error("unknown preset '{0}' (expected example1 or example2)")]
    UnknownPreset(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Psi0Config {
    pub q0: Vec<f64>,
    pub p0: Vec<f64>,
    pub gamma0_imag: f64,
    /// Every value is a separate sweep.
    pub eps: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BasisWidths {
    /// `Im C = γ·Id`, one sweep per value.
    Isotropic(Vec<f64>),
    /// A single full `Im C`; the position grid is aligned with its eigenvectors.
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxConfig {
    pub center: Vec<f64>,
    pub l_q: f64,
    pub m: Vec<usize>,
    pub samples_per_dim: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RuleConfig {
    Tcm { n: Vec<usize>, l_p: Vec<f64> },
    Gh { n: Vec<usize>, adapted: bool },
    Rs { dp: Vec<f64>, tail_tol: f64 },
}

impl RuleConfig {
    pub fn rule(&self) -> Rule {
        match self {
            RuleConfig::Tcm { .. } => Rule::Tcm,
            RuleConfig::Gh { .. } => Rule::Gh,
            RuleConfig::Rs { .. } => Rule::Rs,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub psi0: Psi0Config,
    pub basis: BasisWidths,
    pub grid: BoxConfig,
    pub rules: Vec<RuleConfig>,
    pub output: Option<String>,
}

const KEYS: &[&str] = &[
    "name",
    "psi0.q0",
    "psi0.p0",
    "psi0.gamma0_imag",
    "psi0.eps",
    "basis.gamma_imag",
    "basis.imag_matrix",
    "box.center",
    "box.L_q",
    "box.M",
    "box.samples_per_dim",
    "rules",
    "tcm.N",
    "tcm.L_p",
    "gh.N",
    "gh.adapted",
    "rs.dp",
    "rs.tail_tol",
    "output.path",
];

const EXAMPLE1: &str = "\
name = example1
psi0.q0 = 0
psi0.p0 = 0
psi0.gamma0_imag = 1
psi0.eps = 1
basis.gamma_imag = 2, 8
box.center = 0
box.L_q = 8
box.M = 16, 64
box.samples_per_dim = 2048
rules = TcM, GH, RS
tcm.N = 2..64
tcm.L_p = 4pi, 6pi, 8pi
gh.N = 2..64
gh.adapted = true
rs.dp = pi, pi/2, pi/4
rs.tail_tol = 1e-16
";

const EXAMPLE2: &str = "\
name = example2
psi0.q0 = 1
psi0.p0 = 2
psi0.gamma0_imag = 1
psi0.eps = 0.1, 0.05
basis.gamma_imag = 16, 32
box.center = 0
box.L_q = 8
box.M = 128
box.samples_per_dim = 2048
rules = TcM, GH
tcm.N = 8..64
tcm.L_p = 6pi, 8pi
gh.N = 8..64
gh.adapted = true
";

/// Key/value pairs with the line each came from.
type Entries = BTreeMap<String, (String, usize)>;

fn split_lines(text: &str) -> Result<Entries, ConfigError> {
    let mut entries = Entries::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line,
            message: format!("expected 'key = value', found '{content}'"),
        })?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(ConfigError::Field { line, field: key.into(), message: "unknown field".into() });
        }
        if entries.insert(key.to_string(), (value.trim().to_string(), line)).is_some() {
            return Err(ConfigError::Field { line, field: key.into(), message: "duplicate field".into() });
        }
    }
    Ok(entries)
}

/// A real number, optionally a multiple or fraction of `pi`.
pub fn parse_real(token: &str) -> Option<f64> {
    let t = token.trim();
    if let Some(rest) = t.strip_prefix("pi") {
        let rest = rest.trim();
        if rest.is_empty() {
            return Some(PI);
        }
        return rest.strip_prefix('/').and_then(|d| d.trim().parse::<f64>().ok()).map(|d| PI / d);
    }
    if let Some(factor) = t.strip_suffix("pi") {
        let factor = factor.trim().trim_end_matches('*').trim();
        return factor.parse::<f64>().ok().map(|f| f * PI);
    }
    t.parse::<f64>().ok()
}

struct Reader {
    entries: Entries,
}

impl Reader {
    fn raw(&self, key: &str) -> Option<(&str, usize)> {
        self.entries.get(key).map(|(v, l)| (v.as_str(), *l))
    }

    fn err(key: &str, line: usize, message: impl Into<String>) -> ConfigError {
        ConfigError::Field { line, field: key.into(), message: message.into() }
    }

    fn required(&self, key: &str) -> Result<(&str, usize), ConfigError> {
        self.raw(key).ok_or_else(|| ConfigError::Missing(key.into()))
    }

    fn reals(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        let Some((value, line)) = self.raw(key) else { return Ok(None) };
        value
            .split(',')
            .map(|t| {
                parse_real(t)
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Self::err(key, line, format!("'{}' is not a real number", t.trim())))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    fn required_reals(&self, key: &str) -> Result<Vec<f64>, ConfigError> {
        self.reals(key)?.ok_or_else(|| ConfigError::Missing(key.into()))
    }

    fn positive_reals(&self, key: &str) -> Result<Vec<f64>, ConfigError> {
        let values = self.required_reals(key)?;
        let line = self.raw(key).map(|(_, l)| l).unwrap_or(0);
        if let Some(bad) = values.iter().find(|v| **v <= 0.0) {
            return Err(Self::err(key, line, format!("{bad} is not positive")));
        }
        Ok(values)
    }

    fn positive_real(&self, key: &str) -> Result<f64, ConfigError> {
        let values = self.positive_reals(key)?;
        let line = self.raw(key).map(|(_, l)| l).unwrap_or(0);
        match values.as_slice() {
            [v] => Ok(*v),
            _ => Err(Self::err(key, line, "expected a single value")),
        }
    }

    /// Comma separated integers; `a..b` expands to the inclusive range.
    fn counts(&self, key: &str) -> Result<Vec<usize>, ConfigError> {
        let (value, line) = self.required(key)?;
        let mut out = Vec::new();
        for token in value.split(',') {
            let token = token.trim();
            let parse = |s: &str| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| Self::err(key, line, format!("'{s}' is not a non-negative integer")))
            };
            if let Some((a, b)) = token.split_once("..") {
                let (a, b) = (parse(a)?, parse(b)?);
                if a > b {
                    return Err(Self::err(key, line, format!("empty range '{token}'")));
                }
                out.extend(a..=b);
            } else {
                out.push(parse(token)?);
            }
        }
        if out.contains(&0) {
            return Err(Self::err(key, line, "counts must be at least 1"));
        }
        Ok(out)
    }

    fn ascending_counts(&self, key: &str) -> Result<Vec<usize>, ConfigError> {
        let values = self.counts(key)?;
        let line = self.raw(key).map(|(_, l)| l).unwrap_or(0);
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Self::err(key, line, "list must be strictly ascending"));
        }
        Ok(values)
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::from_entries(split_lines(text)?)
    }

    /// Parses `text`, then replaces fields with `overrides` (`key=value`).
    pub fn parse_with_overrides(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut entries = split_lines(text)?;
        for item in overrides {
            let (key, value) = item.split_once('=').ok_or_else(|| ConfigError::Invalid {
                field: item.clone(),
                message: "override must look like key=value".into(),
            })?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(ConfigError::Invalid { field: key.into(), message: "unknown field".into() });
            }
            entries.insert(key.to_string(), (value.trim().to_string(), 0));
        }
        Self::from_entries(entries)
    }

    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        Self::parse(preset_text(name)?)
    }

    fn from_entries(entries: Entries) -> Result<Self, ConfigError> {
        let r = Reader { entries };
        let name = r.raw("name").map(|(v, _)| v.to_string()).unwrap_or_else(|| "experiment".into());

        let q0 = r.required_reals("psi0.q0")?;
        let d = q0.len();
        let dim_check = |key: &str, v: &[f64]| {
            if v.len() != d {
                let line = r.raw(key).map(|(_, l)| l).unwrap_or(0);
                Err(Reader::err(key, line, format!("expected {d} components, found {}", v.len())))
            } else {
                Ok(())
            }
        };
        let p0 = r.required_reals("psi0.p0")?;
        dim_check("psi0.p0", &p0)?;
        let psi0 = Psi0Config {
            q0,
            p0,
            gamma0_imag: r.positive_real("psi0.gamma0_imag")?,
            eps: r.positive_reals("psi0.eps")?,
        };

        let basis = match (r.raw("basis.gamma_imag"), r.raw("basis.imag_matrix")) {
            (Some(_), Some((_, line))) => {
                return Err(Reader::err("basis.imag_matrix", line, "give either basis.gamma_imag or basis.imag_matrix"))
            }
            (Some(_), None) => BasisWidths::Isotropic(r.positive_reals("basis.gamma_imag")?),
            (None, Some((value, line))) => {
                let rows = value
                    .split(';')
                    .map(|row| {
                        row.split(',')
                            .map(|t| {
                                parse_real(t).ok_or_else(|| {
                                    Reader::err("basis.imag_matrix", line, format!("'{}' is not a real number", t.trim()))
                                })
                            })
                            .collect::<Result<Vec<_>, _>>()
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                if rows.len() != d || rows.iter().any(|row| row.len() != d) {
                    return Err(Reader::err("basis.imag_matrix", line, format!("expected a {d}x{d} matrix")));
                }
                BasisWidths::Matrix(rows)
            }
            (None, None) => return Err(ConfigError::Missing("basis.gamma_imag".into())),
        };

        let center = r.reals("box.center")?.unwrap_or_else(|| vec![0.0; d]);
        dim_check("box.center", &center)?;
        let samples_per_dim = match r.counts("box.samples_per_dim") {
            Ok(v) if v.len() == 1 => v[0],
            Ok(_) => {
                let line = r.raw("box.samples_per_dim").map(|(_, l)| l).unwrap_or(0);
                return Err(Reader::err("box.samples_per_dim", line, "expected a single value"));
            }
            Err(e) => return Err(e),
        };
        let grid = BoxConfig {
            center,
            l_q: r.positive_real("box.L_q")?,
            m: r.counts("box.M")?,
            samples_per_dim,
        };

        let (rules_value, rules_line) = r.required("rules")?;
        let mut rules = Vec::new();
        for tag in rules_value.split(',') {
            let rule: Rule = tag
                .parse()
                .map_err(|_| Reader::err("rules", rules_line, format!("unknown rule '{}'", tag.trim())))?;
            if rules.iter().any(|c: &RuleConfig| c.rule() == rule) {
                return Err(Reader::err("rules", rules_line, format!("rule {rule} listed twice")));
            }
            rules.push(match rule {
                Rule::Tcm => RuleConfig::Tcm {
                    n: r.ascending_counts("tcm.N")?,
                    l_p: r.positive_reals("tcm.L_p")?,
                },
                Rule::Gh => {
                    let adapted = match r.raw("gh.adapted") {
                        None => true,
                        Some((v, line)) => v
                            .parse::<bool>()
                            .map_err(|_| Reader::err("gh.adapted", line, format!("'{v}' is not true or false")))?,
                    };
                    RuleConfig::Gh { n: r.ascending_counts("gh.N")?, adapted }
                }
                Rule::Rs => {
                    let tail_tol = match r.raw("rs.tail_tol") {
                        None => 1e-16,
                        Some(_) => r.positive_real("rs.tail_tol")?,
                    };
                    RuleConfig::Rs { dp: r.positive_reals("rs.dp")?, tail_tol }
                }
            });
        }
        if rules.is_empty() {
            return Err(Reader::err("rules", rules_line, "no rules given"));
        }
        let output = r.raw("output.path").map(|(v, _)| v.to_string()).filter(|v| !v.is_empty());
        Ok(Self { name, psi0, basis, grid, rules, output })
    }

    pub fn dim(&self) -> usize {
        self.psi0.q0.len()
    }

    /// Canonical text form.
    pub fn to_text(&self) -> String {
        let reals = |v: &[f64]| v.iter().map(|x| csv_float(*x)).collect::<Vec<_>>().join(", ");
        let counts = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let mut s = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        line("name", self.name.clone());
        line("psi0.q0", reals(&self.psi0.q0));
        line("psi0.p0", reals(&self.psi0.p0));
        line("psi0.gamma0_imag", csv_float(self.psi0.gamma0_imag));
        line("psi0.eps", reals(&self.psi0.eps));
        match &self.basis {
            BasisWidths::Isotropic(g) => line("basis.gamma_imag", reals(g)),
            BasisWidths::Matrix(rows) => line(
                "basis.imag_matrix",
                rows.iter().map(|r| reals(r)).collect::<Vec<_>>().join("; "),
            ),
        }
        line("box.center", reals(&self.grid.center));
        line("box.L_q", csv_float(self.grid.l_q));
        line("box.M", counts(&self.grid.m));
        line("box.samples_per_dim", self.grid.samples_per_dim.to_string());
        line(
            "rules",
            self.rules.iter().map(|r| r.rule().tag()).collect::<Vec<_>>().join(", "),
        );
        for rule in &self.rules {
            match rule {
                RuleConfig::Tcm { n, l_p } => {
                    line("tcm.N", counts(n));
                    line("tcm.L_p", reals(l_p));
                }
                RuleConfig::Gh { n, adapted } => {
                    line("gh.N", counts(n));
                    line("gh.adapted", adapted.to_string());
                }
                RuleConfig::Rs { dp, tail_tol } => {
                    line("rs.dp", reals(dp));
                    line("rs.tail_tol", csv_float(*tail_tol));
                }
            }
        }
        if let Some(path) = &self.output {
            line("output.path", path.clone());
        }
        s
    }
}

pub fn preset_text(name: &str) -> Result<&'static str, ConfigError> {
    match name {
        "example1" => Ok(EXAMPLE1),
        "example2" => Ok(EXAMPLE2),
        other => Err(ConfigError::UnknownPreset(other.into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse() {
        let c = ExperimentConfig::preset("example1").unwrap();
        assert_eq!(c.dim(), 1);
        assert_eq!(c.grid.m, vec![16, 64]);
        assert_eq!(c.rules.len(), 3);
        match &c.rules[0] {
            RuleConfig::Tcm { n, l_p } => {
                assert_eq!(n.len(), 63);
                assert!((l_p[1] - 6.0 * PI).abs() < 1e-15);
            }
            other => panic!("unexpected {other:?}"),
        }
        let c2 = ExperimentConfig::preset("example2").unwrap();
        assert_eq!(c2.psi0.eps, vec![0.1, 0.05]);
        assert!(ExperimentConfig::preset("example3").is_err());
    }

    #[test]
    fn canonical_round_trip() {
        for name in ["example1", "example2"] {
            let c = ExperimentConfig::preset(name).unwrap();
            let text = c.to_text();
            let again = ExperimentConfig::parse(&text).unwrap();
            assert_eq!(again, c);
            assert_eq!(again.to_text(), text);
        }
    }

    #[test]
    fn pi_tokens() {
        assert_eq!(parse_real("pi"), Some(PI));
        assert_eq!(parse_real("pi/4"), Some(PI / 4.0));
        assert_eq!(parse_real("4pi"), Some(4.0 * PI));
        assert_eq!(parse_real("2*pi"), Some(2.0 * PI));
        assert_eq!(parse_real("1e-3"), Some(1e-3));
        assert_eq!(parse_real("pie"), None);
    }

    #[test]
    fn diagnostics_name_line_and_field() {
        let text = preset_text("example1").unwrap().replace("box.L_q = 8", "box.L_q = eight");
        let err = ExperimentConfig::parse(&text).unwrap_err();
        assert_eq!(
            err,
            ConfigError::Field { line: 8, field: "box.L_q".into(), message: "'eight' is not a real number".into() }
        );
        let err = ExperimentConfig::parse("name = x\nbogus.key = 1\n").unwrap_err();
        assert!(matches!(err, ConfigError::Field { line: 2, .. }));
        let err = ExperimentConfig::parse("just text\n").unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { line: 1, .. }));
    }

    #[test]
    fn rejects_non_ascending_n() {
        let text = preset_text("example2").unwrap().replace("gh.N = 8..64", "gh.N = 8, 4");
        assert!(matches!(ExperimentConfig::parse(&text), Err(ConfigError::Field { .. })));
    }

    #[test]
    fn rejects_non_positive() {
        let text = preset_text("example2").unwrap().replace("psi0.eps = 0.1, 0.05", "psi0.eps = 0.1, -1");
        assert!(ExperimentConfig::parse(&text).is_err());
    }

    #[test]
    fn overrides_replace_fields() {
        let c = ExperimentConfig::parse_with_overrides(
            preset_text("example1").unwrap(),
            &["box.M = 32".to_string(), "basis.gamma_imag=8".to_string()],
        )
        .unwrap();
        assert_eq!(c.grid.m, vec![32]);
        assert_eq!(c.basis, BasisWidths::Isotropic(vec![8.0]));
        assert!(ExperimentConfig::parse_with_overrides("", &["nope=1".into()]).is_err());
    }

    #[test]
    fn matrix_basis() {
        let text = "psi0.q0 = 0, 0\npsi0.p0 = 0, 0\npsi0.gamma0_imag = 1\npsi0.eps = 1\n\
                    basis.imag_matrix = 2, 0.5; 0.5, 1\nbox.L_q = 4\nbox.M = 8\n\
                    box.samples_per_dim = 64\nrules = GH\ngh.N = 4, 8\n";
        let c = ExperimentConfig::parse(text).unwrap();
        assert_eq!(c.basis, BasisWidths::Matrix(vec![vec![2.0, 0.5], vec![0.5, 1.0]]));
        assert_eq!(ExperimentConfig::parse(&c.to_text()).unwrap(), c);
    }
}
