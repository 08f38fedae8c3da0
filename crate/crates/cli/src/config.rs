//! Run configuration, validated on load. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use projlab_core::catalog;
use projlab_core::measure::MeasureSpec;
use projlab_core::{Field, FieldSpec, Matrix};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub measure: MeasureConfig,
    pub command: Command,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Output directory.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Spectrum,
    Structure,
    Stationary,
    Limitset,
    Jsr,
    Regularity,
    Reproduce,
}

/// A matrix entry: a number, or a string such as `"1/2"` or `"-0.25"`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Num(f64),
    Text(String),
}

impl Entry {
    pub fn parse<F: Field>(&self, f: &F) -> Result<F::Elem, CliError> {
        let s = match self {
            Entry::Num(x) if !x.is_finite() => return Err(CliError::Validation(format!("non-finite entry {x}"))),
            Entry::Num(x) => format!("{x}"),
            Entry::Text(s) => s.trim().to_string(),
        };
        Ok(f.parse_elem(&s)?)
    }
}

pub fn parse_vector<F: Field>(f: &F, v: &[Entry]) -> Result<Vec<F::Elem>, CliError> {
    v.iter().map(|e| e.parse(f)).collect()
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    #[serde(default)]
    pub field: Option<FieldSpec>,
    /// One of the built-in examples `1`, `2`, `3`; excludes `atoms`.
    #[serde(default)]
    pub example: Option<u8>,
    #[serde(default)]
    pub atoms: Option<Vec<Vec<Vec<Entry>>>>,
    /// Defaults to uniform.
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    /// Checked against the atoms when given.
    #[serde(default)]
    pub dimension: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl MeasureConfig {
    pub fn field(&self) -> FieldSpec {
        self.field.unwrap_or(FieldSpec::Real)
    }

    pub fn build<F: Field>(&self, f: F) -> Result<MeasureSpec<F>, CliError> {
        let spec = match (self.example, &self.atoms) {
            (Some(_), Some(_)) => return Err(CliError::Validation("measure has both example and atoms".into())),
            (None, None) => return Err(CliError::Validation("measure needs example or atoms".into())),
            (Some(k), None) => {
                let spec = catalog::example(k, f).ok_or_else(|| CliError::Validation(format!("unknown example {k}")))?;
                match &self.weights {
                    Some(w) => MeasureSpec::new(spec.field, spec.atoms, w.clone()),
                    None => spec,
                }
            }
            (None, Some(atoms)) => {
                let mats = atoms
                    .iter()
                    .map(|rows| {
                        let rows = rows.iter().map(|r| parse_vector(&f, r)).collect::<Result<Vec<_>, _>>()?;
                        Ok(Matrix::from_rows(rows)?)
                    })
                    .collect::<Result<Vec<_>, CliError>>()?;
                match &self.weights {
                    Some(w) => MeasureSpec::new(f, mats, w.clone()),
                    None if mats.is_empty() => return Err(CliError::Validation("no atoms".into())),
                    None => MeasureSpec::uniform(f, mats),
                }
            }
        };
        if let Some(d) = self.dimension {
            if d != spec.dim() {
                return Err(CliError::Validation(format!("dimension {d} does not match {}x{} atoms", spec.dim(), spec.dim())));
            }
        }
        Ok(spec.checked()?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    TopDirection,
    PushForward,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub n: Option<usize>,
    pub trials: Option<usize>,
    pub depth: Option<usize>,
    pub eps: Option<f64>,
    pub n_grid: Option<Vec<usize>>,
    pub alpha_grid: Option<Vec<f64>>,
    pub x: Option<Vec<Entry>>,
    pub phi: Option<Vec<Entry>>,
    pub sampler: Option<SamplerKind>,
    pub max_word_len: Option<usize>,
    pub budget: Option<usize>,
    pub resamples: Option<usize>,
    /// Basis of the chart subspace; defaults to `L_mu`.
    pub l: Option<Vec<Vec<Entry>>>,
    /// Allow the uncertified bracket when `dim L > 1`.
    pub experimental: Option<bool>,
}

impl RunConfig {
    pub fn from_json(s: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Command-line seed, then the run seed, then the measure seed.
    pub fn resolve_seed(&self, cli: Option<u64>) -> Option<u64> {
        cli.or(self.seed).or(self.measure.seed)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let s = std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        Self::from_json(&s)
    }

    /// Checks that do not need the measure to be built.
    pub fn validate(&self) -> Result<(), CliError> {
        self.measure.field().validate()?;
        let p = &self.params;
        let positive = |name: &str, v: Option<usize>| match v {
            Some(0) => Err(CliError::Validation(format!("{name} must be positive"))),
            _ => Ok(()),
        };
        positive("n", p.n)?;
        positive("trials", p.trials)?;
        positive("depth", p.depth)?;
        positive("max_word_len", p.max_word_len)?;
        if let Some(e) = p.eps {
            if !(e.is_finite() && e > 0.0) {
                return Err(CliError::Validation("eps must be positive".into()));
            }
        }
        if let Some(g) = &p.n_grid {
            if g.is_empty() || g[0] == 0 || g.windows(2).any(|w| w[1] <= w[0]) {
                return Err(CliError::Validation("n_grid must be positive and strictly increasing".into()));
            }
        }
        if let Some(a) = &p.alpha_grid {
            if a.is_empty() || a.iter().any(|x| !(x.is_finite() && *x > 0.0)) || a.windows(2).any(|w| w[1] <= w[0]) {
                return Err(CliError::Validation("alpha_grid must be positive and strictly increasing".into()));
            }
        }
        if self.command == Command::Reproduce && !matches!(self.measure.example, Some(1..=3)) {
            return Err(CliError::Validation("reproduce needs measure.example in 1..=3".into()));
        }
        if self.command == Command::Reproduce && (self.measure.weights.is_some() || self.measure.field.is_some_and(|f| f != FieldSpec::Real)) {
            return Err(CliError::Validation("reproduce runs the built-in examples over R only".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use projlab_core::RealField;

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = r#"{"measure": {"example": 2}, "command": "spectrum", "colour": 1}"#;
        assert!(matches!(RunConfig::from_json(bad), Err(CliError::Validation(_))));
        let bad = r#"{"measure": {"example": 2}, "command": "spectrum", "params": {"steps": 10}}"#;
        assert!(matches!(RunConfig::from_json(bad), Err(CliError::Validation(_))));
        let bad = r#"{"measure": {"example": 2, "weight": [1]}, "command": "spectrum"}"#;
        assert!(matches!(RunConfig::from_json(bad), Err(CliError::Validation(_))));
    }

    #[test]
    fn entries_parse_as_numbers_or_strings() {
        let cfg = RunConfig::from_json(
            r#"{"measure": {"atoms": [[[2, 0], [0, "1/2"]]], "weights": [1.0]}, "command": "spectrum"}"#,
        )
        .unwrap();
        let spec = cfg.measure.build(RealField::default()).unwrap();
        assert_eq!(spec.atoms[0][(1, 1)], 0.5);
        assert_eq!(cfg.measure.field(), FieldSpec::Real);
    }

    #[test]
    fn measure_dimension_and_seed() {
        let f = RealField::default();
        let cfg = RunConfig::from_json(r#"{"measure": {"field": "real", "dimension": 3, "example": 1, "seed": 9}, "command": "spectrum"}"#).unwrap();
        assert!(cfg.measure.build(f).is_ok());
        assert_eq!(cfg.resolve_seed(None), Some(9));
        assert_eq!(cfg.resolve_seed(Some(4)), Some(4));
        let cfg = RunConfig::from_json(r#"{"measure": {"dimension": 2, "example": 1}, "command": "spectrum", "seed": 3}"#).unwrap();
        assert!(matches!(cfg.measure.build(f), Err(CliError::Validation(_))));
        assert_eq!(cfg.resolve_seed(None), Some(3));
    }

    #[test]
    fn padic_field_and_bad_prime() {
        let cfg = RunConfig::from_json(r#"{"measure": {"field": {"padic": 3}, "example": 1}, "command": "structure"}"#).unwrap();
        assert_eq!(cfg.measure.field(), FieldSpec::Padic(3));
        let bad = r#"{"measure": {"field": {"padic": 4}, "example": 1}, "command": "structure"}"#;
        assert!(matches!(RunConfig::from_json(bad), Err(CliError::Validation(_))));
    }

    #[test]
    fn malformed_measures_are_validation_errors() {
        let f = RealField::default();
        let cfg = RunConfig::from_json(r#"{"measure": {"example": 2, "weights": [0.7, 0.7]}, "command": "spectrum"}"#).unwrap();
        assert!(matches!(cfg.measure.build(f), Err(CliError::Validation(_))));
        let cfg = RunConfig::from_json(r#"{"measure": {"atoms": [[[1, 1], [1, 1]]]}, "command": "spectrum"}"#).unwrap();
        assert!(matches!(cfg.measure.build(f), Err(CliError::Validation(_))));
        let cfg = RunConfig::from_json(r#"{"measure": {"atoms": [[[1, "x"], [0, 1]]]}, "command": "spectrum"}"#).unwrap();
        assert!(matches!(cfg.measure.build(f), Err(CliError::Validation(_))));
        let bad = r#"{"measure": {"example": 9}, "command": "reproduce"}"#;
        assert!(matches!(RunConfig::from_json(bad), Err(CliError::Validation(_))));
        let bad = r#"{"measure": {"example": 1}, "command": "spectrum", "params": {"n_grid": [10, 5]}}"#;
        assert!(matches!(RunConfig::from_json(bad), Err(CliError::Validation(_))));
    }
}
