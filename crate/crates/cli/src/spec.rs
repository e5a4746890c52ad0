//! State and observable specifications.
//!
//! A spec is given on the command line as one of
//! - an inline family, `family=werner,v=0.5` or `family=bell:phi+`;
//! - inline JSON, `{"dims": [2, 2], "matrix": [[[re, im], ...], ...]}`;
//! - a path to a JSON file holding either schema.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use minbs_core::qmatrix::Matrix;
use minbs_core::states::{
    bell, bell_diagonal, classical_separable, pure_from_schmidt, quantum_classical, random_density, werner, BellKind,
    DensityMatrix, QcComponent,
};
use minbs_core::{Real, C};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const FAMILIES: [&str; 7] =
    ["bell", "bell_diagonal", "werner", "classical_separable", "quantum_classical", "pure_schmidt", "random"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Number(f64),
    Text(String),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Number(x) => write!(f, "{x}"),
            ParamValue::Text(s) => f.write_str(s),
        }
    }
}

/// `[re, im]` pairs, row-major.
pub type EntryRows = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateSpec {
    Matrix {
        dims: Vec<usize>,
        matrix: EntryRows,
    },
    Family {
        family: String,
        #[serde(default)]
        params: BTreeMap<String, ParamValue>,
    },
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Invalid(msg.into())
}

fn read_json<V: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<V, CliError> {
    serde_json::from_str(text).map_err(|e| invalid(format!("cannot parse {what}: {e}")))
}

fn load_json<V: for<'de> Deserialize<'de>>(arg: &str, what: &str) -> Result<V, CliError> {
    let trimmed = arg.trim();
    if trimmed.starts_with('{') {
        return read_json(trimmed, what);
    }
    let path = Path::new(trimmed);
    let text =
        std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {what} file '{trimmed}': {e}")))?;
    read_json(&text, what)
}

fn parse_value(raw: &str) -> ParamValue {
    raw.parse::<f64>().map(ParamValue::Number).unwrap_or_else(|_| ParamValue::Text(raw.to_string()))
}

impl StateSpec {
    pub fn parse(arg: &str) -> Result<Self, CliError> {
        let trimmed = arg.trim();
        match trimmed.strip_prefix("family=") {
            Some(rest) => Self::parse_inline(rest),
            None => load_json(trimmed, "state"),
        }
    }

    fn parse_inline(rest: &str) -> Result<Self, CliError> {
        let mut parts = rest.split(',');
        let head = parts.next().unwrap_or_default().trim();
        let (family, kind) = match head.split_once(':') {
            Some((f, k)) => (f, Some(k)),
            None => (head, None),
        };
        let mut params = BTreeMap::new();
        if let Some(k) = kind {
            params.insert("kind".to_string(), ParamValue::Text(k.to_string()));
        }
        for part in parts.map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| invalid(format!("expected key=value, got '{part}'")))?;
            params.insert(k.trim().to_string(), parse_value(v.trim()));
        }
        Ok(StateSpec::Family { family: family.to_string(), params })
    }

    pub fn family(&self) -> Option<&str> {
        match self {
            StateSpec::Family { family, .. } => Some(family),
            StateSpec::Matrix { .. } => None,
        }
    }

    /// Copy with one numeric parameter replaced.
    pub fn with_param(&self, name: &str, value: f64) -> Result<Self, CliError> {
        match self {
            StateSpec::Family { family, params } => {
                let mut params = params.clone();
                params.insert(name.to_string(), ParamValue::Number(value));
                Ok(StateSpec::Family { family: family.clone(), params })
            }
            StateSpec::Matrix { .. } => Err(invalid("only family specs have parameters")),
        }
    }

    /// Builds the state; `seed` is the default for random families.
    pub fn resolve<T: Real>(&self, seed: u64) -> Result<DensityMatrix<T>, CliError> {
        match self {
            StateSpec::Matrix { dims, matrix } => {
                let m = matrix_from_entries::<T>(matrix)?;
                Ok(DensityMatrix::new(m, dims.clone())?)
            }
            StateSpec::Family { family, params } => Family { name: family, params }.build(seed),
        }
    }

    /// Bell-diagonal weights, for families that have them.
    pub fn bell_weights(&self) -> Result<[f64; 4], CliError> {
        match self {
            StateSpec::Family { family, params } => {
                let f = Family { name: family, params };
                match family.as_str() {
                    "bell_diagonal" => f.bell_diagonal_weights(),
                    "werner" => Ok(minbs_core::states::werner_weights(f.number("v")?)),
                    other => Err(invalid(format!("family '{other}' is not Bell-diagonal"))),
                }
            }
            StateSpec::Matrix { .. } => Err(invalid("explicit matrices carry no Bell-diagonal weights")),
        }
    }
}

impl fmt::Display for StateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateSpec::Matrix { dims, .. } => write!(f, "matrix{dims:?}"),
            StateSpec::Family { family, params } => {
                write!(f, "{family}")?;
                for (k, v) in params {
                    write!(f, ",{k}={v}")?;
                }
                Ok(())
            }
        }
    }
}

fn matrix_from_entries<T: Real>(rows: &EntryRows) -> Result<Matrix<T>, CliError> {
    let rows: Vec<Vec<C<T>>> =
        rows.iter().map(|r| r.iter().map(|&[re, im]| C::new(T::lit(re), T::lit(im))).collect()).collect();
    Ok(Matrix::from_rows(&rows)?)
}

struct Family<'a> {
    name: &'a str,
    params: &'a BTreeMap<String, ParamValue>,
}

impl Family<'_> {
    fn get(&self, key: &str) -> Option<&ParamValue> {
        self.params.get(key)
    }

    fn number(&self, key: &str) -> Result<f64, CliError> {
        match self.get(key) {
            Some(ParamValue::Number(x)) => Ok(*x),
            Some(ParamValue::Text(s)) => {
                Err(invalid(format!("{}: parameter {key} = '{s}' is not a number", self.name)))
            }
            None => Err(invalid(format!("{}: missing parameter {key}", self.name))),
        }
    }

    fn count(&self, key: &str, default: usize) -> Result<usize, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some(_) => {
                let x = self.number(key)?;
                if x < 0.0 || x.fract() != 0.0 {
                    return Err(invalid(format!("{}: {key} must be a non-negative integer", self.name)));
                }
                Ok(x as usize)
            }
        }
    }

    /// `"2x3"` or a single number `d` meaning `d x d`.
    fn dims(&self, default: [usize; 2]) -> Result<[usize; 2], CliError> {
        let bad = || invalid(format!("{}: dims must look like 2x2", self.name));
        let text = match self.get("dims") {
            None => return Ok(default),
            Some(v) => v.to_string(),
        };
        let parts: Vec<usize> =
            text.split(['x', 'X']).map(|p| p.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?;
        match parts.as_slice() {
            [d] if *d > 0 => Ok([*d, *d]),
            [a, b] if *a > 0 && *b > 0 => Ok([*a, *b]),
            _ => Err(bad()),
        }
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<(), CliError> {
        match self.params.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => {
                Err(invalid(format!("{}: unknown parameter '{k}' (allowed: {})", self.name, allowed.join(", "))))
            }
            None => Ok(()),
        }
    }

    fn rng(&self, seed: u64) -> Result<ChaCha8Rng, CliError> {
        let seed = match self.get("seed") {
            None => seed,
            Some(_) => self.count("seed", 0)? as u64,
        };
        Ok(ChaCha8Rng::seed_from_u64(seed))
    }

    /// `l0..l3`; unspecified weights share the remaining mass equally.
    fn bell_diagonal_weights(&self) -> Result<[f64; 4], CliError> {
        self.check_keys(&["l0", "l1", "l2", "l3"])?;
        let keys = ["l0", "l1", "l2", "l3"];
        let given: Vec<Option<f64>> =
            keys.iter().map(|k| self.get(k).map(|_| self.number(k)).transpose()).collect::<Result<_, _>>()?;
        let missing = given.iter().filter(|g| g.is_none()).count();
        let rest = 1.0 - given.iter().flatten().sum::<f64>();
        let fill = if missing > 0 { rest / missing as f64 } else { 0.0 };
        let mut w = [0.0; 4];
        for (slot, g) in w.iter_mut().zip(&given) {
            *slot = g.unwrap_or(fill);
        }
        Ok(w)
    }

    fn build<T: Real>(&self, seed: u64) -> Result<DensityMatrix<T>, CliError> {
        Ok(match self.name {
            "bell" => {
                self.check_keys(&["kind"])?;
                let kind: BellKind = match self.get("kind") {
                    None => BellKind::PhiPlus,
                    Some(k) => k.to_string().parse()?,
                };
                bell(kind)
            }
            "bell_diagonal" => bell_diagonal(self.bell_diagonal_weights()?.map(T::lit))?,
            "werner" => {
                self.check_keys(&["v"])?;
                werner(T::lit(self.number("v")?))?
            }
            "classical_separable" => {
                self.check_keys(&[])?;
                classical_separable()
            }
            "pure_schmidt" => {
                self.check_keys(&["lambda", "coeffs"])?;
                let coeffs: Vec<f64> = match (self.get("lambda"), self.get("coeffs")) {
                    (Some(_), None) => {
                        let l = self.number("lambda")?;
                        if !(0.0..=1.0).contains(&l) {
                            return Err(invalid(format!("pure_schmidt: lambda = {l} outside [0, 1]")));
                        }
                        vec![l, (1.0 - l * l).sqrt()]
                    }
                    (None, Some(c)) => c
                        .to_string()
                        .split(':')
                        .map(|x| {
                            x.trim().parse::<f64>().map_err(|_| invalid(format!("pure_schmidt: bad coefficient '{x}'")))
                        })
                        .collect::<Result<_, _>>()?,
                    _ => return Err(invalid("pure_schmidt: give exactly one of lambda or coeffs")),
                };
                pure_from_schmidt(&coeffs.into_iter().map(T::lit).collect::<Vec<_>>())?
            }
            "random" => {
                self.check_keys(&["dims", "rank", "seed"])?;
                let [a, b] = self.dims([2, 2])?;
                let rank = self.count("rank", a * b)?;
                random_density::<T, _>(a * b, rank, &mut self.rng(seed)?)?.reshape(vec![a, b])?
            }
            "quantum_classical" => {
                self.check_keys(&["dims", "seed"])?;
                let [a, b] = self.dims([2, 2])?;
                let mut rng = self.rng(seed)?;
                let raw: Vec<f64> = (0..b).map(|_| rng.random_range(0.1..1.0)).collect();
                let total: f64 = raw.iter().sum();
                let components = raw
                    .into_iter()
                    .enumerate()
                    .map(|(index, w)| {
                        Ok(QcComponent {
                            rho_a: random_density::<T, _>(a, a, &mut rng)?.matrix().clone(),
                            weight: T::lit(w / total),
                            index,
                        })
                    })
                    .collect::<Result<Vec<_>, CliError>>()?;
                quantum_classical(&components, b)?
            }
            other => {
                return Err(invalid(format!("unknown family '{other}' (known: {})", FAMILIES.join(", "))));
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableSpec {
    pub matrix: EntryRows,
}

impl ObservableSpec {
    /// Pauli names (`sigma_x`, `sigma_y`, `sigma_z`), inline JSON or a file.
    pub fn parse(arg: &str) -> Result<Self, CliError> {
        let o = |re: f64, im: f64| [re, im];
        let matrix = match arg.trim() {
            "sigma_x" | "x" => vec![vec![o(0.0, 0.0), o(1.0, 0.0)], vec![o(1.0, 0.0), o(0.0, 0.0)]],
            "sigma_y" | "y" => vec![vec![o(0.0, 0.0), o(0.0, -1.0)], vec![o(0.0, 1.0), o(0.0, 0.0)]],
            "sigma_z" | "z" => vec![vec![o(1.0, 0.0), o(0.0, 0.0)], vec![o(0.0, 0.0), o(-1.0, 0.0)]],
            other => return load_json(other, "observable"),
        };
        Ok(Self { matrix })
    }

    pub fn resolve<T: Real>(&self) -> Result<Matrix<T>, CliError> {
        matrix_from_entries(&self.matrix)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inline_family_forms() {
        let s = StateSpec::parse("family=bell:phi+").unwrap();
        assert_eq!(s.family(), Some("bell"));
        assert_eq!(s.resolve::<f64>(0).unwrap().dims(), &[2, 2]);
        let w = StateSpec::parse("family=werner,v=0.5").unwrap();
        assert_eq!(w.bell_weights().unwrap(), [0.125, 0.125, 0.125, 0.625]);
        assert!(StateSpec::parse("family=werner,v=2").unwrap().resolve::<f64>(0).is_err());
        assert!(StateSpec::parse("family=nope").unwrap().resolve::<f64>(0).is_err());
        assert!(StateSpec::parse("family=werner,x=1").unwrap().resolve::<f64>(0).is_err());
    }

    #[test]
    fn bell_diagonal_fills_missing_weights() {
        let s = StateSpec::parse("family=bell_diagonal,l0=0.7,l2=0,l3=0").unwrap();
        let w = s.bell_weights().unwrap();
        assert!((w[1] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn json_matrix_spec() {
        let s = StateSpec::parse(r#"{"dims":[2],"matrix":[[[0.5,0],[0,0]],[[0,0],[0.5,0]]]}"#).unwrap();
        assert_eq!(s.resolve::<f64>(0).unwrap().dim(), 2);
        let bad = StateSpec::parse(r#"{"dims":[2],"matrix":[[[0.5,0],[0,0]],[[0,0],[0.6,0]]]}"#).unwrap();
        assert!(matches!(bad.resolve::<f64>(0), Err(CliError::InvalidState(_))));
    }

    #[test]
    fn random_family_is_seeded() {
        let s = StateSpec::parse("family=random,dims=2x3,rank=2").unwrap();
        let a = s.resolve::<f64>(4).unwrap();
        assert_eq!(a, s.resolve::<f64>(4).unwrap());
        assert_ne!(a, s.resolve::<f64>(5).unwrap());
        assert_eq!(a.dims(), &[2, 3]);
    }

    #[test]
    fn spec_json_round_trip() {
        let s = StateSpec::parse("family=pure_schmidt,coeffs=0.8:0.6").unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<StateSpec>(&text).unwrap(), s);
        assert!(s.resolve::<f64>(0).is_ok());
    }
}
