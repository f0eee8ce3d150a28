//! Run configuration files.
//!
//! One `key = value` per line; `#` starts a comment. Keys:
//!
//! | key | values |
//! |-----|--------|
//! | `formulation` | `hybrid`, `mimetic`, `mixed` |
//! | `stabilization.preset` | `hybrid-diagonal(<α>|lambda)`, `mixed-strong(<ν>)`, `ncfe(<β>)`, `mfe`, `two-point`, `random(<seed>[, hybrid|mimetic|mixed])` |
//! | `stabilization.matrix-file` | path to per-cell matrices (see [`read_stabilization_file`]) |
//! | `points` | `centroid`, `super-admissible`, `file:<path>` with one `x y` per line |
//! | `condense` | `none`, `all`, or comma-separated edge indices |
//! | `tensor` | `case-a`, `case-b`, `case-c`, or four numbers `a11 a12 a21 a22` |
//! | `source` | `case-a`, `case-b`, `case-c`, `affine`, `zero`, `one` |
//! | `family` | comma-separated cartesian sizes, e.g. `8,16,32,64` |
//! | `family.amplitude`, `family.seed` | vertex perturbation of the family |
//! | `equivalence.convert` | `true` (default) or `false` |
//! | `order_p_min`, `order_f_min` | convergence thresholds |

use std::path::{Path, PathBuf};

use crate::local::{Alpha, LocalStabilization, Preset, Variant};
use crate::mesh::Mesh;
use crate::scheme::{Condense, Formulation, StabilizationSpec};
use crate::{Error, Result, Tensor, Vec2};

#[derive(Debug, Clone, PartialEq)]
pub enum StabilizationSource {
    Spec(StabilizationSpec),
    MatrixFile(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum PointsSpec {
    Centroid,
    SuperAdmissible,
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum TensorSpec {
    Named(String),
    Constant(Tensor),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SourceSpec {
    /// A manufactured case: `case-a`, `case-b`, `case-c` or `affine`.
    Case(String),
    Zero,
    One,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub formulation: Formulation,
    pub stabilization: StabilizationSource,
    pub points: PointsSpec,
    pub condense: Condense,
    /// `None` means the tensor of the source case (identity otherwise).
    pub tensor: Option<TensorSpec>,
    pub source: SourceSpec,
    pub family: Vec<usize>,
    pub family_amplitude: f64,
    pub family_seed: u64,
    pub convert: bool,
    pub order_p_min: Option<f64>,
    pub order_f_min: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            formulation: Formulation::Hybrid,
            stabilization: StabilizationSource::Spec(StabilizationSpec::Preset(Preset::HybridDiagonal(Alpha::Constant(1.0)))),
            points: PointsSpec::Centroid,
            condense: Condense::None,
            tensor: None,
            source: SourceSpec::One,
            family: vec![8, 16, 32, 64],
            family_amplitude: 0.0,
            family_seed: 1,
            convert: true,
            order_p_min: None,
            order_f_min: None,
        }
    }
}

fn config_err(key: &str, msg: impl Into<String>) -> Error {
    Error::Config { key: key.into(), msg: msg.into() }
}

fn parse_f64(key: &str, s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| config_err(key, format!("`{s}` is not a number")))
}

fn parse_variant(key: &str, s: &str) -> Result<Variant> {
    match s.trim() {
        "mimetic" | "u" | "U" => Ok(Variant::MimeticU),
        "hybrid" | "bh" | "BH" => Ok(Variant::HybridB),
        "mixed" | "bm" | "BM" => Ok(Variant::MixedB),
        other => Err(config_err(key, format!("unknown stabilization kind `{other}`"))),
    }
}

/// Parses `name` or `name(arg, ...)`.
fn call(key: &str, s: &str) -> Result<(String, Vec<String>)> {
    let s = s.trim();
    match s.find('(') {
        None => Ok((s.to_string(), Vec::new())),
        Some(open) => {
            let inner = s[open + 1..]
                .strip_suffix(')')
                .ok_or_else(|| config_err(key, format!("missing `)` in `{s}`")))?;
            let args = inner.split(',').map(|a| a.trim().to_string()).filter(|a| !a.is_empty()).collect();
            Ok((s[..open].trim().to_string(), args))
        }
    }
}

pub fn parse_stabilization(key: &str, s: &str) -> Result<StabilizationSpec> {
    let (name, args) = call(key, s)?;
    let one = |what: &str| -> Result<f64> {
        match args.as_slice() {
            [a] => parse_f64(key, a),
            _ => Err(config_err(key, format!("`{name}` takes one argument ({what})"))),
        }
    };
    let preset = match name.as_str() {
        "hybrid-diagonal" => match args.as_slice() {
            [a] if a == "lambda" => Preset::HybridDiagonal(Alpha::TensorMean),
            _ => Preset::HybridDiagonal(Alpha::Constant(one("α or `lambda`")?)),
        },
        "mixed-strong" => Preset::MixedStrong(one("ν")?),
        "ncfe" => Preset::Ncfe(one("β")?),
        "mfe" if args.is_empty() => Preset::Mfe,
        "two-point" if args.is_empty() => Preset::TwoPoint,
        "random" => {
            let (seed, variant) = match args.as_slice() {
                [s] => (s, Variant::MimeticU),
                [s, v] => (s, parse_variant(key, v)?),
                _ => return Err(config_err(key, "`random` takes a seed and an optional kind")),
            };
            let seed = seed.parse::<u64>().map_err(|_| config_err(key, format!("`{seed}` is not a seed")))?;
            return Ok(StabilizationSpec::Random { seed, variant });
        }
        _ => return Err(config_err(key, format!("unknown preset `{s}`"))),
    };
    Ok(StabilizationSpec::Preset(preset))
}

fn parse_bool(key: &str, s: &str) -> Result<bool> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(config_err(key, format!("`{s}` is not a boolean"))),
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut stabilization_set = false;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| config_err(line, format!("line {}: expected `key = value`", lineno + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "formulation" => {
                cfg.formulation = value.parse().map_err(|_| config_err(key, format!("unknown formulation `{value}`")))?
            }
            "stabilization.preset" | "stabilization.matrix-file" => {
                if stabilization_set {
                    return Err(config_err(key, "stabilization given twice"));
                }
                stabilization_set = true;
                cfg.stabilization = if key == "stabilization.preset" {
                    StabilizationSource::Spec(parse_stabilization(key, value)?)
                } else {
                    StabilizationSource::MatrixFile(PathBuf::from(value))
                };
            }
            "points" => {
                cfg.points = match value {
                    "centroid" => PointsSpec::Centroid,
                    "super-admissible" => PointsSpec::SuperAdmissible,
                    v => match v.strip_prefix("file:") {
                        Some(p) => PointsSpec::File(PathBuf::from(p.trim())),
                        None => return Err(config_err(key, format!("unknown point policy `{v}`"))),
                    },
                }
            }
            "condense" => {
                cfg.condense = match value {
                    "none" => Condense::None,
                    "all" => Condense::All,
                    v => Condense::Edges(
                        v.split(',')
                            .map(|e| e.trim().parse::<usize>().map_err(|_| config_err(key, format!("`{e}` is not an edge index"))))
                            .collect::<Result<_>>()?,
                    ),
                }
            }
            "tensor" => {
                cfg.tensor = Some(match value {
                    "case-a" | "case-b" | "case-c" => TensorSpec::Named(value.to_string()),
                    v => {
                        let nums: Vec<f64> = v.split_whitespace().map(|x| parse_f64(key, x)).collect::<Result<_>>()?;
                        if nums.len() != 4 {
                            return Err(config_err(key, "expected a named field or four numbers"));
                        }
                        TensorSpec::Constant(Tensor::new(nums[0], nums[1], nums[2], nums[3]))
                    }
                })
            }
            "source" => {
                cfg.source = match value {
                    "zero" => SourceSpec::Zero,
                    "one" => SourceSpec::One,
                    "case-a" | "case-b" | "case-c" | "affine" => SourceSpec::Case(value.to_string()),
                    _ => return Err(config_err(key, format!("unknown source `{value}`"))),
                }
            }
            "family" => {
                cfg.family = value
                    .split(',')
                    .map(|n| match n.trim().parse::<usize>() {
                        Ok(n) if n > 0 => Ok(n),
                        _ => Err(config_err(key, format!("`{n}` is not a mesh size"))),
                    })
                    .collect::<Result<_>>()?
            }
            "family.amplitude" => cfg.family_amplitude = parse_f64(key, value)?,
            "family.seed" => {
                cfg.family_seed = value.parse().map_err(|_| config_err(key, format!("`{value}` is not a seed")))?
            }
            "equivalence.convert" => cfg.convert = parse_bool(key, value)?,
            "order_p_min" => cfg.order_p_min = Some(parse_f64(key, value)?),
            "order_f_min" => cfg.order_f_min = Some(parse_f64(key, value)?),
            _ => return Err(config_err(key, "unknown key")),
        }
    }
    Ok(cfg)
}

pub fn read_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| config_err("--config", format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

/// Per-cell stabilization matrices.
///
/// ```text
/// kind U|BH|BM
/// n a11 a12 ... ann      # one line per cell, row-major
/// ```
pub fn parse_stabilization_file(text: &str, mesh: &Mesh) -> Result<StabilizationSpec> {
    let key = "stabilization.matrix-file";
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (_, header) = lines.next().ok_or_else(|| config_err(key, "empty matrix file"))?;
    let variant = match header.split_whitespace().collect::<Vec<_>>().as_slice() {
        ["kind", k] => parse_variant(key, k)?,
        _ => return Err(config_err(key, "first line must be `kind U|BH|BM`")),
    };
    let mut list = Vec::with_capacity(mesh.num_cells());
    for (lineno, line) in lines {
        let nums: Vec<&str> = line.split_whitespace().collect();
        let n: usize = nums[0].parse().map_err(|_| config_err(key, format!("line {lineno}: bad size `{}`", nums[0])))?;
        if nums.len() != 1 + n * n {
            return Err(config_err(key, format!("line {lineno}: expected {} entries", n * n)));
        }
        let vals = nums[1..].iter().map(|v| parse_f64(key, v)).collect::<Result<Vec<f64>>>()?;
        list.push(LocalStabilization::from_matrix(variant, crate::dense::Mat::from_row_slice(n, n, &vals)));
    }
    if list.len() != mesh.num_cells() {
        return Err(config_err(key, format!("{} matrices for {} cells", list.len(), mesh.num_cells())));
    }
    Ok(StabilizationSpec::PerCell(list))
}

/// One `x y` per line.
pub fn parse_points(text: &str) -> Result<Vec<Vec2>> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| {
            let v: Vec<f64> = l.split_whitespace().map(|x| parse_f64("points", x)).collect::<Result<_>>()?;
            match v.as_slice() {
                [x, y] => Ok(Vec2::new(*x, *y)),
                _ => Err(config_err("points", format!("expected `x y`, got `{l}`"))),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_cartesian, Domain};

    #[test]
    fn full_config() {
        let text = "
# comment
formulation = mixed
stabilization.preset = hybrid-diagonal(lambda)
points = super-admissible
condense = 1, 4
tensor = 1 0.5 0.5 2   # anisotropic
source = case-b
family = 4,8,16
family.amplitude = 0.15
family.seed = 9
equivalence.convert = false
order_p_min = 1.5
";
        let c = parse_config(text).unwrap();
        assert_eq!(c.formulation, Formulation::Mixed);
        assert_eq!(c.stabilization, StabilizationSource::Spec(StabilizationSpec::Preset(Preset::HybridDiagonal(Alpha::TensorMean))));
        assert_eq!(c.points, PointsSpec::SuperAdmissible);
        assert_eq!(c.condense, Condense::Edges(vec![1, 4]));
        assert_eq!(c.tensor, Some(TensorSpec::Constant(Tensor::new(1.0, 0.5, 0.5, 2.0))));
        assert_eq!(c.source, SourceSpec::Case("case-b".into()));
        assert_eq!(c.family, vec![4, 8, 16]);
        assert_eq!((c.family_amplitude, c.family_seed, c.convert), (0.15, 9, false));
        assert_eq!((c.order_p_min, c.order_f_min), (Some(1.5), None));
    }

    #[test]
    fn presets() {
        let p = |s| parse_stabilization("k", s).unwrap();
        assert_eq!(p("mixed-strong(0.1)"), StabilizationSpec::Preset(Preset::MixedStrong(0.1)));
        assert_eq!(p("ncfe(1)"), StabilizationSpec::Preset(Preset::Ncfe(1.0)));
        assert_eq!(p("mfe"), StabilizationSpec::Preset(Preset::Mfe));
        assert_eq!(p("two-point"), StabilizationSpec::Preset(Preset::TwoPoint));
        assert_eq!(p("random(7, hybrid)"), StabilizationSpec::Random { seed: 7, variant: Variant::HybridB });
        assert!(parse_stabilization("k", "ncfe").is_err());
        assert!(parse_stabilization("k", "banana(1)").is_err());
    }

    #[test]
    fn unknown_key_names_the_key() {
        let err = parse_config("formulaton = hybrid").unwrap_err();
        assert!(err.to_string().contains("formulaton"));
        assert!(matches!(parse_config("source = lava"), Err(Error::Config { .. })));
        assert!(parse_config("just words").is_err());
    }

    #[test]
    fn matrix_file() {
        let m = build_cartesian(2, 1, Domain::unit()).unwrap();
        let spec = parse_stabilization_file("kind U\n2 1 0 0 1\n2 2 0 0 2\n", &m).unwrap();
        match spec {
            StabilizationSpec::PerCell(v) => assert_eq!(v.len(), 2),
            _ => panic!(),
        }
        assert!(parse_stabilization_file("kind U\n2 1 0 0 1\n", &m).is_err());
        assert!(parse_stabilization_file("kind X\n", &m).is_err());
        assert_eq!(parse_points("0.5 0.5\n# c\n1 2\n").unwrap(), vec![Vec2::new(0.5, 0.5), Vec2::new(1.0, 2.0)]);
    }
}
