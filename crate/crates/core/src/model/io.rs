//! JSON interchange format for solutions.
//!
//! ```json
//! {"n": 1,
//!  "regions":   [{"H": [[1.0], [-1.0]], "K": [2.0, 2.0]}],
//!  "functions": [{"A": [[1.0]], "B": [0.0], "C": 1.0}],
//!  "partition": [1],
//!  "control_laws": [{"F": [[-0.5]], "g": [0.0]}]}
//! ```
//! Matrices are row-major, partition labels one-based; `control_laws` is optional.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ControlLaw, PartitionIndex, PwqSolution, QuadraticFunction};
use crate::error::{Error, Result};
use crate::polyhedra::Polyhedron;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct RegionRepr {
    #[serde(rename = "H")]
    pub h: Vec<Vec<f64>>,
    #[serde(rename = "K")]
    pub k: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FunctionRepr {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: Vec<f64>,
    #[serde(rename = "C")]
    c: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct ControlLawRepr {
    #[serde(rename = "F")]
    pub f: Vec<Vec<f64>>,
    pub g: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolutionRepr {
    n: usize,
    regions: Vec<RegionRepr>,
    functions: Vec<FunctionRepr>,
    partition: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    control_laws: Option<Vec<ControlLawRepr>>,
}

impl RegionRepr {
    pub(crate) fn from_polyhedron(p: &Polyhedron) -> Self {
        RegionRepr {
            h: p.rows().map(|(a, _)| a.to_vec()).collect(),
            k: p.rows().map(|(_, b)| b).collect(),
        }
    }
}

impl From<&ControlLaw> for ControlLawRepr {
    fn from(law: &ControlLaw) -> Self {
        ControlLawRepr {
            f: law.f.clone(),
            g: law.g.clone(),
        }
    }
}

impl From<ControlLawRepr> for ControlLaw {
    fn from(r: ControlLawRepr) -> Self {
        ControlLaw { f: r.f, g: r.g }
    }
}

fn field<T>(r: Result<T>, path: impl FnOnce() -> String) -> Result<T> {
    r.map_err(|e| match e {
        Error::Input(msg) => Error::Input(format!("{}: {msg}", path())),
        Error::Dimension { expected, found } => Error::Input(format!(
            "{}: expected length {expected}, found {found}",
            path()
        )),
        other => other,
    })
}

pub fn solution_from_json(text: &str) -> Result<PwqSolution> {
    let repr: SolutionRepr = serde_json::from_str(text)
        .map_err(|e| Error::Input(format!("solution file: {e}")))?;
    let n = repr.n;
    if n == 0 {
        return Err(Error::input("n: dimension must be positive"));
    }
    let regions = repr
        .regions
        .iter()
        .enumerate()
        .map(|(i, r)| field(Polyhedron::new(n, &r.h, &r.k), || format!("regions[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    let functions = repr
        .functions
        .into_iter()
        .enumerate()
        .map(|(i, f)| {
            field(QuadraticFunction::new(&f.a, f.b, f.c), || {
                format!("functions[{i}]")
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let partition = field(PartitionIndex::new(repr.partition), || "partition".into())?;
    let control_laws = repr
        .control_laws
        .map(|laws| laws.into_iter().map(ControlLaw::from).collect());
    PwqSolution::new(n, regions, functions, partition, control_laws)
}

pub fn solution_to_json(s: &PwqSolution) -> Result<String> {
    let repr = SolutionRepr {
        n: s.dim(),
        regions: s.regions().iter().map(RegionRepr::from_polyhedron).collect(),
        functions: s
            .functions()
            .iter()
            .map(|f| FunctionRepr {
                a: f.a_rows(),
                b: f.b().to_vec(),
                c: f.c(),
            })
            .collect(),
        partition: s.partition().labels().to_vec(),
        control_laws: s
            .control_laws()
            .map(|laws| laws.iter().map(ControlLawRepr::from).collect()),
    };
    Ok(serde_json::to_string_pretty(&repr)?)
}

pub fn read_solution(path: impl AsRef<Path>) -> Result<PwqSolution> {
    solution_from_json(&std::fs::read_to_string(path)?)
}

pub fn write_solution(s: &PwqSolution, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, solution_to_json(s)? + "\n")?;
    Ok(())
}
