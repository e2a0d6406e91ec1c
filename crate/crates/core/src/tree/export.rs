//! Evaluator files: a versioned JSON document holding the trees, the lifted
//! regions and functions, and the op model. Floats are written in shortest
//! round-trip form, so a reloaded evaluator is bit-identical.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::eval::{CompiledEvaluator, OpCountModel};
use super::{LeafCandidate, Node, SearchTree};
use crate::error::{Error, Result};
use crate::model::io::{ControlLawRepr, RegionRepr};
use crate::model::{lifted_dim, AffineFunction, ControlLaw, PartitionIndex};
use crate::polyhedra::{Hyperplane, Polyhedron};

const FORMAT: &str = "lifteval-evaluator";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FunctionRepr {
    #[serde(rename = "D")]
    d: Vec<f64>,
    #[serde(rename = "E")]
    e: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CandidateRepr {
    region: usize,
    rows: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum NodeRepr {
    Decision {
        a: Vec<f64>,
        b: f64,
        low: usize,
        high: usize,
    },
    Leaf(Vec<CandidateRepr>),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeRepr {
    root: usize,
    depth: usize,
    n_h: usize,
    nodes: Vec<NodeRepr>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EvaluatorRepr {
    format: String,
    version: u32,
    n: usize,
    l: usize,
    op_model: OpCountModel,
    regions: Vec<RegionRepr>,
    functions: Vec<FunctionRepr>,
    partition: Vec<usize>,
    provenance: Vec<usize>,
    trees: Vec<TreeRepr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    control_laws: Option<Vec<ControlLawRepr>>,
}

fn tree_repr(t: &SearchTree) -> TreeRepr {
    let nodes = t
        .nodes
        .iter()
        .map(|n| match n {
            Node::Decision {
                hyperplane,
                low,
                high,
            } => NodeRepr::Decision {
                a: hyperplane.a.clone(),
                b: hyperplane.b,
                low: *low,
                high: *high,
            },
            Node::Leaf { candidates } => NodeRepr::Leaf(
                candidates
                    .iter()
                    .map(|c| CandidateRepr {
                        region: c.region,
                        rows: c.check_rows.clone(),
                    })
                    .collect(),
            ),
        })
        .collect();
    TreeRepr {
        root: t.root,
        depth: t.depth,
        n_h: t.n_h,
        nodes,
    }
}

pub fn evaluator_to_json(e: &CompiledEvaluator) -> Result<String> {
    let repr = EvaluatorRepr {
        format: FORMAT.into(),
        version: VERSION,
        n: e.n,
        l: e.l,
        op_model: e.op_model,
        regions: e.regions.iter().map(RegionRepr::from_polyhedron).collect(),
        functions: e
            .functions
            .iter()
            .map(|f| FunctionRepr {
                d: f.d.clone(),
                e: f.e,
            })
            .collect(),
        partition: e.partition.labels().to_vec(),
        provenance: e.provenance.clone(),
        trees: e.trees.iter().map(tree_repr).collect(),
        control_laws: e
            .control_laws
            .as_ref()
            .map(|laws| laws.iter().map(ControlLawRepr::from).collect()),
    };
    Ok(serde_json::to_string(&repr)?)
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Input(format!("evaluator file: {}", msg.into()))
}

fn tree_from(t: TreeRepr, l: usize, regions: &[Polyhedron]) -> Result<SearchTree> {
    let count = t.nodes.len();
    let mut nodes = Vec::with_capacity(count);
    for node in t.nodes {
        nodes.push(match node {
            NodeRepr::Decision { a, b, low, high } => {
                if a.len() != l || low >= count || high >= count {
                    return Err(bad("malformed decision node"));
                }
                Node::Decision {
                    hyperplane: Hyperplane { a, b },
                    low,
                    high,
                }
            }
            NodeRepr::Leaf(cands) => {
                let mut candidates = Vec::with_capacity(cands.len());
                for c in cands {
                    let p = regions.get(c.region).ok_or_else(|| bad("leaf region out of range"))?;
                    if c.rows.iter().any(|&r| r >= p.n_rows()) {
                        return Err(bad("leaf row out of range"));
                    }
                    candidates.push(LeafCandidate {
                        region: c.region,
                        check_rows: c.rows,
                    });
                }
                Node::Leaf { candidates }
            }
        });
    }
    if t.root >= count {
        return Err(bad("root out of range"));
    }
    Ok(SearchTree {
        nodes,
        root: t.root,
        depth: t.depth,
        n_h: t.n_h,
    })
}

pub fn evaluator_from_json(text: &str) -> Result<CompiledEvaluator> {
    let repr: EvaluatorRepr =
        serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
    if repr.format != FORMAT {
        return Err(bad(format!("unknown format {:?}", repr.format)));
    }
    if repr.version != VERSION {
        return Err(bad(format!("unsupported version {}", repr.version)));
    }
    let (n, l) = (repr.n, repr.l);
    if n == 0 || l != lifted_dim(n) {
        return Err(bad("inconsistent dimensions"));
    }
    let regions = repr
        .regions
        .into_iter()
        .map(|r| {
            if r.h.iter().any(|row| row.len() != l) {
                return Err(bad("region row has wrong length"));
            }
            Polyhedron::from_raw(l, r.h.concat(), r.k)
        })
        .collect::<Result<Vec<_>>>()?;
    let functions: Vec<AffineFunction> = repr
        .functions
        .into_iter()
        .map(|f| AffineFunction { d: f.d, e: f.e })
        .collect();
    if functions.len() != regions.len()
        || functions.iter().any(|f| f.d.len() != l)
        || repr.provenance.len() != regions.len()
    {
        return Err(bad("regions, functions and provenance disagree"));
    }
    let partition = PartitionIndex::new(repr.partition)?;
    if partition.len() != regions.len() || partition.n_parts() != repr.trees.len() {
        return Err(bad("partition does not match the trees"));
    }
    let trees = repr
        .trees
        .into_iter()
        .map(|t| tree_from(t, l, &regions))
        .collect::<Result<Vec<_>>>()?;
    Ok(CompiledEvaluator {
        n,
        l,
        regions,
        functions,
        partition,
        provenance: repr.provenance,
        trees,
        op_model: repr.op_model,
        control_laws: repr
            .control_laws
            .map(|laws| laws.into_iter().map(ControlLaw::from).collect()),
    })
}

pub fn read_evaluator(path: impl AsRef<Path>) -> Result<CompiledEvaluator> {
    evaluator_from_json(&std::fs::read_to_string(path)?)
}

pub fn write_evaluator(e: &CompiledEvaluator, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, evaluator_to_json(e)? + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::merge::merge_all;
    use crate::tree::{evaluate, multi_tree};

    #[test]
    fn round_trip_is_bit_identical() {
        let s = crate::generate::example_1d().lift().into();
        for merged in [false, true] {
            let m = if merged { merge_all(&s).unwrap() } else { s.clone() };
            let e = multi_tree(&m).unwrap();
            let text = evaluator_to_json(&e).unwrap();
            let back = evaluator_from_json(&text).unwrap();
            assert_eq!(back, e);
            assert_eq!(evaluator_to_json(&back).unwrap(), text);
            for k in 0..=60 {
                let x = [-3.0 + 0.1 * k as f64];
                assert_eq!(evaluate(&back, &x).unwrap(), evaluate(&e, &x).unwrap());
            }
        }
    }

    #[test]
    fn rejects_foreign_documents() {
        let e = multi_tree(&crate::generate::example_1d().lift().into()).unwrap();
        let text = evaluator_to_json(&e).unwrap();
        assert!(evaluator_from_json(&text.replace(FORMAT, "other")).is_err());
        assert!(evaluator_from_json(&text.replace("\"version\":1", "\"version\":9")).is_err());
        assert!(evaluator_from_json("{}").is_err());
    }
}
