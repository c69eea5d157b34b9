//! Composite benchmark programs built from the bundled subroutine corpus.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matcher::MatchGraph;
use crate::qasm::{parse_qasm, GateKind, GateOp, LogicalCircuit, QasmError};

macro_rules! corpus {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../corpus/", $name, ".qasm")))),*]
    };
}

/// Subroutine sources as `(name, qasm)`. Regenerate with `corpus/generate.py`.
pub const CORPUS: &[(&str, &str)] = corpus![
    "add_3",
    "add_4",
    "add_5",
    "add_6",
    "add_7",
    "outofplace_add_3",
    "outofplace_add_4",
    "outofplace_add_5",
    "outofplace_add_6",
    "qft_4",
    "qft_5",
    "qft_6",
    "qft_7",
    "qft_8",
    "t_npe_3",
    "t_npe_4",
    "t_npe_5",
    "t_npe_6",
];

pub fn corpus_source(name: &str) -> Option<&'static str> {
    CORPUS.iter().find(|(n, _)| *n == name).map(|(_, src)| *src)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Recipe {
    pub name: &'static str,
    pub constituents: &'static [&'static str],
}

pub const RECIPES: &[Recipe] = &[
    Recipe {
        name: "mix_1",
        constituents: &["qft_5", "t_npe_4", "add_3"],
    },
    Recipe {
        name: "mix_2",
        constituents: &["qft_6", "t_npe_3", "add_4"],
    },
    Recipe {
        name: "mix_3",
        constituents: &["qft_4", "t_npe_5", "add_5"],
    },
    Recipe {
        name: "mix_4",
        constituents: &["qft_7", "t_npe_6", "add_6"],
    },
    Recipe {
        name: "mix_5",
        constituents: &["t_npe_3", "add_7"],
    },
    Recipe {
        name: "mix_6",
        constituents: &["qft_8", "add_5"],
    },
    Recipe {
        name: "mix_7",
        constituents: &["qft_8", "t_npe_5"],
    },
    Recipe {
        name: "mix_8",
        constituents: &["add_6", "t_npe_6"],
    },
    Recipe {
        name: "mix_9",
        constituents: &["add_3", "qft_4"],
    },
    Recipe {
        name: "mix_10",
        constituents: &["add_4", "qft_4"],
    },
    Recipe {
        name: "mix_11",
        constituents: &["outofplace_add_3", "qft_4", "t_npe_4"],
    },
    Recipe {
        name: "mix_12",
        constituents: &["outofplace_add_4", "qft_5"],
    },
    Recipe {
        name: "mix_13",
        constituents: &["t_npe_3", "outofplace_add_5"],
    },
    Recipe {
        name: "mix_14",
        constituents: &["outofplace_add_5", "qft_6", "add_5"],
    },
    Recipe {
        name: "mix_15",
        constituents: &["add_4", "outofplace_add_4", "t_npe_5"],
    },
    Recipe {
        name: "mix_16",
        constituents: &["t_npe_3", "qft_5", "outofplace_add_3"],
    },
    Recipe {
        name: "mix_17",
        constituents: &["outofplace_add_6", "qft_4", "t_npe_3"],
    },
    Recipe {
        name: "mix_18",
        constituents: &["add_7", "t_npe_3", "qft_6"],
    },
    Recipe {
        name: "mix_19",
        constituents: &["t_npe_4", "add_7", "qft_5"],
    },
    Recipe {
        name: "mix_20",
        constituents: &["qft_7", "outofplace_add_6", "add_6"],
    },
];

impl Recipe {
    pub fn by_name(name: &str) -> Option<&'static Recipe> {
        RECIPES.iter().find(|r| r.name == name)
    }

    pub fn sources(&self) -> Vec<(String, String)> {
        self.constituents
            .iter()
            .map(|n| {
                (
                    n.to_string(),
                    corpus_source(n)
                        .expect("recipe names a corpus entry")
                        .to_string(),
                )
            })
            .collect()
    }
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("constituent `{name}`: {source}")]
    Parse { name: String, source: QasmError },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constituent {
    pub name: String,
    /// Global qubits `[start, end)` taken by this constituent.
    pub qubit_range: [usize; 2],
    /// `permutation[local]` is the offset within the range that local qubit lands on.
    pub permutation: Vec<usize>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompositionRecord {
    pub seed: u64,
    pub total_qubits: usize,
    pub constituents: Vec<Constituent>,
}

impl CompositionRecord {
    pub fn contains(&self, name: &str) -> bool {
        self.constituents.iter().any(|c| c.name == name)
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Synthesized {
    pub circuit: LogicalCircuit,
    pub record: CompositionRecord,
}

impl Synthesized {
    pub fn qasm(&self) -> String {
        self.circuit.to_qasm()
    }
}

fn constituent_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Concatenates the constituents on disjoint qubit ranges, each with its
/// local qubits shuffled by a seeded permutation. Gate order inside a
/// constituent is kept; constituents follow each other in list order.
pub fn synthesize(sources: &[(String, String)], seed: u64) -> Result<Synthesized, SynthError> {
    synthesize_with(sources, seed, true)
}

/// As [`synthesize`]; with `shuffle` off every permutation is the identity.
pub fn synthesize_with(
    sources: &[(String, String)],
    seed: u64,
    shuffle: bool,
) -> Result<Synthesized, SynthError> {
    let mut gates = Vec::new();
    let mut constituents = Vec::new();
    let mut base = 0;
    for (i, (name, src)) in sources.iter().enumerate() {
        let sub = parse_qasm(src).map_err(|source| SynthError::Parse {
            name: name.clone(),
            source,
        })?;
        let cseed = constituent_seed(seed, i);
        let mut perm: Vec<usize> = (0..sub.n_qubits).collect();
        if shuffle {
            perm.shuffle(&mut ChaCha8Rng::seed_from_u64(cseed));
        }
        for g in &sub.gates {
            gates.push(GateOp {
                kind: g.kind,
                qubit_a: base + perm[g.qubit_a],
                qubit_b: base + perm[g.qubit_b],
                source_pos: gates.len(),
            });
        }
        constituents.push(Constituent {
            name: name.clone(),
            qubit_range: [base, base + sub.n_qubits],
            permutation: perm,
            seed: cseed,
        });
        base += sub.n_qubits;
    }
    let circuit = LogicalCircuit {
        n_qubits: base,
        gates,
    };
    Ok(Synthesized {
        circuit,
        record: CompositionRecord {
            seed,
            total_qubits: base,
            constituents,
        },
    })
}

/// `count` independent syntheses with seeds `base_seed + i`.
pub fn perturbations(
    sources: &[(String, String)],
    base_seed: u64,
    count: usize,
) -> Result<Vec<Synthesized>, SynthError> {
    (0..count as u64)
        .map(|i| synthesize(sources, base_seed.wrapping_add(i)))
        .collect()
}

/// Uniformly random CX circuit with 5–15 qubits and 20–80 gates.
pub fn random_circuit(seed: u64) -> LogicalCircuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(5..=15);
    let count = rng.gen_range(20..=80);
    let pairs: Vec<_> = (0..count)
        .map(|_| {
            let a = rng.gen_range(0..n);
            let b = (a + rng.gen_range(1..n)) % n;
            (GateKind::Cx, a, b)
        })
        .collect();
    LogicalCircuit::from_pairs(n, pairs).expect("distinct in-range qubits")
}

/// Pattern graphs for every corpus subroutine, keyed by name.
pub fn pattern_library() -> Vec<(String, MatchGraph)> {
    CORPUS
        .iter()
        .map(|(name, src)| {
            let c = parse_qasm(src).expect("bundled corpus parses");
            (name.to_string(), MatchGraph::from_circuit(&c))
        })
        .collect()
}
