//! Benchmark matrix: recipes × perturbations × layouts, with per-case
//! metrics and aggregate plot data.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::Path;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::enumerate::Budget;
use crate::generator::schedule_and_route;
use crate::layout::{build_layout, LayoutKind};
use crate::matcher::{detect_subroutines, MatchGraph, MatchStatus, SiteRule};
use crate::pipeline::{enumerate_all, RecoverError, RecoverOutput, RecoverStatus};
use crate::reconstruct::{reconstruct_dag_with, ReconstructOptions};
use crate::recovery::{h3_recover_with, RecoveryOptions};
use crate::synth::{pattern_library, perturbations, Recipe, Synthesized};
use crate::trace::{downgrade, TraceLevel};

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub recipes: Vec<&'static Recipe>,
    pub perturbations: usize,
    pub base_seed: u64,
    pub layouts: Vec<LayoutKind>,
    pub match_timeout: Option<Duration>,
    pub dfs_budget: Budget,
    pub sites: SiteRule,
    /// Timeouts (ms) at which the cumulative detection curve is sampled.
    pub curve_ms: Vec<f64>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            recipes: crate::synth::RECIPES.iter().collect(),
            perturbations: 5,
            base_seed: 0,
            layouts: LayoutKind::STANDARD.to_vec(),
            match_timeout: Some(Duration::from_secs(60)),
            dfs_budget: Budget::default(),
            sites: SiteRule::default(),
            curve_ms: vec![
                0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0, 300.0, 1000.0, 3000.0, 10000.0, 60000.0,
            ],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseStatus {
    Success,
    OddEndpoints,
    UnresolvableFrame,
    /// Some enumeration hit its budget.
    Incomplete,
    RouteError,
}

/// Overall result of a case: every present subroutine found, something
/// missed, or a search ran out of time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseOutcome {
    Success,
    Failure,
    Timeout,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubroutineOutcome {
    pub subroutine: String,
    /// Whether the recipe actually contains it.
    pub present: bool,
    pub status: MatchStatus,
    pub elapsed_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub recipe: String,
    pub perturbation: usize,
    pub seed: u64,
    pub layout: LayoutKind,
    pub qubits: usize,
    pub gates: usize,
    pub frames: usize,
    pub status: CaseStatus,
    pub outcome: CaseOutcome,
    pub odd_frame: Option<usize>,
    pub ambiguity_pct: f64,
    pub ambiguous_components: usize,
    pub ambiguous_endpoints: usize,
    pub dfs_total_ms: f64,
    pub dfs_max_frame_ms: f64,
    pub dag_nodes: usize,
    pub dag_edges: usize,
    /// Registry tiles that are not qubit tiles of the layout.
    pub false_endpoint_tiles: usize,
    /// Qubit tiles used by some gate but never recovered.
    pub missed_qubit_tiles: usize,
    pub subroutines: Vec<SubroutineOutcome>,
}

impl CaseResult {
    pub fn pairing_success(&self) -> bool {
        self.status != CaseStatus::OddEndpoints && self.status != CaseStatus::RouteError
    }

    /// Copy with every wall-clock field zeroed, for determinism checks.
    pub fn without_timing(&self) -> Self {
        let mut c = self.clone();
        c.dfs_total_ms = 0.0;
        c.dfs_max_frame_ms = 0.0;
        for s in &mut c.subroutines {
            s.elapsed_ms = 0.0;
        }
        c
    }
}

/// Everything one case produced, for callers that want the artifacts too.
pub struct CaseRun {
    pub result: CaseResult,
    pub synthesized: Synthesized,
    pub output: Option<RecoverOutput>,
}

/// Runs one synthesized program through generation, recovery,
/// reconstruction and matching on one layout.
pub fn run_case(
    recipe: &str,
    perturbation: usize,
    synthesized: Synthesized,
    kind: LayoutKind,
    library: &[(String, MatchGraph)],
    config: &BenchConfig,
) -> CaseRun {
    let circuit = &synthesized.circuit;
    let mut result = CaseResult {
        recipe: recipe.to_string(),
        perturbation,
        seed: synthesized.record.seed,
        layout: kind,
        qubits: circuit.n_qubits,
        gates: circuit.gates.len(),
        frames: 0,
        status: CaseStatus::RouteError,
        outcome: CaseOutcome::Failure,
        odd_frame: None,
        ambiguity_pct: 0.0,
        ambiguous_components: 0,
        ambiguous_endpoints: 0,
        dfs_total_ms: 0.0,
        dfs_max_frame_ms: 0.0,
        dag_nodes: 0,
        dag_edges: 0,
        false_endpoint_tiles: 0,
        missed_qubit_tiles: 0,
        subroutines: Vec::new(),
    };
    let routed = build_layout(kind, circuit.n_qubits.max(2))
        .ok()
        .and_then(|l| schedule_and_route(circuit, &l).ok().map(|r| (l, r)));
    let Some((layout, routed)) = routed else {
        return CaseRun {
            result,
            synthesized,
            output: None,
        };
    };
    result.frames = routed.trace.len();

    let l1 = downgrade(&routed.trace, TraceLevel::L1).expect("generated traces are valid");
    let recovery = h3_recover_with(&l1, RecoveryOptions::default());
    result.ambiguity_pct = recovery.ambiguity_pct();
    result.ambiguous_components = recovery.ambiguous_components().count();
    result.ambiguous_endpoints = recovery
        .ambiguous_components()
        .map(|(_, _, c)| c.endpoints.len())
        .sum();
    let truth_tiles: BTreeSet<_> = layout.qubit_tiles.iter().copied().collect();
    result.false_endpoint_tiles = recovery
        .registry
        .qubit_tiles
        .iter()
        .filter(|t| !truth_tiles.contains(t))
        .count();
    let used: BTreeSet<_> = circuit
        .gates
        .iter()
        .flat_map(|g| [layout.qubit_tiles[g.qubit_a], layout.qubit_tiles[g.qubit_b]])
        .collect();
    result.missed_qubit_tiles = used
        .iter()
        .filter(|t| !recovery.registry.contains(**t))
        .count();

    let solutions = match enumerate_all(&recovery, config.dfs_budget) {
        Ok(s) => s,
        Err(RecoverError::OddEndpoints { frame, .. }) => {
            result.status = CaseStatus::OddEndpoints;
            result.odd_frame = Some(frame);
            return CaseRun {
                result,
                synthesized,
                output: None,
            };
        }
        Err(RecoverError::Trace(_)) => unreachable!("recovery never re-reads the trace"),
    };
    let reconstruction = reconstruct_dag_with(
        &recovery,
        &solutions,
        ReconstructOptions {
            merge_reroutes: true,
        },
    );
    let output = RecoverOutput {
        recovery,
        solutions,
        reconstruction,
    };
    result.status = match output.status() {
        RecoverStatus::Success => CaseStatus::Success,
        RecoverStatus::UnresolvableFrame => CaseStatus::UnresolvableFrame,
        RecoverStatus::Incomplete => CaseStatus::Incomplete,
    };
    result.dfs_total_ms = output.dfs_total_ms();
    result.dfs_max_frame_ms = output.dfs_ms_per_frame().into_iter().fold(0.0, f64::max);
    result.dag_nodes = output.reconstruction.dag.node_count();
    result.dag_edges = output.reconstruction.dag.edge_count();

    let target = MatchGraph::from_gate_dag(&output.reconstruction.dag);
    result.subroutines = detect_subroutines(library, &target, config.match_timeout, config.sites)
        .into_iter()
        .map(|r| SubroutineOutcome {
            present: synthesized.record.contains(&r.subroutine),
            subroutine: r.subroutine,
            status: r.status,
            elapsed_ms: r.elapsed_ms,
        })
        .collect();
    result.outcome = case_outcome(&result);
    CaseRun {
        result,
        synthesized,
        output: Some(output),
    }
}

fn case_outcome(r: &CaseResult) -> CaseOutcome {
    let present: Vec<_> = r.subroutines.iter().filter(|s| s.present).collect();
    if r.status == CaseStatus::Incomplete
        || present.iter().any(|s| s.status == MatchStatus::Timeout)
    {
        CaseOutcome::Timeout
    } else if r.status == CaseStatus::Success
        && present.iter().all(|s| s.status == MatchStatus::Found)
    {
        CaseOutcome::Success
    } else {
        CaseOutcome::Failure
    }
}

/// Runs every (recipe, perturbation, layout) case. Results come back in
/// that nesting order whatever the thread count.
pub fn run_matrix(config: &BenchConfig) -> Vec<CaseResult> {
    let library = pattern_library();
    let mut jobs = Vec::new();
    for recipe in &config.recipes {
        let programs = perturbations(&recipe.sources(), config.base_seed, config.perturbations)
            .expect("bundled corpus parses");
        for (pi, program) in programs.into_iter().enumerate() {
            for &kind in &config.layouts {
                jobs.push((recipe.name, pi, program.clone(), kind));
            }
        }
    }
    jobs.into_par_iter()
        .map(|(name, pi, program, kind)| run_case(name, pi, program, kind, &library, config).result)
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub success: usize,
    pub failure: usize,
    pub timeout: usize,
}

impl OutcomeCounts {
    fn add(&mut self, found: MatchStatus) {
        match found {
            MatchStatus::Found => self.success += 1,
            MatchStatus::NotFound => self.failure += 1,
            MatchStatus::Timeout => self.timeout += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.success + self.failure + self.timeout
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LayoutSummary {
    pub cases: usize,
    pub pairing_success_rate: f64,
    pub recovery_success_rate: f64,
    /// Found / present over every case, failed pairings counting as misses.
    pub detection_rate: f64,
    /// Found / present over cases that produced a DAG.
    pub detection_rate_given_dag: f64,
    pub present_subroutines: usize,
    pub detected_subroutines: usize,
    pub false_positives: usize,
    pub match_timeouts: usize,
    pub false_endpoint_tiles: usize,
    pub median_ambiguity_pct: f64,
    pub avg_dag_nodes: f64,
    pub max_dfs_total_ms: f64,
    pub max_match_ms: f64,
    pub outcomes: OutcomeCounts,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub layout: LayoutKind,
    pub recipe: String,
    pub ambiguous_endpoints: usize,
    pub dfs_total_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub timeout_ms: f64,
    pub detected: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub layouts: BTreeMap<LayoutKind, LayoutSummary>,
    /// layout → recipe → endpoint-pairing success rate.
    pub pairing_heatmap: BTreeMap<LayoutKind, BTreeMap<String, f64>>,
    /// layout → recipe → ambiguity_pct of each perturbation.
    pub ambiguity_box: BTreeMap<LayoutKind, BTreeMap<String, Vec<f64>>>,
    /// layout → dfs_total_ms of each case with a DAG.
    pub dfs_box: BTreeMap<LayoutKind, Vec<f64>>,
    pub dfs_scatter: Vec<ScatterPoint>,
    /// layout → subroutine → outcome counts over cases containing it.
    pub per_subroutine: BTreeMap<LayoutKind, BTreeMap<String, OutcomeCounts>>,
    /// layout → present subroutines found within each timeout.
    pub detection_curve: BTreeMap<LayoutKind, Vec<CurvePoint>>,
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn aggregate(cases: &[CaseResult], curve_ms: &[f64]) -> Aggregate {
    let mut agg = Aggregate::default();
    let kinds: BTreeSet<LayoutKind> = cases.iter().map(|c| c.layout).collect();
    for kind in kinds {
        let these: Vec<&CaseResult> = cases.iter().filter(|c| c.layout == kind).collect();
        let with_dag: Vec<&CaseResult> = these
            .iter()
            .copied()
            .filter(|c| c.pairing_success())
            .collect();
        let present_total: usize = these.iter().map(|c| recipe_width(c)).sum();
        let present_with_dag: usize = with_dag.iter().map(|c| recipe_width(c)).sum();
        let detected = these
            .iter()
            .flat_map(|c| &c.subroutines)
            .filter(|s| s.present && s.status == MatchStatus::Found)
            .count();
        let mut outcomes = OutcomeCounts::default();
        for c in &these {
            match c.outcome {
                CaseOutcome::Success => outcomes.success += 1,
                CaseOutcome::Failure => outcomes.failure += 1,
                CaseOutcome::Timeout => outcomes.timeout += 1,
            }
        }
        let amb: Vec<f64> = these.iter().map(|c| c.ambiguity_pct).collect();
        let summary = LayoutSummary {
            cases: these.len(),
            pairing_success_rate: ratio(with_dag.len(), these.len()),
            recovery_success_rate: ratio(
                these
                    .iter()
                    .filter(|c| c.status == CaseStatus::Success)
                    .count(),
                these.len(),
            ),
            detection_rate: ratio(detected, present_total),
            detection_rate_given_dag: ratio(detected, present_with_dag),
            present_subroutines: present_total,
            detected_subroutines: detected,
            false_positives: these
                .iter()
                .flat_map(|c| &c.subroutines)
                .filter(|s| !s.present && s.status == MatchStatus::Found)
                .count(),
            match_timeouts: these
                .iter()
                .flat_map(|c| &c.subroutines)
                .filter(|s| s.status == MatchStatus::Timeout)
                .count(),
            false_endpoint_tiles: these.iter().map(|c| c.false_endpoint_tiles).sum(),
            median_ambiguity_pct: median(&amb),
            avg_dag_nodes: ratio(with_dag.iter().map(|c| c.dag_nodes).sum(), with_dag.len()),
            max_dfs_total_ms: with_dag.iter().map(|c| c.dfs_total_ms).fold(0.0, f64::max),
            max_match_ms: these
                .iter()
                .flat_map(|c| &c.subroutines)
                .map(|s| s.elapsed_ms)
                .fold(0.0, f64::max),
            outcomes,
        };
        agg.layouts.insert(kind, summary);

        let mut heat: BTreeMap<String, (usize, usize)> = BTreeMap::new();
        let mut amb_box: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        let mut per_sub: BTreeMap<String, OutcomeCounts> = BTreeMap::new();
        for c in &these {
            let h = heat.entry(c.recipe.clone()).or_default();
            h.0 += usize::from(c.pairing_success());
            h.1 += 1;
            amb_box
                .entry(c.recipe.clone())
                .or_default()
                .push(c.ambiguity_pct);
            for name in &constituents_of(c) {
                let counts = per_sub.entry(name.clone()).or_default();
                match c.subroutines.iter().find(|s| &s.subroutine == name) {
                    Some(s) => counts.add(s.status),
                    None => counts.failure += 1,
                }
            }
        }
        agg.pairing_heatmap.insert(
            kind,
            heat.into_iter()
                .map(|(r, (ok, n))| (r, ratio(ok, n)))
                .collect(),
        );
        agg.ambiguity_box.insert(kind, amb_box);
        agg.per_subroutine.insert(kind, per_sub);
        agg.dfs_box
            .insert(kind, with_dag.iter().map(|c| c.dfs_total_ms).collect());
        agg.dfs_scatter
            .extend(with_dag.iter().map(|c| ScatterPoint {
                layout: kind,
                recipe: c.recipe.clone(),
                ambiguous_endpoints: c.ambiguous_endpoints,
                dfs_total_ms: c.dfs_total_ms,
            }));
        let found_times: Vec<f64> = these
            .iter()
            .flat_map(|c| &c.subroutines)
            .filter(|s| s.present && s.status == MatchStatus::Found)
            .map(|s| s.elapsed_ms)
            .collect();
        agg.detection_curve.insert(
            kind,
            curve_ms
                .iter()
                .map(|&t| CurvePoint {
                    timeout_ms: t,
                    detected: found_times.iter().filter(|&&e| e <= t).count(),
                })
                .collect(),
        );
    }
    agg
}

fn constituents_of(c: &CaseResult) -> Vec<String> {
    Recipe::by_name(&c.recipe)
        .map(|r| r.constituents.iter().map(|s| s.to_string()).collect())
        .unwrap_or_default()
}

fn recipe_width(c: &CaseResult) -> usize {
    constituents_of(c).len()
}

#[derive(Serialize)]
struct CaseRow<'a> {
    recipe: &'a str,
    perturbation: usize,
    seed: u64,
    layout: LayoutKind,
    qubits: usize,
    gates: usize,
    frames: usize,
    status: CaseStatus,
    outcome: CaseOutcome,
    odd_frame: Option<usize>,
    ambiguity_pct: f64,
    ambiguous_components: usize,
    ambiguous_endpoints: usize,
    dfs_total_ms: f64,
    dfs_max_frame_ms: f64,
    dag_nodes: usize,
    dag_edges: usize,
    false_endpoint_tiles: usize,
    missed_qubit_tiles: usize,
}

#[derive(Serialize)]
struct MatchRow<'a> {
    recipe: &'a str,
    perturbation: usize,
    seed: u64,
    layout: LayoutKind,
    subroutine: &'a str,
    present: bool,
    status: MatchStatus,
    elapsed_ms: f64,
}

/// Writes `cases.json`, `cases.csv`, `matches.csv` and `aggregate.json`.
pub fn write_reports(dir: &Path, cases: &[CaseResult], agg: &Aggregate) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("cases.json"), serde_json::to_string_pretty(cases)?)?;
    fs::write(
        dir.join("aggregate.json"),
        serde_json::to_string_pretty(agg)?,
    )?;

    let mut w = csv::Writer::from_path(dir.join("cases.csv"))?;
    for c in cases {
        w.serialize(CaseRow {
            recipe: &c.recipe,
            perturbation: c.perturbation,
            seed: c.seed,
            layout: c.layout,
            qubits: c.qubits,
            gates: c.gates,
            frames: c.frames,
            status: c.status,
            outcome: c.outcome,
            odd_frame: c.odd_frame,
            ambiguity_pct: c.ambiguity_pct,
            ambiguous_components: c.ambiguous_components,
            ambiguous_endpoints: c.ambiguous_endpoints,
            dfs_total_ms: c.dfs_total_ms,
            dfs_max_frame_ms: c.dfs_max_frame_ms,
            dag_nodes: c.dag_nodes,
            dag_edges: c.dag_edges,
            false_endpoint_tiles: c.false_endpoint_tiles,
            missed_qubit_tiles: c.missed_qubit_tiles,
        })?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("matches.csv"))?;
    for c in cases {
        for s in &c.subroutines {
            w.serialize(MatchRow {
                recipe: &c.recipe,
                perturbation: c.perturbation,
                seed: c.seed,
                layout: c.layout,
                subroutine: &s.subroutine,
                present: s.present,
                status: s.status,
                elapsed_ms: s.elapsed_ms,
            })?;
        }
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> BenchConfig {
        BenchConfig {
            recipes: vec![
                Recipe::by_name("mix_9").unwrap(),
                Recipe::by_name("mix_10").unwrap(),
            ],
            perturbations: 3,
            match_timeout: Some(Duration::from_secs(10)),
            ..BenchConfig::default()
        }
    }

    #[test]
    fn matrix_has_one_row_per_case() {
        let cases = run_matrix(&small());
        assert_eq!(cases.len(), 18);
        let keys: BTreeSet<_> = cases
            .iter()
            .map(|c| (c.recipe.clone(), c.perturbation, c.layout))
            .collect();
        assert_eq!(keys.len(), 18);
        let agg = aggregate(&cases, &BenchConfig::default().curve_ms);
        for (kind, s) in &agg.layouts {
            assert_eq!(s.cases, 6, "{kind}");
            assert_eq!(s.outcomes.total(), 6);
        }
    }

    #[test]
    fn detection_curve_is_monotone() {
        let cfg = small();
        let agg = aggregate(&run_matrix(&cfg), &cfg.curve_ms);
        for curve in agg.detection_curve.values() {
            assert!(curve.windows(2).all(|w| w[0].detected <= w[1].detected));
        }
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(median(&[]), 0.0);
    }

    #[test]
    fn reports_are_written() {
        let dir = std::env::temp_dir().join(format!("surgetrace-bench-{}", std::process::id()));
        let cfg = BenchConfig {
            perturbations: 1,
            ..small()
        };
        let cases = run_matrix(&cfg);
        write_reports(&dir, &cases, &aggregate(&cases, &cfg.curve_ms)).unwrap();
        let csv = fs::read_to_string(dir.join("cases.csv")).unwrap();
        assert_eq!(csv.lines().count(), 1 + cases.len());
        assert!(csv.starts_with("recipe,perturbation,seed,layout,"));
        let back: Vec<CaseResult> =
            serde_json::from_str(&fs::read_to_string(dir.join("cases.json")).unwrap()).unwrap();
        assert_eq!(back.len(), cases.len());
        fs::remove_dir_all(&dir).unwrap();
    }
}
