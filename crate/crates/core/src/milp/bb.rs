//! Best-first branch-and-bound over the binary variables.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::simplex;
use super::{BbOptions, LpStatus, MilpModel, MilpSolution, MilpStatus, INT_TOL};

struct Node {
    /// LP bound inherited from the parent (root: its own relaxation).
    bound: f64,
    /// Binary fixings accumulated along the path.
    fixes: Vec<(usize, f64, f64)>,
    id: u64,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.bound == other.bound && self.id == other.id
    }
}
impl Eq for Node {}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap: invert for best-first (smallest bound),
        // breaking ties toward older nodes for determinism.
        other
            .bound
            .total_cmp(&self.bound)
            .then(other.id.cmp(&self.id))
    }
}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Picks the fractional binary nearest 0.5 (ties: lowest index).
fn fractional_binary(binaries: &[usize], values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &j in binaries {
        let v = values[j];
        if (v - v.round()).abs() <= INT_TOL {
            continue;
        }
        let dist = (v - 0.5).abs();
        if best.map_or(true, |(_, d)| dist < d) {
            best = Some((j, dist));
        }
    }
    best.map(|(j, _)| j)
}

/// Solves the MILP by best-first branch-and-bound on LP relaxations.
///
/// Branching fixes the fractional binary nearest 0.5; nodes whose bound
/// cannot beat the incumbent by more than 1e-9 are pruned. The result is
/// proven optimal when the tree is exhausted.
pub fn bb_solve(model: &MilpModel, options: &BbOptions) -> MilpSolution {
    if model.validate().is_err() {
        return MilpSolution {
            status: MilpStatus::Limit,
            objective: None,
            values: None,
            gap: f64::INFINITY,
            nodes: 0,
        };
    }
    let binaries = model.binary_indices();
    let mut heap = BinaryHeap::new();
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut nodes = 0u64;
    let mut next_id = 0u64;
    let mut limit_hit = false;
    let mut numeric_trouble = false;

    heap.push(Node { bound: f64::NEG_INFINITY, fixes: Vec::new(), id: next_id });
    next_id += 1;

    while let Some(node) = heap.pop() {
        if let Some((inc_obj, _)) = &incumbent {
            if node.bound >= inc_obj - 1e-9 || inc_obj - node.bound <= options.gap_tolerance {
                // Best-first ordering: every remaining node is at least as bad.
                break;
            }
        }
        if nodes >= options.node_limit {
            limit_hit = true;
            break;
        }
        nodes += 1;
        let relax = simplex::solve(model, &node.fixes, options.lp_iteration_limit);
        match relax.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                if node.fixes.is_empty() {
                    return MilpSolution {
                        status: MilpStatus::Unbounded,
                        objective: None,
                        values: None,
                        gap: f64::INFINITY,
                        nodes,
                    };
                }
                numeric_trouble = true;
                continue;
            }
            LpStatus::IterationLimit => {
                numeric_trouble = true;
                continue;
            }
            LpStatus::Optimal => {}
        }
        if let Some((inc_obj, _)) = &incumbent {
            if relax.objective >= inc_obj - 1e-9 {
                continue;
            }
        }
        match fractional_binary(&binaries, &relax.values) {
            None => {
                let better = incumbent
                    .as_ref()
                    .map_or(true, |(obj, _)| relax.objective < obj - 1e-9);
                if better {
                    incumbent = Some((relax.objective, relax.values));
                }
            }
            Some(j) => {
                for (lo, hi) in [(0.0, 0.0), (1.0, 1.0)] {
                    let mut fixes = node.fixes.clone();
                    fixes.push((j, lo, hi));
                    heap.push(Node { bound: relax.objective, fixes, id: next_id });
                    next_id += 1;
                }
            }
        }
    }

    let best_open_bound = heap
        .peek()
        .map(|n| n.bound)
        .unwrap_or(f64::INFINITY);
    match incumbent {
        Some((objective, values)) => {
            let proven = !limit_hit && !numeric_trouble && best_open_bound >= objective - 1e-9;
            let gap = if proven {
                0.0
            } else {
                (objective - best_open_bound.min(objective)).max(0.0)
            };
            MilpSolution {
                status: if proven { MilpStatus::Optimal } else { MilpStatus::Limit },
                objective: Some(objective),
                values: Some(values),
                gap,
                nodes,
            }
        }
        None => MilpSolution {
            status: if limit_hit || numeric_trouble {
                MilpStatus::Limit
            } else {
                MilpStatus::Infeasible
            },
            objective: None,
            values: None,
            gap: f64::INFINITY,
            nodes,
        },
    }
}
