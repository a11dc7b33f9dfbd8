//! Level-wise exact greedy tree growth.
//!
//! Each feature's valid rows are sorted once per training call. A tree is
//! grown one depth level at a time: for every feature the sorted list is
//! scanned twice (per-node non-missing totals, then prefix sums), which
//! evaluates every midpoint threshold of every open node in O(rows) per
//! feature and level. Rows that have settled in a leaf are filtered out of
//! the scan lists once they make up half of them.

use std::ops::{Add, AddAssign, Sub};

use super::tree::{Node, RegressionTree};
use super::{GBTModel, GBTParams, GbtError, Objective};
use crate::matrix::FeatureMatrix;

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct GH {
    g: f64,
    h: f64,
}

impl Add for GH {
    type Output = GH;
    fn add(self, o: GH) -> GH {
        GH {
            g: self.g + o.g,
            h: self.h + o.h,
        }
    }
}

impl AddAssign for GH {
    fn add_assign(&mut self, o: GH) {
        self.g += o.g;
        self.h += o.h;
    }
}

impl Sub for GH {
    type Output = GH;
    fn sub(self, o: GH) -> GH {
        GH {
            g: self.g - o.g,
            h: self.h - o.h,
        }
    }
}

/// A candidate split and its regularized gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    pub missing_left: bool,
    pub gain: f64,
}

fn score_term(s: GH, lambda: f64) -> f64 {
    let d = s.h + lambda;
    if d > 0.0 {
        s.g * s.g / d
    } else {
        0.0
    }
}

fn leaf_weight(s: GH, params: &GBTParams) -> f64 {
    let d = s.h + params.l2_reg;
    if d > 0.0 {
        -params.learning_rate * s.g / d
    } else {
        0.0
    }
}

type Column = Vec<(f64, u32)>;

fn presort(x: &FeatureMatrix) -> Vec<Column> {
    (0..x.n_cols())
        .map(|j| {
            let mut col: Column = (0..x.n_rows())
                .filter(|&i| x.is_valid(i, j))
                .map(|i| (x.get(i, j), i as u32))
                .collect();
            col.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            col
        })
        .collect()
}

struct Scratch {
    nonmissing: Vec<GH>,
    left: Vec<GH>,
    last: Vec<f64>,
    seen: Vec<bool>,
}

/// Best split per open node (`slot`), or `None` when no split has positive gain.
fn find_splits(
    cols: &[Column],
    row_slot: &[u32],
    totals: &[GH],
    gh: &[GH],
    params: &GBTParams,
    scratch: &mut Scratch,
) -> Vec<Option<SplitCandidate>> {
    let m = totals.len();
    let mut best: Vec<Option<SplitCandidate>> = vec![None; m];
    let lambda = params.l2_reg;
    let mch = params.min_child_hessian;
    let parent: Vec<f64> = totals.iter().map(|&t| score_term(t, lambda)).collect();

    for (feature, col) in cols.iter().enumerate() {
        scratch.nonmissing.clear();
        scratch.nonmissing.resize(m, GH::default());
        scratch.left.clear();
        scratch.left.resize(m, GH::default());
        scratch.last.clear();
        scratch.last.resize(m, 0.0);
        scratch.seen.clear();
        scratch.seen.resize(m, false);

        for &(_, r) in col {
            let s = row_slot[r as usize];
            if s != NONE {
                scratch.nonmissing[s as usize] += gh[r as usize];
            }
        }
        for &(v, r) in col {
            let s = row_slot[r as usize];
            if s == NONE {
                continue;
            }
            let s = s as usize;
            if scratch.seen[s] && v > scratch.last[s] {
                let lo = scratch.last[s];
                let mut threshold = 0.5 * (lo + v);
                if threshold <= lo {
                    threshold = v;
                }
                let left = scratch.left[s];
                let missing = totals[s] - scratch.nonmissing[s];
                let right = scratch.nonmissing[s] - left;
                for missing_left in [true, false] {
                    let (l, r) = if missing_left {
                        (left + missing, right)
                    } else {
                        (left, right + missing)
                    };
                    if l.h < mch || r.h < mch {
                        continue;
                    }
                    let gain = 0.5 * (score_term(l, lambda) + score_term(r, lambda) - parent[s])
                        - params.min_split_gain;
                    if gain > best[s].map_or(0.0, |b| b.gain) {
                        best[s] = Some(SplitCandidate {
                            feature,
                            threshold,
                            missing_left,
                            gain,
                        });
                    }
                }
            }
            scratch.left[s] += gh[r as usize];
            scratch.last[s] = v;
            scratch.seen[s] = true;
        }
    }
    best
}

fn new_scratch() -> Scratch {
    Scratch {
        nonmissing: Vec::new(),
        left: Vec::new(),
        last: Vec::new(),
        seen: Vec::new(),
    }
}

/// Split the trainer would choose at the root for the given gradients and hessians.
pub fn best_root_split(
    x: &FeatureMatrix,
    grad: &[f64],
    hess: &[f64],
    params: &GBTParams,
) -> Option<SplitCandidate> {
    let gh: Vec<GH> = grad.iter().zip(hess).map(|(&g, &h)| GH { g, h }).collect();
    let total = gh.iter().fold(GH::default(), |a, &b| a + b);
    let cols = presort(x);
    let row_slot = vec![0u32; x.n_rows()];
    find_splits(&cols, &row_slot, &[total], &gh, params, &mut new_scratch())[0]
}

struct TreeBuilder<'a> {
    x: &'a FeatureMatrix,
    cols: &'a [Column],
    params: &'a GBTParams,
    scratch: Scratch,
    compacted: Vec<Column>,
}

impl<'a> TreeBuilder<'a> {
    /// Grows one tree; returns it with the leaf node of every row.
    fn build(&mut self, gh: &[GH]) -> (RegressionTree, Vec<u32>) {
        let n = self.x.n_rows();
        let mut nodes = vec![Node::Leaf { weight: 0.0 }];
        let mut stats = vec![gh.iter().fold(GH::default(), |a, &b| a + b)];
        let mut row_node = vec![0u32; n];
        let mut active: Vec<usize> = vec![0];
        let mut row_slot = vec![NONE; n];
        let mut using_compacted = false;
        let mut scan_len = self.cols.first().map_or(0, Vec::len);

        for _depth in 0..self.params.max_depth {
            if active.is_empty() {
                break;
            }
            let mut slot_of = vec![NONE; nodes.len()];
            for (s, &node) in active.iter().enumerate() {
                slot_of[node] = s as u32;
            }
            let mut alive = 0usize;
            for r in 0..n {
                let s = slot_of[row_node[r] as usize];
                row_slot[r] = s;
                alive += usize::from(s != NONE);
            }
            if 2 * alive < scan_len {
                let source: &[Column] = if using_compacted { &self.compacted } else { self.cols };
                let filtered: Vec<Column> = source
                    .iter()
                    .map(|c| {
                        c.iter()
                            .copied()
                            .filter(|&(_, r)| row_slot[r as usize] != NONE)
                            .collect()
                    })
                    .collect();
                self.compacted = filtered;
                using_compacted = true;
                scan_len = alive;
            }
            let totals: Vec<GH> = active.iter().map(|&i| stats[i]).collect();
            let cols: &[Column] = if using_compacted { &self.compacted } else { self.cols };
            let splits = find_splits(cols, &row_slot, &totals, gh, self.params, &mut self.scratch);

            let mut children = vec![(0usize, 0usize); active.len()];
            let mut next = Vec::new();
            for (s, &node) in active.iter().enumerate() {
                if let Some(c) = splits[s] {
                    let (l, r) = (nodes.len(), nodes.len() + 1);
                    nodes.push(Node::Leaf { weight: 0.0 });
                    nodes.push(Node::Leaf { weight: 0.0 });
                    stats.push(GH::default());
                    stats.push(GH::default());
                    nodes[node] = Node::Split {
                        feature: c.feature,
                        threshold: c.threshold,
                        missing_left: c.missing_left,
                        left: l,
                        right: r,
                    };
                    children[s] = (l, r);
                    next.push(l);
                    next.push(r);
                }
            }
            if next.is_empty() {
                break;
            }
            for r in 0..n {
                let s = row_slot[r];
                if s == NONE {
                    continue;
                }
                let s = s as usize;
                if let Some(c) = splits[s] {
                    let go_left = if self.x.is_valid(r, c.feature) {
                        self.x.get(r, c.feature) < c.threshold
                    } else {
                        c.missing_left
                    };
                    let child = if go_left { children[s].0 } else { children[s].1 };
                    row_node[r] = child as u32;
                    stats[child] += gh[r];
                }
            }
            active = next;
        }

        for (node, s) in nodes.iter_mut().zip(&stats) {
            if let Node::Leaf { weight } = node {
                *weight = leaf_weight(*s, self.params);
            }
        }
        (RegressionTree { nodes }, row_node)
    }
}

fn check_inputs(x: &FeatureMatrix, y: &[usize], params: &GBTParams) -> Result<(), GbtError> {
    params.validate()?;
    if x.n_rows() == 0 || x.n_cols() == 0 {
        return Err(GbtError::EmptyInput);
    }
    if y.len() != x.n_rows() {
        return Err(GbtError::Shape(format!("{} rows, {} labels", x.n_rows(), y.len())));
    }
    if x.n_rows() >= NONE as usize {
        return Err(GbtError::Shape("too many rows".into()));
    }
    let classes = params.objective.n_classes();
    if let Some((row, &label)) = y.iter().enumerate().find(|(_, &l)| l >= classes) {
        return Err(GbtError::Label { row, label, classes });
    }
    for i in 0..x.n_rows() {
        for j in 0..x.n_cols() {
            if x.is_valid(i, j) && !x.get(i, j).is_finite() {
                return Err(GbtError::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

fn mean_loss(objective: Objective, margins: &[f64], y: &[usize]) -> f64 {
    let k = objective.n_outputs();
    let total: f64 = y
        .iter()
        .enumerate()
        .map(|(i, &label)| objective.loss(&margins[i * k..(i + 1) * k], label))
        .sum();
    total / y.len() as f64
}

/// Trains a boosted ensemble. Invalid matrix cells are missing values.
pub fn train_gbt(x: &FeatureMatrix, y: &[usize], params: &GBTParams) -> Result<GBTModel, GbtError> {
    check_inputs(x, y, params)?;
    if y.iter().all(|&l| l == y[0]) {
        log::warn!("degenerate target: every training label is {}", y[0]);
    }
    let n = x.n_rows();
    let objective = params.objective;
    let k = objective.n_outputs();
    let base_margin = params.base_margin();
    let mut margins: Vec<f64> = (0..n).flat_map(|_| base_margin.iter().copied()).collect();
    let cols = presort(x);
    let mut builder = TreeBuilder {
        x,
        cols: &cols,
        params,
        scratch: new_scratch(),
        compacted: Vec::new(),
    };
    let mut trees = Vec::with_capacity(params.n_rounds * k);
    let mut loss_history = vec![mean_loss(objective, &margins, y)];
    let mut grads = vec![(0.0, 0.0); k];
    let mut gh: Vec<Vec<GH>> = vec![vec![GH::default(); n]; k];

    for round in 0..params.n_rounds {
        for (i, &label) in y.iter().enumerate() {
            objective.gradients(&margins[i * k..(i + 1) * k], label, &mut grads);
            for (c, &(g, h)) in grads.iter().enumerate() {
                gh[c][i] = GH { g, h };
            }
        }
        for (c, ghc) in gh.iter().enumerate() {
            let (tree, leaf_of) = builder.build(ghc);
            for (i, &leaf) in leaf_of.iter().enumerate() {
                if let Node::Leaf { weight } = tree.nodes[leaf as usize] {
                    margins[i * k + c] += weight;
                }
            }
            trees.push(tree);
        }
        loss_history.push(mean_loss(objective, &margins, y));
        log::debug!("round {round}: loss {}", loss_history[round + 1]);
    }

    Ok(GBTModel {
        params: *params,
        n_features: x.n_cols(),
        base_margin,
        trees,
        loss_history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn column(values: &[f64]) -> FeatureMatrix {
        FeatureMatrix::from_rows(&values.iter().map(|&v| vec![v]).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn single_newton_step_leaf() {
        let x = column(&[0.0, 0.0, 0.0, 0.0]);
        let params = GBTParams {
            learning_rate: 1.0,
            n_rounds: 1,
            max_depth: 1,
            ..GBTParams::default()
        };
        let m = train_gbt(&x, &[1, 1, 1, 1], &params).unwrap();
        assert_eq!(m.trees.len(), 1);
        assert_eq!(m.trees[0], RegressionTree::leaf(1.0));
        let margin = m.predict_margin(&[0.0], &[true]).unwrap();
        assert_eq!(margin, vec![1.0]);
        let p = m.predict_proba(&[0.0], &[true]).unwrap()[1];
        assert!((p - 0.7310585786300049).abs() < 1e-12);
    }

    #[test]
    fn constant_features_give_leaves() {
        let x = FeatureMatrix::from_rows(&vec![vec![1.0, 2.0]; 20]).unwrap();
        let y: Vec<usize> = (0..20).map(|i| i % 3).collect();
        let params = GBTParams {
            n_rounds: 5,
            objective: Objective::Softmax { classes: 3 },
            ..GBTParams::default()
        };
        let m = train_gbt(&x, &y, &params).unwrap();
        assert_eq!(m.trees.len(), 15);
        assert!(m.trees.iter().all(RegressionTree::is_leaf));
    }

    #[test]
    fn two_point_split() {
        let x = column(&[0.0, 1.0]);
        let params = GBTParams {
            n_rounds: 1,
            max_depth: 1,
            min_child_hessian: 0.0,
            ..GBTParams::default()
        };
        let m = train_gbt(&x, &[0, 1], &params).unwrap();
        match &m.trees[0].nodes[..] {
            [Node::Split { feature: 0, threshold, left, right, .. }, ..] => {
                assert_eq!(*threshold, 0.5);
                let w = |i: usize| match m.trees[0].nodes[i] {
                    Node::Leaf { weight } => weight,
                    _ => panic!("expected leaf"),
                };
                assert!(w(*left) < 0.0 && w(*right) > 0.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_values_learn_a_direction() {
        // missing rows behave like the high group
        let mut x = FeatureMatrix::new(1);
        let mut y = Vec::new();
        for i in 0..40 {
            let (v, ok, label) = match i % 4 {
                0 | 1 => (i as f64 * 0.01, true, 0),
                2 => (5.0 + i as f64 * 0.01, true, 1),
                _ => (0.0, false, 1),
            };
            x.push_row(&[v], &[ok]).unwrap();
            y.push(label);
        }
        let params = GBTParams {
            n_rounds: 10,
            ..GBTParams::default()
        };
        let m = train_gbt(&x, &y, &params).unwrap();
        assert_eq!(m.accuracy(&x, &y).unwrap(), 1.0);
        assert_eq!(m.predict_class(&[0.0], &[false]).unwrap(), 1);
    }

    #[test]
    fn rejects_bad_input() {
        let x = column(&[0.0, 1.0]);
        let p = GBTParams::default();
        assert!(matches!(train_gbt(&x, &[0, 2], &p), Err(GbtError::Label { .. })));
        assert!(matches!(train_gbt(&x, &[0], &p), Err(GbtError::Shape(_))));
        assert!(matches!(
            train_gbt(&FeatureMatrix::new(3), &[], &p),
            Err(GbtError::EmptyInput)
        ));
        let nan = column(&[0.0, f64::NAN]);
        assert!(matches!(train_gbt(&nan, &[0, 1], &p), Err(GbtError::NonFinite { .. })));
    }

    #[test]
    fn single_class_softmax_still_trains() {
        let x = column(&[0.0, 1.0, 2.0]);
        let params = GBTParams {
            n_rounds: 3,
            objective: Objective::Softmax { classes: 4 },
            ..GBTParams::default()
        };
        let m = train_gbt(&x, &[2, 2, 2], &params).unwrap();
        assert_eq!(m.predict_matrix(&x).unwrap(), vec![2, 2, 2]);
    }

    fn brute_force(x: &FeatureMatrix, g: &[f64], h: &[f64], p: &GBTParams) -> f64 {
        let term = |gs: f64, hs: f64| if hs + p.l2_reg > 0.0 { gs * gs / (hs + p.l2_reg) } else { 0.0 };
        let (gt, ht): (f64, f64) = (g.iter().sum(), h.iter().sum());
        let mut best = 0.0f64;
        for j in 0..x.n_cols() {
            let mut vals: Vec<f64> = (0..x.n_rows()).filter(|&i| x.is_valid(i, j)).map(|i| x.get(i, j)).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            for w in vals.windows(2) {
                let t = 0.5 * (w[0] + w[1]);
                for missing_left in [true, false] {
                    let (mut gl, mut hl) = (0.0, 0.0);
                    for i in 0..x.n_rows() {
                        let left = if x.is_valid(i, j) { x.get(i, j) < t } else { missing_left };
                        if left {
                            gl += g[i];
                            hl += h[i];
                        }
                    }
                    let (gr, hr) = (gt - gl, ht - hl);
                    if hl < p.min_child_hessian || hr < p.min_child_hessian {
                        continue;
                    }
                    let gain = 0.5 * (term(gl, hl) + term(gr, hr) - term(gt, ht)) - p.min_split_gain;
                    best = best.max(gain);
                }
            }
        }
        best
    }

    proptest! {
        #[test]
        fn root_split_matches_brute_force(
            rows in proptest::collection::vec(
                (proptest::collection::vec((0u8..6, proptest::bool::weighted(0.85)), 3), -1.0f64..1.0, 0.01f64..1.0),
                2..32,
            ),
            lambda in 0.0f64..2.0,
            mch in 0.0f64..1.0,
        ) {
            let mut x = FeatureMatrix::new(3);
            let mut g = Vec::new();
            let mut h = Vec::new();
            for (cells, gi, hi) in &rows {
                let values: Vec<f64> = cells.iter().map(|c| c.0 as f64 * 0.5).collect();
                let valid: Vec<bool> = cells.iter().map(|c| c.1).collect();
                x.push_row(&values, &valid).unwrap();
                g.push(*gi);
                h.push(*hi);
            }
            let params = GBTParams { l2_reg: lambda, min_child_hessian: mch, ..GBTParams::default() };
            let oracle = brute_force(&x, &g, &h, &params);
            let found = best_root_split(&x, &g, &h, &params).map_or(0.0, |c| c.gain);
            prop_assert!((oracle - found).abs() <= 1e-9, "oracle {oracle} found {found}");
        }

        #[test]
        fn training_loss_does_not_increase(
            rows in proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0, 0usize..3), 10..60),
            eta in 0.05f64..=1.0,
        ) {
            let x = FeatureMatrix::from_rows(&rows.iter().map(|r| vec![r.0, r.1]).collect::<Vec<_>>()).unwrap();
            let y: Vec<usize> = rows.iter().map(|r| r.2).collect();
            let params = GBTParams {
                learning_rate: eta,
                n_rounds: 8,
                max_depth: 3,
                objective: Objective::Softmax { classes: 3 },
                ..GBTParams::default()
            };
            let m = train_gbt(&x, &y, &params).unwrap();
            for w in m.loss_history.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-12, "{:?}", m.loss_history);
            }
        }
    }
}
