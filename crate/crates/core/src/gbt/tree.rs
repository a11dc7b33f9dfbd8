use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    /// Rows with `x[feature] < threshold` go left; missing values follow `missing_left`.
    Split {
        feature: usize,
        threshold: f64,
        missing_left: bool,
        left: usize,
        right: usize,
    },
    Leaf { weight: f64 },
}

/// A regression tree stored as a node array; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn leaf(weight: f64) -> Self {
        RegressionTree {
            nodes: vec![Node::Leaf { weight }],
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self.nodes.first(), Some(Node::Leaf { .. }))
    }

    pub fn leaf_index(&self, values: &[f64], valid: &[bool]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { .. } => return i,
                Node::Split {
                    feature,
                    threshold,
                    missing_left,
                    left,
                    right,
                } => {
                    let go_left = if valid[feature] {
                        values[feature] < threshold
                    } else {
                        missing_left
                    };
                    i = if go_left { left } else { right };
                }
            }
        }
    }

    pub fn predict(&self, values: &[f64], valid: &[bool]) -> f64 {
        match self.nodes[self.leaf_index(values, valid)] {
            Node::Leaf { weight } => weight,
            Node::Split { .. } => unreachable!("leaf_index stops at leaves"),
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    /// Structural check: children in range and visited once, finite values.
    pub fn check(&self, n_features: usize) -> Result<(), String> {
        if self.nodes.is_empty() {
            return Err("empty tree".into());
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            if std::mem::replace(&mut seen[i], true) {
                return Err(format!("node {i} reached twice"));
            }
            match self.nodes[i] {
                Node::Leaf { weight } if !weight.is_finite() => {
                    return Err(format!("node {i}: non-finite leaf"))
                }
                Node::Leaf { .. } => {}
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    if feature >= n_features || !threshold.is_finite() {
                        return Err(format!("node {i}: bad split"));
                    }
                    if left >= self.nodes.len() || right >= self.nodes.len() {
                        return Err(format!("node {i}: child out of range"));
                    }
                    stack.push(left);
                    stack.push(right);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err("unreachable nodes".into());
        }
        Ok(())
    }
}
