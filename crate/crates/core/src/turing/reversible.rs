use super::{Action, Rule, TMSpec};

/// Outcome of the rule-level determinism checks. Clashes are pairs of rule indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReversibilityReport {
    pub forward_deterministic: bool,
    pub backward_deterministic: bool,
    pub forward_clashes: Vec<(usize, usize)>,
    pub backward_clashes: Vec<(usize, usize)>,
}

impl ReversibilityReport {
    pub fn is_reversible(&self) -> bool {
        self.forward_deterministic && self.backward_deterministic
    }
}

/// Two per-tape requirements are compatible unless both pin a symbol and the symbols differ.
fn separated(a: &[Action], b: &[Action], pick: fn(Action) -> Option<u8>) -> bool {
    a.iter()
        .zip(b)
        .any(|(&x, &y)| matches!((pick(x), pick(y)), (Some(p), Some(q)) if p != q))
}

fn clashes(
    spec: &TMSpec,
    groups: impl Iterator<Item = Vec<usize>>,
    pick: fn(Action) -> Option<u8>,
) -> Vec<(usize, usize)> {
    let rules: &[Rule] = spec.rules();
    let mut out = Vec::new();
    for g in groups {
        for (x, &i) in g.iter().enumerate() {
            for &j in &g[x + 1..] {
                if !separated(&rules[i].actions, &rules[j].actions, pick) {
                    out.push((i, j));
                }
            }
        }
    }
    out
}

/// Forward: no two rules leaving a state can match the same read vector.
/// Backward: no two rules entering a state can leave the same written vector,
/// which in particular allows at most one move rule into each state and no
/// mixing of move and write rules.
pub fn check_reversible(spec: &TMSpec) -> ReversibilityReport {
    let n = spec.states().len() as u32;
    let fwd = clashes(
        spec,
        (0..n).map(|s| spec.rules_from(s).to_vec()),
        Action::read,
    );
    let bwd = clashes(
        spec,
        (0..n).map(|s| spec.rules_into(s).to_vec()),
        Action::written,
    );
    ReversibilityReport {
        forward_deterministic: fwd.is_empty(),
        backward_deterministic: bwd.is_empty(),
        forward_clashes: fwd,
        backward_clashes: bwd,
    }
}
