//! Dense probability tables over named discrete variables.
//!
//! Probabilities live in linear space; log-space is used only inside
//! entropy/KL accumulation, which is numerically sufficient at the scales
//! this crate enumerates (joints up to ~10^6 entries).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info::DagSpec;

/// Tolerance for "sums to one" checks on stored distributions.
pub const PROB_TOL: f64 = 1e-12;

/// Compensated (Kahan) sum; keeps normalization checks exact enough for
/// tables with up to millions of entries.
pub fn kahan_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for x in xs {
        let y = x - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * p.ln()
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub card: usize,
}

impl Variable {
    pub fn new(name: impl Into<String>, card: usize) -> Self {
        Variable { name: name.into(), card }
    }
}

/// Exact joint probability table over named discrete variables, stored as a
/// dense row-major array (last declared variable varies fastest).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CategoricalTable {
    vars: Vec<Variable>,
    probs: Vec<f64>,
}

impl CategoricalTable {
    pub fn new(vars: Vec<Variable>, probs: Vec<f64>) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for v in &vars {
            if v.card == 0 {
                return Err(Error::InvalidDistribution(format!(
                    "variable `{}` has cardinality 0",
                    v.name
                )));
            }
            if !seen.insert(v.name.clone()) {
                return Err(Error::DuplicateVariable(v.name.clone()));
            }
        }
        let size: usize = vars.iter().map(|v| v.card).product();
        if probs.len() != size {
            return Err(Error::ShapeMismatch(format!(
                "expected {size} entries, got {}",
                probs.len()
            )));
        }
        for &p in &probs {
            if !(p >= 0.0) {
                return Err(Error::InvalidDistribution(format!(
                    "negative or non-finite entry {p}"
                )));
            }
        }
        let total = kahan_sum(probs.iter().copied());
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidDistribution(format!(
                "entries sum to {total}, not 1"
            )));
        }
        Ok(CategoricalTable { vars, probs })
    }

    /// Builds a table from nonnegative weights, normalizing them.
    pub fn from_weights(vars: Vec<Variable>, weights: Vec<f64>) -> Result<Self> {
        let total = kahan_sum(weights.iter().copied());
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidDistribution(format!(
                "weights sum to {total}"
            )));
        }
        let probs = weights.into_iter().map(|w| w / total).collect();
        Self::new(vars, probs)
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn size(&self) -> usize {
        self.probs.len()
    }

    pub fn var_index(&self, name: &str) -> Result<usize> {
        self.vars
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn card(&self, name: &str) -> Result<usize> {
        Ok(self.vars[self.var_index(name)?].card)
    }

    /// Stride of each variable in the dense layout.
    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1usize; self.vars.len()];
        for i in (0..self.vars.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.vars[i + 1].card;
        }
        strides
    }

    /// Linear index for a full assignment, in declared variable order.
    pub fn index_of(&self, assignment: &[usize]) -> usize {
        debug_assert_eq!(assignment.len(), self.vars.len());
        let strides = self.strides();
        assignment
            .iter()
            .zip(&strides)
            .map(|(&a, &s)| a * s)
            .sum()
    }

    /// Marginal over `keep` (output variables in the order given). The empty
    /// subset yields the trivial one-entry table.
    pub fn marginalize(&self, keep: &[&str]) -> Result<CategoricalTable> {
        let mut keep_idx = Vec::with_capacity(keep.len());
        for name in keep {
            let i = self.var_index(name)?;
            if keep_idx.contains(&i) {
                return Err(Error::DuplicateVariable(name.to_string()));
            }
            keep_idx.push(i);
        }
        let out_vars: Vec<Variable> = keep_idx.iter().map(|&i| self.vars[i].clone()).collect();
        let out_size: usize = out_vars.iter().map(|v| v.card).product();
        let mut out_strides = vec![1usize; out_vars.len()];
        for i in (0..out_vars.len().saturating_sub(1)).rev() {
            out_strides[i] = out_strides[i + 1] * out_vars[i + 1].card;
        }
        let strides = self.strides();
        // Kahan-accumulated scatter so marginals stay valid tables even for
        // very large joints.
        let mut out = vec![0.0f64; out_size];
        let mut comp = vec![0.0f64; out_size];
        for (lin, &p) in self.probs.iter().enumerate() {
            let mut o = 0usize;
            for (k, &vi) in keep_idx.iter().enumerate() {
                o += ((lin / strides[vi]) % self.vars[vi].card) * out_strides[k];
            }
            let y = p - comp[o];
            let t = out[o] + y;
            comp[o] = (t - out[o]) - y;
            out[o] = t;
        }
        Ok(CategoricalTable {
            vars: out_vars,
            probs: out,
        })
    }

    /// Entropy of the marginal on `vars`, in nats. 0 log 0 = 0 by continuity.
    pub fn entropy(&self, vars: &[&str]) -> Result<f64> {
        let marginal = self.marginalize(vars)?;
        let h = -kahan_sum(marginal.probs.iter().map(|&p| plogp(p)));
        Ok(h.max(0.0))
    }

    /// H(a | b) = H(a, b) − H(b).
    pub fn conditional_entropy(&self, a: &[&str], b: &[&str]) -> Result<f64> {
        let joint = self.entropy(&union(a, b))?;
        Ok(joint - self.entropy(b)?)
    }

    /// KL(self || other) in nats; +∞ when support(self) ⊄ support(other).
    /// Variables are matched by name, so declaration order may differ.
    pub fn kl(&self, other: &CategoricalTable) -> Result<f64> {
        if self.vars.len() != other.vars.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} vs {} variables",
                self.vars.len(),
                other.vars.len()
            )));
        }
        let mut other_idx = Vec::with_capacity(self.vars.len());
        for v in &self.vars {
            let j = other.var_index(&v.name)?;
            if other.vars[j].card != v.card {
                return Err(Error::ShapeMismatch(format!(
                    "variable `{}` has cardinality {} vs {}",
                    v.name, v.card, other.vars[j].card
                )));
            }
            other_idx.push(j);
        }
        let strides = self.strides();
        let other_strides = other.strides();
        let mut terms = Vec::with_capacity(self.size());
        for (lin, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let mut o = 0usize;
            for (k, &j) in other_idx.iter().enumerate() {
                o += ((lin / strides[k]) % self.vars[k].card) * other_strides[j];
            }
            let q = other.probs[o];
            if q == 0.0 {
                return Ok(f64::INFINITY);
            }
            terms.push(p * (p / q).ln());
        }
        Ok(kahan_sum(terms))
    }

    /// I(a; b) = H(a) + H(b) − H(a, b), in nats.
    pub fn mutual_information(&self, a: &[&str], b: &[&str]) -> Result<f64> {
        check_disjoint(a, b)?;
        let mi = self.entropy(a)? + self.entropy(b)? - self.entropy(&union(a, b))?;
        Ok(mi.max(0.0))
    }

    /// I(a; b | c) = H(a,c) + H(b,c) − H(a,b,c) − H(c), in nats.
    pub fn conditional_mi(&self, a: &[&str], b: &[&str], c: &[&str]) -> Result<f64> {
        check_disjoint(a, b)?;
        check_disjoint(a, c)?;
        check_disjoint(b, c)?;
        let mi = self.entropy(&union(a, c))? + self.entropy(&union(b, c))?
            - self.entropy(&union(&union(a, b), c))?
            - self.entropy(c)?;
        Ok(mi.max(0.0))
    }

    /// Multi-information of `dag` measured in this table:
    /// Σ over nodes of I(node; parents). Parentless nodes contribute 0.
    pub fn multi_information(&self, dag: &DagSpec) -> Result<f64> {
        let mut total = 0.0;
        for node in dag.nodes() {
            self.var_index(node)?;
            let parents = dag.parents_of(node);
            if parents.is_empty() {
                continue;
            }
            let parent_refs: Vec<&str> = parents.iter().map(|s| s.as_str()).collect();
            total += self.mutual_information(&[node], &parent_refs)?;
        }
        Ok(total)
    }
}

fn union<'a>(a: &[&'a str], b: &[&'a str]) -> Vec<&'a str> {
    let mut out = a.to_vec();
    for x in b {
        if !out.contains(x) {
            out.push(x);
        }
    }
    out
}

fn check_disjoint(a: &[&str], b: &[&str]) -> Result<()> {
    for x in a {
        if b.contains(x) {
            return Err(Error::OverlappingVariables(x.to_string()));
        }
    }
    Ok(())
}

/// Row-stochastic conditional table p(target | given): one distribution over
/// `n_target` outcomes per conditioning value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionalTable {
    n_given: usize,
    n_target: usize,
    probs: Vec<f64>,
}

impl ConditionalTable {
    pub fn new(n_given: usize, n_target: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != n_given * n_target {
            return Err(Error::ShapeMismatch(format!(
                "expected {} entries, got {}",
                n_given * n_target,
                probs.len()
            )));
        }
        for &p in &probs {
            if !(p >= 0.0) {
                return Err(Error::InvalidDistribution(format!(
                    "negative or non-finite entry {p}"
                )));
            }
        }
        for g in 0..n_given {
            let row = &probs[g * n_target..(g + 1) * n_target];
            let total = kahan_sum(row.iter().copied());
            if (total - 1.0).abs() > PROB_TOL {
                return Err(Error::InvalidDistribution(format!(
                    "row {g} sums to {total}, not 1"
                )));
            }
        }
        Ok(ConditionalTable {
            n_given,
            n_target,
            probs,
        })
    }

    /// Normalizes each row of nonnegative weights.
    pub fn from_rows(n_given: usize, n_target: usize, mut weights: Vec<f64>) -> Result<Self> {
        if weights.len() != n_given * n_target {
            return Err(Error::ShapeMismatch(format!(
                "expected {} entries, got {}",
                n_given * n_target,
                weights.len()
            )));
        }
        for g in 0..n_given {
            let row = &mut weights[g * n_target..(g + 1) * n_target];
            let total = kahan_sum(row.iter().copied());
            if !(total > 0.0) || !total.is_finite() {
                return Err(Error::InvalidDistribution(format!(
                    "row {g} sums to {total}"
                )));
            }
            for w in row {
                *w /= total;
            }
        }
        Self::new(n_given, n_target, weights)
    }

    pub fn n_given(&self) -> usize {
        self.n_given
    }

    pub fn n_target(&self) -> usize {
        self.n_target
    }

    pub fn get(&self, given: usize, target: usize) -> f64 {
        self.probs[given * self.n_target + target]
    }

    pub fn row(&self, given: usize) -> &[f64] {
        &self.probs[given * self.n_target..(given + 1) * self.n_target]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn bernoulli(p: f64) -> CategoricalTable {
        CategoricalTable::new(vec![Variable::new("a", 2)], vec![1.0 - p, p]).unwrap()
    }

    fn random_table(vars: Vec<Variable>, seed: u64) -> CategoricalTable {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let size: usize = vars.iter().map(|v| v.card).product();
        let weights: Vec<f64> = (0..size)
            .map(|_| -(1.0 - rng.random::<f64>()).ln())
            .collect();
        CategoricalTable::from_weights(vars, weights).unwrap()
    }

    #[test]
    fn uniform_entropy_is_log_cardinality() {
        let t = CategoricalTable::new(vec![Variable::new("a", 4)], vec![0.25; 4]).unwrap();
        assert_abs_diff_eq!(t.entropy(&["a"]).unwrap(), 4.0f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn point_mass_entropy_is_zero() {
        let t =
            CategoricalTable::new(vec![Variable::new("a", 3)], vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(t.entropy(&["a"]).unwrap(), 0.0);
    }

    #[test]
    fn bernoulli_entropy_matches_direct_evaluation() {
        // independent oracle: -sum p ln p evaluated literally
        let expected = -(0.3f64 * 0.3f64.ln() + 0.7 * 0.7f64.ln());
        assert_abs_diff_eq!(expected, 0.610864, epsilon = 1e-6);
        assert_abs_diff_eq!(
            bernoulli(0.7).entropy(&["a"]).unwrap(),
            expected,
            epsilon = 1e-15
        );
    }

    #[test]
    fn entropy_unknown_variable_errors_with_name() {
        let err = bernoulli(0.5).entropy(&["b"]).unwrap_err();
        assert!(err.to_string().contains('b'), "{err}");
    }

    #[test]
    fn kl_identity_is_zero() {
        let p = random_table(vec![Variable::new("a", 3), Variable::new("b", 2)], 7);
        assert_abs_diff_eq!(p.kl(&p).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn kl_point_mass_vs_fair_coin_is_ln2() {
        let p = bernoulli(1.0);
        let q = bernoulli(0.5);
        assert_abs_diff_eq!(p.kl(&q).unwrap(), 2.0f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn kl_support_violation_is_infinite() {
        let p = bernoulli(0.5);
        let q = bernoulli(0.0);
        assert!(p.kl(&q).unwrap().is_infinite());
    }

    #[test]
    fn kl_aligns_variables_by_name() {
        let p = random_table(vec![Variable::new("a", 2), Variable::new("b", 3)], 1);
        // same distribution with swapped declaration order
        let mut swapped = vec![0.0; 6];
        for a in 0..2 {
            for b in 0..3 {
                swapped[b * 2 + a] = p.probs()[a * 3 + b];
            }
        }
        let q = CategoricalTable::new(
            vec![Variable::new("b", 3), Variable::new("a", 2)],
            swapped,
        )
        .unwrap();
        assert_abs_diff_eq!(p.kl(&q).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn kl_shape_mismatch_errors() {
        let p = bernoulli(0.5);
        let q = CategoricalTable::new(vec![Variable::new("a", 3)], vec![1.0 / 3.0; 3]).unwrap();
        assert!(p.kl(&q).is_err());
    }

    #[test]
    fn independent_product_has_zero_mi() {
        let pa = [0.2, 0.8];
        let pb = [0.5, 0.3, 0.2];
        let mut probs = vec![0.0; 6];
        for a in 0..2 {
            for b in 0..3 {
                probs[a * 3 + b] = pa[a] * pb[b];
            }
        }
        let t = CategoricalTable::new(
            vec![Variable::new("a", 2), Variable::new("b", 3)],
            probs,
        )
        .unwrap();
        assert_abs_diff_eq!(
            t.mutual_information(&["a"], &["b"]).unwrap(),
            0.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn copy_channel_mi_is_ln2() {
        let t = CategoricalTable::new(
            vec![Variable::new("a", 2), Variable::new("b", 2)],
            vec![0.5, 0.0, 0.0, 0.5],
        )
        .unwrap();
        assert_abs_diff_eq!(
            t.mutual_information(&["a"], &["b"]).unwrap(),
            2.0f64.ln(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn mi_rejects_overlapping_sets() {
        let t = random_table(vec![Variable::new("a", 2), Variable::new("b", 2)], 3);
        assert!(t.mutual_information(&["a"], &["a"]).is_err());
    }

    #[test]
    fn mi_is_symmetric_and_matches_entropy_decomposition() {
        let t = random_table(
            vec![
                Variable::new("a", 3),
                Variable::new("b", 2),
                Variable::new("c", 2),
            ],
            11,
        );
        let ab = t.mutual_information(&["a"], &["b", "c"]).unwrap();
        let ba = t.mutual_information(&["b", "c"], &["a"]).unwrap();
        assert_abs_diff_eq!(ab, ba, epsilon = 1e-12);
        let via_h = t.entropy(&["a"]).unwrap() + t.entropy(&["b", "c"]).unwrap()
            - t.entropy(&["a", "b", "c"]).unwrap();
        assert_abs_diff_eq!(ab, via_h, epsilon = 1e-12);
    }

    #[test]
    fn markov_chain_has_zero_conditional_mi() {
        // a -> c -> b: p(a,c,b) = p(a) p(c|a) p(b|c)
        let pa = [0.3, 0.7];
        let pc_a = [[0.9, 0.1], [0.2, 0.8]];
        let pb_c = [[0.6, 0.4], [0.25, 0.75]];
        let mut probs = vec![0.0; 8];
        for a in 0..2 {
            for c in 0..2 {
                for b in 0..2 {
                    probs[a * 4 + c * 2 + b] = pa[a] * pc_a[a][c] * pb_c[c][b];
                }
            }
        }
        let t = CategoricalTable::new(
            vec![
                Variable::new("a", 2),
                Variable::new("c", 2),
                Variable::new("b", 2),
            ],
            probs,
        )
        .unwrap();
        assert_abs_diff_eq!(
            t.conditional_mi(&["a"], &["b"], &["c"]).unwrap(),
            0.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn irrelevant_conditioner_reduces_to_plain_mi() {
        let ab = random_table(vec![Variable::new("a", 2), Variable::new("b", 2)], 5);
        let pc = [0.4, 0.6];
        let mut probs = vec![0.0; 8];
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    probs[a * 4 + b * 2 + c] = ab.probs()[a * 2 + b] * pc[c];
                }
            }
        }
        let t = CategoricalTable::new(
            vec![
                Variable::new("a", 2),
                Variable::new("b", 2),
                Variable::new("c", 2),
            ],
            probs,
        )
        .unwrap();
        assert_abs_diff_eq!(
            t.conditional_mi(&["a"], &["b"], &["c"]).unwrap(),
            t.mutual_information(&["a"], &["b"]).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn chain_rule_holds_on_random_tables() {
        for seed in 0..20u64 {
            let t = random_table(
                vec![
                    Variable::new("a", 2),
                    Variable::new("b", 2),
                    Variable::new("c", 2),
                ],
                seed,
            );
            let lhs = t.mutual_information(&["a", "b"], &["c"]).unwrap();
            let rhs = t.mutual_information(&["a"], &["c"]).unwrap()
                + t.conditional_mi(&["b"], &["c"], &["a"]).unwrap();
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
        }
    }

    #[test]
    fn entropy_chain_rule_holds() {
        for seed in 0..10u64 {
            let t = random_table(
                vec![Variable::new("a", 3), Variable::new("b", 4)],
                100 + seed,
            );
            let lhs = t.entropy(&["a", "b"]).unwrap();
            let rhs = t.conditional_entropy(&["a"], &["b"]).unwrap() + t.entropy(&["b"]).unwrap();
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
        }
    }

    #[test]
    fn marginal_of_valid_table_is_valid() {
        let t = random_table(
            vec![
                Variable::new("a", 4),
                Variable::new("b", 3),
                Variable::new("c", 2),
            ],
            9,
        );
        let m = t.marginalize(&["b"]).unwrap();
        let total = kahan_sum(m.probs().iter().copied());
        assert!((total - 1.0).abs() <= PROB_TOL);
        // re-validates through the constructor
        CategoricalTable::new(m.vars().to_vec(), m.probs().to_vec()).unwrap();
    }

    #[test]
    fn conditional_table_rejects_bad_rows() {
        assert!(ConditionalTable::new(2, 2, vec![0.5, 0.4, 0.5, 0.5]).is_err());
        assert!(ConditionalTable::new(1, 2, vec![1.2, -0.2]).is_err());
        let ok = ConditionalTable::from_rows(2, 2, vec![2.0, 2.0, 1.0, 3.0]).unwrap();
        assert_abs_diff_eq!(ok.get(1, 1), 0.75, epsilon = 1e-15);
    }
}
