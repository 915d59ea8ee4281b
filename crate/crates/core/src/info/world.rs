//! Fully enumerated worlds over (Φ, X^N, Y^N, Θ, Z^N) for brute-force
//! verification of the functional bounds and identities.
//!
//! World P factorizes as p(φ) Π p(x_i|φ) p(y_i|x_i,φ) · p(θ|x^N,y^N) ·
//! Π p(z_i|x_i,θ). World Q is the desired latent-variable factorization in
//! which Z_i generates (X_i, Y_i) and everything else is independent.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info::{kahan_sum, CategoricalTable, ConditionalTable, DagSpec, Variable};

const MAX_CARD: usize = 4;
const MAX_N: usize = 3;
const FACTORIZATION_TOL: f64 = 1e-12;

fn x_name(i: usize) -> String {
    format!("X{}", i + 1)
}

fn y_name(i: usize) -> String {
    format!("Y{}", i + 1)
}

fn z_name(i: usize) -> String {
    format!("Z{}", i + 1)
}

/// KL between two densely stored distributions on the same support.
fn kl_vec(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    let mut terms = Vec::with_capacity(p.len());
    for (&pi, &qi) in p.iter().zip(q) {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return f64::INFINITY;
        }
        terms.push(pi * (pi / qi).ln());
    }
    kahan_sum(terms)
}

/// Variational approximations q(θ), q(z), q(x|z), q(y|z), shared across the
/// sample index i.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VariationalSet {
    pub q_theta: CategoricalTable,
    pub q_z: CategoricalTable,
    pub q_x_given_z: ConditionalTable,
    pub q_y_given_z: ConditionalTable,
}

/// Component kernels of World P; `build` assembles the dense joint.
#[derive(Debug, Clone)]
pub struct TinyWorldKernels {
    pub p_phi: Vec<f64>,
    /// rows: φ; targets: x
    pub x_given_phi: ConditionalTable,
    /// rows: φ·card_x + x; targets: y
    pub y_given_x_phi: ConditionalTable,
    /// rows: `data_index`; targets: θ
    pub theta_given_data: ConditionalTable,
    /// rows: x·card_θ + θ; targets: z
    pub z_given_x_theta: ConditionalTable,
}

impl TinyWorldKernels {
    /// Mixed-radix row index for the training-set configuration
    /// (x_1..x_n slowest, then y_1..y_n).
    pub fn data_index(xs: &[usize], ys: &[usize], card_x: usize, card_y: usize) -> usize {
        let mut idx = 0usize;
        for &x in xs {
            idx = idx * card_x + x;
        }
        for &y in ys {
            idx = idx * card_y + y;
        }
        idx
    }

    pub fn build(&self, n: usize, variational: VariationalSet) -> Result<TinyWorld> {
        let card_phi = self.p_phi.len();
        let card_x = self.x_given_phi.n_target();
        let card_y = self.y_given_x_phi.n_target();
        let card_theta = self.theta_given_data.n_target();
        let card_z = self.z_given_x_theta.n_target();

        let mut vars = vec![Variable::new("Phi", card_phi)];
        for i in 0..n {
            vars.push(Variable::new(x_name(i), card_x));
        }
        for i in 0..n {
            vars.push(Variable::new(y_name(i), card_y));
        }
        vars.push(Variable::new("Theta", card_theta));
        for i in 0..n {
            vars.push(Variable::new(z_name(i), card_z));
        }

        let size: usize = vars.iter().map(|v| v.card).product();
        let mut probs = vec![0.0f64; size];
        let mut assign = vec![0usize; vars.len()];
        for (lin, slot) in probs.iter_mut().enumerate() {
            let mut rem = lin;
            for k in (0..vars.len()).rev() {
                assign[k] = rem % vars[k].card;
                rem /= vars[k].card;
            }
            let phi = assign[0];
            let xs = &assign[1..1 + n];
            let ys = &assign[1 + n..1 + 2 * n];
            let theta = assign[1 + 2 * n];
            let zs = &assign[2 + 2 * n..2 + 3 * n];

            let mut p = self.p_phi[phi];
            for i in 0..n {
                p *= self.x_given_phi.get(phi, xs[i]);
                p *= self.y_given_x_phi.get(phi * card_x + xs[i], ys[i]);
            }
            p *= self
                .theta_given_data
                .get(Self::data_index(xs, ys, card_x, card_y), theta);
            for i in 0..n {
                p *= self.z_given_x_theta.get(xs[i] * card_theta + theta, zs[i]);
            }
            *slot = p;
        }

        let joint = CategoricalTable::new(vars, probs)?;
        TinyWorld::new(joint, TinyWorld::dag_p_for(n), variational)
    }
}

/// Fully enumerated joint over (Φ, X^N, Y^N, Θ, Z^N) together with its
/// World-P dag and the variational set used by the bound report.
#[derive(Debug, Clone, Serialize)]
pub struct TinyWorld {
    joint: CategoricalTable,
    dag_p: DagSpec,
    variational: VariationalSet,
    n: usize,
}

impl TinyWorld {
    pub fn new(
        joint: CategoricalTable,
        dag_p: DagSpec,
        variational: VariationalSet,
    ) -> Result<Self> {
        // Recover n from the variable names and check the full name set.
        let names: Vec<&str> = joint.vars().iter().map(|v| v.name.as_str()).collect();
        let n = names.iter().filter(|s| s.starts_with('X')).count();
        if n == 0 || n > MAX_N {
            return Err(Error::InvalidWorld(format!(
                "need 1..={MAX_N} samples, found {n}"
            )));
        }
        let mut expected = vec!["Phi".to_string()];
        for i in 0..n {
            expected.push(x_name(i));
        }
        for i in 0..n {
            expected.push(y_name(i));
        }
        expected.push("Theta".to_string());
        for i in 0..n {
            expected.push(z_name(i));
        }
        if names.len() != expected.len()
            || expected.iter().any(|e| !names.contains(&e.as_str()))
        {
            return Err(Error::InvalidWorld(format!(
                "variables {names:?} do not match the (Phi, X^N, Y^N, Theta, Z^N) layout"
            )));
        }
        for v in joint.vars() {
            if v.card > MAX_CARD {
                return Err(Error::InvalidWorld(format!(
                    "variable `{}` has cardinality {} > {MAX_CARD}",
                    v.name, v.card
                )));
            }
        }
        for (group, pick) in [("X", x_name(0)), ("Y", y_name(0)), ("Z", z_name(0))] {
            let card = joint.card(&pick)?;
            for i in 1..n {
                let name = format!("{group}{}", i + 1);
                if joint.card(&name)? != card {
                    return Err(Error::InvalidWorld(format!(
                        "cardinality of `{name}` differs within group {group}"
                    )));
                }
            }
        }
        if dag_p != Self::dag_p_for(n) {
            return Err(Error::InvalidWorld(
                "dag does not match the World-P structure".into(),
            ));
        }

        let world = TinyWorld {
            joint,
            dag_p,
            variational,
            n,
        };
        world.check_variational_shapes()?;
        world.check_factorization()?;
        Ok(world)
    }

    /// World-P dag: Φ → X_i; (X_i, Φ) → Y_i; (X^N, Y^N) → Θ; (X_i, Θ) → Z_i.
    pub fn dag_p_for(n: usize) -> DagSpec {
        let mut nodes = vec!["Phi".to_string()];
        let mut parents: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let data: Vec<String> = (0..n).map(x_name).chain((0..n).map(y_name)).collect();
        for i in 0..n {
            nodes.push(x_name(i));
            parents.insert(x_name(i), vec!["Phi".into()]);
        }
        for i in 0..n {
            nodes.push(y_name(i));
            parents.insert(y_name(i), vec![x_name(i), "Phi".into()]);
        }
        nodes.push("Theta".into());
        parents.insert("Theta".into(), data);
        for i in 0..n {
            nodes.push(z_name(i));
            parents.insert(z_name(i), vec![x_name(i), "Theta".into()]);
        }
        DagSpec::new(nodes, parents).expect("canonical dag is valid")
    }

    /// World-Q dag: Z_i → X_i, Z_i → Y_i, everything else parentless.
    pub fn dag_q_for(n: usize) -> DagSpec {
        let mut nodes = vec!["Phi".to_string()];
        let mut parents: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for i in 0..n {
            nodes.push(x_name(i));
            parents.insert(x_name(i), vec![z_name(i)]);
        }
        for i in 0..n {
            nodes.push(y_name(i));
            parents.insert(y_name(i), vec![z_name(i)]);
        }
        nodes.push("Theta".into());
        for i in 0..n {
            nodes.push(z_name(i));
        }
        DagSpec::new(nodes, parents).expect("canonical dag is valid")
    }

    pub fn joint(&self) -> &CategoricalTable {
        &self.joint
    }

    pub fn dag_p(&self) -> &DagSpec {
        &self.dag_p
    }

    pub fn variational(&self) -> &VariationalSet {
        &self.variational
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn with_variationals(mut self, variational: VariationalSet) -> Result<Self> {
        self.variational = variational;
        self.check_variational_shapes()?;
        Ok(self)
    }

    fn check_variational_shapes(&self) -> Result<()> {
        let v = &self.variational;
        let card_theta = self.joint.card("Theta")?;
        let card_x = self.joint.card("X1")?;
        let card_y = self.joint.card("Y1")?;
        let card_z = self.joint.card("Z1")?;
        let check_marginal = |t: &CategoricalTable, name: &str, card: usize| -> Result<()> {
            if t.vars().len() != 1 || t.vars()[0].name != name || t.vars()[0].card != card {
                return Err(Error::InvalidWorld(format!(
                    "variational marginal must be a table over ({name}, {card})"
                )));
            }
            Ok(())
        };
        check_marginal(&v.q_theta, "Theta", card_theta)?;
        check_marginal(&v.q_z, "Z", card_z)?;
        if v.q_x_given_z.n_given() != card_z || v.q_x_given_z.n_target() != card_x {
            return Err(Error::InvalidWorld("q(x|z) has the wrong shape".into()));
        }
        if v.q_y_given_z.n_given() != card_z || v.q_y_given_z.n_target() != card_y {
            return Err(Error::InvalidWorld("q(y|z) has the wrong shape".into()));
        }
        Ok(())
    }

    /// Verifies the joint factorizes along `dag_p`: every conditional
    /// recovered by joint/marginal division reproduces the joint entrywise.
    fn check_factorization(&self) -> Result<()> {
        let vars = self.joint.vars().to_vec();
        let name_of: Vec<&str> = vars.iter().map(|v| v.name.as_str()).collect();
        struct NodeFactor {
            with_parents: CategoricalTable, // node first, then parents
            parents_only: CategoricalTable,
            node_pos: usize,
            parent_pos: Vec<usize>,
        }
        let mut factors = Vec::new();
        for node in self.dag_p.nodes() {
            let parents = self.dag_p.parents_of(node);
            let mut keep: Vec<&str> = vec![node.as_str()];
            keep.extend(parents.iter().map(|s| s.as_str()));
            factors.push(NodeFactor {
                with_parents: self.joint.marginalize(&keep)?,
                parents_only: self
                    .joint
                    .marginalize(&keep[1..])?,
                node_pos: name_of.iter().position(|&x| x == node).unwrap(),
                parent_pos: parents
                    .iter()
                    .map(|p| name_of.iter().position(|&x| x == p.as_str()).unwrap())
                    .collect(),
            });
        }
        let mut assign = vec![0usize; vars.len()];
        for (lin, &p) in self.joint.probs().iter().enumerate() {
            let mut rem = lin;
            for k in (0..vars.len()).rev() {
                assign[k] = rem % vars[k].card;
                rem /= vars[k].card;
            }
            let mut rec = 1.0f64;
            for f in &factors {
                let parent_assign: Vec<usize> =
                    f.parent_pos.iter().map(|&k| assign[k]).collect();
                let pp = if parent_assign.is_empty() {
                    1.0
                } else {
                    f.parents_only.probs()[f.parents_only.index_of(&parent_assign)]
                };
                if pp == 0.0 {
                    rec = 0.0;
                    break;
                }
                let mut full = vec![assign[f.node_pos]];
                full.extend(&parent_assign);
                rec *= f.with_parents.probs()[f.with_parents.index_of(&full)] / pp;
            }
            if (p - rec).abs() > FACTORIZATION_TOL {
                return Err(Error::InvalidWorld(format!(
                    "joint does not factorize along the dag (entry {lin}: {p} vs {rec})"
                )));
            }
        }
        Ok(())
    }

    /// Variational set chosen as the true World-P marginals of sample 1
    /// (tight for exchangeable worlds).
    pub fn true_marginal_variationals(&self) -> Result<VariationalSet> {
        let p_theta = self.joint.marginalize(&["Theta"])?;
        let p_z = self.joint.marginalize(&["Z1"])?;
        let q_z = CategoricalTable::new(
            vec![Variable::new("Z", p_z.vars()[0].card)],
            p_z.probs().to_vec(),
        )?;
        let card_x = self.joint.card("X1")?;
        let card_y = self.joint.card("Y1")?;
        let card_z = self.joint.card("Z1")?;
        // p(x|z) rows; zero-mass z rows fall back to uniform
        let m_zx = self.joint.marginalize(&["Z1", "X1"])?;
        let m_zy = self.joint.marginalize(&["Z1", "Y1"])?;
        let pz = p_z.probs();
        let mut qx = vec![0.0; card_z * card_x];
        let mut qy = vec![0.0; card_z * card_y];
        for z in 0..card_z {
            for x in 0..card_x {
                qx[z * card_x + x] = if pz[z] > 0.0 {
                    m_zx.probs()[z * card_x + x] / pz[z]
                } else {
                    1.0 / card_x as f64
                };
            }
            for y in 0..card_y {
                qy[z * card_y + y] = if pz[z] > 0.0 {
                    m_zy.probs()[z * card_y + y] / pz[z]
                } else {
                    1.0 / card_y as f64
                };
            }
        }
        Ok(VariationalSet {
            q_theta: p_theta,
            q_z,
            q_x_given_z: ConditionalTable::from_rows(card_z, card_x, qx)?,
            q_y_given_z: ConditionalTable::from_rows(card_z, card_y, qy)?,
        })
    }

    /// Random exchangeable world: shared per-sample kernels and a Θ kernel
    /// that is symmetric under permuting the (x_i, y_i) pairs.
    pub fn random(seed: u64) -> TinyWorld {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let n = match rng.random_range(0..5) {
            0 | 1 => 1,
            2 | 3 => 2,
            _ => 3,
        };
        let card = |rng: &mut ChaCha20Rng| rng.random_range(2..=3usize);
        let (card_phi, card_x, card_y, card_theta, card_z) = (
            card(&mut rng),
            card(&mut rng),
            card(&mut rng),
            card(&mut rng),
            card(&mut rng),
        );
        Self::random_with(n, card_phi, card_x, card_y, card_theta, card_z, &mut rng)
    }

    pub fn random_with(
        n: usize,
        card_phi: usize,
        card_x: usize,
        card_y: usize,
        card_theta: usize,
        card_z: usize,
        rng: &mut ChaCha20Rng,
    ) -> TinyWorld {
        let dirichlet = |rng: &mut ChaCha20Rng, k: usize| -> Vec<f64> {
            let w: Vec<f64> = (0..k).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
            let total: f64 = w.iter().sum();
            w.into_iter().map(|x| x / total).collect()
        };
        let cond = |rng: &mut ChaCha20Rng, rows: usize, k: usize| -> ConditionalTable {
            let mut probs = Vec::with_capacity(rows * k);
            for _ in 0..rows {
                probs.extend(dirichlet(rng, k));
            }
            ConditionalTable::new(rows, k, probs).expect("rows are normalized")
        };

        let p_phi = dirichlet(rng, card_phi);
        let x_given_phi = cond(rng, card_phi, card_x);
        let y_given_x_phi = cond(rng, card_phi * card_x, card_y);
        let z_given_x_theta = cond(rng, card_x * card_theta, card_z);

        // Exchangeable Θ kernel: one row per multiset of (x_i, y_i) pairs.
        let data_rows = card_x.pow(n as u32) * card_y.pow(n as u32);
        let mut by_multiset: BTreeMap<Vec<(usize, usize)>, Vec<f64>> = BTreeMap::new();
        let mut theta_probs = Vec::with_capacity(data_rows * card_theta);
        for row in 0..data_rows {
            let mut rem = row;
            let mut ys = vec![0usize; n];
            for i in (0..n).rev() {
                ys[i] = rem % card_y;
                rem /= card_y;
            }
            let mut xs = vec![0usize; n];
            for i in (0..n).rev() {
                xs[i] = rem % card_x;
                rem /= card_x;
            }
            let mut key: Vec<(usize, usize)> =
                xs.iter().copied().zip(ys.iter().copied()).collect();
            key.sort_unstable();
            let row_probs = by_multiset
                .entry(key)
                .or_insert_with(|| dirichlet(rng, card_theta));
            theta_probs.extend(row_probs.iter().copied());
        }
        let theta_given_data =
            ConditionalTable::new(data_rows, card_theta, theta_probs).expect("normalized");

        let variational = VariationalSet {
            q_theta: CategoricalTable::new(
                vec![Variable::new("Theta", card_theta)],
                dirichlet(rng, card_theta),
            )
            .expect("normalized"),
            q_z: CategoricalTable::new(
                vec![Variable::new("Z", card_z)],
                dirichlet(rng, card_z),
            )
            .expect("normalized"),
            q_x_given_z: cond(rng, card_z, card_x),
            q_y_given_z: cond(rng, card_z, card_y),
        };

        TinyWorldKernels {
            p_phi,
            x_given_phi,
            y_given_x_phi,
            theta_given_data,
            z_given_x_theta,
        }
        .build(n, variational)
        .expect("randomly generated world is valid")
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::InvalidInput(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            joint: CategoricalTable,
            dag_p: DagSpec,
            variational: VariationalSet,
        }
        let raw: Raw = serde_json::from_str(s).map_err(|e| Error::InvalidInput(e.to_string()))?;
        TinyWorld::new(raw.joint, raw.dag_p, raw.variational)
    }

    // ---- functional expectations against the variational set ----

    fn data_names(&self) -> Vec<String> {
        (0..self.n).map(x_name).chain((0..self.n).map(y_name)).collect()
    }

    /// S = ⟨log p(θ|x^N,y^N)/q(θ)⟩.
    pub fn entropy_functional(&self) -> Result<f64> {
        let mut names = vec!["Theta".to_string()];
        names.extend(self.data_names());
        let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        let m_td = self.joint.marginalize(&refs)?;
        let m_d = self.joint.marginalize(&refs[1..])?;
        let g = m_d.size();
        let q = self.variational.q_theta.probs();
        let mut terms = Vec::new();
        for (idx, &p) in m_td.probs().iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let theta = idx / g;
            let pd = m_d.probs()[idx % g];
            if q[theta] == 0.0 {
                return Ok(f64::INFINITY);
            }
            terms.push(p * (p / (pd * q[theta])).ln());
        }
        Ok(kahan_sum(terms))
    }

    /// R_i = ⟨log p(z_i|x_i,θ)/q(z)⟩.
    pub fn rate_functional(&self, i: usize) -> Result<f64> {
        let z = z_name(i);
        let x = x_name(i);
        let m = self.joint.marginalize(&[&z, &x, "Theta"])?;
        let m_given = self.joint.marginalize(&[&x, "Theta"])?;
        let g = m_given.size();
        let q = self.variational.q_z.probs();
        let mut terms = Vec::new();
        for (idx, &p) in m.probs().iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let zi = idx / g;
            let pg = m_given.probs()[idx % g];
            if q[zi] == 0.0 {
                return Ok(f64::INFINITY);
            }
            terms.push(p * (p / (pg * q[zi])).ln());
        }
        Ok(kahan_sum(terms))
    }

    /// D_i = −⟨log q(x_i|z_i)⟩.
    pub fn distortion_functional(&self, i: usize) -> Result<f64> {
        let m = self.joint.marginalize(&[&z_name(i), &x_name(i)])?;
        let card_x = self.joint.card("X1")?;
        let mut terms = Vec::new();
        for (idx, &p) in m.probs().iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let q = self.variational.q_x_given_z.get(idx / card_x, idx % card_x);
            if q == 0.0 {
                return Ok(f64::INFINITY);
            }
            terms.push(-p * q.ln());
        }
        Ok(kahan_sum(terms))
    }

    /// C_i = −⟨log q(y_i|z_i)⟩.
    pub fn classification_functional(&self, i: usize) -> Result<f64> {
        let m = self.joint.marginalize(&[&z_name(i), &y_name(i)])?;
        let card_y = self.joint.card("Y1")?;
        let mut terms = Vec::new();
        for (idx, &p) in m.probs().iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let q = self.variational.q_y_given_z.get(idx / card_y, idx % card_y);
            if q == 0.0 {
                return Ok(f64::INFINITY);
            }
            terms.push(-p * q.ln());
        }
        Ok(kahan_sum(terms))
    }

    /// Conditional KL ⟨KL(p(·|z_i) ‖ q(·|z))⟩ for x (marginal=false selects y).
    fn conditional_kl_to_variational(&self, i: usize, for_x: bool) -> Result<f64> {
        let other = if for_x { x_name(i) } else { y_name(i) };
        let m = self.joint.marginalize(&[&z_name(i), &other])?;
        let m_z = self.joint.marginalize(&[&z_name(i)])?;
        let card_o = if for_x {
            self.joint.card("X1")?
        } else {
            self.joint.card("Y1")?
        };
        let mut terms = Vec::new();
        for (idx, &p) in m.probs().iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let zi = idx / card_o;
            let o = idx % card_o;
            let q = if for_x {
                self.variational.q_x_given_z.get(zi, o)
            } else {
                self.variational.q_y_given_z.get(zi, o)
            };
            if q == 0.0 {
                return Ok(f64::INFINITY);
            }
            terms.push(p * (p / (m_z.probs()[zi] * q)).ln());
        }
        Ok(kahan_sum(terms))
    }
}

/// 𝒥 = I_P − I_Q, both multi-informations measured in World P.
pub fn information_projection_gap(world: &TinyWorld, dag_q: &DagSpec) -> Result<f64> {
    let mut p_nodes: Vec<&String> = world.dag_p().nodes().iter().collect();
    let mut q_nodes: Vec<&String> = dag_q.nodes().iter().collect();
    p_nodes.sort();
    q_nodes.sort();
    if p_nodes != q_nodes {
        return Err(Error::ShapeMismatch(
            "dag Q is not over the world's node set".into(),
        ));
    }
    let i_p = world.joint().multi_information(world.dag_p())?;
    let i_q = world.joint().multi_information(dag_q)?;
    Ok(i_p - i_q)
}

/// One line of a [`BoundReport`]: identities carry their residual, bound
/// checks the margin (rhs-side slack).
#[derive(Debug, Clone, Serialize)]
pub struct BoundCheck {
    pub name: String,
    pub passed: bool,
    pub value: f64,
}

/// Everything `check_upper_bound` measures on a world.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub n: usize,
    pub s: f64,
    pub r: Vec<f64>,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    pub r_total: f64,
    pub c_total: f64,
    pub d_total: f64,
    /// 𝒥 = I_P − I_Q.
    pub projection: f64,
    pub h_xy_given_phi: Vec<f64>,
    /// S + R + C + D.
    pub lhs: f64,
    /// 𝒥 + Σ_i H(X_i, Y_i | Φ).
    pub rhs: f64,
    /// Collected KL of all variational approximations.
    pub gap: f64,
    /// lhs − rhs − gap; zero when the collected-KL identity holds.
    pub residual: f64,
    pub kl_theta: f64,
    pub kl_z: Vec<f64>,
    pub cond_kl_x: Vec<f64>,
    pub cond_kl_y: Vec<f64>,
    /// (I(Θ;X^N,Y^N), S − KL(p(θ)‖q(θ)))
    pub proof_s: (f64, f64),
    /// (I(X_i;Z_i), H(X_i) − D_i + ⟨KL(p(x|z)‖q(x|z))⟩)
    pub proof_d: Vec<(f64, f64)>,
    /// (I(Y_i;Z_i), H(Y_i) − C_i + ⟨KL(p(y|z)‖q(y|z))⟩)
    pub proof_c: Vec<(f64, f64)>,
    /// (I(Z_i;X_i,Θ), R_i − KL(p(z_i)‖q(z)))
    pub proof_r: Vec<(f64, f64)>,
    /// (R_i + D_i, H(X_i) + I(Z_i;Θ|X_i))
    pub pointwise: Vec<(f64, f64)>,
    /// (I(Z_i;Φ), R_i)
    pub dp_rate: Vec<(f64, f64)>,
    /// (I(Θ;Φ), S, Σ_i I(X_i,Y_i;Φ))
    pub dp_entropy: (f64, f64, f64),
}

impl BoundReport {
    /// Named pass/fail lines: identities at |residual| ≤ tol, inequalities at
    /// margin ≥ −tol.
    pub fn checks(&self, tol: f64) -> Vec<BoundCheck> {
        let mut out = Vec::new();
        let mut identity = |name: String, lhs: f64, rhs: f64| {
            let residual = lhs - rhs;
            out.push(BoundCheck {
                name,
                passed: residual.abs() <= tol,
                value: residual,
            });
        };
        identity("upper_bound_collected_kl".into(), self.lhs - self.rhs, self.gap);
        identity("proof_s".into(), self.proof_s.0, self.proof_s.1);
        for (i, &(l, r)) in self.proof_d.iter().enumerate() {
            identity(format!("proof_d_{}", i + 1), l, r);
        }
        for (i, &(l, r)) in self.proof_c.iter().enumerate() {
            identity(format!("proof_c_{}", i + 1), l, r);
        }
        for (i, &(l, r)) in self.proof_r.iter().enumerate() {
            identity(format!("proof_r_{}", i + 1), l, r);
        }

        let mut bound = |name: String, margin: f64| {
            out.push(BoundCheck {
                name,
                passed: margin >= -tol,
                value: margin,
            });
        };
        bound("gap_nonneg".into(), self.gap);
        for (i, &(l, r)) in self.pointwise.iter().enumerate() {
            bound(format!("pointwise_rd_{}", i + 1), l - r);
        }
        for (i, &(l, r)) in self.dp_rate.iter().enumerate() {
            bound(format!("dp_rate_{}", i + 1), r - l);
        }
        bound("dp_entropy_s".into(), self.dp_entropy.1 - self.dp_entropy.0);
        bound(
            "dp_entropy_data".into(),
            self.dp_entropy.2 - self.dp_entropy.0,
        );
        bound("polytope_s".into(), self.s);
        bound("polytope_r".into(), self.r_total);
        bound("polytope_c".into(), self.c_total);
        bound("polytope_d".into(), self.d_total);
        bound(
            "polytope_sum".into(),
            self.lhs - self.h_xy_given_phi.iter().sum::<f64>(),
        );
        out
    }

    pub fn all_pass(&self, tol: f64) -> bool {
        self.checks(tol).iter().all(|c| c.passed)
    }
}

/// Evaluates the variational upper bound, the collected-KL identity, the
/// per-bound identities, the pointwise rate-distortion bound and the
/// data-processing bounds on one world.
pub fn check_upper_bound(world: &TinyWorld) -> Result<BoundReport> {
    let n = world.n();
    let joint = world.joint();
    let v = world.variational();

    let s = world.entropy_functional()?;
    let mut r = Vec::with_capacity(n);
    let mut c = Vec::with_capacity(n);
    let mut d = Vec::with_capacity(n);
    for i in 0..n {
        r.push(world.rate_functional(i)?);
        c.push(world.classification_functional(i)?);
        d.push(world.distortion_functional(i)?);
    }
    let r_total = kahan_sum(r.iter().copied());
    let c_total = kahan_sum(c.iter().copied());
    let d_total = kahan_sum(d.iter().copied());

    let projection = information_projection_gap(world, &TinyWorld::dag_q_for(n))?;

    let mut h_xy_given_phi = Vec::with_capacity(n);
    for i in 0..n {
        h_xy_given_phi.push(
            joint.conditional_entropy(&[&x_name(i), &y_name(i)], &["Phi"])?,
        );
    }

    let kl_theta = {
        let p_theta = joint.marginalize(&["Theta"])?;
        kl_vec(p_theta.probs(), v.q_theta.probs())
    };
    let mut kl_z = Vec::with_capacity(n);
    let mut cond_kl_x = Vec::with_capacity(n);
    let mut cond_kl_y = Vec::with_capacity(n);
    for i in 0..n {
        let p_z = joint.marginalize(&[&z_name(i)])?;
        kl_z.push(kl_vec(p_z.probs(), v.q_z.probs()));
        cond_kl_x.push(world.conditional_kl_to_variational(i, true)?);
        cond_kl_y.push(world.conditional_kl_to_variational(i, false)?);
    }

    let lhs = s + r_total + c_total + d_total;
    let rhs = projection + kahan_sum(h_xy_given_phi.iter().copied());
    let gap = kl_theta
        + kahan_sum(
            (0..n).map(|i| cond_kl_x[i] + cond_kl_y[i] + kl_z[i]),
        );

    let data_names: Vec<String> = (0..n).map(x_name).chain((0..n).map(y_name)).collect();
    let data_refs: Vec<&str> = data_names.iter().map(|s| s.as_str()).collect();
    let proof_s = (
        joint.mutual_information(&["Theta"], &data_refs)?,
        s - kl_theta,
    );
    let mut proof_d = Vec::with_capacity(n);
    let mut proof_c = Vec::with_capacity(n);
    let mut proof_r = Vec::with_capacity(n);
    let mut pointwise = Vec::with_capacity(n);
    let mut dp_rate = Vec::with_capacity(n);
    let mut sum_i_xy_phi = 0.0;
    for i in 0..n {
        let (xn, yn, zn) = (x_name(i), y_name(i), z_name(i));
        proof_d.push((
            joint.mutual_information(&[&xn], &[&zn])?,
            joint.entropy(&[&xn])? - d[i] + cond_kl_x[i],
        ));
        proof_c.push((
            joint.mutual_information(&[&yn], &[&zn])?,
            joint.entropy(&[&yn])? - c[i] + cond_kl_y[i],
        ));
        proof_r.push((
            joint.mutual_information(&[&zn], &[&xn, "Theta"])?,
            r[i] - kl_z[i],
        ));
        pointwise.push((
            r[i] + d[i],
            joint.entropy(&[&xn])? + joint.conditional_mi(&[&zn], &["Theta"], &[&xn])?,
        ));
        dp_rate.push((joint.mutual_information(&[&zn], &["Phi"])?, r[i]));
        sum_i_xy_phi += joint.mutual_information(&[&xn, &yn], &["Phi"])?;
    }
    let dp_entropy = (
        joint.mutual_information(&["Theta"], &["Phi"])?,
        s,
        sum_i_xy_phi,
    );

    Ok(BoundReport {
        n,
        s,
        r,
        c,
        d,
        r_total,
        c_total,
        d_total,
        projection,
        h_xy_given_phi,
        lhs,
        rhs,
        gap,
        residual: lhs - rhs - gap,
        kl_theta,
        kl_z,
        cond_kl_x,
        cond_kl_y,
        proof_s,
        proof_d,
        proof_c,
        proof_r,
        pointwise,
        dp_rate,
        dp_entropy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn projection_gap_vanishes_when_dags_match() {
        let world = TinyWorld::random(3);
        let gap = information_projection_gap(&world, world.dag_p()).unwrap();
        assert_abs_diff_eq!(gap, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn projection_gap_matches_term_expansion() {
        // brute-force each mutual-information term of the expansion
        for seed in 0..8u64 {
            let world = TinyWorld::random(seed);
            let n = world.n();
            let joint = world.joint();
            let gap =
                information_projection_gap(&world, &TinyWorld::dag_q_for(n)).unwrap();
            let data: Vec<String> =
                (0..n).map(x_name).chain((0..n).map(y_name)).collect();
            let data_refs: Vec<&str> = data.iter().map(|s| s.as_str()).collect();
            let mut expansion = joint
                .mutual_information(&["Theta"], &data_refs)
                .unwrap();
            for i in 0..n {
                let (xn, yn, zn) = (x_name(i), y_name(i), z_name(i));
                expansion += joint.mutual_information(&[&xn], &["Phi"]).unwrap();
                expansion += joint
                    .mutual_information(&[&yn], &[&xn, "Phi"])
                    .unwrap();
                expansion += joint
                    .mutual_information(&[&zn], &[&xn, "Theta"])
                    .unwrap();
                expansion -= joint.mutual_information(&[&xn], &[&zn]).unwrap();
                expansion -= joint.mutual_information(&[&yn], &[&zn]).unwrap();
            }
            assert_abs_diff_eq!(gap, expansion, epsilon = 1e-12);
        }
    }

    #[test]
    fn projection_gap_with_constant_z_drops_z_terms() {
        // Z independent of everything: the expansion reduces to the data terms.
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(77);
        let world = TinyWorld::random_with(2, 2, 2, 2, 2, 2, &mut rng);
        let n = world.n();
        // rebuild with a constant z kernel
        let card_x = world.joint().card("X1").unwrap();
        let card_theta = world.joint().card("Theta").unwrap();
        let z_rows = card_x * card_theta;
        let z_kernel =
            ConditionalTable::new(z_rows, 2, [0.25, 0.75].repeat(z_rows)).unwrap();
        let m_phi = world.joint().marginalize(&["Phi"]).unwrap();

        // recover the remaining kernels from the joint by conditioning
        let m_xphi = world.joint().marginalize(&["Phi", "X1"]).unwrap();
        let mut x_rows = vec![0.0; 2 * card_x];
        for phi in 0..2 {
            for x in 0..card_x {
                x_rows[phi * card_x + x] =
                    m_xphi.probs()[phi * card_x + x] / m_phi.probs()[phi];
            }
        }
        let m_phixy = world.joint().marginalize(&["Phi", "X1", "Y1"]).unwrap();
        let mut y_rows = vec![0.0; 2 * card_x * 2];
        for phi in 0..2 {
            for x in 0..card_x {
                for y in 0..2 {
                    y_rows[(phi * card_x + x) * 2 + y] = m_phixy.probs()
                        [phi * card_x * 2 + x * 2 + y]
                        / m_xphi.probs()[phi * card_x + x];
                }
            }
        }
        let data_vars = ["X1", "X2", "Y1", "Y2"];
        let mut td_names: Vec<&str> = data_vars.to_vec();
        td_names.push("Theta");
        let m_data_theta = world.joint().marginalize(&td_names).unwrap();
        let m_data = world.joint().marginalize(&data_vars).unwrap();
        let rows = m_data.size();
        let mut t_rows = vec![0.0; rows * 2];
        for r_i in 0..rows {
            for t in 0..2 {
                t_rows[r_i * 2 + t] =
                    m_data_theta.probs()[r_i * 2 + t] / m_data.probs()[r_i];
            }
        }
        let kernels = TinyWorldKernels {
            p_phi: m_phi.probs().to_vec(),
            x_given_phi: ConditionalTable::from_rows(2, card_x, x_rows).unwrap(),
            y_given_x_phi: ConditionalTable::from_rows(2 * card_x, 2, y_rows).unwrap(),
            theta_given_data: ConditionalTable::from_rows(rows, 2, t_rows).unwrap(),
            z_given_x_theta: z_kernel,
        };
        let world = kernels.build(n, world.variational().clone()).unwrap();
        let joint = world.joint();
        let gap = information_projection_gap(&world, &TinyWorld::dag_q_for(n)).unwrap();
        let mut reduced = joint
            .mutual_information(&["Theta"], &data_vars)
            .unwrap();
        for i in 0..n {
            let (xn, yn) = (x_name(i), y_name(i));
            reduced += joint.mutual_information(&[&xn], &["Phi"]).unwrap();
            reduced += joint.mutual_information(&[&yn], &[&xn, "Phi"]).unwrap();
        }
        assert_abs_diff_eq!(gap, reduced, epsilon = 1e-12);
    }

    #[test]
    fn true_marginal_variationals_make_the_bound_tight() {
        for seed in [1u64, 9, 23] {
            let world = TinyWorld::random(seed);
            let tight = world.true_marginal_variationals().unwrap();
            let world = world.with_variationals(tight).unwrap();
            let report = check_upper_bound(&world).unwrap();
            assert_abs_diff_eq!(report.gap, 0.0, epsilon = 1e-9);
            assert_abs_diff_eq!(report.lhs, report.rhs, epsilon = 1e-9);
        }
    }

    #[test]
    fn perturbing_the_prior_moves_the_gap_by_the_theta_kl_change() {
        let world = TinyWorld::random(5);
        let tight = world.true_marginal_variationals().unwrap();
        let world = world.with_variationals(tight.clone()).unwrap();
        let before = check_upper_bound(&world).unwrap();

        let card_theta = world.joint().card("Theta").unwrap();
        let mut perturbed = tight.clone();
        let mut probs = perturbed.q_theta.probs().to_vec();
        probs[0] += 0.11;
        let total: f64 = probs.iter().sum();
        for p in &mut probs {
            *p /= total;
        }
        perturbed.q_theta = CategoricalTable::new(
            vec![Variable::new("Theta", card_theta)],
            probs,
        )
        .unwrap();
        let world = world.with_variationals(perturbed).unwrap();
        let after = check_upper_bound(&world).unwrap();

        // both sides routed independently: gap via lhs − rhs, KL directly
        let gap_change = (after.lhs - after.rhs) - (before.lhs - before.rhs);
        let kl_change = after.kl_theta - before.kl_theta;
        assert_abs_diff_eq!(gap_change, kl_change, epsilon = 1e-9);
    }

    #[test]
    fn random_worlds_satisfy_every_check() {
        for seed in 0..10u64 {
            let world = TinyWorld::random(seed);
            let report = check_upper_bound(&world).unwrap();
            for check in report.checks(1e-9) {
                assert!(
                    check.passed,
                    "seed {seed}: {} failed with value {}",
                    check.name, check.value
                );
            }
        }
    }

    #[test]
    fn world_round_trips_through_json() {
        let world = TinyWorld::random(11);
        let json = world.to_json().unwrap();
        let back = TinyWorld::from_json(&json).unwrap();
        assert_eq!(world.joint().probs(), back.joint().probs());
        assert_eq!(world.dag_p(), back.dag_p());
    }

    #[test]
    fn mismatched_dag_node_set_errors() {
        let world = TinyWorld::random(2);
        let wrong = TinyWorld::dag_q_for(world.n() + 1);
        assert!(information_projection_gap(&world, &wrong).is_err());
    }
}
