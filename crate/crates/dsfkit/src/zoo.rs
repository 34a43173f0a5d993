//! Constructors for the named reference functions: SCMMs, feature-based
//! functions, graph-based objectives, coverage/divergence objectives, matroid
//! ranks, the f̂_k family, and the desk-scale presets used by the CLI.
//!
//! Integer-valued functions (matroid ranks, cardinality truncations) are
//! returned as integral [`SetFunctionHandle`]s evaluating in exact integer
//! arithmetic; everything else is a [`DsfModel`] or float handle.

use crate::concave::{ConcaveUnit, UnitKind};
use crate::dsf::{DsfModel, DsfNode, NodeId};
use crate::error::{DsfError, Result};
use crate::handle::SetFunctionHandle;
use crate::set::{GroundSet, ModularFunction, Subset};
use std::sync::Arc;

// ---------------------------------------------------------------------------
// SCMMs and feature-based functions
// ---------------------------------------------------------------------------

/// Builds the 1-layer model `Σᵢ wᵢ φᵢ(mᵢ(A)) + m±(A)` (a sum of concave over
/// nonnegative modular functions).
pub fn make_scmm(
    terms: &[(ConcaveUnit<f64>, ModularFunction, f64)],
    m_pm: &ModularFunction,
) -> Result<DsfModel<f64>> {
    let ground = m_pm.ground().clone();
    let n = ground.size();
    let mut nodes = Vec::with_capacity(terms.len() + 1);
    let mut root_edges = Vec::with_capacity(terms.len());
    for (i, (unit, m, w)) in terms.iter().enumerate() {
        if !m.is_nonneg() || m.weights().iter().any(|&x| x < 0.0) {
            return Err(DsfError::InvalidArgument(format!("term {i} modular function must be nonneg")));
        }
        if !(*w >= 0.0) {
            return Err(DsfError::InvalidArgument(format!("term {i} weight must be >= 0, got {w}")));
        }
        let parents: Vec<(usize, f64)> = (0..n).map(|e| (e, m.weights()[e])).collect();
        nodes.push(DsfNode::leaf(unit.clone(), parents).at_layer(1));
        root_edges.push((i, *w));
    }
    let root_id = nodes.len();
    nodes.push(DsfNode::inner(ConcaveUnit::identity(), root_edges).at_layer(2));
    DsfModel::new(&ground, nodes, root_id, m_pm.weights().to_vec())
}

/// A feature matrix: per-feature nonneg scores over the ground set, a
/// per-feature weight, and a per-feature concave unit.
#[derive(Clone, Debug)]
pub struct FeatureMatrix {
    ground: Arc<GroundSet>,
    /// scores[u][v] = m_u(v) ≥ 0
    scores: Vec<Vec<f64>>,
    weights: Vec<f64>,
    units: Vec<ConcaveUnit<f64>>,
}

impl FeatureMatrix {
    /// Validates and builds a feature matrix.
    pub fn new(
        ground: &Arc<GroundSet>,
        scores: Vec<Vec<f64>>,
        weights: Vec<f64>,
        units: Vec<ConcaveUnit<f64>>,
    ) -> Result<Self> {
        let m = scores.len();
        if weights.len() != m || units.len() != m {
            return Err(DsfError::InvalidArgument(
                "scores, weights, and units must have one entry per feature".into(),
            ));
        }
        for (u, row) in scores.iter().enumerate() {
            if row.len() != ground.size() {
                return Err(DsfError::InvalidArgument(format!("feature {u} has wrong score length")));
            }
            if row.iter().any(|&s| !(s >= 0.0)) {
                return Err(DsfError::InvalidArgument(format!("feature {u} has a negative score")));
            }
        }
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(DsfError::InvalidArgument("feature weights must be >= 0".into()));
        }
        Ok(FeatureMatrix { ground: Arc::clone(ground), scores, weights, units })
    }

    /// Uniform helper: same unit and unit weight for every feature.
    pub fn uniform(
        ground: &Arc<GroundSet>,
        scores: Vec<Vec<f64>>,
        unit: ConcaveUnit<f64>,
    ) -> Result<Self> {
        let m = scores.len();
        Self::new(ground, scores, vec![1.0; m], vec![unit; m])
    }

    /// The ground set.
    pub fn ground(&self) -> &Arc<GroundSet> {
        &self.ground
    }
    /// Number of features.
    pub fn num_features(&self) -> usize {
        self.scores.len()
    }
    /// Score row of feature u.
    pub fn scores(&self, u: usize) -> &[f64] {
        &self.scores[u]
    }
}

/// Builds the 1-layer feature-based model `f(X) = Σ_u w_u φ_u(m_u(X)) + m±(X)`.
pub fn make_feature_based(f: &FeatureMatrix, m_pm: &ModularFunction) -> Result<DsfModel<f64>> {
    let terms: Vec<(ConcaveUnit<f64>, ModularFunction, f64)> = (0..f.num_features())
        .map(|u| {
            let m = ModularFunction::new(&f.ground, f.scores[u].clone(), true)?;
            Ok((f.units[u].clone(), m, f.weights[u]))
        })
        .collect::<Result<_>>()?;
    make_scmm(&terms, m_pm)
}

// ---------------------------------------------------------------------------
// Matroid ranks
// ---------------------------------------------------------------------------

/// A partition of the ground set with per-block caps.
#[derive(Clone, Debug)]
pub struct PartitionSpec {
    ground: Arc<GroundSet>,
    blocks: Vec<Vec<usize>>,
    caps: Vec<i64>,
}

impl PartitionSpec {
    /// Validates that the blocks partition the ground set.
    pub fn new(ground: &Arc<GroundSet>, blocks: Vec<Vec<usize>>, caps: Vec<i64>) -> Result<Self> {
        if blocks.len() != caps.len() {
            return Err(DsfError::InvalidArgument("one cap per block required".into()));
        }
        if caps.iter().any(|&k| k < 0) {
            return Err(DsfError::InvalidArgument("caps must be >= 0".into()));
        }
        let mut seen = vec![false; ground.size()];
        for b in &blocks {
            for &e in b {
                if e >= ground.size() || seen[e] {
                    return Err(DsfError::InvalidArgument("blocks must partition the ground set".into()));
                }
                seen[e] = true;
            }
        }
        if !seen.iter().all(|&s| s) {
            return Err(DsfError::InvalidArgument("blocks must cover the ground set".into()));
        }
        Ok(PartitionSpec { ground: Arc::clone(ground), blocks, caps })
    }
}

/// Partition matroid rank `r(X) = Σᵢ min(|X ∩ Vᵢ|, kᵢ)` (exact integers).
pub fn make_partition_rank(p: &PartitionSpec) -> SetFunctionHandle {
    let blocks = p.blocks.clone();
    let caps = p.caps.clone();
    SetFunctionHandle::new_integral(&p.ground, "partition_rank", move |a| {
        blocks
            .iter()
            .zip(&caps)
            .map(|(b, &k)| (b.iter().filter(|&&e| a.contains(e)).count() as i64).min(k))
            .sum()
    })
}

/// A laminar family organized as a tree with per-set caps.
#[derive(Clone, Debug)]
pub struct LaminarTree {
    ground: Arc<GroundSet>,
    elements: Vec<Vec<usize>>,
    caps: Vec<i64>,
    children: Vec<Vec<usize>>,
    root: usize,
}

impl LaminarTree {
    /// Builds a laminar tree from per-node element sets, caps, and child
    /// lists. The root must cover the whole ground set; each child's element
    /// set must be contained in its parent's, and siblings must be disjoint.
    pub fn new(
        ground: &Arc<GroundSet>,
        elements: Vec<Vec<usize>>,
        caps: Vec<i64>,
        children: Vec<Vec<usize>>,
        root: usize,
    ) -> Result<Self> {
        let n = elements.len();
        if caps.len() != n || children.len() != n || root >= n {
            return Err(DsfError::InvalidArgument("inconsistent laminar tree arrays".into()));
        }
        if caps.iter().any(|&k| k < 0) {
            return Err(DsfError::InvalidArgument("caps must be >= 0".into()));
        }
        let as_set = |ids: &[usize]| -> Result<Subset> { Subset::from_ids(ground, ids) };
        let root_set = as_set(&elements[root])?;
        if root_set != Subset::full(ground) {
            return Err(DsfError::InvalidArgument("root must cover the ground set".into()));
        }
        for f in 0..n {
            let fs = as_set(&elements[f])?;
            for (i, &c1) in children[f].iter().enumerate() {
                if c1 >= n {
                    return Err(DsfError::InvalidArgument("child index out of range".into()));
                }
                let c1s = as_set(&elements[c1])?;
                if !c1s.is_subset_of(&fs) {
                    return Err(DsfError::InvalidArgument("child set not contained in parent".into()));
                }
                for &c2 in &children[f][i + 1..] {
                    if !c1s.is_disjoint(&as_set(&elements[c2])?) {
                        return Err(DsfError::InvalidArgument("sibling sets overlap".into()));
                    }
                }
            }
        }
        Ok(LaminarTree { ground: Arc::clone(ground), elements, caps, children, root })
    }

    fn direct_elements(&self, f: usize) -> Vec<usize> {
        let covered: Vec<bool> = {
            let mut c = vec![false; self.ground.size()];
            for &ch in &self.children[f] {
                for &e in &self.elements[ch] {
                    c[e] = true;
                }
            }
            c
        };
        self.elements[f].iter().copied().filter(|&e| !covered[e]).collect()
    }

    fn rank(&self, f: usize, a: &Subset) -> i64 {
        // r_F(A) = min(Σ_{F'} r_{F'}(A ∩ F') + |A ∩ (F \ ∪F')|, k_F)
        let mut total: i64 = self.direct_elements(f).iter().filter(|&&e| a.contains(e)).count() as i64;
        for &ch in &self.children[f] {
            let sub = Subset::from_ids(&self.ground, &self.elements[ch]).unwrap();
            total += self.rank(ch, &a.intersection(&sub));
        }
        total.min(self.caps[f])
    }
}

/// Builds both forms of the laminar matroid rank: the tree-structured model
/// with truncation units, and the recursive exact-integer oracle. The two
/// agree on every subset.
pub fn make_laminar_rank(t: &LaminarTree) -> Result<(DsfModel<f64>, SetFunctionHandle)> {
    // model: one truncation node per tree node, children edges weight 1
    let n_tree = t.elements.len();
    let mut order = Vec::new(); // children before parents
    fn visit(t: &LaminarTree, f: usize, order: &mut Vec<usize>) {
        for &c in &t.children[f] {
            visit(t, c, order);
        }
        order.push(f);
    }
    visit(t, t.root, &mut order);
    if order.len() != n_tree {
        return Err(DsfError::InvalidArgument("laminar tree has unreachable nodes".into()));
    }
    let mut node_of = vec![usize::MAX; n_tree];
    let mut nodes: Vec<DsfNode<f64>> = Vec::with_capacity(n_tree);
    let mut depth_of = vec![0usize; n_tree];
    for &f in &order {
        let unit = ConcaveUnit::truncate(t.caps[f] as f64)?;
        let parents_ground: Vec<(usize, f64)> = t.direct_elements(f).iter().map(|&e| (e, 1.0)).collect();
        let parents_internal: Vec<(NodeId, f64)> =
            t.children[f].iter().map(|&c| (node_of[c], 1.0)).collect();
        depth_of[f] = 1 + t.children[f].iter().map(|&c| depth_of[c]).max().unwrap_or(0);
        node_of[f] = nodes.len();
        nodes.push(
            DsfNode { unit, parents_internal, parents_ground, layer: Some(depth_of[f]) },
        );
    }
    let model = DsfModel::new(&t.ground, nodes, node_of[t.root], vec![0.0; t.ground.size()])?;
    let t2 = t.clone();
    let oracle = SetFunctionHandle::new_integral(&t.ground, "laminar_rank", move |a| {
        t2.rank(t2.root, a)
    });
    Ok((model, oracle))
}

/// Truncated partition-style rank `f_R(A) = min(|A|, a + |A ∩ R̄|, b)`.
pub fn make_truncated_partition_rank(r: &Subset, a: i64, b: i64) -> Result<SetFunctionHandle> {
    if a >= b {
        return Err(DsfError::InvalidArgument(format!("requires a < b, got a={a}, b={b}")));
    }
    if a < 0 || a > r.len() as i64 {
        return Err(DsfError::InvalidArgument(format!("requires 0 <= a <= |R|, got a={a}")));
    }
    let r = r.clone();
    let ground = r.ground().clone();
    SetFunctionHandle::new_integral(&ground, "truncated_partition_rank", move |x| {
        let card = x.len() as i64;
        let outside = x.difference(&r).len() as i64;
        card.min(a + outside).min(b)
    })
    .pipe_ok()
}

// small helper so handle construction above can stay expression-shaped
trait PipeOk: Sized {
    fn pipe_ok(self) -> Result<Self> {
        Ok(self)
    }
}
impl PipeOk for SetFunctionHandle {}

/// Graphic matroid rank of an edge subset: touched vertices minus connected
/// components of the picked subgraph (size of a maximum spanning forest).
pub fn cycle_matroid_rank(edges: &[(usize, usize)], a: &Subset) -> Result<i64> {
    if a.ground().size() != edges.len() {
        return Err(DsfError::InvalidArgument(
            "edge subset ground must have one element per edge".into(),
        ));
    }
    let n_vertices = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
    let mut parent: Vec<usize> = (0..n_vertices).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut rank = 0i64;
    for e in a.iter() {
        let (u, v) = edges[e];
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        if ru != rv {
            parent[ru] = rv;
            rank += 1;
        }
    }
    Ok(rank)
}

/// The complete graph K4: six edges over four vertices, labeled by their endpoints.
pub fn k4_edges() -> (Arc<GroundSet>, Vec<(usize, usize)>) {
    let edges = vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    let names = ["ab", "ac", "ad", "bc", "bd", "cd"];
    (GroundSet::new(names).unwrap(), edges)
}

/// Cycle-matroid rank of K4 as an exact-integer handle over the six edges.
pub fn k4_rank_handle() -> SetFunctionHandle {
    let (ground, edges) = k4_edges();
    SetFunctionHandle::new_integral(&ground, "k4_rank", move |a| {
        cycle_matroid_rank(&edges, a).expect("K4 edges fixed")
    })
}

// ---------------------------------------------------------------------------
// The f̂_k family
// ---------------------------------------------------------------------------

/// The recursive family member f̂_k over 3^k elements as a k-layer tree model:
/// f̂₁(X) = ½·min(|X|, 2), f̂_k(X) = ½·min(Σᵢ f̂_{k−1}(X ∩ V_{ki}), 2).
pub fn make_fk_hat(k: usize) -> Result<DsfModel<f64>> {
    if k == 0 || k > 4 {
        return Err(DsfError::InvalidArgument(format!("k must be in 1..=4, got {k}")));
    }
    let n = 3usize.pow(k as u32);
    let ground = GroundSet::with_size(n)?;
    // ½·min(x, 2) as a piecewise-linear unit
    let half_trunc = || {
        ConcaveUnit::new(UnitKind::PiecewiseLinear { breakpoints: vec![2.0], slopes: vec![0.5, 0.0] })
            .expect("valid unit")
    };
    let mut nodes: Vec<DsfNode<f64>> = Vec::new();
    fn build(
        nodes: &mut Vec<DsfNode<f64>>,
        half_trunc: &dyn Fn() -> ConcaveUnit<f64>,
        level: usize,
        offset: usize,
    ) -> NodeId {
        if level == 1 {
            let node = DsfNode::leaf(half_trunc(), (offset..offset + 3).map(|e| (e, 1.0)).collect())
                .at_layer(1);
            nodes.push(node);
            return nodes.len() - 1;
        }
        let span = 3usize.pow(level as u32 - 1);
        let kids: Vec<(NodeId, f64)> = (0..3)
            .map(|i| (build(nodes, half_trunc, level - 1, offset + i * span), 1.0))
            .collect();
        nodes.push(DsfNode::inner(half_trunc(), kids).at_layer(level));
        nodes.len() - 1
    }
    let root = build(&mut nodes, &half_trunc, k, 0);
    DsfModel::new(&ground, nodes, root, vec![0.0; n])
}

/// Exact oracle for f̂_k (values are multiples of 2^{−k}, exact in floats).
pub fn fk_hat_handle(k: usize) -> Result<SetFunctionHandle> {
    if k == 0 || k > 4 {
        return Err(DsfError::InvalidArgument(format!("k must be in 1..=4, got {k}")));
    }
    let n = 3usize.pow(k as u32);
    let ground = GroundSet::with_size(n)?;
    // integer form F_k = 2^k f̂_k: F_1 = min(|X|,2), F_k = min(Σ F_{k-1}, 2^k)
    fn f_int(k: usize, a: &Subset, offset: usize) -> i64 {
        if k == 1 {
            let count = (offset..offset + 3).filter(|&e| a.contains(e)).count() as i64;
            return count.min(2);
        }
        let span = 3usize.pow(k as u32 - 1);
        let total: i64 = (0..3).map(|i| f_int(k - 1, a, offset + i * span)).sum();
        total.min(1 << k)
    }
    let scale = (1u64 << k) as f64;
    Ok(SetFunctionHandle::new(&ground, format!("fk_hat_{k}"), move |a| {
        f_int(k, a, 0) as f64 / scale
    }))
}

// ---------------------------------------------------------------------------
// Graph-based functions
// ---------------------------------------------------------------------------

/// Facility location `f(X) = Σ_u max_{x∈X} w[x][u]` (exact max oracle).
pub fn facility_location(ground: &Arc<GroundSet>, w: &[Vec<f64>]) -> Result<SetFunctionHandle> {
    check_matrix(ground, w)?;
    let w = w.to_vec();
    Ok(SetFunctionHandle::new(ground, "facility_location", move |a| {
        let m = w[0].len();
        (0..m)
            .map(|u| a.iter().map(|v| w[v][u]).fold(0.0f64, f64::max))
            .sum()
    }))
}

/// Softmax facility location: the SCMM `g_γ(A) = Σ_u (1/γ)·log(1 + Σ_{a∈A}(e^{γ w[a][u]} − 1))`.
///
/// Agrees with the plain log-sum-exp softmax on singletons and the empty set,
/// converges to facility location as γ grows, and is exactly normalized.
pub fn softmax_facility(ground: &Arc<GroundSet>, gamma: f64, w: &[Vec<f64>]) -> Result<DsfModel<f64>> {
    if !(gamma > 0.0) {
        return Err(DsfError::InvalidArgument(format!("gamma must be > 0, got {gamma}")));
    }
    check_matrix(ground, w)?;
    let m = w[0].len();
    let mut terms = Vec::with_capacity(m);
    for u in 0..m {
        let weights: Vec<f64> = (0..ground.size()).map(|v| (gamma * w[v][u]).exp_m1() / gamma).collect();
        let modular = ModularFunction::new(ground, weights, true)?;
        terms.push((ConcaveUnit::log_gamma(1.0 / gamma)?, modular, 1.0));
    }
    make_scmm(&terms, &ModularFunction::zero(ground))
}

/// Classic (non-monotone) graph cut `f(X) = Σ_{x∈X, y∉X} w(x,y)`.
pub fn graph_cut(ground: &Arc<GroundSet>, edges: &[(usize, usize, f64)]) -> Result<SetFunctionHandle> {
    check_edges(ground, edges)?;
    let edges = edges.to_vec();
    Ok(SetFunctionHandle::new(ground, "graph_cut", move |a| {
        edges
            .iter()
            .filter(|&&(x, y, _)| a.contains(x) != a.contains(y))
            .map(|&(_, _, w)| w)
            .sum()
    }))
}

/// Monotone graph cut `f(X) = Σ_{x∈X} Σ_y w(x,y)` (a modular function).
pub fn monotone_cut(ground: &Arc<GroundSet>, edges: &[(usize, usize, f64)]) -> Result<SetFunctionHandle> {
    check_edges(ground, edges)?;
    let mut degree = vec![0.0; ground.size()];
    for &(x, y, w) in edges {
        degree[x] += w;
        degree[y] += w;
    }
    Ok(SetFunctionHandle::new(ground, "monotone_cut", move |a| {
        a.iter().map(|v| degree[v]).sum()
    }))
}

/// Saturated graph cut `f(X) = Σ_v min(C_v(X), α·C_v(V))` with
/// `C_v(X) = Σ_{x∈X} w(v,x)`, as an SCMM of truncation units.
pub fn saturated_cut(
    ground: &Arc<GroundSet>,
    edges: &[(usize, usize, f64)],
    alpha: f64,
) -> Result<DsfModel<f64>> {
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(DsfError::InvalidArgument(format!("alpha must be in (0,1), got {alpha}")));
    }
    check_edges(ground, edges)?;
    let n = ground.size();
    let mut w = vec![vec![0.0; n]; n];
    for &(x, y, wt) in edges {
        w[x][y] += wt;
        w[y][x] += wt;
    }
    let mut terms = Vec::with_capacity(n);
    for v in 0..n {
        let row = w[v].clone();
        let cap = alpha * row.iter().sum::<f64>();
        let modular = ModularFunction::new(ground, row, true)?;
        terms.push((ConcaveUnit::truncate(cap)?, modular, 1.0));
    }
    make_scmm(&terms, &ModularFunction::zero(ground))
}

/// Bipartite neighborhood function `f(X) = Σ_u w(u)·min(|X ∩ δu|, 1)`,
/// where δu lists the left-side neighbors of right-side vertex u.
pub fn bipartite_neighborhood(
    ground: &Arc<GroundSet>,
    neighbors: &[Vec<usize>],
    w: &[f64],
) -> Result<DsfModel<f64>> {
    if neighbors.len() != w.len() {
        return Err(DsfError::InvalidArgument("one weight per right-side vertex required".into()));
    }
    if w.iter().any(|&x| !(x >= 0.0)) {
        return Err(DsfError::InvalidArgument("weights must be >= 0".into()));
    }
    let mut terms = Vec::with_capacity(neighbors.len());
    for (u, nbrs) in neighbors.iter().enumerate() {
        let mut weights = vec![0.0; ground.size()];
        for &x in nbrs {
            if x >= ground.size() {
                return Err(DsfError::InvalidArgument(format!("neighbor {x} out of range")));
            }
            weights[x] = 1.0;
        }
        let modular = ModularFunction::new(ground, weights, true)?;
        terms.push((ConcaveUnit::truncate(1.0)?, modular, w[u]));
    }
    make_scmm(&terms, &ModularFunction::zero(ground))
}

fn check_matrix(ground: &Arc<GroundSet>, w: &[Vec<f64>]) -> Result<()> {
    if w.len() != ground.size() {
        return Err(DsfError::InvalidArgument("one weight row per ground element required".into()));
    }
    let m = w.first().map(|r| r.len()).unwrap_or(0);
    for row in w {
        if row.len() != m {
            return Err(DsfError::InvalidArgument("ragged weight matrix".into()));
        }
        if row.iter().any(|&x| !(x >= 0.0)) {
            return Err(DsfError::InvalidArgument("weights must be >= 0".into()));
        }
    }
    Ok(())
}

fn check_edges(ground: &Arc<GroundSet>, edges: &[(usize, usize, f64)]) -> Result<()> {
    for &(x, y, w) in edges {
        if x >= ground.size() || y >= ground.size() {
            return Err(DsfError::InvalidArgument("edge endpoint out of range".into()));
        }
        if !(w >= 0.0) {
            return Err(DsfError::InvalidArgument("edge weights must be >= 0".into()));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Coverage and divergence objectives
// ---------------------------------------------------------------------------

/// Probabilistic coverage: SCMM with `φ_u = 1 − e^{−·}` over weights
/// `m_u(a) = log(1/(1 − p(u|a)))`; per topic equals `1 − Π_{a∈A}(1 − p(u|a))`.
pub fn make_prob_coverage(ground: &Arc<GroundSet>, p: &[Vec<f64>]) -> Result<DsfModel<f64>> {
    let mut terms = Vec::with_capacity(p.len());
    for (u, row) in p.iter().enumerate() {
        if row.len() != ground.size() {
            return Err(DsfError::InvalidArgument(format!("topic {u} has wrong probability length")));
        }
        let mut weights = Vec::with_capacity(row.len());
        for &pv in row {
            if !(0.0..1.0).contains(&pv) {
                return Err(DsfError::InvalidArgument(format!(
                    "probabilities must lie in [0,1), got {pv}"
                )));
            }
            weights.push(-(-pv).ln_1p()); // log(1/(1-p))
        }
        let modular = ModularFunction::new(ground, weights, true)?;
        terms.push((ConcaveUnit::one_minus_exp(), modular, 1.0));
    }
    make_scmm(&terms, &ModularFunction::zero(ground))
}

/// Divergence-minimization objective: for δ < 1 the SCMM
/// `g(X) = Σ_u p_u^δ (m_u(X))^{1−δ}`; for δ = 1 the shifted-log form
/// `Σ_u p_u log(1 + m_u(X))`.
pub fn make_divergence_objective(
    ground: &Arc<GroundSet>,
    p: &[f64],
    delta: f64,
    scores: &[Vec<f64>],
) -> Result<DsfModel<f64>> {
    if p.len() != scores.len() {
        return Err(DsfError::InvalidArgument("one probability per feature required".into()));
    }
    if p.iter().any(|&x| !(x >= 0.0)) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(DsfError::InvalidArgument("p must be a probability vector".into()));
    }
    if !(0.0 < delta && delta <= 1.0) {
        return Err(DsfError::InvalidArgument(format!("delta must be in (0,1], got {delta}")));
    }
    let mut terms = Vec::with_capacity(p.len());
    for (u, row) in scores.iter().enumerate() {
        let modular = ModularFunction::new(ground, row.clone(), true)?;
        if delta < 1.0 {
            terms.push((ConcaveUnit::power(1.0 - delta)?, modular, p[u].powf(delta)));
        } else {
            terms.push((ConcaveUnit::log_gamma(1.0)?, modular, p[u]));
        }
    }
    make_scmm(&terms, &ModularFunction::zero(ground))
}

// ---------------------------------------------------------------------------
// Desk-scale presets
// ---------------------------------------------------------------------------

/// The canonical six-element laminar tree: F = {V, {a,b,c}, {d,e,f}} with
/// caps 3, 2, 2.
pub fn laminar6_tree() -> LaminarTree {
    let ground = GroundSet::alphabetic(6).unwrap();
    LaminarTree::new(
        &ground,
        vec![vec![0, 1, 2], vec![3, 4, 5], vec![0, 1, 2, 3, 4, 5]],
        vec![2, 2, 3],
        vec![vec![], vec![], vec![0, 1]],
        2,
    )
    .unwrap()
}

/// laminar6 as a nested-truncation model: min(min(|A∩{a,b,c}|,2) + min(|A∩{d,e,f}|,2), 3).
pub fn laminar6_model() -> DsfModel<f64> {
    make_laminar_rank(&laminar6_tree()).unwrap().0
}

/// laminar6 as an exact-integer oracle.
pub fn laminar6_handle() -> SetFunctionHandle {
    make_laminar_rank(&laminar6_tree()).unwrap().1
}

fn two_block_truncation(
    ground: &Arc<GroundSet>,
    blocks: &[&[usize]],
    inner_cap: f64,
    outer_cap: f64,
) -> DsfModel<f64> {
    let mut nodes: Vec<DsfNode<f64>> = blocks
        .iter()
        .map(|b| {
            DsfNode::leaf(
                ConcaveUnit::truncate(inner_cap).unwrap(),
                b.iter().map(|&e| (e, 1.0)).collect(),
            )
            .at_layer(1)
        })
        .collect();
    let edges: Vec<(NodeId, f64)> = (0..blocks.len()).map(|i| (i, 1.0)).collect();
    let root = nodes.len();
    nodes.push(DsfNode::inner(ConcaveUnit::truncate(outer_cap).unwrap(), edges).at_layer(2));
    DsfModel::new(ground, nodes, root, vec![0.0; ground.size()]).unwrap()
}

/// The overlapping-block function on six elements:
/// min(min(|A∩{a,b,c,d}|,3) + min(|A∩{c,d,e,f}|,3), 5).
pub fn overlap6_model() -> DsfModel<f64> {
    let ground = GroundSet::alphabetic(6).unwrap();
    two_block_truncation(&ground, &[&[0, 1, 2, 3], &[2, 3, 4, 5]], 3.0, 5.0)
}

/// overlap6 as an exact-integer oracle.
pub fn overlap6_handle() -> SetFunctionHandle {
    let ground = GroundSet::alphabetic(6).unwrap();
    SetFunctionHandle::new_integral(&ground, "overlap6", |a| {
        let b1 = [0, 1, 2, 3].iter().filter(|&&e| a.contains(e)).count() as i64;
        let b2 = [2, 3, 4, 5].iter().filter(|&&e| a.contains(e)).count() as i64;
        (b1.min(3) + b2.min(3)).min(5)
    })
}

/// The four-overlapping-blocks function on eight elements:
/// min(Σᵢ min(|A∩Bᵢ|,3), 7) with B₁={a,b,c,d}, B₂={c,d,e,f}, B₃={e,f,g,h}, B₄={g,h,a,b}.
pub fn fourblocks8_model() -> DsfModel<f64> {
    let ground = GroundSet::alphabetic(8).unwrap();
    let blocks: [&[usize]; 4] = [&[0, 1, 2, 3], &[2, 3, 4, 5], &[4, 5, 6, 7], &[6, 7, 0, 1]];
    two_block_truncation(&ground, &blocks, 3.0, 7.0)
}

/// fourblocks8 as an exact-integer oracle.
pub fn fourblocks8_handle() -> SetFunctionHandle {
    let ground = GroundSet::alphabetic(8).unwrap();
    let blocks: [[usize; 4]; 4] = [[0, 1, 2, 3], [2, 3, 4, 5], [4, 5, 6, 7], [6, 7, 0, 1]];
    SetFunctionHandle::new_integral(&ground, "fourblocks8", move |a| {
        let total: i64 = blocks
            .iter()
            .map(|b| (b.iter().filter(|&&e| a.contains(e)).count() as i64).min(3))
            .sum();
        total.min(7)
    })
}

/// The two-layer family g(A) = φ(min(|A∩{a,b,c}|,2) + min(|A∩{d,e,f}|,2)) as a model.
pub fn thm41_model(phi: ConcaveUnit<f64>) -> DsfModel<f64> {
    let ground = GroundSet::alphabetic(6).unwrap();
    let left = DsfNode::leaf(ConcaveUnit::truncate(2.0).unwrap(), vec![(0, 1.0), (1, 1.0), (2, 1.0)])
        .at_layer(1);
    let right = DsfNode::leaf(ConcaveUnit::truncate(2.0).unwrap(), vec![(3, 1.0), (4, 1.0), (5, 1.0)])
        .at_layer(1);
    let root = DsfNode::inner(phi, vec![(0, 1.0), (1, 1.0)]).at_layer(2);
    DsfModel::new(&ground, vec![left, right, root], 2, vec![0.0; 6]).unwrap()
}

/// The same two-layer family as a direct handle.
pub fn thm41_handle(phi: ConcaveUnit<f64>) -> SetFunctionHandle {
    let ground = GroundSet::alphabetic(6).unwrap();
    SetFunctionHandle::new(&ground, "thm41", move |a| {
        let b1 = [0, 1, 2].iter().filter(|&&e| a.contains(e)).count().min(2);
        let b2 = [3, 4, 5].iter().filter(|&&e| a.contains(e)).count().min(2);
        phi.value((b1 + b2) as f64).unwrap()
    })
}

/// Feature counts for the nine-object, three-feature summarization example:
/// rows are objects a..i, columns are (squares, triangles, circles).
///
/// Chosen to match all the documented values: a holds nine squares, d three
/// of each shape, g (4,3,2); g({b}) = √8 + √1; {d,h,f} totals (9,9,9) so
/// g({d,h,f}) = 9 and is the greedy (and exhaustive) cardinality-3 optimum.
pub fn fig1_counts() -> Vec<Vec<f64>> {
    vec![
        vec![9.0, 0.0, 0.0], // a
        vec![8.0, 1.0, 0.0], // b
        vec![7.0, 2.0, 0.0], // c
        vec![3.0, 3.0, 3.0], // d
        vec![2.0, 4.0, 2.0], // e
        vec![3.0, 2.0, 4.0], // f
        vec![4.0, 3.0, 2.0], // g
        vec![3.0, 4.0, 2.0], // h
        vec![1.0, 1.0, 0.0], // i
    ]
}

/// The summarization example g(A) = Σ_u √(m_u(A)) over the nine objects.
pub fn fig1_model() -> DsfModel<f64> {
    let ground = GroundSet::alphabetic(9).unwrap();
    let counts = fig1_counts();
    // transpose: features as rows
    let scores: Vec<Vec<f64>> = (0..3).map(|u| (0..9).map(|v| counts[v][u]).collect()).collect();
    let fm = FeatureMatrix::uniform(&ground, scores, ConcaveUnit::sqrt()).unwrap();
    make_feature_based(&fm, &ModularFunction::zero(&ground)).unwrap()
}

/// The five canonical six-element functions whose block-symmetrized
/// five-vectors are tabulated: two cardinality truncations, two partition
/// ranks over {a,b,c}/{d,e,f}, and a weighted truncation.
pub fn table1_functions() -> Vec<SetFunctionHandle> {
    let ground = GroundSet::alphabetic(6).unwrap();
    let f1 = SetFunctionHandle::new_integral(&ground, "f1", |a| (a.len() as i64).min(1));
    let f2 = SetFunctionHandle::new_integral(&ground, "f2", |a| (a.len() as i64).min(2));
    let block = |a: &Subset, lo: usize, cap: i64| -> i64 {
        ((lo..lo + 3).filter(|&v| a.contains(v)).count() as i64).min(cap)
    };
    let f3 = SetFunctionHandle::new_integral(&ground, "f3", move |a| block(a, 0, 1) + block(a, 3, 1));
    let f4 = SetFunctionHandle::new_integral(&ground, "f4", move |a| block(a, 0, 2) + block(a, 3, 2));
    let pi = [1.0, 1.0, 0.0, 0.5, 0.5, 0.5];
    let f5 =
        SetFunctionHandle::new(&ground, "f5", move |a| a.iter().map(|v| pi[v]).sum::<f64>().min(1.0));
    vec![f1, f2, f3, f4, f5]
}

/// A truncated partition rank preset on eight elements: R = {a,b,c,d}, a=2, b=4.
pub fn truncated_rank8_handle() -> SetFunctionHandle {
    let ground = GroundSet::alphabetic(8).unwrap();
    let r = Subset::from_ids(&ground, &[0, 1, 2, 3]).unwrap();
    make_truncated_partition_rank(&r, 2, 4).unwrap()
}

// ---------------------------------------------------------------------------
// Randomized instances for tests and benchmarks
// ---------------------------------------------------------------------------

/// Random all-concave model with the given number of layers (root included),
/// uniform (0,1) weights. Used by the test suites; deterministic per rng.
pub fn random_concave_model(rng: &mut impl rand::Rng, n: usize, layers: usize) -> DsfModel<f64> {
    let g = GroundSet::with_size(n).unwrap();
    let units: Vec<ConcaveUnit<f64>> = vec![
        ConcaveUnit::sqrt(),
        ConcaveUnit::log_gamma(0.8).unwrap(),
        ConcaveUnit::one_minus_exp(),
        ConcaveUnit::power(0.6).unwrap(),
        ConcaveUnit::new(UnitKind::ShiftedSigmoid).unwrap(),
    ];
    let mut nodes: Vec<DsfNode<f64>> = Vec::new();
    let mut prev: Vec<NodeId> = Vec::new();
    for layer in 1..layers {
        let width = rng.gen_range(2..4);
        let mut cur = Vec::new();
        for _ in 0..width {
            let unit = units[rng.gen_range(0..units.len())].clone();
            let node = if layer == 1 {
                DsfNode::leaf(unit, (0..n).map(|e| (e, rng.gen_range(0.0..1.0))).collect())
            } else {
                DsfNode::inner(unit, prev.iter().map(|&u| (u, rng.gen_range(0.0..1.0))).collect())
            }
            .at_layer(layer);
            cur.push(nodes.len());
            nodes.push(node);
        }
        prev = cur;
    }
    let root_unit = units[rng.gen_range(0..units.len())].clone();
    let root = if prev.is_empty() {
        DsfNode::leaf(root_unit, (0..n).map(|e| (e, rng.gen_range(0.0..1.0))).collect())
    } else {
        DsfNode::inner(root_unit, prev.iter().map(|&u| (u, rng.gen_range(0.0..1.0))).collect())
    }
    .at_layer(layers);
    let root_id = nodes.len();
    nodes.push(root);
    DsfModel::new(&g, nodes, root_id, vec![0.0; n]).unwrap()
}

/// Random laminar tree over n ≤ 12 elements with random caps. The ground set
/// is split into 2–4 top-level blocks; blocks of size ≥ 3 may recurse once.
pub fn random_laminar_tree(rng: &mut impl rand::Rng, n: usize) -> LaminarTree {
    let ground = GroundSet::with_size(n).unwrap();
    let mut ids: Vec<usize> = (0..n).collect();
    // deterministic shuffle from the caller's rng
    for i in (1..ids.len()).rev() {
        ids.swap(i, rng.gen_range(0..=i));
    }
    let n_blocks = rng.gen_range(2..=4.min(n));
    let mut elements: Vec<Vec<usize>> = Vec::new();
    let mut caps: Vec<i64> = Vec::new();
    let mut children: Vec<Vec<usize>> = Vec::new();
    let mut top_children: Vec<usize> = Vec::new();
    let chunk = (n + n_blocks - 1) / n_blocks;
    for b in 0..n_blocks {
        let block: Vec<usize> = ids[(b * chunk).min(n)..((b + 1) * chunk).min(n)].to_vec();
        if block.is_empty() {
            continue;
        }
        if block.len() >= 3 && rng.gen_bool(0.5) {
            // split the block once more
            let cut = block.len() / 2;
            let (lo, hi) = (block[..cut].to_vec(), block[cut..].to_vec());
            let mut kid_ids = Vec::new();
            for sub in [lo, hi] {
                caps.push(rng.gen_range(1..=sub.len() as i64));
                elements.push(sub);
                children.push(vec![]);
                kid_ids.push(elements.len() - 1);
            }
            caps.push(rng.gen_range(1..=block.len() as i64));
            elements.push(block);
            children.push(kid_ids);
        } else {
            caps.push(rng.gen_range(1..=block.len() as i64));
            elements.push(block);
            children.push(vec![]);
        }
        top_children.push(elements.len() - 1);
    }
    elements.push((0..n).collect());
    caps.push(rng.gen_range(1..=n as i64));
    children.push(top_children);
    let root = elements.len() - 1;
    LaminarTree::new(&ground, elements, caps, children, root).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::set::powerset;
    use rand::SeedableRng;

    #[test]
    fn scmm_degenerate_identity_is_modular() {
        let g = GroundSet::with_size(4).unwrap();
        let m = ModularFunction::new(&g, vec![0.5, 1.5, 2.0, 0.25], true).unwrap();
        let f = make_scmm(&[(ConcaveUnit::identity(), m.clone(), 1.0)], &ModularFunction::zero(&g)).unwrap();
        for a in powerset(&g, 16).unwrap() {
            assert!((f.evaluate(&a).unwrap() - m.eval(&a).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn scmm_reproduces_the_three_halves_truncation() {
        // min(min(|A∩{a,b,c}|,1) + min(|A∩{d,e,f}|,1), 1.5) as an SCMM:
        // φ(α)=min(α, 0.5+0.5α) over the two unit counts, plus min(|A|,0.5) − 0.5|A|.
        let g = GroundSet::alphabetic(6).unwrap();
        let phi = ConcaveUnit::new(UnitKind::PiecewiseLinear { breakpoints: vec![1.0], slopes: vec![1.0, 0.5] })
            .unwrap();
        let m1 = ModularFunction::new(&g, vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0], true).unwrap();
        let m2 = ModularFunction::new(&g, vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0], true).unwrap();
        let ones = ModularFunction::new(&g, vec![1.0; 6], true).unwrap();
        let m_pm = ModularFunction::new(&g, vec![-0.5; 6], false).unwrap();
        let trunc_half = |m: ModularFunction| (ConcaveUnit::truncate(0.5).unwrap(), m, 1.0);
        let scmm = make_scmm(
            &[
                (phi.clone(), m1, 1.0),
                (phi, m2, 1.0),
                trunc_half(ones),
            ],
            &m_pm,
        )
        .unwrap();
        for a in powerset(&g, 16).unwrap() {
            let b1 = [0, 1, 2].iter().filter(|&&e| a.contains(e)).count().min(1) as f64;
            let b2 = [3, 4, 5].iter().filter(|&&e| a.contains(e)).count().min(1) as f64;
            let want = (b1 + b2).min(1.5);
            assert!(
                (scmm.evaluate(&a).unwrap() - want).abs() < 1e-12,
                "mismatch at {a:?}: {} vs {want}",
                scmm.evaluate(&a).unwrap()
            );
        }
    }

    #[test]
    fn scmm_as_sum_of_modular_truncations_roundtrip() {
        // Any SCMM term w·φ(m(A)) with piecewise-linear φ is a sum of modular
        // truncations Σ cᵢ·min(m(A), βᵢ); check the identity at desk scale.
        let g = GroundSet::with_size(5).unwrap();
        let m = ModularFunction::new(&g, vec![0.4, 1.1, 0.7, 0.9, 0.3], true).unwrap();
        let phi = ConcaveUnit::new(UnitKind::PiecewiseLinear { breakpoints: vec![1.0, 2.0], slopes: vec![2.0, 1.0, 0.5] })
            .unwrap();
        let f = make_scmm(&[(phi, m.clone(), 1.0)], &ModularFunction::zero(&g)).unwrap();
        // slopes (2,1,0.5) at breakpoints (1,2): decompose into
        // 0.5·m + 1.0·min(m,1) + 0.5·min(m,2)  (telescoping slope drops)
        for a in powerset(&g, 16).unwrap() {
            let mv = m.eval(&a).unwrap();
            let want = 0.5 * mv + 1.0 * mv.min(1.0) + 0.5 * mv.min(2.0);
            assert!((f.evaluate(&a).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn feature_based_fig1_values() {
        let f = fig1_model();
        let g = f.ground().clone();
        let b = Subset::from_labels(&g, &["b"]).unwrap();
        assert!((f.evaluate(&b).unwrap() - (8.0f64.sqrt() + 1.0)).abs() < 1e-12);
        let dhf = Subset::from_labels(&g, &["d", "h", "f"]).unwrap();
        assert_eq!(f.evaluate(&dhf).unwrap(), 9.0);
    }

    #[test]
    fn feature_based_identity_collapses_to_modular() {
        let g = GroundSet::with_size(3).unwrap();
        let scores = vec![vec![1.0, 0.0, 2.0], vec![0.5, 1.5, 0.0]];
        let fm = FeatureMatrix::new(
            &g,
            scores.clone(),
            vec![2.0, 1.0],
            vec![ConcaveUnit::identity(); 2],
        )
        .unwrap();
        let f = make_feature_based(&fm, &ModularFunction::zero(&g)).unwrap();
        for a in powerset(&g, 16).unwrap() {
            let want: f64 = a.iter().map(|v| 2.0 * scores[0][v] + scores[1][v]).sum();
            assert!((f.evaluate(&a).unwrap() - want).abs() < 1e-12);
        }
        // empty feature set degenerates to m±
        let m_pm = ModularFunction::new(&g, vec![1.0, -2.0, 0.5], false).unwrap();
        let fm0 = FeatureMatrix::new(&g, vec![], vec![], vec![]).unwrap();
        let f0 = make_feature_based(&fm0, &m_pm).unwrap();
        for a in powerset(&g, 16).unwrap() {
            assert_eq!(f0.evaluate(&a).unwrap(), m_pm.eval(&a).unwrap());
        }
    }

    #[test]
    fn partition_rank_examples() {
        let g = GroundSet::with_size(4).unwrap();
        let p = PartitionSpec::new(&g, vec![vec![0, 1, 2, 3]], vec![2]).unwrap();
        let r = make_partition_rank(&p);
        for a in powerset(&g, 16).unwrap() {
            assert_eq!(r.eval(&a).unwrap(), (a.len() as f64).min(2.0));
        }
        // caps >= block sizes: free matroid
        let p = PartitionSpec::new(&g, vec![vec![0, 1], vec![2, 3]], vec![5, 5]).unwrap();
        let r = make_partition_rank(&p);
        for a in powerset(&g, 16).unwrap() {
            assert_eq!(r.eval(&a).unwrap(), a.len() as f64);
        }
        // all caps zero
        let p = PartitionSpec::new(&g, vec![vec![0, 1], vec![2, 3]], vec![0, 0]).unwrap();
        let r = make_partition_rank(&p);
        assert_eq!(r.eval(&Subset::full(&g)).unwrap(), 0.0);
    }

    #[test]
    fn laminar6_matches_its_formula_everywhere() {
        let (model, oracle) = make_laminar_rank(&laminar6_tree()).unwrap();
        let g = model.ground().clone();
        for a in powerset(&g, 16).unwrap() {
            let b1 = [0, 1, 2].iter().filter(|&&e| a.contains(e)).count().min(2);
            let b2 = [3, 4, 5].iter().filter(|&&e| a.contains(e)).count().min(2);
            let want = (b1 + b2).min(3) as f64;
            assert_eq!(model.evaluate(&a).unwrap(), want);
            assert_eq!(oracle.eval(&a).unwrap(), want);
        }
        let abde = Subset::from_labels(&g, &["a", "b", "d", "e"]).unwrap();
        assert_eq!(oracle.eval(&abde).unwrap(), 3.0);
    }

    #[test]
    fn laminar_depth_one_equals_partition_rank() {
        let g = GroundSet::with_size(6).unwrap();
        let tree = LaminarTree::new(
            &g,
            vec![vec![0, 1, 2], vec![3, 4, 5], vec![0, 1, 2, 3, 4, 5]],
            vec![1, 2, 6],
            vec![vec![], vec![], vec![0, 1]],
            2,
        )
        .unwrap();
        let (_, oracle) = make_laminar_rank(&tree).unwrap();
        let p = PartitionSpec::new(&g, vec![vec![0, 1, 2], vec![3, 4, 5]], vec![1, 2]).unwrap();
        let pr = make_partition_rank(&p);
        for a in powerset(&g, 16).unwrap() {
            assert_eq!(oracle.eval(&a).unwrap(), pr.eval(&a).unwrap());
        }
    }

    #[test]
    fn laminar_rejects_non_laminar_input() {
        let g = GroundSet::with_size(4).unwrap();
        // overlapping siblings
        assert!(LaminarTree::new(
            &g,
            vec![vec![0, 1], vec![1, 2], vec![0, 1, 2, 3]],
            vec![1, 1, 3],
            vec![vec![], vec![], vec![0, 1]],
            2,
        )
        .is_err());
    }

    #[test]
    fn truncated_rank_examples() {
        let g = GroundSet::alphabetic(8).unwrap();
        let r = Subset::from_ids(&g, &[0, 1, 2, 3]).unwrap();
        let f = make_truncated_partition_rank(&r, 2, 4).unwrap();
        // f_R(R) = a
        assert_eq!(f.eval(&r).unwrap(), 2.0);
        // |A| = |R| but A ≠ R gives more than a
        let a = Subset::from_ids(&g, &[0, 1, 2, 4]).unwrap();
        assert!(f.eval(&a).unwrap() > 2.0);
        // a = b−1, R = V collapses to min(|A|, a)
        let v = Subset::full(&g);
        let f2 = make_truncated_partition_rank(&v, 3, 4).unwrap();
        for a in powerset(&g, 16).unwrap() {
            assert_eq!(f2.eval(&a).unwrap(), (a.len() as f64).min(3.0));
        }
        assert!(make_truncated_partition_rank(&r, 4, 4).is_err());
    }

    #[test]
    fn k4_rank_signature() {
        let f = k4_rank_handle();
        let g = f.ground().clone();
        // 3-cycles of K4 by edge label
        let cycles = [["ab", "ac", "bc"], ["ab", "ad", "bd"], ["ac", "ad", "cd"], ["bc", "bd", "cd"]];
        for c in cycles {
            let a = Subset::from_labels(&g, &c).unwrap();
            assert_eq!(f.eval(&a).unwrap(), 2.0);
        }
        for a in powerset(&g, 16).unwrap() {
            let val = f.eval(&a).unwrap();
            if a.len() > 3 {
                assert_eq!(val, 3.0);
            }
            if a.len() == 3 {
                let is_cycle = cycles.iter().any(|c| Subset::from_labels(&g, c).unwrap() == a);
                assert_eq!(val, if is_cycle { 2.0 } else { 3.0 });
            }
        }
        assert_eq!(f.eval(&Subset::empty(&g)).unwrap(), 0.0);
    }

    #[test]
    fn fk_hat_values() {
        let f1 = make_fk_hat(1).unwrap();
        let g1 = f1.ground().clone();
        assert_eq!(f1.evaluate(&Subset::full(&g1)).unwrap(), 1.0);
        assert_eq!(f1.evaluate(&Subset::from_ids(&g1, &[0]).unwrap()).unwrap(), 0.5);
        let f2 = make_fk_hat(2).unwrap();
        let g2 = f2.ground().clone();
        assert_eq!(f2.evaluate(&Subset::full(&g2)).unwrap(), 1.0);
        // model and oracle agree on all subsets for k in {1,2}
        for k in 1..=2 {
            let model = make_fk_hat(k).unwrap();
            let oracle = fk_hat_handle(k).unwrap();
            let g = model.ground().clone();
            for a in powerset(&g, 16).unwrap() {
                assert_eq!(model.evaluate(&a).unwrap(), oracle.eval(&a).unwrap());
            }
        }
        assert!(make_fk_hat(0).is_err());
        assert!(make_fk_hat(5).is_err());
    }

    #[test]
    fn softmax_facility_singletons_and_limit() {
        use rand::Rng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let g = GroundSet::with_size(5).unwrap();
        let w: Vec<Vec<f64>> = (0..5).map(|_| (0..5).map(|_| rng.gen_range(0.0..1.0)).collect()).collect();
        let soft = softmax_facility(&g, 50.0, &w).unwrap();
        let hard = facility_location(&g, &w).unwrap();
        // singletons: exactly the summed weights, any gamma
        for v in 0..5 {
            let s = Subset::from_ids(&g, &[v]).unwrap();
            let want: f64 = (0..5).map(|u| w[v][u]).sum();
            assert!((soft.evaluate(&s).unwrap() - want).abs() < 1e-9);
        }
        // gamma = 50 approximates the exact max within 0.02·|U|
        for a in powerset(&g, 16).unwrap() {
            let d = (soft.evaluate(&a).unwrap() - hard.eval(&a).unwrap()).abs();
            assert!(d <= 0.02 * 5.0, "softmax too far from max: {d}");
        }
    }

    #[test]
    fn bipartite_neighborhood_equals_set_cover_with_unit_weights() {
        let g = GroundSet::with_size(5).unwrap();
        let neighbors = vec![vec![0, 1], vec![1, 2, 3], vec![3], vec![0, 4]];
        let f = bipartite_neighborhood(&g, &neighbors, &[1.0; 4]).unwrap();
        for a in powerset(&g, 16).unwrap() {
            let covered = neighbors.iter().filter(|ns| ns.iter().any(|&x| a.contains(x))).count();
            assert!((f.evaluate(&a).unwrap() - covered as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn graph_cut_and_monotone_cut() {
        let g = GroundSet::with_size(4).unwrap();
        let edges = vec![(0, 1, 1.0), (1, 2, 2.0), (2, 3, 0.5), (0, 3, 1.5)];
        let cut = graph_cut(&g, &edges).unwrap();
        assert_eq!(cut.eval(&Subset::empty(&g)).unwrap(), 0.0);
        assert_eq!(cut.eval(&Subset::full(&g)).unwrap(), 0.0);
        let s = Subset::from_ids(&g, &[0]).unwrap();
        assert_eq!(cut.eval(&s).unwrap(), 1.0 + 1.5);
        let mono = monotone_cut(&g, &edges).unwrap();
        assert_eq!(mono.eval(&s).unwrap(), 2.5);
        assert_eq!(mono.eval(&Subset::full(&g)).unwrap(), 2.0 * (1.0 + 2.0 + 0.5 + 1.5));
    }

    #[test]
    fn prob_coverage_examples() {
        let g = GroundSet::with_size(2).unwrap();
        // one topic with p = 0.5 for both elements
        let f = make_prob_coverage(&g, &[vec![0.5, 0.5]]).unwrap();
        assert!((f.evaluate(&Subset::full(&g)).unwrap() - 0.75).abs() < 1e-12);
        let s = Subset::from_ids(&g, &[0]).unwrap();
        assert!((f.evaluate(&s).unwrap() - 0.5).abs() < 1e-12);
        // p ≡ 0 is identically zero
        let f0 = make_prob_coverage(&g, &[vec![0.0, 0.0]]).unwrap();
        assert_eq!(f0.evaluate(&Subset::full(&g)).unwrap(), 0.0);
        // p = 1 rejected
        assert!(make_prob_coverage(&g, &[vec![1.0, 0.5]]).is_err());
        // general agreement with 1 − Π(1−p)
        let p = vec![vec![0.3, 0.8], vec![0.1, 0.6]];
        let f = make_prob_coverage(&g, &p).unwrap();
        for a in powerset(&g, 16).unwrap() {
            let want: f64 = p
                .iter()
                .map(|row| 1.0 - a.iter().map(|v| 1.0 - row[v]).product::<f64>())
                .sum();
            assert!((f.evaluate(&a).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn divergence_objective_closed_form() {
        let g = GroundSet::with_size(4).unwrap();
        let scores = vec![vec![1.0, 2.0, 0.5, 0.0], vec![0.0, 1.0, 1.0, 3.0]];
        let f = make_divergence_objective(&g, &[0.5, 0.5], 0.5, &scores).unwrap();
        for a in powerset(&g, 16).unwrap() {
            let m1: f64 = a.iter().map(|v| scores[0][v]).sum();
            let m2: f64 = a.iter().map(|v| scores[1][v]).sum();
            let want = (m1.sqrt() + m2.sqrt()) / 2.0f64.sqrt();
            assert!((f.evaluate(&a).unwrap() - want).abs() < 1e-12);
        }
        // δ = 1: zero scores give 0
        let f1 = make_divergence_objective(&g, &[1.0, 0.0], 1.0, &scores).unwrap();
        assert_eq!(f1.evaluate(&Subset::empty(&g)).unwrap(), 0.0);
        assert!(make_divergence_objective(&g, &[0.7, 0.7], 0.5, &scores).is_err());
        assert!(make_divergence_objective(&g, &[0.5, 0.5], 1.5, &scores).is_err());
    }

    #[test]
    fn divergence_argmax_matches_direct_divergence_minimization() {
        // On a fixed 6-element instance, maximizing g under m(X) ≤ b picks the
        // same set as brute-force minimizing the δ-divergence between p and
        // the normalized covered-score distribution.
        let g = GroundSet::with_size(6).unwrap();
        let scores = vec![
            vec![2.0, 0.5, 1.0, 0.0, 0.5, 1.5],
            vec![0.5, 2.0, 0.0, 1.0, 1.0, 0.5],
            vec![0.0, 0.5, 1.5, 2.0, 0.5, 1.0],
        ];
        let p = [0.5, 0.3, 0.2];
        let delta = 0.5;
        let f = make_divergence_objective(&g, &p, delta, &scores).unwrap();
        let budget = 3.5; // on total score mass m(X) = Σ_u m_u(X)
        let m_total = |a: &Subset| -> f64 { a.iter().map(|v| scores.iter().map(|r| r[v]).sum::<f64>()).sum() };
        let mut best_g: Option<(f64, u64)> = None;
        let mut best_d: Option<(f64, u64)> = None;
        for a in powerset(&g, 16).unwrap() {
            if a.is_empty() || m_total(&a) > budget {
                continue;
            }
            let gv = f.evaluate(&a).unwrap();
            if best_g.map_or(true, |(bv, _)| gv > bv + 1e-12) {
                best_g = Some((gv, a.mask()));
            }
            // D_δ(p, p̄(X)) with p̄_u = m_u(X)/m(X)
            let mx = m_total(&a);
            let mix: f64 = (0..3)
                .map(|u| {
                    let mu: f64 = a.iter().map(|v| scores[u][v]).sum();
                    p[u].powf(delta) * (mu / mx).powf(1.0 - delta)
                })
                .sum();
            let d = (1.0 - mix) / (delta * (1.0 - delta));
            if best_d.map_or(true, |(bv, _)| d < bv - 1e-12) {
                best_d = Some((d, a.mask()));
            }
        }
        assert_eq!(best_g.unwrap().1, best_d.unwrap().1);
    }

    #[test]
    fn presets_evaluate() {
        let o6 = overlap6_model();
        let oh = overlap6_handle();
        let g = o6.ground().clone();
        for a in powerset(&g, 16).unwrap() {
            assert_eq!(o6.evaluate(&a).unwrap(), oh.eval(&a).unwrap());
        }
        let f8 = fourblocks8_model();
        let fh = fourblocks8_handle();
        let g8 = f8.ground().clone();
        for a in powerset(&g8, 16).unwrap() {
            assert_eq!(f8.evaluate(&a).unwrap(), fh.eval(&a).unwrap());
        }
        let t = thm41_model(ConcaveUnit::sqrt());
        let th = thm41_handle(ConcaveUnit::sqrt());
        let g6 = t.ground().clone();
        for a in powerset(&g6, 16).unwrap() {
            assert!((t.evaluate(&a).unwrap() - th.eval(&a).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn random_laminar_trees_are_valid() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let n = rand::Rng::gen_range(&mut rng, 4..=12);
            let tree = random_laminar_tree(&mut rng, n);
            let (model, oracle) = make_laminar_rank(&tree).unwrap();
            assert!(model.validate().pass);
            let g = model.ground().clone();
            let a = Subset::full(&g);
            assert_eq!(model.evaluate(&a).unwrap(), oracle.eval(&a).unwrap());
        }
    }
}
