//! The DSF engine: weighted DAGs of concave units over a ground set, plus a
//! final signed modular term.
//!
//! A model evaluates `f(A) = ψ_root(1_A) + m±(A)`, where each node computes
//! `ψ_v(x) = φ_v(Σ_u w_vu ψ_u(x) + Σ_e m_v(e) x_e)` over its internal and
//! ground parents. The same forward pass on real inputs is the natural
//! concave extension, tight at hypercube vertices. Reverse-mode passes
//! produce gradients with respect to every weight, learnable unit parameter,
//! and the input vector.

use crate::concave::{ConcaveUnit, Curvature};
use crate::error::{DsfError, Result};
use crate::handle::SetFunctionHandle;
use crate::set::{require_same_ground, GroundSet, Subset};
use crate::Real;
use std::collections::BTreeSet;
use std::sync::Arc;

/// Index of a node within its model.
pub type NodeId = usize;

/// Default cap applied to reported input-gradient entries when a unit's
/// supergradient is unbounded (√ at 0 and friends).
pub const DEFAULT_SLOPE_CAP: f64 = 1e12;

/// One internal unit of a DSF DAG.
#[derive(Clone, Debug)]
pub struct DsfNode<S: Real> {
    /// The scalar nonlinearity applied to the inner affine form.
    pub unit: ConcaveUnit<S>,
    /// Weighted edges from earlier nodes: (node id, weight ≥ 0).
    pub parents_internal: Vec<(NodeId, S)>,
    /// Weighted edges from ground elements: (element id, weight ≥ 0).
    pub parents_ground: Vec<(usize, S)>,
    /// Optional layer index (1-based; ground is layer 0). Required by the
    /// multivariate operations.
    pub layer: Option<usize>,
}

impl<S: Real> DsfNode<S> {
    /// Node reading only ground elements.
    pub fn leaf(unit: ConcaveUnit<S>, parents_ground: Vec<(usize, S)>) -> Self {
        DsfNode { unit, parents_internal: vec![], parents_ground, layer: None }
    }

    /// Node reading only earlier nodes.
    pub fn inner(unit: ConcaveUnit<S>, parents_internal: Vec<(NodeId, S)>) -> Self {
        DsfNode { unit, parents_internal, parents_ground: vec![], layer: None }
    }

    /// Sets the layer annotation (builder style).
    pub fn at_layer(mut self, layer: usize) -> Self {
        self.layer = Some(layer);
        self
    }
}

/// Structural validation outcome for a model.
#[derive(Clone, Debug)]
pub struct ModelReport {
    /// True when no structural failure was found.
    pub pass: bool,
    /// Human-readable failures (empty iff pass).
    pub failures: Vec<String>,
}

/// Forward-pass record: inner affine values and unit outputs per node.
#[derive(Clone, Debug)]
pub struct Forward<S> {
    /// φ̄_v: the inner affine value fed to each unit.
    pub inner: Vec<S>,
    /// ψ_v: each unit's output.
    pub out: Vec<S>,
}

/// Reverse-pass record for one input.
#[derive(Clone, Debug)]
pub struct GradientTape<S> {
    /// Forward values.
    pub forward: Forward<S>,
    /// ∂root/∂ψ_v per node.
    pub adj_out: Vec<S>,
    /// ∂root/∂φ̄_v per node (adjoint times the unit's midpoint supergradient).
    pub d_inner: Vec<S>,
    /// True if any supergradient hit the slope cap.
    pub capped: bool,
}

/// Gradients of `evaluate` with respect to every parameter.
#[derive(Clone, Debug)]
pub struct WeightGradients<S> {
    /// Per node: ∂f/∂w for each internal parent edge.
    pub internal: Vec<Vec<S>>,
    /// Per node: ∂f/∂m_v(e) for each ground parent edge.
    pub ground: Vec<Vec<S>>,
    /// Per node: ∂f/∂θ for each learnable unit parameter.
    pub unit_params: Vec<Vec<S>>,
    /// ∂f/∂m±(e) per element (= the indicator/input vector).
    pub final_modular: Vec<S>,
    /// True if any supergradient hit the slope cap.
    pub capped: bool,
}

/// Identifies one scalar parameter of a model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamKind {
    /// Internal edge weight: (node, edge position).
    Internal(NodeId, usize),
    /// Ground edge weight: (node, edge position).
    Ground(NodeId, usize),
    /// Learnable unit parameter: (node, parameter position).
    UnitParam(NodeId, usize),
    /// Entry of the final signed modular term.
    FinalModular(usize),
}

/// Flat-parameter metadata used by the learners.
#[derive(Clone, Debug)]
pub struct ParamInfo {
    /// What the parameter is.
    pub kind: ParamKind,
    /// Frozen parameters are excluded from gradients and updates.
    pub frozen: bool,
}

/// Layer selection for multivariate evaluation: argument j is bound to layer
/// σ_j, with σ_1 = 0 the ground layer.
#[derive(Clone, Debug)]
pub struct MultivariateAssignment<S> {
    /// Strictly increasing layer indices, starting at 0.
    pub sigma: Vec<usize>,
    /// Optional modular term m±^{(j)} over layer σ_j's node list for each
    /// argument j ≥ 2 (index j−1 here; entry 0 is ignored — the ground
    /// argument uses the model's final modular term). Empty vec = zeros.
    pub arg_modular: Vec<Vec<S>>,
}

impl<S: Real> MultivariateAssignment<S> {
    /// Assignment with no per-argument modular terms.
    pub fn new(sigma: Vec<usize>) -> Self {
        let k = sigma.len();
        MultivariateAssignment { sigma, arg_modular: vec![vec![]; k] }
    }
}

/// A deep submodular (or, with convex units, deep supermodular) function model.
#[derive(Clone, Debug)]
pub struct DsfModel<S: Real> {
    ground: Arc<GroundSet>,
    nodes: Vec<DsfNode<S>>,
    root: NodeId,
    final_modular: Vec<S>,
    frozen: BTreeSet<NodeId>,
    slope_cap: S,
    topo: Option<Vec<NodeId>>,
    valid: Option<String>, // None = valid, Some(reason) = first structural failure
}

impl<S: Real> DsfModel<S> {
    /// Builds a model. Index errors (dangling node/element ids, bad root,
    /// wrong modular length) are hard errors; structural problems that
    /// `validate_model` is supposed to report (cycles, negative weights,
    /// mixed curvature) are recorded and surface when evaluating.
    pub fn new(
        ground: &Arc<GroundSet>,
        nodes: Vec<DsfNode<S>>,
        root: NodeId,
        final_modular: Vec<S>,
    ) -> Result<Self> {
        if nodes.is_empty() {
            return Err(DsfError::InvalidModel("model needs at least one node".into()));
        }
        if root >= nodes.len() {
            return Err(DsfError::InvalidModel(format!("root id {root} out of range")));
        }
        if final_modular.len() != ground.size() {
            return Err(DsfError::InvalidModel(format!(
                "final modular length {} != ground size {}",
                final_modular.len(),
                ground.size()
            )));
        }
        for (v, node) in nodes.iter().enumerate() {
            for &(u, _) in &node.parents_internal {
                if u >= nodes.len() {
                    return Err(DsfError::InvalidModel(format!("node {v} references missing node {u}")));
                }
            }
            for &(e, _) in &node.parents_ground {
                if e >= ground.size() {
                    return Err(DsfError::InvalidModel(format!("node {v} references missing element {e}")));
                }
            }
        }
        let mut model = DsfModel {
            ground: Arc::clone(ground),
            nodes,
            root,
            final_modular,
            frozen: BTreeSet::new(),
            slope_cap: S::of(DEFAULT_SLOPE_CAP),
            topo: None,
            valid: None,
        };
        model.refresh();
        Ok(model)
    }

    /// Sets a node's layer annotation.
    pub fn set_node_layer(&mut self, v: NodeId, layer: usize) {
        self.nodes[v].layer = Some(layer);
    }

    /// Marks nodes as frozen (excluded from gradients and training updates).
    pub fn freeze_nodes(&mut self, ids: impl IntoIterator<Item = NodeId>) {
        self.frozen.extend(ids);
    }

    /// Frozen node ids.
    pub fn frozen_nodes(&self) -> &BTreeSet<NodeId> {
        &self.frozen
    }

    /// Overrides the input-gradient slope cap.
    pub fn set_slope_cap(&mut self, cap: S) {
        self.slope_cap = cap;
    }

    /// The ground set.
    pub fn ground(&self) -> &Arc<GroundSet> {
        &self.ground
    }

    /// The nodes, indexed by id.
    pub fn nodes(&self) -> &[DsfNode<S>] {
        &self.nodes
    }

    /// The root node id.
    pub fn root(&self) -> NodeId {
        self.root
    }

    /// The final signed modular weights.
    pub fn final_modular(&self) -> &[S] {
        &self.final_modular
    }

    /// Mutable access to the final modular weights.
    pub fn final_modular_mut(&mut self) -> &mut [S] {
        &mut self.final_modular
    }

    /// Recomputes the cached topological order and validity flag. Called by
    /// every mutating operation.
    fn refresh(&mut self) {
        self.topo = self.topo_sort();
        self.valid = self.first_failure();
    }

    fn topo_sort(&self) -> Option<Vec<NodeId>> {
        let n = self.nodes.len();
        let mut indeg = vec![0usize; n];
        let mut consumers: Vec<Vec<NodeId>> = vec![vec![]; n];
        for (v, node) in self.nodes.iter().enumerate() {
            indeg[v] = node.parents_internal.len();
            for &(u, _) in &node.parents_internal {
                consumers[u].push(v);
            }
        }
        let mut order = Vec::with_capacity(n);
        let mut queue: Vec<NodeId> = (0..n).filter(|&v| indeg[v] == 0).collect();
        // pop lowest id first so the order is deterministic
        while let Some(&v) = queue.iter().min() {
            queue.retain(|&x| x != v);
            order.push(v);
            for &w in &consumers[v] {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    queue.push(w);
                }
            }
        }
        if order.len() == n {
            Some(order)
        } else {
            None
        }
    }

    fn first_failure(&self) -> Option<String> {
        self.validate().failures.into_iter().next()
    }

    /// Structural validation: acyclicity, weight nonnegativity (the final
    /// modular term excepted), root reachability, curvature consistency.
    pub fn validate(&self) -> ModelReport {
        let mut failures = Vec::new();
        if self.topo.is_none() {
            failures.push("the node graph contains a cycle".into());
        }
        for (v, node) in self.nodes.iter().enumerate() {
            for &(u, w) in &node.parents_internal {
                if !(w >= S::zero()) {
                    failures.push(format!("negative internal weight {w} on edge {u} -> {v}"));
                }
            }
            for &(e, w) in &node.parents_ground {
                if !(w >= S::zero()) {
                    failures.push(format!(
                        "negative ground weight {w} on element {} -> node {v}",
                        self.ground.label(e)
                    ));
                }
            }
        }
        // every node must feed the root (root uniqueness as the single output)
        if self.topo.is_some() {
            let n = self.nodes.len();
            let mut feeds_root = vec![false; n];
            feeds_root[self.root] = true;
            for &v in self.topo.as_ref().unwrap().iter().rev() {
                if feeds_root[v] {
                    for &(u, _) in &self.nodes[v].parents_internal {
                        feeds_root[u] = true;
                    }
                }
            }
            for v in 0..n {
                if !feeds_root[v] {
                    failures.push(format!("node {v} does not feed the root"));
                }
            }
        }
        let mut has_concave = false;
        let mut has_convex = false;
        for node in &self.nodes {
            match node.unit.curvature() {
                Curvature::Concave => has_concave = true,
                Curvature::Convex => has_convex = true,
                Curvature::Linear => {}
            }
        }
        if has_concave && has_convex {
            failures.push("mixed concave and convex units carry no guarantee; rejected".into());
        }
        ModelReport { pass: failures.is_empty(), failures }
    }

    /// True when the model is a deep supermodular model (any convex unit).
    pub fn is_supermodular_family(&self) -> bool {
        self.nodes.iter().any(|n| n.unit.curvature() == Curvature::Convex)
    }

    fn require_valid(&self) -> Result<()> {
        match &self.valid {
            None => Ok(()),
            Some(reason) => Err(DsfError::InvalidModel(reason.clone())),
        }
    }

    /// Forward pass on a real input vector.
    pub fn forward(&self, x: &[S]) -> Result<Forward<S>> {
        self.require_valid()?;
        if x.len() != self.ground.size() {
            return Err(DsfError::InvalidArgument(format!(
                "input length {} != ground size {}",
                x.len(),
                self.ground.size()
            )));
        }
        if let Some(bad) = x.iter().find(|v| !(**v >= S::zero())) {
            return Err(DsfError::InvalidArgument(format!("negative input coordinate {bad}")));
        }
        Ok(self.forward_unchecked(x, None))
    }

    fn forward_unchecked(&self, x: &[S], active: Option<&[bool]>) -> Forward<S> {
        let n = self.nodes.len();
        let mut inner = vec![S::zero(); n];
        let mut out = vec![S::zero(); n];
        for &v in self.topo.as_ref().expect("validated").iter() {
            if let Some(act) = active {
                if !act[v] {
                    continue; // untriggered unit contributes 0
                }
            }
            let node = &self.nodes[v];
            let mut acc = S::zero();
            for &(u, w) in &node.parents_internal {
                acc = acc + w * out[u];
            }
            for &(e, w) in &node.parents_ground {
                acc = acc + w * x[e];
            }
            inner[v] = acc;
            out[v] = node.unit.value_unchecked(acc);
        }
        Forward { inner, out }
    }

    /// Evaluates `f(A) = ψ_root(1_A) + m±(A)`.
    pub fn evaluate(&self, a: &Subset) -> Result<S> {
        require_same_ground(&self.ground, a.ground(), "DsfModel::evaluate")?;
        self.require_valid()?;
        let x = self.indicator(a);
        let fwd = self.forward_unchecked(&x, None);
        Ok(fwd.out[self.root] + self.modular_term(a))
    }

    fn indicator(&self, a: &Subset) -> Vec<S> {
        (0..self.ground.size())
            .map(|i| if a.contains(i) { S::one() } else { S::zero() })
            .collect()
    }

    fn modular_term(&self, a: &Subset) -> S {
        a.iter().fold(S::zero(), |acc, i| acc + self.final_modular[i])
    }

    /// The natural concave extension `ψ_root(x) + <m±, x>`; agrees with
    /// `evaluate` on hypercube vertices by construction (same code path).
    pub fn concave_extension(&self, x: &[S]) -> Result<S> {
        let fwd = self.forward(x)?;
        let m = x.iter().zip(&self.final_modular).fold(S::zero(), |acc, (xi, mi)| acc + *xi * *mi);
        Ok(fwd.out[self.root] + m)
    }

    /// Reverse-mode pass from a completed forward pass.
    pub fn backward(&self, fwd: Forward<S>) -> GradientTape<S> {
        let n = self.nodes.len();
        let mut adj_out = vec![S::zero(); n];
        let mut d_inner = vec![S::zero(); n];
        let mut capped = false;
        adj_out[self.root] = S::one();
        for &v in self.topo.as_ref().expect("validated").iter().rev() {
            let node = &self.nodes[v];
            let mut slope = node
                .unit
                .supergradient(fwd.inner[v].max(S::zero()))
                .expect("nonneg inner value")
                .midpoint();
            if slope > self.slope_cap {
                slope = self.slope_cap;
                capped = true;
            }
            d_inner[v] = adj_out[v] * slope;
            for &(u, w) in &node.parents_internal {
                adj_out[u] = adj_out[u] + d_inner[v] * w;
            }
        }
        GradientTape { forward: fwd, adj_out, d_inner, capped }
    }

    /// Gradient of `evaluate(A)` with respect to every parameter. Frozen
    /// nodes report zero gradients. Kinks use the midpoint supergradient.
    pub fn gradient_weights(&self, a: &Subset) -> Result<WeightGradients<S>> {
        require_same_ground(&self.ground, a.ground(), "gradient_weights")?;
        self.require_valid()?;
        let x = self.indicator(a);
        let tape = self.backward(self.forward_unchecked(&x, None));
        let mut internal = Vec::with_capacity(self.nodes.len());
        let mut ground = Vec::with_capacity(self.nodes.len());
        let mut unit_params = Vec::with_capacity(self.nodes.len());
        for (v, node) in self.nodes.iter().enumerate() {
            if self.frozen.contains(&v) {
                internal.push(vec![S::zero(); node.parents_internal.len()]);
                ground.push(vec![S::zero(); node.parents_ground.len()]);
                unit_params.push(vec![S::zero(); node.unit.param_names().len()]);
                continue;
            }
            internal.push(
                node.parents_internal.iter().map(|&(u, _)| tape.d_inner[v] * tape.forward.out[u]).collect(),
            );
            ground.push(node.parents_ground.iter().map(|&(e, _)| tape.d_inner[v] * x[e]).collect());
            unit_params.push(
                node.unit
                    .param_gradients(tape.forward.inner[v])
                    .into_iter()
                    .map(|g| tape.adj_out[v] * g)
                    .collect(),
            );
        }
        Ok(WeightGradients { internal, ground, unit_params, final_modular: x, capped: tape.capped })
    }

    /// A supergradient of the concave extension with respect to the input,
    /// entries capped at the slope cap (the flag reports whether the cap bit).
    pub fn gradient_input(&self, x: &[S]) -> Result<(Vec<S>, bool)> {
        let fwd = self.forward(x)?;
        let tape = self.backward(fwd);
        let mut g = self.final_modular.clone();
        for (v, node) in self.nodes.iter().enumerate() {
            for &(e, w) in &node.parents_ground {
                g[e] = g[e] + tape.d_inner[v] * w;
            }
        }
        let mut capped = tape.capped;
        for gi in &mut g {
            if *gi > self.slope_cap {
                *gi = self.slope_cap;
                capped = true;
            }
        }
        Ok((g, capped))
    }

    /// `f1(A) − f2(A)` for two models over the same ground set.
    pub fn evaluate_difference(f1: &DsfModel<S>, f2: &DsfModel<S>, a: &Subset) -> Result<S> {
        require_same_ground(f1.ground(), f2.ground(), "evaluate_difference")?;
        Ok(f1.evaluate(a)? - f2.evaluate(a)?)
    }

    // ---- layered / multivariate -------------------------------------------------

    /// True when every node carries a layer annotation.
    pub fn is_layered(&self) -> bool {
        self.nodes.iter().all(|n| n.layer.is_some())
    }

    /// Node ids of a layer, in increasing id order.
    pub fn layer_nodes(&self, layer: usize) -> Vec<NodeId> {
        (0..self.nodes.len()).filter(|&v| self.nodes[v].layer == Some(layer)).collect()
    }

    /// Distinct node layers, ascending.
    pub fn layers(&self) -> Vec<usize> {
        let mut ls: Vec<usize> = self.nodes.iter().filter_map(|n| n.layer).collect();
        ls.sort_unstable();
        ls.dedup();
        ls
    }

    /// Ground set standing for a layer's node list (labels `n<id>`), the
    /// domain of that layer's multivariate argument.
    pub fn layer_ground(&self, layer: usize) -> Result<Arc<GroundSet>> {
        let ids = self.layer_nodes(layer);
        if ids.is_empty() {
            return Err(DsfError::InvalidArgument(format!("model has no layer {layer}")));
        }
        GroundSet::new(ids.iter().map(|v| format!("n{v}")))
    }

    fn check_assignment(&self, asg: &MultivariateAssignment<S>) -> Result<()> {
        if !self.is_layered() {
            return Err(DsfError::InvalidArgument(
                "multivariate evaluation requires a fully layered model".into(),
            ));
        }
        if asg.sigma.first() != Some(&0) {
            return Err(DsfError::InvalidArgument("sigma must start at the ground layer 0".into()));
        }
        if !asg.sigma.windows(2).all(|w| w[0] < w[1]) {
            return Err(DsfError::InvalidArgument("sigma must be strictly increasing".into()));
        }
        let layers = self.layers();
        for &s in &asg.sigma[1..] {
            if !layers.contains(&s) {
                return Err(DsfError::InvalidArgument(format!("sigma references missing layer {s}")));
            }
        }
        if asg.arg_modular.len() != asg.sigma.len() {
            return Err(DsfError::InvalidArgument("arg_modular must have one entry per argument".into()));
        }
        Ok(())
    }

    /// Multivariate evaluation: argument 1 is a ground subset; argument j ≥ 2
    /// is a subset of layer σ_j's node list (over `layer_ground(σ_j)`) acting
    /// as binary triggers — unselected units output 0. Adds the model's m±
    /// on the ground argument and any per-argument modular terms.
    pub fn evaluate_multivariate(
        &self,
        asg: &MultivariateAssignment<S>,
        ground_arg: &Subset,
        layer_args: &[Subset],
    ) -> Result<S> {
        self.require_valid()?;
        self.check_assignment(asg)?;
        require_same_ground(&self.ground, ground_arg.ground(), "multivariate ground argument")?;
        if layer_args.len() + 1 != asg.sigma.len() {
            return Err(DsfError::InvalidArgument(format!(
                "expected {} layer arguments, got {}",
                asg.sigma.len() - 1,
                layer_args.len()
            )));
        }
        let mut active = vec![true; self.nodes.len()];
        let mut extra = S::zero();
        for (j, arg) in layer_args.iter().enumerate() {
            let layer = asg.sigma[j + 1];
            let ids = self.layer_nodes(layer);
            let expect = self.layer_ground(layer)?;
            require_same_ground(&expect, arg.ground(), "multivariate layer argument")?;
            let weights = &asg.arg_modular[j + 1];
            if !weights.is_empty() && weights.len() != ids.len() {
                return Err(DsfError::InvalidArgument(
                    "arg_modular entry length must match the layer's node count".into(),
                ));
            }
            for (pos, &v) in ids.iter().enumerate() {
                let selected = arg.contains(pos);
                active[v] = selected;
                if selected && !weights.is_empty() {
                    extra = extra + weights[pos];
                }
            }
        }
        let x = self.indicator(ground_arg);
        let fwd = self.forward_unchecked(&x, Some(&active));
        Ok(fwd.out[self.root] + self.modular_term(ground_arg) + extra)
    }

    // ---- flat parameter view (learning) ----------------------------------------

    /// Flat parameter layout: per node (id order) internal weights, ground
    /// weights, learnable unit parameters; then the final modular entries.
    pub fn param_layout(&self) -> Vec<ParamInfo> {
        let mut out = Vec::new();
        for (v, node) in self.nodes.iter().enumerate() {
            let frozen = self.frozen.contains(&v);
            for i in 0..node.parents_internal.len() {
                out.push(ParamInfo { kind: ParamKind::Internal(v, i), frozen });
            }
            for i in 0..node.parents_ground.len() {
                out.push(ParamInfo { kind: ParamKind::Ground(v, i), frozen });
            }
            for i in 0..node.unit.param_names().len() {
                out.push(ParamInfo { kind: ParamKind::UnitParam(v, i), frozen });
            }
        }
        for e in 0..self.ground.size() {
            out.push(ParamInfo { kind: ParamKind::FinalModular(e), frozen: false });
        }
        out
    }

    /// Current parameter vector in layout order.
    pub fn get_params(&self) -> Vec<S> {
        let mut out = Vec::new();
        for node in &self.nodes {
            out.extend(node.parents_internal.iter().map(|&(_, w)| w));
            out.extend(node.parents_ground.iter().map(|&(_, w)| w));
            out.extend(node.unit.param_values());
        }
        out.extend(self.final_modular.iter().copied());
        out
    }

    /// Replaces all parameters (layout order) and refreshes caches.
    pub fn set_params(&mut self, params: &[S]) -> Result<()> {
        let layout = self.param_layout();
        if params.len() != layout.len() {
            return Err(DsfError::InvalidArgument(format!(
                "expected {} parameters, got {}",
                layout.len(),
                params.len()
            )));
        }
        let mut it = params.iter().copied();
        for node in &mut self.nodes {
            for p in &mut node.parents_internal {
                p.1 = it.next().unwrap();
            }
            for p in &mut node.parents_ground {
                p.1 = it.next().unwrap();
            }
            let np = node.unit.param_names().len();
            if np > 0 {
                let vals: Vec<S> = (0..np).map(|_| it.next().unwrap()).collect();
                node.unit.set_params(&vals)?;
            }
        }
        for m in &mut self.final_modular {
            *m = it.next().unwrap();
        }
        self.refresh();
        Ok(())
    }

    /// Flattens a `WeightGradients` into layout order.
    pub fn flatten_gradients(&self, g: &WeightGradients<S>) -> Vec<S> {
        let mut out = Vec::new();
        for v in 0..self.nodes.len() {
            out.extend(g.internal[v].iter().copied());
            out.extend(g.ground[v].iter().copied());
            out.extend(g.unit_params[v].iter().copied());
        }
        out.extend(g.final_modular.iter().copied());
        out
    }

    /// Projects the parameters back into the DSF family: internal and ground
    /// weights clamped to ≥ 0, unit parameters clamped into their validity
    /// domains; the final modular term is exempt.
    pub fn project(&mut self) {
        for node in &mut self.nodes {
            for p in &mut node.parents_internal {
                p.1 = p.1.max(S::zero());
            }
            for p in &mut node.parents_ground {
                p.1 = p.1.max(S::zero());
            }
            let mut params = node.unit.param_values();
            if !params.is_empty() {
                node.unit.clamp_params(&mut params);
                node.unit.set_params(&params).expect("clamped params are valid");
            }
        }
        self.refresh();
    }

    /// Node sets whose inner value changes when a given parameter moves:
    /// the owning node and everything downstream of it. Used by the numeric
    /// gradient checker to skip parameters sitting at unit kinks.
    pub fn affected_nodes(&self, kind: ParamKind) -> Vec<NodeId> {
        let owner = match kind {
            ParamKind::Internal(v, _) | ParamKind::Ground(v, _) | ParamKind::UnitParam(v, _) => v,
            ParamKind::FinalModular(_) => return vec![],
        };
        let n = self.nodes.len();
        let mut reach = vec![false; n];
        reach[owner] = true;
        if let Some(topo) = &self.topo {
            for &v in topo {
                if reach[v] {
                    continue;
                }
                if self.nodes[v].parents_internal.iter().any(|&(u, _)| reach[u]) {
                    reach[v] = true;
                }
            }
        }
        (0..n).filter(|&v| reach[v]).collect()
    }
}

impl DsfModel<f64> {
    /// Wraps the model as a [`SetFunctionHandle`].
    pub fn handle(&self, name: impl Into<String>) -> SetFunctionHandle {
        let model = self.clone();
        SetFunctionHandle::new(&self.ground.clone(), name, move |a| {
            model.evaluate(a).expect("model pre-validated")
        })
    }
}

/// Structural validation of a model (spec operation form).
pub fn validate_model<S: Real>(f: &DsfModel<S>) -> ModelReport {
    f.validate()
}
