//! Training: regression / ERM and max-margin structured learning, both via
//! projected stochastic subgradient descent with backprop through the model
//! DAG, plus a finite-difference gradient checker.

use crate::dsf::{DsfModel, ParamKind};
use crate::error::{DsfError, Result};
use crate::handle::SetFunctionHandle;
use crate::optimize::{greedy_max, hamming_loss, Constraint};
use crate::set::{require_same_ground, GroundSet, Subset};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// Labeled training data: (subset, value) pairs for regression, or reference
/// summaries (values ignored) for max-margin.
#[derive(Clone, Debug)]
pub struct Dataset {
    ground: Arc<GroundSet>,
    samples: Vec<(Subset, f64)>,
}

impl Dataset {
    /// Regression dataset of (subset, target value) pairs.
    pub fn regression(ground: &Arc<GroundSet>, samples: Vec<(Subset, f64)>) -> Result<Self> {
        for (s, y) in &samples {
            require_same_ground(ground, s.ground(), "Dataset::regression")?;
            if !y.is_finite() {
                return Err(DsfError::InvalidArgument(format!("non-finite target value {y}")));
            }
        }
        Ok(Dataset { ground: Arc::clone(ground), samples })
    }

    /// Reference-summary dataset for max-margin training.
    pub fn summaries(ground: &Arc<GroundSet>, sets: Vec<Subset>) -> Result<Self> {
        Self::regression(ground, sets.into_iter().map(|s| (s, 0.0)).collect())
    }

    /// The common ground set.
    pub fn ground(&self) -> &Arc<GroundSet> {
        &self.ground
    }

    /// The samples in insertion order.
    pub fn samples(&self) -> &[(Subset, f64)] {
        &self.samples
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// True when there are no samples.
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Pointwise loss for regression training.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegressionLoss {
    /// (f(S) − y)²
    Squared,
    /// |f(S) − y|
    Absolute,
}

/// Classification loss 𝓛 applied to the structured margin.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MarginLoss {
    /// max(0, m)
    Hinge,
    /// log(1 + eᵐ)
    Logistic,
}

/// Builds the margin loss ℓ_S for a reference summary S.
pub type MarginLossBuilder = Arc<dyn Fn(&Subset) -> SetFunctionHandle + Send + Sync>;

/// Hyperparameters shared by both trainers.
#[derive(Clone)]
pub struct TrainConfig {
    /// Initial learning rate (> 0); epoch t uses lr0 / (1 + lr_decay · t).
    pub lr0: f64,
    /// Nonnegative learning-rate decay.
    pub lr_decay: f64,
    /// Number of passes over the data; 0 is a no-op.
    pub epochs: usize,
    /// Mini-batch size (≥ 1).
    pub batch_size: usize,
    /// Regularizer weight λ ≥ 0 on λ‖w‖².
    pub lambda: f64,
    /// Pointwise loss for `fit_regression`.
    pub regression_loss: RegressionLoss,
    /// Classification loss for `fit_max_margin`.
    pub margin_loss: MarginLoss,
    /// Builds ℓ_S per summary; must satisfy ℓ_S(S) = 0. Default: Hamming.
    pub loss_builder: MarginLossBuilder,
    /// Cardinality budget for loss-augmented inference; 0 means |S| per sample.
    pub budget: usize,
    /// Seed for the shuffling RNG; fixed seed gives bit-reproducible runs.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr0: 0.05,
            lr_decay: 0.01,
            epochs: 50,
            batch_size: 8,
            lambda: 0.0,
            regression_loss: RegressionLoss::Squared,
            margin_loss: MarginLoss::Hinge,
            loss_builder: Arc::new(|s| hamming_loss(s)),
            budget: 0,
            seed: 0,
        }
    }
}

impl std::fmt::Debug for TrainConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TrainConfig")
            .field("lr0", &self.lr0)
            .field("lr_decay", &self.lr_decay)
            .field("epochs", &self.epochs)
            .field("batch_size", &self.batch_size)
            .field("lambda", &self.lambda)
            .field("regression_loss", &self.regression_loss)
            .field("margin_loss", &self.margin_loss)
            .field("budget", &self.budget)
            .field("seed", &self.seed)
            .finish()
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !(self.lr0 > 0.0) {
            return Err(DsfError::InvalidArgument(format!("lr0 must be > 0, got {}", self.lr0)));
        }
        if !(self.lr_decay >= 0.0) {
            return Err(DsfError::InvalidArgument("lr_decay must be >= 0".into()));
        }
        if self.batch_size == 0 {
            return Err(DsfError::InvalidArgument("batch_size must be >= 1".into()));
        }
        if !(self.lambda >= 0.0) {
            return Err(DsfError::InvalidArgument("lambda must be >= 0".into()));
        }
        Ok(())
    }
}

/// Returns a copy of the model with its parameters projected back into the
/// family: internal and ground weights clamped to ≥ 0, unit parameters
/// clamped into their validity domains; m± untouched.
pub fn project_parameters(f: &DsfModel<f64>) -> DsfModel<f64> {
    let mut out = f.clone();
    out.project();
    out
}

/// Applies a raw parameter vector to the model, clamping unit parameters
/// into their validity domains first (so `set_params` cannot reject the
/// step), then projecting weights back into the family.
fn apply_step(model: &mut DsfModel<f64>, mut params: Vec<f64>) -> Result<()> {
    for (i, info) in model.param_layout().iter().enumerate() {
        if let ParamKind::UnitParam(v, j) = info.kind {
            let unit = &model.nodes()[v].unit;
            let mut vals = unit.param_values();
            vals[j] = params[i];
            unit.clamp_params(&mut vals);
            params[i] = vals[j];
        }
    }
    model.set_params(&params)?;
    model.project();
    Ok(())
}

/// One projected subgradient step: params ← project(params − lr · grad),
/// with the regularizer gradient 2λw folded in for non-frozen parameters.
fn sgd_step(model: &mut DsfModel<f64>, grad: &[f64], lr: f64, lambda: f64) -> Result<()> {
    let params = model.get_params();
    let layout = model.param_layout();
    let next: Vec<f64> = params
        .iter()
        .zip(grad)
        .zip(&layout)
        .map(|((&w, &g), info)| {
            let reg = if info.frozen { 0.0 } else { 2.0 * lambda * w };
            w - lr * (g + reg)
        })
        .collect();
    apply_step(model, next)
}

fn regularizer(model: &DsfModel<f64>, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    let layout = model.param_layout();
    lambda
        * model
            .get_params()
            .iter()
            .zip(&layout)
            .filter(|(_, info)| !info.frozen)
            .map(|(w, _)| w * w)
            .sum::<f64>()
}

fn regression_loss_value(kind: RegressionLoss, pred: f64, y: f64) -> f64 {
    match kind {
        RegressionLoss::Squared => (pred - y) * (pred - y),
        RegressionLoss::Absolute => (pred - y).abs(),
    }
}

/// d loss / d pred (subgradient; 0 at the absolute-loss kink).
fn regression_loss_slope(kind: RegressionLoss, pred: f64, y: f64) -> f64 {
    match kind {
        RegressionLoss::Squared => 2.0 * (pred - y),
        RegressionLoss::Absolute => {
            if pred > y {
                1.0
            } else if pred < y {
                -1.0
            } else {
                0.0
            }
        }
    }
}

fn mean_regression_loss(
    model: &DsfModel<f64>,
    data: &Dataset,
    kind: RegressionLoss,
    lambda: f64,
) -> Result<f64> {
    let mut total = 0.0;
    for (s, y) in data.samples() {
        total += regression_loss_value(kind, model.evaluate(s)?, *y);
    }
    Ok(total / data.len() as f64 + regularizer(model, lambda))
}

/// Minimizes Σᵢ L(yᵢ, f_w(Sᵢ)) + λ‖w‖² by mini-batch projected subgradient
/// descent. Deterministic given the seed. Returns the trained model and the
/// per-epoch training loss history (length = epochs; empty for 0 epochs).
pub fn fit_regression(
    topology: &DsfModel<f64>,
    data: &Dataset,
    cfg: &TrainConfig,
) -> Result<(DsfModel<f64>, Vec<f64>)> {
    cfg.validate()?;
    require_same_ground(topology.ground(), data.ground(), "fit_regression")?;
    if data.is_empty() {
        return Err(DsfError::InvalidArgument("empty dataset".into()));
    }
    let report = topology.validate();
    if !report.pass {
        return Err(DsfError::InvalidModel(report.failures.join("; ")));
    }
    let mut model = topology.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let lr = cfg.lr0 / (1.0 + cfg.lr_decay * epoch as f64);
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let mut grad = vec![0.0; model.get_params().len()];
            for &i in chunk {
                let (s, y) = &data.samples()[i];
                let pred = model.evaluate(s)?;
                let slope = regression_loss_slope(cfg.regression_loss, pred, *y);
                if slope == 0.0 {
                    continue;
                }
                let gw = model.flatten_gradients(&model.gradient_weights(s)?);
                for (g, gi) in grad.iter_mut().zip(gw) {
                    *g += slope * gi;
                }
            }
            let scale = 1.0 / chunk.len() as f64;
            for g in &mut grad {
                *g *= scale;
            }
            sgd_step(&mut model, &grad, lr, cfg.lambda)?;
            debug_assert!(model.validate().pass);
        }
        history.push(mean_regression_loss(&model, data, cfg.regression_loss, cfg.lambda)?);
    }
    Ok((model, history))
}

fn margin_loss_value(kind: MarginLoss, m: f64) -> f64 {
    match kind {
        MarginLoss::Hinge => m.max(0.0),
        // ln(1 + e^m), numerically stable for large |m|
        MarginLoss::Logistic => {
            if m > 0.0 {
                m + (-m).exp().ln_1p()
            } else {
                m.exp().ln_1p()
            }
        }
    }
}

/// d loss / d margin (subgradient; midpoint ½ at the hinge kink).
fn margin_loss_slope(kind: MarginLoss, m: f64) -> f64 {
    match kind {
        MarginLoss::Hinge => {
            if m > 0.0 {
                1.0
            } else if m < 0.0 {
                0.0
            } else {
                0.5
            }
        }
        MarginLoss::Logistic => 1.0 / (1.0 + (-m).exp()),
    }
}

/// Loss-augmented margin of one summary at the current parameters:
/// f(Ã) + ℓ_S(Ã) − f(S) with Ã from greedy loss-augmented inference.
fn sample_margin(
    model: &DsfModel<f64>,
    s: &Subset,
    loss: &SetFunctionHandle,
    budget: usize,
) -> Result<(Subset, f64)> {
    let k = if budget == 0 { s.len() } else { budget };
    let fh = model.handle("f");
    let combined = SetFunctionHandle::conic(1.0, &fh, 1.0, loss)?;
    let (a_tilde, aug_value, _) = greedy_max(&combined, &Constraint::Cardinality(k))?;
    let margin = aug_value - model.evaluate(s)?;
    Ok((a_tilde, margin))
}

/// Max-margin training: per summary S, run loss-augmented inference for Ã,
/// take a subgradient of 𝓛(f_w(Ã) + ℓ_S(Ã) − f_w(S)) + λ‖w‖², step, project.
/// Deterministic given the seed; errors if any ℓ_S(S) ≠ 0.
pub fn fit_max_margin(
    topology: &DsfModel<f64>,
    summaries: &Dataset,
    cfg: &TrainConfig,
) -> Result<(DsfModel<f64>, Vec<f64>)> {
    cfg.validate()?;
    require_same_ground(topology.ground(), summaries.ground(), "fit_max_margin")?;
    if summaries.is_empty() {
        return Err(DsfError::InvalidArgument("empty summary set".into()));
    }
    let report = topology.validate();
    if !report.pass {
        return Err(DsfError::InvalidModel(report.failures.join("; ")));
    }
    let losses: Vec<SetFunctionHandle> = summaries
        .samples()
        .iter()
        .map(|(s, _)| {
            let l = (cfg.loss_builder)(s);
            let at_s = l.eval(s)?;
            if at_s.abs() > l.tolerance() + crate::FLOAT_TOL {
                return Err(DsfError::InvalidArgument(format!(
                    "margin loss must vanish at its own summary; got {at_s}"
                )));
            }
            Ok(l)
        })
        .collect::<Result<_>>()?;
    let mut model = topology.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..summaries.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let lr = cfg.lr0 / (1.0 + cfg.lr_decay * epoch as f64);
        order.shuffle(&mut rng);
        for &i in order.iter() {
            let (s, _) = &summaries.samples()[i];
            let (a_tilde, margin) = sample_margin(&model, s, &losses[i], cfg.budget)?;
            let slope = margin_loss_slope(cfg.margin_loss, margin);
            let mut grad = vec![0.0; model.get_params().len()];
            if slope != 0.0 {
                let ga = model.flatten_gradients(&model.gradient_weights(&a_tilde)?);
                let gs = model.flatten_gradients(&model.gradient_weights(s)?);
                for (g, (a, b)) in grad.iter_mut().zip(ga.iter().zip(&gs)) {
                    *g = slope * (a - b);
                }
            }
            sgd_step(&mut model, &grad, lr, cfg.lambda)?;
            debug_assert!(model.validate().pass);
        }
        let mut total = 0.0;
        for (i, (s, _)) in summaries.samples().iter().enumerate() {
            let (_, margin) = sample_margin(&model, s, &losses[i], cfg.budget)?;
            total += margin_loss_value(cfg.margin_loss, margin);
        }
        history.push(total / summaries.len() as f64 + regularizer(&model, cfg.lambda));
    }
    Ok((model, history))
}

/// Result of a finite-difference check of `gradient_weights`.
#[derive(Clone, Copy, Debug)]
pub struct GradCheckReport {
    /// Max over checked parameters of |analytic − fd| / max(1, |analytic|, |fd|).
    pub max_rel_error: f64,
    /// Parameters compared.
    pub checked: usize,
    /// Parameters skipped (frozen, at a unit kink, or perturbation leaves
    /// the valid domain).
    pub skipped: usize,
}

/// Compares `gradient_weights` against central finite differences at step h
/// for every parameter, skipping parameters whose owning node (or anything
/// downstream of it) sits within h of a unit kink.
pub fn numeric_gradient_check(
    f: &DsfModel<f64>,
    a: &Subset,
    h: f64,
) -> Result<GradCheckReport> {
    if !(h > 0.0) {
        return Err(DsfError::InvalidArgument(format!("step h must be > 0, got {h}")));
    }
    require_same_ground(f.ground(), a.ground(), "numeric_gradient_check")?;
    let analytic = f.flatten_gradients(&f.gradient_weights(a)?);
    let layout = f.param_layout();
    let base_params = f.get_params();
    let fwd = f.forward(&a.indicator_vector())?;
    let near_kink: Vec<bool> = f
        .nodes()
        .iter()
        .enumerate()
        .map(|(v, node)| node.unit.kinks().iter().any(|&k| (fwd.inner[v] - k).abs() <= h))
        .collect();
    let mut work = f.clone();
    let mut max_rel_error: f64 = 0.0;
    let mut checked = 0;
    let mut skipped = 0;
    for (i, info) in layout.iter().enumerate() {
        if info.frozen || f.affected_nodes(info.kind).iter().any(|&v| near_kink[v]) {
            skipped += 1;
            continue;
        }
        let mut probe = |delta: f64| -> Result<f64> {
            let mut p = base_params.clone();
            p[i] += delta;
            work.set_params(&p)?;
            work.evaluate(a)
        };
        let plus = probe(h);
        let minus = probe(-h);
        work.set_params(&base_params)?;
        let (plus, minus) = match (plus, minus) {
            (Ok(p), Ok(m)) => (p, m),
            // perturbation left the model's valid domain (e.g. weight at 0)
            _ => {
                skipped += 1;
                continue;
            }
        };
        let fd = (plus - minus) / (2.0 * h);
        let rel = (fd - analytic[i]).abs() / 1.0_f64.max(fd.abs()).max(analytic[i].abs());
        max_rel_error = max_rel_error.max(rel);
        checked += 1;
    }
    Ok(GradCheckReport { max_rel_error, checked, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concave::ConcaveUnit;
    use crate::dsf::DsfNode;
    use crate::set::ModularFunction;
    use crate::zoo::{make_scmm, random_concave_model};
    use rand::Rng;

    /// One identity leaf over every element: f(A) = Σ (w_e + m_e) x_e.
    fn linear_topology(g: &Arc<GroundSet>, init: f64) -> DsfModel<f64> {
        let n = g.size();
        let node = DsfNode::leaf(ConcaveUnit::identity(), (0..n).map(|e| (e, init)).collect());
        DsfModel::new(g, vec![node], 0, vec![0.0; n]).unwrap()
    }

    fn effective_linear_weights(m: &DsfModel<f64>) -> Vec<f64> {
        let mut w: Vec<f64> = m.final_modular().to_vec();
        for &(e, we) in &m.nodes()[0].parents_ground {
            w[e] += we;
        }
        w
    }

    fn random_subsets(g: &Arc<GroundSet>, count: usize, rng: &mut impl Rng) -> Vec<Subset> {
        (0..count).map(|_| Subset::from_mask(g, rng.gen_range(0..1u64 << g.size()))).collect()
    }

    #[test]
    fn regression_recovers_a_modular_target() {
        let g = GroundSet::with_size(6).unwrap();
        let target = [0.4, 1.3, 0.1, 2.0, 0.7, 1.1];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let samples: Vec<(Subset, f64)> = random_subsets(&g, 200, &mut rng)
            .into_iter()
            .map(|s| {
                let y = s.iter().map(|i| target[i]).sum::<f64>();
                (s, y)
            })
            .collect();
        let data = Dataset::regression(&g, samples).unwrap();
        let cfg = TrainConfig { lr0: 0.1, lr_decay: 0.02, epochs: 120, batch_size: 16, ..Default::default() };
        let (trained, history) = fit_regression(&linear_topology(&g, 0.5), &data, &cfg).unwrap();
        let w = effective_linear_weights(&trained);
        let rmse = (w.iter().zip(&target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / 6.0).sqrt();
        assert!(rmse < 1e-3, "rmse {rmse}");
        assert_eq!(history.len(), 120);
        // realizable target, λ=0: final loss collapses relative to the start
        assert!(history[119] < 1e-3 * history[0].max(1e-9));
    }

    #[test]
    fn zero_epochs_is_a_no_op_and_history_is_empty() {
        let g = GroundSet::with_size(4).unwrap();
        let model = linear_topology(&g, 0.3);
        let data = Dataset::regression(&g, vec![(Subset::from_ids(&g, &[0]).unwrap(), 1.0)]).unwrap();
        let cfg = TrainConfig { epochs: 0, ..Default::default() };
        let (trained, history) = fit_regression(&model, &data, &cfg).unwrap();
        assert_eq!(trained.get_params(), model.get_params());
        assert!(history.is_empty());
    }

    #[test]
    fn regression_rejects_bad_inputs() {
        let g = GroundSet::with_size(4).unwrap();
        let model = linear_topology(&g, 0.3);
        let empty = Dataset::regression(&g, vec![]).unwrap();
        assert!(fit_regression(&model, &empty, &TrainConfig::default()).is_err());
        assert!(Dataset::regression(&g, vec![(Subset::empty(&g), f64::NAN)]).is_err());
        let bad_cfg = TrainConfig { lr0: 0.0, ..Default::default() };
        let data = Dataset::regression(&g, vec![(Subset::empty(&g), 0.0)]).unwrap();
        assert!(fit_regression(&model, &data, &bad_cfg).is_err());
    }

    #[test]
    fn regression_fits_a_sqrt_cardinality_target() {
        let g = GroundSet::with_size(8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let make = |sets: Vec<Subset>| {
            Dataset::regression(&g, sets.into_iter().map(|s| {
                let y = (s.len() as f64).sqrt();
                (s, y)
            }).collect())
            .unwrap()
        };
        let train = make(random_subsets(&g, 300, &mut rng));
        let held_out = make(random_subsets(&g, 100, &mut rng));
        // self-realizable: 1-term SCMM topology with a √ unit
        let ones = ModularFunction::new(&g, vec![0.5; 8], true).unwrap();
        let topology = make_scmm(&[(ConcaveUnit::sqrt(), ones, 1.0)], &ModularFunction::zero(&g)).unwrap();
        let cfg = TrainConfig { lr0: 0.05, lr_decay: 0.05, epochs: 150, batch_size: 16, seed: 3, ..Default::default() };
        let (trained, history) = fit_regression(&topology, &train, &cfg).unwrap();
        let mut sq_err = 0.0;
        let mut sq_ref = 0.0;
        for (s, y) in held_out.samples() {
            let d = trained.evaluate(s).unwrap() - y;
            sq_err += d * d;
            sq_ref += y * y;
        }
        let rel_rmse = (sq_err / sq_ref).sqrt();
        assert!(rel_rmse < 0.05, "relative rmse {rel_rmse}");
        assert!(history.last().unwrap() < &history[0]);
    }

    #[test]
    fn training_is_reproducible_for_a_fixed_seed() {
        let g = GroundSet::with_size(6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let samples: Vec<(Subset, f64)> =
            random_subsets(&g, 40, &mut rng).into_iter().map(|s| (s.clone(), s.len() as f64)).collect();
        let data = Dataset::regression(&g, samples).unwrap();
        let cfg = TrainConfig { epochs: 10, seed: 7, ..Default::default() };
        let a = fit_regression(&linear_topology(&g, 0.2), &data, &cfg).unwrap();
        let b = fit_regression(&linear_topology(&g, 0.2), &data, &cfg).unwrap();
        assert_eq!(a.0.get_params(), b.0.get_params());
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn max_margin_separates_a_single_summary() {
        let g = GroundSet::with_size(5).unwrap();
        let s = Subset::from_ids(&g, &[1, 3]).unwrap();
        let summaries = Dataset::summaries(&g, vec![s.clone()]).unwrap();
        let cfg = TrainConfig { lr0: 0.2, lr_decay: 0.0, epochs: 40, budget: 2, ..Default::default() };
        let (trained, history) = fit_max_margin(&linear_topology(&g, 0.5), &summaries, &cfg).unwrap();
        let (top2, _, _) = greedy_max(&trained.handle("trained"), &Constraint::Cardinality(2)).unwrap();
        assert_eq!(top2, s);
        // hinge objective is non-negative throughout
        assert!(history.iter().all(|&l| l >= 0.0));
    }

    #[test]
    fn huge_regularizer_drives_weights_to_the_projected_origin() {
        let g = GroundSet::with_size(4).unwrap();
        let s = Subset::from_ids(&g, &[0]).unwrap();
        let summaries = Dataset::summaries(&g, vec![s]).unwrap();
        // the hinge gradient is bounded by 1, so weights settle near 1/(2λ)
        let cfg =
            TrainConfig { lr0: 4e-4, lr_decay: 0.0, epochs: 100, lambda: 1000.0, budget: 1, ..Default::default() };
        let (trained, _) = fit_max_margin(&linear_topology(&g, 0.8), &summaries, &cfg).unwrap();
        for &(_, w) in &trained.nodes()[0].parents_ground {
            assert!(w.abs() < 1e-2, "weight {w} not shrunk");
        }
        for &m in trained.final_modular() {
            assert!(m.abs() < 1e-2, "modular {m} not shrunk");
        }
    }

    #[test]
    fn max_margin_rejects_a_loss_that_does_not_vanish_at_its_summary() {
        let g = GroundSet::with_size(4).unwrap();
        let summaries = Dataset::summaries(&g, vec![Subset::from_ids(&g, &[0]).unwrap()]).unwrap();
        let cfg = TrainConfig {
            loss_builder: Arc::new(|s: &Subset| SetFunctionHandle::new(s.ground(), "one", |_| 1.0)),
            ..Default::default()
        };
        let err = fit_max_margin(&linear_topology(&g, 0.5), &summaries, &cfg);
        assert!(err.is_err());
    }

    #[test]
    fn projection_examples() {
        let g = GroundSet::with_size(3).unwrap();
        let mut model = linear_topology(&g, 0.5);
        let mut p = model.get_params();
        // p = [w0, w1, w2, m0, m1, m2]
        p[1] = -0.3;
        p[4] = -2.0;
        model.set_params(&p).unwrap();
        let projected = project_parameters(&model);
        let q = projected.get_params();
        assert_eq!(q[0], 0.5);
        assert_eq!(q[1], 0.0);
        assert_eq!(q[4], -2.0);
        assert!(projected.validate().pass);
        // interior point: identity
        let inner = project_parameters(&linear_topology(&g, 0.5));
        assert_eq!(inner.get_params(), linear_topology(&g, 0.5).get_params());
    }

    #[test]
    fn gradient_check_is_exact_on_a_linear_model() {
        let g = GroundSet::with_size(5).unwrap();
        let model = linear_topology(&g, 0.7);
        let a = Subset::from_ids(&g, &[0, 2, 4]).unwrap();
        // large step: the model is exactly linear, so only float cancellation
        // limits the agreement
        let rep = numeric_gradient_check(&model, &a, 1e-3).unwrap();
        assert!(rep.max_rel_error < 1e-10, "error {}", rep.max_rel_error);
        assert!(rep.checked > 0);
    }

    #[test]
    fn gradient_check_passes_on_random_two_layer_models() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..5 {
            let model = random_concave_model(&mut rng, 8, 2);
            let a = Subset::from_mask(model.ground(), rng.gen_range(1..1u64 << 8));
            let rep = numeric_gradient_check(&model, &a, 1e-6).unwrap();
            assert!(rep.max_rel_error < 1e-5, "error {}", rep.max_rel_error);
            assert!(rep.checked > 0);
        }
    }

    #[test]
    fn gradient_check_skips_parameters_at_a_truncation_kink() {
        let g = GroundSet::with_size(4).unwrap();
        // input at A is |A| = 2, exactly the truncation threshold
        let node = DsfNode::leaf(ConcaveUnit::truncate(2.0).unwrap(), (0..4).map(|e| (e, 1.0)).collect());
        let model = DsfModel::new(&g, vec![node], 0, vec![0.0; 4]).unwrap();
        let a = Subset::from_ids(&g, &[0, 1]).unwrap();
        let rep = numeric_gradient_check(&model, &a, 1e-6).unwrap();
        assert!(rep.skipped > 0);
        assert!(rep.max_rel_error < 1e-8);
    }

    #[test]
    fn gradient_check_validates_its_step() {
        let g = GroundSet::with_size(3).unwrap();
        let model = linear_topology(&g, 0.5);
        assert!(numeric_gradient_check(&model, &Subset::empty(&g), 0.0).is_err());
    }
}
