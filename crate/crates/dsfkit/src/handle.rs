//! The opaque set-function interface consumed by verifiers and optimizers.

use crate::error::Result;
use crate::set::{require_same_ground, GroundSet, Subset};
use std::sync::Arc;

type EvalFn = dyn Fn(&Subset) -> f64 + Send + Sync;

/// A deterministic set function `f: 2^V -> R`, total on all subsets.
///
/// Handles flagged `integral` evaluate in exact integer arithmetic internally
/// and are compared exactly by the verifiers; float handles use the crate
/// tolerance.
#[derive(Clone)]
pub struct SetFunctionHandle {
    ground: Arc<GroundSet>,
    name: String,
    integral: bool,
    eval: Arc<EvalFn>,
}

impl SetFunctionHandle {
    /// Wraps a float-valued evaluator.
    pub fn new(
        ground: &Arc<GroundSet>,
        name: impl Into<String>,
        eval: impl Fn(&Subset) -> f64 + Send + Sync + 'static,
    ) -> Self {
        SetFunctionHandle {
            ground: Arc::clone(ground),
            name: name.into(),
            integral: false,
            eval: Arc::new(eval),
        }
    }

    /// Wraps an integer-valued evaluator (exact comparison mode).
    pub fn new_integral(
        ground: &Arc<GroundSet>,
        name: impl Into<String>,
        eval: impl Fn(&Subset) -> i64 + Send + Sync + 'static,
    ) -> Self {
        SetFunctionHandle {
            ground: Arc::clone(ground),
            name: name.into(),
            integral: true,
            eval: Arc::new(move |a| eval(a) as f64),
        }
    }

    /// The ground set.
    pub fn ground(&self) -> &Arc<GroundSet> {
        &self.ground
    }

    /// Descriptive name (used in reports).
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Whether the handle is integer-valued (exact tolerance).
    pub fn is_integral(&self) -> bool {
        self.integral
    }

    /// Comparison tolerance for this handle: 0 when integral, crate tolerance otherwise.
    pub fn tolerance(&self) -> f64 {
        if self.integral {
            0.0
        } else {
            crate::FLOAT_TOL
        }
    }

    /// Evaluates `f(A)` after a ground-set compatibility check.
    pub fn eval(&self, a: &Subset) -> Result<f64> {
        require_same_ground(&self.ground, a.ground(), &format!("evaluating {}", self.name))?;
        Ok((self.eval)(a))
    }

    /// Evaluates without the compatibility check (hot loops; caller guarantees grounds match).
    pub fn eval_unchecked(&self, a: &Subset) -> f64 {
        (self.eval)(a)
    }

    /// Marginal gain `f(v | A) = f(A + v) - f(A)`.
    pub fn gain(&self, a: &Subset, v: usize) -> Result<f64> {
        let mut av = a.clone();
        av.insert(v);
        Ok(self.eval(&av)? - self.eval(a)?)
    }

    /// Pointwise conic combination `alpha*f + beta*g` (float-valued).
    pub fn conic(alpha: f64, f: &SetFunctionHandle, beta: f64, g: &SetFunctionHandle) -> Result<SetFunctionHandle> {
        require_same_ground(f.ground(), g.ground(), "conic combination")?;
        let (f, g) = (f.clone(), g.clone());
        let name = format!("{}*{} + {}*{}", alpha, f.name(), beta, g.name());
        Ok(SetFunctionHandle::new(&f.ground().clone(), name, move |a| {
            alpha * f.eval_unchecked(a) + beta * g.eval_unchecked(a)
        }))
    }
}

impl std::fmt::Debug for SetFunctionHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SetFunctionHandle({}, integral={})", self.name, self.integral)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::set::ModularFunction;

    #[test]
    fn handle_eval_and_gain() {
        let g = GroundSet::with_size(4).unwrap();
        let f = SetFunctionHandle::new(&g, "card", |a| a.len() as f64);
        let s = Subset::from_ids(&g, &[0, 2]).unwrap();
        assert_eq!(f.eval(&s).unwrap(), 2.0);
        assert_eq!(f.gain(&s, 1).unwrap(), 1.0);
        assert_eq!(f.gain(&s, 0).unwrap(), 0.0);
    }

    #[test]
    fn ground_mismatch_rejected() {
        let g1 = GroundSet::with_size(3).unwrap();
        let g2 = GroundSet::alphabetic(3).unwrap();
        let f = SetFunctionHandle::new(&g1, "card", |a| a.len() as f64);
        assert!(f.eval(&Subset::empty(&g2)).is_err());
    }

    #[test]
    fn conic_combination() {
        let g = GroundSet::with_size(3).unwrap();
        let m = ModularFunction::new(&g, vec![1.0, 2.0, 3.0], true).unwrap();
        let m2 = m.clone();
        let f = SetFunctionHandle::new(&g, "m", move |a| m.eval(a).unwrap());
        let h = SetFunctionHandle::new(&g, "card", |a| a.len() as f64);
        let c = SetFunctionHandle::conic(2.0, &f, -1.0, &h).unwrap();
        let s = Subset::from_ids(&g, &[1, 2]).unwrap();
        assert_eq!(c.eval(&s).unwrap(), 2.0 * m2.eval(&s).unwrap() - 2.0);
    }
}
