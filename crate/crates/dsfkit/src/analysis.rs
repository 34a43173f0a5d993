//! Brute-force verification oracles and structural analysis: exhaustive
//! property checks, surplus arithmetic, (A,B,C)/f̂_k structure, antitone
//! sampling, the two-layer SCMM classifier with its explicit expansion, the
//! block-symmetrization operator, and the multivariate lattice check.

use crate::concave::{ConcaveUnit, Curvature};
use crate::dsf::{DsfModel, MultivariateAssignment};
use crate::error::{DsfError, Result};
use crate::handle::SetFunctionHandle;
use crate::set::{GroundSet, Subset};
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use std::sync::Arc;

/// Largest ground set the exhaustive verifiers accept (2^16 subsets; the
/// pairwise-gain submodularity oracle is O(2^n · n^2)).
pub const BRUTE_FORCE_CAP: usize = 16;

/// Witness lists stop growing past this count so reports stay readable.
pub const WITNESS_CAP: usize = 32;

/// Properties checkable by [`verify_properties`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Property {
    Submodular,
    Supermodular,
    Monotone,
    Normalized,
    Modular,
}

impl Property {
    /// Stable lowercase name (also the CLI spelling).
    pub fn name(&self) -> &'static str {
        match self {
            Property::Submodular => "submodular",
            Property::Supermodular => "supermodular",
            Property::Monotone => "monotone",
            Property::Normalized => "normalized",
            Property::Modular => "modular",
        }
    }

    /// Parses the CLI spelling.
    pub fn parse(s: &str) -> Result<Property> {
        match s {
            "submodular" => Ok(Property::Submodular),
            "supermodular" => Ok(Property::Supermodular),
            "monotone" => Ok(Property::Monotone),
            "normalized" => Ok(Property::Normalized),
            "modular" => Ok(Property::Modular),
            other => Err(DsfError::InvalidArgument(format!("unknown property '{other}'"))),
        }
    }
}

/// Outcome of one exhaustive or sampled verification.
#[derive(Clone, Debug)]
pub struct VerificationReport {
    /// Name of the verified property.
    pub property: String,
    /// True when no violation was found.
    pub pass: bool,
    /// Violating tuples (lowest subsets first), capped at [`WITNESS_CAP`].
    pub witnesses: Vec<String>,
    /// Largest violation magnitude encountered (0 when pass).
    pub max_violation: f64,
    /// Number of subsets (or samples) scanned.
    pub subsets_checked: u64,
}

impl std::fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "{}: {} (checked {}, max violation {:e})",
            self.property,
            if self.pass { "pass" } else { "FAIL" },
            self.subsets_checked,
            self.max_violation
        )?;
        for w in &self.witnesses {
            writeln!(f, "  witness: {w}")?;
        }
        Ok(())
    }
}

/// Worker-thread count: `DSFKIT_THREADS` if set and positive, otherwise the
/// available parallelism.
pub fn default_threads() -> usize {
    std::env::var("DSFKIT_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&t| t >= 1)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Precomputed table of f over every subset, indexed by bitmask.
fn value_table(f: &SetFunctionHandle) -> Result<Vec<f64>> {
    let n = f.ground().size();
    if n > BRUTE_FORCE_CAP {
        return Err(DsfError::CapExceeded(format!(
            "ground size {n} exceeds the brute-force cap {BRUTE_FORCE_CAP}"
        )));
    }
    let ground = f.ground().clone();
    Ok((0..1u64 << n).map(|m| f.eval_unchecked(&Subset::from_mask(&ground, m))).collect())
}

struct Partial {
    witnesses: Vec<String>,
    max_violation: f64,
    checked: u64,
}

/// Scans the mask range [0, full) across worker threads; each thread reports
/// its witnesses in ascending mask order and ranges are merged lowest-first,
/// so the result is independent of the thread count.
fn scan_masks<F>(full: u64, threads: usize, check: F) -> Partial
where
    F: Fn(u64, &mut Partial) + Sync,
{
    let threads = threads.max(1).min(full.max(1) as usize);
    let chunk = full.div_ceil(threads as u64).max(1);
    let mut partials: Vec<Partial> = Vec::new();
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for t in 0..threads {
            let lo = t as u64 * chunk;
            let hi = (lo + chunk).min(full);
            if lo >= hi {
                continue;
            }
            let check = &check;
            handles.push(scope.spawn(move || {
                let mut p = Partial { witnesses: Vec::new(), max_violation: 0.0, checked: 0 };
                for m in lo..hi {
                    check(m, &mut p);
                    p.checked += 1;
                }
                p
            }));
        }
        for h in handles {
            partials.push(h.join().expect("verifier thread panicked"));
        }
    });
    let mut merged = Partial { witnesses: Vec::new(), max_violation: 0.0, checked: 0 };
    for p in partials {
        merged.checked += p.checked;
        merged.max_violation = merged.max_violation.max(p.max_violation);
        for w in p.witnesses {
            if merged.witnesses.len() < WITNESS_CAP {
                merged.witnesses.push(w);
            }
        }
    }
    merged
}

fn report(property: &str, p: Partial) -> VerificationReport {
    VerificationReport {
        property: property.to_string(),
        pass: p.witnesses.is_empty(),
        witnesses: p.witnesses,
        max_violation: p.max_violation,
        subsets_checked: p.checked,
    }
}

fn set_str(ground: &Arc<GroundSet>, mask: u64) -> String {
    format!("{:?}", Subset::from_mask(ground, mask))
}

/// Exhaustively verifies the requested properties on all 2^n subsets,
/// returning one report per property. Tolerance is 0 for integral handles
/// and the crate float tolerance otherwise.
pub fn verify_properties(f: &SetFunctionHandle, props: &[Property]) -> Result<Vec<VerificationReport>> {
    verify_properties_with_threads(f, props, default_threads())
}

/// [`verify_properties`] with an explicit worker-thread count; the output is
/// identical for every thread count.
pub fn verify_properties_with_threads(
    f: &SetFunctionHandle,
    props: &[Property],
    threads: usize,
) -> Result<Vec<VerificationReport>> {
    let vals = value_table(f)?;
    let n = f.ground().size();
    let full = 1u64 << n;
    let tol = f.tolerance();
    let ground = f.ground().clone();
    let mut out = Vec::with_capacity(props.len());
    for prop in props {
        let partial = match prop {
            // diminishing returns via the equivalent f(v|A) >= f(v|A+w)
            Property::Submodular | Property::Supermodular => {
                let sup = *prop == Property::Supermodular;
                scan_masks(full, threads, |m, p| {
                    for v in 0..n {
                        if m >> v & 1 == 1 {
                            continue;
                        }
                        let gain_v = vals[(m | 1 << v) as usize] - vals[m as usize];
                        for w in 0..n {
                            if w == v || m >> w & 1 == 1 {
                                continue;
                            }
                            let mw = m | 1 << w;
                            let gain_vw = vals[(mw | 1 << v) as usize] - vals[mw as usize];
                            let viol = if sup { gain_v - gain_vw } else { gain_vw - gain_v };
                            if viol > tol {
                                p.max_violation = p.max_violation.max(viol);
                                if p.witnesses.len() < WITNESS_CAP {
                                    p.witnesses.push(format!(
                                        "A={}, v={}, w={}: gains {:.12} vs {:.12}",
                                        set_str(&ground, m),
                                        ground.label(v),
                                        ground.label(w),
                                        gain_v,
                                        gain_vw
                                    ));
                                }
                            }
                        }
                    }
                })
            }
            Property::Monotone => scan_masks(full, threads, |m, p| {
                for v in 0..n {
                    if m >> v & 1 == 1 {
                        continue;
                    }
                    let viol = vals[m as usize] - vals[(m | 1 << v) as usize];
                    if viol > tol {
                        p.max_violation = p.max_violation.max(viol);
                        if p.witnesses.len() < WITNESS_CAP {
                            p.witnesses.push(format!(
                                "A={}, v={}: f drops by {:.12}",
                                set_str(&ground, m),
                                ground.label(v),
                                viol
                            ));
                        }
                    }
                }
            }),
            Property::Normalized => scan_masks(1, threads, |_, p| {
                let viol = vals[0].abs();
                if viol > tol {
                    p.max_violation = viol;
                    p.witnesses.push(format!("f(empty) = {:.12}", vals[0]));
                }
            }),
            Property::Modular => scan_masks(full, threads, |m, p| {
                let want: f64 = vals[0]
                    + (0..n)
                        .filter(|v| m >> v & 1 == 1)
                        .map(|v| vals[1 << v] - vals[0])
                        .sum::<f64>();
                let viol = (vals[m as usize] - want).abs();
                if viol > tol + tol * n as f64 {
                    p.max_violation = p.max_violation.max(viol);
                    if p.witnesses.len() < WITNESS_CAP {
                        p.witnesses.push(format!(
                            "A={}: f = {:.12}, singleton sum = {:.12}",
                            set_str(&ground, m),
                            vals[m as usize],
                            want
                        ));
                    }
                }
            }),
        };
        out.push(report(prop.name(), partial));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Surplus
// ---------------------------------------------------------------------------

/// Surplus (absolute redundancy) `S_f(A) = Σ_{a∈A} f(a) − f(A)`;
/// nonnegative for normalized submodular f and immune to modular shifts.
pub fn surplus(f: &SetFunctionHandle, a: &Subset) -> Result<f64> {
    let ground = f.ground().clone();
    let mut singles = 0.0;
    for v in a.iter() {
        singles += f.eval(&Subset::from_ids(&ground, &[v])?)?;
    }
    Ok(singles - f.eval(a)?)
}

/// Grouped surplus `I_f(A₁;…;A_m) = Σ f(Aᵢ) − f(∪Aᵢ)` over pairwise disjoint
/// parts; with singleton parts this reduces to [`surplus`].
pub fn grouped_surplus(f: &SetFunctionHandle, parts: &[Subset]) -> Result<f64> {
    let ground = f.ground().clone();
    let mut union = Subset::empty(&ground);
    let mut sum = 0.0;
    for (i, part) in parts.iter().enumerate() {
        if !part.is_disjoint(&union) {
            return Err(DsfError::InvalidArgument(format!("part {i} overlaps an earlier part")));
        }
        union = union.union(part);
        sum += f.eval(part)?;
    }
    Ok(sum - f.eval(&union)?)
}

/// True iff f is modular at B: f(B) equals the sum of its singleton values
/// within tolerance.
pub fn is_modular_at(f: &SetFunctionHandle, b: &Subset) -> Result<bool> {
    let s = surplus(f, b)?;
    let tol = f.tolerance() * (b.len() as f64 + 1.0);
    Ok(s.abs() <= tol)
}

// ---------------------------------------------------------------------------
// (A,B,C)-functions and f̂_k membership
// ---------------------------------------------------------------------------

/// Classification returned by [`check_abc_function`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AbcClass {
    /// At least one defining equality fails.
    None,
    /// All six equalities hold but the triple union value is 0.
    Abc,
    /// All six equalities hold and f(A∪B∪C) > 0.
    Strong,
}

/// Checks the six (A,B,C)-function equalities
/// f(A∪B∪C) = f(A∪B) = f(B∪C) = f(C∪A) = f(A)+f(B) = f(B)+f(C) = f(C)+f(A).
pub fn check_abc_function(
    f: &SetFunctionHandle,
    a: &Subset,
    b: &Subset,
    c: &Subset,
) -> Result<AbcClass> {
    for (i, p) in [a, b, c].iter().enumerate() {
        if p.is_empty() {
            return Err(DsfError::InvalidArgument(format!("part {i} is empty")));
        }
    }
    if !a.is_disjoint(b) || !b.is_disjoint(c) || !a.is_disjoint(c) {
        return Err(DsfError::InvalidArgument("parts must be pairwise disjoint".into()));
    }
    let tol = f.tolerance() * 4.0;
    let (fa, fb, fc) = (f.eval(a)?, f.eval(b)?, f.eval(c)?);
    let union = f.eval(&a.union(b).union(c))?;
    let pair_unions = [f.eval(&a.union(b))?, f.eval(&b.union(c))?, f.eval(&c.union(a))?];
    let pair_sums = [fa + fb, fb + fc, fc + fa];
    let all_equal = pair_unions
        .iter()
        .chain(pair_sums.iter())
        .all(|&x| (x - union).abs() <= tol);
    if !all_equal {
        return Ok(AbcClass::None);
    }
    // implied by the equalities; guards against tolerance stacking
    if (fa - fb).abs() > 8.0 * tol + crate::FLOAT_TOL || (fb - fc).abs() > 8.0 * tol + crate::FLOAT_TOL {
        return Err(DsfError::InvalidArgument(
            "abc equalities hold but singleton-part values disagree (inconsistent tolerances)".into(),
        ));
    }
    Ok(if union > tol + crate::FLOAT_TOL { AbcClass::Strong } else { AbcClass::Abc })
}

/// Checks membership in the f̂_k structural family: f(V) > 0 and the strong
/// (A,B,C) conditions at every node of the recursive 3-ary partition of the
/// 3^k elements (k ≤ 2 by default cap).
pub fn check_fk_membership(f: &SetFunctionHandle, k: usize) -> Result<VerificationReport> {
    if k == 0 || k > 2 {
        return Err(DsfError::InvalidArgument(format!("k must be 1 or 2, got {k}")));
    }
    let n = 3usize.pow(k as u32);
    if f.ground().size() != n {
        return Err(DsfError::InvalidArgument(format!(
            "ground size {} does not match 3^{k} = {n}",
            f.ground().size()
        )));
    }
    let ground = f.ground().clone();
    let mut witnesses = Vec::new();
    let mut checked = 0u64;
    let full = Subset::full(&ground);
    checked += 1;
    if !(f.eval(&full)? > f.tolerance()) {
        witnesses.push(format!("f(V) = {:.12} is not positive", f.eval(&full)?));
    }
    // every internal node of the 3-ary partition tree: blocks of size 3^j
    for level in (1..=k).rev() {
        let span = 3usize.pow(level as u32);
        let child = span / 3;
        for start in (0..n).step_by(span) {
            let block = |i: usize| -> Result<Subset> {
                Subset::from_ids(&ground, &(start + i * child..start + (i + 1) * child).collect::<Vec<_>>())
            };
            let (a, b, c) = (block(0)?, block(1)?, block(2)?);
            checked += 1;
            if check_abc_function(f, &a, &b, &c)? != AbcClass::Strong {
                if witnesses.len() < WITNESS_CAP {
                    witnesses.push(format!("triple ({a:?}, {b:?}, {c:?}) is not strong-(A,B,C)"));
                }
            }
        }
    }
    Ok(VerificationReport {
        property: format!("fk_membership_k{k}"),
        pass: witnesses.is_empty(),
        max_violation: if witnesses.is_empty() { 0.0 } else { 1.0 },
        witnesses,
        subsets_checked: checked,
    })
}

// ---------------------------------------------------------------------------
// Antitone sampling
// ---------------------------------------------------------------------------

/// Samples the cross-difference inequality
/// ψ(x+ε·1ᵢ) + ψ(x+ε·1ⱼ) ≥ ψ(x+ε·1ᵢ+ε·1ⱼ) + ψ(x) for random nonneg x and
/// i ≠ j, plus componentwise antitonicity of the input gradient along random
/// monotone pairs x ≤ y.
pub fn antitone_cross_differences(
    f: &DsfModel<f64>,
    samples: usize,
    epsilon: f64,
    seed: u64,
) -> Result<VerificationReport> {
    if !(epsilon > 0.0) {
        return Err(DsfError::InvalidArgument(format!("epsilon must be > 0, got {epsilon}")));
    }
    let n = f.ground().size();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut witnesses = Vec::new();
    let mut max_violation = 0.0f64;
    let mut checked = 0u64;
    let psi = |x: &[f64]| f.concave_extension(x);
    for _ in 0..samples {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0)).collect();
        let i = rng.gen_range(0..n);
        let mut j = rng.gen_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let bump = |x: &[f64], ks: &[usize]| {
            let mut y = x.to_vec();
            for &k in ks {
                y[k] += epsilon;
            }
            y
        };
        let base = psi(&x)?;
        let viol = psi(&bump(&x, &[i, j]))? + base - psi(&bump(&x, &[i]))? - psi(&bump(&x, &[j]))?;
        checked += 1;
        let tol = 1e-9 * (1.0 + base.abs());
        if viol > tol {
            max_violation = max_violation.max(viol);
            if witnesses.len() < WITNESS_CAP {
                witnesses.push(format!("cross difference {viol:.3e} > 0 at x={x:?}, i={i}, j={j}"));
            }
        }
    }
    // gradient antitonicity on monotone pairs
    for _ in 0..samples / 10 {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.5)).collect();
        let y: Vec<f64> = x.iter().map(|&xi| xi + rng.gen_range(0.0..1.0)).collect();
        let (gx, _) = f.gradient_input(&x)?;
        let (gy, _) = f.gradient_input(&y)?;
        checked += 1;
        for e in 0..n {
            let viol = gy[e] - gx[e];
            if viol > 1e-9 * (1.0 + gx[e].abs()) {
                max_violation = max_violation.max(viol);
                if witnesses.len() < WITNESS_CAP {
                    witnesses.push(format!("gradient entry {e} grows by {viol:.3e} from x={x:?} to y={y:?}"));
                }
            }
        }
    }
    Ok(VerificationReport {
        property: "antitone_cross_differences".into(),
        pass: witnesses.is_empty(),
        witnesses,
        max_violation,
        subsets_checked: checked,
    })
}

// ---------------------------------------------------------------------------
// Two-layer SCMM classifier and expansion
// ---------------------------------------------------------------------------

/// Outcome of [`classify_two_layer_scmm`] for
/// g(A) = φ(min(|A∩{a,b,c}|,2) + min(|A∩{d,e,f}|,2)).
#[derive(Clone, Debug)]
pub enum ScmmClassification {
    /// Both linear-inequality coefficients are nonnegative; g is an SCMM.
    IsScmm {
        /// c₁ = −φ(1) + 3.5φ(2) − 4φ(3) + 1.5φ(4)
        c1: f64,
        /// c₂ = 2φ(1) + φ(2) − 4φ(3) + 2φ(4)
        c2: f64,
    },
    /// An inequality fails; g is not an SCMM.
    NotScmm {
        /// c₁ as above.
        c1: f64,
        /// c₂ as above.
        c2: f64,
        /// Which inequality is violated.
        violated: String,
    },
}

fn classifier_coefficients(phi: &ConcaveUnit<f64>) -> Result<(f64, f64)> {
    if phi.curvature() == Curvature::Convex {
        return Err(DsfError::InvalidArgument("classifier requires a concave (or linear) unit".into()));
    }
    let p: Vec<f64> = (1..=4).map(|k| phi.value(k as f64)).collect::<Result<_>>()?;
    let c1 = -p[0] + 3.5 * p[1] - 4.0 * p[2] + 1.5 * p[3];
    let c2 = 2.0 * p[0] + p[1] - 4.0 * p[2] + 2.0 * p[3];
    Ok((c1, c2))
}

/// Decides whether g(A) = φ(min(|A∩{a,b,c}|,2) + min(|A∩{d,e,f}|,2)) is an
/// SCMM: it is iff c₁ ≥ 0 and c₂ ≥ 0.
pub fn classify_two_layer_scmm(phi: &ConcaveUnit<f64>) -> Result<ScmmClassification> {
    let (c1, c2) = classifier_coefficients(phi)?;
    if c1 >= 0.0 && c2 >= 0.0 {
        Ok(ScmmClassification::IsScmm { c1, c2 })
    } else {
        let violated = if c1 < 0.0 {
            format!("c1 = -phi(1)+3.5*phi(2)-4*phi(3)+1.5*phi(4) = {c1} < 0")
        } else {
            format!("c2 = 2*phi(1)+phi(2)-4*phi(3)+2*phi(4) = {c2} < 0")
        };
        Ok(ScmmClassification::NotScmm { c1, c2, violated })
    }
}

/// The weighted terms of the explicit SCMM expansion of the two-layer family
/// (each term is concave-of-modular over the canonical a..f ground set).
pub fn two_layer_expansion_terms(phi: &ConcaveUnit<f64>) -> Result<Vec<(f64, SetFunctionHandle)>> {
    let (c1, c2) = classifier_coefficients(phi)?;
    if c1 < 0.0 || c2 < 0.0 {
        return Err(DsfError::InvalidArgument(
            "expansion only exists when the classifier returns is_scmm".into(),
        ));
    }
    let p: Vec<f64> = (1..=4).map(|k| phi.value(k as f64)).collect::<Result<_>>()?;
    let d = -p[1] + 2.0 * p[2] - p[3]; // ≥ 0 by concavity
    let e = p[3] - p[2]; // ≥ 0 by monotonicity
    let ground = GroundSet::alphabetic(6)?;
    let card_trunc = |cap: usize, name: &str| {
        let cap = cap as i64;
        SetFunctionHandle::new_integral(&ground, name, move |a| (a.len() as i64).min(cap))
    };
    let block_trunc = |cap: usize, name: &str| {
        let cap = cap as i64;
        SetFunctionHandle::new_integral(&ground, name, move |a| {
            let b1 = [0usize, 1, 2].iter().filter(|&&v| a.contains(v)).count() as i64;
            let b2 = [3usize, 4, 5].iter().filter(|&&v| a.contains(v)).count() as i64;
            b1.min(cap) + b2.min(cap)
        })
    };
    let mut terms = vec![
        (c2, card_trunc(1, "min(|A|,1)")),
        (c1, card_trunc(2, "min(|A|,2)")),
        (d, block_trunc(1, "block truncations at 1")),
        (e, block_trunc(2, "block truncations at 2")),
    ];
    // the six asymmetric modular truncations min(pi . 1_A, 1)
    let pis: [[f64; 6]; 6] = [
        [1.0, 1.0, 0.0, 0.5, 0.5, 0.5],
        [1.0, 0.0, 1.0, 0.5, 0.5, 0.5],
        [0.0, 1.0, 1.0, 0.5, 0.5, 0.5],
        [0.5, 0.5, 0.5, 1.0, 1.0, 0.0],
        [0.5, 0.5, 0.5, 1.0, 0.0, 1.0],
        [0.5, 0.5, 0.5, 0.0, 1.0, 1.0],
    ];
    for (i, pi) in pis.into_iter().enumerate() {
        let h = SetFunctionHandle::new(&ground, format!("min(pi{i} . 1_A, 1)"), move |a| {
            a.iter().map(|v| pi[v]).sum::<f64>().min(1.0)
        });
        terms.push((d, h));
    }
    Ok(terms)
}

/// Materializes the SCMM expansion of the two-layer family as a single
/// handle; equals φ(min(|A∩{a,b,c}|,2)+min(|A∩{d,e,f}|,2)) on all 64 subsets.
pub fn expand_two_layer_scmm(phi: &ConcaveUnit<f64>) -> Result<SetFunctionHandle> {
    let terms = two_layer_expansion_terms(phi)?;
    let ground = terms[0].1.ground().clone();
    Ok(SetFunctionHandle::new(&ground, "two_layer_scmm_expansion", move |a| {
        terms.iter().map(|(w, h)| w * h.eval_unchecked(a)).sum()
    }))
}

// ---------------------------------------------------------------------------
// Symmetrization over the two three-element blocks
// ---------------------------------------------------------------------------

/// The five values determining a block-symmetric function on six elements:
/// Eh(1,0), Eh(2,0), Eh(1,1), Eh(2,1), Eh(2,2), as exact rationals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiveVector {
    /// Values at the canonical unordered profiles, in the order above.
    pub values: [Ratio<i64>; 5],
}

/// Unordered block profiles indexing [`FiveVector::values`].
pub const FIVE_PROFILES: [(usize, usize); 5] = [(1, 0), (2, 0), (1, 1), (2, 1), (2, 2)];

/// Best rational approximation of x with denominator ≤ 10^4, accepted only
/// when it reproduces x within 1e−9 (continued-fraction convergents).
pub fn f64_to_ratio(x: f64) -> Option<Ratio<i64>> {
    if !x.is_finite() {
        return None;
    }
    let (mut p0, mut q0, mut p1, mut q1) = (1i64, 0i64, x.floor() as i64, 1i64);
    let mut frac = x - x.floor();
    for _ in 0..64 {
        if frac.abs() < 1e-12 {
            break;
        }
        let a = 1.0 / frac;
        let ai = a.floor();
        frac = a - ai;
        let ai = ai as i64;
        let p2 = ai.checked_mul(p1)?.checked_add(p0)?;
        let q2 = ai.checked_mul(q1)?.checked_add(q0)?;
        if q2 > 10_000 {
            break;
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
    }
    let r = Ratio::new(p1, q1);
    let back = *r.numer() as f64 / *r.denom() as f64;
    if (back - x).abs() <= 1e-9 {
        Some(r)
    } else {
        None
    }
}

fn masks_with_popcount(bits: &[usize], count: usize) -> Vec<u64> {
    let mut out = Vec::new();
    for m in 0..1u64 << bits.len() {
        if m.count_ones() as usize == count {
            let mut mask = 0u64;
            for (i, &b) in bits.iter().enumerate() {
                if m >> i & 1 == 1 {
                    mask |= 1 << b;
                }
            }
            out.push(mask);
        }
    }
    out
}

/// Applies the block-symmetrization operator E (average over permutations of
/// {a,b,c} and {d,e,f} and the block swap) and reads the five canonical
/// values as exact rationals. Errors when h is not rational-valued enough to
/// reconstruct exactly.
pub fn symmetrize_five_vector(h: &SetFunctionHandle) -> Result<FiveVector> {
    if h.ground().size() != 6 {
        return Err(DsfError::InvalidArgument(format!(
            "symmetrization needs the canonical 6-element ground set, got size {}",
            h.ground().size()
        )));
    }
    let ground = h.ground().clone();
    let avg = |n1: usize, n2: usize| -> f64 {
        let ms1 = masks_with_popcount(&[0, 1, 2], n1);
        let ms2 = masks_with_popcount(&[3, 4, 5], n2);
        let mut total = 0.0;
        for &m1 in &ms1 {
            for &m2 in &ms2 {
                total += h.eval_unchecked(&Subset::from_mask(&ground, m1 | m2));
            }
        }
        total / (ms1.len() * ms2.len()) as f64
    };
    let mut values = [Ratio::new(0, 1); 5];
    for (i, &(n1, n2)) in FIVE_PROFILES.iter().enumerate() {
        let x = 0.5 * (avg(n1, n2) + avg(n2, n1));
        values[i] = f64_to_ratio(x).ok_or_else(|| {
            DsfError::InvalidArgument(format!(
                "value {x} at profile ({n1},{n2}) has no small exact rational form"
            ))
        })?;
    }
    Ok(FiveVector { values })
}

// ---------------------------------------------------------------------------
// k-multi-submodularity
// ---------------------------------------------------------------------------

/// Exhaustively checks the lattice inequality
/// f(X⃗) + f(Y⃗) ≥ f(X⃗∪Y⃗) + f(X⃗∩Y⃗) over the product of the argument
/// powersets (union/intersection taken componentwise).
pub fn verify_lattice_submodular(
    grounds: &[Arc<GroundSet>],
    eval: &(dyn Fn(&[Subset]) -> f64 + Sync),
    tol: f64,
) -> Result<VerificationReport> {
    let sizes: Vec<usize> = grounds.iter().map(|g| g.size()).collect();
    let total: usize = sizes.iter().sum();
    if total > 12 {
        return Err(DsfError::CapExceeded(format!(
            "combined argument domain of {total} elements exceeds the lattice cap of 12"
        )));
    }
    let split = |mask: u64| -> Vec<Subset> {
        let mut subs = Vec::with_capacity(grounds.len());
        let mut off = 0;
        for (g, &s) in grounds.iter().zip(&sizes) {
            subs.push(Subset::from_mask(g, mask >> off & ((1u64 << s) - 1)));
            off += s;
        }
        subs
    };
    let full = 1u64 << total;
    let table: Vec<f64> = (0..full).map(|m| eval(&split(m))).collect();
    let mut witnesses = Vec::new();
    let mut max_violation = 0.0f64;
    let mut checked = 0u64;
    for mx in 0..full {
        for my in mx..full {
            checked += 1;
            let viol = table[(mx | my) as usize] + table[(mx & my) as usize]
                - table[mx as usize]
                - table[my as usize];
            if viol > tol {
                max_violation = max_violation.max(viol);
                if witnesses.len() < WITNESS_CAP {
                    witnesses.push(format!(
                        "X={:?}, Y={:?}: violation {viol:.3e}",
                        split(mx),
                        split(my)
                    ));
                }
            }
        }
    }
    Ok(VerificationReport {
        property: "lattice_submodular".into(),
        pass: witnesses.is_empty(),
        witnesses,
        max_violation,
        subsets_checked: checked,
    })
}

/// Exhaustive k-multi-submodularity check of a layered model under a layer
/// assignment; with k = 1 this is exactly the submodular check.
pub fn verify_k_multi_submodular(
    f: &DsfModel<f64>,
    asg: &MultivariateAssignment<f64>,
) -> Result<VerificationReport> {
    let mut grounds = vec![f.ground().clone()];
    for &layer in &asg.sigma[1..] {
        grounds.push(f.layer_ground(layer)?);
    }
    // probe once so argument errors surface as Err rather than a panic below
    let probe: Vec<Subset> = grounds.iter().map(Subset::empty).collect();
    f.evaluate_multivariate(asg, &probe[0], &probe[1..])?;
    let eval = move |subs: &[Subset]| {
        f.evaluate_multivariate(asg, &subs[0], &subs[1..]).expect("assignment pre-validated")
    };
    verify_lattice_submodular(&grounds, &eval, crate::FLOAT_TOL)
}
