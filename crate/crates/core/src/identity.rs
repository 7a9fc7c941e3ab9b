//! Implicit parametrizations of a map by jets of its conjugate: the basic
//! identity of a finitely nondegenerate map, its derivatives along the
//! tangent coordinate fields, their propagation down the chain of iterated
//! Segre substitutions, the finite jet comparison that propagation
//! justifies, and the analogous parametrization for transversal maps one
//! derivative short of nondegenerate.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;

use crate::degeneracy::{degeneracy_at_origin, degeneracy_system};
use crate::linalg::{QiMatrix, RankTracker, SeriesMatrix};
use crate::manifold::NormalManifold;
use crate::map::{levi_coefficients, FormalMap};
use crate::scalar::GaussianRational;
use crate::segre::{finite_type_test, segre_map, SegreMap};
use crate::series::{identity_images, SeriesVector, TruncatedSeries};
use crate::solve::implicit_solve;
use crate::symbols::{FamilyKind, FamilySpec, SymbolContext};
use crate::vars::{multiindices_of_degree, multiindices_up_to, Exponents, VariableBlocks};
use crate::{Error, Result};

/// A solved basic identity: each map component equals, modulo the
/// complexified ideal of the source, a universal series `psi` in the source
/// coordinates and the jet symbols of the conjugated components. `psi`
/// lives over the symbol context and carries no unknowns.
#[derive(Debug)]
pub struct BasicIdentity {
    pub context: SymbolContext,
    pub psi: SeriesVector,
    pub report: BasicIdentityReport,
}

/// The data behind a solved basic identity, including a canonical text
/// rendering. The certificate lists everything the solution depends on,
/// so two maps with the same jets up to the degeneracy order receive
/// byte-identical certificates; verification orders are deliberately left
/// out of it.
#[derive(Clone, Debug)]
pub struct BasicIdentityReport {
    /// Order at which the derivative spans of the map stabilize.
    pub k0: u32,
    /// The independent derivative rows used for the solve, as (multiindex,
    /// generator) pairs in the order they entered the span.
    pub rows: Vec<(Vec<u32>, usize)>,
    /// Jets of the conjugated components at the origin through order `k0`,
    /// the only map data the solution uses.
    pub jets: Vec<(usize, Vec<u32>, GaussianRational)>,
    /// Determinant of the linearization in the unknowns at the origin.
    pub jacobian_det: GaussianRational,
    /// Order to which the implicit solve was carried.
    pub solved_order: u32,
    /// Order through which the components minus the evaluated solution
    /// reduced to zero in the ideal.
    pub residual_order: u32,
    pub certificate: String,
}

/// Solves the pulled-back defining relations of the target for the map
/// components. Requires the map to be finitely nondegenerate with spans
/// stabilizing by `kmax`. The jet symbols are allocated through order
/// `k0 + jet_margin`, so derivative identities up to order `jet_margin`
/// can be formed later; the solution itself only ever uses jets through
/// `k0`.
pub fn basic_identity(
    source: &NormalManifold,
    target: &NormalManifold,
    map: &FormalMap,
    kmax: u32,
    jet_margin: u32,
) -> Result<BasicIdentity> {
    let sys = degeneracy_system(source, target, map, kmax)?;
    let rep = &sys.report;
    if !rep.stabilized {
        return Err(Error::HypothesisNotMet {
            context: "basic identity",
            detail: format!("derivative spans still growing at order {}", rep.kmax),
        });
    }
    if rep.s != 0 {
        return Err(Error::HypothesisNotMet {
            context: "basic identity",
            detail: format!(
                "map is ({}, {})-degenerate; the solve needs degeneracy zero",
                rep.k0, rep.s
            ),
        });
    }
    let np = rep.target_ambient;
    let rows: Vec<(Vec<u32>, usize)> = rep
        .entries
        .iter()
        .filter(|e| e.independent)
        .map(|e| (e.alpha.clone(), e.generator))
        .collect();
    debug_assert_eq!(rows.len(), np);
    let k0 = rep.k0;

    // Shifts must cover the whole allocated family so that every symbol,
    // including the margin consumed by later derivatives, is centered; the
    // report only lists the jets through k0 that the solution depends on.
    let full_jets = jet_values(map.anti(), k0 + jet_margin)?;
    let shift_table = jet_lookup(&full_jets);
    let jets = jet_values(map.anti(), k0)?;
    let shift = |comp: usize, beta: &[u32]| -> GaussianRational {
        shift_table.get(&(comp, beta.to_vec())).cloned().unwrap_or_else(GaussianRational::zero)
    };
    let sc = SymbolContext::new(
        source,
        np,
        &[FamilySpec {
            name: "jbar",
            kind: FamilyKind::Anti,
            components: np,
            max_order: k0 + jet_margin,
            shift: &shift,
        }],
    )?;
    let fam = sc.family_index("jbar")?;

    // Target generators composed with the unknowns and the jet symbols.
    let assigns = pullback_assigns(&sc, fam, target.full_ctx(), target.cr_dim())?;
    let rho_sym: Vec<TruncatedSeries> = (0..target.codim())
        .map(|l| target.rho().get(l).substitute(sc.ctx(), &assigns))
        .collect::<Result<_>>()?;

    let ders: Vec<_> = (0..source.cr_dim())
        .map(|k| sc.cr_derivation(source, k))
        .collect::<Result<_>>()?;
    let mut phis = Vec::with_capacity(np);
    for (alpha, generator) in &rows {
        let mut phi = rho_sym[*generator].clone();
        for (j, &count) in alpha.iter().enumerate() {
            for _ in 0..count {
                phi = ders[j].apply(&phi)?;
            }
        }
        phis.push(phi);
    }

    let mut jac = QiMatrix::zero(np, np);
    for (r, phi) in phis.iter().enumerate() {
        for c in 0..np {
            let e = Exponents::unit(sc.ctx().len(), sc.x_var(c)?);
            jac.set(r, c, phi.coeff(&e));
        }
    }
    let jacobian_det = jac.det()?;

    let solved_order = phis.iter().map(TruncatedSeries::order).min().unwrap_or(0);
    let system = SeriesVector::new(phis)?;
    let solved = implicit_solve(&system, "x", solved_order)?;
    let psi = SeriesVector::new(
        solved
            .iter()
            .map(|c| c.embed(sc.ctx()))
            .collect::<Result<Vec<_>>>()?,
    )?;

    let residual_order =
        verify_residual(source, map, &sc, &psi, "basic identity")?;

    let mut certificate = String::new();
    let _ = writeln!(certificate, "basic identity certificate");
    let _ = writeln!(certificate, "degeneracy order: {k0}");
    let _ = writeln!(certificate, "rows:");
    for (alpha, generator) in &rows {
        let _ = writeln!(certificate, "  fields {alpha:?}, generator {generator}");
    }
    let _ = writeln!(certificate, "conjugate jets at the origin:");
    render_jets(&mut certificate, &jets);
    let _ = writeln!(certificate, "jacobian determinant: {jacobian_det}");
    let _ = writeln!(certificate, "solved to order: {solved_order}");
    render_solution(&mut certificate, &psi);

    let report = BasicIdentityReport {
        k0,
        rows,
        jets,
        jacobian_det,
        solved_order,
        residual_order,
        certificate,
    };
    Ok(BasicIdentity { context: sc, psi, report })
}

impl BasicIdentity {
    /// Derivatives of the solved identity along the coordinate vector
    /// fields tangent to the complexification, indexed by multiindices over
    /// the source coordinates through `max_order`. The entry for alpha
    /// parametrizes the alpha-th partial derivative of the map by jets of
    /// order up to `k0 + |alpha|`; forming it consumes the jet margin the
    /// identity was built with.
    pub fn derivative_identities(
        &self,
        source: &NormalManifold,
        max_order: u32,
    ) -> Result<BTreeMap<Vec<u32>, SeriesVector>> {
        let fam = self.context.family_index("jbar")?;
        let available = self.context.family_max_order(fam);
        let needed = self.report.k0 + max_order;
        if available < needed {
            return Err(Error::InsufficientOrder {
                context: "derivative identities",
                needed,
                available,
            });
        }
        let fields = self.context.normal_derivations(source)?;
        let dim = fields.len();
        let mut table = BTreeMap::new();
        table.insert(vec![0u32; dim], self.psi.clone());
        for degree in 1..=max_order {
            for alpha in multiindices_of_degree(dim, degree) {
                let j = alpha.iter().rposition(|&a| a > 0).expect("positive degree");
                let mut parent = alpha.clone();
                parent[j] -= 1;
                let base = table.get(&parent).expect("lower degree already filled");
                let next = base.try_map(|c| fields[j].apply(c))?;
                table.insert(alpha, next);
            }
        }
        Ok(table)
    }
}

/// Parametrizations of the map derivatives along one chain of Segre
/// substitutions: the entry for alpha is a series vector over the chain
/// context of `level + 1` blocks that agrees with the alpha-th derivative
/// of the map composed with that chain map.
#[derive(Clone, Debug)]
pub struct ChainParametrization {
    pub level: usize,
    pub table: BTreeMap<Vec<u32>, SeriesVector>,
}

/// Propagates the solved identity down the chain maps: level 0 restricts it
/// to the first chain, and each further level substitutes the conjugate of
/// the previous level for the jet symbols. Level `k` retains derivative
/// multiindices through `max_alpha + (levels - k) * k0`, the range consumed
/// by the next substitution.
pub fn segre_propagation(
    source: &NormalManifold,
    identity: &BasicIdentity,
    levels: usize,
    max_alpha: u32,
) -> Result<Vec<ChainParametrization>> {
    let k0 = identity.report.k0;
    let n = source.cr_dim();
    let dim = n + source.codim();
    let depth = levels as u32;
    let psis = identity.derivative_identities(source, max_alpha + depth * k0)?;
    let sc = &identity.context;
    let fam = sc.family_index("jbar")?;

    let chains: Vec<_> = (0..=levels)
        .map(|k| segre_map(source, k + 1))
        .collect::<Result<_>>()?;

    let mut out: Vec<ChainParametrization> = Vec::with_capacity(levels + 1);
    for k in 0..=levels {
        let range = max_alpha + (depth - k as u32) * k0;
        let ctx = &chains[k].ctx;
        let work = sc.order().max(1);
        let zero = TruncatedSeries::zero(ctx, work);
        let mut assigns = vec![zero.clone(); sc.ctx().len()];
        let (z_off, _) = sc.ctx().block("z")?;
        if k == 0 {
            for i in 0..n {
                assigns[z_off + i] = TruncatedSeries::variable(ctx, work, i)?;
            }
        } else {
            let bar_map: Vec<usize> = (0..chains[k - 1].ctx.len()).map(|i| i + n).collect();
            let next = chain_at_order(&chains[k], work)?;
            let prev_comps = chain_at_order(&chains[k - 1], work)?;
            let (w_off, _) = sc.ctx().block("w")?;
            let (chi_off, _) = sc.ctx().block("chi")?;
            let (tau_off, _) = sc.ctx().block("tau")?;
            for i in 0..n {
                assigns[z_off + i] = next[i].clone();
                assigns[chi_off + i] = prev_comps[i].conj_coefficients().remap(ctx, &bar_map)?;
            }
            for l in 0..dim - n {
                assigns[w_off + l] = next[n + l].clone();
                assigns[tau_off + l] =
                    prev_comps[n + l].conj_coefficients().remap(ctx, &bar_map)?;
            }
            let prev = &out[k - 1];
            let prev_range = max_alpha + (depth - (k as u32 - 1)) * k0;
            for comp in 0..sc.x_len() {
                for beta in sc.betas(fam).to_vec() {
                    let degree: u32 = beta.iter().sum();
                    if degree > prev_range {
                        continue;
                    }
                    let entry = prev
                        .table
                        .get(&beta)
                        .expect("previous level covers the consumed jet range");
                    let mut image = entry
                        .get(comp)
                        .conj_coefficients()
                        .remap(ctx, &bar_map)?;
                    let var = sc.sym_var(fam, comp, &beta)?;
                    let c = sc.shift_of(var);
                    if !c.is_zero() {
                        image = image.sub(&TruncatedSeries::constant(ctx, image.order(), c))?;
                    }
                    assigns[var] = image;
                }
            }
        }
        let mut table = BTreeMap::new();
        for alpha in multiindices_up_to(dim, range) {
            let entry = psis
                .get(&alpha)
                .expect("derivative table covers the requested range");
            table.insert(alpha, entry.substitute(ctx, &assigns)?);
        }
        out.push(ChainParametrization { level: k, table });
    }
    Ok(out)
}

/// One verified propagation equation: the parametrized derivative at this
/// level and multiindex agreed with the directly composed derivative of the
/// map through the recorded order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropagationCheck {
    pub level: usize,
    pub alpha: Vec<u32>,
    pub order: u32,
}

#[derive(Clone, Debug)]
pub struct PropagationReport {
    pub k0: u32,
    pub levels: usize,
    pub max_alpha: u32,
    pub checks: Vec<PropagationCheck>,
}

/// Builds the chain parametrizations for the map and verifies each against
/// the derivative of the map composed directly with the chain, for all
/// multiindices through `max_alpha` at every level through `levels`. Any
/// coefficient disagreement is an error.
pub fn propagation_check(
    source: &NormalManifold,
    target: &NormalManifold,
    map: &FormalMap,
    kmax: u32,
    levels: usize,
    max_alpha: u32,
) -> Result<PropagationReport> {
    let pre = degeneracy_at_origin(source, target, map, kmax)?;
    if !pre.stabilized || pre.s != 0 {
        return Err(Error::HypothesisNotMet {
            context: "chain propagation",
            detail: format!("degeneracy ({}, {}) with stabilized = {}", pre.k0, pre.s, pre.stabilized),
        });
    }
    let margin = max_alpha + levels as u32 * pre.k0;
    let identity = basic_identity(source, target, map, kmax, margin)?;
    let tables = segre_propagation(source, &identity, levels, max_alpha)?;

    let dim = source.cr_dim() + source.codim();
    let mut checks = Vec::new();
    for parametrization in &tables {
        let k = parametrization.level;
        let chain = segre_map(source, k + 1)?;
        let chain_assigns = chain_at_order(&chain, map.order().max(1))?;
        for alpha in multiindices_up_to(dim, max_alpha) {
            let entry = parametrization
                .table
                .get(&alpha)
                .expect("propagation covers the checked range");
            let mut verified = u32::MAX;
            for i in 0..map.holo().len() {
                let direct = map
                    .holo()
                    .get(i)
                    .differentiate_multi(&alpha)?
                    .substitute(&chain.ctx, &chain_assigns)?;
                let parametrized = entry.get(i);
                let m = direct.order().min(parametrized.order());
                let diff = direct.with_order(m)?.sub(&parametrized.with_order(m)?)?;
                if !diff.is_zero_series() {
                    return Err(Error::ResidualNonzero { context: "chain propagation" });
                }
                verified = verified.min(m);
            }
            checks.push(PropagationCheck { level: k, alpha, order: verified });
        }
    }
    Ok(PropagationReport { k0: identity.report.k0, levels, max_alpha, checks })
}

/// Outcome of comparing two maps against the determination order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JetVerdict {
    /// Jets agree through the determination order and through the whole
    /// comparable range, so the maps coincide.
    DeterminedEqual,
    /// Jets differ at or below the determination order.
    Distinct,
    /// No difference found, but the data ends before the determination
    /// order is reached.
    Inconclusive,
}

/// The earliest coefficient at which two maps disagree, ordered by total
/// degree, then component, then exponents.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JetDifference {
    pub order: u32,
    pub component: usize,
    pub exponents: Vec<u32>,
}

#[derive(Clone, Debug)]
pub struct JetComparison {
    /// Stabilization order shared by the two maps (the larger of the two).
    pub k0: u32,
    /// First chain level whose generic rank fills the source ambient space.
    pub span_level: usize,
    /// Jet order that determines such a map completely.
    pub threshold: u32,
    /// Order through which the two maps could be compared.
    pub compared_order: u32,
    pub first_difference: Option<JetDifference>,
    pub verdict: JetVerdict,
}

/// Decides whether two finitely nondegenerate maps into the same target
/// coincide, by comparing their coefficients against the determination
/// order: the span level of the source times the stabilization order.
pub fn jet_determination_check(
    source: &NormalManifold,
    target: &NormalManifold,
    a: &FormalMap,
    b: &FormalMap,
    kmax: u32,
    max_level: usize,
    seed: u64,
) -> Result<JetComparison> {
    if b.holo().len() != a.holo().len() {
        return Err(Error::DimensionMismatch {
            expected: a.holo().len(),
            found: b.holo().len(),
        });
    }
    let mut k0 = 0;
    for map in [a, b] {
        let rep = degeneracy_at_origin(source, target, map, kmax)?;
        if !rep.stabilized || rep.s != 0 {
            return Err(Error::HypothesisNotMet {
                context: "jet determination",
                detail: format!(
                    "degeneracy ({}, {}) with stabilized = {}; both maps must be finitely nondegenerate",
                    rep.k0, rep.s, rep.stabilized
                ),
            });
        }
        k0 = k0.max(rep.k0);
    }
    let ft = finite_type_test(source, max_level, seed)?;
    let span_level = match ft.type_index {
        Some(k) if ft.finite_type => k,
        _ => {
            return Err(Error::HypothesisNotMet {
                context: "jet determination",
                detail: "source chain ranks never fill the ambient space".to_string(),
            })
        }
    };
    let threshold = span_level as u32 * k0;
    let compared_order = a.order().min(b.order());

    let mut first: Option<JetDifference> = None;
    for i in 0..a.holo().len() {
        let fa = a.holo().get(i);
        let fb = b.holo().get(i);
        let mut offer = |e: &Exponents| {
            let degree: u32 = e.as_slice().iter().sum();
            if degree > compared_order || fa.coeff(e) == fb.coeff(e) {
                return;
            }
            let candidate = JetDifference {
                order: degree,
                component: i,
                exponents: e.as_slice().to_vec(),
            };
            let replace = match &first {
                None => true,
                Some(best) => {
                    (candidate.order, candidate.component, &candidate.exponents)
                        < (best.order, best.component, &best.exponents)
                }
            };
            if replace {
                first = Some(candidate);
            }
        };
        for (e, _) in fa.terms() {
            offer(e);
        }
        for (e, _) in fb.terms() {
            offer(e);
        }
    }

    let verdict = match &first {
        Some(diff) if diff.order <= threshold => JetVerdict::Distinct,
        Some(diff) => {
            return Err(Error::HypothesisNotMet {
                context: "jet determination",
                detail: format!(
                    "maps agree through the determining order {threshold} yet differ at order {}",
                    diff.order
                ),
            })
        }
        None if compared_order >= threshold => JetVerdict::DeterminedEqual,
        None => JetVerdict::Inconclusive,
    };
    Ok(JetComparison {
        k0,
        span_level,
        threshold,
        compared_order,
        first_difference: first,
        verdict,
    })
}

/// The solved identity for a transversal map into a hypersurface of one
/// more dimension that is exactly one derivative short of nondegenerate.
/// The missing derivative row is replaced by a determinant combination of
/// the conjugated relations, restricted to the normal slice.
#[derive(Debug)]
pub struct OneDegenerateIdentity {
    pub context: SymbolContext,
    pub psi: SeriesVector,
    pub report: OneDegenerateReport,
}

#[derive(Clone, Debug)]
pub struct OneDegenerateReport {
    pub k0: u32,
    /// Target gradient columns retained for the eliminating determinant.
    pub columns: Vec<usize>,
    /// The single column left over, carried into every minor.
    pub leftover: usize,
    /// The restricted determinant and its minors at the origin.
    pub delta_at_zero: GaussianRational,
    pub minors_at_zero: Vec<GaussianRational>,
    /// Determinant of the linearization block in the CR unknowns; equals
    /// the normal derivative power times the source Levi determinant up to
    /// sign for any map satisfying the hypotheses.
    pub determinant: GaussianRational,
    pub normal_derivative: GaussianRational,
    pub levi_product: GaussianRational,
    pub determinant_matches: bool,
    pub solved_order: u32,
    /// Order through which the determinant relation itself reduced to zero
    /// in the ideal on the actual map data.
    pub membership_order: u32,
    pub residual_order: u32,
    /// Jets of the conjugated components at the origin through order one.
    pub jets: Vec<(usize, Vec<u32>, GaussianRational)>,
    /// Jets of the components along the normal slice at the origin.
    pub slice_jets: Vec<(usize, Vec<u32>, GaussianRational)>,
    pub certificate: String,
}

/// Solves for the components of a transversal map of hypersurfaces into one
/// more dimension whose degeneracy is exactly one. Both sides must carry
/// invertible Levi forms for the eliminating determinant to be usable.
pub fn one_degenerate_identity(
    source: &NormalManifold,
    target: &NormalManifold,
    map: &FormalMap,
    kmax: u32,
) -> Result<OneDegenerateIdentity> {
    if source.codim() != 1 || target.codim() != 1 {
        return Err(Error::HypothesisNotMet {
            context: "one-degenerate identity",
            detail: "both manifolds must be hypersurfaces".to_string(),
        });
    }
    if target.ambient_dim() != source.ambient_dim() + 1 {
        return Err(Error::HypothesisNotMet {
            context: "one-degenerate identity",
            detail: format!(
                "target ambient dimension {} must exceed the source's {} by one",
                target.ambient_dim(),
                source.ambient_dim()
            ),
        });
    }
    let rep = degeneracy_at_origin(source, target, map, kmax)?;
    if !rep.stabilized || rep.s != 1 {
        return Err(Error::HypothesisNotMet {
            context: "one-degenerate identity",
            detail: format!(
                "degeneracy ({}, {}) with stabilized = {}; exactly one lost direction required",
                rep.k0, rep.s, rep.stabilized
            ),
        });
    }
    let tv = map.transversality();
    if !tv.transversal {
        return Err(Error::HypothesisNotMet {
            context: "one-degenerate identity",
            detail: "map is not transversal to the target".to_string(),
        });
    }

    let n = source.cr_dim();
    let tcr = target.cr_dim();
    let np = target.ambient_dim();
    let jets = jet_values(map.anti(), 1)?;
    let slice_jets = jet_values(map.holo(), 1)?;
    let anti_table = jet_lookup(&jets);
    let holo_table = jet_lookup(&slice_jets);
    let anti_shift = |comp: usize, beta: &[u32]| -> GaussianRational {
        anti_table.get(&(comp, beta.to_vec())).cloned().unwrap_or_else(GaussianRational::zero)
    };
    let holo_shift = |comp: usize, beta: &[u32]| -> GaussianRational {
        holo_table.get(&(comp, beta.to_vec())).cloned().unwrap_or_else(GaussianRational::zero)
    };

    // Stage one: the gradient relations over a context whose unknowns stand
    // for the component values, differentiated once and restricted to the
    // normal slice, where the determinant combination lives.
    let restricted = SymbolContext::new(
        source,
        np,
        &[FamilySpec {
            name: "jbar",
            kind: FamilyKind::Anti,
            components: np,
            max_order: 1,
            shift: &anti_shift,
        }],
    )?;
    let rfam = restricted.family_index("jbar")?;
    let q_assigns = pullback_assigns(&restricted, rfam, target.ctx(), tcr)?;
    let target_q = target.q().get(0);
    let (tz_off, _) = target.ctx().block("z")?;
    let ders: Vec<_> = (0..n)
        .map(|k| restricted.cr_derivation(source, k))
        .collect::<Result<_>>()?;
    let mut rows: Vec<Vec<TruncatedSeries>> = vec![Vec::with_capacity(tcr); n];
    for c in 0..tcr {
        let entry = target_q
            .differentiate(tz_off + c)?
            .substitute(restricted.ctx(), &q_assigns)?;
        for (j, der) in ders.iter().enumerate() {
            rows[j].push(der.apply(&entry)?);
        }
    }

    let mut tracker = RankTracker::new();
    let mut columns = Vec::new();
    let mut rejected = Vec::new();
    for c in 0..tcr {
        let value: Vec<GaussianRational> =
            (0..n).map(|j| rows[j][c].constant_term()).collect();
        if tracker.offer(&value) {
            columns.push(c);
        } else {
            rejected.push(c);
        }
    }
    if columns.len() != n || rejected.len() != 1 {
        return Err(Error::HypothesisNotMet {
            context: "one-degenerate identity",
            detail: format!(
                "first-order gradient derivatives have rank {} over {} columns, need a single leftover",
                columns.len(),
                tcr
            ),
        });
    }
    let leftover = rejected[0];

    let rctx = restricted.ctx();
    let mut slice = identity_images(rctx, restricted.order().max(1))?;
    let (chi_off, _) = rctx.block("chi")?;
    let (tau_off, _) = rctx.block("tau")?;
    let (w_off, _) = rctx.block("w")?;
    slice[chi_off] = TruncatedSeries::zero(rctx, restricted.order().max(1));
    slice[tau_off] = TruncatedSeries::variable(rctx, restricted.order().max(1), w_off)?;
    let mut restricted_rows: Vec<Vec<TruncatedSeries>> = Vec::with_capacity(n);
    for row in &rows {
        restricted_rows.push(
            row.iter().map(|e| e.substitute(rctx, &slice)).collect::<Result<_>>()?,
        );
    }
    let work = restricted_rows
        .iter()
        .flatten()
        .map(TruncatedSeries::order)
        .min()
        .unwrap_or(0);
    let aligned = |c: usize| -> Result<Vec<TruncatedSeries>> {
        restricted_rows.iter().map(|row| row[c].with_order(work)).collect()
    };
    let full_cols: Vec<Vec<TruncatedSeries>> =
        (0..tcr).map(aligned).collect::<Result<_>>()?;
    let det_of = |cols: &[usize]| -> Result<TruncatedSeries> {
        let m: Vec<Vec<TruncatedSeries>> = (0..n)
            .map(|j| cols.iter().map(|&c| full_cols[c][j].clone()).collect())
            .collect();
        SeriesMatrix::from_rows(m)?.det()
    };
    let delta = det_of(&columns)?;
    let mut minors = Vec::with_capacity(n);
    for m in 0..n {
        let mut cols: Vec<usize> = columns
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != m)
            .map(|(_, &c)| c)
            .collect();
        cols.push(leftover);
        let mut det = det_of(&cols)?;
        if (n + m + 1) % 2 == 1 {
            det = det.neg();
        }
        minors.push(det);
    }

    // Stage two: the solving system over the full symbol context, with the
    // conjugated determinant combination replacing the missing row.
    let sc = SymbolContext::new(
        source,
        np,
        &[
            FamilySpec {
                name: "jbar",
                kind: FamilyKind::Anti,
                components: np,
                max_order: 1,
                shift: &anti_shift,
            },
            FamilySpec {
                name: "jslice",
                kind: FamilyKind::NormalSlice,
                components: np,
                max_order: 1,
                shift: &holo_shift,
            },
        ],
    )?;
    let fam = sc.family_index("jbar")?;
    let slice_fam = sc.family_index("jslice")?;

    let bar_map = conjugation_map(&restricted, rfam, &sc, fam, slice_fam)?;
    let delta_bar = delta.conj_coefficients().remap(sc.ctx(), &bar_map)?;
    let minors_bar: Vec<TruncatedSeries> = minors
        .iter()
        .map(|m| m.conj_coefficients().remap(sc.ctx(), &bar_map))
        .collect::<Result<_>>()?;
    let delta_at_zero = delta_bar.constant_term();
    let minors_at_zero: Vec<GaussianRational> =
        minors_bar.iter().map(TruncatedSeries::constant_term).collect();

    let assigns = pullback_assigns(&sc, fam, target.ctx(), tcr)?;
    let q_sym = target_q.substitute(sc.ctx(), &assigns)?;
    let sders: Vec<_> = (0..n)
        .map(|k| sc.cr_derivation(source, k))
        .collect::<Result<_>>()?;
    let mut system = Vec::with_capacity(np);
    for der in &sders {
        system.push(der.apply(&q_sym)?);
    }

    let conj_assigns = conjugate_pullback_assigns(&sc, fam, target.ctx(), tcr)?;
    let qbar_of = |c: usize| -> Result<TruncatedSeries> {
        target_q
            .differentiate(tz_off + c)?
            .conj_coefficients()
            .substitute(sc.ctx(), &conj_assigns)
    };
    let mut pieces = vec![(delta_bar.clone(), qbar_of(leftover)?)];
    for (m, minor) in minors_bar.iter().enumerate() {
        pieces.push((minor.clone(), qbar_of(columns[m])?));
    }
    let relation_order = pieces
        .iter()
        .flat_map(|(a, b)| [a.order(), b.order()])
        .min()
        .unwrap_or(0);
    let mut upsilon = TruncatedSeries::zero(sc.ctx(), relation_order);
    for (i, (factor, qbar)) in pieces.iter().enumerate() {
        let term = factor
            .with_order(relation_order)?
            .mul(&qbar.with_order(relation_order)?)?;
        upsilon = if i == 0 { upsilon.add(&term)? } else { upsilon.sub(&term)? };
    }
    system.push(upsilon.clone());
    let graph = {
        let x = sc.x_series(tcr)?;
        let m = x.order().min(q_sym.order());
        x.with_order(m)?.sub(&q_sym.with_order(m)?)?
    };
    system.push(graph);

    let mut block = QiMatrix::zero(n + 1, n + 1);
    for (r, eq) in system.iter().take(n + 1).enumerate() {
        for c in 0..n + 1 {
            let e = Exponents::unit(sc.ctx().len(), sc.x_var(c)?);
            block.set(r, c, eq.coeff(&e));
        }
    }
    let determinant = block.det()?;
    let normal_derivative = map.d_w_at_zero(tcr, 0);
    let levi = levi_coefficients(source)?;
    let levi_det = QiMatrix::from_rows(levi[0].clone())?.det()?;
    let mut levi_product = levi_det;
    for _ in 0..n {
        levi_product = &levi_product * &normal_derivative;
    }
    let negated = &levi_product * &GaussianRational::from_integer(-1);
    let determinant_matches = determinant == levi_product || determinant == negated;

    // The determinant relation must itself vanish on the actual map data.
    let full = source.full_ctx();
    let x_images = map.holo().embed(full)?;
    let membership_order = {
        let evaluated = sc.evaluate(
            &upsilon,
            full,
            x_images.components(),
            &mut |fi, comp, beta| jet_image(map, full, fi, slice_fam, comp, beta),
        )?;
        let reduced = source.ideal_reduce(&evaluated)?;
        if !reduced.is_zero_series() {
            return Err(Error::ResidualNonzero { context: "one-degenerate relation" });
        }
        reduced.order()
    };

    let solved_order = system.iter().map(TruncatedSeries::order).min().unwrap_or(0);
    let solved = implicit_solve(&SeriesVector::new(system)?, "x", solved_order)?;
    let psi = SeriesVector::new(
        solved
            .iter()
            .map(|c| c.embed(sc.ctx()))
            .collect::<Result<Vec<_>>>()?,
    )?;
    let residual_order =
        verify_residual(source, map, &sc, &psi, "one-degenerate identity")?;

    let mut certificate = String::new();
    let _ = writeln!(certificate, "one-degenerate identity certificate");
    let _ = writeln!(certificate, "degeneracy order: {}", rep.k0);
    let _ = writeln!(certificate, "retained columns: {columns:?}");
    let _ = writeln!(certificate, "leftover column: {leftover}");
    let _ = writeln!(certificate, "restricted determinant at the origin: {delta_at_zero}");
    let _ = writeln!(certificate, "restricted minors at the origin:");
    for (m, v) in minors_at_zero.iter().enumerate() {
        let _ = writeln!(certificate, "  minor {m}: {v}");
    }
    let _ = writeln!(certificate, "block determinant: {determinant}");
    let _ = writeln!(certificate, "normal derivative: {normal_derivative}");
    let _ = writeln!(certificate, "levi product: {levi_product}");
    let _ = writeln!(certificate, "conjugate jets at the origin:");
    render_jets(&mut certificate, &jets);
    let _ = writeln!(certificate, "normal slice jets at the origin:");
    render_jets(&mut certificate, &slice_jets);
    let _ = writeln!(certificate, "solved to order: {solved_order}");
    render_solution(&mut certificate, &psi);

    let report = OneDegenerateReport {
        k0: rep.k0,
        columns,
        leftover,
        delta_at_zero,
        minors_at_zero,
        determinant,
        normal_derivative,
        levi_product,
        determinant_matches,
        solved_order,
        membership_order,
        residual_order,
        jets,
        slice_jets,
        certificate,
    };
    Ok(OneDegenerateIdentity { context: sc, psi, report })
}

/// Chain components brought to at least the working order: exact
/// components are raised freely, truncated ones keep their own order.
fn chain_at_order(chain: &SegreMap, order: u32) -> Result<Vec<TruncatedSeries>> {
    chain
        .components
        .iter()
        .map(|c| {
            if c.is_exact() {
                c.with_order(order.max(c.order()))
            } else {
                Ok(c.clone())
            }
        })
        .collect()
}

/// Jets of a component vector at the origin through `max_order`, listed in
/// component-major order with every multiindex present.
fn jet_values(
    comps: &SeriesVector,
    max_order: u32,
) -> Result<Vec<(usize, Vec<u32>, GaussianRational)>> {
    let dim = comps.get(0).vars().len();
    let betas = multiindices_up_to(dim, max_order);
    let mut out = Vec::with_capacity(comps.len() * betas.len());
    for comp in 0..comps.len() {
        for beta in &betas {
            let value = comps.get(comp).differentiate_multi(beta)?.constant_term();
            out.push((comp, beta.clone(), value));
        }
    }
    Ok(out)
}

fn jet_lookup(
    jets: &[(usize, Vec<u32>, GaussianRational)],
) -> BTreeMap<(usize, Vec<u32>), GaussianRational> {
    jets.iter().map(|(c, b, v)| ((*c, b.clone()), v.clone())).collect()
}

/// Images composing a target-side series with the symbolic map data: target
/// coordinates become the unknowns, conjugated coordinates the order-zero
/// jet symbols.
fn pullback_assigns(
    sc: &SymbolContext,
    family: usize,
    target_ctx: &VariableBlocks,
    target_cr: usize,
) -> Result<Vec<TruncatedSeries>> {
    let zero_beta = vec![0u32; sc.betas(family)[0].len()];
    let mut assigns = Vec::with_capacity(target_ctx.len());
    for b in 0..target_ctx.block_count() {
        let name = target_ctx.block_name(b).to_string();
        for i in 0..target_ctx.block_len(b) {
            let image = match name.as_str() {
                "z" => sc.x_series(i)?,
                "w" => sc.x_series(target_cr + i)?,
                "chi" => sc.shifted_symbol(family, i, &zero_beta)?,
                "tau" => sc.shifted_symbol(family, target_cr + i, &zero_beta)?,
                other => {
                    return Err(Error::VariableMismatch {
                        expected: "z, w, chi, tau".to_string(),
                        found: other.to_string(),
                    })
                }
            };
            assigns.push(image);
        }
    }
    Ok(assigns)
}

/// Images composing the coefficient conjugate of a target-side graph series
/// with the symbolic map data: the slot written as `z` carries conjugated
/// values, so it receives the jet symbols, and the slots written as `chi`
/// and `tau` receive the unknowns.
fn conjugate_pullback_assigns(
    sc: &SymbolContext,
    family: usize,
    target_ctx: &VariableBlocks,
    target_cr: usize,
) -> Result<Vec<TruncatedSeries>> {
    let zero_beta = vec![0u32; sc.betas(family)[0].len()];
    let mut assigns = Vec::with_capacity(target_ctx.len());
    for b in 0..target_ctx.block_count() {
        let name = target_ctx.block_name(b).to_string();
        for i in 0..target_ctx.block_len(b) {
            let image = match name.as_str() {
                "z" => sc.shifted_symbol(family, i, &zero_beta)?,
                "chi" => sc.x_series(i)?,
                "tau" => sc.x_series(target_cr + i)?,
                other => {
                    return Err(Error::VariableMismatch {
                        expected: "z, chi, tau".to_string(),
                        found: other.to_string(),
                    })
                }
            };
            assigns.push(image);
        }
    }
    Ok(assigns)
}

/// Variable map realizing coefficient conjugation from the restricted
/// context into the solving context: source coordinates swap with their
/// conjugates, unknowns become order-zero conjugate jets, and conjugate
/// jets become normal-slice jets.
fn conjugation_map(
    from: &SymbolContext,
    from_family: usize,
    to: &SymbolContext,
    anti_family: usize,
    slice_family: usize,
) -> Result<Vec<usize>> {
    let fctx = from.ctx();
    let tctx = to.ctx();
    let mut map = vec![0usize; fctx.len()];
    for (a, b) in [("z", "chi"), ("chi", "z"), ("w", "tau"), ("tau", "w")] {
        let (fo, fl) = fctx.block(a)?;
        let (to_off, _) = tctx.block(b)?;
        for i in 0..fl {
            map[fo + i] = to_off + i;
        }
    }
    let zero_beta = vec![0u32; from.betas(from_family)[0].len()];
    for i in 0..from.x_len() {
        map[from.x_var(i)?] = to.sym_var(anti_family, i, &zero_beta)?;
    }
    for comp in 0..from.x_len() {
        for beta in from.betas(from_family).to_vec() {
            map[from.sym_var(from_family, comp, &beta)?] =
                to.sym_var(slice_family, comp, &beta)?;
        }
    }
    Ok(map)
}

/// Actual series for one jet symbol on the given map: conjugate jets embed
/// the derivative of the conjugated component, normal-slice jets evaluate
/// the derivative of the component along `(0, tau)`.
fn jet_image(
    map: &FormalMap,
    full: &VariableBlocks,
    family: usize,
    slice_family: usize,
    comp: usize,
    beta: &[u32],
) -> Result<TruncatedSeries> {
    if family == slice_family {
        let derivative = map.holo().get(comp).differentiate_multi(beta)?;
        let zw = derivative.vars().clone();
        let order = derivative.order().max(1);
        let (w_off, w_len) = zw.block("w")?;
        let (tau_off, _) = full.block("tau")?;
        let mut assigns = vec![TruncatedSeries::zero(full, order); zw.len()];
        for l in 0..w_len {
            assigns[w_off + l] = TruncatedSeries::variable(full, order, tau_off + l)?;
        }
        derivative.substitute(full, &assigns)
    } else {
        map.anti().get(comp).differentiate_multi(beta)?.embed(full)
    }
}

/// Evaluates the solution on the actual map data and reduces each component
/// difference in the source ideal; returns the order through which all
/// components vanished.
fn verify_residual(
    source: &NormalManifold,
    map: &FormalMap,
    sc: &SymbolContext,
    psi: &SeriesVector,
    context: &'static str,
) -> Result<u32> {
    let full = source.full_ctx();
    let x_images = map.holo().embed(full)?;
    let slice_family = sc.family_index("jslice").unwrap_or(usize::MAX);
    let mut verified = u32::MAX;
    for i in 0..psi.len() {
        let evaluated = sc.evaluate(
            psi.get(i),
            full,
            x_images.components(),
            &mut |fi, comp, beta| jet_image(map, full, fi, slice_family, comp, beta),
        )?;
        let component = x_images.get(i);
        let m = component.order().min(evaluated.order());
        let diff = component.with_order(m)?.sub(&evaluated.with_order(m)?)?;
        let reduced = source.ideal_reduce(&diff)?;
        if !reduced.is_zero_series() {
            return Err(Error::ResidualNonzero { context });
        }
        verified = verified.min(reduced.order());
    }
    Ok(verified)
}

fn render_jets(out: &mut String, jets: &[(usize, Vec<u32>, GaussianRational)]) {
    for (comp, beta, value) in jets {
        let _ = writeln!(out, "  component {comp}, derivative {beta:?}: {value}");
    }
}

fn render_solution(out: &mut String, psi: &SeriesVector) {
    for (i, c) in psi.iter().enumerate() {
        let _ = writeln!(out, "psi[{i}] = {c}");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::GaussianRational as Q;
    use crate::vars::VariableBlocks;

    fn hyperquadric(n: usize, order: u32) -> NormalManifold {
        let ctx = VariableBlocks::new(&[("z", n), ("chi", n), ("tau", 1)]).unwrap();
        let mut terms = vec![({
            let mut e = vec![0u32; 2 * n + 1];
            e[2 * n] = 1;
            e
        }, Q::one())];
        for k in 0..n {
            let mut e = vec![0u32; 2 * n + 1];
            e[k] = 1;
            e[n + k] = 1;
            terms.push((e, Q::from_ratio_imag(2, 1)));
        }
        let q = TruncatedSeries::from_terms(&ctx, order, true, terms).unwrap();
        NormalManifold::new(n, 1, SeriesVector::new(vec![q]).unwrap()).unwrap()
    }

    /// w' = tau' + c1 z1 chi1 + c2 z2 chi2 in C^3.
    fn quadric_c3(c1: Q, c2: Q, order: u32) -> NormalManifold {
        let ctx = VariableBlocks::new(&[("z", 2), ("chi", 2), ("tau", 1)]).unwrap();
        let terms = vec![
            (vec![0, 0, 0, 0, 1], Q::one()),
            (vec![1, 0, 1, 0, 0], c1),
            (vec![0, 1, 0, 1, 0], c2),
        ];
        let q = TruncatedSeries::from_terms(&ctx, order, true, terms).unwrap();
        NormalManifold::new(2, 1, SeriesVector::new(vec![q]).unwrap()).unwrap()
    }

    /// w = tau + c z chi as a hypersurface of C^2.
    fn quadric_c2(c: Q, order: u32) -> NormalManifold {
        let ctx = VariableBlocks::new(&[("z", 1), ("chi", 1), ("tau", 1)]).unwrap();
        let terms = vec![
            (vec![0, 0, 1], Q::one()),
            (vec![1, 1, 0], c),
        ];
        let q = TruncatedSeries::from_terms(&ctx, order, true, terms).unwrap();
        NormalManifold::new(1, 1, SeriesVector::new(vec![q]).unwrap()).unwrap()
    }

    fn scaling_map(lambda: i64, order: u32) -> FormalMap {
        let zw = VariableBlocks::new(&[("z", 1), ("w", 1)]).unwrap();
        let f = TruncatedSeries::from_terms(
            &zw,
            order,
            true,
            vec![(vec![1, 0], Q::from_integer(lambda))],
        )
        .unwrap();
        let g = TruncatedSeries::from_terms(
            &zw,
            order,
            true,
            vec![(vec![0, 1], Q::from_integer(lambda * lambda))],
        )
        .unwrap();
        FormalMap::new(1, 1, 1, 1, SeriesVector::new(vec![f, g]).unwrap()).unwrap()
    }

    /// (z, w) / (1 - w): a hyperquadric self-map tangent to the identity.
    fn parabolic_map(order: u32) -> FormalMap {
        let zw = VariableBlocks::new(&[("z", 1), ("w", 1)]).unwrap();
        let z = TruncatedSeries::variable(&zw, order, 0).unwrap();
        let w = TruncatedSeries::variable(&zw, order, 1).unwrap();
        let unit = TruncatedSeries::one(&zw, order).sub(&w).unwrap();
        let inv = unit.invert_unit().unwrap();
        let f = z.with_order(inv.order()).unwrap().mul(&inv).unwrap();
        let g = w.with_order(inv.order()).unwrap().mul(&inv).unwrap();
        FormalMap::new(1, 1, 1, 1, SeriesVector::new(vec![f, g]).unwrap()).unwrap()
    }

    #[test]
    fn basic_identity_recovers_the_identity_map() {
        let m = hyperquadric(1, 8);
        let id = FormalMap::identity(1, 1, 8).unwrap();
        let solved = basic_identity(&m, &m, &id, 3, 0).unwrap();
        let rep = &solved.report;
        assert_eq!(rep.k0, 1);
        assert_eq!(rep.rows, vec![(vec![0], 0), (vec![1], 0)]);
        assert_eq!(rep.jacobian_det, Q::from_ratio_imag(2, 1));
        assert!(rep.solved_order >= 6);
        assert!(rep.residual_order >= 5);

        // Low-order coefficients of the solution, computed by eliminating
        // the unknowns from the two rows by hand.
        let sc = &solved.context;
        let len = sc.ctx().len();
        let fam = sc.family_index("jbar").unwrap();
        let z = sc.ctx().block("z").unwrap().0;
        let coeff = |comp: usize, pairs: &[(usize, u32)]| {
            let mut e = vec![0u32; len];
            for &(v, p) in pairs {
                e[v] = p;
            }
            solved.psi.get(comp).coeff(&Exponents::from_vec(e))
        };
        let s = |comp: usize, beta: &[u32]| sc.sym_var(fam, comp, beta).unwrap();
        assert_eq!(coeff(0, &[(z, 1)]), Q::one());
        assert_eq!(coeff(0, &[(s(1, &[1, 0]), 1)]), Q::from_ratio_imag(1, 2));
        assert_eq!(coeff(0, &[(z, 1), (s(1, &[0, 1]), 1)]), Q::one());
        assert_eq!(coeff(0, &[(z, 1), (s(0, &[1, 0]), 1)]), Q::from_integer(-1));
        assert_eq!(coeff(0, &[(z, 2), (s(0, &[0, 1]), 1)]), Q::from_ratio_imag(2, 1));
        assert_eq!(coeff(1, &[(s(1, &[0, 0]), 1)]), Q::one());
        assert_eq!(coeff(1, &[(z, 1), (s(0, &[0, 0]), 1)]), Q::from_ratio_imag(2, 1));
    }

    #[test]
    fn certificates_agree_exactly_for_maps_sharing_first_jets() {
        let m = hyperquadric(1, 8);
        let id = FormalMap::identity(1, 1, 8).unwrap();
        let par = parabolic_map(8);
        assert!(par.check_maps_into(&m, &m).unwrap().ok);
        let a = basic_identity(&m, &m, &id, 3, 0).unwrap();
        let b = basic_identity(&m, &m, &par, 3, 0).unwrap();
        assert_eq!(a.report.certificate, b.report.certificate);

        let scaled = basic_identity(&m, &m, &scaling_map(2, 8), 3, 0).unwrap();
        assert_ne!(a.report.certificate, scaled.report.certificate);
    }

    #[test]
    fn basic_identity_rejects_degenerate_maps() {
        let m1 = hyperquadric(1, 6);
        let m2 = hyperquadric(2, 6);
        let zw = VariableBlocks::new(&[("z", 1), ("w", 1)]).unwrap();
        let z = TruncatedSeries::variable(&zw, 6, 0).unwrap();
        let zero = TruncatedSeries::zero(&zw, 6);
        let w = TruncatedSeries::variable(&zw, 6, 1).unwrap();
        let h = FormalMap::new(1, 1, 2, 1, SeriesVector::new(vec![z, zero, w]).unwrap()).unwrap();
        let err = basic_identity(&m1, &m2, &h, 3, 0).unwrap_err();
        assert!(matches!(err, Error::HypothesisNotMet { .. }));
    }

    #[test]
    fn derivative_identities_match_the_map_derivatives() {
        let m = hyperquadric(1, 8);
        let map = parabolic_map(8);
        let solved = basic_identity(&m, &m, &map, 3, 2).unwrap();
        let table = solved.derivative_identities(&m, 2).unwrap();
        assert_eq!(table.len(), 6);

        let sc = &solved.context;
        let full = m.full_ctx();
        let x_images = map.holo().embed(full).unwrap();
        for (alpha, entry) in &table {
            for i in 0..entry.len() {
                let evaluated = sc
                    .evaluate(entry.get(i), full, x_images.components(), &mut |_, comp, beta| {
                        map.anti().get(comp).differentiate_multi(beta)?.embed(full)
                    })
                    .unwrap();
                let direct = map
                    .holo()
                    .get(i)
                    .differentiate_multi(alpha)
                    .unwrap()
                    .embed(full)
                    .unwrap();
                let w = direct.order().min(evaluated.order());
                assert!(w >= 3, "alpha {alpha:?} verified only to order {w}");
                let diff = direct
                    .with_order(w)
                    .unwrap()
                    .sub(&evaluated.with_order(w).unwrap())
                    .unwrap();
                let reduced = m.ideal_reduce(&diff).unwrap();
                assert!(
                    reduced.is_zero_series(),
                    "derivative {alpha:?} of component {i} differs: {reduced}"
                );
            }
        }
    }

    #[test]
    fn chain_propagation_reconstructs_the_scaled_map() {
        let m = hyperquadric(1, 8);
        let map = scaling_map(2, 8);
        let report = propagation_check(&m, &m, &map, 3, 2, 2).unwrap();
        assert_eq!(report.k0, 1);
        // levels 0..=2, six multiindices each
        assert_eq!(report.checks.len(), 18);
        for check in &report.checks {
            assert!(
                check.order >= 2,
                "level {} alpha {:?} verified only to order {}",
                check.level,
                check.alpha,
                check.order
            );
        }
    }

    #[test]
    fn jet_determination_separates_maps_at_the_right_order() {
        let m = hyperquadric(1, 8);
        let id = FormalMap::identity(1, 1, 8).unwrap();

        let scaled = scaling_map(2, 8);
        let cmp = jet_determination_check(&m, &m, &id, &scaled, 3, 4, 11).unwrap();
        assert_eq!(cmp.threshold, 2);
        assert_eq!(cmp.verdict, JetVerdict::Distinct);
        let diff = cmp.first_difference.unwrap();
        assert_eq!(diff.order, 1);

        let par = parabolic_map(8);
        let cmp = jet_determination_check(&m, &m, &id, &par, 3, 4, 11).unwrap();
        assert_eq!(cmp.verdict, JetVerdict::Distinct);
        assert_eq!(cmp.first_difference.unwrap().order, 2);

        let id2 = FormalMap::identity(1, 1, 8).unwrap();
        let cmp = jet_determination_check(&m, &m, &id, &id2, 3, 4, 11).unwrap();
        assert_eq!(cmp.verdict, JetVerdict::DeterminedEqual);
        assert_eq!(cmp.compared_order, 8);
        assert!(cmp.first_difference.is_none());
    }

    #[test]
    fn one_degenerate_identity_on_the_mixed_sign_embedding() {
        let src = quadric_c2(Q::one(), 8);
        let tgt = quadric_c3(Q::one(), Q::from_integer(-1), 8);
        let zw = VariableBlocks::new(&[("z", 1), ("w", 1)]).unwrap();
        let z = TruncatedSeries::variable(&zw, 8, 0).unwrap();
        let zero = TruncatedSeries::zero(&zw, 8);
        let w = TruncatedSeries::variable(&zw, 8, 1).unwrap();
        let h = FormalMap::new(1, 1, 2, 1, SeriesVector::new(vec![z, zero, w]).unwrap()).unwrap();
        assert!(h.check_maps_into(&src, &tgt).unwrap().ok);

        let solved = one_degenerate_identity(&src, &tgt, &h, 3).unwrap();
        let rep = &solved.report;
        assert_eq!(rep.k0, 1);
        assert_eq!(rep.columns, vec![0]);
        assert_eq!(rep.leftover, 1);
        assert_eq!(rep.delta_at_zero, Q::one());
        assert_eq!(rep.minors_at_zero, vec![Q::zero()]);
        assert_eq!(rep.determinant, Q::from_integer(-1));
        assert_eq!(rep.normal_derivative, Q::one());
        assert_eq!(rep.levi_product, Q::one());
        assert!(rep.determinant_matches);
        assert!(rep.solved_order >= 6);
        assert!(rep.residual_order >= 5);
        assert!(rep.membership_order >= 5);
    }

    #[test]
    fn one_degenerate_identity_with_a_doubled_component() {
        let src = quadric_c2(Q::from_integer(2), 8);
        let tgt = quadric_c3(Q::one(), Q::one(), 8);
        let zw = VariableBlocks::new(&[("z", 1), ("w", 1)]).unwrap();
        let z = TruncatedSeries::variable(&zw, 8, 0).unwrap();
        let w = TruncatedSeries::variable(&zw, 8, 1).unwrap();
        let h = FormalMap::new(
            1,
            1,
            2,
            1,
            SeriesVector::new(vec![z.clone(), z, w]).unwrap(),
        )
        .unwrap();
        assert!(h.check_maps_into(&src, &tgt).unwrap().ok);

        let solved = one_degenerate_identity(&src, &tgt, &h, 3).unwrap();
        let rep = &solved.report;
        assert_eq!(rep.columns, vec![0]);
        assert_eq!(rep.leftover, 1);
        assert_eq!(rep.delta_at_zero, Q::one());
        assert_eq!(rep.minors_at_zero, vec![Q::one()]);
        assert_eq!(rep.determinant, Q::from_integer(2));
        assert_eq!(rep.levi_product, Q::from_integer(2));
        assert!(rep.determinant_matches);
    }

    #[test]
    fn one_degenerate_identity_rejects_nondegenerate_maps() {
        let sctx = VariableBlocks::new(&[("z", 1), ("chi", 1), ("tau", 1)]).unwrap();
        let q = TruncatedSeries::from_terms(
            &sctx,
            8,
            true,
            vec![
                (vec![0, 0, 1], Q::one()),
                (vec![1, 1, 0], Q::from_ratio_imag(2, 1)),
                (vec![2, 2, 0], Q::from_ratio_imag(2, 1)),
            ],
        )
        .unwrap();
        let src = NormalManifold::new(1, 1, SeriesVector::new(vec![q]).unwrap()).unwrap();
        let tgt = quadric_c3(Q::from_ratio_imag(2, 1), Q::from_ratio_imag(2, 1), 8);
        let zw = VariableBlocks::new(&[("z", 1), ("w", 1)]).unwrap();
        let z = TruncatedSeries::variable(&zw, 8, 0).unwrap();
        let z2 = TruncatedSeries::from_terms(&zw, 8, true, vec![(vec![2, 0], Q::one())]).unwrap();
        let w = TruncatedSeries::variable(&zw, 8, 1).unwrap();
        let h = FormalMap::new(1, 1, 2, 1, SeriesVector::new(vec![z, z2, w]).unwrap()).unwrap();
        assert!(h.check_maps_into(&src, &tgt).unwrap().ok);

        let err = one_degenerate_identity(&src, &tgt, &h, 3).unwrap_err();
        assert!(matches!(err, Error::HypothesisNotMet { .. }));
    }
}
