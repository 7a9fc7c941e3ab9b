//! Formal holomorphic maps between manifolds in normal coordinates.
//!
//! A map is stored as its holomorphic components `H = (f, g)` over the
//! source `(z, w)` variables together with the antiholomorphic partner
//! `H-bar` over `(chi, tau)`. For ordinary data the partner is just the
//! coefficient conjugate with renamed variables, but after transporting a
//! map to a re-centered pair of manifolds the two sides genuinely differ,
//! so they are kept as independent series.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::QiMatrix;
use crate::manifold::{var_map_for, NormalManifold, RecenterData};
use crate::scalar::GaussianRational;
use crate::series::{SeriesVector, TruncatedSeries};
use crate::vars::{Exponents, VariableBlocks};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct FormalMap {
    source_cr: usize,
    source_codim: usize,
    target_cr: usize,
    target_codim: usize,
    order: u32,
    zw: VariableBlocks,
    chitau: VariableBlocks,
    holo: SeriesVector,
    anti: SeriesVector,
}

impl FormalMap {
    /// A map from its holomorphic components over `(z, w)`; the components
    /// must vanish at the origin. The antiholomorphic partner is the
    /// coefficient conjugate.
    pub fn new(
        source_cr: usize,
        source_codim: usize,
        target_cr: usize,
        target_codim: usize,
        holo: SeriesVector,
    ) -> Result<Self> {
        let zw = VariableBlocks::new(&[("z", source_cr), ("w", source_codim)])?;
        let chitau = VariableBlocks::new(&[("chi", source_cr), ("tau", source_codim)])?;
        let holo_ctx = holo
            .components()
            .first()
            .ok_or(Error::DimensionMismatch { expected: 1, found: 0 })?
            .vars()
            .clone();
        if holo_ctx != zw {
            return Err(Error::VariableMismatch {
                expected: zw.signature(),
                found: holo_ctx.signature(),
            });
        }
        let anti = holo
            .conj_coefficients()
            .try_map(|c| c.remap(&chitau, &var_map_for(&zw, &chitau, &[("z", "chi"), ("w", "tau")])?))?;
        Self::with_anti(source_cr, source_codim, target_cr, target_codim, holo, anti)
    }

    /// A map whose antiholomorphic partner is prescribed rather than
    /// derived by conjugation. Used for transported maps.
    pub fn with_anti(
        source_cr: usize,
        source_codim: usize,
        target_cr: usize,
        target_codim: usize,
        holo: SeriesVector,
        anti: SeriesVector,
    ) -> Result<Self> {
        let zw = VariableBlocks::new(&[("z", source_cr), ("w", source_codim)])?;
        let chitau = VariableBlocks::new(&[("chi", source_cr), ("tau", source_codim)])?;
        let ambient = target_cr + target_codim;
        if holo.len() != ambient || anti.len() != ambient {
            return Err(Error::DimensionMismatch { expected: ambient, found: holo.len() });
        }
        let order = holo.min_order().min(anti.min_order());
        if order < 1 {
            return Err(Error::InsufficientOrder {
                context: "map construction",
                needed: 1,
                available: order,
            });
        }
        let holo = holo.try_map(|c| c.with_order(order.min(c.order())))?;
        let anti = anti.try_map(|c| c.with_order(order.min(c.order())))?;
        for c in holo.iter().chain(anti.iter()) {
            if !c.constant_term().is_zero() {
                return Err(Error::HypothesisNotMet {
                    context: "map construction",
                    detail: String::from("map does not fix the origin"),
                });
            }
        }
        Ok(FormalMap {
            source_cr,
            source_codim,
            target_cr,
            target_codim,
            order,
            zw,
            chitau,
            holo,
            anti,
        })
    }

    /// The identity self-map of a source of the given dimensions.
    pub fn identity(cr: usize, codim: usize, order: u32) -> Result<Self> {
        let zw = VariableBlocks::new(&[("z", cr), ("w", codim)])?;
        let comps = crate::series::identity_images(&zw, order)?;
        Self::new(cr, codim, cr, codim, SeriesVector::new(comps)?)
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn source_cr(&self) -> usize {
        self.source_cr
    }

    pub fn source_codim(&self) -> usize {
        self.source_codim
    }

    pub fn target_cr(&self) -> usize {
        self.target_cr
    }

    pub fn target_codim(&self) -> usize {
        self.target_codim
    }

    pub fn target_ambient(&self) -> usize {
        self.target_cr + self.target_codim
    }

    /// Holomorphic components `(f, g)` over `(z, w)`.
    pub fn holo(&self) -> &SeriesVector {
        &self.holo
    }

    /// Antiholomorphic partner over `(chi, tau)`.
    pub fn anti(&self) -> &SeriesVector {
        &self.anti
    }

    pub fn is_polynomial(&self) -> bool {
        self.holo.iter().chain(self.anti.iter()).all(TruncatedSeries::is_exact)
    }

    /// The k-th component of `f` (cr part of the target).
    pub fn f(&self, k: usize) -> &TruncatedSeries {
        self.holo.get(k)
    }

    /// The l-th component of `g` (codimension part of the target).
    pub fn g(&self, l: usize) -> &TruncatedSeries {
        self.holo.get(self.target_cr + l)
    }

    /// The coefficient of `z_k` in component i, i.e. dH_i/dz_k at 0.
    pub fn d_z_at_zero(&self, i: usize, k: usize) -> GaussianRational {
        self.holo.get(i).coeff(&Exponents::unit(self.zw.len(), k))
    }

    /// The coefficient of `w_m` in component i.
    pub fn d_w_at_zero(&self, i: usize, m: usize) -> GaussianRational {
        self.holo.get(i).coeff(&Exponents::unit(self.zw.len(), self.source_cr + m))
    }

    /// The coefficient of `chi_k` in the antiholomorphic component i.
    pub fn anti_d_chi_at_zero(&self, i: usize, k: usize) -> GaussianRational {
        self.anti.get(i).coeff(&Exponents::unit(self.chitau.len(), k))
    }

    /// Composes a series over the target `(z, chi, tau)` context with the
    /// map pair: `z' -> f(z, w)`, `chi' -> f-bar(chi, tau)`,
    /// `tau' -> g-bar(chi, tau)`. The result lives on the source
    /// complexification.
    pub fn pull_back(
        &self,
        s: &TruncatedSeries,
        source: &NormalManifold,
    ) -> Result<TruncatedSeries> {
        let full = source.full_ctx();
        let mut assigns = Vec::with_capacity(s.vars().len());
        for r in 0..self.target_cr {
            assigns.push(self.f(r).embed(full)?);
        }
        for k in 0..self.target_cr {
            assigns.push(self.anti.get(k).embed(full)?);
        }
        for l in 0..self.target_codim {
            assigns.push(self.anti.get(self.target_cr + l).embed(full)?);
        }
        s.substitute(full, &assigns)
    }

    /// The gradient of the j-th target defining function in the target
    /// holomorphic variables, composed with the map pair: the vector with
    /// components `-dQ'_j/dz'_r` followed by the Kronecker `w'` part. Lives
    /// on the source complexification.
    pub fn target_gradient_pullback(
        &self,
        source: &NormalManifold,
        target: &NormalManifold,
        j: usize,
    ) -> Result<SeriesVector> {
        if j >= self.target_codim {
            return Err(Error::DimensionMismatch { expected: self.target_codim, found: j });
        }
        let full = source.full_ctx();
        let mut comps = Vec::with_capacity(self.target_ambient());
        let qj = target.q().get(j);
        for r in 0..self.target_cr {
            let partial = qj.differentiate(r)?;
            comps.push(self.pull_back(&partial, source)?.neg());
        }
        let order = comps.iter().map(TruncatedSeries::order).min().unwrap_or(self.order);
        let mut comps: Vec<TruncatedSeries> =
            comps.into_iter().map(|c| c.with_order(order)).collect::<Result<_>>()?;
        for l in 0..self.target_codim {
            let c = if l == j {
                TruncatedSeries::one(full, order)
            } else {
                TruncatedSeries::zero(full, order)
            };
            comps.push(c);
        }
        SeriesVector::new(comps)
    }

    /// Verifies that the map sends the source into the target: every
    /// pulled-back defining function of the target must reduce to zero
    /// modulo the source ideal, up to the common working order.
    pub fn check_maps_into(
        &self,
        source: &NormalManifold,
        target: &NormalManifold,
    ) -> Result<MapsIntoReport> {
        self.check_shapes(source, target)?;
        let full = source.full_ctx();
        let mut checked_order = self.order.min(source.order()).min(target.order());
        let mut failing = None;
        for j in 0..self.target_codim {
            let q_pulled = self.pull_back(target.q().get(j), source)?;
            let g_emb = self.g(j).embed(full)?.with_order(q_pulled.order().min(self.order))?;
            let rho_pulled = g_emb.sub(&q_pulled.with_order(g_emb.order())?)?;
            let reduced = source.ideal_reduce(&rho_pulled)?;
            checked_order = checked_order.min(reduced.order());
            if !reduced.is_zero_series() && failing.is_none() {
                failing = Some(j);
            }
        }
        Ok(MapsIntoReport { ok: failing.is_none(), failing_generator: failing, checked_order })
    }

    fn check_shapes(&self, source: &NormalManifold, target: &NormalManifold) -> Result<()> {
        if source.cr_dim() != self.source_cr || source.codim() != self.source_codim {
            return Err(Error::DimensionMismatch {
                expected: self.source_cr,
                found: source.cr_dim(),
            });
        }
        if target.cr_dim() != self.target_cr || target.codim() != self.target_codim {
            return Err(Error::DimensionMismatch {
                expected: self.target_cr,
                found: target.cr_dim(),
            });
        }
        Ok(())
    }

    /// CR transversality at the origin: the `w` block of the normal
    /// components must have full rank `d'`. In normal coordinates this is
    /// the standard transversality of the map to the complex tangent of
    /// the target.
    pub fn transversality(&self) -> TransversalityReport {
        let mut m = QiMatrix::zero(self.target_codim, self.source_codim);
        for j in 0..self.target_codim {
            for l in 0..self.source_codim {
                m.set(j, l, self.d_w_at_zero(self.target_cr + j, l));
            }
        }
        let rank = m.rank();
        TransversalityReport { rank, transversal: rank == self.target_codim, normal_jacobian: m }
    }

    /// Rank of the full Jacobian of `H` at the origin; the map is immersive
    /// when this equals the source ambient dimension.
    pub fn immersivity(&self) -> ImmersivityReport {
        let n_src = self.source_cr + self.source_codim;
        let mut m = QiMatrix::zero(self.target_ambient(), n_src);
        for i in 0..self.target_ambient() {
            for k in 0..n_src {
                m.set(i, k, self.holo.get(i).coeff(&Exponents::unit(n_src, k)));
            }
        }
        let rank = m.rank();
        ImmersivityReport { rank, immersive: rank == n_src }
    }

    /// The second-order compatibility between the Levi forms: for every
    /// normal component m of the target and CR directions j, k of the
    /// source,
    ///
    /// sum_l dg_m/dw_l(0) Q_{l, z_j chi_k}(0)
    ///   = sum_{r,s} Q'_{m, z'_r chi'_s}(0) f_{r, z_j}(0) fbar_{s, chi_k}(0).
    ///
    /// This is a consequence of the map sending source into target, read
    /// off at the z chi coefficients.
    pub fn levi_compatibility(
        &self,
        source: &NormalManifold,
        target: &NormalManifold,
    ) -> Result<LeviCompatibilityReport> {
        self.check_shapes(source, target)?;
        let src_levi = levi_coefficients(source)?;
        let tgt_levi = levi_coefficients(target)?;
        let mut first_failure = None;
        for m in 0..self.target_codim {
            for j in 0..self.source_cr {
                for k in 0..self.source_cr {
                    let mut lhs = GaussianRational::zero();
                    for l in 0..self.source_codim {
                        lhs += &(&self.d_w_at_zero(self.target_cr + m, l)
                            * &src_levi[l][j][k]);
                    }
                    let mut rhs = GaussianRational::zero();
                    for r in 0..self.target_cr {
                        for s in 0..self.target_cr {
                            let term = &tgt_levi[m][r][s] * &self.d_z_at_zero(r, j);
                            rhs += &(&term * &self.anti_d_chi_at_zero(s, k));
                        }
                    }
                    if lhs != rhs && first_failure.is_none() {
                        first_failure = Some((m, j, k));
                    }
                }
            }
        }
        Ok(LeviCompatibilityReport { holds: first_failure.is_none(), first_failure })
    }

    /// Transports the map to the re-centered picture: both manifolds have
    /// been recentered (`source_data`, `target_data`), and the new map is
    /// the composition of the straightenings with the translated map. The
    /// base points must correspond under the map; this is validated.
    pub fn recentered(
        &self,
        source_data: &RecenterData,
        target_data: &RecenterData,
    ) -> Result<FormalMap> {
        let p = &source_data.point;
        let p_tgt = &target_data.point;
        // the image of the source base point must be the target base point
        let holo_at_p = self.evaluate_holo(&p.z, &p.w)?;
        for (i, v) in holo_at_p.iter().enumerate() {
            let expect =
                if i < self.target_cr { &p_tgt.z[i] } else { &p_tgt.w[i - self.target_cr] };
            if v != expect {
                return Err(Error::HypothesisNotMet {
                    context: "map transport",
                    detail: String::from("target base point is not the image of the source point"),
                });
            }
        }
        let anti_at_p = self.evaluate_anti(&p.chi, &p.tau)?;
        for (i, v) in anti_at_p.iter().enumerate() {
            let expect =
                if i < self.target_cr { &p_tgt.chi[i] } else { &p_tgt.tau[i - self.target_cr] };
            if v != expect {
                return Err(Error::HypothesisNotMet {
                    context: "map transport",
                    detail: String::from(
                        "antiholomorphic base point is not the image of the source point",
                    ),
                });
            }
        }

        let order = self.order;
        let holo_new = transport_side(
            &self.holo,
            &self.zw,
            &p.z,
            &p.w,
            &source_data.straighten_inv,
            &p_tgt.z,
            &p_tgt.w,
            &target_data.straighten,
            self.target_cr,
            order,
        )?;
        let anti_new = transport_side(
            &self.anti,
            &self.chitau,
            &p.chi,
            &p.tau,
            &source_data.straighten_anti_inv,
            &p_tgt.chi,
            &p_tgt.tau,
            &target_data.straighten_anti,
            self.target_cr,
            order,
        )?;
        FormalMap::with_anti(
            self.source_cr,
            self.source_codim,
            self.target_cr,
            self.target_codim,
            holo_new,
            anti_new,
        )
    }

    fn evaluate_holo(
        &self,
        z: &[GaussianRational],
        w: &[GaussianRational],
    ) -> Result<Vec<GaussianRational>> {
        let mut coords = z.to_vec();
        coords.extend(w.iter().cloned());
        let mut out = Vec::with_capacity(self.holo.len());
        for c in self.holo.iter() {
            let (v, exact) = c.evaluate(&coords)?;
            if !exact {
                return Err(Error::PolynomialRequired { context: "map evaluation" });
            }
            out.push(v);
        }
        Ok(out)
    }

    fn evaluate_anti(
        &self,
        chi: &[GaussianRational],
        tau: &[GaussianRational],
    ) -> Result<Vec<GaussianRational>> {
        let mut coords = chi.to_vec();
        coords.extend(tau.iter().cloned());
        let mut out = Vec::with_capacity(self.anti.len());
        for c in self.anti.iter() {
            let (v, exact) = c.evaluate(&coords)?;
            if !exact {
                return Err(Error::PolynomialRequired { context: "map evaluation" });
            }
            out.push(v);
        }
        Ok(out)
    }
}

/// One side of the transport: translate the domain to the base point,
/// un-straighten the normal coordinate, apply the map, translate the
/// target, straighten. All constant shifts hit exact polynomials only.
#[allow(clippy::too_many_arguments)]
fn transport_side(
    side: &SeriesVector,
    domain: &VariableBlocks,
    base_cr: &[GaussianRational],
    base_normal: &[GaussianRational],
    source_unstraighten: &SeriesVector,
    target_base_cr: &[GaussianRational],
    target_base_normal: &[GaussianRational],
    target_straighten: &SeriesVector,
    target_cr: usize,
    order: u32,
) -> Result<SeriesVector> {
    let n = base_cr.len();
    let d = base_normal.len();
    // old coordinates in terms of the new: cr block is translated, the
    // normal block goes through the inverse straightening
    let mut assigns = Vec::with_capacity(n + d);
    for (i, c0) in base_cr.iter().enumerate() {
        let var = TruncatedSeries::variable(domain, order, i)?;
        assigns.push(var.add(&TruncatedSeries::constant(domain, order, c0.clone()))?);
    }
    for (l, c0) in base_normal.iter().enumerate() {
        let un = source_unstraighten.get(l).embed(domain)?.with_order(order.min(
            source_unstraighten.get(l).order(),
        ))?;
        assigns.push(un.add(&TruncatedSeries::constant(domain, order, c0.clone()))?);
    }
    let mid = side.substitute(domain, &assigns)?;

    // subtract the target base point componentwise
    let mut shifted = Vec::with_capacity(mid.len());
    for (i, c) in mid.iter().enumerate() {
        let c0 = if i < target_cr {
            target_base_cr[i].clone()
        } else {
            target_base_normal[i - target_cr].clone()
        };
        shifted.push(c.sub(&TruncatedSeries::constant(domain, c.order(), c0))?);
    }

    // straighten the target normal components
    let cr_new: Vec<TruncatedSeries> = shifted[..target_cr].to_vec();
    let straighten_assigns: Vec<TruncatedSeries> = shifted
        .iter()
        .map(|c| c.with_order(order.min(c.order())))
        .collect::<Result<_>>()?;
    let normal_new = target_straighten.substitute(domain, &straighten_assigns)?;

    let mut comps = cr_new;
    comps.extend(normal_new.into_components());
    let common = comps.iter().map(TruncatedSeries::order).min().unwrap_or(order);
    SeriesVector::new(
        comps.into_iter().map(|c| c.with_order(common)).collect::<Result<Vec<_>>>()?,
    )
}

/// The Levi coefficients `Q_{l, z_j chi_k}(0)` of a manifold, indexed
/// `[l][j][k]`.
pub fn levi_coefficients(m: &NormalManifold) -> Result<Vec<Vec<Vec<GaussianRational>>>> {
    let n = m.cr_dim();
    let len = m.ctx().len();
    let mut out = Vec::with_capacity(m.codim());
    for qj in m.q().iter() {
        let mut per_j = Vec::with_capacity(n);
        for j in 0..n {
            let mut per_k = Vec::with_capacity(n);
            for k in 0..n {
                let mut e = vec![0u32; len];
                e[j] += 1;
                e[n + k] += 1;
                per_k.push(qj.coeff(&Exponents::from_vec(e)));
            }
            per_j.push(per_k);
        }
        out.push(per_j);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MapsIntoReport {
    pub ok: bool,
    pub failing_generator: Option<usize>,
    pub checked_order: u32,
}

#[derive(Clone, Debug)]
pub struct TransversalityReport {
    pub rank: usize,
    pub transversal: bool,
    pub normal_jacobian: QiMatrix,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImmersivityReport {
    pub rank: usize,
    pub immersive: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeviCompatibilityReport {
    pub holds: bool,
    pub first_failure: Option<(usize, usize, usize)>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::GaussianRational as Q;

    pub(crate) fn hyperquadric(n: usize, order: u32) -> NormalManifold {
        // w = tau + 2i sum z_k chi_k
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

    fn identity_map(n: usize, d: usize, order: u32) -> FormalMap {
        FormalMap::identity(n, d, order).unwrap()
    }

    #[test]
    fn identity_maps_hyperquadric_into_itself() {
        let m = hyperquadric(1, 4);
        let h = identity_map(1, 1, 4);
        let report = h.check_maps_into(&m, &m).unwrap();
        assert!(report.ok);
        assert!(h.transversality().transversal);
        assert!(h.immersivity().immersive);
        assert!(h.levi_compatibility(&m, &m).unwrap().holds);
    }

    #[test]
    fn detects_map_that_misses_target() {
        // (z, 2w) does not send the hyperquadric into itself
        let m = hyperquadric(1, 3);
        let zw = VariableBlocks::new(&[("z", 1), ("w", 1)]).unwrap();
        let z = TruncatedSeries::variable(&zw, 3, 0).unwrap();
        let w2 = TruncatedSeries::variable(&zw, 3, 1).unwrap().scale(&Q::from_integer(2));
        let h = FormalMap::new(1, 1, 1, 1, SeriesVector::new(vec![z, w2]).unwrap()).unwrap();
        let report = h.check_maps_into(&m, &m).unwrap();
        assert!(!report.ok);
        assert_eq!(report.failing_generator, Some(0));
        // and the Levi compatibility fails too
        assert!(!h.levi_compatibility(&m, &m).unwrap().holds);
    }

    #[test]
    fn embedding_into_higher_quadric() {
        // (z, 0, w) sends the hyperquadric of C^2 into the one of C^3
        let m1 = hyperquadric(1, 3);
        let m2 = hyperquadric(2, 3);
        let zw = VariableBlocks::new(&[("z", 1), ("w", 1)]).unwrap();
        let z = TruncatedSeries::variable(&zw, 3, 0).unwrap();
        let zero = TruncatedSeries::zero(&zw, 3);
        let w = TruncatedSeries::variable(&zw, 3, 1).unwrap();
        let h = FormalMap::new(1, 1, 2, 1, SeriesVector::new(vec![z, zero, w]).unwrap()).unwrap();
        let report = h.check_maps_into(&m1, &m2).unwrap();
        assert!(report.ok, "failing generator {:?}", report.failing_generator);
        assert!(h.transversality().transversal);
        assert!(h.levi_compatibility(&m1, &m2).unwrap().holds);
    }

    #[test]
    fn gradient_pullback_shape() {
        let m = hyperquadric(1, 4);
        let h = identity_map(1, 1, 4);
        let grad = h.target_gradient_pullback(&m, &m, 0).unwrap();
        assert_eq!(grad.len(), 2);
        // first component -2i chi, second the constant 1
        let full = m.full_ctx();
        let chi_idx = full.block("chi").unwrap().0;
        assert_eq!(
            grad.get(0).coeff(&Exponents::unit(full.len(), chi_idx)),
            Q::from_ratio_imag(-2, 1)
        );
        assert!(grad.get(1).constant_term().is_one());
    }

    #[test]
    fn transport_of_identity_stays_identity_like() {
        let m = hyperquadric(1, 4);
        let h = identity_map(1, 1, 4);
        let p = m
            .point_on(vec![Q::from_ratio(1, 2)], vec![Q::from_ratio(1, 3)], vec![Q::one()])
            .unwrap();
        let (m_new, data) = m.recenter(&p).unwrap();
        let h_new = h.recentered(&data, &data).unwrap();
        // the transported identity is again the identity
        let zw = VariableBlocks::new(&[("z", 1), ("w", 1)]).unwrap();
        for i in 0..2 {
            let var = TruncatedSeries::variable(&zw, h_new.order(), i).unwrap();
            let diff = h_new.holo().get(i).sub(&var.forget_exactness()).unwrap();
            assert!(diff.is_zero_series(), "component {i}: {}", h_new.holo().get(i));
        }
        let report = h_new.check_maps_into(&m_new, &m_new).unwrap();
        assert!(report.ok);
    }
}
