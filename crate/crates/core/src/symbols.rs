//! Jet symbols: the source complexification extended by an unknown block
//! and by families of symbols standing for derivatives of a map's
//! components, plus derivations that say how vector fields act on those
//! symbols.
//!
//! Every symbol is shifted so that it vanishes at the origin: the symbol
//! for a derivative of order `beta` stands for that derivative minus its
//! value at zero. The shift constants reappear inside the derivation
//! images and are removed again on evaluation, so series built here stay
//! compatible with the origin-based solving machinery.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::SeriesMatrix;
use crate::manifold::NormalManifold;
use crate::scalar::GaussianRational;
use crate::series::TruncatedSeries;
use crate::vars::{multiindices_up_to, VariableBlocks};
use crate::{Error, Result};

/// How the vector-field derivations act on a family of jet symbols.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FamilyKind {
    /// Jets of a function of the conjugate variables `(chi, tau)`: a CR
    /// field bumps the jet order, with the field's coefficients in front.
    Anti,
    /// Jets of a function of `(z, w)`: the CR fields annihilate them.
    Holo,
    /// Jets of a function restricted to the normal slice `(0, tau)`: only
    /// the `tau` part of a field moves them, so CR fields bump just the
    /// `tau` indices and the `chi` bump is absent.
    NormalSlice,
}

/// Declaration of one symbol family. The shift closure gives the value of
/// the derivative at the origin for each component and multiindex; the
/// multiindices run over the `n + d` arguments of the represented function.
pub struct FamilySpec<'a> {
    pub name: &'a str,
    pub kind: FamilyKind,
    pub components: usize,
    pub max_order: u32,
    pub shift: &'a dyn Fn(usize, &[u32]) -> GaussianRational,
}

#[derive(Debug)]
struct FamilyLayout {
    name: String,
    kind: FamilyKind,
    components: usize,
    max_order: u32,
    betas: Vec<Vec<u32>>,
    index_of: BTreeMap<Vec<u32>, usize>,
    offset: usize,
}

#[derive(Debug)]
pub struct SymbolContext {
    ctx: VariableBlocks,
    n: usize,
    d: usize,
    order: u32,
    x_offset: usize,
    x_len: usize,
    families: Vec<FamilyLayout>,
    shifts: BTreeMap<usize, GaussianRational>,
}

impl SymbolContext {
    /// Extends the complexification of `source` by an unknown block `x` of
    /// the given length and by the declared symbol families.
    pub fn new(
        source: &NormalManifold,
        x_len: usize,
        families: &[FamilySpec<'_>],
    ) -> Result<Self> {
        if x_len == 0 {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        let n = source.cr_dim();
        let d = source.codim();
        let jet_dim = n + d;

        let mut layouts = Vec::with_capacity(families.len());
        let mut extra: Vec<(String, usize)> = vec![(String::from("x"), x_len)];
        for spec in families {
            let betas = multiindices_up_to(jet_dim, spec.max_order);
            let index_of =
                betas.iter().enumerate().map(|(i, b)| (b.clone(), i)).collect();
            extra.push((spec.name.to_string(), spec.components * betas.len()));
            layouts.push(FamilyLayout {
                name: spec.name.to_string(),
                kind: spec.kind,
                components: spec.components,
                max_order: spec.max_order,
                betas,
                index_of,
                offset: 0,
            });
        }
        let extra_refs: Vec<(&str, usize)> =
            extra.iter().map(|(name, len)| (name.as_str(), *len)).collect();
        let ctx = source.full_ctx().extended(&extra_refs)?;

        let x_offset = ctx.block("x")?.0;
        let mut shifts = BTreeMap::new();
        for (layout, spec) in layouts.iter_mut().zip(families) {
            layout.offset = ctx.block(&layout.name)?.0;
            for comp in 0..layout.components {
                for (bi, beta) in layout.betas.iter().enumerate() {
                    let c = (spec.shift)(comp, beta);
                    if !c.is_zero() {
                        shifts.insert(layout.offset + comp * layout.betas.len() + bi, c);
                    }
                }
            }
        }

        Ok(SymbolContext {
            ctx,
            n,
            d,
            order: source.order(),
            x_offset,
            x_len,
            families: layouts,
            shifts,
        })
    }

    pub fn ctx(&self) -> &VariableBlocks {
        &self.ctx
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn x_len(&self) -> usize {
        self.x_len
    }

    pub fn x_var(&self, i: usize) -> Result<usize> {
        if i >= self.x_len {
            return Err(Error::DimensionMismatch { expected: self.x_len, found: i });
        }
        Ok(self.x_offset + i)
    }

    /// The i-th unknown as a series.
    pub fn x_series(&self, i: usize) -> Result<TruncatedSeries> {
        TruncatedSeries::variable(&self.ctx, self.order, self.x_var(i)?)
    }

    pub fn family_index(&self, name: &str) -> Result<usize> {
        self.families
            .iter()
            .position(|f| f.name == name)
            .ok_or(Error::VariableMismatch {
                expected: String::from(name),
                found: String::from("no such symbol family"),
            })
    }

    pub fn family_max_order(&self, family: usize) -> u32 {
        self.families[family].max_order
    }

    pub fn betas(&self, family: usize) -> &[Vec<u32>] {
        &self.families[family].betas
    }

    pub fn sym_var(&self, family: usize, comp: usize, beta: &[u32]) -> Result<usize> {
        let layout = self
            .families
            .get(family)
            .ok_or(Error::DimensionMismatch { expected: self.families.len(), found: family })?;
        if comp >= layout.components {
            return Err(Error::DimensionMismatch {
                expected: layout.components,
                found: comp,
            });
        }
        let bi = layout.index_of.get(beta).ok_or(Error::InsufficientOrder {
            context: "jet symbols",
            needed: beta.iter().sum(),
            available: layout.max_order,
        })?;
        Ok(layout.offset + comp * layout.betas.len() + bi)
    }

    /// The origin value of the derivative the symbol stands for.
    pub fn shift_of(&self, var: usize) -> GaussianRational {
        self.shifts.get(&var).cloned().unwrap_or_else(GaussianRational::zero)
    }

    /// The bare symbol variable, vanishing at the origin.
    pub fn symbol(&self, family: usize, comp: usize, beta: &[u32]) -> Result<TruncatedSeries> {
        TruncatedSeries::variable(&self.ctx, self.order, self.sym_var(family, comp, beta)?)
    }

    /// Symbol plus shift: the series standing for the actual derivative.
    pub fn shifted_symbol(
        &self,
        family: usize,
        comp: usize,
        beta: &[u32],
    ) -> Result<TruncatedSeries> {
        let var = self.sym_var(family, comp, beta)?;
        let sym = TruncatedSeries::variable(&self.ctx, self.order, var)?;
        sym.add(&TruncatedSeries::constant(&self.ctx, self.order, self.shift_of(var)))
    }

    /// The derivation table of the k-th CR field: it fixes `z`, `w` and the
    /// unknowns, moves `chi_k` with coefficient one and the `tau` block with
    /// the field's coefficients, bumps the jets of conjugate families and
    /// annihilates holomorphic ones. Bumps past a family's declared order
    /// are marked unavailable and only fail if actually differentiated.
    pub fn cr_derivation(&self, source: &NormalManifold, k: usize) -> Result<Derivation> {
        if k >= self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: k });
        }
        let mut b_row = Vec::with_capacity(self.d);
        for l in 0..self.d {
            b_row.push(source.cr_coefficient(k, l).embed(&self.ctx)?);
        }
        let work = b_row
            .iter()
            .map(TruncatedSeries::order)
            .min()
            .unwrap_or(self.order)
            .min(self.order);
        let b_row: Vec<TruncatedSeries> =
            b_row.iter().map(|b| b.with_order(work)).collect::<Result<_>>()?;

        let mut images = vec![SymbolImage::Zero; self.ctx.len()];
        let chi_off = self.ctx.block("chi")?.0;
        let tau_off = self.ctx.block("tau")?.0;
        images[chi_off + k] = SymbolImage::Series(TruncatedSeries::one(&self.ctx, work));
        for l in 0..self.d {
            images[tau_off + l] = SymbolImage::Series(b_row[l].clone());
        }

        for layout in &self.families {
            if layout.kind == FamilyKind::Holo {
                continue;
            }
            let family = self.family_index(&layout.name)?;
            for comp in 0..layout.components {
                for (bi, beta) in layout.betas.iter().enumerate() {
                    let var = layout.offset + comp * layout.betas.len() + bi;
                    let degree: u32 = beta.iter().sum();
                    if degree >= layout.max_order {
                        images[var] = SymbolImage::Unavailable;
                        continue;
                    }
                    let mut bumped = beta.clone();
                    let mut image = if layout.kind == FamilyKind::Anti {
                        bumped[k] += 1;
                        let chi_bump =
                            self.shifted_symbol(family, comp, &bumped)?.with_order(work)?;
                        bumped[k] -= 1;
                        chi_bump
                    } else {
                        TruncatedSeries::zero(&self.ctx, work)
                    };
                    for l in 0..self.d {
                        bumped[self.n + l] += 1;
                        let jet = self.shifted_symbol(family, comp, &bumped)?.with_order(work)?;
                        bumped[self.n + l] -= 1;
                        image = image.add(&b_row[l].mul(&jet)?)?;
                    }
                    images[var] = SymbolImage::Series(image);
                }
            }
        }
        Ok(Derivation { images })
    }

    /// Derivation tables for the holomorphic coordinate fields tangent to
    /// the complexification, one per source coordinate. The j-th field
    /// acts as the plain j-th partial derivative on anything holomorphic
    /// in `(z, w)` and carries a `tau` correction that keeps it tangent;
    /// the correction coefficients solve a linear system against the `tau`
    /// gradient of the graph series, whose constant part is the identity
    /// in normal form. Conjugate and normal-slice jets are bumped in their
    /// `tau` indices with those coefficients, holomorphic jets in their
    /// j-th index, and the unknowns stay fixed.
    pub fn normal_derivations(&self, source: &NormalManifold) -> Result<Vec<Derivation>> {
        let z_off = self.ctx.block("z")?.0;
        let w_off = self.ctx.block("w")?.0;
        let tau_off = self.ctx.block("tau")?.0;
        let n = self.n;
        let d = self.d;

        let q: Vec<TruncatedSeries> = (0..d)
            .map(|l| source.q().get(l).embed(&self.ctx))
            .collect::<Result<_>>()?;
        let mut grad_rows = Vec::with_capacity(d);
        let mut rhs_rows = Vec::with_capacity(d);
        for q_l in &q {
            let grad_row: Vec<TruncatedSeries> =
                (0..d).map(|m| q_l.differentiate(tau_off + m)).collect::<Result<_>>()?;
            let row_order = grad_row.iter().map(TruncatedSeries::order).min().unwrap_or(0);
            let mut rhs_row: Vec<TruncatedSeries> =
                (0..n).map(|j| q_l.differentiate(z_off + j)).collect::<Result<_>>()?;
            for _ in 0..d {
                rhs_row.push(TruncatedSeries::zero(&self.ctx, row_order));
            }
            grad_rows.push(grad_row);
            rhs_rows.push(rhs_row);
        }
        for (l, row) in rhs_rows.iter_mut().enumerate() {
            let ord = row[0].order();
            row[n + l] = TruncatedSeries::constant(
                &self.ctx,
                ord,
                GaussianRational::from_integer(-1),
            );
        }
        let grad = SeriesMatrix::from_rows(grad_rows)?;
        let rhs = SeriesMatrix::from_rows(rhs_rows)?;
        let bmat = grad.inverse_unit("normal direction fields")?.mul(&rhs)?;

        let mut work = self.order;
        for l in 0..d {
            for j in 0..n + d {
                work = work.min(bmat.get(l, j).order());
            }
        }

        let mut fields = Vec::with_capacity(n + d);
        for j in 0..n + d {
            let mut images = vec![SymbolImage::Zero; self.ctx.len()];
            let base = if j < n { z_off + j } else { w_off + (j - n) };
            images[base] = SymbolImage::Series(TruncatedSeries::one(&self.ctx, work));
            let mut tau_coeffs = Vec::with_capacity(d);
            for l in 0..d {
                let c = bmat.get(l, j).with_order(work)?.neg();
                images[tau_off + l] = SymbolImage::Series(c.clone());
                tau_coeffs.push(c);
            }
            for layout in &self.families {
                let family = self.family_index(&layout.name)?;
                for comp in 0..layout.components {
                    for (bi, beta) in layout.betas.iter().enumerate() {
                        let var = layout.offset + comp * layout.betas.len() + bi;
                        let degree: u32 = beta.iter().sum();
                        if degree >= layout.max_order {
                            images[var] = SymbolImage::Unavailable;
                            continue;
                        }
                        let mut bumped = beta.clone();
                        let image = match layout.kind {
                            FamilyKind::Holo => {
                                bumped[j] += 1;
                                let im = self
                                    .shifted_symbol(family, comp, &bumped)?
                                    .with_order(work)?;
                                bumped[j] -= 1;
                                im
                            }
                            FamilyKind::Anti | FamilyKind::NormalSlice => {
                                let mut acc = TruncatedSeries::zero(&self.ctx, work);
                                for l in 0..d {
                                    bumped[n + l] += 1;
                                    let jet = self
                                        .shifted_symbol(family, comp, &bumped)?
                                        .with_order(work)?;
                                    bumped[n + l] -= 1;
                                    acc = acc.add(&tau_coeffs[l].mul(&jet)?)?;
                                }
                                acc
                            }
                        };
                        images[var] = SymbolImage::Series(image);
                    }
                }
            }
            fields.push(Derivation { images });
        }
        Ok(fields)
    }

    /// Substitutes concrete data for the formal pieces: base variables map
    /// to their counterparts in `target`, the unknowns to `x_images`, and
    /// each used jet symbol to the series produced by `jet_image` minus the
    /// symbol's shift.
    pub fn evaluate(
        &self,
        phi: &TruncatedSeries,
        target: &VariableBlocks,
        x_images: &[TruncatedSeries],
        jet_image: &mut dyn FnMut(usize, usize, &[u32]) -> Result<TruncatedSeries>,
    ) -> Result<TruncatedSeries> {
        if x_images.len() != self.x_len {
            return Err(Error::DimensionMismatch {
                expected: self.x_len,
                found: x_images.len(),
            });
        }
        let mut used = vec![false; self.ctx.len()];
        for (e, _) in phi.terms() {
            for (i, &exp) in e.as_slice().iter().enumerate() {
                if exp > 0 {
                    used[i] = true;
                }
            }
        }

        let base_order = phi.order().max(1);
        let placeholder = TruncatedSeries::zero(target, base_order);
        let mut assigns = Vec::with_capacity(self.ctx.len());
        for var in 0..self.ctx.len() {
            if !used[var] {
                assigns.push(placeholder.clone());
                continue;
            }
            let image = self.image_for(var, target, base_order, x_images, jet_image)?;
            assigns.push(image);
        }
        phi.substitute(target, &assigns)
    }

    fn image_for(
        &self,
        var: usize,
        target: &VariableBlocks,
        base_order: u32,
        x_images: &[TruncatedSeries],
        jet_image: &mut dyn FnMut(usize, usize, &[u32]) -> Result<TruncatedSeries>,
    ) -> Result<TruncatedSeries> {
        for name in ["z", "w", "chi", "tau"] {
            let (off, len) = self.ctx.block(name)?;
            if var >= off && var < off + len {
                let (toff, tlen) = target.block(name)?;
                if tlen != len {
                    return Err(Error::DimensionMismatch { expected: len, found: tlen });
                }
                return TruncatedSeries::variable(target, base_order, toff + (var - off));
            }
        }
        if var >= self.x_offset && var < self.x_offset + self.x_len {
            return Ok(x_images[var - self.x_offset].clone());
        }
        for (fi, layout) in self.families.iter().enumerate() {
            let size = layout.components * layout.betas.len();
            if var >= layout.offset && var < layout.offset + size {
                let local = var - layout.offset;
                let comp = local / layout.betas.len();
                let beta = &layout.betas[local % layout.betas.len()];
                let actual = jet_image(fi, comp, beta)?;
                let shift = self.shift_of(var);
                if shift.is_zero() {
                    return Ok(actual);
                }
                let c = TruncatedSeries::constant(target, actual.order(), shift);
                return actual.sub(&c);
            }
        }
        Err(Error::DimensionMismatch { expected: self.ctx.len(), found: var })
    }
}

/// Image of one variable under a derivation.
#[derive(Clone, Debug)]
pub enum SymbolImage {
    Zero,
    Series(TruncatedSeries),
    /// The image would need a jet symbol beyond the declared family order;
    /// differentiating a series that uses this variable is an error.
    Unavailable,
}

/// A derivation of the symbol context, given by its images on variables.
pub struct Derivation {
    images: Vec<SymbolImage>,
}

impl Derivation {
    pub fn new(images: Vec<SymbolImage>) -> Self {
        Derivation { images }
    }

    pub fn apply(&self, phi: &TruncatedSeries) -> Result<TruncatedSeries> {
        let mut used = vec![false; self.images.len()];
        for (e, _) in phi.terms() {
            for (i, &exp) in e.as_slice().iter().enumerate() {
                if exp > 0 {
                    used[i] = true;
                }
            }
        }
        let mut pieces: Vec<TruncatedSeries> = Vec::new();
        for (var, image) in self.images.iter().enumerate() {
            if !used[var] {
                continue;
            }
            let g = match image {
                SymbolImage::Zero => continue,
                SymbolImage::Series(g) => g,
                SymbolImage::Unavailable => {
                    return Err(Error::InsufficientOrder {
                        context: "jet symbols",
                        needed: 1,
                        available: 0,
                    })
                }
            };
            let dphi = phi.differentiate(var)?;
            if dphi.is_zero_series() {
                continue;
            }
            let ord = dphi.order().min(g.order());
            pieces.push(dphi.with_order(ord)?.mul(&g.with_order(ord)?)?);
        }
        let fallback = if phi.is_exact() { phi.order() } else { phi.order().saturating_sub(1) };
        let ord = pieces.iter().map(TruncatedSeries::order).min().unwrap_or(fallback);
        let mut acc = TruncatedSeries::zero(phi.vars(), ord);
        for p in pieces {
            acc = acc.add(&p.with_order(ord)?)?;
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::GaussianRational as Q;
    use crate::series::SeriesVector;

    /// Q = tau + z chi + z chi tau: the tau dependence makes the CR field
    /// coefficient a genuine series, which the chain rule test needs.
    fn curved_source(order: u32) -> NormalManifold {
        let ctx = VariableBlocks::new(&[("z", 1), ("chi", 1), ("tau", 1)]).unwrap();
        let q = TruncatedSeries::from_terms(
            &ctx,
            order,
            true,
            vec![
                (vec![0, 0, 1], Q::one()),
                (vec![1, 1, 0], Q::one()),
                (vec![1, 1, 1], Q::one()),
            ],
        )
        .unwrap();
        NormalManifold::new(1, 1, SeriesVector::new(vec![q]).unwrap()).unwrap()
    }

    /// Nonlinear antiholomorphic data over the full context and its jet at
    /// the origin, for the shift closures and the evaluation closures.
    fn anti_data(m: &NormalManifold) -> SeriesVector {
        let full = m.full_ctx();
        let chi = TruncatedSeries::variable(full, m.order(), full.block("chi").unwrap().0)
            .unwrap();
        let tau = TruncatedSeries::variable(full, m.order(), full.block("tau").unwrap().0)
            .unwrap();
        let a0 = chi.add(&chi.mul(&chi).unwrap().mul(&tau).unwrap()).unwrap();
        let a1 = tau.add(&chi.mul(&tau).unwrap().mul(&tau).unwrap()).unwrap();
        SeriesVector::new(vec![a0, a1]).unwrap()
    }

    fn jet_of(
        m: &NormalManifold,
        data: &SeriesVector,
        comp: usize,
        beta: &[u32],
    ) -> TruncatedSeries {
        let full = m.full_ctx();
        let chi_off = full.block("chi").unwrap().0;
        let mut alpha = vec![0u32; full.len()];
        alpha[chi_off] = beta[0];
        alpha[chi_off + 1] = beta[1];
        data.get(comp).differentiate_multi(&alpha).unwrap()
    }

    fn context_with_jets<'a>(
        m: &NormalManifold,
        shift: &'a dyn Fn(usize, &[u32]) -> Q,
        max_order: u32,
    ) -> SymbolContext {
        SymbolContext::new(
            m,
            2,
            &[FamilySpec { name: "jbar", kind: FamilyKind::Anti, components: 2, max_order, shift }],
        )
        .unwrap()
    }

    #[test]
    fn layout_and_shifts() {
        let m = curved_source(6);
        let data = anti_data(&m);
        let shift = move |comp: usize, beta: &[u32]| {
            jet_of(&m, &data, comp, beta).constant_term()
        };
        let m2 = curved_source(6);
        let sc = context_with_jets(&m2, &shift, 2);
        // base block comes first, unchanged
        assert_eq!(sc.ctx().block("z").unwrap(), (0, 1));
        assert_eq!(sc.ctx().block("x").unwrap().1, 2);
        // d/dtau of a1 = 1 + 2 chi tau has origin value 1
        let var = sc.sym_var(0, 1, &[0, 1]).unwrap();
        assert!(sc.shift_of(var).is_one());
        // the shifted symbol for it carries that constant
        let s = sc.shifted_symbol(0, 1, &[0, 1]).unwrap();
        assert!(s.constant_term().is_one());
        // beta = 0 symbols are unshifted since the data vanishes at zero
        assert!(sc.shift_of(sc.sym_var(0, 0, &[0, 0]).unwrap()).is_zero());
    }

    #[test]
    fn derivation_matches_direct_cr_derivative() {
        let m = curved_source(8);
        let data = anti_data(&m);
        let m_for_shift = curved_source(8);
        let data_for_shift = anti_data(&m_for_shift);
        let shift = move |comp: usize, beta: &[u32]| {
            jet_of(&m_for_shift, &data_for_shift, comp, beta).constant_term()
        };
        let sc = context_with_jets(&m, &shift, 3);
        let full = m.full_ctx();

        // phi = x2 * s0 - s1 + x1 * s0^2 in the unknowns and level-0 symbols
        let s0 = sc.symbol(0, 0, &[0, 0]).unwrap();
        let s1 = sc.symbol(0, 1, &[0, 0]).unwrap();
        let x1 = sc.x_series(0).unwrap();
        let x2 = sc.x_series(1).unwrap();
        let phi = x2
            .mul(&s0)
            .unwrap()
            .sub(&s1)
            .unwrap()
            .add(&x1.mul(&s0.mul(&s0).unwrap()).unwrap())
            .unwrap();

        // unknown images: holomorphic functions of (z, w)
        let z = TruncatedSeries::variable(full, m.order(), 0).unwrap();
        let w = TruncatedSeries::variable(full, m.order(), full.block("w").unwrap().0).unwrap();
        let x_images =
            vec![z.add(&z.mul(&w).unwrap()).unwrap(), w.add(&z.mul(&z).unwrap().mul(&z).unwrap()).unwrap()];

        let engine = sc.cr_derivation(&m, 0).unwrap();
        let mut jets = |_f: usize, comp: usize, beta: &[u32]| Ok(jet_of(&m, &data, comp, beta));

        let mut symbolic = phi.clone();
        let mut direct = sc.evaluate(&phi, full, &x_images, &mut jets).unwrap();
        for _ in 0..2 {
            symbolic = engine.apply(&symbolic).unwrap();
            direct = m.cr_derivative(0, &direct).unwrap();
            let via_engine = sc.evaluate(&symbolic, full, &x_images, &mut jets).unwrap();
            let ord = via_engine.order().min(direct.order());
            let diff = via_engine
                .with_order(ord)
                .unwrap()
                .sub(&direct.with_order(ord).unwrap())
                .unwrap();
            assert!(diff.is_zero_series(), "chain rule failed: {diff}");
        }
    }

    #[test]
    fn normal_fields_match_direct_tangent_derivatives() {
        let m = curved_source(8);
        let data = anti_data(&m);
        let m_for_shift = curved_source(8);
        let data_for_shift = anti_data(&m_for_shift);
        let shift = move |comp: usize, beta: &[u32]| {
            jet_of(&m_for_shift, &data_for_shift, comp, beta).constant_term()
        };
        let sc = context_with_jets(&m, &shift, 3);
        let full = m.full_ctx();

        let s0 = sc.symbol(0, 0, &[0, 0]).unwrap();
        let s1 = sc.symbol(0, 1, &[0, 0]).unwrap();
        let phi = s0.mul(&s1).unwrap().add(&s1).unwrap();

        // direct tangent coefficients for d = 1: divide the z and w right
        // hand sides by the tau gradient of the graph series
        let tau_var = full.block("tau").unwrap().0;
        let q = m.q().get(0).embed(full).unwrap();
        let qt_inv = q.differentiate(tau_var).unwrap().invert_unit().unwrap();
        let b_z = q.differentiate(0).unwrap().mul(&qt_inv).unwrap();
        let b_w = qt_inv.neg();

        let fields = sc.normal_derivations(&m).unwrap();
        assert_eq!(fields.len(), 2);
        let x_images = vec![
            TruncatedSeries::zero(full, m.order()),
            TruncatedSeries::zero(full, m.order()),
        ];
        let base_offsets = [0, full.block("w").unwrap().0];
        for (j, field) in fields.iter().enumerate() {
            let mut jets =
                |_f: usize, comp: usize, beta: &[u32]| Ok(jet_of(&m, &data, comp, beta));
            let evaluated = sc.evaluate(&phi, full, &x_images, &mut jets).unwrap();
            let b = if j == 0 { &b_z } else { &b_w };
            let tau_part = b.mul(&evaluated.differentiate(tau_var).unwrap().with_order(b.order()).unwrap());
            let dz = evaluated.differentiate(base_offsets[j]).unwrap();
            let tau_part = tau_part.unwrap();
            let ord = dz.order().min(tau_part.order());
            let direct = dz.with_order(ord).unwrap().sub(&tau_part.with_order(ord).unwrap()).unwrap();

            let via_engine = sc
                .evaluate(&field.apply(&phi).unwrap(), full, &x_images, &mut jets)
                .unwrap();
            let ord = via_engine.order().min(direct.order());
            let diff = via_engine
                .with_order(ord)
                .unwrap()
                .sub(&direct.with_order(ord).unwrap())
                .unwrap();
            assert!(diff.is_zero_series(), "tangent field mismatch: {diff}");
        }
    }

    #[test]
    fn bump_past_family_order_fails_only_when_used() {
        let m = curved_source(6);
        let shift = |_: usize, _: &[u32]| Q::zero();
        let sc = context_with_jets(&m, &shift, 1);
        let engine = sc.cr_derivation(&m, 0).unwrap();
        let s = sc.symbol(0, 0, &[0, 0]).unwrap();
        // first application lands on order-1 symbols
        let once = engine.apply(&s).unwrap();
        // the second would need order-2 jets that the family does not carry
        let err = engine.apply(&once).unwrap_err();
        assert!(matches!(err, Error::InsufficientOrder { context: "jet symbols", .. }));
        // series not involving the top symbols still differentiate fine
        let x = sc.x_series(0).unwrap();
        assert!(engine.apply(&x).unwrap().is_zero_series());
    }
}
