//! Generic submanifolds in normal coordinates and their complexifications.
//!
//! A manifold of CR dimension `n` and codimension `d` is given by `d`
//! defining series `w = Q(z, chi, tau)` in normal form, meaning
//! `Q(z, 0, tau) = Q(0, chi, tau) = tau`. All computations happen on the
//! complexification, whose coordinate ring uses the four blocks
//! `(z, w, chi, tau)`; the defining ideal is generated either by
//! `w - Q(z, chi, tau)` or, equivalently, by `tau - R(z, w, chi)` where `R`
//! solves `w = Q(z, chi, R)`. The second generating set is the one the
//! reduction and the CR fields are built on: it stays correct even when the
//! two sides of the complexification are not coefficient conjugates of each
//! other, a situation that arises for intermediate normalized data.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::SeriesMatrix;
use crate::sampling::PointSampler;
use crate::scalar::GaussianRational;
use crate::series::{identity_images, SeriesVector, TruncatedSeries};
use crate::solve::implicit_solve;
use crate::vars::VariableBlocks;
use crate::{Error, Result};

/// A point of the complexification, with the holomorphic coordinates
/// `(z, w)` and the antiholomorphic parameters `(chi, tau)` chosen
/// independently. Real points of the underlying manifold correspond to
/// `chi = conj(z)`, `tau = conj(w)`, but nothing here requires that.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ComplexifiedPoint {
    pub z: Vec<GaussianRational>,
    pub w: Vec<GaussianRational>,
    pub chi: Vec<GaussianRational>,
    pub tau: Vec<GaussianRational>,
}

impl ComplexifiedPoint {
    pub fn origin(n: usize, d: usize) -> Self {
        ComplexifiedPoint {
            z: vec![GaussianRational::zero(); n],
            w: vec![GaussianRational::zero(); d],
            chi: vec![GaussianRational::zero(); n],
            tau: vec![GaussianRational::zero(); d],
        }
    }

    pub fn is_origin(&self) -> bool {
        self.z.iter().chain(&self.w).chain(&self.chi).chain(&self.tau).all(GaussianRational::is_zero)
    }

    /// Coordinates in the order of the complexified context `(z, w, chi, tau)`.
    pub fn full_coords(&self) -> Vec<GaussianRational> {
        let mut v = Vec::with_capacity(self.z.len() * 2 + self.w.len() * 2);
        v.extend(self.z.iter().cloned());
        v.extend(self.w.iter().cloned());
        v.extend(self.chi.iter().cloned());
        v.extend(self.tau.iter().cloned());
        v
    }
}

/// The coordinate changes produced by re-centering a manifold at a point:
/// a straightening `c` of the holomorphic side, its inverse, and the
/// corresponding pair on the antiholomorphic side. Composing a map with
/// these transports it between the original and the re-centered picture.
#[derive(Clone, Debug)]
pub struct RecenterData {
    pub point: ComplexifiedPoint,
    /// `c(z, w)`, with `w_new = c(z_old - z0, w_old - w0)`.
    pub straighten: SeriesVector,
    /// `c^{-1}(z, w) = W(z, 0, w)`, exact whenever the data is polynomial.
    pub straighten_inv: SeriesVector,
    /// `c*(chi, tau)`, the antiholomorphic companion of `c`.
    pub straighten_anti: SeriesVector,
    pub straighten_anti_inv: SeriesVector,
}

#[derive(Clone, Debug)]
pub struct NormalManifold {
    n: usize,
    d: usize,
    order: u32,
    ctx: VariableBlocks,
    full: VariableBlocks,
    q: SeriesVector,
    rho: SeriesVector,
    r: SeriesVector,
    reality: bool,
    polynomial: bool,
    /// cr_b[k] holds the tau-coefficients of the k-th CR field.
    cr_b: Vec<SeriesVector>,
}

impl NormalManifold {
    /// Builds a manifold from its defining series, which must live over the
    /// context `(z, chi, tau)` with the given arities and be in normal
    /// form. The working order is the least order among the components.
    pub fn new(n: usize, d: usize, q: SeriesVector) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        if q.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: q.len() });
        }
        let ctx = VariableBlocks::new(&[("z", n), ("chi", n), ("tau", d)])?;
        let full = VariableBlocks::new(&[("z", n), ("w", d), ("chi", n), ("tau", d)])?;
        let first = q.get(0);
        if *first.vars() != ctx {
            return Err(Error::VariableMismatch {
                expected: ctx.signature(),
                found: first.vars().signature(),
            });
        }
        let order = q.min_order();
        if order < 2 {
            return Err(Error::InsufficientOrder {
                context: "manifold construction",
                needed: 2,
                available: order,
            });
        }
        let q = q.try_map(|c| c.with_order(order))?;
        let polynomial = q.iter().all(TruncatedSeries::is_exact);
        Self::check_normal_form(n, d, &q)?;

        // rho_j = w_j - Q_j on the complexified context
        let q_full = q.embed(&full)?;
        let mut rho_comps = Vec::with_capacity(d);
        let w_off = full.block("w")?.0;
        for (j, qj) in q_full.iter().enumerate() {
            let w_j = TruncatedSeries::variable(&full, qj.order(), w_off + j)?;
            rho_comps.push(w_j.sub(qj)?);
        }
        let rho = SeriesVector::new(rho_comps)?;

        // R solves w = Q(z, chi, tau) for tau; stored over the full context
        let solve_ctx = VariableBlocks::new(&[("z", n), ("w", d), ("chi", n), ("sigma", d)])?;
        let mut phi = Vec::with_capacity(d);
        for (j, qj) in q.iter().enumerate() {
            let q_emb = qj.remap(
                &solve_ctx,
                &var_map_for(&ctx, &solve_ctx, &[("z", "z"), ("chi", "chi"), ("tau", "sigma")])?,
            )?;
            let w_j = TruncatedSeries::variable(&solve_ctx, q_emb.order(), n + j)?;
            phi.push(w_j.sub(&q_emb)?);
        }
        let r_params = implicit_solve(&SeriesVector::new(phi)?, "sigma", order)?;
        let r = r_params.embed(&full)?;

        let reality = {
            let mut ok = true;
            for (j, qj) in q.iter().enumerate() {
                let candidate = qj.conj_coefficients().remap(
                    &full,
                    &var_map_for(&ctx, &full, &[("z", "chi"), ("chi", "z"), ("tau", "w")])?,
                )?;
                let diff = candidate.with_order(order)?.sub(r.get(j))?;
                if !diff.is_zero_series() {
                    ok = false;
                    break;
                }
            }
            ok
        };

        let cr_b = Self::cr_coefficients(n, d, &ctx, &full, &q, &r, order)?;

        Ok(NormalManifold { n, d, order, ctx, full, q, rho, r, reality, polynomial, cr_b })
    }

    fn check_normal_form(n: usize, d: usize, q: &SeriesVector) -> Result<()> {
        for (j, qj) in q.iter().enumerate() {
            let generator = j;
            for (e, c) in qj.terms() {
                let ex = e.as_slice();
                let z_deg: u32 = ex[..n].iter().sum();
                let chi_deg: u32 = ex[n..2 * n].iter().sum();
                let tau_deg: u32 = ex[2 * n..].iter().sum();
                let is_unit_tau =
                    z_deg == 0 && chi_deg == 0 && tau_deg == 1 && ex[2 * n + j] == 1;
                if is_unit_tau {
                    if !c.is_one() {
                        return Err(Error::NotNormalForm {
                            generator,
                            reason: format!("coefficient of tau_{} is {}, not 1", j + 1, c),
                        });
                    }
                    continue;
                }
                if z_deg == 0 || chi_deg == 0 {
                    return Err(Error::NotNormalForm {
                        generator,
                        reason: format!(
                            "term {} survives setting z = 0 or chi = 0",
                            e
                        ),
                    });
                }
            }
            // the tau_j unit term must actually be present
            let mut unit = vec![0u32; 2 * n + d];
            unit[2 * n + j] = 1;
            if !qj.coeff(&crate::vars::Exponents::from_vec(unit)).is_one() {
                return Err(Error::NotNormalForm {
                    generator,
                    reason: String::from("missing unit tau term"),
                });
            }
        }
        Ok(())
    }

    fn cr_coefficients(
        n: usize,
        d: usize,
        ctx: &VariableBlocks,
        full: &VariableBlocks,
        q: &SeriesVector,
        r: &SeriesVector,
        order: u32,
    ) -> Result<Vec<SeriesVector>> {
        // graph substitution tau -> R applied to the partials of Q
        let graph_assigns = {
            let mut assigns = identity_images(full, order)?;
            let tau_off = full.block("tau")?.0;
            for j in 0..d {
                assigns[tau_off + j] = r.get(j).clone();
            }
            assigns
        };
        let embed_map = var_map_for(ctx, full, &[("z", "z"), ("chi", "chi"), ("tau", "tau")])?;
        let on_graph = |f: &TruncatedSeries| -> Result<TruncatedSeries> {
            f.remap(full, &embed_map)?.substitute(full, &graph_assigns)
        };

        let mut q_tau_rows = Vec::with_capacity(d);
        for qj in q.iter() {
            let mut row = Vec::with_capacity(d);
            for l in 0..d {
                row.push(on_graph(&qj.differentiate(2 * n + l)?)?);
            }
            q_tau_rows.push(row);
        }
        let derivative_order = q_tau_rows
            .iter()
            .flatten()
            .map(TruncatedSeries::order)
            .min()
            .unwrap_or(order);
        let q_tau = SeriesMatrix::from_rows(
            q_tau_rows
                .into_iter()
                .map(|row| {
                    row.into_iter()
                        .map(|s| s.with_order(derivative_order))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?,
        )?;
        let q_tau_inv = q_tau.inverse_unit("CR field coefficients")?;

        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let mut col = Vec::with_capacity(d);
            for qj in q.iter() {
                col.push(vec![on_graph(&qj.differentiate(n + k)?)?.with_order(derivative_order)?]);
            }
            let rhs = SeriesMatrix::from_rows(col)?;
            let b_k = q_tau_inv.mul(&rhs)?.neg();
            let comps: Vec<TruncatedSeries> =
                (0..d).map(|j| b_k.get(j, 0).clone()).collect();
            out.push(SeriesVector::new(comps)?);
        }
        Ok(out)
    }

    pub fn cr_dim(&self) -> usize {
        self.n
    }

    pub fn codim(&self) -> usize {
        self.d
    }

    pub fn ambient_dim(&self) -> usize {
        self.n + self.d
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn is_polynomial(&self) -> bool {
        self.polynomial
    }

    /// Whether the two sides of the complexification are coefficient
    /// conjugates of each other, to the working order.
    pub fn satisfies_reality(&self) -> bool {
        self.reality
    }

    /// The context `(z, chi, tau)` of the defining series.
    pub fn ctx(&self) -> &VariableBlocks {
        &self.ctx
    }

    /// The complexified context `(z, w, chi, tau)`.
    pub fn full_ctx(&self) -> &VariableBlocks {
        &self.full
    }

    pub fn q(&self) -> &SeriesVector {
        &self.q
    }

    /// Defining functions `rho_j = w_j - Q_j` over the complexified context.
    pub fn rho(&self) -> &SeriesVector {
        &self.rho
    }

    /// The solved parametrization `tau = R(z, w, chi)` of the second
    /// generating set, over the complexified context.
    pub fn conjugate_parametrization(&self) -> &SeriesVector {
        &self.r
    }

    /// The tau-coefficient of the k-th CR field in front of `d/d tau_j`.
    pub fn cr_coefficient(&self, k: usize, j: usize) -> &TruncatedSeries {
        self.cr_b[k].get(j)
    }

    /// Reduces a function on the complexified context modulo the defining
    /// ideal, by substituting `tau = R(z, w, chi)`. The result is the
    /// canonical representative: zero exactly for ideal members.
    pub fn ideal_reduce(&self, f: &TruncatedSeries) -> Result<TruncatedSeries> {
        if *f.vars() != self.full {
            return Err(Error::VariableMismatch {
                expected: self.full.signature(),
                found: f.vars().signature(),
            });
        }
        let order = f.order().min(self.order);
        let mut assigns = identity_images(&self.full, order)?;
        let tau_off = self.full.block("tau")?.0;
        for j in 0..self.d {
            assigns[tau_off + j] = self.r.get(j).with_order(order)?;
        }
        f.substitute(&self.full, &assigns)
    }

    pub fn is_in_ideal(&self, f: &TruncatedSeries) -> Result<bool> {
        Ok(self.ideal_reduce(f)?.is_zero_series())
    }

    /// Applies the k-th CR field `L_k = d/d chi_k + sum_j B_kj d/d tau_j`
    /// to a function on the complexified context. The field is tangent to
    /// the complexification: it maps the defining ideal into itself, and it
    /// annihilates the generators `tau_j - R_j` exactly.
    pub fn cr_derivative(&self, k: usize, f: &TruncatedSeries) -> Result<TruncatedSeries> {
        if k >= self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: k });
        }
        if *f.vars() != self.full {
            return Err(Error::VariableMismatch {
                expected: self.full.signature(),
                found: f.vars().signature(),
            });
        }
        let chi_off = self.full.block("chi")?.0;
        let tau_off = self.full.block("tau")?.0;
        let d_chi = f.differentiate(chi_off + k)?;
        let mut common = d_chi.order();
        let mut tau_parts = Vec::with_capacity(self.d);
        for j in 0..self.d {
            let d_tau = f.differentiate(tau_off + j)?;
            let b = self.cr_b[k].get(j);
            common = common.min(d_tau.order()).min(b.order());
            tau_parts.push((d_tau, b));
        }
        let mut acc = d_chi.with_order(common)?;
        for (d_tau, b) in tau_parts {
            let term = b.with_order(common)?.mul(&d_tau.with_order(common)?)?;
            acc = acc.add(&term)?;
        }
        Ok(acc)
    }

    /// Applies `L^alpha`, the fields in ascending index order: all copies
    /// of `L_1` first, then `L_2`, and so on.
    pub fn cr_derivative_multi(
        &self,
        alpha: &[u32],
        f: &TruncatedSeries,
    ) -> Result<TruncatedSeries> {
        if alpha.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: alpha.len() });
        }
        let mut out = f.clone();
        for (k, &count) in alpha.iter().enumerate() {
            for _ in 0..count {
                out = self.cr_derivative(k, &out)?;
            }
        }
        Ok(out)
    }

    /// Both sides of the chi-coefficient identity: expanding a reduced
    /// function in powers of chi, the coefficient of `chi^alpha` equals
    /// `(1/alpha!) L^alpha f` restricted along `chi = 0, tau = w`. Returns
    /// the two sides normalized to a common order for comparison.
    pub fn chi_coefficient_two_ways(
        &self,
        alpha: &[u32],
        f: &TruncatedSeries,
    ) -> Result<(TruncatedSeries, TruncatedSeries)> {
        let reduced = self.ideal_reduce(f)?;
        let direct = reduced.extract_block_coefficient("chi", alpha)?;

        let weight: u32 = alpha.iter().sum();
        let l_alpha = self.cr_derivative_multi(alpha, f)?;
        let restricted = self.restrict_to_first_jet(&l_alpha)?;
        let alpha_factorial = GaussianRational::new(
            num_rational::BigRational::from_integer(crate::vars::factorial_of(alpha)),
            num_rational::BigRational::from_integer(0.into()),
        );
        let via_fields = restricted.scale(&alpha_factorial.inv()?);

        let common = direct.order().min(via_fields.order()).min(
            self.order.saturating_sub(weight),
        );
        Ok((direct.with_order(common)?, via_fields.with_order(common)?))
    }

    /// Restriction along `chi = 0, tau = w`, which parametrizes the
    /// holomorphic cross-section of the complexification.
    pub fn restrict_to_first_jet(&self, f: &TruncatedSeries) -> Result<TruncatedSeries> {
        let w_off = self.full.block("w")?.0;
        let tau_off = self.full.block("tau")?.0;
        let images: Vec<Option<usize>> = (0..self.full.len())
            .map(|i| {
                if i >= tau_off {
                    Some(w_off + (i - tau_off))
                } else if i >= w_off + self.d && i < tau_off {
                    None
                } else {
                    Some(i)
                }
            })
            .collect();
        f.substitute_linear(&self.full, &images)
    }

    /// Evaluates the defining series at exact coordinates to produce the
    /// matching `w`. Requires polynomial data away from the origin.
    pub fn point_on(
        &self,
        z: Vec<GaussianRational>,
        chi: Vec<GaussianRational>,
        tau: Vec<GaussianRational>,
    ) -> Result<ComplexifiedPoint> {
        if z.len() != self.n || chi.len() != self.n || tau.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: z.len().max(chi.len()),
            });
        }
        let mut coords = Vec::with_capacity(2 * self.n + self.d);
        coords.extend(z.iter().cloned());
        coords.extend(chi.iter().cloned());
        coords.extend(tau.iter().cloned());
        let mut w = Vec::with_capacity(self.d);
        for qj in self.q.iter() {
            let (value, exact) = qj.evaluate(&coords)?;
            if !exact {
                return Err(Error::PolynomialRequired { context: "point on complexification" });
            }
            w.push(value);
        }
        Ok(ComplexifiedPoint { z, w, chi, tau })
    }

    /// Checks that the point satisfies `w = Q(z, chi, tau)` exactly.
    pub fn validate_point(&self, p: &ComplexifiedPoint) -> Result<()> {
        let recomputed = self.point_on(p.z.clone(), p.chi.clone(), p.tau.clone())?;
        for (j, (a, b)) in recomputed.w.iter().zip(&p.w).enumerate() {
            if a != b {
                return Err(Error::PointNotOnManifold { generator: j });
            }
        }
        Ok(())
    }

    /// A random point of the complexification with small exact coordinates.
    pub fn sample_point(&self, sampler: &mut PointSampler) -> Result<ComplexifiedPoint> {
        let z = sampler.gaussian_rationals(self.n);
        let chi = sampler.gaussian_rationals(self.n);
        let tau = sampler.gaussian_rationals(self.d);
        self.point_on(z, chi, tau)
    }

    /// Reconstructs the manifold in normal coordinates centered at `p`.
    /// The translated defining series is straightened by a holomorphic
    /// change `w -> c(z, w)` and its antiholomorphic companion, both
    /// returned so maps can be transported to the new picture.
    pub fn recenter(&self, p: &ComplexifiedPoint) -> Result<(NormalManifold, RecenterData)> {
        self.validate_point(p)?;
        if !self.polynomial && !p.is_origin() {
            return Err(Error::PolynomialRequired { context: "re-centering" });
        }
        let order = self.order;
        let (n, d) = (self.n, self.d);

        // translated defining series, still exact: W(0) = 0 since p lies
        // on the complexification
        let shift_assigns: Vec<TruncatedSeries> = {
            let mut out = Vec::with_capacity(self.ctx.len());
            let coords: Vec<&GaussianRational> =
                p.z.iter().chain(&p.chi).chain(&p.tau).collect();
            for (i, c0) in coords.into_iter().enumerate() {
                let var = TruncatedSeries::variable(&self.ctx, order, i)?;
                out.push(var.add(&TruncatedSeries::constant(&self.ctx, order, c0.clone()))?);
            }
            out
        };
        let w_big = self.q.substitute(&self.ctx, &shift_assigns)?;
        let mut w_comps = Vec::with_capacity(d);
        for (j, wj) in w_big.iter().enumerate() {
            w_comps
                .push(wj.sub(&TruncatedSeries::constant(&self.ctx, order, p.w[j].clone()))?);
        }
        let w_shift = SeriesVector::new(w_comps)?;

        // straightening c: solve w = W(z, 0, sigma) for sigma
        let zw = VariableBlocks::new(&[("z", n), ("w", d)])?;
        let solve_ctx = VariableBlocks::new(&[("z", n), ("w", d), ("sigma", d)])?;
        let w_z0sigma = w_shift.try_map(|wj| {
            let images: Vec<Option<usize>> = (0..self.ctx.len())
                .map(|i| {
                    if i < n {
                        Some(i)
                    } else if i < 2 * n {
                        None
                    } else {
                        Some(n + d + (i - 2 * n))
                    }
                })
                .collect();
            wj.substitute_linear(&solve_ctx, &images)
        })?;
        let mut phi = Vec::with_capacity(d);
        for (j, wj) in w_z0sigma.iter().enumerate() {
            let w_var = TruncatedSeries::variable(&solve_ctx, wj.order(), n + j)?;
            phi.push(w_var.sub(wj)?);
        }
        let c = implicit_solve(&SeriesVector::new(phi)?, "sigma", order)?;
        let c_inv = w_shift.try_map(|wj| {
            let images: Vec<Option<usize>> = (0..self.ctx.len())
                .map(|i| {
                    if i < n {
                        Some(i)
                    } else if i < 2 * n {
                        None
                    } else {
                        Some(n + (i - 2 * n))
                    }
                })
                .collect();
            wj.substitute_linear(&zw, &images)
        })?;

        // antiholomorphic companion c*(chi, tau) = c(0, W(0, chi, tau))
        let chitau = VariableBlocks::new(&[("chi", n), ("tau", d)])?;
        let w_0chitau = w_shift.try_map(|wj| {
            let images: Vec<Option<usize>> = (0..self.ctx.len())
                .map(|i| if i < n { None } else { Some(i - n) })
                .collect();
            wj.substitute_linear(&chitau, &images)
        })?;
        let c_star = {
            let mut assigns = Vec::with_capacity(n + d);
            for _ in 0..n {
                assigns.push(TruncatedSeries::zero(&chitau, order));
            }
            for j in 0..d {
                assigns.push(w_0chitau.get(j).with_order(order)?);
            }
            c.substitute(&chitau, &assigns)?
        };

        // c*^{-1} by solving c*(chi, sigma) = tau
        let anti_solve_ctx = VariableBlocks::new(&[("chi", n), ("tau", d), ("sigma", d)])?;
        let c_star_inv = {
            let mut phi = Vec::with_capacity(d);
            for (j, cj) in c_star.iter().enumerate() {
                let embedded = cj.remap(
                    &anti_solve_ctx,
                    &var_map_for(
                        &chitau,
                        &anti_solve_ctx,
                        &[("chi", "chi"), ("tau", "sigma")],
                    )?,
                )?;
                let tau_var = TruncatedSeries::variable(&anti_solve_ctx, embedded.order(), n + j)?;
                phi.push(embedded.sub(&tau_var)?);
            }
            implicit_solve(&SeriesVector::new(phi)?, "sigma", order)?
        };

        // the re-centered defining series Q~ = c(z, W(z, chi, c*^{-1}(chi, tau)))
        let inner = c_star_inv.try_map(|s| {
            s.remap(
                &self.ctx,
                &var_map_for(&chitau, &self.ctx, &[("chi", "chi"), ("tau", "tau")])?,
            )
        })?;
        let w_composed = {
            let mut assigns = identity_images(&self.ctx, order)?;
            for j in 0..d {
                assigns[2 * n + j] = inner.get(j).clone();
            }
            w_shift.substitute(&self.ctx, &assigns)?
        };
        let q_new = {
            let mut assigns = Vec::with_capacity(n + d);
            for i in 0..n {
                assigns.push(TruncatedSeries::variable(&self.ctx, order, i)?);
            }
            for j in 0..d {
                assigns.push(w_composed.get(j).with_order(order)?);
            }
            c.substitute(&self.ctx, &assigns)?
        };

        let manifold = NormalManifold::new(n, d, q_new)?;
        let data = RecenterData {
            point: p.clone(),
            straighten: c,
            straighten_inv: c_inv,
            straighten_anti: c_star,
            straighten_anti_inv: c_star_inv,
        };
        Ok((manifold, data))
    }
}

/// Builds a remap table sending each named block of `from` to a (same
/// arity) named block of `to`.
pub(crate) fn var_map_for(
    from: &VariableBlocks,
    to: &VariableBlocks,
    pairs: &[(&str, &str)],
) -> Result<Vec<usize>> {
    let mut map = vec![usize::MAX; from.len()];
    for &(src, dst) in pairs {
        let (s_off, s_len) = from.block(src)?;
        let (d_off, d_len) = to.block(dst)?;
        if s_len != d_len {
            return Err(Error::DimensionMismatch { expected: s_len, found: d_len });
        }
        for k in 0..s_len {
            map[s_off + k] = d_off + k;
        }
    }
    if map.iter().any(|&x| x == usize::MAX) {
        return Err(Error::HypothesisNotMet {
            context: "block remap",
            detail: String::from("unmapped source block"),
        });
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::GaussianRational as Q;
    use crate::vars::Exponents;

    fn hyperquadric(order: u32) -> NormalManifold {
        // w = tau + 2i z chi
        let ctx = VariableBlocks::new(&[("z", 1), ("chi", 1), ("tau", 1)]).unwrap();
        let q = TruncatedSeries::from_terms(
            &ctx,
            order,
            true,
            vec![
                (vec![0, 0, 1], Q::one()),
                (vec![1, 1, 0], Q::from_ratio_imag(2, 1)),
            ],
        )
        .unwrap();
        NormalManifold::new(1, 1, SeriesVector::new(vec![q]).unwrap()).unwrap()
    }

    fn relaxed(order: u32) -> NormalManifold {
        // w = tau + z chi: normal, but the two sides of the
        // complexification are not coefficient conjugates
        let ctx = VariableBlocks::new(&[("z", 1), ("chi", 1), ("tau", 1)]).unwrap();
        let q = TruncatedSeries::from_terms(
            &ctx,
            order,
            true,
            vec![(vec![0, 0, 1], Q::one()), (vec![1, 1, 0], Q::one())],
        )
        .unwrap();
        NormalManifold::new(1, 1, SeriesVector::new(vec![q]).unwrap()).unwrap()
    }

    #[test]
    fn normal_form_validation() {
        let ctx = VariableBlocks::new(&[("z", 1), ("chi", 1), ("tau", 1)]).unwrap();
        let bad_cases: Vec<Vec<(Vec<u32>, Q)>> = vec![
            // pure z term survives chi = 0
            vec![(vec![0, 0, 1], Q::one()), (vec![2, 0, 0], Q::one())],
            // pure chi tau term survives z = 0
            vec![(vec![0, 0, 1], Q::one()), (vec![0, 1, 1], Q::one())],
            // wrong unit coefficient
            vec![(vec![0, 0, 1], Q::from_integer(2))],
            // missing unit term entirely
            vec![(vec![1, 1, 0], Q::one())],
        ];
        for terms in bad_cases {
            let q = TruncatedSeries::from_terms(&ctx, 3, true, terms).unwrap();
            let out = NormalManifold::new(1, 1, SeriesVector::new(vec![q]).unwrap());
            assert!(matches!(out, Err(Error::NotNormalForm { .. })));
        }
    }

    #[test]
    fn solved_parametrization_and_reality() {
        let m = hyperquadric(3);
        assert!(m.satisfies_reality());
        // R = w - 2i z chi
        let full = m.full_ctx().clone();
        let r = m.conjugate_parametrization().get(0);
        assert_eq!(r.coeff(&Exponents::from_vec(vec![0, 1, 0, 0])), Q::one());
        assert_eq!(
            r.coeff(&Exponents::from_vec(vec![1, 0, 1, 0])),
            Q::from_ratio_imag(-2, 1)
        );
        assert_eq!(r.term_count(), 2);

        let relaxed = relaxed(3);
        assert!(!relaxed.satisfies_reality());
        // R = w - z chi even though the coefficient conjugate would
        // suggest w + chi z
        let r = relaxed.conjugate_parametrization().get(0);
        assert_eq!(r.coeff(&Exponents::from_vec(vec![1, 0, 1, 0])), -Q::one());
        let _ = full;
    }

    #[test]
    fn ideal_reduction_kills_defining_functions() {
        for m in [hyperquadric(4), relaxed(4)] {
            for rho_j in m.rho().iter() {
                assert!(m.is_in_ideal(rho_j).unwrap());
            }
            // and does not kill a non-member
            let z = TruncatedSeries::variable(m.full_ctx(), 4, 0).unwrap();
            assert!(!m.is_in_ideal(&z).unwrap());
        }
    }

    #[test]
    fn cr_fields_are_tangent() {
        for m in [hyperquadric(4), relaxed(4)] {
            let full = m.full_ctx().clone();
            let tau_off = full.block("tau").unwrap().0;
            // exact annihilation of tau - R
            let tau_var = TruncatedSeries::variable(&full, m.order(), tau_off).unwrap();
            let gen = tau_var.sub(m.conjugate_parametrization().get(0)).unwrap();
            let l_gen = m.cr_derivative(0, &gen).unwrap();
            assert!(l_gen.is_zero_series());
            // ideal membership for the other generating set
            let l_rho = m.cr_derivative(0, m.rho().get(0)).unwrap();
            assert!(m.is_in_ideal(&l_rho).unwrap());
        }
    }

    #[test]
    fn relaxed_cr_coefficient_uses_solved_side() {
        // for w = tau + z chi the field is d/d chi - z d/d tau; the
        // coefficient conjugate would wrongly give -chi
        let m = relaxed(3);
        let b = m.cr_coefficient(0, 0);
        assert_eq!(b.coeff(&Exponents::from_vec(vec![1, 0, 0, 0])), -Q::one());
        assert_eq!(b.term_count(), 1);
    }

    #[test]
    fn chi_coefficients_match_cr_derivatives() {
        let m = hyperquadric(5);
        let full = m.full_ctx().clone();
        // f = w chi + z tau chi^2, not an ideal member
        let f = TruncatedSeries::from_terms(
            &full,
            5,
            true,
            vec![
                (vec![0, 1, 1, 0], Q::from_integer(3)),
                (vec![1, 0, 2, 1], Q::i()),
            ],
        )
        .unwrap();
        for alpha in [[0u32], [1], [2], [3]] {
            let (direct, via_fields) = m.chi_coefficient_two_ways(&alpha, &f).unwrap();
            let diff = direct.sub(&via_fields).unwrap();
            assert!(diff.is_zero_series(), "alpha = {:?}: {} vs {}", alpha, direct, via_fields);
        }
    }

    #[test]
    fn points_and_validation() {
        let m = hyperquadric(3);
        let p = m
            .point_on(
                vec![Q::from_ratio(1, 2)],
                vec![Q::i()],
                vec![Q::from_integer(1)],
            )
            .unwrap();
        // w = 1 + 2i (1/2) i = 1 - 1 = 0
        assert!(p.w[0].is_zero());
        m.validate_point(&p).unwrap();
        let mut bad = p.clone();
        bad.w[0] = Q::one();
        assert!(matches!(
            m.validate_point(&bad),
            Err(Error::PointNotOnManifold { .. })
        ));
    }

    #[test]
    fn recenter_at_origin_is_identity() {
        let m = hyperquadric(4);
        let p = ComplexifiedPoint::origin(1, 1);
        let (m2, data) = m.recenter(&p).unwrap();
        // same defining series, term for term
        let diff = m2.q().get(0).sub(&m.q().get(0).clone().forget_exactness()).unwrap();
        assert!(diff.is_zero_series());
        // straightening is the identity in w
        let c = data.straighten.get(0);
        assert_eq!(c.coeff(&Exponents::from_vec(vec![0, 1])), Q::one());
        assert_eq!(c.term_count(), 1);
    }

    #[test]
    fn recenter_at_generic_point() {
        let m = hyperquadric(4);
        let p = m
            .point_on(
                vec![Q::from_ratio(1, 3)],
                vec![Q::from_ratio(-1, 2)],
                vec![Q::from_ratio_imag(1, 1)],
            )
            .unwrap();
        let (m2, data) = m.recenter(&p).unwrap();
        // construction already validated normal form; the new manifold
        // need not satisfy reality even though the original does
        assert_eq!(m2.order(), m.order());
        // round trip of the straightening pair on the holomorphic side
        let zw = VariableBlocks::new(&[("z", 1), ("w", 1)]).unwrap();
        let mut assigns = identity_images(&zw, m.order()).unwrap();
        assigns[1] = data.straighten_inv.get(0).with_order(m.order()).unwrap();
        let round = data.straighten.substitute(&zw, &assigns).unwrap();
        let w_var = TruncatedSeries::variable(&zw, m.order(), 1).unwrap();
        assert!(round.get(0).sub(&w_var.clone().forget_exactness()).unwrap().is_zero_series());
    }
}
