//! Iterated Segre maps of a manifold in normal coordinates and the
//! finite-type test built on their generic ranks.
//!
//! The chain alternates holomorphic and antiholomorphic parameter blocks:
//! the first map is `(z, 0)`, and each further map substitutes the
//! coefficient conjugate of the previous one, shifted by one block, into
//! the defining series. The pair of a map and its shifted conjugate
//! satisfies the defining equations identically, which is verified rather
//! than assumed.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{combinations, QiMatrix, SeriesMatrix};
use crate::manifold::NormalManifold;
use crate::sampling::PointSampler;
use crate::scalar::GaussianRational;
use crate::series::{SeriesVector, TruncatedSeries};
use crate::vars::VariableBlocks;
use crate::{Error, Result};

/// Orders above this are never requested for the exact lifting; past it the
/// construction falls back to the manifold's working order and the results
/// carry truncation flags.
const MAX_EXACT_ORDER: u32 = 256;

const WITNESS_TRIALS: u32 = 8;

/// One map of the chain: `n + d` series in `level` blocks of `n` chain
/// parameters.
#[derive(Clone, Debug)]
pub struct SegreMap {
    pub level: usize,
    pub ctx: VariableBlocks,
    pub components: SeriesVector,
}

impl SegreMap {
    /// True when every component is an exact polynomial rather than a
    /// truncation.
    pub fn is_exact(&self) -> bool {
        self.components.iter().all(TruncatedSeries::is_exact)
    }
}

fn block_label(i: usize) -> String {
    if i == 0 {
        String::from("z")
    } else if i % 2 == 1 {
        format!("chi{}", (i + 1) / 2)
    } else {
        format!("z{}", i / 2)
    }
}

fn chain_ctx(n: usize, level: usize) -> Result<VariableBlocks> {
    let labels: Vec<String> = (0..level).map(block_label).collect();
    let spec: Vec<(&str, usize)> = labels.iter().map(|l| (l.as_str(), n)).collect();
    VariableBlocks::new(&spec)
}

/// Working order for the given level. On polynomial data the composition
/// degree is bounded by the defining degree raised to `level - 1`, so
/// requesting that order keeps every series exact.
fn target_order(m: &NormalManifold, level: usize) -> u32 {
    if m.is_polynomial() {
        let base = m
            .q()
            .iter()
            .map(TruncatedSeries::max_degree)
            .max()
            .unwrap_or(1)
            .max(1);
        if let Some(b) = base.checked_pow(level as u32 - 1) {
            if b <= MAX_EXACT_ORDER {
                return b.max(1);
            }
        }
    }
    m.order()
}

/// Truncates or, for exact series, extends the recorded order.
fn at_order(s: &TruncatedSeries, order: u32) -> Result<TruncatedSeries> {
    if s.is_exact() {
        s.with_order(order)
    } else {
        s.with_order(order.min(s.order()))
    }
}

fn first_level(m: &NormalManifold) -> Result<SegreMap> {
    let n = m.cr_dim();
    let ctx = chain_ctx(n, 1)?;
    let order = target_order(m, 1);
    let mut comps = Vec::with_capacity(n + m.codim());
    for i in 0..n {
        comps.push(TruncatedSeries::variable(&ctx, order, i)?);
    }
    for _ in 0..m.codim() {
        comps.push(TruncatedSeries::zero(&ctx, order));
    }
    Ok(SegreMap { level: 1, ctx, components: SeriesVector::new(comps)? })
}

/// The conjugate of `v`, living one block further along the chain: its
/// coefficients are conjugated and every block is renamed to the next one.
fn shifted_conjugate(
    m: &NormalManifold,
    v: &SegreMap,
    ctx_next: &VariableBlocks,
) -> Result<SeriesVector> {
    let n = m.cr_dim();
    let shift: Vec<usize> = (0..v.ctx.len()).map(|j| j + n).collect();
    v.components.conj_coefficients().try_map(|c| c.remap(ctx_next, &shift))
}

fn extend(m: &NormalManifold, v: &SegreMap) -> Result<SegreMap> {
    let n = m.cr_dim();
    let d = m.codim();
    let level = v.level + 1;
    let ctx = chain_ctx(n, level)?;
    let order = target_order(m, level);
    let partner = shifted_conjugate(m, v, &ctx)?;

    // images for the defining series over (z, chi, tau): the fresh z block,
    // the first conjugate block, and the normal part of the partner
    let mut assigns = Vec::with_capacity(2 * n + d);
    for i in 0..2 * n {
        assigns.push(TruncatedSeries::variable(&ctx, order, i)?);
    }
    for j in 0..d {
        assigns.push(at_order(partner.get(n + j), order)?);
    }

    let mut comps = Vec::with_capacity(n + d);
    for i in 0..n {
        comps.push(TruncatedSeries::variable(&ctx, order, i)?);
    }
    for j in 0..d {
        comps.push(at_order(m.q().get(j), order)?.substitute(&ctx, &assigns)?);
    }
    Ok(SegreMap { level, ctx, components: SeriesVector::new(comps)? })
}

/// The Segre map with the given number of parameter blocks.
pub fn segre_map(m: &NormalManifold, level: usize) -> Result<SegreMap> {
    if level == 0 {
        return Err(Error::DimensionMismatch { expected: 1, found: 0 });
    }
    let mut v = first_level(m)?;
    for _ in 1..level {
        v = extend(m, &v)?;
    }
    Ok(v)
}

/// The defining series evaluated on the pair of the next map and the
/// shifted conjugate of the current one. This must vanish identically; the
/// caller asserts it, the function just computes.
pub fn segre_residual(m: &NormalManifold, level: usize) -> Result<SeriesVector> {
    let n = m.cr_dim();
    let d = m.codim();
    let v = segre_map(m, level)?;
    let next = extend(m, &v)?;
    let partner = shifted_conjugate(m, &v, &next.ctx)?;

    let order = next.components.min_order().min(partner.min_order());
    let mut assigns = Vec::with_capacity(2 * (n + d));
    for i in 0..n + d {
        assigns.push(next.components.get(i).with_order(order.min(next.components.get(i).order()))?);
    }
    for i in 0..n + d {
        assigns.push(partner.get(i).with_order(order.min(partner.get(i).order()))?);
    }
    m.rho().try_map(|r| at_order(r, order)?.substitute(&next.ctx, &assigns))
}

fn jacobian(v: &SegreMap) -> Result<Vec<Vec<TruncatedSeries>>> {
    let mut rows = Vec::with_capacity(v.components.len());
    for comp in v.components.iter() {
        let mut row = Vec::with_capacity(v.ctx.len());
        for j in 0..v.ctx.len() {
            row.push(comp.differentiate(j)?);
        }
        rows.push(row);
    }
    let min = rows
        .iter()
        .flat_map(|r| r.iter().map(TruncatedSeries::order))
        .min()
        .unwrap_or(0);
    rows.iter()
        .map(|r| r.iter().map(|e| e.with_order(min)).collect::<Result<Vec<_>>>())
        .collect()
}

/// Largest size of a minor that is not the zero series. On exact data this
/// is the generic rank; on truncated data it is a certified lower bound.
fn generic_rank(rows: &[Vec<TruncatedSeries>]) -> Result<usize> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for size in 1..=nrows.min(ncols) {
        let mut found = false;
        'search: for rs in combinations(nrows, size) {
            for cs in combinations(ncols, size) {
                let minor = SeriesMatrix::from_rows(
                    rs.iter()
                        .map(|&r| cs.iter().map(|&c| rows[r][c].clone()).collect())
                        .collect(),
                )?;
                if !minor.det()?.is_zero_series() {
                    found = true;
                    break 'search;
                }
            }
        }
        if !found {
            break;
        }
        rank = size;
    }
    Ok(rank)
}

/// Searches the zero fiber of `v` for a point where the Jacobian reaches
/// full rank. Candidates set the holomorphic chain blocks to zero, which
/// keeps the map at zero by normality, and range over the conjugate
/// blocks: all ones first, then random draws.
fn find_witness(
    m: &NormalManifold,
    v: &SegreMap,
    full: usize,
    sampler: &mut PointSampler,
) -> Result<Option<Vec<GaussianRational>>> {
    let n = m.cr_dim();
    let level = v.level;
    let param_count = (level / 2) * n;
    let jac = jacobian(v)?;

    let mut candidates = Vec::with_capacity(1 + WITNESS_TRIALS as usize);
    candidates.push(vec![GaussianRational::one(); param_count]);
    for _ in 0..WITNESS_TRIALS {
        candidates.push(sampler.gaussian_rationals(param_count));
    }

    'candidate: for params in candidates {
        let mut coords = vec![GaussianRational::zero(); level * n];
        let mut next = 0;
        for block in (1..level).step_by(2) {
            for p in 0..n {
                coords[block * n + p] = params[next].clone();
                next += 1;
            }
        }
        for comp in v.components.iter() {
            let (value, exact) = comp.evaluate(&coords)?;
            if !exact || !value.is_zero() {
                continue 'candidate;
            }
        }
        let mut numeric = Vec::with_capacity(jac.len());
        for row in &jac {
            let mut out = Vec::with_capacity(row.len());
            for entry in row {
                let (value, exact) = entry.evaluate(&coords)?;
                if !exact {
                    continue 'candidate;
                }
                out.push(value);
            }
            numeric.push(out);
        }
        if QiMatrix::from_rows(numeric)?.rank() == full {
            return Ok(Some(coords));
        }
    }
    Ok(None)
}

/// Result of the finite-type test.
///
/// `generic_ranks[k-1]` is the generic rank of the Jacobian of the level-k
/// map; the scan stops at full rank, at a stall, or at `max_level`. A stall
/// on exact data is conclusive: the ranks can never grow again. The witness
/// stage then looks for an explicit point of the zero fiber where the rank
/// is already full, which may need a level or two beyond the first full
/// generic rank.
#[derive(Clone, Debug)]
pub struct FiniteTypeReport {
    pub full_rank: usize,
    pub generic_ranks: Vec<usize>,
    pub type_index: Option<usize>,
    pub finite_type: bool,
    pub conclusive: bool,
    pub witness_level: Option<usize>,
    pub witness_point: Option<Vec<GaussianRational>>,
    pub certified: bool,
}

pub fn finite_type_test(
    m: &NormalManifold,
    max_level: usize,
    seed: u64,
) -> Result<FiniteTypeReport> {
    let full = m.cr_dim() + m.codim();
    let max_level = max_level.max(2);

    let mut v = first_level(m)?;
    let mut generic_ranks = Vec::new();
    let mut certified = true;
    let mut type_index = None;
    let mut stalled = false;
    loop {
        let jac = jacobian(&v)?;
        certified &= jac.iter().flatten().all(TruncatedSeries::is_exact);
        let rank = generic_rank(&jac)?;
        generic_ranks.push(rank);
        if rank == full {
            type_index = Some(v.level);
            break;
        }
        if generic_ranks.len() >= 2 && generic_ranks[generic_ranks.len() - 2] == rank {
            stalled = true;
            break;
        }
        if v.level >= max_level {
            break;
        }
        v = extend(m, &v)?;
    }

    let finite_type = type_index.is_some();
    let conclusive = finite_type || (stalled && certified);

    let mut witness_level = None;
    let mut witness_point = None;
    if finite_type && m.is_polynomial() && certified {
        let mut sampler = PointSampler::new(seed);
        loop {
            if let Some(point) = find_witness(m, &v, full, &mut sampler)? {
                witness_level = Some(v.level);
                witness_point = Some(point);
                break;
            }
            if v.level >= max_level {
                break;
            }
            v = extend(m, &v)?;
        }
    }

    Ok(FiniteTypeReport {
        full_rank: full,
        generic_ranks,
        type_index,
        finite_type,
        conclusive,
        witness_level,
        witness_point,
        certified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::GaussianRational as Q;
    use crate::vars::Exponents;

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

    fn levi_flat() -> NormalManifold {
        let ctx = VariableBlocks::new(&[("z", 1), ("chi", 1), ("tau", 1)]).unwrap();
        let q = TruncatedSeries::from_terms(&ctx, 2, true, vec![(vec![0, 0, 1], Q::one())])
            .unwrap();
        NormalManifold::new(1, 1, SeriesVector::new(vec![q]).unwrap()).unwrap()
    }

    fn mixed_quadric(order: u32) -> NormalManifold {
        let ctx = VariableBlocks::new(&[("z", 3), ("chi", 3), ("tau", 1)]).unwrap();
        let mut terms = vec![(vec![0, 0, 0, 0, 0, 0, 1], Q::one())];
        for (k, sign) in [(0usize, 1i64), (1, 1), (2, -1)] {
            let mut e = vec![0u32; 7];
            e[k] = 1;
            e[3 + k] = 1;
            terms.push((e, Q::from_ratio_imag(2 * sign, 1)));
        }
        let q = TruncatedSeries::from_terms(&ctx, order, true, terms).unwrap();
        NormalManifold::new(3, 1, SeriesVector::new(vec![q]).unwrap()).unwrap()
    }

    #[test]
    fn chain_context_labels() {
        let m = hyperquadric(1, 4);
        let v = segre_map(&m, 3).unwrap();
        assert_eq!(v.ctx.block_name(0), "z");
        assert_eq!(v.ctx.block_name(1), "chi1");
        assert_eq!(v.ctx.block_name(2), "z1");
        assert_eq!(v.level, 3);
        assert!(v.is_exact());
    }

    #[test]
    fn second_map_matches_hand_computation() {
        // v2 = (z, 2i z chi1) on the hyperquadric
        let m = hyperquadric(1, 4);
        let v = segre_map(&m, 2).unwrap();
        let w = v.components.get(1);
        assert_eq!(w.term_count(), 1);
        assert_eq!(w.coeff(&Exponents::from_vec(vec![1, 1])), Q::from_ratio_imag(2, 1));
    }

    #[test]
    fn third_map_matches_hand_computation() {
        // v3 = (z, 2i chi1 (z - z1))
        let m = hyperquadric(1, 4);
        let v = segre_map(&m, 3).unwrap();
        let w = v.components.get(1);
        assert_eq!(w.term_count(), 2);
        assert_eq!(w.coeff(&Exponents::from_vec(vec![1, 1, 0])), Q::from_ratio_imag(2, 1));
        assert_eq!(w.coeff(&Exponents::from_vec(vec![0, 1, 1])), Q::from_ratio_imag(-2, 1));
    }

    #[test]
    fn residual_vanishes_along_the_chain() {
        let m = hyperquadric(1, 4);
        for level in 1..=3 {
            assert!(segre_residual(&m, level).unwrap().all_zero());
        }
        let m = mixed_quadric(4);
        assert!(segre_residual(&m, 2).unwrap().all_zero());
    }

    #[test]
    fn hyperquadric_is_finite_type() {
        let m = hyperquadric(1, 4);
        let report = finite_type_test(&m, 3, 7).unwrap();
        assert_eq!(report.full_rank, 2);
        assert_eq!(report.generic_ranks, vec![1, 2]);
        assert_eq!(report.type_index, Some(2));
        assert!(report.finite_type);
        assert!(report.conclusive);
        assert!(report.certified);
        // the rank is full on the zero fiber only one level later, at the
        // all-ones conjugate parameter
        assert_eq!(report.witness_level, Some(3));
        assert_eq!(
            report.witness_point,
            Some(vec![Q::zero(), Q::one(), Q::zero()])
        );
    }

    #[test]
    fn levi_flat_is_not_finite_type() {
        let m = levi_flat();
        let report = finite_type_test(&m, 4, 7).unwrap();
        assert_eq!(report.generic_ranks, vec![1, 1]);
        assert!(!report.finite_type);
        assert!(report.conclusive);
        assert!(report.witness_level.is_none());
    }

    #[test]
    fn mixed_quadric_witness_needs_an_extra_level() {
        // on the zero fiber of the level-2 map the base block is zero, so
        // the normal row lies in the span of the coordinate rows; full rank
        // at a point first appears one level later
        let m = mixed_quadric(4);
        let report = finite_type_test(&m, 4, 7).unwrap();
        assert_eq!(report.type_index, Some(2));
        assert_eq!(report.witness_level, Some(3));
    }
}
