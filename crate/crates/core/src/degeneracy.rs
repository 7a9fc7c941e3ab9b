//! The degeneracy filtration of a map: ranks of the CR derivatives of the
//! pulled-back target gradients, the invariant pair they determine, the
//! determinant identities among the rows, and tangent holomorphic vector
//! fields as an independent certification of the same number.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{combinations, QiMatrix, RankTracker, SeriesMatrix};
use crate::manifold::NormalManifold;
use crate::map::FormalMap;
use crate::sampling::PointSampler;
use crate::scalar::GaussianRational;
use crate::series::{SeriesVector, TruncatedSeries};
use crate::vars::{multiindices_of_degree, multiindices_up_to, Exponents};
use crate::{Error, Result};

/// One row of the derivative system: the multiindex of CR fields applied,
/// the target generator it came from, its value at the origin, and whether
/// it enlarged the span when offered in canonical order.
#[derive(Clone, Debug)]
pub struct RowEntry {
    pub alpha: Vec<u32>,
    pub generator: usize,
    pub vector: Vec<GaussianRational>,
    pub independent: bool,
}

/// The filtration of spans by derivative order, together with the invariant
/// pair it determines: `s` is the target ambient dimension minus the
/// stabilized span, and `k0` the first order achieving it.
#[derive(Clone, Debug)]
pub struct DegeneracyReport {
    pub target_ambient: usize,
    pub kmax: u32,
    pub dims: Vec<usize>,
    pub s: usize,
    pub k0: u32,
    pub stabilized: bool,
    pub entries: Vec<RowEntry>,
}

/// The report plus the symbolic rows behind it, kept for the determinant
/// identities and the constancy analysis.
#[derive(Clone, Debug)]
pub struct DegeneracySystem {
    pub report: DegeneracyReport,
    /// Symbolic rows over the source complexification, parallel to
    /// `report.entries`. Each is a vector of length the target ambient
    /// dimension.
    pub row_series: Vec<SeriesVector>,
}

/// Computes the degeneracy filtration at the origin, applying the CR
/// fields in ascending index order (all copies of the first field first).
/// The recorded vectors do not depend on that convention, only the row
/// labels do.
pub fn degeneracy_system(
    source: &NormalManifold,
    target: &NormalManifold,
    map: &FormalMap,
    kmax: u32,
) -> Result<DegeneracySystem> {
    let n = source.cr_dim();
    let dp = target.codim();
    let np = map.target_ambient();

    let mut grads = Vec::with_capacity(dp);
    for j in 0..dp {
        grads.push(map.target_gradient_pullback(source, target, j)?);
    }
    let available = grads.iter().map(SeriesVector::min_order).min().unwrap_or(0);
    if available < kmax {
        return Err(Error::InsufficientOrder {
            context: "degeneracy rows",
            needed: kmax,
            available,
        });
    }

    let mut tracker = RankTracker::new();
    let mut entries = Vec::new();
    let mut row_series = Vec::new();
    let mut dims = Vec::with_capacity(kmax as usize + 1);

    for (j, grad) in grads.iter().enumerate() {
        let vector = grad.at_origin();
        let independent = tracker.offer(&vector);
        entries.push(RowEntry { alpha: vec![0; n], generator: j, vector, independent });
        row_series.push(grad.clone());
    }
    dims.push(tracker.rank());

    // rows of order k derive from rows of order k-1 by applying the field
    // with the highest index whose exponent is positive
    let mut prev: BTreeMap<Exponents, Vec<SeriesVector>> = BTreeMap::new();
    prev.insert(Exponents::zero(n), grads);
    for k in 1..=kmax {
        let mut cur: BTreeMap<Exponents, Vec<SeriesVector>> = BTreeMap::new();
        for alpha_vec in multiindices_of_degree(n, k) {
            let alpha = Exponents::from_vec(alpha_vec.clone());
            let j_star = (0..n).rev().find(|&j| alpha.get(j) > 0).expect("degree is positive");
            let parent = alpha
                .checked_sub(&Exponents::unit(n, j_star))
                .expect("exponent at j_star is positive");
            let parent_rows = prev.get(&parent).expect("parents enumerated at previous degree");
            let mut rows_here = Vec::with_capacity(dp);
            for (j, sv) in parent_rows.iter().enumerate() {
                let derived = sv.try_map(|c| source.cr_derivative(j_star, c))?;
                let vector = derived.at_origin();
                let independent = tracker.offer(&vector);
                entries.push(RowEntry {
                    alpha: alpha_vec.clone(),
                    generator: j,
                    vector,
                    independent,
                });
                rows_here.push(derived);
            }
            row_series.extend(rows_here.iter().cloned());
            cur.insert(alpha, rows_here);
        }
        dims.push(tracker.rank());
        prev = cur;
    }

    let total = dims[kmax as usize];
    let s = np - total;
    let k0 = dims.iter().position(|&r| r == total).unwrap_or(0) as u32;
    let stabilized = kmax >= 1 && dims[kmax as usize - 1] == total;
    let report =
        DegeneracyReport { target_ambient: np, kmax, dims, s, k0, stabilized, entries };
    Ok(DegeneracySystem { report, row_series })
}

pub fn degeneracy_at_origin(
    source: &NormalManifold,
    target: &NormalManifold,
    map: &FormalMap,
    kmax: u32,
) -> Result<DegeneracyReport> {
    Ok(degeneracy_system(source, target, map, kmax)?.report)
}

/// Symbolic constancy of the filtration: for each derivative order, every
/// minor one size larger than the rank at the origin must vanish on the
/// complexification (reduce to zero modulo the ideal). When that holds to
/// the working order, the rank function is constant near the origin and
/// the invariant pair cannot jump.
#[derive(Clone, Debug)]
pub struct SymbolicConstancy {
    pub per_level: Vec<bool>,
    pub constant: bool,
    pub minors_checked: usize,
}

pub fn symbolic_constancy(
    source: &NormalManifold,
    sys: &DegeneracySystem,
) -> Result<SymbolicConstancy> {
    let np = sys.report.target_ambient;
    let mut per_level = Vec::with_capacity(sys.report.dims.len());
    let mut minors_checked = 0usize;
    for (k, &rank_k) in sys.report.dims.iter().enumerate() {
        let level_rows: Vec<&SeriesVector> = sys
            .report
            .entries
            .iter()
            .zip(&sys.row_series)
            .filter(|(e, _)| e.alpha.iter().sum::<u32>() as usize <= k)
            .map(|(_, sv)| sv)
            .collect();
        let size = rank_k + 1;
        if size > level_rows.len() || size > np {
            per_level.push(true);
            continue;
        }
        let common = level_rows
            .iter()
            .map(|sv| sv.min_order())
            .min()
            .unwrap_or(0);
        let mut ok = true;
        'search: for row_set in combinations(level_rows.len(), size) {
            for col_set in combinations(np, size) {
                let matrix = SeriesMatrix::from_rows(
                    row_set
                        .iter()
                        .map(|&ri| {
                            col_set
                                .iter()
                                .map(|&ci| level_rows[ri].get(ci).with_order(common))
                                .collect::<Result<Vec<_>>>()
                        })
                        .collect::<Result<Vec<_>>>()?,
                )?;
                minors_checked += 1;
                let det = matrix.det()?;
                if !source.ideal_reduce(&det)?.is_zero_series() {
                    ok = false;
                    break 'search;
                }
            }
        }
        per_level.push(ok);
    }
    let constant = per_level.iter().all(|&b| b);
    Ok(SymbolicConstancy { per_level, constant, minors_checked })
}

/// Outcome of recomputing the invariant pair at a sampled point of the
/// complexification.
#[derive(Clone, Debug)]
pub struct SampleOutcome {
    pub z: Vec<GaussianRational>,
    pub chi: Vec<GaussianRational>,
    pub tau: Vec<GaussianRational>,
    pub k0: u32,
    pub s: usize,
    pub stabilized: bool,
    pub matches_origin: bool,
}

#[derive(Clone, Debug)]
pub struct ConstancyReport {
    pub origin: DegeneracyReport,
    pub samples: Vec<SampleOutcome>,
    pub all_match: bool,
    pub symbolic: Option<SymbolicConstancy>,
}

/// Probes whether the invariant pair is constant near the origin: the
/// manifolds are re-centered at sampled points of the complexification,
/// the map is transported, and the pair recomputed. Optionally backs the
/// samples with the symbolic minor test. Requires polynomial data, since
/// re-centering a truncated series loses the germ.
pub fn constancy_probe(
    source: &NormalManifold,
    target: &NormalManifold,
    map: &FormalMap,
    kmax: u32,
    trials: u32,
    seed: u64,
    symbolic: bool,
) -> Result<ConstancyReport> {
    let sys = degeneracy_system(source, target, map, kmax)?;
    let origin = sys.report.clone();
    let mut sampler = PointSampler::new(seed);
    let mut samples = Vec::with_capacity(trials as usize);
    let mut attempts = 0u32;
    while samples.len() < trials as usize {
        attempts += 1;
        if attempts > trials.saturating_mul(10).max(20) {
            return Err(Error::SamplingExhausted { context: "constancy probe" });
        }
        let p = match source.sample_point(&mut sampler) {
            Ok(p) => p,
            Err(_) => continue,
        };
        let outcome = match probe_at(source, target, map, kmax, &p) {
            Ok(report) => report,
            // singular straightening or exhausted order at this point:
            // resample rather than fail the probe
            Err(Error::SingularMatrix { .. }) | Err(Error::InsufficientOrder { .. }) => continue,
            Err(e) => return Err(e),
        };
        let matches_origin = outcome.k0 == origin.k0 && outcome.s == origin.s;
        samples.push(SampleOutcome {
            z: p.z,
            chi: p.chi,
            tau: p.tau,
            k0: outcome.k0,
            s: outcome.s,
            stabilized: outcome.stabilized,
            matches_origin,
        });
    }
    let all_match = samples.iter().all(|s| s.matches_origin);
    let symbolic = if symbolic { Some(symbolic_constancy(source, &sys)?) } else { None };
    Ok(ConstancyReport { origin, samples, all_match, symbolic })
}

fn probe_at(
    source: &NormalManifold,
    target: &NormalManifold,
    map: &FormalMap,
    kmax: u32,
    p: &crate::manifold::ComplexifiedPoint,
) -> Result<DegeneracyReport> {
    // image base point on the target complexification
    let mut zw = p.z.clone();
    zw.extend(p.w.iter().cloned());
    let mut image_holo = Vec::with_capacity(map.target_ambient());
    for c in map.holo().iter() {
        let (v, exact) = c.evaluate(&zw)?;
        if !exact {
            return Err(Error::PolynomialRequired { context: "constancy probe" });
        }
        image_holo.push(v);
    }
    let mut chitau = p.chi.clone();
    chitau.extend(p.tau.iter().cloned());
    let mut image_anti = Vec::with_capacity(map.target_ambient());
    for c in map.anti().iter() {
        let (v, exact) = c.evaluate(&chitau)?;
        if !exact {
            return Err(Error::PolynomialRequired { context: "constancy probe" });
        }
        image_anti.push(v);
    }
    let np_cr = map.target_cr();
    let p_tgt = crate::manifold::ComplexifiedPoint {
        z: image_holo[..np_cr].to_vec(),
        w: image_holo[np_cr..].to_vec(),
        chi: image_anti[..np_cr].to_vec(),
        tau: image_anti[np_cr..].to_vec(),
    };
    target.validate_point(&p_tgt)?;

    let (source_new, source_data) = source.recenter(p)?;
    let (target_new, target_data) = target.recenter(&p_tgt)?;
    let map_new = map.recentered(&source_data, &target_data)?;
    degeneracy_at_origin(&source_new, &target_new, &map_new, kmax)
}

/// The determinant identities of the row system. `t` independent rows of
/// the cr-part derivative matrix are selected greedily, then the first `t`
/// columns that make them invertible at the origin. For every remaining
/// column `k`, the cofactor expansion gives series `D_mk` with
///
///   D phi^k_row = sum_m D_mk phi^{c_m}_row   (mod the source ideal)
///
/// for every row of the system; this membership is verified and reported.
/// The determinant and cofactors are returned restricted along
/// `chi = 0, tau = w`, the form in which later constructions consume them.
#[derive(Clone, Debug)]
pub struct DeltaSystem {
    pub t: usize,
    pub rows: Vec<(Vec<u32>, usize)>,
    pub cols: Vec<usize>,
    pub delta: TruncatedSeries,
    pub delta_at_zero: GaussianRational,
    /// For each non-selected column `k`: the `t` restricted cofactors.
    pub cofactors: Vec<(usize, Vec<TruncatedSeries>)>,
    pub residuals_ok: bool,
}

pub fn delta_system(
    source: &NormalManifold,
    sys: &DegeneracySystem,
) -> Result<DeltaSystem> {
    let np_total = sys.report.target_ambient;
    let dp = sys.report.entries.iter().map(|e| e.generator).max().unwrap_or(0) + 1;
    let np = np_total - dp;
    let t = np - sys.report.s;
    if t == 0 {
        return Err(Error::HypothesisNotMet {
            context: "determinant identities",
            detail: String::from("the cr-part of the row system has rank zero"),
        });
    }

    // derivative rows (positive sign, cr columns only): the stored rows
    // carry the negated gradients, so flip the sign here
    let derivative_rows: Vec<(usize, &RowEntry)> = sys
        .report
        .entries
        .iter()
        .enumerate()
        .filter(|(_, e)| e.alpha.iter().any(|&a| a > 0))
        .collect();
    let chosen: Vec<usize> = derivative_rows
        .iter()
        .filter(|(_, e)| e.independent)
        .map(|(i, _)| *i)
        .take(t)
        .collect();
    if chosen.len() < t {
        return Err(Error::HypothesisNotMet {
            context: "determinant identities",
            detail: format!("only {} independent derivative rows, need {}", chosen.len(), t),
        });
    }

    // greedy column choice: first columns that keep the rows invertible
    let mut col_tracker = RankTracker::new();
    let mut cols = Vec::with_capacity(t);
    for k in 0..np {
        let column: Vec<GaussianRational> =
            chosen.iter().map(|&i| -&sys.report.entries[i].vector[k]).collect();
        if col_tracker.offer(&column) {
            cols.push(k);
            if cols.len() == t {
                break;
            }
        }
    }
    if cols.len() < t {
        return Err(Error::SingularMatrix { context: "determinant identities" });
    }

    let common = chosen
        .iter()
        .map(|&i| sys.row_series[i].min_order())
        .min()
        .unwrap_or(0);
    let phi = |row: usize, col: usize, ord: u32| -> Result<TruncatedSeries> {
        Ok(sys.row_series[row].get(col).with_order(ord)?.neg())
    };
    let main = SeriesMatrix::from_rows(
        chosen
            .iter()
            .map(|&i| cols.iter().map(|&k| phi(i, k, common)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?,
    )?;
    let delta_full = main.det()?;
    let delta_at_zero = delta_full.constant_term();
    if delta_at_zero.is_zero() {
        return Err(Error::SingularMatrix { context: "determinant identities" });
    }

    let mut cofactors = Vec::new();
    let mut cofactors_full: Vec<(usize, Vec<TruncatedSeries>)> = Vec::new();
    for k in 0..np {
        if cols.contains(&k) {
            continue;
        }
        let mut per_m = Vec::with_capacity(t);
        for m in 0..t {
            // delete column m, append column k
            let reduced_cols: Vec<usize> = cols
                .iter()
                .enumerate()
                .filter(|(mi, _)| *mi != m)
                .map(|(_, &c)| c)
                .chain(core::iter::once(k))
                .collect();
            let matrix = SeriesMatrix::from_rows(
                chosen
                    .iter()
                    .map(|&i| {
                        reduced_cols
                            .iter()
                            .map(|&c| phi(i, c, common))
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?,
            )?;
            let det = matrix.det()?;
            // sign (-1)^{t + m} with m counted from 1
            let signed = if (t + m + 1) % 2 == 0 { det } else { det.neg() };
            per_m.push(signed);
        }
        cofactors_full.push((k, per_m));
    }

    // verify the memberships for every derivative row of the system, each
    // at the order that row still carries
    let mut residuals_ok = true;
    'rows: for (i, _) in &derivative_rows {
        let row_order = sys.row_series[*i].min_order().min(common);
        for (k, per_m) in &cofactors_full {
            let mut residual = delta_full.with_order(row_order)?.mul(&phi(*i, *k, row_order)?)?;
            for (m, cof) in per_m.iter().enumerate() {
                let product = cof.with_order(row_order)?.mul(&phi(*i, cols[m], row_order)?)?;
                residual = residual.sub(&product)?;
            }
            if !source.ideal_reduce(&residual)?.is_zero_series() {
                residuals_ok = false;
                break 'rows;
            }
        }
    }

    for (k, per_m) in cofactors_full {
        let restricted = per_m
            .into_iter()
            .map(|c| source.restrict_to_first_jet(&c))
            .collect::<Result<Vec<_>>>()?;
        cofactors.push((k, restricted));
    }

    Ok(DeltaSystem {
        t,
        rows: chosen
            .iter()
            .map(|&i| {
                let e = &sys.report.entries[i];
                (e.alpha.clone(), e.generator)
            })
            .collect(),
        cols,
        delta: source.restrict_to_first_jet(&delta_full)?,
        delta_at_zero,
        cofactors,
        residuals_ok,
    })
}

/// Holomorphic vector fields `sum_i a_i(Z') d/dZ'_i` with polynomial
/// coefficients of bounded degree that are tangent to the target along the
/// map, to the working order. Their values at the origin span a space whose
/// dimension matches the degeneracy invariant; computing it from this side
/// gives an independent certification.
#[derive(Clone, Debug)]
pub struct HolVfReport {
    pub jet_order: u32,
    pub solution_dim: usize,
    pub dim0: usize,
    pub to_order: u32,
    /// Reduced basis of the values at the origin.
    pub basis_at_zero: Vec<Vec<GaussianRational>>,
}

pub fn hol_vector_fields(
    source: &NormalManifold,
    target: &NormalManifold,
    map: &FormalMap,
    jet_order: u32,
) -> Result<HolVfReport> {
    let np = map.target_ambient();
    let dp = target.codim();
    let full = source.full_ctx();

    let mut grads = Vec::with_capacity(dp);
    for l in 0..dp {
        grads.push(map.target_gradient_pullback(source, target, l)?);
    }

    // powers of the map components for the monomial coefficients a_i
    let betas = multiindices_up_to(np, jet_order);
    let mut h_emb = Vec::with_capacity(np);
    for i in 0..np {
        h_emb.push(map.holo().get(i).embed(full)?);
    }

    // E_{l,i,beta} = reduce( H^beta gradient_{l,i} ): one unknown per
    // (i, beta), one equation per (l, surviving monomial)
    let mut columns: Vec<(usize, Vec<u32>)> = Vec::new();
    for i in 0..np {
        for beta in &betas {
            columns.push((i, beta.clone()));
        }
    }
    let mut reduced: Vec<Vec<TruncatedSeries>> = Vec::with_capacity(dp);
    let mut to_order = u32::MAX;
    for l in 0..dp {
        let mut per_col = Vec::with_capacity(columns.len());
        for (i, beta) in &columns {
            let mut term = grads[l].get(*i).clone();
            for (comp, h) in h_emb.iter().enumerate() {
                for _ in 0..beta[comp] {
                    let order = term.order().min(h.order());
                    term = term.with_order(order)?.mul(&h.with_order(order)?)?;
                }
            }
            let r = source.ideal_reduce(&term)?;
            to_order = to_order.min(r.order());
            per_col.push(r);
        }
        reduced.push(per_col);
    }
    let to_order = if to_order == u32::MAX { 0 } else { to_order };

    // assemble the linear system over the monomials up to the common order
    let mut monomials: BTreeMap<(usize, Exponents), usize> = BTreeMap::new();
    for (l, per_col) in reduced.iter().enumerate() {
        for series in per_col {
            for (e, _) in series.terms() {
                if e.degree() <= to_order {
                    let next = monomials.len();
                    monomials.entry((l, e.clone())).or_insert(next);
                }
            }
        }
    }
    let mut system = QiMatrix::zero(monomials.len(), columns.len());
    for (l, per_col) in reduced.iter().enumerate() {
        for (col, series) in per_col.iter().enumerate() {
            for (e, c) in series.terms() {
                if e.degree() <= to_order {
                    let row = monomials[&(l, e.clone())];
                    system.set(row, col, c.clone());
                }
            }
        }
    }
    let kernel = system.nullspace();
    let solution_dim = kernel.len();

    // project the solutions to their constant parts a(0)
    let zero_cols: Vec<usize> = columns
        .iter()
        .enumerate()
        .filter(|(_, (_, beta))| beta.iter().all(|&b| b == 0))
        .map(|(idx, _)| idx)
        .collect();
    let mut tracker = RankTracker::new();
    let mut basis_at_zero = Vec::new();
    for v in &kernel {
        let projected: Vec<GaussianRational> =
            zero_cols.iter().map(|&c| v[c].clone()).collect();
        if tracker.offer(&projected) {
            basis_at_zero.push(projected);
        }
    }
    let dim0 = tracker.rank();
    Ok(HolVfReport { jet_order, solution_dim, dim0, to_order, basis_at_zero })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiagnosticStatus {
    Pass,
    Fail,
    Warning,
    Skipped,
}

#[derive(Clone, Debug)]
pub struct BoundsReport {
    pub trivial: (DiagnosticStatus, String),
    pub transversal_bound: (DiagnosticStatus, String),
    pub generic_k0: (DiagnosticStatus, String),
}

/// Sanity bounds on the invariant pair. The trivial range is always
/// checkable; the transversality bound needs the map transversal and the
/// source nondegenerate; the last is a genericity expectation, so its
/// violation is only a warning.
pub fn bounds_diagnostics(
    source: &NormalManifold,
    target: &NormalManifold,
    map: &FormalMap,
    deg: &DegeneracyReport,
) -> Result<BoundsReport> {
    let np = deg.target_ambient;
    let dp = target.codim();
    let upper = np - dp;

    let trivial = if deg.s <= upper {
        (DiagnosticStatus::Pass, format!("0 <= s = {} <= {}", deg.s, upper))
    } else {
        (DiagnosticStatus::Fail, format!("s = {} exceeds {}", deg.s, upper))
    };

    let transversal_bound = {
        let trans = map.transversality();
        if !trans.transversal {
            (DiagnosticStatus::Skipped, String::from("map is not transversal"))
        } else {
            let n_src = source.ambient_dim();
            let id = FormalMap::identity(source.cr_dim(), source.codim(), source.order())?;
            let budget = source.order().min(source.cr_dim() as u32 + 1);
            let self_deg = degeneracy_at_origin(source, source, &id, budget)?;
            if self_deg.s != 0 || !self_deg.stabilized {
                (
                    DiagnosticStatus::Skipped,
                    String::from("source is not finitely nondegenerate"),
                )
            } else if deg.s <= np - n_src {
                (
                    DiagnosticStatus::Pass,
                    format!("s = {} <= {} under transversality", deg.s, np - n_src),
                )
            } else {
                (
                    DiagnosticStatus::Fail,
                    format!("s = {} exceeds transversal bound {}", deg.s, np - n_src),
                )
            }
        }
    };

    let bound = upper - deg.s;
    let generic_k0 = if (deg.k0 as usize) <= bound {
        (DiagnosticStatus::Pass, format!("k0 = {} <= {}", deg.k0, bound))
    } else {
        (
            DiagnosticStatus::Warning,
            format!("k0 = {} exceeds the generic bound {}", deg.k0, bound),
        )
    };

    Ok(BoundsReport { trivial, transversal_bound, generic_k0 })
}
