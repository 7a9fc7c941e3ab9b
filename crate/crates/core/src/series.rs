//! Sparse truncated multivariate power series over the Gaussian rationals.
//!
//! A `TruncatedSeries` stores, for a fixed variable context, every nonzero
//! coefficient of total degree at most `order`. The `exact` flag records
//! that the series is a polynomial whose coefficients are all stored, i.e.
//! that nothing was ever discarded; only exact series may have their order
//! raised, and only exact series may be re-centered (substituted with a
//! nonzero constant term).
//!
//! Invariants maintained by every operation:
//! - no zero coefficient is ever stored;
//! - every stored exponent vector has length `vars.len()` and total degree
//!   at most `order`;
//! - arithmetic never fabricates coefficients of degree greater than the
//!   result's recorded order.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::scalar::GaussianRational;
use crate::vars::{Exponents, VariableBlocks};
use crate::{Error, Result};

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TruncatedSeries {
    vars: VariableBlocks,
    order: u32,
    exact: bool,
    terms: BTreeMap<Exponents, GaussianRational>,
}

impl TruncatedSeries {
    pub fn zero(vars: &VariableBlocks, order: u32) -> Self {
        TruncatedSeries { vars: vars.clone(), order, exact: true, terms: BTreeMap::new() }
    }

    pub fn constant(vars: &VariableBlocks, order: u32, c: GaussianRational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Exponents::zero(vars.len()), c);
        }
        TruncatedSeries { vars: vars.clone(), order, exact: true, terms }
    }

    pub fn one(vars: &VariableBlocks, order: u32) -> Self {
        Self::constant(vars, order, GaussianRational::one())
    }

    /// The single variable `idx` as an exact degree-1 polynomial.
    pub fn variable(vars: &VariableBlocks, order: u32, idx: usize) -> Result<Self> {
        if order < 1 {
            return Err(Error::TermBeyondOrder { degree: 1, order });
        }
        if idx >= vars.len() {
            return Err(Error::DimensionMismatch { expected: vars.len(), found: idx });
        }
        let mut terms = BTreeMap::new();
        terms.insert(Exponents::unit(vars.len(), idx), GaussianRational::one());
        Ok(TruncatedSeries { vars: vars.clone(), order, exact: true, terms })
    }

    pub fn monomial(
        vars: &VariableBlocks,
        order: u32,
        exponents: &[u32],
        c: GaussianRational,
    ) -> Result<Self> {
        Self::from_terms(vars, order, true, vec![(exponents.to_vec(), c)])
    }

    /// Builds a series from explicit terms, merging duplicates. `exact`
    /// marks the input as a complete polynomial.
    pub fn from_terms(
        vars: &VariableBlocks,
        order: u32,
        exact: bool,
        raw: Vec<(Vec<u32>, GaussianRational)>,
    ) -> Result<Self> {
        let mut terms: BTreeMap<Exponents, GaussianRational> = BTreeMap::new();
        for (e, c) in raw {
            if e.len() != vars.len() {
                return Err(Error::DimensionMismatch { expected: vars.len(), found: e.len() });
            }
            let exp = Exponents::from_vec(e);
            let deg = exp.degree();
            if deg > order {
                return Err(Error::TermBeyondOrder { degree: deg, order });
            }
            if c.is_zero() {
                continue;
            }
            match terms.get_mut(&exp) {
                Some(existing) => {
                    *existing += &c;
                    if existing.is_zero() {
                        terms.remove(&exp);
                    }
                }
                None => {
                    terms.insert(exp, c);
                }
            }
        }
        Ok(TruncatedSeries { vars: vars.clone(), order, exact, terms })
    }

    pub fn vars(&self) -> &VariableBlocks {
        &self.vars
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    /// Marks a series as genuinely truncated regardless of provenance.
    pub fn forget_exactness(mut self) -> Self {
        self.exact = false;
        self
    }

    pub fn is_zero_series(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, &GaussianRational)> {
        self.terms.iter()
    }

    pub fn coeff(&self, e: &Exponents) -> GaussianRational {
        self.terms.get(e).cloned().unwrap_or_else(GaussianRational::zero)
    }

    pub fn constant_term(&self) -> GaussianRational {
        self.coeff(&Exponents::zero(self.vars.len()))
    }

    /// Largest total degree among stored terms (0 for the zero series).
    pub fn max_degree(&self) -> u32 {
        self.terms.keys().next_back().map_or(0, Exponents::degree)
    }

    /// Smallest total degree among stored terms, or None for the zero series.
    pub fn valuation(&self) -> Option<u32> {
        self.terms.keys().next().map(Exponents::degree)
    }

    /// Changes the recorded order. Lowering drops the terms above the new
    /// order (and the exact flag if any of them were nonzero); raising is
    /// only meaningful for exact polynomials, whose higher coefficients are
    /// known to vanish.
    pub fn with_order(&self, order: u32) -> Result<Self> {
        if order >= self.order {
            if order > self.order && !self.exact {
                return Err(Error::OrderRaiseOnTruncated { from: self.order, to: order });
            }
            let mut out = self.clone();
            out.order = order;
            return Ok(out);
        }
        let mut terms = self.terms.clone();
        let dropped = {
            let keep: BTreeMap<_, _> = terms.iter().filter(|(e, _)| e.degree() <= order).map(|(e, c)| (e.clone(), c.clone())).collect();
            let dropped = keep.len() != terms.len();
            terms = keep;
            dropped
        };
        Ok(TruncatedSeries {
            vars: self.vars.clone(),
            order,
            exact: self.exact && !dropped,
            terms,
        })
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.vars != other.vars {
            return Err(Error::VariableMismatch {
                expected: self.vars.signature(),
                found: other.vars.signature(),
            });
        }
        if self.order != other.order {
            return Err(Error::OrderMismatch { left: self.order, right: other.order });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut terms = self.terms.clone();
        for (e, c) in &other.terms {
            match terms.get_mut(e) {
                Some(existing) => {
                    *existing += c;
                    if existing.is_zero() {
                        terms.remove(e);
                    }
                }
                None => {
                    terms.insert(e.clone(), c.clone());
                }
            }
        }
        Ok(TruncatedSeries {
            vars: self.vars.clone(),
            order: self.order,
            exact: self.exact && other.exact,
            terms,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        let terms = self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect();
        TruncatedSeries { vars: self.vars.clone(), order: self.order, exact: self.exact, terms }
    }

    pub fn scale(&self, c: &GaussianRational) -> Self {
        if c.is_zero() {
            return TruncatedSeries {
                vars: self.vars.clone(),
                order: self.order,
                exact: self.exact,
                terms: BTreeMap::new(),
            };
        }
        let terms = self.terms.iter().map(|(e, v)| (e.clone(), v * c)).collect();
        TruncatedSeries { vars: self.vars.clone(), order: self.order, exact: self.exact, terms }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let order = self.order;
        let mut terms: BTreeMap<Exponents, GaussianRational> = BTreeMap::new();
        for (ea, ca) in &self.terms {
            let da = ea.degree();
            if da > order {
                break;
            }
            for (eb, cb) in &other.terms {
                // terms are sorted by degree, so once past the budget we can
                // stop scanning the inner series
                if da + eb.degree() > order {
                    break;
                }
                let e = ea.plus(eb);
                let c = ca * cb;
                match terms.get_mut(&e) {
                    Some(existing) => {
                        *existing += &c;
                        if existing.is_zero() {
                            terms.remove(&e);
                        }
                    }
                    None => {
                        terms.insert(e, c);
                    }
                }
            }
        }
        let exact = self.exact
            && other.exact
            && (self.is_zero_series()
                || other.is_zero_series()
                || self.max_degree() + other.max_degree() <= order);
        Ok(TruncatedSeries { vars: self.vars.clone(), order, exact, terms })
    }

    /// Partial derivative in variable `idx`. One valid order is consumed
    /// unless the series is an exact polynomial.
    pub fn differentiate(&self, idx: usize) -> Result<Self> {
        if idx >= self.vars.len() {
            return Err(Error::DimensionMismatch { expected: self.vars.len(), found: idx });
        }
        if self.order == 0 && !self.exact {
            return Err(Error::OrderExhausted { needed: 1, available: 0 });
        }
        let order = if self.exact { self.order } else { self.order - 1 };
        let mut terms = BTreeMap::new();
        for (e, c) in &self.terms {
            let k = e.get(idx);
            if k == 0 {
                continue;
            }
            let mut v = e.as_slice().to_vec();
            v[idx] -= 1;
            let coeff = c * &GaussianRational::from_integer(k as i64);
            terms.insert(Exponents::from_vec(v), coeff);
        }
        Ok(TruncatedSeries { vars: self.vars.clone(), order, exact: self.exact, terms })
    }

    pub fn differentiate_multi(&self, alpha: &[u32]) -> Result<Self> {
        if alpha.len() != self.vars.len() {
            return Err(Error::DimensionMismatch { expected: self.vars.len(), found: alpha.len() });
        }
        let mut out = self.clone();
        for (idx, &k) in alpha.iter().enumerate() {
            for _ in 0..k {
                out = out.differentiate(idx)?;
            }
        }
        Ok(out)
    }

    /// Conjugates every coefficient, leaving variables untouched.
    pub fn conj_coefficients(&self) -> Self {
        let terms = self.terms.iter().map(|(e, c)| (e.clone(), c.conj())).collect();
        TruncatedSeries { vars: self.vars.clone(), order: self.order, exact: self.exact, terms }
    }

    /// Transplants the series into another context: source variable `i`
    /// becomes target variable `var_map[i]`. The map must be injective;
    /// target variables not in the image simply do not occur.
    pub fn remap(&self, target: &VariableBlocks, var_map: &[usize]) -> Result<Self> {
        if var_map.len() != self.vars.len() {
            return Err(Error::DimensionMismatch {
                expected: self.vars.len(),
                found: var_map.len(),
            });
        }
        for (i, &t) in var_map.iter().enumerate() {
            if t >= target.len() {
                return Err(Error::DimensionMismatch { expected: target.len(), found: t });
            }
            if var_map[..i].contains(&t) {
                return Err(Error::HypothesisNotMet {
                    context: "remap",
                    detail: String::from("variable map not injective"),
                });
            }
        }
        let mut terms = BTreeMap::new();
        for (e, c) in &self.terms {
            let mut v = vec![0u32; target.len()];
            for (i, &exp) in e.as_slice().iter().enumerate() {
                v[var_map[i]] = exp;
            }
            terms.insert(Exponents::from_vec(v), c.clone());
        }
        Ok(TruncatedSeries { vars: target.clone(), order: self.order, exact: self.exact, terms })
    }

    /// Remaps by matching block names: every block of this context must
    /// occur in the target with the same arity.
    pub fn embed(&self, target: &VariableBlocks) -> Result<Self> {
        let mut var_map = Vec::with_capacity(self.vars.len());
        for b in 0..self.vars.block_count() {
            let name = self.vars.block_name(b);
            let len = self.vars.block_len(b);
            let (off, tlen) = target.block(name)?;
            if tlen != len {
                return Err(Error::DimensionMismatch { expected: len, found: tlen });
            }
            for k in 0..len {
                var_map.push(off + k);
            }
        }
        self.remap(target, &var_map)
    }

    /// Substitutes a target variable (or zero) for each variable of this
    /// series: `images[i] = Some(j)` sends variable i to target variable j,
    /// `None` sends it to zero. Exactness is preserved; degrees never grow.
    pub fn substitute_linear(
        &self,
        target: &VariableBlocks,
        images: &[Option<usize>],
    ) -> Result<Self> {
        if images.len() != self.vars.len() {
            return Err(Error::DimensionMismatch {
                expected: self.vars.len(),
                found: images.len(),
            });
        }
        let mut terms: BTreeMap<Exponents, GaussianRational> = BTreeMap::new();
        'term: for (e, c) in &self.terms {
            let mut v = vec![0u32; target.len()];
            for (i, &exp) in e.as_slice().iter().enumerate() {
                if exp == 0 {
                    continue;
                }
                match images[i] {
                    Some(j) => v[j] += exp,
                    None => continue 'term,
                }
            }
            let exp = Exponents::from_vec(v);
            match terms.get_mut(&exp) {
                Some(existing) => {
                    *existing += c;
                    if existing.is_zero() {
                        terms.remove(&exp);
                    }
                }
                None => {
                    terms.insert(exp, c.clone());
                }
            }
        }
        Ok(TruncatedSeries { vars: target.clone(), order: self.order, exact: self.exact, terms })
    }

    /// Full composition: replaces variable i by `assigns[i]`, a series over
    /// the target context. A substituted series with nonzero constant term
    /// is only accepted when this series is an exact polynomial. The result
    /// is valid to the minimum of the participating orders.
    pub fn substitute(
        &self,
        target: &VariableBlocks,
        assigns: &[TruncatedSeries],
    ) -> Result<Self> {
        if assigns.len() != self.vars.len() {
            return Err(Error::DimensionMismatch {
                expected: self.vars.len(),
                found: assigns.len(),
            });
        }
        let mut used = vec![false; self.vars.len()];
        for e in self.terms.keys() {
            for (i, &exp) in e.as_slice().iter().enumerate() {
                if exp > 0 {
                    used[i] = true;
                }
            }
        }
        let mut cap = self.order;
        for (i, a) in assigns.iter().enumerate() {
            if !used[i] {
                continue;
            }
            if *a.vars() != *target {
                return Err(Error::VariableMismatch {
                    expected: target.signature(),
                    found: a.vars().signature(),
                });
            }
            if !a.constant_term().is_zero() && !self.exact {
                return Err(Error::RecenterTruncated { variable: self.vars.var_name(i) });
            }
            cap = cap.min(a.order());
        }
        // degree bound on the true composition, for the exactness decision
        let mut exact = self.exact;
        if exact {
            for (e, _) in &self.terms {
                let mut bound: u64 = 0;
                for (i, &exp) in e.as_slice().iter().enumerate() {
                    if exp > 0 {
                        if !assigns[i].is_exact() {
                            exact = false;
                            break;
                        }
                        bound += exp as u64 * assigns[i].max_degree() as u64;
                    }
                }
                if !exact || bound > cap as u64 {
                    exact = false;
                    break;
                }
            }
        }

        let mut powers: Vec<Vec<TruncatedSeries>> = Vec::with_capacity(assigns.len());
        for (i, a) in assigns.iter().enumerate() {
            if used[i] {
                powers.push(vec![TruncatedSeries::one(target, cap)]);
                let _ = a; // powers are extended lazily below
            } else {
                powers.push(Vec::new());
            }
        }
        let mut acc = TruncatedSeries::zero(target, cap);
        for (e, c) in &self.terms {
            // valuation bound: skip terms that cannot reach degrees <= cap
            let mut val: u64 = 0;
            let mut vanishes = false;
            for (i, &exp) in e.as_slice().iter().enumerate() {
                if exp == 0 {
                    continue;
                }
                match assigns[i].valuation() {
                    Some(v) => val += exp as u64 * v as u64,
                    None => {
                        vanishes = true;
                        break;
                    }
                }
            }
            if vanishes || val > cap as u64 {
                continue;
            }
            let mut prod = TruncatedSeries::constant(target, cap, c.clone());
            for (i, &exp) in e.as_slice().iter().enumerate() {
                if exp == 0 {
                    continue;
                }
                while powers[i].len() <= exp as usize {
                    let base = assigns[i].with_order(cap.min(assigns[i].order()))?;
                    let next = powers[i].last().unwrap().mul(&base)?;
                    powers[i].push(next);
                }
                prod = prod.mul(&powers[i][exp as usize])?;
                if prod.is_zero_series() {
                    break;
                }
            }
            acc = acc.add(&prod)?;
        }
        acc.exact = exact;
        Ok(acc)
    }

    /// Evaluates at an exact point. The flag in the result is true when the
    /// value is exact (polynomial data, or evaluation at the origin); for a
    /// truncated series at a general point the value is an order-`order`
    /// approximation.
    pub fn evaluate(&self, point: &[GaussianRational]) -> Result<(GaussianRational, bool)> {
        if point.len() != self.vars.len() {
            return Err(Error::DimensionMismatch {
                expected: self.vars.len(),
                found: point.len(),
            });
        }
        let mut acc = GaussianRational::zero();
        for (e, c) in &self.terms {
            let mut term = c.clone();
            for (i, &exp) in e.as_slice().iter().enumerate() {
                for _ in 0..exp {
                    term *= &point[i];
                    if term.is_zero() {
                        break;
                    }
                }
                if term.is_zero() {
                    break;
                }
            }
            acc += &term;
        }
        let exact = self.exact || point.iter().all(GaussianRational::is_zero);
        Ok((acc, exact))
    }

    /// The coefficient of `block_exponents` in the named block, as a series
    /// in the remaining variables (returned over the same context with the
    /// block's exponents zeroed). Extracting a degree-g coefficient from a
    /// truncated series consumes g valid orders.
    pub fn extract_block_coefficient(&self, block: &str, alpha: &[u32]) -> Result<Self> {
        let (off, len) = self.vars.block(block)?;
        if alpha.len() != len {
            return Err(Error::DimensionMismatch { expected: len, found: alpha.len() });
        }
        let weight: u32 = alpha.iter().sum();
        if !self.exact && self.order < weight {
            return Err(Error::OrderExhausted { needed: weight, available: self.order });
        }
        let order = if self.exact { self.order } else { self.order - weight };
        let mut terms = BTreeMap::new();
        for (e, c) in &self.terms {
            if e.as_slice()[off..off + len] == *alpha {
                let mut v = e.as_slice().to_vec();
                for x in &mut v[off..off + len] {
                    *x = 0;
                }
                terms.insert(Exponents::from_vec(v), c.clone());
            }
        }
        Ok(TruncatedSeries { vars: self.vars.clone(), order, exact: self.exact, terms })
    }

    /// Multiplicative inverse of a series with invertible constant term,
    /// via the geometric series, valid to the input's order.
    pub fn invert_unit(&self) -> Result<Self> {
        let c0 = self.constant_term();
        if c0.is_zero() {
            return Err(Error::SingularMatrix { context: "series inversion" });
        }
        let c0_inv = c0.inv()?;
        // self = c0 (1 + n) with val(n) >= 1; inverse = (sum (-n)^k) / c0
        let n = self.scale(&c0_inv).sub(&TruncatedSeries::one(&self.vars, self.order))?;
        let minus_n = n.neg().forget_exactness();
        let mut acc = TruncatedSeries::one(&self.vars, self.order).forget_exactness();
        let mut pw = TruncatedSeries::one(&self.vars, self.order).forget_exactness();
        for _ in 0..self.order {
            pw = pw.mul(&minus_n)?;
            if pw.is_zero_series() {
                break;
            }
            acc = acc.add(&pw)?;
        }
        Ok(acc.scale(&c0_inv))
    }
}

impl fmt::Display for TruncatedSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c})")?;
            for (i, &exp) in e.as_slice().iter().enumerate() {
                if exp == 0 {
                    continue;
                }
                write!(f, "*{}", self.vars.var_name(i))?;
                if exp > 1 {
                    write!(f, "^{exp}")?;
                }
            }
        }
        Ok(())
    }
}

/// A tuple of series sharing one variable context, e.g. the components of a
/// formal map or the gradient of a defining function.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SeriesVector {
    components: Vec<TruncatedSeries>,
}

impl SeriesVector {
    pub fn new(components: Vec<TruncatedSeries>) -> Result<Self> {
        if let Some(first) = components.first() {
            for c in &components[1..] {
                if c.vars() != first.vars() {
                    return Err(Error::VariableMismatch {
                        expected: first.vars().signature(),
                        found: c.vars().signature(),
                    });
                }
            }
        }
        Ok(SeriesVector { components })
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn get(&self, i: usize) -> &TruncatedSeries {
        &self.components[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &TruncatedSeries> {
        self.components.iter()
    }

    pub fn into_components(self) -> Vec<TruncatedSeries> {
        self.components
    }

    pub fn components(&self) -> &[TruncatedSeries] {
        &self.components
    }

    pub fn all_zero(&self) -> bool {
        self.components.iter().all(TruncatedSeries::is_zero_series)
    }

    pub fn min_order(&self) -> u32 {
        self.components.iter().map(TruncatedSeries::order).min().unwrap_or(0)
    }

    /// Constant terms of all components.
    pub fn at_origin(&self) -> Vec<GaussianRational> {
        self.components.iter().map(TruncatedSeries::constant_term).collect()
    }

    pub fn try_map(
        &self,
        mut f: impl FnMut(&TruncatedSeries) -> Result<TruncatedSeries>,
    ) -> Result<Self> {
        let mut out = Vec::with_capacity(self.components.len());
        for c in &self.components {
            out.push(f(c)?);
        }
        SeriesVector::new(out)
    }

    pub fn substitute(
        &self,
        target: &VariableBlocks,
        assigns: &[TruncatedSeries],
    ) -> Result<Self> {
        self.try_map(|c| c.substitute(target, assigns))
    }

    pub fn conj_coefficients(&self) -> Self {
        SeriesVector {
            components: self.components.iter().map(TruncatedSeries::conj_coefficients).collect(),
        }
    }

    pub fn embed(&self, target: &VariableBlocks) -> Result<Self> {
        self.try_map(|c| c.embed(target))
    }
}

/// The identity substitution: each variable of `vars` as an exact series,
/// ready to be spliced into a larger assignment list.
pub fn identity_images(vars: &VariableBlocks, order: u32) -> Result<Vec<TruncatedSeries>> {
    (0..vars.len()).map(|i| TruncatedSeries::variable(vars, order, i)).collect()
}

impl core::ops::Index<usize> for SeriesVector {
    type Output = TruncatedSeries;
    fn index(&self, i: usize) -> &TruncatedSeries {
        &self.components[i]
    }
}

impl<'a> IntoIterator for &'a SeriesVector {
    type Item = &'a TruncatedSeries;
    type IntoIter = core::slice::Iter<'a, TruncatedSeries>;
    fn into_iter(self) -> Self::IntoIter {
        self.components.iter()
    }
}
