//! Formal implicit function theorem with exact coefficients.

use alloc::string::String;
use alloc::vec::Vec;

use crate::linalg::QiMatrix;
use crate::series::{SeriesVector, TruncatedSeries};
use crate::vars::{Exponents, VariableBlocks};
use crate::{Error, Result};

/// Solves `phi(params, unknown) = 0` for the named unknown block as a
/// formal series in the remaining variables, to the requested order.
///
/// Requirements, checked at runtime: the system vanishes at the origin, has
/// as many equations as unknowns, and its Jacobian in the unknown block is
/// invertible at the origin. The result always satisfies `phi(params,
/// psi(params)) = 0` modulo degree `order + 1`; a nonzero final residual is
/// reported as an error rather than returned silently.
///
/// The iteration is damped Newton with the constant Jacobian inverse, which
/// gains at least one valuation order per step, so `order` steps suffice.
pub fn implicit_solve(
    phi: &SeriesVector,
    unknown_block: &str,
    order: u32,
) -> Result<SeriesVector> {
    let joint = phi
        .components()
        .first()
        .ok_or(Error::DimensionMismatch { expected: 1, found: 0 })?
        .vars()
        .clone();
    let (u_off, u_len) = joint.block(unknown_block)?;
    if phi.len() != u_len {
        return Err(Error::DimensionMismatch { expected: u_len, found: phi.len() });
    }
    for c in phi.iter() {
        if c.order() < order {
            return Err(Error::InsufficientOrder {
                context: "implicit function theorem",
                needed: order,
                available: c.order(),
            });
        }
        if !c.constant_term().is_zero() {
            return Err(Error::HypothesisNotMet {
                context: "implicit function theorem",
                detail: String::from("system does not vanish at the origin"),
            });
        }
    }

    // parameter context: the joint blocks with the unknown block removed
    let param_blocks: Vec<(&str, usize)> = (0..joint.block_count())
        .filter(|&b| joint.block_name(b) != unknown_block)
        .map(|b| (joint.block_name(b), joint.block_len(b)))
        .collect();
    let params = VariableBlocks::new(&param_blocks)?;

    let mut j0 = QiMatrix::zero(u_len, u_len);
    for (i, c) in phi.iter().enumerate() {
        for j in 0..u_len {
            j0.set(i, j, c.coeff(&Exponents::unit(joint.len(), u_off + j)));
        }
    }
    let j0_inv = j0.inverse("implicit function theorem")?;

    let mut psi: Vec<TruncatedSeries> =
        (0..u_len).map(|_| TruncatedSeries::zero(&params, order).forget_exactness()).collect();
    if order == 0 {
        return SeriesVector::new(psi);
    }

    // assignment slots for the joint variables: parameters map to
    // themselves, the unknown block maps to the current iterate
    let mut param_slots: Vec<Option<usize>> = Vec::with_capacity(joint.len());
    let mut next_param = 0usize;
    for i in 0..joint.len() {
        if i >= u_off && i < u_off + u_len {
            param_slots.push(None);
        } else {
            param_slots.push(Some(next_param));
            next_param += 1;
        }
    }

    for step in 0..=order {
        let assigns: Vec<TruncatedSeries> = param_slots
            .iter()
            .enumerate()
            .map(|(i, slot)| match slot {
                Some(p) => TruncatedSeries::variable(&params, order, *p),
                None => Ok(psi[i - u_off].clone()),
            })
            .collect::<Result<_>>()?;
        let residual = phi.substitute(&params, &assigns)?;
        if residual.all_zero() {
            return SeriesVector::new(psi);
        }
        if step == order {
            return Err(Error::ResidualNonzero { context: "implicit function theorem" });
        }
        let mut next = Vec::with_capacity(u_len);
        for (i, cur) in psi.iter().enumerate() {
            let mut correction = TruncatedSeries::zero(&params, order);
            for (j, r) in residual.iter().enumerate() {
                correction = correction.add(&r.scale(j0_inv.get(i, j)))?;
            }
            next.push(cur.sub(&correction)?.forget_exactness());
        }
        psi = next;
    }
    unreachable!("loop always returns");
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::GaussianRational as Q;

    #[test]
    fn solves_scalar_quadratic() {
        // w - z - w² = 0 for w(z): w = z + z² + 2z³ + 5z⁴ + ...
        let joint = VariableBlocks::new(&[("z", 1), ("w", 1)]).unwrap();
        let phi = TruncatedSeries::from_terms(
            &joint,
            4,
            true,
            alloc::vec![
                (alloc::vec![0, 1], Q::one()),
                (alloc::vec![1, 0], -Q::one()),
                (alloc::vec![0, 2], -Q::one()),
            ],
        )
        .unwrap();
        let psi = implicit_solve(&SeriesVector::new(alloc::vec![phi]).unwrap(), "w", 4).unwrap();
        let w = psi.get(0);
        let expected = [0i64, 1, 1, 2, 5];
        for (k, &c) in expected.iter().enumerate() {
            assert_eq!(
                w.coeff(&Exponents::from_vec(alloc::vec![k as u32])),
                Q::from_integer(c),
                "coefficient of z^{k}"
            );
        }
    }

    #[test]
    fn solves_coupled_system() {
        // u = z + v², v = i·z + u·z, solved for (u, v)
        let joint = VariableBlocks::new(&[("z", 1), ("x", 2)]).unwrap();
        let mk = |terms: alloc::vec::Vec<(alloc::vec::Vec<u32>, Q)>| {
            TruncatedSeries::from_terms(&joint, 3, true, terms).unwrap()
        };
        let phi0 = mk(alloc::vec![
            (alloc::vec![0, 1, 0], Q::one()),
            (alloc::vec![1, 0, 0], -Q::one()),
            (alloc::vec![0, 0, 2], -Q::one()),
        ]);
        let phi1 = mk(alloc::vec![
            (alloc::vec![0, 0, 1], Q::one()),
            (alloc::vec![1, 0, 0], -Q::i()),
            (alloc::vec![1, 1, 0], -Q::one()),
        ]);
        let psi =
            implicit_solve(&SeriesVector::new(alloc::vec![phi0, phi1]).unwrap(), "x", 3).unwrap();
        let params = VariableBlocks::new(&[("z", 1)]).unwrap();
        // substitute back into the system and check it vanishes
        let assigns = alloc::vec![
            TruncatedSeries::variable(&params, 3, 0).unwrap(),
            psi.get(0).clone(),
            psi.get(1).clone(),
        ];
        let joint_phi = SeriesVector::new(alloc::vec![
            mk(alloc::vec![
                (alloc::vec![0, 1, 0], Q::one()),
                (alloc::vec![1, 0, 0], -Q::one()),
                (alloc::vec![0, 0, 2], -Q::one()),
            ]),
            mk(alloc::vec![
                (alloc::vec![0, 0, 1], Q::one()),
                (alloc::vec![1, 0, 0], -Q::i()),
                (alloc::vec![1, 1, 0], -Q::one()),
            ]),
        ])
        .unwrap();
        let residual = joint_phi.substitute(&params, &assigns).unwrap();
        assert!(residual.all_zero());
        // u starts with z, v starts with i·z
        assert_eq!(psi.get(0).coeff(&Exponents::from_vec(alloc::vec![1])), Q::one());
        assert_eq!(psi.get(1).coeff(&Exponents::from_vec(alloc::vec![1])), Q::i());
    }

    #[test]
    fn rejects_singular_jacobian() {
        // w² - z = 0 has no formal solution at the origin
        let joint = VariableBlocks::new(&[("z", 1), ("w", 1)]).unwrap();
        let phi = TruncatedSeries::from_terms(
            &joint,
            3,
            true,
            alloc::vec![(alloc::vec![0, 2], Q::one()), (alloc::vec![1, 0], -Q::one())],
        )
        .unwrap();
        let out = implicit_solve(&SeriesVector::new(alloc::vec![phi]).unwrap(), "w", 3);
        assert!(matches!(out, Err(Error::SingularMatrix { .. })));
    }
}
