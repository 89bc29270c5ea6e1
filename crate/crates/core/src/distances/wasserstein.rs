//! Exact q-Wasserstein distance between persistence diagrams.

use crate::diagrams::{PersistenceDiagram, PersistencePoint};
use crate::error::{Error, Result};

use super::assignment;

#[inline]
fn linf(a: &PersistencePoint, b: &PersistencePoint) -> f64 {
    (a.birth - b.birth).abs().max((a.death - b.death).abs())
}

/// Cost of leaving `p` unmatched: `|birth - death|^q / 2^(q-1)`.
#[inline]
pub(crate) fn diagonal_cost(p: &PersistencePoint, q: f64) -> f64 {
    p.persistence().powf(q) / 2f64.powf(q - 1.0)
}

/// `d_q(p1, p2)`: the minimum over partial matchings of the matched
/// `L∞^q` costs plus the diagonal cost of every unmatched point, raised to
/// `1/q`.
///
/// Solved as an `(n1 + n2)`-square assignment where each side gets one
/// diagonal slot per point of the other side and diagonal-to-diagonal is
/// free.
pub fn wasserstein(p1: &PersistenceDiagram, p2: &PersistenceDiagram, q: f64) -> Result<f64> {
    if !(q >= 1.0) || !q.is_finite() {
        return Err(Error::Parameter(format!("wasserstein order q must be finite and >= 1, got {q}")));
    }
    let (a, b) = (&p1.points, &p2.points);
    let (n1, n2) = (a.len(), b.len());
    let n = n1 + n2;
    if n == 0 {
        return Ok(0.0);
    }
    let pow = |x: f64| if q == 1.0 { x } else { x.powf(q) };
    let mut cost = vec![0.0; n * n];
    for (i, pa) in a.iter().enumerate() {
        let row = &mut cost[i * n..(i + 1) * n];
        for (j, pb) in b.iter().enumerate() {
            row[j] = pow(linf(pa, pb));
        }
        let diag = diagonal_cost(pa, q);
        row[n2..].iter_mut().for_each(|c| *c = diag);
    }
    for i in n1..n {
        let row = &mut cost[i * n..(i + 1) * n];
        for (j, pb) in b.iter().enumerate() {
            row[j] = diagonal_cost(pb, q);
        }
    }
    let assignment = assignment::solve(&cost, n);
    let total: f64 = assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[i * n + j])
        .sum();
    Ok(if q == 1.0 { total } else { total.powf(1.0 / q) })
}
