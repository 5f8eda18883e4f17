use nalgebra::DMatrix;

use super::case::{BusId, GridCase};
use crate::error::{Error, Result};

/// Weighted Laplacian over an ordered list of buses (p.u. on the system base).
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkLaplacian {
    pub buses: Vec<BusId>,
    pub matrix: DMatrix<f64>,
}

/// Laplacian of the network after Kron reduction onto `retained_buses`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedNetwork {
    pub retained_buses: Vec<BusId>,
    pub laplacian: DMatrix<f64>,
}

impl ReducedNetwork {
    pub fn len(&self) -> usize {
        self.retained_buses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.retained_buses.is_empty()
    }

    pub fn position(&self, bus: BusId) -> Result<usize> {
        self.retained_buses
            .iter()
            .position(|b| *b == bus)
            .ok_or(Error::UnknownBus(bus))
    }

    /// View as a plain Laplacian, e.g. to reduce further.
    pub fn as_laplacian(&self) -> NetworkLaplacian {
        NetworkLaplacian {
            buses: self.retained_buses.clone(),
            matrix: self.laplacian.clone(),
        }
    }

    /// Symmetric, zero row sums (relative tolerance), non-positive off-diagonals.
    pub fn check_invariants(&self, tol: f64) -> Result<()> {
        check_laplacian(&self.laplacian, tol)
    }
}

pub(crate) fn check_laplacian(l: &DMatrix<f64>, tol: f64) -> Result<()> {
    let n = l.nrows();
    let scale = l.amax().max(1.0);
    for i in 0..n {
        let row_sum: f64 = l.row(i).iter().sum();
        if row_sum.abs() > tol * scale {
            return Err(Error::validation(format!(
                "Laplacian row {i} sums to zero (got {row_sum:e})"
            )));
        }
        for j in 0..n {
            if (l[(i, j)] - l[(j, i)]).abs() > tol * scale {
                return Err(Error::validation("Laplacian is symmetric"));
            }
            if i != j && l[(i, j)] > tol * scale {
                return Err(Error::validation(
                    "Laplacian off-diagonal entries are non-positive",
                ));
            }
        }
    }
    Ok(())
}

/// Full-bus Laplacian with `L_ij = -b_ij V_i V_j` and `L_ii = sum_j b_ij V_i V_j`.
///
/// `voltages` are per-bus magnitudes in case bus order; `None` means a flat 1.0 p.u. profile.
pub fn build_laplacian(case: &GridCase, voltages: Option<&[f64]>) -> Result<NetworkLaplacian> {
    let n = case.buses.len();
    if let Some(v) = voltages {
        if v.len() != n || v.iter().any(|x| !(*x > 0.0)) {
            return Err(Error::validation(
                "one positive voltage magnitude per bus",
            ));
        }
    }
    let volt = |i: usize| voltages.map_or(1.0, |v| v[i]);
    let mut l = DMatrix::zeros(n, n);
    for br in &case.branches {
        let i = case.bus_index(br.from_bus)?;
        let j = case.bus_index(br.to_bus)?;
        let w = br.susceptance * volt(i) * volt(j);
        l[(i, j)] -= w;
        l[(j, i)] -= w;
        l[(i, i)] += w;
        l[(j, j)] += w;
    }
    Ok(NetworkLaplacian {
        buses: case.bus_ids(),
        matrix: l,
    })
}

/// Schur complement `L_rr - L_re L_ee^{-1} L_er` onto `retained` (kept in the given order).
pub fn kron_reduce(laplacian: &NetworkLaplacian, retained: &[BusId]) -> Result<ReducedNetwork> {
    if retained.is_empty() {
        return Err(Error::validation("retained bus set is non-empty"));
    }
    let pos = |b: &BusId| {
        laplacian
            .buses
            .iter()
            .position(|x| x == b)
            .ok_or(Error::UnknownBus(*b))
    };
    let keep: Vec<usize> = retained.iter().map(pos).collect::<Result<_>>()?;
    let mut sorted = keep.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != keep.len() {
        return Err(Error::validation("retained buses are distinct"));
    }
    let drop: Vec<usize> = (0..laplacian.buses.len())
        .filter(|i| !keep.contains(i))
        .collect();

    let l = &laplacian.matrix;
    let l_rr = l.select_rows(&keep).select_columns(&keep);
    let reduced = if drop.is_empty() {
        l_rr
    } else {
        let l_re = l.select_rows(&keep).select_columns(&drop);
        let l_ee = l.select_rows(&drop).select_columns(&drop);
        let chol = l_ee.cholesky().ok_or(Error::SingularElimination)?;
        let x = chol.solve(&l_re.transpose());
        let mut s = l_rr - &l_re * x;
        // Restore exact symmetry lost to rounding.
        s = (&s + s.transpose()) * 0.5;
        s
    };
    let out = ReducedNetwork {
        retained_buses: retained.to_vec(),
        laplacian: reduced,
    };
    out.check_invariants(1e-9)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn lap(edges: &[(usize, usize, f64)], n: usize) -> NetworkLaplacian {
        let mut m = DMatrix::zeros(n, n);
        for &(i, j, b) in edges {
            m[(i, j)] -= b;
            m[(j, i)] -= b;
            m[(i, i)] += b;
            m[(j, j)] += b;
        }
        NetworkLaplacian {
            buses: (1..=n as u32).map(BusId).collect(),
            matrix: m,
        }
    }

    #[test]
    fn single_edge() {
        let l = lap(&[(0, 1, 5.0)], 2);
        assert_eq!(l.matrix, DMatrix::from_row_slice(2, 2, &[5.0, -5.0, -5.0, 5.0]));
    }

    #[test]
    fn triangle() {
        let l = lap(&[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)], 3);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 2.0 } else { -1.0 };
                assert_eq!(l.matrix[(i, j)], want);
            }
        }
    }

    #[test]
    fn series_elimination() {
        // a - m - c with b_am = 2, b_mc = 3: eliminating m leaves 2*3/(2+3) = 1.2.
        let l = lap(&[(0, 1, 2.0), (1, 2, 3.0)], 3);
        let r = kron_reduce(&l, &[BusId(1), BusId(3)]).unwrap();
        assert_abs_diff_eq!(r.laplacian[(0, 1)], -1.2, epsilon = 1e-12);
        assert_abs_diff_eq!(r.laplacian[(0, 0)], 1.2, epsilon = 1e-12);
    }

    #[test]
    fn no_elimination_is_identity() {
        let l = lap(&[(0, 1, 2.0), (1, 2, 3.0), (0, 2, 0.5)], 3);
        let r = kron_reduce(&l, &l.buses).unwrap();
        assert_eq!(r.laplacian, l.matrix);
    }

    #[test]
    fn disconnected_eliminated_island_is_singular() {
        // Buses 3-4 form an island that touches no retained bus.
        let l = lap(&[(0, 1, 1.0), (2, 3, 1.0)], 4);
        let err = kron_reduce(&l, &[BusId(1), BusId(2)]).unwrap_err();
        assert!(matches!(err, Error::SingularElimination));
    }

    #[test]
    fn voltages_scale_weights() {
        let case = GridCase::ieee24();
        let mut v = vec![1.0; 24];
        v[0] = 1.05;
        let flat = build_laplacian(&case, None).unwrap();
        let scaled = build_laplacian(&case, Some(&v)).unwrap();
        // Branch 1-2 weight scales by V1*V2.
        assert_abs_diff_eq!(scaled.matrix[(0, 1)], flat.matrix[(0, 1)] * 1.05, epsilon = 1e-12);
        check_laplacian(&scaled.matrix, 1e-12).unwrap();
    }

    #[test]
    fn bundled_case_reduction_invariants() {
        let case = GridCase::ieee24();
        let full = build_laplacian(&case, None).unwrap();
        for i in 0..24 {
            assert!(full.matrix.row(i).iter().sum::<f64>().abs() <= 1e-9);
        }
        let red = kron_reduce(&full, &case.generator_buses()).unwrap();
        assert_eq!(red.len(), 10);
        for i in 0..red.len() {
            assert!(red.laplacian.row(i).iter().sum::<f64>().abs() <= 1e-9);
            for j in 0..red.len() {
                if i != j {
                    assert!(red.laplacian[(i, j)] <= 0.0);
                }
            }
        }
    }
}
