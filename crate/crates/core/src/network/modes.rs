use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::case::BusId;
use super::laplacian::ReducedNetwork;
use crate::error::{Error, Result};

/// Eigenvalues below this are treated as the zero mode when checking connectivity.
const ZERO_MODE_TOL: f64 = 1e-8;

/// Absolute gap below which lambda_2 and lambda_3 count as one degenerate eigenvalue.
pub const FIEDLER_DEGENERACY_TOL: f64 = 1e-8;

/// Relative dead-band on the Fiedler vector: entries with `|beta_2i| < tau * max|beta_2|`
/// are classified non-local.
pub const FIEDLER_DEAD_BAND: f64 = 1e-3;

/// Spectrum of a reduced Laplacian. Modes are numbered from 1 (the constant mode) to N;
/// mode 2 is the Fiedler mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalDecomposition {
    pub buses: Vec<BusId>,
    /// Ascending.
    pub eigenvalues: DVector<f64>,
    /// Column `a - 1` is the orthonormal eigenvector of mode `a`.
    pub eigenvectors: DMatrix<f64>,
}

impl ModalDecomposition {
    pub const FIEDLER: usize = 2;

    pub fn len(&self) -> usize {
        self.buses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buses.is_empty()
    }

    pub fn position(&self, bus: BusId) -> Result<usize> {
        self.buses
            .iter()
            .position(|b| *b == bus)
            .ok_or(Error::UnknownBus(bus))
    }

    /// Eigenvalue of `mode` (1-based).
    pub fn eigenvalue(&self, mode: usize) -> f64 {
        self.eigenvalues[mode - 1]
    }

    /// Component of eigenvector `mode` (1-based) at bus position `i`.
    pub fn component(&self, mode: usize, i: usize) -> f64 {
        self.eigenvectors[(i, mode - 1)]
    }

    /// `beta_{mode,i} * beta_{mode,b}`; invariant under the eigenvector's sign.
    pub fn coupling(&self, mode: usize, i: usize, b: usize) -> f64 {
        self.component(mode, i) * self.component(mode, b)
    }

    /// The Fiedler vector, rejecting a degenerate second eigenvalue.
    pub fn fiedler(&self) -> Result<Vec<f64>> {
        if self.len() < 2 {
            return Err(Error::validation("network has at least two retained buses"));
        }
        if self.len() > 2 {
            let (l2, l3) = (self.eigenvalue(2), self.eigenvalue(3));
            if (l3 - l2).abs() <= FIEDLER_DEGENERACY_TOL {
                return Err(Error::DegenerateFiedler {
                    lambda2: l2,
                    lambda3: l3,
                });
            }
        }
        Ok(self.eigenvectors.column(1).iter().copied().collect())
    }

    /// `lambda_3 / lambda_2`, when both exist.
    pub fn spectral_gap_ratio(&self) -> Option<f64> {
        (self.len() >= 3).then(|| self.eigenvalue(3) / self.eigenvalue(2))
    }

    /// `||L - B diag(lambda) B^T||_max`.
    pub fn reconstruction_error(&self, laplacian: &DMatrix<f64>) -> f64 {
        let rebuilt = &self.eigenvectors
            * DMatrix::from_diagonal(&self.eigenvalues)
            * self.eigenvectors.transpose();
        (laplacian - rebuilt).amax()
    }
}

/// Eigendecomposition with ascending eigenvalues and each eigenvector flipped so its
/// largest-magnitude entry is positive.
pub fn eigendecompose(network: &ReducedNetwork) -> Result<ModalDecomposition> {
    let n = network.len();
    if n == 0 {
        return Err(Error::validation("reduced network is non-empty"));
    }
    let eig = SymmetricEigen::try_new(network.laplacian.clone(), 1e-15, 10_000)
        .ok_or(Error::EigenNonConvergence(n))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(k).clone_owned();
        // First entry of (near-)maximal magnitude decides the sign; the tolerance keeps the
        // choice stable for the constant mode, whose entries are all equal.
        let amax = v.amax();
        let lead = v
            .iter()
            .position(|x| x.abs() >= amax * (1.0 - 1e-9))
            .unwrap_or(0);
        if v[lead] < 0.0 {
            v.neg_mut();
        }
        eigenvectors.set_column(col, &v);
    }

    let scale = network.laplacian.amax().max(1.0);
    if n > 1 && eigenvalues[1] <= ZERO_MODE_TOL * scale {
        return Err(Error::validation(
            "reduced network is connected (lambda_2 > 0)",
        ));
    }
    Ok(ModalDecomposition {
        buses: network.retained_buses.clone(),
        eigenvalues,
        eigenvectors,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BusClass {
    Local,
    NonLocal,
}

impl std::fmt::Display for BusClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BusClass::Local => "local",
            BusClass::NonLocal => "nonlocal",
        })
    }
}

/// Split of the retained buses into those swinging with the event bus in the Fiedler mode
/// and the rest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusClassification {
    pub event_bus: BusId,
    pub local: BTreeSet<BusId>,
    pub nonlocal: BTreeSet<BusId>,
}

impl BusClassification {
    pub fn class_of(&self, bus: BusId) -> Option<BusClass> {
        if self.local.contains(&bus) {
            Some(BusClass::Local)
        } else if self.nonlocal.contains(&bus) {
            Some(BusClass::NonLocal)
        } else {
            None
        }
    }

    pub fn members(&self, class: BusClass) -> &BTreeSet<BusId> {
        match class {
            BusClass::Local => &self.local,
            BusClass::NonLocal => &self.nonlocal,
        }
    }
}

/// Local buses share the sign of the event bus's Fiedler component; entries inside the
/// dead-band are non-local. The event bus itself is always local.
pub fn classify_buses(modes: &ModalDecomposition, event_bus: BusId) -> Result<BusClassification> {
    let b = modes.position(event_bus)?;
    let fiedler = modes.fiedler()?;
    classify_with_vector(&modes.buses, &fiedler, b)
}

pub(crate) fn classify_with_vector(
    buses: &[BusId],
    fiedler: &[f64],
    b: usize,
) -> Result<BusClassification> {
    let tau = FIEDLER_DEAD_BAND * fiedler.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let sign_b = fiedler[b].signum();
    let event_significant = fiedler[b].abs() >= tau;
    let mut local = BTreeSet::new();
    let mut nonlocal = BTreeSet::new();
    for (i, (&bus, &x)) in buses.iter().zip(fiedler).enumerate() {
        let is_local =
            i == b || (event_significant && x.abs() >= tau && x.signum() == sign_b);
        if is_local {
            local.insert(bus);
        } else {
            nonlocal.insert(bus);
        }
    }
    Ok(BusClassification {
        event_bus: buses[b],
        local,
        nonlocal,
    })
}
