//! Branch-product representation of one controllable spin and `N` memory
//! spins.
//!
//! Every Hamiltonian in the protocols is diagonal in the controllable spin, so
//! the joint state stays of the form
//!
//! ```text
//! c_g |g⟩_c ⊗ (v_g,1 ⊗ … ⊗ v_g,N) + c_e |e⟩_c ⊗ (v_e,1 ⊗ … ⊗ v_e,N)
//! ```
//!
//! and needs `O(N)` storage instead of `2^(N+1)` amplitudes.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64 as C64;

use crate::error::{invalid, Error, Result};
use crate::mat2::Mat2;

/// Largest `N` accepted by [`BranchProductState::to_dense`].
pub const MAX_DENSE_SPINS: usize = 14;

/// Tolerance on `‖U†U − I‖` for unitaries handed to
/// [`BranchProductState::apply_branch_unitaries`].
pub const UNITARITY_TOLERANCE: f64 = 1e-8;

/// State of one two-level spin in the `(|g⟩, |e⟩)` basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinVector {
    pub amp_g: C64,
    pub amp_e: C64,
}

impl SpinVector {
    pub const GROUND: SpinVector = SpinVector {
        amp_g: C64::new(1.0, 0.0),
        amp_e: C64::new(0.0, 0.0),
    };
    pub const EXCITED: SpinVector = SpinVector {
        amp_g: C64::new(0.0, 0.0),
        amp_e: C64::new(1.0, 0.0),
    };

    pub fn new(amp_g: C64, amp_e: C64) -> Self {
        SpinVector { amp_g, amp_e }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amp_g.norm_sqr() + self.amp_e.norm_sqr()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &SpinVector) -> C64 {
        self.amp_g.conj() * other.amp_g + self.amp_e.conj() * other.amp_e
    }

    pub fn transform(&self, u: &Mat2) -> SpinVector {
        let [g, e] = u.apply([self.amp_g, self.amp_e]);
        SpinVector { amp_g: g, amp_e: e }
    }

    pub fn scale(&self, k: C64) -> SpinVector {
        SpinVector {
            amp_g: self.amp_g * k,
            amp_e: self.amp_e * k,
        }
    }
}

/// Joint state of the controllable spin and `N` memory spins, stored as two
/// product branches conditioned on the controllable spin.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchProductState {
    c_g: C64,
    c_e: C64,
    v_g: Vec<SpinVector>,
    v_e: Vec<SpinVector>,
}

impl BranchProductState {
    /// State right after the ideal `π/2` pulse on the controllable spin:
    /// `(|g⟩_c + |e⟩_c)/√2 ⊗ |g…g⟩`.
    pub fn initial(n_spins: usize) -> Result<Self> {
        if n_spins == 0 {
            return Err(invalid("n_spins must be at least 1"));
        }
        let c = C64::new(FRAC_1_SQRT_2, 0.0);
        Ok(BranchProductState {
            c_g: c,
            c_e: c,
            v_g: vec![SpinVector::GROUND; n_spins],
            v_e: vec![SpinVector::GROUND; n_spins],
        })
    }

    /// Builds a state from explicit branch amplitudes and memory vectors.
    /// Normalization is not enforced here.
    pub fn from_parts(
        c_g: C64,
        c_e: C64,
        v_g: Vec<SpinVector>,
        v_e: Vec<SpinVector>,
    ) -> Result<Self> {
        if v_g.is_empty() {
            return Err(invalid("n_spins must be at least 1"));
        }
        if v_g.len() != v_e.len() {
            return Err(invalid(format!(
                "branch lengths differ: {} vs {}",
                v_g.len(),
                v_e.len()
            )));
        }
        Ok(BranchProductState { c_g, c_e, v_g, v_e })
    }

    pub fn n_spins(&self) -> usize {
        self.v_g.len()
    }

    pub fn c_g(&self) -> C64 {
        self.c_g
    }

    pub fn c_e(&self) -> C64 {
        self.c_e
    }

    pub fn v_g(&self) -> &[SpinVector] {
        &self.v_g
    }

    pub fn v_e(&self) -> &[SpinVector] {
        &self.v_e
    }

    /// Squared norm of the full joint state.
    pub fn norm_sqr(&self) -> f64 {
        let pg: f64 = self.v_g.iter().map(SpinVector::norm_sqr).product();
        let pe: f64 = self.v_e.iter().map(SpinVector::norm_sqr).product();
        self.c_g.norm_sqr() * pg + self.c_e.norm_sqr() * pe
    }

    /// Applies `u_g[i]` to memory spin `i` of the `|g⟩_c` branch and `u_e[i]`
    /// to memory spin `i` of the `|e⟩_c` branch.
    pub fn apply_branch_unitaries(&self, u_g: &[Mat2], u_e: &[Mat2]) -> Result<Self> {
        let n = self.n_spins();
        if u_g.len() != n || u_e.len() != n {
            return Err(invalid(format!(
                "expected {n} unitaries per branch, got {} and {}",
                u_g.len(),
                u_e.len()
            )));
        }
        for (i, u) in u_g.iter().chain(u_e).enumerate() {
            let defect = u.unitarity_defect();
            if !(defect <= UNITARITY_TOLERANCE) {
                return Err(invalid(format!(
                    "unitary {} is not unitary (‖U†U − I‖ = {defect:e})",
                    i % n
                )));
            }
        }
        Ok(self.map_unchecked(u_g, u_e))
    }

    /// Same as [`apply_branch_unitaries`](Self::apply_branch_unitaries)
    /// without the unitarity or length checks; for callers that generate the
    /// matrices themselves.
    pub(crate) fn map_unchecked(&self, u_g: &[Mat2], u_e: &[Mat2]) -> Self {
        let v_g = self
            .v_g
            .iter()
            .zip(u_g)
            .map(|(v, u)| v.transform(u))
            .collect();
        let v_e = self
            .v_e
            .iter()
            .zip(u_e)
            .map(|(v, u)| v.transform(u))
            .collect();
        BranchProductState {
            c_g: self.c_g,
            c_e: self.c_e,
            v_g,
            v_e,
        }
    }

    /// `Π_i ⟨v_g,i|v_e,i⟩`.
    pub fn branch_overlap(&self) -> C64 {
        self.v_g
            .iter()
            .zip(&self.v_e)
            .map(|(g, e)| g.inner(e))
            .product()
    }

    /// Probability of finding the controllable spin in
    /// `|+y⟩ = (|e⟩ + i|g⟩)/√2`:
    ///
    /// `½(|c_g|²Π‖v_g,i‖² + |c_e|²Π‖v_e,i‖²) − Im(c_g* c_e Π⟨v_g,i|v_e,i⟩)`.
    pub fn measure_plus_y(&self) -> f64 {
        let cross = self.c_g.conj() * self.c_e * self.branch_overlap();
        0.5 * self.norm_sqr() - cross.im
    }

    /// Expands to a dense statevector of length `2^(N+1)`.
    ///
    /// The controllable spin is the most significant qubit, memory spin 1 the
    /// next and memory spin `N` the least significant; `|g⟩` is index 0.
    pub fn to_dense(&self) -> Result<Vec<C64>> {
        let n = self.n_spins();
        if n > MAX_DENSE_SPINS {
            return Err(Error::Capacity {
                what: "n_spins",
                got: n,
                limit: MAX_DENSE_SPINS,
            });
        }
        let half = 1usize << n;
        let mut out = vec![C64::new(0.0, 0.0); 2 * half];
        for (offset, c, branch) in [(0, self.c_g, &self.v_g), (half, self.c_e, &self.v_e)] {
            for idx in 0..half {
                let mut amp = c;
                for (k, v) in branch.iter().enumerate() {
                    let bit = (idx >> (n - 1 - k)) & 1;
                    amp *= if bit == 0 { v.amp_g } else { v.amp_e };
                }
                out[offset + idx] = amp;
            }
        }
        Ok(out)
    }
}
