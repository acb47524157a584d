use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Setting and outcome alphabet sizes for both arms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    pub settings_a: usize,
    pub settings_b: usize,
    pub outcomes_a: usize,
    pub outcomes_b: usize,
}

impl Dims {
    pub fn new(settings_a: usize, settings_b: usize, outcomes_a: usize, outcomes_b: usize) -> Result<Self> {
        let dims = Dims { settings_a, settings_b, outcomes_a, outcomes_b };
        dims.validate()?;
        Ok(dims)
    }

    /// The 2-setting, 2-outcome scenario of the CHSH inequality.
    pub const fn binary_pair() -> Self {
        Dims { settings_a: 2, settings_b: 2, outcomes_a: 2, outcomes_b: 2 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.settings_a == 0 || self.settings_b == 0 {
            return Err(Error::invalid("each arm needs at least one setting"));
        }
        if self.outcomes_a < 2 || self.outcomes_b < 2 {
            return Err(Error::invalid("each arm needs at least two outcomes"));
        }
        Ok(())
    }

    pub fn is_binary_pair(&self) -> bool {
        *self == Self::binary_pair()
    }

    pub fn setting_pairs(&self) -> usize {
        self.settings_a * self.settings_b
    }

    /// Cells per conditional table.
    pub fn table_len(&self) -> usize {
        self.outcomes_a * self.outcomes_b
    }

    /// Total number of `(a, b, A, B)` cells.
    pub fn num_cells(&self) -> usize {
        self.setting_pairs() * self.table_len()
    }

    /// Flat index of cell `(a, b, A, B)`; `a` is the slowest index.
    #[inline]
    pub fn cell(&self, a: usize, b: usize, oa: usize, ob: usize) -> usize {
        ((a * self.settings_b + b) * self.outcomes_a + oa) * self.outcomes_b + ob
    }

    /// Inverse of [`Dims::cell`].
    pub fn cell_coords(&self, index: usize) -> (usize, usize, usize, usize) {
        let ob = index % self.outcomes_b;
        let rest = index / self.outcomes_b;
        let oa = rest % self.outcomes_a;
        let rest = rest / self.outcomes_a;
        (rest / self.settings_b, rest % self.settings_b, oa, ob)
    }

    /// Number of deterministic joint assignments `(A_1..A_SA, B_1..B_SB)`,
    /// or `None` on overflow.
    pub fn num_assignments(&self) -> Option<usize> {
        let a = checked_pow(self.outcomes_a, self.settings_a)?;
        let b = checked_pow(self.outcomes_b, self.settings_b)?;
        a.checked_mul(b)
    }
}

fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    let exp = u32::try_from(exp).ok()?;
    base.checked_pow(exp)
}
