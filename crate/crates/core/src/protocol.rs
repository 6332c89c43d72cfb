// Copyright 2026 The qho-control Authors
// SPDX-License-Identifier: Apache-2.0

//! Piecewise-constant control fields.
//!
//! A [`Protocol`] holds the boundary trap frequencies, a common step duration
//! and one amplitude per step. The boundary frequencies only fix the initial
//! mode and the target basis; the first and last pulses are free.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "RawProtocol<T>",
    into = "RawProtocol<T>",
    bound(
        serialize = "T: Scalar + Serialize",
        deserialize = "T: Scalar + Deserialize<'de>"
    )
)]
pub struct Protocol<T> {
    omega0: T,
    omega_t: T,
    dt: T,
    omegas: Vec<T>,
}

/// Wire layout of the protocol JSON document.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProtocol<T> {
    omega0: T,
    #[serde(rename = "omegaT")]
    omega_t: T,
    dt: T,
    omegas: Vec<T>,
}

impl<T: Scalar> TryFrom<RawProtocol<T>> for Protocol<T> {
    type Error = Error;

    fn try_from(raw: RawProtocol<T>) -> Result<Self> {
        Protocol::new(raw.omega0, raw.omega_t, raw.dt, raw.omegas)
    }
}

impl<T: Scalar> From<Protocol<T>> for RawProtocol<T> {
    fn from(p: Protocol<T>) -> Self {
        RawProtocol {
            omega0: p.omega0,
            omega_t: p.omega_t,
            dt: p.dt,
            omegas: p.omegas,
        }
    }
}

fn positive<T: Scalar>(name: &'static str, value: T) -> Result<()> {
    // `!(v > 0)` also rejects NaN.
    if !(value > T::zero()) || !value.is_finite() {
        return Err(Error::NonPositiveFrequency {
            name,
            value: value.to_f64_lossy(),
        });
    }
    Ok(())
}

fn check_pulses<T: Scalar>(omegas: &[T]) -> Result<()> {
    match omegas.iter().position(|w| !w.is_finite()) {
        Some(index) => Err(Error::NonFiniteEntry { index }),
        None => Ok(()),
    }
}

impl<T: Scalar> Protocol<T> {
    pub fn new(omega0: T, omega_t: T, dt: T, omegas: Vec<T>) -> Result<Self> {
        Protocol {
            omega0,
            omega_t,
            dt,
            omegas,
        }
        .validate()
    }

    /// Builds a protocol of total duration `total` with `dt = total / M`.
    ///
    /// An empty `omegas` gives the sudden quench; `total` is then ignored
    /// and `dt` is set to 1.
    pub fn with_duration(omega0: T, omega_t: T, total: T, omegas: Vec<T>) -> Result<Self> {
        positive("T", total)?;
        let dt = if omegas.is_empty() {
            T::one()
        } else {
            total / T::from_usize(omegas.len()).expect("pulse count fits the scalar")
        };
        Self::new(omega0, omega_t, dt, omegas)
    }

    /// Returns the protocol unchanged if every invariant holds.
    pub fn validate(self) -> Result<Self> {
        positive("omega0", self.omega0)?;
        positive("omegaT", self.omega_t)?;
        positive("dt", self.dt)?;
        check_pulses(&self.omegas)?;
        Ok(self)
    }

    pub fn omega0(&self) -> T {
        self.omega0
    }

    pub fn omega_t(&self) -> T {
        self.omega_t
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn omegas(&self) -> &[T] {
        &self.omegas
    }

    /// Number of pulses `M`.
    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    /// Total duration `T = M·dt`.
    pub fn duration(&self) -> T {
        self.dt * T::from_usize(self.len()).expect("pulse count fits the scalar")
    }

    /// Same boundary data and step, new amplitudes.
    pub fn with_omegas(&self, omegas: Vec<T>) -> Result<Self> {
        check_pulses(&omegas)?;
        Ok(Protocol {
            omega0: self.omega0,
            omega_t: self.omega_t,
            dt: self.dt,
            omegas,
        })
    }

    /// Splits every pulse into `factor` identical pulses of duration
    /// `dt / factor`. The represented field `ω(t)` is unchanged.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::InvalidFactor);
        }
        let omegas = self
            .omegas
            .iter()
            .flat_map(|&w| std::iter::repeat_n(w, factor))
            .collect();
        let dt = self.dt / T::from_usize(factor).expect("factor fits the scalar");
        Protocol::new(self.omega0, self.omega_t, dt, omegas)
    }

    /// Replaces each of `chunks` equal blocks of pulses by its arithmetic
    /// mean, lengthening the step accordingly.
    pub fn collapse(&self, chunks: usize) -> Result<Self> {
        let view = ChunkView::new(self.len(), chunks)?;
        let k = T::from_usize(view.per_chunk).expect("chunk size fits the scalar");
        let omegas = self
            .omegas
            .chunks(view.per_chunk)
            .map(|c| c.iter().copied().sum::<T>() / k)
            .collect();
        Protocol::new(self.omega0, self.omega_t, self.dt * k, omegas)
    }
}

impl<T: Scalar + Serialize> Protocol<T> {
    /// Pretty JSON document, each float in shortest round-trip form.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("protocol serializes")
    }
}

impl<T: Scalar + for<'de> Deserialize<'de>> Protocol<T> {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Partition of `M` pulses into `chunks` blocks of `per_chunk` pulses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChunkView {
    pub chunks: usize,
    pub per_chunk: usize,
}

impl ChunkView {
    pub fn new(pulses: usize, chunks: usize) -> Result<Self> {
        if chunks == 0 || pulses == 0 || !pulses.is_multiple_of(chunks) {
            return Err(Error::IndivisibleChunking { pulses, chunks });
        }
        Ok(ChunkView {
            chunks,
            per_chunk: pulses / chunks,
        })
    }
}
