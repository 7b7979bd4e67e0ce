use std::fmt;

use num_complex::Complex64;

use crate::jones::Jones;
use crate::waveform::Polarization;

/// Per-record status bits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct ObservationFlags(pub u32);

impl ObservationFlags {
    /// Expected peak not found above threshold.
    pub const MISSING: Self = Self(1);
    /// No partner sweep of the other polarization; only the launch column
    /// of `jones` is populated.
    pub const COLUMN_ONLY: Self = Self(1 << 1);
    /// Response came from circular filtering of a lone capture. An X record
    /// paired with such a Y record shares its degraded Jones matrix.
    pub const UNALIGNED: Self = Self(1 << 2);
    /// SNR estimated from fewer than 100 noise bins.
    pub const LOW_CONFIDENCE: Self = Self(1 << 3);
    /// SNR at the ±99 dB clamp.
    pub const SNR_CLAMPED: Self = Self(1 << 4);
    /// First record after missing sweeps.
    pub const DISCONTINUITY: Self = Self(1 << 5);
    /// Peak on the response edge; delay falls back to the bin centre.
    pub const EDGE: Self = Self(1 << 6);

    const NAMES: [(Self, &'static str); 7] = [
        (Self::MISSING, "missing"),
        (Self::COLUMN_ONLY, "column_only"),
        (Self::UNALIGNED, "unaligned"),
        (Self::LOW_CONFIDENCE, "low_confidence"),
        (Self::SNR_CLAMPED, "snr_clamped"),
        (Self::DISCONTINUITY, "discontinuity"),
        (Self::EDGE, "edge"),
    ];

    pub fn empty() -> Self {
        Self(0)
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn contains(self, other: Self) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn insert(&mut self, other: Self) {
        self.0 |= other.0;
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn names(self) -> Vec<&'static str> {
        Self::NAMES
            .iter()
            .filter(|(f, _)| self.contains(*f))
            .map(|(_, n)| *n)
            .collect()
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::NAMES.iter().find(|(_, n)| *n == name).map(|(f, _)| *f)
    }
}

impl std::ops::BitOr for ObservationFlags {
    type Output = Self;

    fn bitor(self, rhs: Self) -> Self {
        Self(self.0 | rhs.0)
    }
}

impl fmt::Display for ObservationFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.names().join("|"))
    }
}

/// One repeater seen in one sweep.
///
/// `jones` holds the bin-derotated complex peak values: the launch column
/// always, the other column too once the partner sweep arrived. Its phase is
/// absolute (`φ − 2π·f_IF·τ`); series are referenced to their first sample
/// downstream.
#[derive(Clone, Debug, PartialEq)]
pub struct RepeaterObservation {
    /// 1-based repeater number.
    pub repeater: usize,
    pub sweep_index: u64,
    pub launch_pol: Polarization,
    /// Seconds. Paired records carry the pair midpoint.
    pub timestamp: f64,
    pub jones: Jones,
    /// Sub-sample delay estimate, seconds.
    pub delay_est: f64,
    /// Tracked (smoothed) delay the search was centred on, seconds.
    pub nominal_delay: f64,
    /// Peak power over both receive channels relative to a full-scale
    /// matched echo, dB.
    pub intensity_db: f64,
    pub snr_db: f64,
    pub measurement_bandwidth_hz: f64,
    pub flags: ObservationFlags,
}

impl RepeaterObservation {
    /// The column measured in this record's own sweep.
    pub fn column(&self) -> [Complex64; 2] {
        self.jones.column(self.launch_pol.index())
    }

    pub fn is_paired(&self) -> bool {
        !self.flags.contains(ObservationFlags::COLUMN_ONLY)
    }
}

/// Combines an X-launch and a Y-launch column into a full Jones matrix.
pub fn assemble_jones(x_column: [Complex64; 2], y_column: [Complex64; 2]) -> Jones {
    Jones::from_columns(x_column, y_column)
}

/// Column-only matrix with the other column zero.
pub fn column_jones(pol: Polarization, column: [Complex64; 2]) -> Jones {
    let zero = [Complex64::new(0.0, 0.0); 2];
    match pol {
        Polarization::X => Jones::from_columns(column, zero),
        Polarization::Y => Jones::from_columns(zero, column),
    }
}
