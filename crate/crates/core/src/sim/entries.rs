use std::fmt;
use std::str::FromStr;

use faer::c64;
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::Error;

const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Distribution of the standardized entries `w_ij`: mean zero, unit second
/// absolute moment, finite fourth moment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EntryLaw {
    #[default]
    RealGaussian,
    /// `(g₁ + i·g₂)/√2` with independent standard normals.
    ComplexGaussian,
    Rademacher,
    /// Uniform on `[−√3, √3]`.
    UniformStandardized,
}

impl EntryLaw {
    pub const ALL: [EntryLaw; 4] = [
        EntryLaw::RealGaussian,
        EntryLaw::ComplexGaussian,
        EntryLaw::Rademacher,
        EntryLaw::UniformStandardized,
    ];

    pub fn is_complex(self) -> bool {
        matches!(self, EntryLaw::ComplexGaussian)
    }

    pub fn name(self) -> &'static str {
        match self {
            EntryLaw::RealGaussian => "real_gaussian",
            EntryLaw::ComplexGaussian => "complex_gaussian",
            EntryLaw::Rademacher => "rademacher",
            EntryLaw::UniformStandardized => "uniform_standardized",
        }
    }

    fn draw_real<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            EntryLaw::RealGaussian | EntryLaw::ComplexGaussian => rng.sample(StandardNormal),
            EntryLaw::Rademacher => {
                if rng.random_bool(0.5) {
                    1.0
                } else {
                    -1.0
                }
            }
            EntryLaw::UniformStandardized => rng.random_range(-SQRT_3..SQRT_3),
        }
    }
}

impl fmt::Display for EntryLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EntryLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EntryLaw::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown entry law `{s}`")))
    }
}

/// Generator for replication `rep` of a run keyed by `seed`: ChaCha8 keyed
/// by the seed, with the replication index as the stream number, so every
/// replication has its own non-overlapping sequence.
pub fn rep_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

/// Scalar field of the simulated matrices.
pub(crate) trait Scalar:
    faer::traits::ComplexField<Real = f64> + Copy + Send + Sync + 'static
{
    fn draw<R: Rng + ?Sized>(law: EntryLaw, rng: &mut R) -> Self;
    fn scale(self, s: f64) -> Self;
    fn abs2(self) -> f64;
    fn re(self) -> f64;
    fn into_c64(self) -> c64;
}

impl Scalar for f64 {
    fn draw<R: Rng + ?Sized>(law: EntryLaw, rng: &mut R) -> Self {
        law.draw_real(rng)
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn abs2(self) -> f64 {
        self * self
    }
    fn re(self) -> f64 {
        self
    }
    fn into_c64(self) -> c64 {
        c64::new(self, 0.0)
    }
}

impl Scalar for c64 {
    fn draw<R: Rng + ?Sized>(law: EntryLaw, rng: &mut R) -> Self {
        if law.is_complex() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            c64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        } else {
            c64::new(law.draw_real(rng), 0.0)
        }
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn abs2(self) -> f64 {
        self.norm_sqr()
    }
    fn re(self) -> f64 {
        self.re
    }
    fn into_c64(self) -> c64 {
        self
    }
}
