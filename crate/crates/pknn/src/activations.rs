//! Pocket activations: piecewise-linear, integer-only approximations of
//! rescaled sigmoid and tanh, plus a 127-capped ReLU. All three map any
//! 32-bit input into an 8-bit-range output; division truncates toward
//! zero throughout.
//!
//! Piece slopes are kept as explicit rationals so the backward pass can
//! apply them with a multiply and a truncating divide instead of any
//! fixed-point scheme; zero slopes are realized as multiplication by
//! zero.

use crate::error::{Error, Result};
use crate::matrix::IntMatrix;

/// Output range [1, 127]; never reaches 0, like the sigmoid it mimics.
pub fn pocket_sigmoid(x: i32) -> i32 {
    if x <= -128 {
        1
    } else if x <= -75 {
        x / 8 + 20
    } else if x <= -32 {
        x / 2 + 48
    } else if x <= 31 {
        x + 64
    } else if x <= 74 {
        x / 2 + 80
    } else if x <= 127 {
        x / 8 + 108
    } else {
        127
    }
}

/// Output range [-127, 127], odd-symmetric around zero.
pub fn pocket_tanh(x: i32) -> i32 {
    if x <= -128 {
        -127
    } else if x <= -75 {
        x / 4 - 88
    } else if x <= -32 {
        x - 32
    } else if x <= 31 {
        2 * x
    } else if x <= 74 {
        x + 32
    } else if x <= 127 {
        x / 4 + 88
    } else {
        127
    }
}

/// ReLU capped at 127: `min(max(0, x), 127)`.
pub fn pocket_relu8(x: i32) -> i32 {
    x.clamp(0, 127)
}

/// Slope of an activation piece as a nonnegative rational in [0, 2].
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct SlopeRational {
    pub num: i32,
    pub den: i32,
}

impl SlopeRational {
    const ZERO: SlopeRational = SlopeRational { num: 0, den: 1 };

    const fn new(num: i32, den: i32) -> SlopeRational {
        SlopeRational { num, den }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ActivationKind {
    PocketSigmoid,
    PocketTanh,
    PocketRelu8,
}

impl ActivationKind {
    pub const ALL: [ActivationKind; 3] = [
        ActivationKind::PocketSigmoid,
        ActivationKind::PocketTanh,
        ActivationKind::PocketRelu8,
    ];

    pub fn apply_scalar(self, x: i32) -> i32 {
        match self {
            ActivationKind::PocketSigmoid => pocket_sigmoid(x),
            ActivationKind::PocketTanh => pocket_tanh(x),
            ActivationKind::PocketRelu8 => pocket_relu8(x),
        }
    }

    /// Elementwise activation; the result has 8-bit semantics.
    pub fn apply(self, h: &IntMatrix) -> IntMatrix {
        let data: Vec<i32> = h.as_slice().iter().map(|&x| self.apply_scalar(x)).collect();
        IntMatrix::from_vec(h.rows(), h.cols(), data).expect("shape preserved")
    }

    /// Slope of the piece containing `x`. Saturated pieces have slope 0;
    /// the capped ReLU keeps slope 1 on (0, 127] and 0 elsewhere.
    pub fn slope(self, x: i32) -> SlopeRational {
        match self {
            ActivationKind::PocketSigmoid => {
                if x <= -128 || x > 127 {
                    SlopeRational::ZERO
                } else if x <= -75 || x > 74 {
                    SlopeRational::new(1, 8)
                } else if x <= -32 || x > 31 {
                    SlopeRational::new(1, 2)
                } else {
                    SlopeRational::new(1, 1)
                }
            }
            ActivationKind::PocketTanh => {
                if x <= -128 || x > 127 {
                    SlopeRational::ZERO
                } else if x <= -75 || x > 74 {
                    SlopeRational::new(1, 4)
                } else if x <= -32 || x > 31 {
                    SlopeRational::new(1, 1)
                } else {
                    SlopeRational::new(2, 1)
                }
            }
            ActivationKind::PocketRelu8 => {
                if x > 0 && x <= 127 {
                    SlopeRational::new(1, 1)
                } else {
                    SlopeRational::ZERO
                }
            }
        }
    }

    /// Elementwise `trunc_div(delta × num, den)` for the slope at the
    /// matching pre-activation in `h` — the ⊙ actv′(h) step of the
    /// backward passes.
    pub fn apply_slope(self, delta: &IntMatrix, h: &IntMatrix) -> Result<IntMatrix> {
        self.apply_slope_impl(delta, h, None)
    }

    /// As [`apply_slope`](Self::apply_slope) but saturating at the 32-bit
    /// bounds, counting each saturation.
    pub fn apply_slope_saturating(
        self,
        delta: &IntMatrix,
        h: &IntMatrix,
        counter: &mut u64,
    ) -> Result<IntMatrix> {
        self.apply_slope_impl(delta, h, Some(counter))
    }

    fn apply_slope_impl(
        self,
        delta: &IntMatrix,
        h: &IntMatrix,
        mut counter: Option<&mut u64>,
    ) -> Result<IntMatrix> {
        if delta.shape() != h.shape() {
            return Err(Error::ShapeMismatch(format!(
                "apply_slope {}x{} vs h {}x{}",
                delta.rows(),
                delta.cols(),
                h.rows(),
                h.cols()
            )));
        }
        let mut data = Vec::with_capacity(delta.rows() * delta.cols());
        for (&d, &x) in delta.as_slice().iter().zip(h.as_slice()) {
            let s = self.slope(x);
            let scaled = d as i64 * s.num as i64 / s.den as i64;
            let v = if let Some(c) = counter.as_deref_mut() {
                if scaled > i32::MAX as i64 {
                    *c += 1;
                    i32::MAX
                } else if scaled < i32::MIN as i64 {
                    *c += 1;
                    i32::MIN
                } else {
                    scaled as i32
                }
            } else {
                #[cfg(feature = "checked")]
                {
                    i32::try_from(scaled).map_err(|_| Error::Overflow {
                        context: "apply_slope".into(),
                    })?
                }
                #[cfg(not(feature = "checked"))]
                {
                    scaled as i32
                }
            };
            data.push(v);
        }
        IntMatrix::from_vec(delta.rows(), delta.cols(), data)
    }

    /// Stable single-byte code used by the model file format.
    pub fn code(self) -> u8 {
        match self {
            ActivationKind::PocketSigmoid => 0,
            ActivationKind::PocketTanh => 1,
            ActivationKind::PocketRelu8 => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<ActivationKind> {
        match code {
            0 => Some(ActivationKind::PocketSigmoid),
            1 => Some(ActivationKind::PocketTanh),
            2 => Some(ActivationKind::PocketRelu8),
            _ => None,
        }
    }

    /// Name accepted by the CLI and config files.
    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::PocketSigmoid => "pocket_sigmoid",
            ActivationKind::PocketTanh => "pocket_tanh",
            ActivationKind::PocketRelu8 => "pocket_relu8",
        }
    }
}

impl std::str::FromStr for ActivationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<ActivationKind> {
        match s {
            "pocket_sigmoid" => Ok(ActivationKind::PocketSigmoid),
            "pocket_tanh" => Ok(ActivationKind::PocketTanh),
            "pocket_relu8" => Ok(ActivationKind::PocketRelu8),
            _ => Err(Error::InvalidArgument(format!(
                "unknown activation {s:?}; expected pocket_sigmoid, pocket_tanh or pocket_relu8"
            ))),
        }
    }
}

impl std::fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}
