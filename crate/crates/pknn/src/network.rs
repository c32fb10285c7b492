//! Fully connected layers with an integer forward pass and two backward
//! passes: direct feedback alignment (the default training rule) and an
//! instrumented integer backpropagation mode.
//!
//! DFA projects the output error to every layer through that layer's own
//! fixed random feedback matrix, so per-layer updates depend only on the
//! output error and local caches — they are mutually independent and
//! their magnitudes stay bounded regardless of depth. The BP mode
//! propagates deltas recursively through weight transposes with
//! saturating arithmetic, counting every 32-bit saturation per layer, to
//! make the depth-dependent overflow growth observable rather than
//! fatal.

use std::io::{Read, Write};
use std::path::Path;

use crate::activations::ActivationKind;
use crate::error::{Error, Result};
use crate::matrix::IntMatrix;
use crate::rng::Rng;

const MODEL_MAGIC: &[u8; 4] = b"PKNN";
const MODEL_VERSION: u8 = 1;
const MAX_LAYERS: u32 = 1024;

/// Per-layer saturation counts from an instrumented BP step.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OverflowCounters {
    per_layer: Vec<u64>,
}

impl OverflowCounters {
    pub fn per_layer(&self) -> &[u64] {
        &self.per_layer
    }

    pub fn total(&self) -> u64 {
        self.per_layer.iter().sum()
    }
}

#[derive(Clone, Debug)]
struct LayerCache {
    input: IntMatrix,
    h: IntMatrix,
    a: IntMatrix,
}

/// One fully connected layer. `w` is d_in×d_out, `b` is 1×d_out and the
/// frozen feedback matrix `r` is num_classes×d_out. All three carry
/// 8-bit semantics.
#[derive(Clone, Debug)]
pub struct FcLayer {
    w: IntMatrix,
    b: IntMatrix,
    r: IntMatrix,
    actv: ActivationKind,
    pre_div: i32,
    cache: Option<LayerCache>,
}

impl FcLayer {
    pub fn weights(&self) -> &IntMatrix {
        &self.w
    }

    pub fn biases(&self) -> &IntMatrix {
        &self.b
    }

    pub fn feedback(&self) -> &IntMatrix {
        &self.r
    }

    pub fn activation(&self) -> ActivationKind {
        self.actv
    }

    pub fn pre_div(&self) -> i32 {
        self.pre_div
    }

    pub fn input_dim(&self) -> usize {
        self.w.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.w.cols()
    }

    /// Cached pre-activations from the most recent forward pass.
    pub fn cached_h(&self) -> Option<&IntMatrix> {
        self.cache.as_ref().map(|c| &c.h)
    }

    /// Cached activations from the most recent forward pass.
    pub fn cached_a(&self) -> Option<&IntMatrix> {
        self.cache.as_ref().map(|c| &c.a)
    }
}

#[derive(Clone, Debug)]
pub struct Network {
    layers: Vec<FcLayer>,
    num_classes: usize,
}

fn eight_bit_ok(m: &IntMatrix) -> bool {
    m.max_abs() <= 127
}

impl Network {
    /// Builds a network from consecutive layer widths. Weights and
    /// biases start at zero; each layer's feedback matrix is filled
    /// uniformly from `feedback_range`.
    pub fn build(
        dims: &[usize],
        actv: ActivationKind,
        pre_div: i32,
        rng: &mut Rng,
        feedback_range: (i32, i32),
    ) -> Result<Network> {
        if dims.len() < 2 {
            return Err(Error::InvalidDimension(format!(
                "need at least input and output widths, got {dims:?}"
            )));
        }
        if dims.contains(&0) {
            return Err(Error::InvalidDimension(format!(
                "zero layer width in {dims:?}"
            )));
        }
        if pre_div < 1 {
            return Err(Error::InvalidArgument(format!(
                "pre_div must be ≥ 1, got {pre_div}"
            )));
        }
        let (lo, hi) = feedback_range;
        if lo > hi {
            return Err(Error::InvalidRange { lo, hi });
        }
        if lo < -127 || hi > 127 {
            return Err(Error::InvalidArgument(format!(
                "feedback range [{lo}, {hi}] outside [-127, 127]"
            )));
        }
        let num_classes = *dims.last().expect("checked non-empty");
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for pair in dims.windows(2) {
            let (d_in, d_out) = (pair[0], pair[1]);
            let mut r = IntMatrix::zeros(num_classes, d_out)?;
            r.random_fill(rng, lo, hi)?;
            layers.push(FcLayer {
                w: IntMatrix::zeros(d_in, d_out)?,
                b: IntMatrix::zeros(1, d_out)?,
                r,
                actv,
                pre_div,
                cache: None,
            });
        }
        Ok(Network {
            layers,
            num_classes,
        })
    }

    pub fn layers(&self) -> &[FcLayer] {
        &self.layers
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    /// Layer widths, input first.
    pub fn dims(&self) -> Vec<usize> {
        let mut dims = vec![self.input_dim()];
        dims.extend(self.layers.iter().map(|l| l.output_dim()));
        dims
    }

    /// Replaces a layer's weights and biases (test scaffolding for
    /// hand-built networks). Shapes must match and values must carry
    /// 8-bit semantics.
    pub fn set_layer_params(&mut self, idx: usize, w: IntMatrix, b: IntMatrix) -> Result<()> {
        let layer = self
            .layers
            .get_mut(idx)
            .ok_or_else(|| Error::IndexOutOfBounds(format!("layer {idx}")))?;
        if w.shape() != layer.w.shape() || b.shape() != layer.b.shape() {
            return Err(Error::ShapeMismatch(format!(
                "layer {idx} expects w {:?}, b {:?}",
                layer.w.shape(),
                layer.b.shape()
            )));
        }
        if !eight_bit_ok(&w) || !eight_bit_ok(&b) {
            return Err(Error::InvalidArgument(
                "parameters must lie in [-127, 127]".into(),
            ));
        }
        layer.w = w;
        layer.b = b;
        Ok(())
    }

    /// Replaces a layer's feedback matrix (e.g. identity feedback for
    /// comparing the two backward passes on one layer).
    pub fn set_feedback(&mut self, idx: usize, r: IntMatrix) -> Result<()> {
        let layer = self
            .layers
            .get_mut(idx)
            .ok_or_else(|| Error::IndexOutOfBounds(format!("layer {idx}")))?;
        if r.shape() != layer.r.shape() {
            return Err(Error::ShapeMismatch(format!(
                "layer {idx} expects r {:?}",
                layer.r.shape()
            )));
        }
        if !eight_bit_ok(&r) {
            return Err(Error::InvalidArgument(
                "feedback must lie in [-127, 127]".into(),
            ));
        }
        layer.r = r;
        Ok(())
    }

    /// Replaces a layer's pre-activation divisor. `build` seeds every
    /// layer with one value; wide nets usually want a per-layer divisor
    /// proportional to fan-in so each layer's pre-activations land in
    /// the sloped region of the activation table.
    pub fn set_pre_div(&mut self, idx: usize, pre_div: i32) -> Result<()> {
        if pre_div < 1 {
            return Err(Error::InvalidArgument(format!(
                "pre_div must be ≥ 1, got {pre_div}"
            )));
        }
        let layer = self
            .layers
            .get_mut(idx)
            .ok_or_else(|| Error::IndexOutOfBounds(format!("layer {idx}")))?;
        layer.pre_div = pre_div;
        Ok(())
    }

    fn check_input(&self, x: &IntMatrix) -> Result<()> {
        if x.cols() != self.input_dim() {
            return Err(Error::ShapeMismatch(format!(
                "input width {} but network expects {}",
                x.cols(),
                self.input_dim()
            )));
        }
        if !eight_bit_ok(x) {
            return Err(Error::InvalidArgument(
                "input entries must lie in [-127, 127]".into(),
            ));
        }
        Ok(())
    }

    fn layer_forward(layer: &FcLayer, input: &IntMatrix) -> Result<(IntMatrix, IntMatrix)> {
        let z = input.matmul(&layer.w)?.add(&layer.b)?;
        let h = if layer.pre_div > 1 {
            z.scalar_trunc_div(layer.pre_div)?
        } else {
            z
        };
        let a = layer.actv.apply(&h);
        Ok((h, a))
    }

    /// Forward pass that caches per-layer inputs and activations for a
    /// following backward pass. Returns the final activations ŷ.
    pub fn forward(&mut self, x: &IntMatrix) -> Result<IntMatrix> {
        self.check_input(x)?;
        let mut current = x.clone();
        for layer in &mut self.layers {
            let (h, a) = Self::layer_forward(layer, &current)?;
            layer.cache = Some(LayerCache {
                input: current,
                h,
                a: a.clone(),
            });
            current = a;
        }
        Ok(current)
    }

    /// Pure forward pass: no cache mutation, usable on a shared network.
    pub fn infer(&self, x: &IntMatrix) -> Result<IntMatrix> {
        self.check_input(x)?;
        let mut current = x.clone();
        for layer in &self.layers {
            let (_, a) = Self::layer_forward(layer, &current)?;
            current = a;
        }
        Ok(current)
    }

    /// Predicted class per sample: row argmax of the forward output.
    pub fn predict(&self, x: &IntMatrix) -> Result<Vec<usize>> {
        let out = self.infer(x)?;
        (0..out.rows()).map(|i| out.argmax_row(i)).collect()
    }

    fn check_error(&self, error: &IntMatrix) -> Result<()> {
        if error.cols() != self.num_classes {
            return Err(Error::ShapeMismatch(format!(
                "error width {} but network has {} classes",
                error.cols(),
                self.num_classes
            )));
        }
        let cache = self.layers[0]
            .cache
            .as_ref()
            .ok_or_else(|| Error::State("backward requires a preceding forward pass".into()))?;
        if cache.h.rows() != error.rows() {
            return Err(Error::ShapeMismatch(format!(
                "error batch {} but cached forward batch {}",
                error.rows(),
                cache.h.rows()
            )));
        }
        Ok(())
    }

    fn check_update_args(lr_inverse: i32, batch_div: i32) -> Result<()> {
        if lr_inverse < 1 {
            return Err(Error::InvalidArgument(format!(
                "lr_inverse must be ≥ 1, got {lr_inverse}"
            )));
        }
        if batch_div < 1 {
            return Err(Error::InvalidArgument(format!(
                "batch_div must be ≥ 1, got {batch_div}"
            )));
        }
        Ok(())
    }

    /// DFA update of a single layer: δ = (error · R) ⊙ actv′(h), then
    /// W ← clamp(W − (inputᵀδ) / (lr_inverse·batch_div)) and likewise
    /// for the bias from the column sums of δ. Depends only on the
    /// output error and this layer's own state, so layers may be updated
    /// in any order.
    pub fn dfa_update_layer(
        &mut self,
        idx: usize,
        error: &IntMatrix,
        lr_inverse: i32,
        batch_div: i32,
    ) -> Result<()> {
        Self::check_update_args(lr_inverse, batch_div)?;
        self.check_error(error)?;
        let num_classes = self.num_classes;
        let layer = self
            .layers
            .get_mut(idx)
            .ok_or_else(|| Error::IndexOutOfBounds(format!("layer {idx}")))?;
        let cache = layer
            .cache
            .as_ref()
            .ok_or_else(|| Error::State("backward requires a preceding forward pass".into()))?;

        let projected = error.matmul(&layer.r)?;
        let delta = layer.actv.apply_slope(&projected, &cache.h)?;
        #[cfg(feature = "checked")]
        {
            // Depth-independent delta bound: |δ| ≤ 2·d_n·max|error|·max|R|
            // (the slope multiplies by at most 2, division only shrinks).
            let bound = 2 * num_classes as i64 * error.max_abs() * layer.r.max_abs();
            debug_assert!(
                delta.max_abs() <= bound,
                "DFA delta {} exceeds bound {}",
                delta.max_abs(),
                bound
            );
        }
        let _ = num_classes;

        let dw = cache.input.transpose().matmul(&delta)?;
        let db = delta.column_sums()?;
        let div = lr_inverse as i64 * batch_div as i64;
        layer.w = layer.w.sub(&dw.scalar_trunc_div_i64(div)?)?.clamp(-127, 127)?;
        layer.b = layer.b.sub(&db.scalar_trunc_div_i64(div)?)?.clamp(-127, 127)?;
        Ok(())
    }

    /// DFA update of every layer from the output error `ŷ − y`.
    pub fn dfa_backward(
        &mut self,
        error: &IntMatrix,
        lr_inverse: i32,
        batch_div: i32,
    ) -> Result<()> {
        for idx in 0..self.layers.len() {
            self.dfa_update_layer(idx, error, lr_inverse, batch_div)?;
        }
        Ok(())
    }

    /// Integer backpropagation with saturating, counted arithmetic.
    ///
    /// Deltas propagate recursively: δ at the output is
    /// error ⊙ actv′(h), each earlier layer's δ is (δ_next · Wᵀ_next) ⊙
    /// actv′(h). Every multiply/add that would leave the 32-bit range
    /// saturates and increments that layer's counter. Updates mirror the
    /// DFA rule.
    pub fn bp_backward(
        &mut self,
        error: &IntMatrix,
        lr_inverse: i32,
        batch_div: i32,
    ) -> Result<OverflowCounters> {
        Self::check_update_args(lr_inverse, batch_div)?;
        self.check_error(error)?;
        let n = self.layers.len();
        let mut counters = vec![0u64; n];
        let div = lr_inverse as i64 * batch_div as i64;

        let last = &self.layers[n - 1];
        let last_cache = last
            .cache
            .as_ref()
            .ok_or_else(|| Error::State("backward requires a preceding forward pass".into()))?;
        let mut delta = last
            .actv
            .apply_slope_saturating(error, &last_cache.h, &mut counters[n - 1])?;

        for k in (0..n).rev() {
            // Propagate through this layer's pre-update weights first.
            let next_delta = if k > 0 {
                let prev = &self.layers[k - 1];
                let prev_cache = prev
                    .cache
                    .as_ref()
                    .ok_or_else(|| Error::State("missing forward cache".into()))?;
                let projected =
                    delta.matmul_saturating(&self.layers[k].w.transpose(), &mut counters[k - 1])?;
                Some(prev.actv.apply_slope_saturating(
                    &projected,
                    &prev_cache.h,
                    &mut counters[k - 1],
                )?)
            } else {
                None
            };

            let layer = &mut self.layers[k];
            let cache = layer.cache.as_ref().expect("checked above");
            let dw = cache
                .input
                .transpose()
                .matmul_saturating(&delta, &mut counters[k])?;
            let db = delta.column_sums_saturating(&mut counters[k]);
            layer.w = layer
                .w
                .sub_saturating(&dw.scalar_trunc_div_i64(div)?, &mut counters[k])?
                .clamp(-127, 127)?;
            layer.b = layer
                .b
                .sub_saturating(&db.scalar_trunc_div_i64(div)?, &mut counters[k])?
                .clamp(-127, 127)?;

            if let Some(d) = next_delta {
                delta = d;
            }
        }
        Ok(OverflowCounters {
            per_layer: counters,
        })
    }

    /// Serializes to the binary model format: magic `PKNN`, version,
    /// layer count and class count (32-bit big-endian), then per layer
    /// d_in, d_out, activation code, pre-divisor and the W, b, R
    /// parameters as row-major signed bytes.
    pub fn serialize(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.extend_from_slice(MODEL_MAGIC);
        out.push(MODEL_VERSION);
        out.extend_from_slice(&(self.layers.len() as u32).to_be_bytes());
        out.extend_from_slice(&(self.num_classes as u32).to_be_bytes());
        for (idx, layer) in self.layers.iter().enumerate() {
            out.extend_from_slice(&(layer.input_dim() as u32).to_be_bytes());
            out.extend_from_slice(&(layer.output_dim() as u32).to_be_bytes());
            out.push(layer.actv.code());
            out.extend_from_slice(&(layer.pre_div as u32).to_be_bytes());
            for m in [&layer.w, &layer.b, &layer.r] {
                for &v in m.as_slice() {
                    let b = i8::try_from(v).map_err(|_| {
                        Error::InvalidArgument(format!(
                            "layer {idx} parameter {v} outside 8-bit range"
                        ))
                    })?;
                    out.push(b as u8);
                }
            }
        }
        Ok(out)
    }

    pub fn deserialize(bytes: &[u8]) -> Result<Network> {
        let mut r = ModelReader { bytes, pos: 0 };
        let magic = r.take(4, "magic")?;
        if magic != MODEL_MAGIC {
            return Err(r.err_at(0, format!("bad magic {magic:02x?}, expected \"PKNN\"")));
        }
        let version = r.take_u8("version")?;
        if version != MODEL_VERSION {
            return Err(r.err_at(4, format!("unsupported version {version}")));
        }
        let layer_count = r.take_u32("layer count")?;
        if layer_count == 0 || layer_count > MAX_LAYERS {
            return Err(r.err_at(5, format!("implausible layer count {layer_count}")));
        }
        let num_classes = r.take_u32("class count")? as usize;
        if num_classes == 0 {
            return Err(r.err_at(9, "zero class count".into()));
        }

        let mut layers = Vec::with_capacity(layer_count as usize);
        let mut prev_out: Option<usize> = None;
        for idx in 0..layer_count {
            let at = r.pos;
            let d_in = r.take_u32("layer input dim")? as usize;
            let d_out = r.take_u32("layer output dim")? as usize;
            if d_in == 0 || d_out == 0 {
                return Err(r.err_at(at as u64, format!("layer {idx} has zero dimension")));
            }
            if let Some(prev) = prev_out {
                if prev != d_in {
                    return Err(r.err_at(
                        at as u64,
                        format!("layer {idx} input dim {d_in} does not chain from {prev}"),
                    ));
                }
            }
            let code_at = r.pos;
            let code = r.take_u8("activation code")?;
            let actv = ActivationKind::from_code(code).ok_or_else(|| {
                r.err_at(code_at as u64, format!("unknown activation code {code}"))
            })?;
            let pre_div_at = r.pos;
            let pre_div = r.take_u32("pre divisor")?;
            if pre_div == 0 || pre_div > i32::MAX as u32 {
                return Err(r.err_at(pre_div_at as u64, format!("invalid pre divisor {pre_div}")));
            }
            let w = r.take_matrix(d_in, d_out, "weights")?;
            let b = r.take_matrix(1, d_out, "biases")?;
            let feedback = r.take_matrix(num_classes, d_out, "feedback")?;
            layers.push(FcLayer {
                w,
                b,
                r: feedback,
                actv,
                pre_div: pre_div as i32,
                cache: None,
            });
            prev_out = Some(d_out);
        }
        if prev_out != Some(num_classes) {
            return Err(r.err_at(
                r.pos as u64,
                format!(
                    "last layer width {:?} does not match class count {num_classes}",
                    prev_out
                ),
            ));
        }
        if r.pos != bytes.len() {
            return Err(r.err_at(
                r.pos as u64,
                format!("{} trailing bytes", bytes.len() - r.pos),
            ));
        }
        Ok(Network {
            layers,
            num_classes,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let bytes = self.serialize()?;
        let mut f = std::fs::File::create(path)?;
        f.write_all(&bytes)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Network> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Network::deserialize(&bytes)
    }
}

struct ModelReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ModelReader<'a> {
    fn err_at(&self, offset: u64, reason: String) -> Error {
        Error::ModelFormat { offset, reason }
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::ModelFormat {
                offset: self.pos as u64,
                reason: format!(
                    "unexpected end of data reading {what}: need {n} bytes, {} left",
                    self.bytes.len() - self.pos
                ),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn take_u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn take_u32(&mut self, what: &str) -> Result<u32> {
        let s = self.take(4, what)?;
        Ok(u32::from_be_bytes([s[0], s[1], s[2], s[3]]))
    }

    fn take_matrix(&mut self, rows: usize, cols: usize, what: &str) -> Result<IntMatrix> {
        let s = self.take(rows * cols, what)?;
        let data = s.iter().map(|&b| b as i8 as i32).collect();
        IntMatrix::from_vec(rows, cols, data)
    }
}
