//! Closed-form bit bounds for delta magnitudes under integer BP versus
//! integer DFA.
//!
//! With e-bit errors and w-bit weights, a BP delta that is `hops` weight
//! multiplications away from the output needs up to `e + hops·w` bits —
//! exponential growth in depth. A DFA delta needs `e + r` bits for r-bit
//! feedback entries, at any depth. The audit tabulates both per hidden
//! layer and flags every bound that strictly exceeds the accumulator
//! width.

use std::fmt;

/// Worst-case bits for a BP delta `hops` weight multiplications from the
/// output: `e + hops·w`.
pub fn bp_bound_bits(e: u32, w: u32, hops: u32) -> u32 {
    e + hops * w
}

/// Worst-case bits for a DFA delta: `e + r`, independent of depth.
pub fn dfa_bound_bits(e: u32, r: u32) -> u32 {
    e + r
}

/// A layer width this wide could push a DFA delta past the formula's
/// bound; the bound tracks entry magnitudes, not the fan-in sum.
pub fn dfa_wide_layer_warning(width: usize) -> bool {
    width > 1 << 16
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LayerBound {
    /// 1-based hidden layer index; 1 is the deepest (farthest from the
    /// output).
    pub hidden_layer: u32,
    pub hops_from_output: u32,
    pub bp_bound_bits: u32,
    pub dfa_bound_bits: u32,
    pub bp_overflows: bool,
    pub dfa_overflows: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OverflowReport {
    pub e: u32,
    pub w: u32,
    pub r: u32,
    pub accumulator_bits: u32,
    pub layers: Vec<LayerBound>,
    /// The bounds track single-entry magnitudes; fan-in summation adds
    /// up to log2(d) bits that the formula deliberately omits.
    pub footnote: &'static str,
}

const FOOTNOTE: &str = "bounds cover entry magnitudes only; fan-in summation adds up to \
log2(width) bits, and a layer wider than 2^16 nodes could push a DFA delta past its bound";

/// Tabulates the per-hidden-layer bounds for a network with
/// `num_hidden_layers` hidden layers. Hidden layer 1 is the deepest, so
/// its delta crosses the most weight matrices: `hops = num_hidden_layers
/// − j + 1` for hidden layer j. A bound overflows when it strictly
/// exceeds `accumulator_bits`.
pub fn audit(
    num_hidden_layers: u32,
    e: u32,
    w: u32,
    r: u32,
    accumulator_bits: u32,
) -> OverflowReport {
    let dfa_bits = dfa_bound_bits(e, r);
    let layers = (1..=num_hidden_layers)
        .map(|j| {
            let hops = num_hidden_layers - j + 1;
            let bp_bits = bp_bound_bits(e, w, hops);
            LayerBound {
                hidden_layer: j,
                hops_from_output: hops,
                bp_bound_bits: bp_bits,
                dfa_bound_bits: dfa_bits,
                bp_overflows: bp_bits > accumulator_bits,
                dfa_overflows: dfa_bits > accumulator_bits,
            }
        })
        .collect();
    OverflowReport {
        e,
        w,
        r,
        accumulator_bits,
        layers,
        footnote: FOOTNOTE,
    }
}

impl OverflowReport {
    pub fn bp_flagged_layers(&self) -> Vec<u32> {
        self.layers
            .iter()
            .filter(|l| l.bp_overflows)
            .map(|l| l.hidden_layer)
            .collect()
    }

    pub fn dfa_flagged_layers(&self) -> Vec<u32> {
        self.layers
            .iter()
            .filter(|l| l.dfa_overflows)
            .map(|l| l.hidden_layer)
            .collect()
    }

    /// Comma-separated rows mirroring the table, one header line first.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("hidden_layer,hops_from_output,bp_bound_bits,bp_overflows,dfa_bound_bits,dfa_overflows\n");
        for l in &self.layers {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                l.hidden_layer,
                l.hops_from_output,
                l.bp_bound_bits,
                l.bp_overflows,
                l.dfa_bound_bits,
                l.dfa_overflows
            ));
        }
        out
    }
}

impl fmt::Display for OverflowReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "delta bit bounds for e={} w={} r={} against a {}-bit accumulator",
            self.e, self.w, self.r, self.accumulator_bits
        )?;
        writeln!(f, "hidden  hops  BP bits        DFA bits")?;
        for l in &self.layers {
            writeln!(
                f,
                "{:>6}  {:>4}  {:>7}{:<9}{:>8}{}",
                l.hidden_layer,
                l.hops_from_output,
                l.bp_bound_bits,
                if l.bp_overflows { "  OVERFLOW" } else { "" },
                l.dfa_bound_bits,
                if l.dfa_overflows { "  OVERFLOW" } else { "" },
            )?;
        }
        writeln!(f, "note: {}", self.footnote)
    }
}
