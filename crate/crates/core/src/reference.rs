//! Published reference metrics at `l_max = 20`.
//!
//! Values are `[S, P, MI, N, D_eff]` per model, in the column order
//! Zero RM, Non-Zero RM1, Non-Zero RM2.

use crate::amplitudes::BoostModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceCell {
    pub entropy_bits: f64,
    pub purity: f64,
    pub mutual_info_bits: f64,
    pub negativity: f64,
    pub d_eff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceBlock {
    pub gamma: f64,
    pub cells: [ReferenceCell; 3],
}

const fn cell(s: f64, p: f64, mi: f64, n: f64, d: f64) -> ReferenceCell {
    ReferenceCell {
        entropy_bits: s,
        purity: p,
        mutual_info_bits: mi,
        negativity: n,
        d_eff: d,
    }
}

pub const REFERENCE_LMAX: u32 = 20;

pub const REFERENCE_TABLE: [ReferenceBlock; 7] = [
    ReferenceBlock {
        gamma: 1.0,
        cells: [
            cell(5.3576, 0.0244, 10.7151, 20.0000, 41.00),
            cell(5.3576, 0.0244, 10.7151, 20.0000, 41.00),
            cell(5.3576, 0.0244, 10.7151, 20.0000, 41.00),
        ],
    },
    ReferenceBlock {
        gamma: 5.0,
        cells: [
            cell(3.3717, 0.1344, 6.7434, 7.8350, 7.44),
            cell(3.2377, 0.1337, 6.4754, 5.3251, 7.48),
            cell(3.0279, 0.1563, 6.0558, 4.5732, 6.40),
        ],
    },
    ReferenceBlock {
        gamma: 20.0,
        cells: [
            cell(1.6948, 0.3833, 3.3896, 2.1838, 2.61),
            cell(2.1295, 0.2946, 2.4934, 2.4934, 3.39),
            cell(1.6314, 0.4431, 1.7478, 1.7478, 2.26),
        ],
    },
    ReferenceBlock {
        gamma: 100.0,
        cells: [
            cell(1.0644, 0.4938, 2.1289, 0.7896, 2.03),
            cell(1.3631, 0.4428, 2.7262, 1.2057, 2.26),
            cell(0.5106, 0.8370, 1.0212, 0.5349, 1.19),
        ],
    },
    ReferenceBlock {
        gamma: 200.0,
        cells: [
            cell(1.0189, 0.4992, 2.0378, 0.6403, 2.00),
            cell(1.1978, 0.4723, 2.3956, 0.9396, 2.12),
            cell(0.2755, 0.9219, 0.5511, 0.3219, 1.08),
        ],
    },
    ReferenceBlock {
        gamma: 2000.0,
        cells: [
            cell(0.9997, 0.5011, 1.9994, 0.5292, 2.00),
            cell(1.0147, 0.4993, 2.0295, 0.5841, 2.00),
            cell(0.0104, 0.9983, 0.0208, 0.0433, 1.00),
        ],
    },
    ReferenceBlock {
        gamma: 10000.0,
        cells: [
            cell(0.9995, 0.5011, 1.9990, 0.5270, 2.00),
            cell(1.0004, 0.5008, 2.0008, 0.5246, 2.00),
            cell(0.0008, 0.9999, 0.0017, 0.0096, 1.00),
        ],
    },
];

fn column(model: BoostModel) -> usize {
    match model {
        BoostModel::ZeroRm => 0,
        BoostModel::NonZeroRm1 => 1,
        BoostModel::NonZeroRm2 => 2,
    }
}

/// Reference cell for `(model, γ)`, if tabulated.
pub fn lookup(model: BoostModel, gamma: f64) -> Option<&'static ReferenceCell> {
    REFERENCE_TABLE
        .iter()
        .find(|b| b.gamma == gamma)
        .map(|b| &b.cells[column(model)])
}

/// Tabulated MI cells that contradict `MI = 2S` (they repeat the negativity).
/// These are checked against `2S` instead.
pub fn mi_cell_conflicts(model: BoostModel, gamma: f64) -> bool {
    gamma == 20.0 && matches!(model, BoostModel::NonZeroRm1 | BoostModel::NonZeroRm2)
}

/// Acceptance band for a tabulated value: the larger of 1% relative and
/// 0.01 absolute.
pub fn table_tolerance(reference: f64) -> f64 {
    (0.01 * reference.abs()).max(0.01)
}
