//! Published parameter totals and window counts for the two benchmark
//! datasets.

use crate::dataset::Dataset;
use crate::zoo::Arch;

/// A published parameter total.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Golden {
    Exact(u64),
    /// Only published in millions to three decimals (`1.455M`), so the
    /// audited total must truncate to this many thousands.
    Thousands(u64),
}

impl Golden {
    pub fn matches(self, total: u64) -> bool {
        match self {
            Golden::Exact(v) => v == total,
            Golden::Thousands(k) => total / 1000 == k,
        }
    }
}

const WISDM_CNN: [u64; 8] = [
    727_942, 1_055_622, 1_383_302, 1_710_982, 2_038_662, 2_366_342, 2_694_022, 3_021_702,
];
const WISDM_CONVLSTM: [u64; 8] = [
    504_678, 635_750, 832_358, 963_430, 1_160_038, 1_291_110, 1_487_718, 1_618_790,
];
const WISDM_CONVLSTM_SE: [u64; 8] = [
    508_774, 639_846, 836_454, 967_526, 1_164_134, 1_295_206, 1_491_814, 1_622_886,
];
const PAMAP2_CNN_K: [u64; 8] = [1455, 2110, 2503, 3027, 3355, 3748, 4142, 4535];
const PAMAP2_CNN_SE_K: [u64; 8] = [1459, 2114, 2507, 3032, 3359, 3752, 4146, 4539];
const PAMAP2_CONVLSTM_K: [u64; 8] = [835, 1163, 1360, 1622, 1819, 2015, 2212, 2408];
const PAMAP2_CONVLSTM_SE_K: [u64; 8] = [840, 1167, 1364, 1626, 1823, 2019, 2216, 2412];

/// SE adds a bias-free 128→16→128 bottleneck.
pub const SE_DELTA: u64 = 4_096;

/// Published total for `(dataset, arch, window)`, if that cell was reported.
pub fn golden_total(dataset: Dataset, arch: Arch, window: usize) -> Option<Golden> {
    let i = dataset.windows().iter().position(|&w| w == window)?;
    Some(match (dataset, arch) {
        (Dataset::Wisdm, Arch::Cnn) => Golden::Exact(WISDM_CNN[i]),
        (Dataset::Wisdm, Arch::CnnSe) => Golden::Exact(WISDM_CNN[i] + SE_DELTA),
        (Dataset::Wisdm, Arch::CnnWSense) => Golden::Exact(236_678),
        (Dataset::Wisdm, Arch::ConvLstm) => Golden::Exact(WISDM_CONVLSTM[i]),
        (Dataset::Wisdm, Arch::ConvLstmSe) => Golden::Exact(WISDM_CONVLSTM_SE[i]),
        (Dataset::Wisdm, Arch::ConvLstmWSense) => Golden::Exact(341_094),
        (Dataset::Pamap2, Arch::Cnn) => Golden::Thousands(PAMAP2_CNN_K[i]),
        (Dataset::Pamap2, Arch::CnnSe) => Golden::Thousands(PAMAP2_CNN_SE_K[i]),
        (Dataset::Pamap2, Arch::CnnWSense) => Golden::Exact(242_924),
        (Dataset::Pamap2, Arch::ConvLstm) => Golden::Thousands(PAMAP2_CONVLSTM_K[i]),
        (Dataset::Pamap2, Arch::ConvLstmSe) => Golden::Thousands(PAMAP2_CONVLSTM_SE_K[i]),
        (Dataset::Pamap2, Arch::ConvLstmWSense) => Golden::Exact(344_700),
    })
}

/// Published (train, test) window counts. Informational only: the cleaning
/// that produced them is not described, so they are not reproducible.
pub fn reference_counts(dataset: Dataset, window: usize) -> Option<(usize, usize)> {
    const WISDM: [(usize, usize); 8] = [
        (6887, 1717),
        (4577, 1145),
        (3432, 859),
        (2746, 687),
        (2288, 572),
        (1960, 491),
        (1716, 429),
        (1524, 382),
    ];
    const PAMAP2: [(usize, usize); 8] = [
        (11445, 2862),
        (7776, 1945),
        (6460, 1615),
        (5370, 1343),
        (4814, 1204),
        (4271, 1068),
        (3840, 960),
        (3476, 870),
    ];
    let i = dataset.windows().iter().position(|&w| w == window)?;
    Some(match dataset {
        Dataset::Wisdm => WISDM[i],
        Dataset::Pamap2 => PAMAP2[i],
    })
}
