//! Bundled reference instances.

use super::{assemble_from_arat, AratStructure, GameInstance};

/// Two states, 2x2 actions, `theta = 1`, anchor 0, built from its ARAT parts:
///
/// ```text
/// p1(0|x,a) = 0.1 + 0.1a + 0.1x    p1(1|x,a) = 0.4 - 0.1a - 0.1x
/// p2(0|x,b) = 0.1 + 0.2b           p2(1|x,b) = 0.4 - 0.2b
/// c11 = 0.5x + 0.3a   c12 = 0.2b   c21 = 0.4a   c22 = 0.5(1 - b) + 0.1x
/// ```
///
/// so that `P(0|x,a,b) = 0.2 + 0.1a + 0.2b + 0.1x`.
pub fn g2() -> GameInstance {
    assemble_from_arat(g2_arat(), 1.0, 0).expect("G2 fixture is consistent")
}

pub fn g2_arat() -> AratStructure {
    let idx = [0.0, 1.0];
    let p1 = idx
        .iter()
        .map(|&x| {
            idx.iter()
                .map(|&a| vec![0.1 + 0.1 * a + 0.1 * x, 0.4 - 0.1 * a - 0.1 * x])
                .collect()
        })
        .collect();
    let p2 = idx
        .iter()
        .map(|_| {
            idx.iter()
                .map(|&b| vec![0.1 + 0.2 * b, 0.4 - 0.2 * b])
                .collect()
        })
        .collect();
    let c11 = idx
        .iter()
        .map(|&x| idx.iter().map(|&a| 0.5 * x + 0.3 * a).collect())
        .collect();
    let c12 = idx
        .iter()
        .map(|_| idx.iter().map(|&b| 0.2 * b).collect())
        .collect();
    let c21 = idx
        .iter()
        .map(|_| idx.iter().map(|&a| 0.4 * a).collect())
        .collect();
    let c22 = idx
        .iter()
        .map(|&x| idx.iter().map(|&b| 0.5 * (1.0 - b) + 0.1 * x).collect())
        .collect();
    AratStructure {
        p1,
        p2,
        c11,
        c21,
        c12,
        c22,
    }
}
