//! Named towers, ideals and metric spaces shared by tests, the harness and
//! the command line.

use std::collections::BTreeSet;

use crate::commutative::FiniteMetricSpace;
use crate::tower::{BratteliTower, TowerConfig};

/// `C ⊂ M_2 ⊂ M_4 ⊂ … ⊂ M_{2^top}` with the normalized trace.
pub fn car_config(top: usize) -> TowerConfig {
    TowerConfig {
        levels: (0..=top).map(|n| vec![1usize << n]).collect(),
        mults: (0..top).map(|_| vec![vec![2]]).collect(),
        top_trace: vec![1.0 / (1u64 << top) as f64],
        beta: None,
    }
}

pub fn car_tower(top: usize) -> BratteliTower {
    BratteliTower::from_config(&car_config(top)).expect("CAR tower is valid")
}

/// `C → C ⊕ C → M_2 ⊕ C`, top weights `(1/3, 1/3)`.
pub fn t2_config() -> TowerConfig {
    TowerConfig {
        levels: vec![vec![1], vec![1, 1], vec![2, 1]],
        mults: vec![vec![vec![1], vec![1]], vec![vec![1, 1], vec![0, 1]]],
        top_trace: vec![1.0 / 3.0, 1.0 / 3.0],
        beta: None,
    }
}

pub fn t2_tower() -> BratteliTower {
    BratteliTower::from_config(&t2_config()).expect("T2 is valid")
}

/// T2 continued to level 4 with the same pattern: `M_k ⊕ C → M_{k+1} ⊕ C`.
pub fn t2_extended_config() -> TowerConfig {
    let mut cfg = t2_config();
    for k in 3..=4 {
        cfg.levels.push(vec![k, 1]);
        cfg.mults.push(vec![vec![1, 1], vec![0, 1]]);
    }
    cfg.top_trace = vec![0.2, 0.2];
    cfg
}

pub fn t2_extended_tower() -> BratteliTower {
    BratteliTower::from_config(&t2_extended_config()).expect("extended T2 is valid")
}

/// A tower in which every level spawns a fresh block fed only by block 0.
///
/// Level `n + 1` has blocks: two copies of block 0, then each block `t ≥ 1`
/// of level `n` once, then a new block holding one copy of block 0. The
/// ideal generated by top block `t ≥ 1` has slices `{t}` from level `t` on
/// and is empty below, so ideals can be made to agree up to any level.
pub fn ladder_config(top: usize) -> TowerConfig {
    let mut levels = vec![vec![1usize]];
    let mut mults = Vec::new();
    for n in 0..top {
        let src = &levels[n];
        let k = src.len();
        let mut m = vec![vec![0i64; k]; k + 1];
        m[0][0] = 2;
        for (t, row) in m.iter_mut().enumerate().take(k).skip(1) {
            row[t] = 1;
        }
        m[k][0] = 1;
        let dims: Vec<usize> = m
            .iter()
            .map(|row| row.iter().zip(src).map(|(&c, &d)| c as usize * d).sum())
            .collect();
        mults.push(m);
        levels.push(dims);
    }
    let total: usize = levels.last().unwrap().iter().sum();
    let top_trace = vec![1.0 / total as f64; levels.last().unwrap().len()];
    TowerConfig {
        levels,
        mults,
        top_trace,
        beta: None,
    }
}

pub fn ladder_tower(top: usize) -> BratteliTower {
    BratteliTower::from_config(&ladder_config(top)).expect("ladder tower is valid")
}

pub fn tower_config_by_name(name: &str) -> Option<TowerConfig> {
    match name {
        "car3" => Some(car_config(3)),
        "car4" => Some(car_config(4)),
        "t2" => Some(t2_config()),
        "t2x" => Some(t2_extended_config()),
        "ladder4" => Some(ladder_config(4)),
        _ => None,
    }
}

pub const TOWER_NAMES: [&str; 5] = ["car3", "car4", "t2", "t2x", "ladder4"];

pub fn support(items: &[usize]) -> BTreeSet<usize> {
    items.iter().copied().collect()
}

/// Two points at distance 1.
pub fn two_point_space() -> FiniteMetricSpace {
    FiniteMetricSpace::from_line(&[0.0, 1.0]).expect("valid")
}

/// `{0, 0.1, 1}` on the real line.
pub fn three_point_line() -> FiniteMetricSpace {
    FiniteMetricSpace::from_line(&[0.0, 0.1, 1.0]).expect("valid")
}

pub fn space_by_name(name: &str) -> Option<FiniteMetricSpace> {
    match name {
        "two_point" => Some(two_point_space()),
        "line3" => Some(three_point_line()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tower::validate_tower;

    #[test]
    fn named_towers_validate() {
        for name in TOWER_NAMES {
            let cfg = tower_config_by_name(name).unwrap();
            assert!(validate_tower(&cfg).passed(), "{name}");
        }
    }

    #[test]
    fn ladder_dimensions() {
        let cfg = ladder_config(4);
        assert_eq!(cfg.levels[1], vec![2, 1]);
        assert_eq!(cfg.levels[2], vec![4, 1, 2]);
        assert_eq!(cfg.levels[4], vec![16, 1, 2, 4, 8]);
    }
}
