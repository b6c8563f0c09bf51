//! Generator for the 20-house fishbone test feeder.
//!
//! Cable constants are representative low-voltage values; the source case study does
//! not publish them.

use num_complex::Complex64;

use super::{FeederSpec, InverterSpec, LineSpec, NodeKind, NodeSpec, PerUnitBase};

const DC_5520: [usize; 10] = [1, 3, 6, 7, 8, 9, 11, 14, 16, 19];
const DC_8000: [usize; 6] = [2, 10, 12, 13, 18, 20];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FishboneParams {
    pub poles: usize,
    pub houses_per_pole: usize,
    pub pole_span_m: f64,
    pub drop_m: f64,
    /// Ω/km
    pub trunk_r: f64,
    /// Ω/km
    pub drop_r: f64,
    /// H/km
    pub inductance: f64,
    pub frequency_hz: f64,
    pub derate: f64,
    /// Apparent-power rating over AC rating.
    pub oversize: f64,
    pub min_pf: f64,
    pub load_w: f64,
    pub load_pf: f64,
    pub base: PerUnitBase,
}

impl Default for FishboneParams {
    fn default() -> Self {
        Self {
            poles: 10,
            houses_per_pole: 2,
            pole_span_m: 30.0,
            drop_m: 20.0,
            trunk_r: 0.25,
            drop_r: 0.5,
            inductance: 1e-4,
            frequency_hz: 60.0,
            derate: 0.77,
            oversize: 1.1,
            min_pf: 0.85,
            load_w: 1000.0,
            load_pf: 0.9,
            base: PerUnitBase::default(),
        }
    }
}

/// DC nameplate of house `h` (1-based), W.
pub fn dc_rating(h: usize) -> f64 {
    if DC_5520.contains(&h) {
        5520.0
    } else if DC_8000.contains(&h) {
        8000.0
    } else {
        5700.0
    }
}

/// Node 0 is the transformer, poles are `1..=poles`, houses follow in order with the
/// houses of pole `k` hanging off it.
pub fn fishbone(p: &FishboneParams) -> FeederSpec {
    let omega = 2.0 * std::f64::consts::PI * p.frequency_hz;
    let z = |r_per_km: f64, len_m: f64| Complex64::new(r_per_km, omega * p.inductance) * (len_m / 1000.0);
    let q_ratio = p.load_pf.acos().tan();
    let mut nodes = vec![NodeSpec { index: 0, kind: NodeKind::Transformer, load_w: 0.0, load_var: 0.0, inverter: None }];
    let mut lines = Vec::new();
    for k in 1..=p.poles {
        nodes.push(NodeSpec { index: k, kind: NodeKind::Pole, load_w: 0.0, load_var: 0.0, inverter: None });
        lines.push(LineSpec {
            from: k - 1,
            to: k,
            impedance: z(p.trunk_r, p.pole_span_m),
            shunt: Complex64::new(0.0, 0.0),
            length_m: p.pole_span_m,
        });
    }
    for h in 1..=p.poles * p.houses_per_pole {
        let index = p.poles + h;
        let dc = dc_rating(h);
        let ac = dc * p.derate;
        nodes.push(NodeSpec {
            index,
            kind: NodeKind::House,
            load_w: p.load_w,
            load_var: p.load_w * q_ratio,
            inverter: Some(InverterSpec {
                s_rating: p.oversize * ac,
                min_pf_angle: p.min_pf.acos(),
                dc_rating: dc,
                derate: p.derate,
            }),
        });
        let pole = (h - 1) / p.houses_per_pole + 1;
        lines.push(LineSpec {
            from: pole,
            to: index,
            impedance: z(p.drop_r, p.drop_m),
            shunt: Complex64::new(0.0, 0.0),
            length_m: p.drop_m,
        });
    }
    FeederSpec { nodes, lines, base: p.base }
}
