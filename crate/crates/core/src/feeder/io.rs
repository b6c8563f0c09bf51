//! Feeder description files (JSON).

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{FeederError, FeederSpec, InverterSpec, LineSpec, NodeKind, NodeSpec, PerUnitBase};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeederFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<BaseEntry>,
    pub nodes: Vec<NodeEntry>,
    pub lines: Vec<LineEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseEntry {
    pub s_va: f64,
    pub v_v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeEntry {
    pub index: usize,
    pub kind: NodeKind,
    #[serde(default)]
    pub load_w: f64,
    #[serde(default)]
    pub load_var: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inverter: Option<InverterEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InverterEntry {
    pub s_va: f64,
    /// Minimum power factor; 0 disables the cut.
    pub min_pf: f64,
    pub dc_w: f64,
    pub derate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineEntry {
    pub from: usize,
    pub to: usize,
    pub r_ohm: f64,
    pub x_ohm: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub g_shunt_s: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub b_shunt_s: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub length_m: f64,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

impl From<&FeederFile> for FeederSpec {
    fn from(f: &FeederFile) -> Self {
        let nodes = f
            .nodes
            .iter()
            .map(|n| NodeSpec {
                index: n.index,
                kind: n.kind,
                load_w: n.load_w,
                load_var: n.load_var,
                inverter: n.inverter.map(|i| InverterSpec {
                    s_rating: i.s_va,
                    min_pf_angle: i.min_pf.clamp(0.0, 1.0).acos(),
                    dc_rating: i.dc_w,
                    derate: i.derate,
                }),
            })
            .collect();
        let lines = f
            .lines
            .iter()
            .map(|l| LineSpec {
                from: l.from,
                to: l.to,
                impedance: Complex64::new(l.r_ohm, l.x_ohm),
                shunt: Complex64::new(l.g_shunt_s, l.b_shunt_s),
                length_m: l.length_m,
            })
            .collect();
        let base = f.base.map_or_else(PerUnitBase::default, |b| PerUnitBase { s_va: b.s_va, v_v: b.v_v });
        FeederSpec { nodes, lines, base }
    }
}

impl From<&FeederSpec> for FeederFile {
    fn from(s: &FeederSpec) -> Self {
        let nodes = s
            .nodes
            .iter()
            .map(|n| NodeEntry {
                index: n.index,
                kind: n.kind,
                load_w: n.load_w,
                load_var: n.load_var,
                inverter: n.inverter.map(|i| InverterEntry {
                    s_va: i.s_rating,
                    min_pf: i.min_pf_angle.cos().max(0.0),
                    dc_w: i.dc_rating,
                    derate: i.derate,
                }),
            })
            .collect();
        let lines = s
            .lines
            .iter()
            .map(|l| LineEntry {
                from: l.from,
                to: l.to,
                r_ohm: l.impedance.re,
                x_ohm: l.impedance.im,
                g_shunt_s: l.shunt.re,
                b_shunt_s: l.shunt.im,
                length_m: l.length_m,
            })
            .collect();
        FeederFile { base: Some(BaseEntry { s_va: s.base.s_va, v_v: s.base.v_v }), nodes, lines }
    }
}

pub fn parse_feeder(text: &str) -> Result<FeederSpec, FeederError> {
    let file: FeederFile = serde_json::from_str(text)?;
    Ok(FeederSpec::from(&file))
}

pub fn load_feeder(path: &Path) -> Result<FeederSpec, FeederError> {
    parse_feeder(&std::fs::read_to_string(path)?)
}

pub fn save_feeder(spec: &FeederSpec, path: &Path) -> Result<(), FeederError> {
    let mut text = serde_json::to_string_pretty(&FeederFile::from(spec))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
