//! Distribution network data: buses, lines, the pole catalog and planning
//! parameters, with JSON ingestion and invariant checking.
//!
//! Units are fixed: voltages and impedances in per-unit, powers in kW/kVAr,
//! money in dollars and time in hours. Impedances are per-unit on
//! `params.s_base_kva`, so a flow of `P` kW contributes `R * P / s_base_kva`
//! to the linearized voltage drop.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hazard::FragilityCurve;

pub type BusId = u32;

/// Substation headroom over the summed peak demand.
pub const SUBSTATION_CAPACITY_FACTOR: f64 = 1.5;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("network file does not match the schema: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("line {line} references unknown bus {bus}")]
    UnresolvedBus { line: usize, bus: BusId },
    #[error("duplicate line between buses {from} and {to}")]
    DuplicateLine { from: BusId, to: BusId },
    #[error("duplicate bus id {0}")]
    DuplicateBus(BusId),
    #[error("unknown bus {0}")]
    UnknownBus(BusId),
}

/// Per-bus load, either flat over the hazard window or a per-step profile
/// that repeats if the window is longer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LoadSeries {
    Constant(f64),
    Profile(Vec<f64>),
}

impl Default for LoadSeries {
    fn default() -> Self {
        LoadSeries::Constant(0.0)
    }
}

impl LoadSeries {
    pub fn at(&self, step: usize) -> f64 {
        match self {
            LoadSeries::Constant(v) => *v,
            LoadSeries::Profile(p) if p.is_empty() => 0.0,
            LoadSeries::Profile(p) => p[step % p.len()],
        }
    }

    pub fn peak(&self) -> f64 {
        match self {
            LoadSeries::Constant(v) => *v,
            LoadSeries::Profile(p) => p.iter().copied().fold(0.0, f64::max),
        }
    }

    fn values(&self) -> Vec<f64> {
        match self {
            LoadSeries::Constant(v) => vec![*v],
            LoadSeries::Profile(p) => p.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bus {
    pub id: BusId,
    #[serde(default)]
    pub is_substation: bool,
    pub v_min: f64,
    pub v_max: f64,
    #[serde(default)]
    pub dg_candidate: bool,
    #[serde(default)]
    pub dg_p_max: f64,
    #[serde(default)]
    pub dg_q_max: f64,
    #[serde(default)]
    pub base_p_load: LoadSeries,
    #[serde(default)]
    pub base_q_load: LoadSeries,
    #[serde(default)]
    pub shed_cost: f64,
    #[serde(default)]
    pub dg_op_cost: f64,
    #[serde(default)]
    pub dg_install_cost: f64,
}

/// A branch with fixed orientation `from_bus -> to_bus`; positive flow runs
/// in that direction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Line {
    pub from_bus: BusId,
    pub to_bus: BusId,
    pub resistance: f64,
    pub reactance: f64,
    pub p_max: f64,
    pub q_max: f64,
    #[serde(default)]
    pub existing_sectionalizer_from: bool,
    #[serde(default)]
    pub existing_sectionalizer_to: bool,
    #[serde(default)]
    pub sectionalizer_cost: f64,
    pub hardening_costs: Vec<f64>,
}

impl Line {
    pub fn existing_sectionalizer(&self, end: LineEnd) -> bool {
        match end {
            LineEnd::From => self.existing_sectionalizer_from,
            LineEnd::To => self.existing_sectionalizer_to,
        }
    }

    pub fn end_bus(&self, end: LineEnd) -> BusId {
        match end {
            LineEnd::From => self.from_bus,
            LineEnd::To => self.to_bus,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineEnd {
    From,
    To,
}

impl LineEnd {
    pub const BOTH: [LineEnd; 2] = [LineEnd::From, LineEnd::To];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoleOption {
    pub index: usize,
    pub label: String,
    /// Id of a curve in the network's fragility library.
    pub fragility: String,
    pub repair_unit_cost: f64,
}

fn default_v0() -> f64 {
    1.0
}
fn default_n_g_max() -> u32 {
    1
}
fn default_w_h() -> f64 {
    1.0
}
fn default_s_base() -> f64 {
    1000.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkParams {
    #[serde(default = "default_v0")]
    pub v0: f64,
    /// Budget on new backup generators.
    #[serde(default = "default_n_g_max")]
    pub n_g_max: u32,
    /// Hazards per year.
    #[serde(default = "default_w_h")]
    pub w_h: f64,
    /// Voltage-dependent term of the active power balance (kW per pu).
    #[serde(default)]
    pub epsilon1: f64,
    /// Big-M of the voltage-drop envelope; derived when absent.
    #[serde(default)]
    pub big_m1: Option<f64>,
    #[serde(default = "default_s_base")]
    pub s_base_kva: f64,
}

impl Default for NetworkParams {
    fn default() -> Self {
        Self {
            v0: default_v0(),
            n_g_max: default_n_g_max(),
            w_h: default_w_h(),
            epsilon1: 0.0,
            big_m1: None,
            s_base_kva: default_s_base(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkDoc {
    buses: Vec<Bus>,
    lines: Vec<Line>,
    pole_catalog: Vec<PoleOption>,
    #[serde(default)]
    fragility_curves: Vec<FragilityCurve>,
    params: NetworkParams,
}

/// A resolved network. Immutable once built; line endpoints are available
/// as bus positions through [`Network::endpoints`].
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
    pub pole_catalog: Vec<PoleOption>,
    pub fragility_curves: Vec<FragilityCurve>,
    pub params: NetworkParams,
    bus_index: HashMap<BusId, usize>,
    endpoints: Vec<(usize, usize)>,
}

/// Whether a line leaves or enters the bus it was looked up from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    /// The bus is `from_bus`; the line's flow counts positively in its balance.
    Outgoing,
    /// The bus is `to_bus`; the line's flow counts negatively.
    Incoming,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Incidence {
    pub line: usize,
    pub orientation: Orientation,
}

impl Network {
    /// Resolves bus references and fills in derived defaults.
    pub fn new(
        buses: Vec<Bus>,
        lines: Vec<Line>,
        pole_catalog: Vec<PoleOption>,
        fragility_curves: Vec<FragilityCurve>,
        mut params: NetworkParams,
    ) -> Result<Self, NetworkError> {
        let mut bus_index = HashMap::with_capacity(buses.len());
        for (pos, bus) in buses.iter().enumerate() {
            if bus_index.insert(bus.id, pos).is_some() {
                return Err(NetworkError::DuplicateBus(bus.id));
            }
        }
        let mut seen = HashSet::new();
        let mut endpoints = Vec::with_capacity(lines.len());
        for (l, line) in lines.iter().enumerate() {
            let resolve = |bus| {
                bus_index
                    .get(&bus)
                    .copied()
                    .ok_or(NetworkError::UnresolvedBus { line: l, bus })
            };
            let (a, b) = (resolve(line.from_bus)?, resolve(line.to_bus)?);
            let key = (line.from_bus.min(line.to_bus), line.from_bus.max(line.to_bus));
            if !seen.insert(key) {
                return Err(NetworkError::DuplicateLine {
                    from: line.from_bus,
                    to: line.to_bus,
                });
            }
            endpoints.push((a, b));
        }
        let mut net = Self {
            buses,
            lines,
            pole_catalog,
            fragility_curves,
            params: params.clone(),
            bus_index,
            endpoints,
        };
        if params.big_m1.is_none() {
            params.big_m1 = Some(net.derived_big_m1());
        }
        net.params = params;
        Ok(net)
    }

    pub fn from_json_str(text: &str) -> Result<Self, NetworkError> {
        let doc: NetworkDoc = serde_json::from_str(text)?;
        Self::new(
            doc.buses,
            doc.lines,
            doc.pole_catalog,
            doc.fragility_curves,
            doc.params,
        )
    }

    pub fn to_json_string(&self) -> String {
        let doc = NetworkDoc {
            buses: self.buses.clone(),
            lines: self.lines.clone(),
            pole_catalog: self.pole_catalog.clone(),
            fragility_curves: self.fragility_curves.clone(),
            params: self.params.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("network serializes")
    }

    /// SHA-256 of the canonical JSON form, for run manifests.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        hex::encode(Sha256::digest(self.to_json_string().as_bytes()))
    }

    pub fn num_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn num_lines(&self) -> usize {
        self.lines.len()
    }

    pub fn num_pole_options(&self) -> usize {
        self.pole_catalog.len()
    }

    pub fn bus_position(&self, id: BusId) -> Option<usize> {
        self.bus_index.get(&id).copied()
    }

    /// Bus positions `(from, to)` of line `l`.
    pub fn endpoints(&self, l: usize) -> (usize, usize) {
        self.endpoints[l]
    }

    pub fn substation(&self) -> Option<usize> {
        self.buses.iter().position(|b| b.is_substation)
    }

    pub fn fragility(&self, id: &str) -> Option<&FragilityCurve> {
        self.fragility_curves.iter().find(|c| c.id == id)
    }

    pub fn big_m1(&self) -> f64 {
        self.params.big_m1.unwrap_or_else(|| self.derived_big_m1())
    }

    /// Smallest M that relaxes the voltage-drop envelope for any flow within
    /// line limits.
    pub fn derived_big_m1(&self) -> f64 {
        let v_max = self.buses.iter().map(|b| b.v_max).fold(0.0, f64::max);
        let drop = self
            .lines
            .iter()
            .map(|l| self.drop_per_kw(l) * l.p_max + self.drop_per_kvar(l) * l.q_max)
            .fold(0.0, f64::max);
        v_max + drop
    }

    /// Voltage drop (pu) per kW of active flow on `line`.
    pub fn drop_per_kw(&self, line: &Line) -> f64 {
        line.resistance / (self.params.s_base_kva * self.params.v0)
    }

    /// Voltage drop (pu) per kVAr of reactive flow on `line`.
    pub fn drop_per_kvar(&self, line: &Line) -> f64 {
        line.reactance / (self.params.s_base_kva * self.params.v0)
    }

    /// Active and reactive capacity of the substation source.
    pub fn substation_capacity(&self) -> (f64, f64) {
        let p: f64 = self.buses.iter().map(|b| b.base_p_load.peak()).sum();
        let q: f64 = self.buses.iter().map(|b| b.base_q_load.peak()).sum();
        (
            p * SUBSTATION_CAPACITY_FACTOR,
            q.abs() * SUBSTATION_CAPACITY_FACTOR,
        )
    }

    /// Total cost of fitting option `k` on every line; used to rank options.
    pub fn option_cost(&self, k: usize) -> f64 {
        self.lines
            .iter()
            .map(|l| l.hardening_costs.get(k).copied().unwrap_or(0.0))
            .sum()
    }

    pub fn incident_lines(&self, bus: BusId) -> Result<Vec<Incidence>, NetworkError> {
        let pos = self.bus_position(bus).ok_or(NetworkError::UnknownBus(bus))?;
        Ok(self.incident_at(pos))
    }

    pub(crate) fn incident_at(&self, pos: usize) -> Vec<Incidence> {
        self.endpoints
            .iter()
            .enumerate()
            .filter_map(|(line, &(a, b))| {
                if a == pos {
                    Some(Incidence {
                        line,
                        orientation: Orientation::Outgoing,
                    })
                } else if b == pos {
                    Some(Incidence {
                        line,
                        orientation: Orientation::Incoming,
                    })
                } else {
                    None
                }
            })
            .collect()
    }

    fn unreachable_buses(&self) -> Vec<BusId> {
        let Some(root) = self.substation().or(if self.buses.is_empty() { None } else { Some(0) })
        else {
            return Vec::new();
        };
        let mut adj = vec![Vec::new(); self.buses.len()];
        for &(a, b) in &self.endpoints {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut seen = vec![false; self.buses.len()];
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        self.buses
            .iter()
            .zip(&seen)
            .filter(|(_, s)| !**s)
            .map(|(b, _)| b.id)
            .collect()
    }
}

pub fn parse_network(path: impl AsRef<Path>) -> Result<Network, NetworkError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| NetworkError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Network::from_json_str(&text)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Issue {
    pub code: String,
    pub location: String,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }

    fn error(&mut self, code: &str, location: impl Into<String>, message: impl Into<String>) {
        self.errors.push(Issue {
            code: code.to_string(),
            location: location.into(),
            message: message.into(),
        });
    }

    fn warn(&mut self, code: &str, location: impl Into<String>, message: impl Into<String>) {
        self.warnings.push(Issue {
            code: code.to_string(),
            location: location.into(),
            message: message.into(),
        });
    }
}

/// Checks every data invariant. Never fails; problems land in the report in
/// a fixed order so the same network always yields the same report.
pub fn validate_network(net: &Network) -> ValidationReport {
    let mut r = ValidationReport::default();

    let substations: Vec<BusId> = net
        .buses
        .iter()
        .filter(|b| b.is_substation)
        .map(|b| b.id)
        .collect();
    if substations.len() != 1 {
        r.error(
            "substation-count",
            "buses",
            format!(
                "exactly one substation bus is required, found {} ({:?})",
                substations.len(),
                substations
            ),
        );
    }

    for b in &net.buses {
        let loc = format!("buses[id={}]", b.id);
        if !(b.v_min > 0.0 && b.v_min < b.v_max) {
            r.error(
                "voltage-limits",
                &loc,
                format!("need 0 < v_min < v_max, got v_min={} v_max={}", b.v_min, b.v_max),
            );
        }
        if b.dg_candidate && !(b.dg_p_max > 0.0 && b.dg_q_max > 0.0) {
            r.error(
                "dg-capacity",
                &loc,
                "DG candidate needs positive dg_p_max and dg_q_max",
            );
        }
        let loads = b.base_p_load.values().into_iter().chain(b.base_q_load.values());
        if loads.into_iter().any(|x| !x.is_finite()) {
            r.error("load", &loc, "load values must be finite");
        }
        if b.base_p_load.values().iter().any(|&x| x < 0.0) {
            r.error("load", &loc, "active load must be non-negative");
        }
        for (name, v) in [
            ("shed_cost", b.shed_cost),
            ("dg_op_cost", b.dg_op_cost),
            ("dg_install_cost", b.dg_install_cost),
        ] {
            if !(v >= 0.0) {
                r.error("cost", &loc, format!("{name} must be non-negative, got {v}"));
            }
        }
    }

    let k = net.num_pole_options();
    if k == 0 {
        r.error("pole-catalog", "pole_catalog", "catalog is empty");
    }
    for (l, line) in net.lines.iter().enumerate() {
        let loc = format!("lines[{l}] ({}-{})", line.from_bus, line.to_bus);
        if line.from_bus == line.to_bus {
            r.error("self-loop", &loc, "from_bus equals to_bus");
        }
        if !(line.resistance >= 0.0 && line.reactance >= 0.0) {
            r.error("impedance", &loc, "resistance and reactance must be non-negative");
        }
        if !(line.p_max > 0.0 && line.q_max > 0.0) {
            r.error("flow-limit", &loc, "p_max and q_max must be positive");
        }
        if line.hardening_costs.len() != k {
            r.error(
                "hardening-costs",
                &loc,
                format!(
                    "expected {k} hardening costs (one per pole option), got {}",
                    line.hardening_costs.len()
                ),
            );
        }
        if line.hardening_costs.iter().any(|c| !(*c >= 0.0)) {
            r.error("hardening-costs", &loc, "hardening costs must be non-negative");
        }
        if line.hardening_costs.first().is_some_and(|c| *c != 0.0) {
            r.error(
                "baseline-option",
                &loc,
                "pole option 0 is the existing pole and must cost 0",
            );
        }
        if !(line.sectionalizer_cost >= 0.0) {
            r.error("cost", &loc, "sectionalizer_cost must be non-negative");
        }
    }

    let mut curves_ok = true;
    for (pos, opt) in net.pole_catalog.iter().enumerate() {
        let loc = format!("pole_catalog[{pos}]");
        if opt.index != pos {
            r.error(
                "pole-index",
                &loc,
                format!("option index {} does not match its position {pos}", opt.index),
            );
        }
        if !(opt.repair_unit_cost >= 0.0) {
            r.error("cost", &loc, "repair_unit_cost must be non-negative");
        }
        match net.fragility(&opt.fragility) {
            None => {
                curves_ok = false;
                r.error(
                    "fragility-ref",
                    &loc,
                    format!("fragility curve `{}` is not defined", opt.fragility),
                );
            }
            Some(c) => {
                for p in c.problems() {
                    curves_ok = false;
                    r.error("fragility-curve", format!("fragility_curves[{}]", c.id), p);
                }
            }
        }
    }
    if curves_ok && k > 1 {
        let curve = |i: usize| net.fragility(&net.pole_catalog[i].fragility).unwrap();
        for i in 1..k {
            if !curve(i).dominated_by(curve(0)) {
                r.warn(
                    "baseline-not-weakest",
                    format!("pole_catalog[{i}]"),
                    "option is not pointwise at least as strong as the existing pole",
                );
            }
        }
        for a in 0..k {
            for b in 0..k {
                if net.option_cost(a) > net.option_cost(b) && !curve(a).dominated_by(curve(b)) {
                    r.warn(
                        "fragility-cost-order",
                        format!("pole_catalog[{a}]"),
                        format!(
                            "option {a} costs more than option {b} but is not at least as strong"
                        ),
                    );
                }
            }
        }
    }

    let unreachable = net.unreachable_buses();
    if !unreachable.is_empty() {
        r.error(
            "connectivity",
            "lines",
            format!("buses not reachable from the substation: {unreachable:?}"),
        );
    }

    let p = &net.params;
    if !(p.w_h > 0.0) {
        r.error("params", "params.w_h", "w_h must be positive");
    }
    if !(p.s_base_kva > 0.0) {
        r.error("params", "params.s_base_kva", "s_base_kva must be positive");
    }
    if !p.epsilon1.is_finite() {
        r.error("params", "params.epsilon1", "epsilon1 must be finite");
    }
    let lo = net.buses.iter().map(|b| b.v_min).fold(f64::INFINITY, f64::min);
    let hi = net.buses.iter().map(|b| b.v_max).fold(f64::NEG_INFINITY, f64::max);
    if !(p.v0 >= lo && p.v0 <= hi) {
        r.error(
            "params",
            "params.v0",
            format!("v0={} outside the voltage range [{lo}, {hi}]", p.v0),
        );
    }
    if let Some(m) = p.big_m1 {
        if !(m > 0.0 && m.is_finite()) {
            r.error("params", "params.big_m1", "big_m1 must be positive and finite");
        }
    }
    r
}
