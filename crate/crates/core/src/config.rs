//! Plain-text run description (TOML) and its expansion into mesh, materials and solver settings.
//!
//! Locations are given in grid indices, boxes in lengths. Lines, loops and junction paths
//! are copied onto every layer of an invariant axis, so a 2D setup only needs the first layer.

use crate::dynamics::{cfl_max_dt, OutputSpec, SimConfig, Solver};
use crate::error::{Error, Result};
use crate::fields::{
    init_state, paint_region, ChargeDrive, EdgeDrive, FieldState, Profile, Region, RegionMap, Scales, SourceSpec,
};
use crate::junction::{JunctionModel, JunctionSpec, Path};
use crate::mesh::{build_grid, BoxRegion, GridSpec, Mesh};
use crate::probe::{Probe, ProbeKind};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(a: usize) -> Self {
        [Axis::X, Axis::Y, Axis::Z][a]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub cells: [usize; 3],
    pub spacing: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Material {
    pub name: String,
    /// Penetration depth in units of λ_ref; 0 means vacuum.
    pub lambda: f64,
}

impl Material {
    pub fn vacuum() -> Self {
        Self { name: "vacuum".into(), lambda: 0.0 }
    }

    pub fn superconductor(name: &str, lambda: f64) -> Self {
        Self { name: name.into(), lambda }
    }

    fn region(&self) -> Result<Region> {
        if self.lambda == 0.0 {
            Ok(Region { name: self.name.clone(), r0: 0.0 })
        } else if self.lambda > 0.0 && self.lambda.is_finite() {
            Ok(Region::superconductor(&self.name, self.lambda))
        } else {
            Err(Error::InvalidRegion(format!("material '{}' has lambda = {}", self.name, self.lambda)))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paint {
    pub name: String,
    pub lambda: f64,
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionsSection {
    pub background: Material,
    /// Applied in order; later boxes overwrite earlier ones.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub paint: Vec<Paint>,
}

impl Default for RegionsSection {
    fn default() -> Self {
        Self { background: Material::vacuum(), paint: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalesSection {
    #[serde(default)]
    pub eta: f64,
    #[serde(default = "default_charge_sign")]
    pub charge_sign: f64,
    #[serde(default = "default_lambda_ref")]
    pub lambda_ref: f64,
}

fn default_charge_sign() -> f64 {
    -1.0
}

fn default_lambda_ref() -> f64 {
    100e-9
}

impl Default for ScalesSection {
    fn default() -> Self {
        Self::from(Scales::default())
    }
}

impl From<Scales> for ScalesSection {
    fn from(s: Scales) -> Self {
        Self { eta: s.eta, charge_sign: s.charge_sign, lambda_ref: s.lambda_ref }
    }
}

impl From<&ScalesSection> for Scales {
    fn from(s: &ScalesSection) -> Self {
        Scales { eta: s.eta, charge_sign: s.charge_sign, lambda_ref: s.lambda_ref }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub dt: f64,
    pub steps: usize,
}

/// Straight run of `count` edges along `axis` starting at vertex `start`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Line {
    pub axis: Axis,
    pub start: [usize; 3],
    pub count: usize,
    /// Traverse head to tail instead.
    #[serde(default, skip_serializing_if = "is_false")]
    pub reverse: bool,
}

fn is_false(b: &bool) -> bool {
    !*b
}

impl Line {
    pub fn new(axis: Axis, start: [usize; 3], count: usize) -> Self {
        Self { axis, start, count, reverse: false }
    }

    pub fn reversed(mut self) -> Self {
        self.reverse = !self.reverse;
        self
    }

    /// Oriented edges of the line on one layer.
    pub fn path(&self, mesh: &Mesh) -> Result<Path> {
        let a = self.axis.index();
        let nv = mesh.vertex_dims();
        if self.count == 0 || (0..3).any(|b| self.start[b] >= nv[b]) || self.start[a] + self.count > mesh.grid.cells[a]
        {
            return Err(Error::Config(format!(
                "line {:?} from {:?} ({} edges) leaves the grid",
                self.axis, self.start, self.count
            )));
        }
        let mut p = self.start;
        let mut out = Vec::with_capacity(self.count);
        for _ in 0..self.count {
            out.push((mesh.edge_id(a, p), 1.0));
            p[a] += 1;
        }
        if self.reverse {
            out.reverse();
            out.iter_mut().for_each(|x| x.1 = -1.0);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineDrive {
    pub axis: Axis,
    pub start: [usize; 3],
    pub count: usize,
    pub amplitude: f64,
    pub profile: Profile,
}

impl LineDrive {
    pub fn line(&self) -> Line {
        Line::new(self.axis, self.start, self.count)
    }
}

/// Rectangular current loop in the plane normal to `normal`, anticlockwise about it.
///
/// `size` counts cells along the two in-plane axes taken in cyclic order after `normal`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopDrive {
    pub normal: Axis,
    pub corner: [usize; 3],
    pub size: [usize; 2],
    pub amplitude: f64,
    pub profile: Profile,
}

impl LoopDrive {
    pub fn path(&self, mesh: &Mesh) -> Result<Path> {
        let n = self.normal.index();
        let (b, c) = ((n + 1) % 3, (n + 2) % 3);
        let [sb, sc] = self.size;
        if sb == 0 || sc == 0 {
            return Err(Error::Config("loop size must be positive".into()));
        }
        let mut out = Vec::new();
        let mut push = |l: Line| -> Result<()> {
            out.extend(l.path(mesh)?);
            Ok(())
        };
        let p0 = self.corner;
        let mut p1 = p0;
        p1[b] += sb;
        let mut p3 = p0;
        p3[c] += sc;
        push(Line::new(Axis::from_index(b), p0, sb))?;
        push(Line::new(Axis::from_index(c), p1, sc))?;
        push(Line::new(Axis::from_index(b), p3, sb).reversed())?;
        push(Line::new(Axis::from_index(c), p0, sc).reversed())?;
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DipoleDrive {
    pub axis: Axis,
    pub start: [usize; 3],
    pub count: usize,
    pub q0: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChargeSource {
    pub at: [usize; 3],
    pub amplitude: f64,
    pub profile: Profile,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourcesSection {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lines: Vec<LineDrive>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub loops: Vec<LoopDrive>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dipoles: Vec<DipoleDrive>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub charges: Vec<ChargeSource>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum JunctionModelEntry {
    Imposed { jc: f64 },
    AbInitio { region: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JunctionEntry {
    pub label: String,
    pub model: JunctionModelEntry,
    pub paths: Vec<Line>,
    /// Treat every edge of every line as its own one-edge path.
    #[serde(default, skip_serializing_if = "is_false")]
    pub per_edge: bool,
    pub half_width: f64,
    pub rho1: f64,
    pub rho2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProbeEntry {
    EdgeFlux {
        label: String,
        axis: Axis,
        at: [usize; 3],
    },
    EdgeCurrent {
        label: String,
        axis: Axis,
        at: [usize; 3],
    },
    VertexCharge {
        label: String,
        at: [usize; 3],
    },
    JunctionPhase {
        label: String,
        path: Line,
    },
    /// Mean transversal current over the edges of a line.
    JunctionCurrent {
        label: String,
        edges: Line,
    },
    /// Faces with normal `normal` whose indices lie in `lo..=hi`, plus an optional junction path.
    Fluxoid {
        label: String,
        normal: Axis,
        lo: [usize; 3],
        hi: [usize; 3],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<Line>,
        sign: f64,
    },
    Energy {
        label: String,
    },
    TotalCharge {
        label: String,
    },
}

impl ProbeEntry {
    pub fn label(&self) -> &str {
        match self {
            ProbeEntry::EdgeFlux { label, .. }
            | ProbeEntry::EdgeCurrent { label, .. }
            | ProbeEntry::VertexCharge { label, .. }
            | ProbeEntry::JunctionPhase { label, .. }
            | ProbeEntry::JunctionCurrent { label, .. }
            | ProbeEntry::Fluxoid { label, .. }
            | ProbeEntry::Energy { label }
            | ProbeEntry::TotalCharge { label } => label,
        }
    }

    fn resolve(&self, mesh: &Mesh) -> Result<Probe> {
        let nv = mesh.vertex_dims();
        let vertex = |at: [usize; 3]| -> Result<usize> {
            if (0..3).all(|a| at[a] < nv[a]) {
                Ok(mesh.vertex_id(at))
            } else {
                Err(Error::Probe(format!("{}: vertex {at:?} outside the grid", self.label())))
            }
        };
        let edge = |axis: Axis, at: [usize; 3]| -> Result<usize> { Ok(Line::new(axis, at, 1).path(mesh)?[0].0) };
        let kind = match self {
            ProbeEntry::EdgeFlux { axis, at, .. } => ProbeKind::EdgeFlux { edge: edge(*axis, *at)? },
            ProbeEntry::EdgeCurrent { axis, at, .. } => ProbeKind::EdgeCurrent { edge: edge(*axis, *at)? },
            ProbeEntry::VertexCharge { at, .. } => ProbeKind::VertexCharge { vertex: vertex(*at)? },
            ProbeEntry::JunctionPhase { path, .. } => ProbeKind::JunctionPhase { path: path.path(mesh)? },
            ProbeEntry::JunctionCurrent { edges, .. } => {
                ProbeKind::JunctionCurrent { edges: edges.path(mesh)?.into_iter().map(|x| x.0).collect() }
            }
            ProbeEntry::Fluxoid { normal, lo, hi, path, sign, .. } => {
                let n = normal.index();
                let fd = mesh.face_dims(n);
                if (0..3).any(|a| lo[a] > hi[a] || hi[a] >= fd[a]) {
                    return Err(Error::Probe(format!(
                        "{}: face box {lo:?}..{hi:?} is empty or outside {fd:?}",
                        self.label()
                    )));
                }
                let mut faces = Vec::new();
                for i in lo[0]..=hi[0] {
                    for j in lo[1]..=hi[1] {
                        for k in lo[2]..=hi[2] {
                            faces.push((mesh.face_id(n, [i, j, k]), 1.0));
                        }
                    }
                }
                let path = match path {
                    Some(l) => l.path(mesh)?,
                    None => Vec::new(),
                };
                ProbeKind::Fluxoid { faces, path, sign: *sign }
            }
            ProbeEntry::Energy { .. } => ProbeKind::Energy,
            ProbeEntry::TotalCharge { .. } => ProbeKind::TotalCharge,
        };
        Ok(Probe::new(self.label(), kind))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "one")]
    pub every: usize,
    #[serde(default)]
    pub snapshot_every: usize,
}

fn one() -> usize {
    1
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { every: 1, snapshot_every: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    Uniform,
    /// exp(−((x − center)/width)²) along one axis, evaluated at edge midpoints.
    Gaussian {
        along: Axis,
        center: f64,
        width: f64,
    },
}

/// Initial flux on the edges along `axis` that lie inside a box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fill {
    pub axis: Axis,
    pub lo: [f64; 3],
    pub hi: [f64; 3],
    pub amplitude: f64,
    /// Flux one step earlier; defaults to `amplitude` (start at rest).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prev_amplitude: Option<f64>,
    pub shape: Shape,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub fills: Vec<Fill>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModesSection {
    pub count: usize,
    /// Length L used for the reported mode number L√E/π.
    pub length: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<f64>,
    #[serde(default = "half")]
    pub min_curl_fraction: f64,
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Angular frequency of every sinusoidal drive.
    Omega,
    /// Rate of every linear ramp drive.
    Rate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    /// Probe whose late-time amplitude (max |x| over the second half of the run) is recorded.
    pub probe: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub grid: GridSection,
    #[serde(default)]
    pub regions: RegionsSection,
    #[serde(default)]
    pub scales: ScalesSection,
    pub time: TimeSection,
    #[serde(default)]
    pub sources: SourcesSection,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub junctions: Vec<JunctionEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub probes: Vec<ProbeEntry>,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<ModesSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

/// Everything a run needs, expanded from a document.
pub struct Setup {
    pub mesh: Mesh,
    pub regions: RegionMap,
    pub config: SimConfig,
    pub initial: FieldState,
}

impl Setup {
    pub fn solver(&self) -> Result<Solver<'_>> {
        let mut s = Solver::new(&self.mesh, &self.regions, self.config.clone())?;
        s.set_state(self.initial.clone())?;
        Ok(s)
    }
}

/// Every copy of a path across the layers of invariant axes.
fn layer_copies(mesh: &Mesh, path: &Path) -> Vec<Path> {
    let inv = mesh.invariant_axes();
    let mut shifts = vec![[0usize; 3]];
    for a in 0..3 {
        if inv[a] {
            shifts = shifts
                .into_iter()
                .flat_map(|s| {
                    [s, {
                        let mut t = s;
                        t[a] = 1;
                        t
                    }]
                })
                .collect();
        }
    }
    shifts
        .iter()
        .map(|d| {
            path.iter()
                .map(|&(e, s)| {
                    let (axis, mut p) = mesh.edge_coords(e);
                    (0..3).for_each(|a| p[a] += d[a]);
                    (mesh.edge_id(axis, p), s)
                })
                .collect()
        })
        .collect()
}

impl ConfigDocument {
    pub fn mesh(&self) -> Result<Mesh> {
        build_grid(GridSpec::new(self.grid.cells, self.grid.spacing))
    }

    pub fn region_map(&self, mesh: &Mesh) -> Result<RegionMap> {
        let mut map = RegionMap::new(mesh, self.regions.background.region()?);
        let mut ids: BTreeMap<String, (usize, f64)> = BTreeMap::new();
        ids.insert(self.regions.background.name.clone(), (0, self.regions.background.lambda));
        for p in &self.regions.paint {
            let id = match ids.get(&p.name) {
                Some(&(id, lambda)) => {
                    if lambda != p.lambda {
                        return Err(Error::InvalidRegion(format!(
                            "region '{}' painted with two different lambdas",
                            p.name
                        )));
                    }
                    id
                }
                None => {
                    let id = map.add_region(Material::superconductor(&p.name, p.lambda).region()?)?;
                    ids.insert(p.name.clone(), (id, p.lambda));
                    id
                }
            };
            paint_region(mesh, &mut map, id, &BoxRegion::new(p.lo, p.hi))?;
        }
        Ok(map)
    }

    pub fn sources(&self, mesh: &Mesh) -> Result<SourceSpec> {
        let mut spec = SourceSpec::default();
        let mut add = |path: Path, amplitude: f64, profile: Profile| {
            for edges in layer_copies(mesh, &path) {
                spec.edge_drives.push(EdgeDrive { edges, amplitude, profile });
            }
        };
        for d in &self.sources.lines {
            add(d.line().path(mesh)?, d.amplitude, d.profile);
        }
        for d in &self.sources.loops {
            add(d.path(mesh)?, d.amplitude, d.profile);
        }
        for d in &self.sources.dipoles {
            let mut one = SourceSpec::default();
            one.add_dipole(mesh, d.start, d.axis.index(), d.count, d.q0, d.omega)?;
            for drive in one.edge_drives {
                for edges in layer_copies(mesh, &drive.edges) {
                    spec.edge_drives.push(EdgeDrive { edges, ..drive.clone() });
                }
            }
            spec.charge_drives.extend(one.charge_drives);
        }
        let nv = mesh.vertex_dims();
        for c in &self.sources.charges {
            if (0..3).any(|a| c.at[a] >= nv[a]) {
                return Err(Error::Config(format!("charge source at {:?} outside the grid", c.at)));
            }
            spec.charge_drives.push(ChargeDrive {
                vertex: mesh.vertex_id(c.at),
                amplitude: c.amplitude,
                profile: c.profile,
            });
        }
        Ok(spec)
    }

    pub fn junctions(&self, mesh: &Mesh, regions: &RegionMap) -> Result<Vec<JunctionSpec>> {
        let mut out = Vec::new();
        for j in &self.junctions {
            let model = match &j.model {
                JunctionModelEntry::Imposed { jc } => JunctionModel::Imposed { jc: *jc },
                JunctionModelEntry::AbInitio { region } => JunctionModel::AbInitio {
                    region: regions.region_id(region).ok_or_else(|| {
                        Error::Junction(format!("junction '{}' names unknown region '{region}'", j.label))
                    })?,
                },
            };
            let mut paths = Vec::new();
            for l in &j.paths {
                for p in layer_copies(mesh, &l.path(mesh)?) {
                    if j.per_edge {
                        paths.extend(p.into_iter().map(|x| vec![x]));
                    } else {
                        paths.push(p);
                    }
                }
            }
            out.push(JunctionSpec {
                label: j.label.clone(),
                paths,
                model,
                half_width: j.half_width,
                rho1: j.rho1,
                rho2: j.rho2,
            });
        }
        Ok(out)
    }

    pub fn initial_state(&self, mesh: &Mesh, regions: &RegionMap) -> Result<FieldState> {
        let mut st = init_state(mesh, regions);
        if let Some(init) = &self.initial {
            for f in &init.fills {
                let prev = f.prev_amplitude.unwrap_or(f.amplitude);
                for e in mesh.edges_in_box(&BoxRegion::new(f.lo, f.hi), Some(f.axis.index())) {
                    if mesh.clamped[e] {
                        continue;
                    }
                    let w = match f.shape {
                        Shape::Uniform => 1.0,
                        Shape::Gaussian { along, center, width } => {
                            let x = mesh.edge_midpoint(e)[along.index()];
                            (-((x - center) / width).powi(2)).exp()
                        }
                    };
                    st.phi[e] = f.amplitude * w;
                    st.phi_prev[e] = prev * w;
                }
            }
        }
        Ok(st)
    }

    pub fn sim_config(&self, mesh: &Mesh, regions: &RegionMap) -> Result<SimConfig> {
        let mut cfg = SimConfig::new(self.time.dt, self.time.steps, Scales::from(&self.scales));
        cfg.sources = self.sources(mesh)?;
        cfg.junctions = self.junctions(mesh, regions)?;
        cfg.probes = self.probes.iter().map(|p| p.resolve(mesh)).collect::<Result<_>>()?;
        let mut seen = std::collections::HashSet::new();
        for p in &cfg.probes {
            if !seen.insert(p.label.clone()) {
                return Err(Error::Config(format!("duplicate probe label '{}'", p.label)));
            }
        }
        cfg.output = OutputSpec { every: self.output.every, snapshot_every: self.output.snapshot_every };
        Ok(cfg)
    }

    /// Expands and validates the document, including the stability limit.
    pub fn build(&self) -> Result<Setup> {
        let mesh = self.mesh()?;
        let regions = self.region_map(&mesh)?;
        let config = self.sim_config(&mesh, &regions)?;
        let initial = self.initial_state(&mesh, &regions)?;
        let setup = Setup { mesh, regions, config, initial };
        setup.solver()?;
        Ok(setup)
    }

    /// Largest stable time step on this document's grid.
    pub fn cfl_max_dt(&self) -> Result<f64> {
        Ok(cfl_max_dt(&self.mesh()?))
    }

    pub fn render(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot render config: {e}")))
    }
}

/// Scenario parameters given under `[params]`.
pub type Params = BTreeMap<String, f64>;

/// Parses a document, expanding `scenario = <name>` and then applying `key=value` overrides.
///
/// Overrides address nested keys with dots, e.g. `time.dt=0.05` or `probes.0.label="a"`.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<ConfigDocument> {
    let mut table: toml::Table =
        text.parse().map_err(|e: toml::de::Error| Error::Config(format!("syntax error: {e}")))?;
    if let Some(name) = table.remove("scenario") {
        let name = name.as_str().ok_or_else(|| Error::Config("`scenario` must be a string".into()))?.to_string();
        let params = match table.remove("params") {
            Some(v) => parse_params(v)?,
            None => Params::new(),
        };
        let doc = crate::scenarios::build_scenario(&name, &params)?;
        let mut base = toml::Table::try_from(&doc).map_err(|e| Error::Config(e.to_string()))?;
        merge(&mut base, table);
        table = base;
    } else if table.contains_key("params") {
        return Err(Error::Config("`params` is only allowed together with `scenario`".into()));
    }
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    toml::Value::Table(table).try_into::<ConfigDocument>().map_err(|e| Error::Config(e.to_string().trim().to_string()))
}

fn parse_params(v: toml::Value) -> Result<Params> {
    let t = v.as_table().ok_or_else(|| Error::Config("`params` must be a table".into()))?;
    let mut out = Params::new();
    for (k, v) in t {
        let x = match v {
            toml::Value::Float(x) => *x,
            toml::Value::Integer(i) => *i as f64,
            _ => return Err(Error::Config(format!("parameter `{k}` must be a number"))),
        };
        out.insert(k.clone(), x);
    }
    Ok(out)
}

/// Key-by-key merge; tables merge recursively, everything else replaces.
fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) =
        spec.split_once('=').ok_or_else(|| Error::Config(format!("override `{spec}` is not key=value")))?;
    let key = key.trim();
    let value = match format!("v = {}", raw.trim()).parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap(),
        Err(_) => toml::Value::String(raw.trim().to_string()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    let mut cur = table;
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        if last {
            cur.insert(part.to_string(), value);
            return Ok(());
        }
        let next = cur.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = match next {
            toml::Value::Table(t) => t,
            toml::Value::Array(arr) => {
                let idx: usize = parts[i + 1]
                    .parse()
                    .map_err(|_| Error::Config(format!("override `{key}`: `{part}` is a list, expected an index")))?;
                let item = arr
                    .get_mut(idx)
                    .ok_or_else(|| Error::Config(format!("override `{key}`: index {idx} out of range")))?;
                if i + 2 == parts.len() {
                    *item = value;
                    return Ok(());
                }
                match item {
                    toml::Value::Table(t) => {
                        // skip the index segment
                        return apply_override(t, &format!("{}={}", parts[i + 2..].join("."), raw));
                    }
                    _ => return Err(Error::Config(format!("override `{key}`: item {idx} is not a table"))),
                }
            }
            _ => return Err(Error::Config(format!("override `{key}`: `{part}` is not a table"))),
        };
    }
    Ok(())
}
