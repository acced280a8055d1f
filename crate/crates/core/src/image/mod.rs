//! Images as subnets: each stored pixel is a neuron, adjacent pixels are
//! joined by direction-labeled connections, and classification compares
//! per-color neuron counts and direction-label sets.

mod grid;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use grid::{
    load_grid, palette_name, parse_grid, parse_palette, parse_pgm, quantize, PixelGrid, PixelKind,
    BACKGROUND, BLACK,
};

use crate::error::{Error, Result};
use crate::mesh::{label_set, EndpointRef, Mesh, NeuronId, SubnetId, SubnetRole};
use crate::value::{Decimal, Value};

pub const SUPER_SUBNET: &str = "images";
pub const LABEL_SUBNET: &str = "image-labels";
pub const UNIT_SUBNET: &str = "units";
const LABEL_LINK: &str = "label";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    E,
    W,
    N,
    S,
    NE,
    NW,
    SE,
    SW,
    /// Wildcard: any direction.
    Any,
    /// Wildcard: same direction as the shape's first edge.
    Inherit,
}

impl Direction {
    pub const CONCRETE: [Direction; 8] = [
        Direction::E,
        Direction::W,
        Direction::N,
        Direction::S,
        Direction::NE,
        Direction::NW,
        Direction::SE,
        Direction::SW,
    ];

    pub fn is_concrete(self) -> bool {
        !matches!(self, Direction::Any | Direction::Inherit)
    }

    /// Image of the label under a left-right mirror.
    pub fn mirrored(self) -> Direction {
        match self {
            Direction::E => Direction::W,
            Direction::W => Direction::E,
            Direction::NE => Direction::NW,
            Direction::NW => Direction::NE,
            Direction::SE => Direction::SW,
            Direction::SW => Direction::SE,
            other => other,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::E => "E",
            Direction::W => "W",
            Direction::N => "N",
            Direction::S => "S",
            Direction::NE => "NE",
            Direction::NW => "NW",
            Direction::SE => "SE",
            Direction::SW => "SW",
            Direction::Any => "ANY",
            Direction::Inherit => "INHERIT",
        })
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Direction::CONCRETE
            .into_iter()
            .chain([Direction::Any, Direction::Inherit])
            .find(|d| d.to_string() == s)
            .ok_or_else(|| Error::ValueParse {
                text: s.to_string(),
                kind: "direction".into(),
            })
    }
}

/// Labels for the connection from an earlier-scanned pixel to a later one,
/// `dx`/`dy` being the later pixel's offset (image rows grow downward).
///
/// Horizontal neighbors give E, vertical ones S, the down-right diagonal SE
/// and the down-left diagonal both NE and SW.
fn pair_labels(dx: isize, dy: isize) -> &'static [Direction] {
    match (dx, dy) {
        (1, 0) => &[Direction::E],
        (0, 1) => &[Direction::S],
        (1, 1) => &[Direction::SE],
        (-1, 1) => &[Direction::NE, Direction::SW],
        _ => unreachable!("not a forward 8-neighbor offset"),
    }
}

/// Offsets of the already-scanned 8-neighbors of a pixel, as seen from them.
const EARLIER: [(isize, isize); 4] = [(-1, 0), (-1, -1), (0, -1), (1, -1)];

pub fn pixel_token(col: usize, row: usize, code: u8) -> Value {
    Value::token(format!("px:{col},{row}:{code:02}"))
}

/// Coordinates and color code of a pixel neuron payload.
pub fn parse_pixel(value: &Value) -> Option<(usize, usize, u8)> {
    let Value::Token(t) = value else { return None };
    let (xy, code) = t.strip_prefix("px:")?.split_once(':')?;
    let (col, row) = xy.split_once(',')?;
    Some((col.parse().ok()?, row.parse().ok()?, code.parse().ok()?))
}

fn labels_of(dirs: &[Direction]) -> BTreeSet<String> {
    label_set(dirs.iter().map(ToString::to_string))
}

/// Transforms a quantized or palette grid into a new shape subnet.
///
/// Cells are scanned row by row from the top left. Every stored cell becomes
/// a neuron, connected to each already-created 8-neighbor with the direction
/// labels of [`pair_labels`]. Background cells are stored only with
/// `keep_background`.
pub fn image_to_subnet(
    mesh: &mut Mesh,
    grid: &PixelGrid,
    name: &str,
    keep_background: bool,
) -> Result<SubnetId> {
    if grid.kind() == PixelKind::Grayscale {
        return Err(Error::NotQuantized);
    }
    let stored = |code: u8| keep_background || code != BACKGROUND;
    if !grid.cells().iter().any(|c| stored(*c)) {
        return Err(Error::EmptyImage);
    }
    let subnet = mesh.create_subnet(name, SubnetRole::Shape)?;
    let (w, h) = (grid.width(), grid.height());
    let mut ids: Vec<Option<NeuronId>> = vec![None; w * h];
    for row in 0..h {
        for col in 0..w {
            let code = grid.get(col, row).expect("in bounds");
            if !stored(code) {
                continue;
            }
            let (n, _) = mesh.insert_value(subnet, pixel_token(col, row, code))?;
            ids[row * w + col] = Some(n);
            for (ox, oy) in EARLIER {
                let (Some(c), Some(r)) = (col.checked_add_signed(ox), row.checked_add_signed(oy))
                else {
                    continue;
                };
                if c >= w {
                    continue;
                }
                if let Some(earlier) = ids[r * w + c] {
                    mesh.connect(
                        &[earlier.into(), n.into()],
                        labels_of(pair_labels(-ox, -oy)),
                        true,
                    )?;
                }
            }
        }
    }
    Ok(subnet)
}

/// Per-color neuron counts and direction-label set of a shape subnet.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Signature {
    pub counts: BTreeMap<u8, usize>,
    pub labels: BTreeSet<Direction>,
}

impl Signature {
    /// The label set used for matching: ANY stands for all 8 directions.
    pub fn effective_labels(&self) -> BTreeSet<Direction> {
        let mut out: BTreeSet<Direction> = self
            .labels
            .iter()
            .copied()
            .filter(|d| d.is_concrete())
            .collect();
        if self.labels.contains(&Direction::Any) {
            out.extend(Direction::CONCRETE);
        }
        out
    }

    /// (label mismatch, count distance) of this entry against a test
    /// signature; lower is closer.
    pub fn score_against(&self, test: &Signature) -> (usize, usize) {
        let mismatch = self
            .effective_labels()
            .symmetric_difference(&test.labels)
            .count();
        let colors: BTreeSet<u8> = self
            .counts
            .keys()
            .chain(test.counts.keys())
            .copied()
            .collect();
        let distance = colors
            .iter()
            .map(|c| {
                self.counts
                    .get(c)
                    .copied()
                    .unwrap_or(0)
                    .abs_diff(test.counts.get(c).copied().unwrap_or(0))
            })
            .sum();
        (mismatch, distance)
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let counts: Vec<String> = self
            .counts
            .iter()
            .map(|(c, n)| format!("{c:02}:{n}"))
            .collect();
        let labels: Vec<String> = self.labels.iter().map(ToString::to_string).collect();
        write!(
            f,
            "counts {{{}}} labels {{{}}}",
            counts.join(", "),
            labels.join(", ")
        )
    }
}

/// Signature of a shape subnet. INHERIT labels take the labels of the
/// subnet's first connection that has any other label; ANY is kept.
pub fn subnet_signature(mesh: &Mesh, shape: SubnetId) -> Result<Signature> {
    let subnet = mesh.subnet(shape)?;
    if subnet.role != SubnetRole::Shape {
        return Err(Error::NotAShapeSubnet(shape));
    }
    let mut sig = Signature::default();
    for n in mesh.members(shape)? {
        if let Some((_, _, code)) = parse_pixel(&n.payload) {
            *sig.counts.entry(code).or_default() += 1;
        }
    }
    let mut internal: Vec<_> = subnet
        .neurons
        .iter()
        .flat_map(|n| mesh.connections_of((*n).into()))
        .filter(|c| {
            c.neuron_endpoints().count() == c.endpoints.len()
                && c.neuron_endpoints().all(|m| subnet.neurons.contains(&m))
        })
        .collect();
    internal.sort_by_key(|c| c.id);
    internal.dedup_by_key(|c| c.id);
    let parsed: Vec<BTreeSet<Direction>> = internal
        .iter()
        .map(|c| c.labels.iter().filter_map(|l| l.parse().ok()).collect())
        .collect();
    let inherited: BTreeSet<Direction> = parsed
        .iter()
        .map(|ls| {
            ls.iter()
                .copied()
                .filter(|d| *d != Direction::Inherit)
                .collect::<BTreeSet<_>>()
        })
        .find(|ls| !ls.is_empty())
        .unwrap_or_default();
    for ls in &parsed {
        for d in ls {
            if *d == Direction::Inherit {
                sig.labels.extend(inherited.iter().copied());
            } else {
                sig.labels.insert(*d);
            }
        }
    }
    Ok(sig)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelEntry {
    pub shape: SubnetId,
    pub label_neuron: NeuronId,
    pub label: String,
    pub signature: Signature,
}

/// Labeled shape subnets grouped under one super subnet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageModel {
    pub super_subnet: SubnetId,
    pub label_subnet: SubnetId,
    pub entries: Vec<ModelEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScoredEntry {
    pub shape: SubnetId,
    pub label: String,
    pub score: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Classification {
    pub label: String,
    pub test_signature: Signature,
    /// Best first.
    pub ranked: Vec<ScoredEntry>,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "test {}", self.test_signature)?;
        for e in &self.ranked {
            writeln!(
                f,
                "entry {} {}: label mismatch {}, count distance {}",
                e.shape, e.label, e.score.0, e.score.1
            )?;
        }
        writeln!(f, "label {}", self.label)
    }
}

impl ImageModel {
    /// The model stored in `mesh`, creating its super and label subnets if
    /// needed.
    pub fn open(mesh: &mut Mesh) -> Result<Self> {
        mesh.ensure_subnet(SUPER_SUBNET, SubnetRole::Super)?;
        mesh.ensure_subnet(LABEL_SUBNET, SubnetRole::Label)?;
        Self::from_mesh(mesh)
    }

    /// Reads the model back from a mesh built by [`ImageModel::open`].
    pub fn from_mesh(mesh: &Mesh) -> Result<Self> {
        let super_subnet = mesh.subnet_named(SUPER_SUBNET)?.id;
        let label_subnet = mesh.subnet_named(LABEL_SUBNET)?.id;
        let label_members = &mesh.subnet(label_subnet)?.neurons;
        let mut entries = Vec::new();
        for child in mesh
            .children_of(super_subnet)
            .filter(|s| s.role == SubnetRole::Shape)
        {
            let label_neuron = mesh
                .connections_of(EndpointRef::Subnet(child.id))
                .filter(|c| c.has_label(LABEL_LINK))
                .flat_map(|c| c.neuron_endpoints())
                .find(|n| label_members.contains(n));
            let Some(label_neuron) = label_neuron else {
                continue;
            };
            entries.push(ModelEntry {
                shape: child.id,
                label_neuron,
                label: mesh.payload(label_neuron)?.to_string(),
                signature: subnet_signature(mesh, child.id)?,
            });
        }
        entries.sort_by_key(|e| e.shape);
        Ok(Self {
            super_subnet,
            label_subnet,
            entries,
        })
    }

    /// Transforms `grid` into a shape subnet and files it under `label`.
    pub fn register(
        &mut self,
        mesh: &mut Mesh,
        grid: &PixelGrid,
        label: &str,
        keep_background: bool,
    ) -> Result<SubnetId> {
        if label.is_empty() {
            return Err(Error::MalformedImage("empty image label".into()));
        }
        let mut k = self.entries.len() + 1;
        let name = loop {
            let candidate = format!("image:{label}:{k}");
            if mesh.subnet_id(&candidate).is_none() {
                break candidate;
            }
            k += 1;
        };
        let shape = image_to_subnet(mesh, grid, &name, keep_background)?;
        self.attach(mesh, shape, label)?;
        Ok(shape)
    }

    /// Files an existing shape subnet (a shape prior, say) under `label`.
    pub fn attach(&mut self, mesh: &mut Mesh, shape: SubnetId, label: &str) -> Result<()> {
        let signature = subnet_signature(mesh, shape)?;
        mesh.set_parent(shape, Some(self.super_subnet))?;
        let (label_neuron, _) = mesh.insert_value(self.label_subnet, Value::category(label))?;
        mesh.connect_once(
            &[label_neuron.into(), EndpointRef::Subnet(shape)],
            label_set([LABEL_LINK]),
            false,
        )?;
        self.entries.retain(|e| e.shape != shape);
        self.entries.push(ModelEntry {
            shape,
            label_neuron,
            label: label.to_string(),
            signature,
        });
        self.entries.sort_by_key(|e| e.shape);
        Ok(())
    }

    /// Ranks the entries against `grid` by (label mismatch, count distance),
    /// then entry subnet id. The grid is transformed in a scratch mesh, so
    /// `mesh` is left untouched.
    pub fn classify(&self, mesh: &Mesh, grid: &PixelGrid) -> Result<Classification> {
        self.classify_with(mesh, grid, false)
    }

    pub fn classify_with(
        &self,
        mesh: &Mesh,
        grid: &PixelGrid,
        keep_background: bool,
    ) -> Result<Classification> {
        if self.entries.is_empty() {
            return Err(Error::EmptyModel);
        }
        let test_signature = transient_signature(mesh, grid, keep_background)?;
        let mut ranked: Vec<ScoredEntry> = self
            .entries
            .iter()
            .map(|e| ScoredEntry {
                shape: e.shape,
                label: e.label.clone(),
                score: e.signature.score_against(&test_signature),
            })
            .collect();
        ranked.sort_by_key(|e| (e.score, e.shape));
        Ok(Classification {
            label: ranked[0].label.clone(),
            test_signature,
            ranked,
        })
    }
}

/// Signature of `grid` as it would be stored, computed off to the side.
pub fn transient_signature(
    mesh: &Mesh,
    grid: &PixelGrid,
    keep_background: bool,
) -> Result<Signature> {
    let mut scratch = Mesh::with_config(mesh.config().clone())?;
    let shape = image_to_subnet(&mut scratch, grid, "transient", keep_background)?;
    subnet_signature(&scratch, shape)
}

fn chain(
    mesh: &mut Mesh,
    name: &str,
    length: usize,
    first: Direction,
    rest: Direction,
) -> Result<SubnetId> {
    let subnet = mesh.ensure_subnet(name, SubnetRole::Shape)?;
    let mut previous: Option<NeuronId> = None;
    for i in 0..length {
        let (n, _) = mesh.insert_value(subnet, pixel_token(0, i, BLACK))?;
        if let Some(p) = previous {
            let d = if i == 1 { first } else { rest };
            mesh.connect_once(&[p.into(), n.into()], labels_of(&[d]), true)?;
        }
        previous = Some(n);
    }
    Ok(subnet)
}

/// Measurement unit prior: a chain of `pixels_per_unit` black pixels joined
/// by ANY, with a token label neuron in the units subnet.
pub fn build_unit_subnet(
    mesh: &mut Mesh,
    unit_name: &str,
    pixels_per_unit: usize,
) -> Result<SubnetId> {
    if pixels_per_unit == 0 {
        return Err(Error::InvalidRange(
            "a unit needs at least one pixel".into(),
        ));
    }
    let subnet = chain(
        mesh,
        &format!("unit:{unit_name}"),
        pixels_per_unit,
        Direction::Any,
        Direction::Any,
    )?;
    let units = mesh.ensure_subnet(UNIT_SUBNET, SubnetRole::Label)?;
    let (label, _) = mesh.insert_value(units, Value::token(unit_name))?;
    mesh.connect_once(
        &[label.into(), EndpointRef::Subnet(subnet)],
        label_set([LABEL_LINK]),
        false,
    )?;
    Ok(subnet)
}

/// Shape prior for a straight line: the first edge may point anywhere, the
/// others keep its direction.
pub fn build_line_prior(mesh: &mut Mesh, name: &str, length: usize) -> Result<SubnetId> {
    if length == 0 {
        return Err(Error::InvalidRange(
            "a line needs at least one pixel".into(),
        ));
    }
    chain(mesh, name, length, Direction::Any, Direction::Inherit)
}

fn extent(mesh: &Mesh, subnet: SubnetId) -> Result<Option<usize>> {
    let pixels: Vec<(usize, usize)> = mesh
        .members(subnet)?
        .filter_map(|n| parse_pixel(&n.payload).map(|(c, r, _)| (c, r)))
        .collect();
    let span = |f: fn(&(usize, usize)) -> usize| {
        let lo = pixels.iter().map(f).min()?;
        let hi = pixels.iter().map(f).max()?;
        Some(hi - lo + 1)
    };
    Ok(span(|p| p.0).zip(span(|p| p.1)).map(|(w, h)| w.max(h)))
}

/// Size of a shape in units: the larger bounding-box side in pixels over the
/// unit's pixel count, to one decimal place.
pub fn measure_extent(mesh: &Mesh, shape: SubnetId, unit: SubnetId) -> Result<Decimal> {
    if mesh.subnet(shape)?.role != SubnetRole::Shape {
        return Err(Error::NotAShapeSubnet(shape));
    }
    let pixels = extent(mesh, shape)?.ok_or(Error::NotAShapeSubnet(shape))?;
    let unit_len = mesh
        .members(unit)?
        .filter(|n| parse_pixel(&n.payload).is_some())
        .count();
    if unit_len == 0 {
        return Err(Error::NotAUnitSubnet(unit));
    }
    let tenths = mesh
        .config()
        .rounding
        .div(10 * pixels as i128, unit_len as i128);
    Ok(Decimal::new(tenths as i64, 1))
}
