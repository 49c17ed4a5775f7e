//! Closed triangulated surfaces and the placement `C = z + eps * B`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{HbemError, Result};
use crate::kernels::KernelConstants;
use crate::linalg::exact_sum;

pub type Point3 = [f64; 3];

pub const MAX_SUBDIVISIONS: u32 = 7;

/// Closure residual `|sum a n|` allowed relative to the total area.
pub const CLOSURE_TOLERANCE: f64 = 1e-10;

/// A flat triangular panel with single-point collocation at its centroid.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub vertices: [Point3; 3],
    pub centroid: Point3,
    /// Outward unit normal.
    pub normal: Point3,
    pub area: f64,
}

impl Panel {
    fn from_vertices(vertices: [Point3; 3]) -> Self {
        let [a, b, c] = vertices;
        let cross = cross(sub(b, a), sub(c, a));
        let twice_area = norm3(cross);
        let normal = if twice_area > 0.0 {
            cross.map(|v| v / twice_area)
        } else {
            [0.0; 3]
        };
        Self {
            vertices,
            centroid: [0, 1, 2].map(|k| (a[k] + b[k] + c[k]) / 3.0),
            normal,
            area: 0.5 * twice_area,
        }
    }

    /// Longest edge length.
    pub fn diameter(&self) -> f64 {
        let [a, b, c] = self.vertices;
        norm3(sub(a, b)).max(norm3(sub(b, c))).max(norm3(sub(c, a)))
    }
}

/// An immutable, validated, outward-oriented closed surface.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMesh {
    vertices: Vec<Point3>,
    faces: Vec<[usize; 3]>,
    panels: Vec<Panel>,
    fingerprint: String,
    enclosed_volume: f64,
}

impl SurfaceMesh {
    /// Validate a triangle soup as a closed, consistently oriented surface.
    ///
    /// A globally inward orientation is flipped; mixed orientation is rejected.
    pub fn from_triangles(vertices: Vec<Point3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if faces.is_empty() {
            return Err(HbemError::InvalidInput("mesh has no faces".into()));
        }
        for (i, f) in faces.iter().enumerate() {
            if f.iter().any(|&v| v >= vertices.len()) {
                return Err(HbemError::InvalidInput(format!(
                    "face {i} references a vertex out of range"
                )));
            }
            if vertices[f[0]]
                .iter()
                .chain(&vertices[f[1]])
                .chain(&vertices[f[2]])
                .any(|c| !c.is_finite())
            {
                return Err(HbemError::InvalidInput(format!("face {i} has non-finite vertices")));
            }
        }
        check_edges(&faces)?;

        let mut mesh = Self::build(vertices, faces)?;
        if mesh.enclosed_volume < 0.0 {
            let flipped = mesh.faces.iter().map(|&[a, b, c]| [a, c, b]).collect();
            mesh = Self::build(mesh.vertices, flipped)?;
        }
        Ok(mesh)
    }

    fn build(vertices: Vec<Point3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let panels: Vec<Panel> = faces
            .iter()
            .map(|f| Panel::from_vertices(f.map(|v| vertices[v])))
            .collect();
        let total_area: f64 = panels.iter().map(|p| p.area).sum();
        for (index, p) in panels.iter().enumerate() {
            if !(p.area > 1e-14 * total_area) {
                return Err(HbemError::ZeroAreaPanel { index });
            }
        }
        let residual = closure_vector(&panels);
        if norm3(residual) > CLOSURE_TOLERANCE * total_area {
            return Err(HbemError::OpenSurface {
                residual: norm3(residual) / total_area,
            });
        }
        let enclosed_volume = panels
            .iter()
            .map(|p| p.area * dot(p.centroid, p.normal))
            .sum::<f64>()
            / 3.0;
        let fingerprint = fingerprint(&vertices, &faces);
        Ok(Self {
            vertices,
            faces,
            panels,
            fingerprint,
            enclosed_volume,
        })
    }

    pub fn panels(&self) -> &[Panel] {
        &self.panels
    }

    pub fn len(&self) -> usize {
        self.panels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.panels.is_empty()
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn enclosed_volume(&self) -> f64 {
        self.enclosed_volume
    }

    pub fn total_area(&self) -> f64 {
        self.panels.iter().map(|p| p.area).sum()
    }

    /// Panel areas, the quadrature weights of every boundary field on this mesh.
    pub fn areas(&self) -> Vec<f64> {
        self.panels.iter().map(|p| p.area).collect()
    }

    /// `sum_j area_j * normal_j`; zero up to rounding for a closed surface.
    pub fn closure_residual(&self) -> Point3 {
        closure_vector(&self.panels)
    }

    /// `sum_f 1/2 (a x b + b x c + c x a)` summed exactly. Each shared edge
    /// contributes `u x v` and `v x u`, which cancel bit for bit, so the result
    /// is exactly zero for every closed, consistently oriented surface.
    pub fn exact_vector_area(&self) -> Point3 {
        [0, 1, 2].map(|k| {
            let terms = self.faces.iter().flat_map(|f| {
                (0..3).map(move |e| (f[e], f[(e + 1) % 3]))
            });
            let terms = terms.map(|(u, v)| cross(self.vertices[u], self.vertices[v])[k]);
            0.5 * exact_sum(terms)
        })
    }

    /// Largest vertex distance from the origin.
    pub fn circumradius(&self) -> f64 {
        self.vertices.iter().map(|v| norm3(*v)).fold(0.0, f64::max)
    }

    pub fn max_vertical(&self) -> f64 {
        self.vertices.iter().map(|v| v[2]).fold(f64::NEG_INFINITY, f64::max)
    }

    /// `v -> offset + scale * v` applied to every vertex; connectivity is kept.
    pub fn similarity(&self, offset: Point3, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(HbemError::InvalidInput(format!("scale must be positive, got {scale}")));
        }
        let vertices = self
            .vertices
            .iter()
            .map(|v| [0, 1, 2].map(|k| offset[k] + scale * v[k]))
            .collect();
        Self::build(vertices, self.faces.clone())
    }

    /// Flat midpoint refinement: every panel is split into four coplanar ones.
    pub fn subdivide(&self, levels: u32) -> Result<Self> {
        if levels > MAX_SUBDIVISIONS {
            return Err(HbemError::SubdivisionBound(levels));
        }
        let mut vertices = self.vertices.clone();
        let mut faces = self.faces.clone();
        for _ in 0..levels {
            faces = split_faces(&mut vertices, &faces, |m| m);
        }
        Self::build(vertices, faces)
    }

    /// Apply a linear map to every vertex. Orientation-reversing maps are flipped back.
    pub fn transform(&self, map: &[[f64; 3]; 3]) -> Result<Self> {
        let vertices = self
            .vertices
            .iter()
            .map(|v| [0, 1, 2].map(|r| dot(map[r], *v)))
            .collect();
        Self::from_triangles(vertices, self.faces.clone())
    }

    pub fn write_off<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "OFF")?;
        writeln!(out, "{} {} 0", self.vertices.len(), self.faces.len())?;
        for v in &self.vertices {
            writeln!(out, "{:?} {:?} {:?}", v[0], v[1], v[2])?;
        }
        for f in &self.faces {
            writeln!(out, "3 {} {} {}", f[0], f[1], f[2])?;
        }
        Ok(())
    }
}

/// Every undirected edge must be shared by exactly two faces traversing it in
/// opposite directions.
fn check_edges(faces: &[[usize; 3]]) -> Result<()> {
    let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * faces.len());
    for f in faces {
        for k in 0..3 {
            let e = (f[k], f[(k + 1) % 3]);
            if e.0 == e.1 {
                return Err(HbemError::InvalidInput(format!(
                    "degenerate face repeats vertex {}",
                    e.0
                )));
            }
            let count = directed.entry(e).or_insert(0);
            *count += 1;
            if *count > 1 {
                return Err(HbemError::InconsistentOrientation(e.0, e.1));
            }
        }
    }
    for &(a, b) in directed.keys() {
        if !directed.contains_key(&(b, a)) {
            return Err(HbemError::OpenSurface { residual: f64::NAN });
        }
    }
    Ok(())
}

fn closure_vector(panels: &[Panel]) -> Point3 {
    let mut s = [0.0; 3];
    for p in panels {
        for k in 0..3 {
            s[k] += p.area * p.normal[k];
        }
    }
    s
}

fn fingerprint(vertices: &[Point3], faces: &[[usize; 3]]) -> String {
    let mut hasher = Sha256::new();
    for v in vertices {
        for c in v {
            hasher.update(c.to_bits().to_le_bytes());
        }
    }
    for f in faces {
        for &i in f {
            hasher.update((i as u64).to_le_bytes());
        }
    }
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(16);
    for b in digest.iter().take(8) {
        let _ = write!(hex, "{b:02x}");
    }
    hex
}

/// Geodesic icosphere with `20 * 4^s` panels, vertices on the sphere of the given radius.
pub fn icosphere(subdivisions: u32, radius: f64) -> Result<SurfaceMesh> {
    if subdivisions > MAX_SUBDIVISIONS {
        return Err(HbemError::SubdivisionBound(subdivisions));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(HbemError::InvalidInput(format!("radius must be positive, got {radius}")));
    }
    let (unit, faces) = unit_icosphere(subdivisions);
    let vertices = unit.into_iter().map(|v| v.map(|c| c * radius)).collect();
    SurfaceMesh::from_triangles(vertices, faces)
}

/// Icosphere with vertices scaled per axis; normals are recomputed from the faces.
pub fn ellipsoid(subdivisions: u32, semi_axes: [f64; 3]) -> Result<SurfaceMesh> {
    if subdivisions > MAX_SUBDIVISIONS {
        return Err(HbemError::SubdivisionBound(subdivisions));
    }
    if semi_axes.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
        return Err(HbemError::InvalidInput(format!(
            "ellipsoid semi-axes must be positive, got {semi_axes:?}"
        )));
    }
    let (unit, faces) = unit_icosphere(subdivisions);
    let vertices = unit
        .into_iter()
        .map(|v| [0, 1, 2].map(|k| v[k] * semi_axes[k]))
        .collect();
    SurfaceMesh::from_triangles(vertices, faces)
}

fn unit_icosphere(subdivisions: u32) -> (Vec<Point3>, Vec<[usize; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Point3> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .into_iter()
    .map(normalize)
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        faces = split_faces(&mut vertices, &faces, normalize);
    }
    (vertices, faces)
}

/// One 1-to-4 midpoint split; `place` positions each new edge midpoint.
fn split_faces(
    vertices: &mut Vec<Point3>,
    faces: &[[usize; 3]],
    place: impl Fn(Point3) -> Point3,
) -> Vec<[usize; 3]> {
    let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
    let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Point3>| -> usize {
        let key = (a.min(b), a.max(b));
        *midpoints.entry(key).or_insert_with(|| {
            vertices.push(place([0, 1, 2].map(|k| 0.5 * (vertices[a][k] + vertices[b][k]))));
            vertices.len() - 1
        })
    };
    let mut next = Vec::with_capacity(4 * faces.len());
    for &[a, b, c] in faces {
        let ab = midpoint(a, b, vertices);
        let bc = midpoint(b, c, vertices);
        let ca = midpoint(c, a, vertices);
        next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
    }
    next
}

/// Parse an ASCII OFF triangle mesh.
pub fn parse_off<R: BufRead>(reader: R) -> Result<SurfaceMesh> {
    let mut lines = reader
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter_map(|(i, l)| match l {
            Ok(text) => {
                let body = text.split('#').next().unwrap_or("").trim().to_string();
                (!body.is_empty()).then_some(Ok((i, body)))
            }
            Err(e) => Some(Err(HbemError::from(e))),
        });
    let mut next_line = |what: &str| -> Result<(usize, String)> {
        lines.next().unwrap_or_else(|| {
            Err(HbemError::Parse {
                line: 0,
                message: format!("unexpected end of file, expected {what}"),
            })
        })
    };

    let (line, header) = next_line("header")?;
    let mut header_tokens = header.split_whitespace();
    if header_tokens.next() != Some("OFF") {
        return Err(HbemError::Parse {
            line,
            message: "missing 'OFF' header".into(),
        });
    }
    // counts may share the header line
    let rest: Vec<&str> = header_tokens.collect();
    let (line, counts) = if rest.is_empty() {
        next_line("counts")?
    } else {
        (line, rest.join(" "))
    };
    let counts: Vec<usize> = parse_tokens(&counts, line)?;
    if counts.len() < 2 {
        return Err(HbemError::Parse {
            line,
            message: "expected 'V F E' counts".into(),
        });
    }
    let (nv, nf) = (counts[0], counts[1]);

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, text) = next_line("vertex")?;
        let c: Vec<f64> = parse_tokens(&text, line)?;
        if c.len() < 3 {
            return Err(HbemError::Parse {
                line,
                message: "vertex needs 3 coordinates".into(),
            });
        }
        vertices.push([c[0], c[1], c[2]]);
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (line, text) = next_line("face")?;
        let idx: Vec<usize> = parse_tokens(&text, line)?;
        match idx.first() {
            Some(3) if idx.len() >= 4 => faces.push([idx[1], idx[2], idx[3]]),
            Some(3) => {
                return Err(HbemError::Parse {
                    line,
                    message: "face lists fewer than 3 indices".into(),
                })
            }
            _ => return Err(HbemError::NonTriangleFace { line }),
        }
    }
    SurfaceMesh::from_triangles(vertices, faces)
}

fn parse_tokens<T: std::str::FromStr>(text: &str, line: usize) -> Result<Vec<T>> {
    text.split_whitespace()
        .map(|t| {
            t.parse::<T>().map_err(|_| HbemError::Parse {
                line,
                message: format!("cannot parse '{t}'"),
            })
        })
        .collect()
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<SurfaceMesh> {
    let file = std::fs::File::open(path.as_ref())?;
    parse_off(std::io::BufReader::new(file))
}

/// A normalized shape `B` placed as `C = z + eps * B` below the plane.
#[derive(Debug, Clone)]
pub struct CavityScene {
    base: SurfaceMesh,
    center: Point3,
    epsilon: f64,
    delta0: f64,
    placed: SurfaceMesh,
}

impl CavityScene {
    pub fn new(base: SurfaceMesh, center: Point3, epsilon: f64, delta0: f64) -> Result<Self> {
        Self::with_constants(base, center, epsilon, delta0, &crate::kernels::LAPLACE_3D)
    }

    pub fn with_constants(
        base: SurfaceMesh,
        center: Point3,
        epsilon: f64,
        delta0: f64,
        constants: &KernelConstants,
    ) -> Result<Self> {
        if constants.dim() != 3 {
            return Err(HbemError::UnsupportedDimension(constants.dim()));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(HbemError::InvalidInput("cavity center must be finite".into()));
        }
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(HbemError::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(delta0 > 0.0) {
            return Err(HbemError::DepthViolation(format!("delta0 must be positive, got {delta0}")));
        }
        if !(center[2] < 0.0) {
            return Err(HbemError::DepthViolation(format!(
                "cavity center must lie below the plane, got z_d = {}",
                center[2]
            )));
        }
        if -center[2] < delta0 {
            return Err(HbemError::DepthViolation(format!(
                "dist(z, plane) = {} is smaller than delta0 = {delta0}",
                -center[2]
            )));
        }
        let placed = place_mesh(&base, center, epsilon)?;
        Ok(Self {
            base,
            center,
            epsilon,
            delta0,
            placed,
        })
    }

    pub fn base(&self) -> &SurfaceMesh {
        &self.base
    }

    pub fn center(&self) -> Point3 {
        self.center
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta0(&self) -> f64 {
        self.delta0
    }

    /// The placed cavity surface `z + eps * dB`.
    pub fn placed(&self) -> &SurfaceMesh {
        &self.placed
    }
}

/// `C = z + eps * B`; the scene already rejected placements reaching the plane.
pub fn place(scene: &CavityScene) -> SurfaceMesh {
    scene.placed.clone()
}

fn place_mesh(base: &SurfaceMesh, center: Point3, epsilon: f64) -> Result<SurfaceMesh> {
    let placed = base.similarity(center, epsilon)?;
    let top = placed.max_vertical();
    if !(top < 0.0) {
        return Err(HbemError::DepthViolation(format!(
            "placed cavity reaches x_d = {top}, it must stay strictly below the plane"
        )));
    }
    Ok(placed)
}

pub(crate) fn sub(a: Point3, b: Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dot(a: Point3, b: Point3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: Point3, b: Point3) -> Point3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn norm3(a: Point3) -> f64 {
    dot(a, a).sqrt()
}

fn normalize(a: Point3) -> Point3 {
    let r = norm3(a);
    a.map(|c| c / r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const TETRA: &str = "OFF\n4 4 0\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n3 0 2 1\n3 0 1 3\n3 0 3 2\n3 1 2 3\n";
    const TETRA_FLIPPED: &str =
        "OFF\n4 4 0\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n3 0 1 2\n3 0 3 1\n3 0 2 3\n3 1 3 2\n";

    fn assert_closed(mesh: &SurfaceMesh) {
        assert_eq!(mesh.exact_vector_area(), [0.0; 3]);
        let r = norm3(mesh.closure_residual());
        assert!(r <= CLOSURE_TOLERANCE * mesh.total_area(), "closure residual {r}");
        for p in mesh.panels() {
            assert!((norm3(p.normal) - 1.0).abs() < 1e-12);
            assert!(p.area > 0.0);
        }
    }

    #[test]
    fn icosahedron_area() {
        let mesh = icosphere(0, 1.0).unwrap();
        assert_eq!(mesh.len(), 20);
        // icosahedron with circumradius 1: edge a = 4 / sqrt(10 + 2 sqrt 5), area 5 sqrt(3) a^2
        let a = 4.0 / (10.0 + 2.0 * 5f64.sqrt()).sqrt();
        let exact = 5.0 * 3f64.sqrt() * a * a;
        assert!((mesh.total_area() - exact).abs() < 1e-12);
        assert!((mesh.total_area() - 9.574).abs() < 1e-3);
        assert_closed(&mesh);
    }

    #[test]
    fn icosphere_refinement() {
        let mesh = icosphere(3, 1.0).unwrap();
        assert_eq!(mesh.len(), 1280);
        assert!((mesh.total_area() / (4.0 * PI) - 1.0).abs() < 5e-3);
        assert!((mesh.enclosed_volume() / (4.0 * PI / 3.0) - 1.0).abs() < 1e-2);
        for v in mesh.vertices() {
            assert!((norm3(*v) - 1.0).abs() < 1e-14);
        }
        assert_closed(&mesh);

        let mut last = (0.0, 0.0);
        for s in 0..=4 {
            let m = icosphere(s, 2.0).unwrap();
            assert_eq!(m.len(), 20 * 4usize.pow(s));
            assert!(m.total_area() > last.0 && m.total_area() < 16.0 * PI);
            assert!(m.enclosed_volume() > last.1 && m.enclosed_volume() < 32.0 * PI / 3.0);
            last = (m.total_area(), m.enclosed_volume());
        }
        assert_eq!(icosphere(8, 1.0), Err(HbemError::SubdivisionBound(8)));
        assert!(icosphere(1, 0.0).is_err());
    }

    #[test]
    fn ellipsoid_examples() {
        let e = ellipsoid(2, [1.0, 1.0, 1.0]).unwrap();
        assert_eq!(e, icosphere(2, 1.0).unwrap());
        let e = ellipsoid(3, [1.0, 1.0, 2.0]).unwrap();
        assert!((e.enclosed_volume() / (8.0 * PI / 3.0) - 1.0).abs() < 1e-2);
        assert_closed(&e);
        assert!(ellipsoid(2, [1.0, 0.0, 1.0]).is_err());
        assert!(ellipsoid(2, [1.0, -2.0, 1.0]).is_err());
    }

    #[test]
    fn off_tetrahedron() {
        let mesh = parse_off(TETRA.as_bytes()).unwrap();
        assert_eq!(mesh.len(), 4);
        assert!((mesh.enclosed_volume() - 1.0 / 6.0).abs() < 1e-15);
        assert_closed(&mesh);

        let flipped = parse_off(TETRA_FLIPPED.as_bytes()).unwrap();
        assert!((flipped.enclosed_volume() - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(flipped.panels(), mesh.panels());
    }

    #[test]
    fn flat_subdivision_keeps_the_solid() {
        let mesh = parse_off(TETRA.as_bytes()).unwrap();
        let fine = mesh.subdivide(3).unwrap();
        assert_eq!(fine.len(), 4 * 64);
        assert!((fine.enclosed_volume() - 1.0 / 6.0).abs() < 1e-14);
        assert!((fine.total_area() - mesh.total_area()).abs() < 1e-13);
        assert_closed(&fine);
        assert!(matches!(mesh.subdivide(8), Err(HbemError::SubdivisionBound(8))));
    }

    #[test]
    fn off_errors() {
        let quad = "OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n";
        let err = parse_off(quad.as_bytes()).unwrap_err();
        assert_eq!(err, HbemError::NonTriangleFace { line: 7 });
        assert!(err.to_string().contains("non-triangle face"));

        let open = "OFF\n4 3 0\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n3 0 2 1\n3 0 1 3\n3 0 3 2\n";
        assert!(matches!(parse_off(open.as_bytes()), Err(HbemError::OpenSurface { .. })));

        let mixed = "OFF\n4 4 0\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n3 0 1 2\n3 0 1 3\n3 0 3 2\n3 1 2 3\n";
        assert!(matches!(
            parse_off(mixed.as_bytes()),
            Err(HbemError::InconsistentOrientation(..))
        ));

        let garbage = "OFF\n4 4 0\n0 0 x\n";
        assert!(matches!(parse_off(garbage.as_bytes()), Err(HbemError::Parse { line: 3, .. })));
        assert!(matches!(parse_off("PLY\n".as_bytes()), Err(HbemError::Parse { .. })));

        // coplanar vertices give a zero-area panel
        let flat = "OFF\n4 4 0\n0 0 0\n1 0 0\n0 1 0\n2 0 0\n3 0 2 1\n3 0 1 3\n3 0 3 2\n3 1 2 3\n";
        assert!(matches!(parse_off(flat.as_bytes()), Err(HbemError::ZeroAreaPanel { .. })));
    }

    #[test]
    fn off_round_trip_and_comments() {
        let mesh = icosphere(1, 1.5).unwrap();
        let mut buf = Vec::new();
        mesh.write_off(&mut buf).unwrap();
        assert_eq!(parse_off(buf.as_slice()).unwrap(), mesh);

        let commented = "# a tetrahedron\nOFF 4 4 0\n0 0 0 # origin\n1 0 0\n\n0 1 0\n0 0 1\n3 0 2 1\n3 0 1 3\n3 0 3 2\n3 1 2 3\n";
        assert_eq!(parse_off(commented.as_bytes()).unwrap().len(), 4);
    }

    #[test]
    fn load_mesh_from_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tet.off");
        std::fs::write(&path, TETRA).unwrap();
        assert_eq!(load_mesh(&path).unwrap().len(), 4);
        assert!(matches!(load_mesh(dir.path().join("missing.off")), Err(HbemError::Io(_))));
    }

    #[test]
    fn placement() {
        let base = icosphere(2, 1.0).unwrap();
        let scene = CavityScene::new(base.clone(), [0.0, 0.0, -2.0], 0.5, 1.0).unwrap();
        let placed = place(&scene);
        assert_eq!(placed.len(), base.len());
        for p in placed.panels() {
            assert!(norm3(sub(p.centroid, [0.0, 0.0, -2.0])) <= 0.5 + 1e-15);
        }
        assert!((placed.total_area() - 0.25 * base.total_area()).abs() < 1e-13);
        assert!((placed.enclosed_volume() - 0.125 * base.enclosed_volume()).abs() < 1e-13);
        for (a, b) in placed.panels().iter().zip(base.panels()) {
            assert!((0..3).all(|k| (a.normal[k] - b.normal[k]).abs() < 1e-13));
        }
        assert_closed(&placed);
        assert_ne!(placed.fingerprint(), base.fingerprint());

        assert!(matches!(
            CavityScene::new(base.clone(), [0.0, 0.0, 0.0], 1.0, 0.5),
            Err(HbemError::DepthViolation(_))
        ));
        assert!(matches!(
            CavityScene::new(base.clone(), [0.0, 0.0, -1.0], 1.5, 0.5),
            Err(HbemError::DepthViolation(_))
        ));
        assert!(matches!(
            CavityScene::new(base.clone(), [0.0, 0.0, -1.0], 0.5, 2.0),
            Err(HbemError::DepthViolation(_))
        ));
        assert!(CavityScene::new(base.clone(), [0.0, 0.0, -1.0], 0.0, 0.5).is_err());
        let k4 = KernelConstants::new(4).unwrap();
        assert_eq!(
            CavityScene::with_constants(base, [0.0, 0.0, -2.0], 0.5, 1.0, &k4).unwrap_err(),
            HbemError::UnsupportedDimension(4)
        );
    }

    #[test]
    fn transform_keeps_orientation() {
        let e = ellipsoid(2, [1.0, 1.0, 2.0]).unwrap();
        let mirror = [[-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let m = e.transform(&mirror).unwrap();
        assert!((m.enclosed_volume() - e.enclosed_volume()).abs() < 1e-12);
        let rot = [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]];
        let r = e.transform(&rot).unwrap();
        assert_eq!(r.faces(), e.faces());
    }
}
