//! Persistence diagrams: data model, file I/O, normalization into the unit
//! square and synthetic generation for domain-oblivious training.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A (birth, death) pair. Always satisfies `death > birth` with both finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PersistencePoint {
    pub birth: f64,
    pub death: f64,
}

impl PersistencePoint {
    /// Returns `None` unless both values are finite and `death > birth`.
    pub fn new(birth: f64, death: f64) -> Option<Self> {
        (birth.is_finite() && death.is_finite() && death > birth).then_some(Self { birth, death })
    }

    #[inline]
    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }
}

/// A multiset of persistence points with an optional opaque class tag.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PersistenceDiagram {
    pub points: Vec<PersistencePoint>,
    pub label: Option<String>,
}

impl PersistenceDiagram {
    pub fn new(points: Vec<PersistencePoint>) -> Self {
        Self {
            points,
            label: None,
        }
    }

    /// Builds a diagram from raw pairs, panicking on an invalid point.
    /// Intended for literals in tests and examples.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Self {
        let points = pairs
            .iter()
            .map(|&(b, d)| {
                PersistencePoint::new(b, d).unwrap_or_else(|| panic!("invalid point ({b}, {d})"))
            })
            .collect();
        Self::new(points)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Smallest and largest coordinate over births and deaths.
    pub fn coordinate_range(&self) -> Option<(f64, f64)> {
        self.points.iter().fold(None, |acc, p| {
            let (lo, hi) = acc.unwrap_or((p.birth, p.death));
            Some((lo.min(p.birth), hi.max(p.death)))
        })
    }
}

/// The square `[min_value, max_value]²` a dataset is normalized from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min_value: f64,
    pub max_value: f64,
}

impl BoundingBox {
    pub fn new(min_value: f64, max_value: f64) -> Result<Self> {
        if !(min_value.is_finite() && max_value.is_finite()) || max_value <= min_value {
            return Err(Error::DegenerateRange(format!(
                "bounding box requires max > min, got ({min_value}, {max_value})"
            )));
        }
        Ok(Self {
            min_value,
            max_value,
        })
    }

    pub fn unit() -> Self {
        Self {
            min_value: 0.0,
            max_value: 1.0,
        }
    }

    #[inline]
    pub fn map(&self, x: f64) -> f64 {
        (x - self.min_value) / (self.max_value - self.min_value)
    }

    /// Maps a diagram into the unit square. Coordinates that land outside
    /// `[0, 1]` are clamped; the flag reports whether that happened.
    pub fn normalize_diagram(&self, diagram: &PersistenceDiagram) -> (PersistenceDiagram, bool) {
        let mut clamped = false;
        let mut clamp = |v: f64| {
            if (0.0..=1.0).contains(&v) {
                v
            } else {
                clamped = true;
                v.clamp(0.0, 1.0)
            }
        };
        let points = diagram
            .points
            .iter()
            .map(|p| PersistencePoint {
                birth: clamp(self.map(p.birth)),
                death: clamp(self.map(p.death)),
            })
            .collect();
        (
            PersistenceDiagram {
                points,
                label: diagram.label.clone(),
            },
            clamped,
        )
    }
}

/// The input collection of diagrams.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiagramSet {
    pub diagrams: Vec<PersistenceDiagram>,
    pub bounding_box: Option<BoundingBox>,
}

impl DiagramSet {
    pub fn new(diagrams: Vec<PersistenceDiagram>) -> Self {
        Self {
            diagrams,
            bounding_box: None,
        }
    }

    pub fn len(&self) -> usize {
        self.diagrams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diagrams.is_empty()
    }

    pub fn total_points(&self) -> usize {
        self.diagrams.iter().map(PersistenceDiagram::len).sum()
    }

    pub fn mean_points(&self) -> f64 {
        if self.diagrams.is_empty() {
            0.0
        } else {
            self.total_points() as f64 / self.diagrams.len() as f64
        }
    }

    pub fn labels(&self) -> Vec<Option<String>> {
        self.diagrams.iter().map(|d| d.label.clone()).collect()
    }
}

/// Maps every coordinate by the global min/max of the set, shared by both
/// axes so the diagonal stays the diagonal.
pub fn normalize(set: &DiagramSet) -> Result<(DiagramSet, BoundingBox)> {
    let range = set
        .diagrams
        .iter()
        .filter_map(PersistenceDiagram::coordinate_range)
        .reduce(|(a, b), (c, d)| (a.min(c), b.max(d)));
    let Some((lo, hi)) = range else {
        return Err(Error::DegenerateRange(
            "diagram set contains no points".into(),
        ));
    };
    let bbox = BoundingBox::new(lo, hi)?;
    let diagrams = set
        .diagrams
        .iter()
        .map(|d| bbox.normalize_diagram(d).0)
        .collect();
    Ok((
        DiagramSet {
            diagrams,
            bounding_box: Some(bbox),
        },
        bbox,
    ))
}

/// Draws `n_points` points uniformly from the triangle above the diagonal
/// of the unit square, resampling both coordinates whenever `death <= birth`.
pub fn generate_synthetic_diagram<R: Rng + ?Sized>(n_points: usize, rng: &mut R) -> PersistenceDiagram {
    let mut points = Vec::with_capacity(n_points);
    while points.len() < n_points {
        let birth: f64 = rng.gen();
        let death: f64 = rng.gen();
        if let Some(p) = PersistencePoint::new(birth, death) {
            points.push(p);
        }
    }
    PersistenceDiagram::new(points)
}

/// Default training-set size for the synthetic models.
pub const DEFAULT_TRAINING_COUNT: usize = 4000;

pub fn generate_training_set<R: Rng + ?Sized>(
    count: usize,
    points_per_diagram: usize,
    rng: &mut R,
) -> DiagramSet {
    let diagrams = (0..count)
        .map(|_| generate_synthetic_diagram(points_per_diagram, rng))
        .collect();
    DiagramSet::new(diagrams)
}

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagramFormat {
    Csv,
    Json,
}

impl DiagramFormat {
    /// Guesses from the file extension; anything but `.json` is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => DiagramFormat::Json,
            _ => DiagramFormat::Csv,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct DiagramJson {
    points: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

pub fn load_diagram(path: &Path, format: DiagramFormat) -> Result<PersistenceDiagram> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match format {
        DiagramFormat::Csv => parse_csv(&text, path),
        DiagramFormat::Json => parse_json(&text, path),
    }
}

/// Parses `birth,death` lines. Blank lines are skipped.
pub fn parse_csv(text: &str, path: &Path) -> Result<PersistenceDiagram> {
    let mut points = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        let format_err = |message: String| Error::Format {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut fields = trimmed.split(',');
        let (Some(b), Some(d), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(format_err(format!("expected `birth,death`, got `{trimmed}`")));
        };
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| format_err(format!("`{}`: {e}", s.trim())))
        };
        let (birth, death) = (parse(b)?, parse(d)?);
        points.push(PersistencePoint::new(birth, death).ok_or(Error::InvalidPoint {
            path: path.to_path_buf(),
            line,
            birth,
            death,
        })?);
    }
    Ok(PersistenceDiagram::new(points))
}

pub fn parse_json(text: &str, path: &Path) -> Result<PersistenceDiagram> {
    let parsed: DiagramJson = serde_json::from_str(text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    let mut points = Vec::with_capacity(parsed.points.len());
    for (idx, [birth, death]) in parsed.points.into_iter().enumerate() {
        points.push(PersistencePoint::new(birth, death).ok_or(Error::InvalidPoint {
            path: path.to_path_buf(),
            line: idx + 1,
            birth,
            death,
        })?);
    }
    Ok(PersistenceDiagram {
        points,
        label: parsed.label,
    })
}

pub fn diagram_to_csv(diagram: &PersistenceDiagram) -> String {
    let mut out = String::with_capacity(diagram.len() * 24);
    for p in &diagram.points {
        out.push_str(&format!("{},{}\n", p.birth, p.death));
    }
    out
}

pub fn save_diagram(diagram: &PersistenceDiagram, path: &Path, format: DiagramFormat) -> Result<()> {
    let body = match format {
        DiagramFormat::Csv => diagram_to_csv(diagram),
        DiagramFormat::Json => {
            let json = DiagramJson {
                points: diagram.points.iter().map(|p| [p.birth, p.death]).collect(),
                label: diagram.label.clone(),
            };
            serde_json::to_string(&json).map_err(|source| Error::Json {
                path: path.to_path_buf(),
                source,
            })?
        }
    };
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

/// One entry of a dataset manifest. Relative paths resolve against the
/// manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: PathBuf,
    #[serde(default)]
    pub label: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub diagrams: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Loads every diagram listed in a manifest. Manifest labels override any
/// label stored inside a JSON diagram file.
pub fn load_manifest(path: &Path) -> Result<DiagramSet> {
    let manifest = Manifest::read(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut diagrams = Vec::with_capacity(manifest.diagrams.len());
    for entry in manifest.diagrams {
        let file = if entry.path.is_absolute() {
            entry.path.clone()
        } else {
            base.join(&entry.path)
        };
        let mut diagram = load_diagram(&file, DiagramFormat::from_path(&file))?;
        if entry.label.is_some() {
            diagram.label = entry.label;
        }
        diagrams.push(diagram);
    }
    Ok(DiagramSet::new(diagrams))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn csv(text: &str) -> Result<PersistenceDiagram> {
        parse_csv(text, Path::new("test.csv"))
    }

    #[test]
    fn csv_two_points() {
        let d = csv("0.1,0.5\n0.2,0.3").unwrap();
        assert_eq!(d.points.len(), 2);
        assert_eq!(d.points[0], PersistencePoint { birth: 0.1, death: 0.5 });
        assert_eq!(d.points[1], PersistencePoint { birth: 0.2, death: 0.3 });
    }

    #[test]
    fn csv_empty() {
        assert!(csv("").unwrap().is_empty());
    }

    #[test]
    fn csv_rejects_point_below_diagonal() {
        match csv("0.5,0.1") {
            Err(Error::InvalidPoint { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn csv_rejects_infinite_death_and_reports_line() {
        match csv("0.1,0.2\n0.0,inf\n") {
            Err(Error::InvalidPoint { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected validation error, got {other:?}"),
        }
        match csv("0.1,0.2\n\n0.3;0.4\n") {
            Err(Error::Format { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn json_round_trip_keeps_label() {
        let d = parse_json(r#"{"points": [[0.0, 1.0], [0.25, 0.5]], "label": "camel"}"#, Path::new("x.json")).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.label.as_deref(), Some("camel"));
        assert!(parse_json(r#"{"points": [[1.0, 0.0]]}"#, Path::new("x.json")).is_err());
    }

    #[test]
    fn normalize_single_diagram() {
        let set = DiagramSet::new(vec![PersistenceDiagram::from_pairs(&[(0.0, 10.0)])]);
        let (out, bbox) = normalize(&set).unwrap();
        assert_eq!(bbox, BoundingBox { min_value: 0.0, max_value: 10.0 });
        assert_eq!(out.diagrams[0].points[0], PersistencePoint { birth: 0.0, death: 1.0 });
    }

    #[test]
    fn normalize_two_diagrams() {
        let set = DiagramSet::new(vec![
            PersistenceDiagram::from_pairs(&[(0.0, 4.0)]),
            PersistenceDiagram::from_pairs(&[(2.0, 8.0)]),
        ]);
        let (out, bbox) = normalize(&set).unwrap();
        assert_eq!(bbox, BoundingBox { min_value: 0.0, max_value: 8.0 });
        assert_eq!(out.diagrams[0].points[0], PersistencePoint { birth: 0.0, death: 0.5 });
        assert_eq!(out.diagrams[1].points[0], PersistencePoint { birth: 0.25, death: 1.0 });
    }

    #[test]
    fn normalize_identity_on_unit_data() {
        let set = DiagramSet::new(vec![PersistenceDiagram::from_pairs(&[(0.0, 0.3), (0.2, 1.0)])]);
        let (out, bbox) = normalize(&set).unwrap();
        assert_eq!(bbox, BoundingBox::unit());
        assert_eq!(out.diagrams[0].points, set.diagrams[0].points);
    }

    #[test]
    fn normalize_rejects_empty_set() {
        let set = DiagramSet::new(vec![PersistenceDiagram::default()]);
        assert!(matches!(normalize(&set), Err(Error::DegenerateRange(_))));
    }

    #[test]
    fn synthetic_is_deterministic_and_valid() {
        let a = generate_synthetic_diagram(20, &mut ChaCha8Rng::seed_from_u64(7));
        let b = generate_synthetic_diagram(20, &mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!(a, b);
        assert_eq!(a.len(), 20);
        assert!(a.points.iter().all(|p| p.death > p.birth && p.birth >= 0.0 && p.death < 1.0));
    }

    #[test]
    fn synthetic_moments_match_triangle() {
        // Uniform on {0 <= b < d <= 1}: E[b] = 1/3, E[d] = 2/3 and
        // P(d - b > 1/2) = area ratio of the corner triangle = 1/4.
        let d = generate_synthetic_diagram(10_000, &mut ChaCha8Rng::seed_from_u64(11));
        let n = d.len() as f64;
        let mean_b = d.points.iter().map(|p| p.birth).sum::<f64>() / n;
        let mean_d = d.points.iter().map(|p| p.death).sum::<f64>() / n;
        let long = d.points.iter().filter(|p| p.persistence() > 0.5).count() as f64 / n;
        assert!((mean_b - 1.0 / 3.0).abs() < 0.02, "{mean_b}");
        assert!((mean_d - 2.0 / 3.0).abs() < 0.02, "{mean_d}");
        assert!((long - 0.25).abs() < 0.02, "{long}");
    }

    #[test]
    fn training_set_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let single = generate_training_set(1, 1, &mut rng);
        assert_eq!(single.len(), 1);
        assert_eq!(single.diagrams[0].len(), 1);
        let a = generate_training_set(10, 20, &mut ChaCha8Rng::seed_from_u64(5));
        let b = generate_training_set(10, 20, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a, b);
        assert!(a.diagrams.iter().all(|d| d.len() == 20));
    }

    #[test]
    fn manifest_loading_resolves_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        save_diagram(&PersistenceDiagram::from_pairs(&[(0.0, 1.0)]), &dir.path().join("a.csv"), DiagramFormat::Csv).unwrap();
        save_diagram(
            &PersistenceDiagram::from_pairs(&[(0.1, 0.2), (0.3, 0.9)]).with_label("inner"),
            &dir.path().join("b.json"),
            DiagramFormat::Json,
        )
        .unwrap();
        let manifest = Manifest {
            diagrams: vec![
                ManifestEntry { path: "a.csv".into(), label: Some("x".into()) },
                ManifestEntry { path: "b.json".into(), label: None },
            ],
        };
        let mpath = dir.path().join("manifest.json");
        manifest.write(&mpath).unwrap();
        let set = load_manifest(&mpath).unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set.diagrams[0].label.as_deref(), Some("x"));
        assert_eq!(set.diagrams[1].label.as_deref(), Some("inner"));
        assert_eq!(set.diagrams[1].len(), 2);
    }
}
