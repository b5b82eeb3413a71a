//! An analysis session: validated inputs, cached trees, and the current
//! selection. Every method is a pure function of the session state and its
//! arguments; the HTTP service is a thin wrapper around this type.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::crossing::{CrossingStatistic, GroupSelection};
use crate::data::{Dataset, SessionInputs};
use crate::error::{Error, Result};
use crate::extras::{heatmap_spec, meta_summary, HeatmapSpec, MetaSummary};
use crate::kde::{kde2d, DensitySurface, DEFAULT_RESOLUTION};
use crate::linalg::global_pca;
use crate::mst::{build_mst, medoid_of, medoids, simplified_medoid_tree, MedoidSet};
use crate::mst_test::{mst_test_detailed, TestConfig, TestResult, DEFAULT_REPLICATES, DEFAULT_VARIANCE_THRESHOLD};
use crate::projection::{pca_rcca_project, PathMatrix, ProjectionConfig, ProjectionResult};
use crate::tree::WeightedTree;

/// An edge of the overlay drawn on the embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayEdge {
    pub from: String,
    pub to: String,
    pub weight: f64,
    pub from_xy: [f64; 2],
    pub to_xy: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedoidInfo {
    pub label: String,
    pub id: String,
    pub xy: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionOverview {
    pub ids: Vec<String>,
    pub embedding: Vec<[f64; 2]>,
    pub labels: Vec<String>,
    pub medoids: Vec<MedoidInfo>,
    pub overlay: Vec<OverlayEdge>,
    pub n_features: usize,
    pub variance_retained: Option<f64>,
    pub has_meta: bool,
}

/// The current pair of groups and the tree path joining them, as shown to
/// the client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionView {
    pub group1: Vec<String>,
    pub group2: Vec<String>,
    /// Class names when the groups came from endpoint classes.
    pub labels: Option<[String; 2]>,
    pub path: Vec<String>,
    pub path_xy: Vec<[f64; 2]>,
}

/// Client-side group specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GroupsRequest {
    /// One polygon per group, in embedding coordinates.
    Lasso { group1: Vec<[f64; 2]>, group2: Vec<[f64; 2]> },
    Ids { group1: Vec<String>, group2: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionView {
    /// Ids of the points of interest, aligned with `result.coords`.
    pub points: Vec<String>,
    pub result: ProjectionResult,
    /// MST edges with both endpoints among the points of interest, as index
    /// pairs into `points`.
    pub mst_edges: Vec<[usize; 2]>,
    pub density: Option<DensitySurface>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestView {
    pub result: TestResult,
    pub crossing: CrossingStatistic,
}

/// Point-in-polygon by the even-odd rule. The polygon is implicitly closed.
pub fn point_in_polygon(pt: [f64; 2], poly: &[[f64; 2]]) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a[1] > pt[1]) != (b[1] > pt[1]) {
            let x = a[0] + (pt[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if pt[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn check_polygon(poly: &[[f64; 2]]) -> Result<()> {
    if poly.len() < 3 {
        return Err(Error::InvalidSelection(format!(
            "a lasso polygon needs at least 3 vertices, got {}",
            poly.len()
        )));
    }
    if poly.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidSelection("lasso vertices must be finite".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionSnapshot {
    pub inputs: SessionInputs,
    pub pca_dims: Option<usize>,
    pub selection: Option<GroupSelection>,
    pub class_labels: Option<[String; 2]>,
    pub projection: Option<ProjectionConfig>,
}

#[derive(Debug, Clone)]
pub struct Session {
    inputs: SessionInputs,
    /// The data the tree is built on: the input, or its leading principal
    /// components when `pca_dims` is set.
    working: Dataset,
    pca_dims: Option<usize>,
    variance_retained: Option<f64>,
    mst: WeightedTree,
    medoids: MedoidSet,
    medoid_tree: WeightedTree,
    selection: Option<GroupSelection>,
    class_labels: Option<[String; 2]>,
    projection: Option<ProjectionConfig>,
}

impl Session {
    /// Builds the MST, medoids and simplified medoid subtree. With
    /// `pca_dims`, everything downstream runs on that many leading principal
    /// components of the data.
    pub fn new(inputs: SessionInputs, pca_dims: Option<usize>) -> Result<Self> {
        let (working, variance_retained) = match pca_dims {
            Some(d) => {
                let (w, v) = global_pca(&inputs.dataset, d)?;
                (w, Some(v))
            }
            None => (inputs.dataset.clone(), None),
        };
        let mst = build_mst(&working)?;
        let medoids = medoids(&working, &inputs.clustering)?;
        let medoid_tree = simplified_medoid_tree(&mst, &medoids)?;
        Ok(Self {
            inputs,
            working,
            pca_dims,
            variance_retained,
            mst,
            medoids,
            medoid_tree,
            selection: None,
            class_labels: None,
            projection: None,
        })
    }

    pub fn inputs(&self) -> &SessionInputs {
        &self.inputs
    }

    pub fn working_data(&self) -> &Dataset {
        &self.working
    }

    pub fn mst(&self) -> &WeightedTree {
        &self.mst
    }

    pub fn medoids(&self) -> &MedoidSet {
        &self.medoids
    }

    pub fn medoid_tree(&self) -> &WeightedTree {
        &self.medoid_tree
    }

    pub fn selection(&self) -> Option<&GroupSelection> {
        self.selection.as_ref()
    }

    pub fn projection_config(&self) -> Option<&ProjectionConfig> {
        self.projection.as_ref()
    }

    fn ids(&self) -> &[String] {
        self.working.ids()
    }

    fn xy(&self, row: usize) -> [f64; 2] {
        self.inputs.embedding.coords()[row]
    }

    fn row_of(&self, id: &str) -> Result<usize> {
        self.working
            .index_of(id)
            .ok_or_else(|| Error::UnknownRow(id.to_string()))
    }

    pub fn overview(&self) -> SessionOverview {
        let ids = self.ids();
        SessionOverview {
            ids: ids.to_vec(),
            embedding: self.inputs.embedding.coords().to_vec(),
            labels: self.inputs.clustering.labels().to_vec(),
            medoids: self
                .medoids
                .iter()
                .map(|(label, row)| MedoidInfo {
                    label: label.to_string(),
                    id: ids[row].clone(),
                    xy: self.xy(row),
                })
                .collect(),
            overlay: self
                .medoid_tree
                .edges()
                .into_iter()
                .map(|e| OverlayEdge {
                    from: ids[e.u].clone(),
                    to: ids[e.v].clone(),
                    weight: e.weight,
                    from_xy: self.xy(e.u),
                    to_xy: self.xy(e.v),
                })
                .collect(),
            n_features: self.working.n_features(),
            variance_retained: self.variance_retained,
            has_meta: self.inputs.meta.is_some(),
        }
    }

    fn view(&self) -> Result<SelectionView> {
        let sel = self.require_selection()?;
        let ids = self.ids();
        let names = |s: &BTreeSet<usize>| s.iter().map(|&r| ids[r].clone()).collect();
        Ok(SelectionView {
            group1: names(sel.group1()),
            group2: names(sel.group2()),
            labels: self.class_labels.clone(),
            path: sel.path().iter().map(|&r| ids[r].clone()).collect(),
            path_xy: sel.path().iter().map(|&r| self.xy(r)).collect(),
        })
    }

    fn require_selection(&self) -> Result<&GroupSelection> {
        self.selection
            .as_ref()
            .ok_or_else(|| Error::InvalidSelection("no groups have been selected yet".into()))
    }

    /// Groups are the classes of the two endpoints; the path is the MST path
    /// between the endpoints themselves.
    pub fn select_path(&mut self, a: &str, b: &str) -> Result<SelectionView> {
        let (ra, rb) = (self.row_of(a)?, self.row_of(b)?);
        if ra == rb {
            return Err(Error::InvalidSelection("path endpoints must differ".into()));
        }
        let clustering = &self.inputs.clustering;
        let (la, lb) = (clustering.label(ra).to_string(), clustering.label(rb).to_string());
        if la == lb {
            return Err(Error::InvalidSelection(format!(
                "both endpoints belong to class {la:?}; the groups would overlap"
            )));
        }
        let g1 = clustering.members(&la)?.into_iter().collect();
        let g2 = clustering.members(&lb)?.into_iter().collect();
        let sel = GroupSelection::new(&self.mst, g1, g2, ra, rb)?;
        self.selection = Some(sel);
        self.class_labels = Some([la, lb]);
        self.view()
    }

    /// Custom groups from lasso polygons or explicit ids; the path joins the
    /// two group medoids.
    pub fn select_groups(&mut self, req: &GroupsRequest) -> Result<SelectionView> {
        let (g1, g2): (BTreeSet<usize>, BTreeSet<usize>) = match req {
            GroupsRequest::Lasso { group1, group2 } => {
                check_polygon(group1)?;
                check_polygon(group2)?;
                let pick = |poly: &[[f64; 2]]| {
                    (0..self.working.n_rows())
                        .filter(|&r| point_in_polygon(self.xy(r), poly))
                        .collect()
                };
                (pick(group1), pick(group2))
            }
            GroupsRequest::Ids { group1, group2 } => {
                let rows = |ids: &[String]| ids.iter().map(|id| self.row_of(id)).collect::<Result<_>>();
                (rows(group1)?, rows(group2)?)
            }
        };
        if g1.is_empty() || g2.is_empty() {
            return Err(Error::InvalidSelection("each group must contain at least one point".into()));
        }
        if let Some(r) = g1.intersection(&g2).next() {
            return Err(Error::InvalidSelection(format!(
                "groups overlap at {:?}",
                self.ids()[*r]
            )));
        }
        let m1 = medoid_of(&self.working, &g1.iter().copied().collect::<Vec<_>>())?;
        let m2 = medoid_of(&self.working, &g2.iter().copied().collect::<Vec<_>>())?;
        let sel = GroupSelection::new(&self.mst, g1, g2, m1, m2)?;
        self.selection = Some(sel);
        self.class_labels = None;
        self.view()
    }

    pub fn project(&mut self, config: &ProjectionConfig) -> Result<ProjectionView> {
        let sel = self.require_selection()?;
        let points = sel.points_of_interest();
        let x = self.working.rows_matrix(&points);
        let path = PathMatrix::from_rows(&self.working, sel.path())?;
        let result = pca_rcca_project(&x, &path, config)?;
        let position: std::collections::BTreeMap<usize, usize> =
            points.iter().enumerate().map(|(i, &r)| (r, i)).collect();
        let mst_edges = self
            .mst
            .edges()
            .into_iter()
            .filter_map(|e| Some([*position.get(&e.u)?, *position.get(&e.v)?]))
            .collect();
        let density = config
            .bandwidth
            .map(|h| kde2d(&result.coords, h, DEFAULT_RESOLUTION))
            .transpose()?;
        let ids = self.ids();
        let view = ProjectionView {
            points: points.iter().map(|&r| ids[r].clone()).collect(),
            result,
            mst_edges,
            density,
        };
        self.projection = Some(config.clone());
        Ok(view)
    }

    /// Runs the MST test on the current selection. Without a seed one is
    /// drawn; it is echoed in the result either way.
    pub fn run_test(&self, replicates: Option<usize>, seed: Option<u64>) -> Result<TestView> {
        let sel = self.require_selection()?;
        let config = TestConfig {
            replicates: replicates.unwrap_or(DEFAULT_REPLICATES),
            variance_threshold: DEFAULT_VARIANCE_THRESHOLD,
            seed: seed.unwrap_or_else(rand::random),
        };
        let d = mst_test_detailed(&self.working, &self.mst, sel, &config)?;
        Ok(TestView {
            result: d.result,
            crossing: d.crossing,
        })
    }

    /// Heatmap over the original (not PCA-reduced) features.
    pub fn heatmap(&self, rows: Option<&[String]>, features: Option<&[String]>) -> Result<HeatmapSpec> {
        let sel = self.require_selection()?;
        let data = &self.inputs.dataset;
        let rows = rows
            .map(|ids| ids.iter().map(|id| self.row_of(id)).collect::<Result<Vec<_>>>())
            .transpose()?;
        let features = features
            .map(|names| {
                names
                    .iter()
                    .map(|f| {
                        data.features()
                            .iter()
                            .position(|g| g == f)
                            .ok_or_else(|| Error::invalid(format!("unknown feature {f:?}")))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .transpose()?;
        heatmap_spec(data, sel, rows.as_deref(), features.as_deref())
    }

    pub fn meta(&self) -> Result<MetaSummary> {
        let sel = self.require_selection()?;
        let meta = self
            .inputs
            .meta
            .as_ref()
            .ok_or_else(|| Error::invalid("this session has no metadata"))?;
        meta_summary(meta, sel)
    }

    pub fn snapshot(&self) -> SessionSnapshot {
        SessionSnapshot {
            inputs: self.inputs.clone(),
            pca_dims: self.pca_dims,
            selection: self.selection.clone(),
            class_labels: self.class_labels.clone(),
            projection: self.projection.clone(),
        }
    }

    pub fn restore(snapshot: SessionSnapshot) -> Result<Self> {
        let mut s = Self::new(snapshot.inputs, snapshot.pca_dims)?;
        if let Some(sel) = snapshot.selection {
            // Re-validate against the rebuilt tree.
            let from = sel.path().first().copied().unwrap_or(usize::MAX);
            let to = sel.path().last().copied().unwrap_or(usize::MAX);
            s.selection = Some(GroupSelection::new(
                &s.mst,
                sel.group1().clone(),
                sel.group2().clone(),
                from,
                to,
            )?);
        }
        s.class_labels = snapshot.class_labels;
        s.projection = snapshot.projection;
        Ok(s)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(&self.snapshot()).map_err(|e| Error::invalid(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let snap: SessionSnapshot =
            serde_json::from_str(text).map_err(|e| Error::invalid(format!("bad snapshot: {e}")))?;
        Self::restore(snap)
    }
}
