//! JSON fixtures for fusion frame systems.
//!
//! ```json
//! {
//!   "ambient_dim": 2,
//!   "components": [
//!     { "weight": 1.0, "subspace_basis": [[1.0, 0.0]] },
//!     { "weight": 1.0, "subspace_basis": [[0.0, 1.0]],
//!       "local_frame": [[0.0, 2.0]], "local_dual": [[0.0, 0.5]] }
//!   ]
//! }
//! ```
//!
//! Every matrix is a list of vectors (one inner array per vector, `M`
//! entries each). A basis that is not orthonormal is replaced by an
//! orthonormal basis of its span. Without `local_frame` the orthonormal basis
//! is used as the local frame; without `local_dual` the canonical dual is.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::Frame;
use crate::fusion::{Component, FusionFrame, FusionFrameSystem, Subspace};
use crate::numkit::Mat;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fixture {
    pub ambient_dim: usize,
    pub components: Vec<FixtureComponent>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureComponent {
    pub weight: f64,
    pub subspace_basis: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local_frame: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local_dual: Option<Vec<Vec<f64>>>,
}

fn columns(m: usize, vectors: &[Vec<f64>], what: &str, i: usize) -> Result<Mat> {
    if vectors.is_empty() {
        return Err(Error::Schema(format!("component {i}: {what} has no vectors")));
    }
    if let Some(v) = vectors.iter().find(|v| v.len() != m) {
        return Err(Error::Schema(format!(
            "component {i}: {what} vector has {} entries, ambient_dim is {m}",
            v.len()
        )));
    }
    Mat::from_columns(m, vectors).map_err(|e| Error::Schema(format!("component {i}: {what}: {e}")))
}

impl Fixture {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))
    }

    /// Pretty-printed JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("fixture serializes");
        s.push('\n');
        s
    }

    pub fn to_system(&self) -> Result<FusionFrameSystem> {
        let m = self.ambient_dim;
        if m == 0 {
            return Err(Error::Schema("ambient_dim must be positive".into()));
        }
        if self.components.is_empty() {
            return Err(Error::Schema("components must not be empty".into()));
        }
        let mut comps = Vec::with_capacity(self.components.len());
        let mut locals = Vec::with_capacity(self.components.len());
        let mut duals = Vec::with_capacity(self.components.len());
        let mut any_dual = false;
        for (i, c) in self.components.iter().enumerate() {
            let basis = columns(m, &c.subspace_basis, "subspace_basis", i)?;
            let subspace = Subspace::from_basis_or_span(basis)
                .map_err(|e| Error::Schema(format!("component {i}: subspace_basis: {e}")))?;
            let local = match &c.local_frame {
                Some(v) => Frame::new(columns(m, v, "local_frame", i)?)?,
                None => Frame::new(subspace.basis().clone())?,
            };
            let dual = match &c.local_dual {
                Some(v) => {
                    any_dual = true;
                    Some(Frame::new(columns(m, v, "local_dual", i)?)?)
                }
                None => None,
            };
            comps.push(Component {
                subspace,
                weight: c.weight,
            });
            locals.push(local);
            duals.push(dual);
        }
        let ff = FusionFrame::new(comps)?;
        let duals = if any_dual {
            let filled = duals
                .into_iter()
                .zip(&locals)
                .map(|(d, f)| match d {
                    Some(d) => Ok(d),
                    None => crate::frames::canonical_dual(f),
                })
                .collect::<Result<Vec<_>>>()?;
            Some(filled)
        } else {
            None
        };
        FusionFrameSystem::new(ff, locals, duals)
    }

    /// Writes every basis, local frame and local dual explicitly.
    pub fn from_system(ffs: &FusionFrameSystem) -> Self {
        let components = ffs
            .fusion_frame()
            .components()
            .iter()
            .zip(ffs.local_frames())
            .zip(ffs.local_duals())
            .map(|((c, f), d)| FixtureComponent {
                weight: c.weight,
                subspace_basis: c.subspace.basis().to_column_lists(),
                local_frame: Some(f.vectors().to_column_lists()),
                local_dual: Some(d.vectors().to_column_lists()),
            })
            .collect();
        Fixture {
            ambient_dim: ffs.ambient_dim(),
            components,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::fusion_bounds;

    const ONB: &str = r#"{"ambient_dim": 2, "components": [
        {"weight": 1.0, "subspace_basis": [[1.0, 0.0]]},
        {"weight": 1.0, "subspace_basis": [[0.0, 1.0]]}]}"#;

    #[test]
    fn loads_minimal_fixture() {
        let ffs = Fixture::from_json(ONB).unwrap().to_system().unwrap();
        let b = fusion_bounds(ffs.fusion_frame());
        assert!(b.is_orthonormal_fusion_basis);
        assert_eq!(ffs.local_frames()[1].vector(0)[1], 1.0);
    }

    #[test]
    fn non_orthonormal_basis_is_respanned() {
        let text = r#"{"ambient_dim": 2, "components": [
            {"weight": 1.0, "subspace_basis": [[3.0, 0.0]]},
            {"weight": 2.0, "subspace_basis": [[1.0, 1.0], [2.0, 2.0]]}]}"#;
        let ffs = Fixture::from_json(text).unwrap().to_system().unwrap();
        assert_eq!(ffs.fusion_frame().components()[1].subspace.dim(), 1);
        assert!((ffs.fusion_frame().components()[0].subspace.basis().get(0, 0).abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn round_trip_preserves_system() {
        let text = r#"{"ambient_dim": 2, "components": [
            {"weight": 0.5, "subspace_basis": [[1.0, 0.0], [0.0, 1.0]],
             "local_frame": [[1.0, 0.0], [-0.5, 0.8660254037844386], [-0.5, -0.8660254037844386]]},
            {"weight": 1.5, "subspace_basis": [[0.6, 0.8]], "local_frame": [[1.2, 1.6]],
             "local_dual": [[0.3, 0.4]]}]}"#;
        let ffs = Fixture::from_json(text).unwrap().to_system().unwrap();
        let json = Fixture::from_system(&ffs).to_json();
        let again = Fixture::from_json(&json).unwrap().to_system().unwrap();
        assert_eq!(Fixture::from_system(&again).to_json(), json);
    }

    #[test]
    fn schema_errors() {
        for bad in [
            "not json",
            r#"{"ambient_dim": 2, "components": []}"#,
            r#"{"ambient_dim": 2, "components": [{"weight": 1.0, "subspace_basis": [[1.0]]}]}"#,
            r#"{"ambient_dim": 2, "components": [{"weight": 1.0, "subspace_basis": []}]}"#,
            r#"{"ambient_dim": 2, "components": [{"weight": 1.0, "basis": [[1.0, 0.0]]}]}"#,
        ] {
            let r = Fixture::from_json(bad).and_then(|f| f.to_system());
            assert!(matches!(r, Err(Error::Schema(_))), "{bad}: {r:?}");
        }
    }

    #[test]
    fn local_frame_outside_subspace_is_rejected() {
        let text = r#"{"ambient_dim": 2, "components": [
            {"weight": 1.0, "subspace_basis": [[1.0, 0.0]], "local_frame": [[1.0, 0.1]]}]}"#;
        let r = Fixture::from_json(text).unwrap().to_system();
        assert!(matches!(r, Err(Error::InvalidSystem(_))));
    }
}
