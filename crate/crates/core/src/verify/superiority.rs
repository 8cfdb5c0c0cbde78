//! Corpus comparison of the OAP, MAP and FA-lap key variants on eigenspaces
//! of multiplicity at least two.

use crate::eig::CanonKind;
use crate::error::{CanonError, Result};
use crate::graph::{normalized_laplacian, Graph};
use crate::lap::{oap_lap, KeyConfig, KeyVariant};
use crate::linalg::{sym_eig, Tolerances};

/// Variants compared, in report order.
pub const VARIANTS: [KeyVariant; 3] = [KeyVariant::Oap, KeyVariant::MapNorm, KeyVariant::FaDiag];

#[derive(Debug, Clone, PartialEq)]
pub struct SpaceOutcome {
    pub graph: usize,
    /// Index of the eigenspace in ascending eigenvalue order.
    pub space: usize,
    pub eigenvalue: f64,
    pub multiplicity: usize,
    /// Outcome per entry of [`VARIANTS`].
    pub kinds: [CanonKind; 3],
}

impl SpaceOutcome {
    fn ok(&self, v: usize) -> bool {
        self.kinds[v] == CanonKind::Single
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuperiorityReport {
    pub instances: Vec<SpaceOutcome>,
}

impl SuperiorityReport {
    pub fn total(&self) -> usize {
        self.instances.len()
    }

    pub fn failed(&self, variant: KeyVariant) -> usize {
        let v = VARIANTS
            .iter()
            .position(|&x| x == variant)
            .expect("compared variant");
        self.instances.iter().filter(|s| !s.ok(v)).count()
    }

    pub fn failed_ratio(&self, variant: KeyVariant) -> f64 {
        if self.instances.is_empty() {
            0.0
        } else {
            self.failed(variant) as f64 / self.total() as f64
        }
    }

    /// True iff OAP succeeds wherever MAP or FA-lap succeeds.
    pub fn dominance(&self) -> bool {
        self.instances
            .iter()
            .all(|s| s.ok(0) || !(s.ok(1) || s.ok(2)))
    }

    /// Instances where OAP succeeds and MAP fails.
    pub fn witnesses_over_map(&self) -> Vec<&SpaceOutcome> {
        self.instances
            .iter()
            .filter(|s| s.ok(0) && !s.ok(1))
            .collect()
    }

    /// Instances where OAP succeeds and FA-lap fails.
    pub fn witnesses_over_fa(&self) -> Vec<&SpaceOutcome> {
        self.instances
            .iter()
            .filter(|s| s.ok(0) && !s.ok(2))
            .collect()
    }

    pub fn to_key_values(&self) -> String {
        let mut s = format!("compare.instances={}\n", self.total());
        for v in VARIANTS {
            s.push_str(&format!("compare.{}.failed={}\n", v.name(), self.failed(v)));
            s.push_str(&format!(
                "compare.{}.failed_ratio={:.6}\n",
                v.name(),
                self.failed_ratio(v)
            ));
        }
        s.push_str(&format!("compare.dominance={}\n", self.dominance()));
        s.push_str(&format!(
            "compare.witnesses_over_map={}\n",
            self.witnesses_over_map().len()
        ));
        s.push_str(&format!(
            "compare.witnesses_over_fa={}\n",
            self.witnesses_over_fa().len()
        ));
        s
    }
}

/// Runs every compared variant on every eigenspace of multiplicity ≥ 2 of
/// each graph's normalized Laplacian.
pub fn superiority_report(corpus: &[Graph], c: f64, tol: &Tolerances) -> Result<SuperiorityReport> {
    if corpus.is_empty() {
        return Err(CanonError::InvalidArgument("corpus is empty".into()));
    }
    let mut instances = Vec::new();
    for (gi, g) in corpus.iter().enumerate() {
        for (si, space) in sym_eig(&normalized_laplacian(g), tol)?.iter().enumerate() {
            if space.multiplicity() < 2 {
                continue;
            }
            let mut kinds = [CanonKind::Failed; 3];
            for (k, v) in kinds.iter_mut().zip(VARIANTS) {
                *k = oap_lap(&space.basis, &KeyConfig::Plain(v), c, tol)?.kind;
            }
            instances.push(SpaceOutcome {
                graph: gi,
                space: si,
                eigenvalue: space.eigenvalue,
                multiplicity: space.multiplicity(),
                kinds,
            });
        }
    }
    Ok(SuperiorityReport { instances })
}
