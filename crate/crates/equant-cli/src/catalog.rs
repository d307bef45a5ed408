//! The named Hamiltonians the CLI can quantize, with their classical
//! functions and the closed-form correction the weak symbol must carry.

use equant::canonical::CoherentFamily;
use equant::op::OperatorMatrix;

pub struct CatalogEntry {
    pub name: &'static str,
    pub build: fn(&CoherentFamily) -> OperatorMatrix,
    /// The classical function of (p, q).
    pub classical: fn(f64, f64) -> f64,
    /// Closed form of `symbol - classical` for the vacuum fiducial.
    pub predicted_correction: fn(f64, f64, f64) -> f64,
}

pub const CATALOG: &[CatalogEntry] = &[
    CatalogEntry {
        name: "oscillator",
        build: |fam| {
            fam.q_op()
                .pow(2)
                .add(&fam.p_op().pow(2))
                .unwrap()
                .scaled_re(0.5)
                .with_label("(P^2+Q^2)/2")
        },
        classical: |p, q| 0.5 * (p * p + q * q),
        predicted_correction: |_, _, hbar| 0.5 * hbar,
    },
    CatalogEntry {
        name: "free",
        build: |fam| fam.p_op().pow(2).scaled_re(0.5).with_label("P^2/2"),
        classical: |p, _| 0.5 * p * p,
        predicted_correction: |_, _, hbar| 0.25 * hbar,
    },
    CatalogEntry {
        name: "q",
        build: |fam| fam.q_op().clone(),
        classical: |_, q| q,
        predicted_correction: |_, _, _| 0.0,
    },
    CatalogEntry {
        name: "p",
        build: |fam| fam.p_op().clone(),
        classical: |p, _| p,
        predicted_correction: |_, _, _| 0.0,
    },
    CatalogEntry {
        name: "q2",
        build: |fam| fam.q_op().pow(2).with_label("Q^2"),
        classical: |_, q| q * q,
        predicted_correction: |_, _, hbar| 0.5 * hbar,
    },
    CatalogEntry {
        name: "quartic",
        build: |fam| fam.q_op().pow(4).with_label("Q^4"),
        classical: |_, q| q.powi(4),
        predicted_correction: |_, q, hbar| 3.0 * hbar * q * q + 0.75 * hbar * hbar,
    },
];

pub fn lookup(name: &str) -> Option<&'static CatalogEntry> {
    CATALOG.iter().find(|e| e.name == name)
}

pub fn names() -> Vec<&'static str> {
    CATALOG.iter().map(|e| e.name).collect()
}
