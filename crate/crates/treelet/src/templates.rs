//! Bundled tree templates and their reference cost figures.

use std::path::Path;
use std::sync::OnceLock;

use treelet_core::cost::{calibrate_index_set, IndexSet, ReferenceCost};
use treelet_core::plan::{partition_template, CutPolicy};
use treelet_core::template::RootChoice;
use treelet_core::{Template, TemplatePlan};

use crate::error::Result;
use crate::io::parse_template;

pub struct Bundled {
    pub name: &'static str,
    pub text: &'static str,
    /// Reference memory figure `sum C(k, |T_i|)`.
    pub memory: f64,
    /// Reference computation figure `sum C(k, |T_i|) C(|T_i|, |T'_i|)`.
    pub computation: f64,
}

macro_rules! bundled {
    ($name:literal, $mem:expr, $comp:expr) => {
        Bundled {
            name: $name,
            text: include_str!(concat!("../templates/", $name, ".txt")),
            memory: $mem,
            computation: $comp,
        }
    };
}

pub const BUNDLED: &[Bundled] = &[
    bundled!("u3-1", 3.0, 6.0),
    bundled!("u5-2", 25.0, 70.0),
    bundled!("u7-2", 147.0, 434.0),
    bundled!("u10-2", 1047.0, 5610.0),
    bundled!("u12-1", 4082.0, 24552.0),
    bundled!("u12-2", 3135.0, 38016.0),
    bundled!("u13", 4823.0, 109603.0),
    bundled!("u14", 7371.0, 242515.0),
    bundled!("u15-1", 12383.0, 753375.0),
    bundled!("u15-2", 15773.0, 617820.0),
];

pub fn find(name: &str) -> Option<&'static Bundled> {
    BUNDLED.iter().find(|b| b.name == name)
}

pub fn bundled_template(name: &str, root: RootChoice) -> Option<Result<Template>> {
    find(name).map(|b| parse_template(b.text, Path::new(b.name), root))
}

/// A bundled name or a path to a template file.
pub fn resolve(name_or_path: &str, root: RootChoice) -> Result<Template> {
    match bundled_template(name_or_path, root) {
        Some(t) => t,
        None => crate::io::load_template(Path::new(name_or_path), root),
    }
}

/// The index set whose cost sums best reproduce the reference figures of
/// every bundled template; computed once.
pub fn calibrated_index_set() -> IndexSet {
    static SET: OnceLock<(IndexSet, f64)> = OnceLock::new();
    SET.get_or_init(|| calibrate().expect("bundled templates parse"))
        .0
}

pub fn calibrate() -> Result<(IndexSet, f64)> {
    let plans: Vec<(TemplatePlan, &Bundled)> = BUNDLED
        .iter()
        .map(|b| {
            let t = parse_template(b.text, Path::new(b.name), RootChoice::First)?;
            Ok((partition_template(&t, CutPolicy::default()), b))
        })
        .collect::<Result<_>>()?;
    let refs: Vec<ReferenceCost<'_>> = plans
        .iter()
        .map(|(plan, b)| ReferenceCost {
            plan,
            memory: b.memory,
            computation: b.computation,
        })
        .collect();
    Ok(calibrate_index_set(&refs)?)
}
