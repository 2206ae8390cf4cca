//! Printed facet matrices, loaded once from `data/facets.toml`.

use std::sync::OnceLock;

use num_traits::One;
use serde::Deserialize;

use crate::channel::{ChannelParams, PolytopeSpec};
use crate::error::{Error, Result};
use crate::functional::{chsh, t_functional, w_functional, BellFunctional, Family, Functional};
use crate::geometry::Sense;
use crate::poly::RationalFunction;
use crate::scalar::{fmt_q, q, Q};

const SOURCE: &str = include_str!("../data/facets.toml");

#[derive(Deserialize)]
struct Raw {
    facet: Vec<RawEntry>,
}

#[derive(Deserialize)]
struct RawEntry {
    id: String,
    family: String,
    #[allow(dead_code)]
    index: u32,
    label: String,
    class_size: Option<u32>,
    tag: Option<String>,
    #[serde(default)]
    #[allow(dead_code)]
    marked: bool,
    sense: Option<String>,
    bound: Option<String>,
    rows: Vec<Vec<String>>,
}

fn build(e: RawEntry) -> Result<BellFunctional> {
    if e.rows.len() != 4 || e.rows.iter().any(|r| r.len() != 4) {
        return Err(Error::Parse(format!("{}: matrix is not 4x4", e.id)));
    }
    let mut coeffs: [[RationalFunction; 4]; 4] = Default::default();
    for (i, row) in e.rows.iter().enumerate() {
        for (j, s) in row.iter().enumerate() {
            coeffs[i][j] = RationalFunction::parse(s)
                .map_err(|err| Error::Parse(format!("{} [{i}][{j}]: {err}", e.id)))?
                .reduced();
        }
    }
    let sense = match e.sense.as_deref() {
        None | Some("le") => Sense::Le,
        Some("ge") => Sense::Ge,
        Some(s) => return Err(Error::Parse(format!("{}: sense {s:?}", e.id))),
    };
    let bound = match &e.bound {
        Some(b) => RationalFunction::parse(b)?,
        None => RationalFunction::constant(1),
    };
    Ok(BellFunctional {
        id: e.id,
        family: Family::parse(&e.family)?,
        label: e.label,
        coeffs,
        bound,
        sense,
        class_size: e.class_size,
        tag: e.tag,
    })
}

fn load() -> Result<Vec<BellFunctional>> {
    let raw: Raw = toml::from_str(SOURCE).map_err(|e| Error::Parse(e.to_string()))?;
    raw.facet.into_iter().map(build).collect()
}

/// All printed facets in file order.
pub fn entries() -> &'static [BellFunctional] {
    static CELL: OnceLock<Vec<BellFunctional>> = OnceLock::new();
    CELL.get_or_init(|| load().expect("bundled facet data parses"))
}

pub fn family(f: Family) -> Vec<&'static BellFunctional> {
    entries().iter().filter(|e| e.family == f).collect()
}

/// Looks up `B3:5`, `b1:13`, `G1`, `G2`.
pub fn lookup(id: &str) -> Result<&'static BellFunctional> {
    let norm = match id.to_ascii_uppercase().as_str() {
        "G1" => "B4:1".to_string(),
        "G2" => "B4:2".to_string(),
        s => s.to_string(),
    };
    entries()
        .iter()
        .find(|e| e.id == norm)
        .ok_or_else(|| Error::UnknownId(id.to_string()))
}

/// Symbolic functional by family and index; `T` uses `p` to fix its bound.
pub fn catalog(fam: Family, index: u32, p: &Q) -> Result<BellFunctional> {
    match fam {
        Family::Tp => t_functional(p),
        Family::Wpr => Ok(w_functional()),
        Family::Chsh => Ok(chsh()),
        _ => lookup(&format!("{fam}:{index}")).cloned(),
    }
}

/// Catalog entry instantiated at (p, r); `r` is ignored by single-parameter families.
pub fn instantiate(id: &str, p: &Q, r: &Q) -> Result<Functional> {
    for v in [p, r] {
        if v < &Q::from_integer(0.into()) || v > &Q::one() {
            return Err(Error::Domain(format!("parameter {} outside [0,1]", fmt_q(v))));
        }
    }
    let f = match id.to_ascii_uppercase().as_str() {
        "CHSH" => chsh(),
        "W" => w_functional(),
        s if s.starts_with("T") => t_functional(p)?,
        _ => lookup(id)?.clone(),
    };
    f.instantiate(p, r)
}

/// The polytope a family's facets belong to.
pub fn home_polytope(fam: Family, p: &Q, r: &Q) -> Result<PolytopeSpec> {
    let half = q(1, 2);
    let one = Q::one();
    Ok(match fam {
        Family::B1 | Family::Tp => PolytopeSpec::Plain(ChannelParams::new(p.clone(), p.clone(), half.clone(), half)?),
        Family::B2 => PolytopeSpec::Plain(ChannelParams::new(p.clone(), p.clone(), p.clone(), p.clone())?),
        Family::B3 | Family::Wpr => PolytopeSpec::Plain(ChannelParams::new(p.clone(), one.clone(), r.clone(), one)?),
        Family::B4 => PolytopeSpec::Star(p.clone(), p.clone()),
        Family::Chsh => PolytopeSpec::Plain(ChannelParams::new(half.clone(), half.clone(), half.clone(), half)?),
    })
}
