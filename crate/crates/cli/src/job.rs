//! Job descriptions: the config file format and its conversion into library types.

use std::fmt;
use std::path::Path;

use indefinite_theta::chains::{CertifyOptions, Collection, CubicalCollection, SimplicialCollection};
use indefinite_theta::rational::{format_rat, parse_rat};
use indefinite_theta::theta::{Coset, EvenLattice, TauPoint, ThetaOptions};
use indefinite_theta::{BilinearSpace, ErrorFunctionEvaluator, Rat, Vector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::CliError;

/// An exact rational written as `"p/q"`; bare integers are accepted on input.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatText(pub Rat);

impl Serialize for RatText {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rat(&self.0))
    }
}

impl<'de> Deserialize<'de> for RatText {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Int(i64),
        }
        match Raw::deserialize(d).map_err(|_| {
            serde::de::Error::custom("rationals must be strings like \"3/4\" or integers")
        })? {
            Raw::Text(t) => parse_rat(&t).map(RatText).map_err(serde::de::Error::custom),
            Raw::Int(n) => Ok(RatText(Rat::from_integer(n.into()))),
        }
    }
}

/// `τ = u + iv`, written `"u,v"` or `[u, v]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TauText {
    pub u: f64,
    pub v: f64,
}

impl TauText {
    pub fn parse(text: &str) -> Result<Self, String> {
        let (u, v) = text.split_once(',').ok_or_else(|| format!("expected \"u,v\", got {text:?}"))?;
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("bad number {s:?} in tau {text:?}"));
        Ok(Self { u: num(u)?, v: num(v)? })
    }

    pub fn point(self) -> Result<TauPoint, CliError> {
        TauPoint::new(self.u, self.v).map_err(CliError::from)
    }
}

impl fmt::Display for TauText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.u, self.v)
    }
}

impl Serialize for TauText {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.u, self.v].serialize(s)
    }
}

impl<'de> Deserialize<'de> for TauText {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Pair([f64; 2]),
        }
        match Raw::deserialize(d).map_err(|_| serde::de::Error::custom("tau must be \"u,v\" or [u, v]"))? {
            Raw::Text(t) => TauText::parse(&t).map_err(serde::de::Error::custom),
            Raw::Pair([u, v]) => Ok(TauText { u, v }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CollectionKind {
    Cubical,
    Simplicial,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollectionSpec {
    pub kind: CollectionKind,
    /// Cubical: `C_1, C_1', C_2, C_2', ...`. Simplicial: `C_0, ..., C_q`.
    pub vectors: Vec<Vec<RatText>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<Vec<Vec<i64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coset: Option<Vec<RatText>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collection: Option<CollectionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<RatText>>,
    /// Vectors for `erf`; defaults to the negative plane of the collection.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub erf_vectors: Option<Vec<Vec<RatText>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tau: Vec<TauText>,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub n: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_samples: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<u32>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub force: bool,
    /// Step of the finite-difference lowering in `shadow`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fd_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suite: Option<String>,
}

fn is_false(b: &bool) -> bool {
    !*b
}

fn vector(coords: &[RatText]) -> Vector {
    Vector::from_rats(coords.iter().map(|r| r.0.clone()).collect())
}

impl JobSpec {
    /// Reads TOML or JSON; a JSON result document is accepted through its `job` field.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
        let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        if is_toml {
            return toml::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())));
        }
        let value: serde_json::Value = match serde_json::from_str(&text) {
            Ok(v) => v,
            Err(json_err) => {
                return toml::from_str(&text).map_err(|_| CliError::input(format!("{}: {json_err}", path.display())))
            }
        };
        let value = match value {
            serde_json::Value::Object(mut m) if m.contains_key("job") && m.contains_key("command") => {
                m.remove("job").unwrap_or_default()
            }
            v => v,
        };
        serde_json::from_value(value).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
    }

    fn gram(&self) -> Result<&Vec<Vec<i64>>, CliError> {
        self.lattice.as_ref().ok_or_else(|| CliError::input("the job has no `lattice`"))
    }

    pub fn space(&self) -> Result<BilinearSpace, CliError> {
        Ok(BilinearSpace::from_i64_rows(self.gram()?)?)
    }

    pub fn even_lattice(&self) -> Result<EvenLattice, CliError> {
        Ok(EvenLattice::new(self.gram()?.clone())?)
    }

    pub fn coset(&self, lattice: &EvenLattice) -> Result<Coset, CliError> {
        match &self.coset {
            Some(mu) => Ok(Coset::new(lattice, mu.iter().map(|r| r.0.clone()).collect())?),
            None => Ok(Coset::zero(lattice.rank())),
        }
    }

    pub fn collection_in(&self, space: &BilinearSpace) -> Result<Collection, CliError> {
        let spec = self.collection.as_ref().ok_or_else(|| CliError::input("the job has no `collection`"))?;
        let vectors: Vec<Vector> = spec.vectors.iter().map(|v| vector(v)).collect();
        match spec.kind {
            CollectionKind::Cubical => {
                if vectors.is_empty() || vectors.len() % 2 != 0 {
                    return Err(CliError::input("a cubical collection lists C_1, C_1', ..., C_q, C_q' (an even count)"));
                }
                let pairs = vectors.chunks(2).map(|p| (p[0].clone(), p[1].clone())).collect();
                Ok(Collection::Cubical(CubicalCollection::new(space.clone(), pairs)?))
            }
            CollectionKind::Simplicial => Ok(Collection::Simplicial(SimplicialCollection::new(space.clone(), vectors)?)),
        }
    }

    pub fn x(&self) -> Result<Vector, CliError> {
        self.x.as_deref().map(vector).ok_or_else(|| CliError::input("the job has no `x`"))
    }

    /// `erf_vectors`, or `C_1, ..., C_q` of a cubical and `C_0, ..., C_{q-1}` of a
    /// simplicial collection.
    pub fn erf_vectors(&self, space: &BilinearSpace) -> Result<Vec<Vector>, CliError> {
        if let Some(vs) = &self.erf_vectors {
            return Ok(vs.iter().map(|v| vector(v)).collect());
        }
        let vs = match self.collection_in(space)? {
            Collection::Cubical(c) => c.pairs().iter().map(|p| p.0.clone()).collect(),
            Collection::Simplicial(s) => s.verts()[..s.q()].to_vec(),
        };
        Ok(vs)
    }

    pub fn certify_options(&self) -> CertifyOptions {
        let mut opts = CertifyOptions::default();
        if let Some(grid) = self.resolution {
            opts.grid = grid;
        }
        opts
    }

    pub fn evaluator(&self, default_tol: f64) -> ErrorFunctionEvaluator {
        let mut ev = ErrorFunctionEvaluator { quad_tol: self.tol.unwrap_or(default_tol), ..Default::default() };
        if let Some(n) = self.mc_samples {
            ev.mc_samples = n;
        }
        if let Some(seed) = self.seed {
            ev.rng_seed = seed;
        }
        ev
    }

    pub fn theta_options(&self) -> ThetaOptions {
        let defaults = ThetaOptions::default();
        ThetaOptions { tol: self.tol.unwrap_or(defaults.tol), evaluator: self.evaluator(1e-12), ..defaults }
    }
}
