//! JSON filter-bank document.
//!
//! ```text
//! { "version": 1,
//!   "bank": { "lambdas": [..], "thetas": [..], "gamma": .., "sigma_over_lambda": .., "t1": ..,
//!             "inhibition": { "alpha": .., "surround_ratio": .. } | null },
//!   "scenes": [ { "name": .., "detection_threshold": ..,
//!                 "filters": [ { "name": .., "tuples": [[lambda, theta, rho, phi], ..],
//!                                "sigma0": .., "alpha_blur": .., "t2": .., "t3": ..,
//!                                "weight_sigma": "uniform" | <number>,
//!                                "prototype_response": .. } ] } ] }
//! ```
//!
//! Numbers are written in shortest round-trip decimal form, so a load after a
//! save reproduces every value bit for bit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BankContext, CosfireFilter, CosfireTuple, TupleWeighting};
use crate::error::{Error, Result};
use crate::gabor::GaborBank;
use crate::inhibition::InhibitionParams;
use crate::scalar::Real;
use crate::scene::{Scene, SceneBank};

pub const BANK_FILE_VERSION: u64 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BankDoc {
    version: u64,
    bank: GaborDoc,
    scenes: Vec<SceneDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GaborDoc {
    lambdas: Vec<f64>,
    thetas: Vec<f64>,
    gamma: f64,
    sigma_over_lambda: f64,
    t1: f64,
    inhibition: Option<InhibitionDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InhibitionDoc {
    alpha: f64,
    surround_ratio: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneDoc {
    name: String,
    detection_threshold: f64,
    filters: Vec<FilterDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FilterDoc {
    name: String,
    tuples: Vec<[f64; 4]>,
    sigma0: f64,
    alpha_blur: f64,
    t2: f64,
    t3: f64,
    weight_sigma: WeightSigmaDoc,
    prototype_response: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum WeightSigmaDoc {
    Named(String),
    Sigma(f64),
}

#[derive(Deserialize)]
struct VersionProbe {
    version: u64,
}

fn to_doc<T: Real>(bank: &SceneBank<T>) -> BankDoc {
    let f = |v: T| v.as_f64();
    let g = &bank.context.gabor;
    BankDoc {
        version: BANK_FILE_VERSION,
        bank: GaborDoc {
            lambdas: g.lambdas.iter().copied().map(f).collect(),
            thetas: g.thetas.iter().copied().map(f).collect(),
            gamma: f(g.gamma),
            sigma_over_lambda: f(g.sigma_over_lambda),
            t1: f(g.t1),
            inhibition: bank.context.inhibition.map(|p| InhibitionDoc {
                alpha: f(p.alpha),
                surround_ratio: f(p.surround_ratio),
            }),
        },
        scenes: bank
            .scenes
            .iter()
            .map(|s| SceneDoc {
                name: s.name.clone(),
                detection_threshold: f(s.detection_threshold),
                filters: s
                    .filters
                    .iter()
                    .map(|flt| FilterDoc {
                        name: flt.name.clone(),
                        tuples: flt
                            .tuples
                            .iter()
                            .map(|t| [f(t.lambda), f(t.theta), f(t.rho), f(t.phi)])
                            .collect(),
                        sigma0: f(flt.sigma0),
                        alpha_blur: f(flt.alpha_blur),
                        t2: f(flt.t2),
                        t3: f(flt.t3),
                        weight_sigma: match flt.weighting {
                            TupleWeighting::Uniform => WeightSigmaDoc::Named("uniform".into()),
                            TupleWeighting::Gaussian(s) => WeightSigmaDoc::Sigma(f(s)),
                        },
                        prototype_response: f(flt.prototype_response),
                    })
                    .collect(),
            })
            .collect(),
    }
}

fn from_doc<T: Real>(doc: BankDoc, path: &str) -> Result<SceneBank<T>> {
    let invariant = |message: String| Error::Invariant {
        path: path.to_string(),
        message,
    };
    let t = T::of;
    let gabor = GaborBank {
        lambdas: doc.bank.lambdas.into_iter().map(t).collect(),
        thetas: doc.bank.thetas.into_iter().map(t).collect(),
        gamma: t(doc.bank.gamma),
        sigma_over_lambda: t(doc.bank.sigma_over_lambda),
        t1: t(doc.bank.t1),
    };
    let inhibition = doc.bank.inhibition.map(|p| InhibitionParams {
        alpha: t(p.alpha),
        surround_ratio: t(p.surround_ratio),
    });
    let context = BankContext { gabor, inhibition };
    context
        .validate()
        .map_err(|e| invariant(format!("bank: {e}")))?;

    let mut scenes = Vec::with_capacity(doc.scenes.len());
    for (si, s) in doc.scenes.into_iter().enumerate() {
        let mut filters = Vec::with_capacity(s.filters.len());
        for (fi, fd) in s.filters.into_iter().enumerate() {
            let at = format!("scenes[{si}].filters[{fi}] ('{}')", fd.name);
            let weighting = match fd.weight_sigma {
                WeightSigmaDoc::Named(ref n) if n == "uniform" => TupleWeighting::Uniform,
                WeightSigmaDoc::Named(n) => {
                    return Err(invariant(format!(
                        "{at}.weight_sigma: expected \"uniform\" or a number, got \"{n}\""
                    )))
                }
                WeightSigmaDoc::Sigma(v) => TupleWeighting::Gaussian(t(v)),
            };
            for (ti, tup) in fd.tuples.iter().enumerate() {
                if !(tup[2] >= 0.0) {
                    return Err(invariant(format!(
                        "{at}.tuples[{ti}]: rho = {} must be >= 0",
                        tup[2]
                    )));
                }
            }
            let filter = CosfireFilter {
                name: fd.name,
                scene: s.name.clone(),
                tuples: fd
                    .tuples
                    .into_iter()
                    .map(|[l, th, r, p]| CosfireTuple {
                        lambda: t(l),
                        theta: t(th),
                        rho: t(r),
                        phi: t(p),
                    })
                    .collect(),
                sigma0: t(fd.sigma0),
                alpha_blur: t(fd.alpha_blur),
                t2: t(fd.t2),
                t3: t(fd.t3),
                weighting,
                prototype_response: t(fd.prototype_response),
            };
            filter.validate().map_err(|e| invariant(format!("{at}: {e}")))?;
            filters.push(filter);
        }
        scenes.push(Scene {
            name: s.name,
            detection_threshold: t(s.detection_threshold),
            filters,
        });
    }
    let bank = SceneBank { context, scenes };
    bank.validate().map_err(|e| invariant(e.to_string()))?;
    Ok(bank)
}

pub fn bank_to_json<T: Real>(bank: &SceneBank<T>) -> String {
    let mut s = serde_json::to_string_pretty(&to_doc(bank)).expect("bank document serialises");
    s.push('\n');
    s
}

/// Parses a bank document; `origin` names the source in error messages.
pub fn bank_from_json<T: Real>(text: &str, origin: &str) -> Result<SceneBank<T>> {
    let parse_err = |e: serde_json::Error| Error::Parse {
        path: origin.to_string(),
        message: e.to_string(),
    };
    let probe: VersionProbe = serde_json::from_str(text).map_err(parse_err)?;
    if probe.version != BANK_FILE_VERSION {
        return Err(Error::Version {
            path: origin.to_string(),
            found: probe.version,
            expected: BANK_FILE_VERSION,
        });
    }
    let doc: BankDoc = serde_json::from_str(text).map_err(parse_err)?;
    from_doc(doc, origin)
}

pub fn save_bank<T: Real>(bank: &SceneBank<T>, path: &Path) -> Result<()> {
    std::fs::write(path, bank_to_json(bank)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_bank<T: Real>(path: &Path) -> Result<SceneBank<T>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    bank_from_json(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn empty() -> SceneBank<f64> {
        SceneBank::new(GaborBank::default(), Some(InhibitionParams::default()))
    }

    #[test]
    fn empty_bank_round_trips() {
        let text = bank_to_json(&empty());
        assert!(text.contains("\"scenes\": []"));
        assert_eq!(bank_from_json::<f64>(&text, "mem").unwrap(), empty());
    }

    #[test]
    fn version_mismatch_is_explicit() {
        let text = bank_to_json(&empty()).replace("\"version\": 1", "\"version\": 2");
        assert!(matches!(
            bank_from_json::<f64>(&text, "mem"),
            Err(Error::Version { found: 2, .. })
        ));
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = bank_from_json::<f64>("{\"version\": 1,\n \"bank\": [", "x.json").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("x.json") && msg.contains("line"), "{msg}");
        let err = bank_from_json::<f64>("{\"version\": 1, \"scenes\": []}", "x.json").unwrap_err();
        assert!(err.to_string().contains("bank"), "{err}");
    }
}
