use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::envelope::MemberKind;
use crate::error::{Result, RiskError};
use crate::gexp::Generator;
use crate::measures::RiskMeasureSpec;
use crate::space::{MeasureChange, PayoffSpec, RandomVariable, ScenarioTree, TreeDocument};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TreeSource {
    Binomial { steps: usize, horizon: f64 },
    Explicit(TreeDocument),
}

/// Defaults for command flags; flags given on the command line win.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<MemberKind>,
    #[serde(default, rename = "N_list", alias = "n_list", skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
}

/// The JSON model file. Maps are ordered by name so reports are stable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub tree: TreeSource,
    #[serde(default)]
    pub payoffs: BTreeMap<String, PayoffSpec>,
    #[serde(default)]
    pub measures: BTreeMap<String, RiskMeasureSpec>,
    #[serde(default)]
    pub generators: BTreeMap<String, Generator>,
    /// Named measure changes, for `sensitivity --q`.
    #[serde(default)]
    pub scenarios: BTreeMap<String, MeasureChange>,
    #[serde(default)]
    pub params: ModelParams,
}

/// A model file resolved against its tree.
#[derive(Debug, Clone)]
pub struct Model {
    pub file: ModelFile,
    pub tree: ScenarioTree,
    pub payoffs: BTreeMap<String, RandomVariable>,
    /// SHA-256 of the model bytes, hex encoded.
    pub digest: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl Model {
    /// Parses model JSON; schema errors carry the field path and line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut de = serde_json::Deserializer::from_str(text);
        let file: ModelFile = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            RiskError::InvalidInput(format!("model schema error at `{path}`: {inner}"))
        })?;
        de.end().map_err(|e| RiskError::InvalidInput(format!("model schema error: {e}")))?;
        Self::resolve(file, sha256_hex(text.as_bytes()))
    }

    pub fn from_file(file: ModelFile) -> Result<Self> {
        let digest = sha256_hex(&serde_json::to_vec(&file)?);
        Self::resolve(file, digest)
    }

    fn resolve(file: ModelFile, digest: String) -> Result<Self> {
        let tree = match &file.tree {
            TreeSource::Binomial { steps, horizon } => ScenarioTree::binomial(*steps, *horizon)?,
            TreeSource::Explicit(doc) => ScenarioTree::from_document(doc)?,
        };
        let mut payoffs = BTreeMap::new();
        for (name, p) in &file.payoffs {
            let x = p.realize(&tree).map_err(|e| RiskError::InvalidInput(format!("payoff `{name}`: {e}")))?;
            payoffs.insert(name.clone(), x);
        }
        for (name, m) in &file.measures {
            m.validate(&tree).map_err(|e| RiskError::InvalidInput(format!("measure `{name}`: {e}")))?;
        }
        for (name, g) in &file.generators {
            g.validate().map_err(|e| RiskError::InvalidInput(format!("generator `{name}`: {e}")))?;
        }
        for (name, q) in &file.scenarios {
            q.validate(&tree).map_err(|e| RiskError::InvalidInput(format!("scenario `{name}`: {e}")))?;
        }
        Ok(Self { file, tree, payoffs, digest })
    }
}

/// Entries of `map` named by `name`, or all of them when `name` is absent.
pub(crate) fn select<'a, T>(map: &'a BTreeMap<String, T>, name: Option<&str>, what: &str) -> Result<Vec<(&'a str, &'a T)>> {
    match name {
        Some(n) => map
            .get_key_value(n)
            .map(|(k, v)| vec![(k.as_str(), v)])
            .ok_or_else(|| RiskError::InvalidInput(format!("no {what} named `{n}` in the model"))),
        None if map.is_empty() => Err(RiskError::InvalidInput(format!("the model defines no {what}"))),
        None => Ok(map.iter().map(|(k, v)| (k.as_str(), v)).collect()),
    }
}
