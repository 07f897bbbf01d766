//! Pipeline parameters and their line-oriented `key = value` file format.
//!
//! ```text
//! [selection]
//! n_a = 5
//! c_t = 0.7
//!
//! [signatures]
//! relationship = last_name + street_address
//!
//! [transforms]
//! birth_date = identity, yearOf
//! ```
//!
//! Keys may appear under any of the named sections except `[transforms]`,
//! whose keys are attribute names. `relationship` and `combination` may be
//! repeated. Keys left out keep their defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{Atom, AtomSpec, Combination};
use crate::signatures::FeatureId;
use crate::transform::Transform;

/// Which databases attribute selection scores combinations on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreScope {
    /// Minimum of the scores on both databases.
    Both,
    /// First database only.
    First,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub id_column: String,
    pub entity_column: Option<String>,
    /// QID attributes; empty means every non-id, non-entity column.
    pub attributes: Vec<String>,

    pub n_a: usize,
    pub alpha: f64,
    pub c_t: f64,
    pub score_scope: ScoreScope,
    /// Fixed combinations that bypass selection when non-empty.
    pub combinations: Vec<Vec<AtomSpec>>,

    pub p_t: f64,
    pub lambda: f64,
    pub mu: f64,
    pub features: Vec<FeatureId>,
    /// Each entry is a set of atoms; two records are related when they agree
    /// on every atom of at least one entry.
    pub relationships: Vec<Vec<AtomSpec>>,
    /// Per-attribute transforms; attributes not listed use identity only.
    pub transforms: BTreeMap<String, Vec<Transform>>,

    pub beta: f64,
    pub s_t: f64,
    pub attribute_only: bool,
    pub one_to_one: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            id_column: "id".to_string(),
            entity_column: None,
            attributes: Vec::new(),
            n_a: 5,
            alpha: 0.5,
            c_t: 0.7,
            score_scope: ScoreScope::Both,
            combinations: Vec::new(),
            p_t: 0.7,
            lambda: 1.2,
            mu: 0.2,
            features: vec![FeatureId::NeighbourSignatures],
            relationships: Vec::new(),
            transforms: BTreeMap::new(),
            beta: 0.5,
            s_t: 0.8,
            attribute_only: false,
            one_to_one: false,
        }
    }
}

const SECTIONS: &[&str] = &["data", "selection", "signatures", "matching", "transforms"];

impl Config {
    pub fn from_file(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        text.parse()
    }

    /// Sets one key from its textual value. Repeatable keys append.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "id_column" => self.id_column = value.to_string(),
            "entity_column" => self.entity_column = (!value.is_empty()).then(|| value.to_string()),
            "attributes" => self.attributes = split_list(value),
            "n_a" => self.n_a = parse_num(key, value)?,
            "alpha" => self.alpha = parse_num(key, value)?,
            "c_t" => self.c_t = parse_num(key, value)?,
            "score_on" => {
                self.score_scope = match value {
                    "both" => ScoreScope::Both,
                    "first" => ScoreScope::First,
                    _ => return Err(Error::ConfigRange(format!("score_on = {value}"))),
                }
            }
            "combination" => self.combinations.push(parse_atoms(value)?),
            "p_t" => self.p_t = parse_num(key, value)?,
            "lambda" => self.lambda = parse_num(key, value)?,
            "mu" => self.mu = parse_num(key, value)?,
            "features" => {
                self.features = split_list(value)
                    .iter()
                    .map(|f| f.parse())
                    .collect::<Result<_>>()?
            }
            "relationship" => self.relationships.push(parse_atoms(value)?),
            "beta" => self.beta = parse_num(key, value)?,
            "s_t" => self.s_t = parse_num(key, value)?,
            "attribute_only" => self.attribute_only = parse_num(key, value)?,
            "one_to_one" => self.one_to_one = parse_num(key, value)?,
            _ => return Err(Error::ConfigRange(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn set_transforms(&mut self, attribute: &str, value: &str) -> Result<()> {
        let transforms = split_list(value)
            .iter()
            .map(|t| t.parse())
            .collect::<Result<Vec<Transform>>>()?;
        if transforms.is_empty() {
            return Err(Error::ConfigRange(format!(
                "no transforms for `{attribute}`"
            )));
        }
        self.transforms.insert(attribute.to_string(), transforms);
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::ConfigRange(format!(
                    "{name} = {v} must lie in [0, 1]"
                )))
            }
        };
        if self.n_a == 0 {
            return Err(Error::ConfigRange("n_a must be positive".to_string()));
        }
        unit("alpha", self.alpha)?;
        unit("c_t", self.c_t)?;
        unit("p_t", self.p_t)?;
        unit("beta", self.beta)?;
        unit("s_t", self.s_t)?;
        if !(self.mu > 0.0 && self.mu < 1.0) {
            return Err(Error::ConfigRange(format!(
                "mu = {} violates 0 < mu < 1 < lambda",
                self.mu
            )));
        }
        if !(self.lambda > 1.0 && self.lambda.is_finite()) {
            return Err(Error::ConfigRange(format!(
                "lambda = {} violates 0 < mu < 1 < lambda",
                self.lambda
            )));
        }
        if self.features.is_empty() {
            return Err(Error::ConfigRange(
                "at least one relational feature is required".to_string(),
            ));
        }
        Ok(())
    }

    /// Lattice atoms for a schema: every attribute under each of its
    /// configured transforms.
    pub fn atoms(&self, schema: &[String]) -> Result<Vec<Atom>> {
        for name in self.transforms.keys() {
            if !schema.contains(name) {
                return Err(Error::UnknownAttribute(name.clone()));
            }
        }
        let identity = [Transform::Identity];
        let mut atoms: Vec<Atom> = schema
            .iter()
            .enumerate()
            .flat_map(|(i, name)| {
                let ts: &[Transform] = self
                    .transforms
                    .get(name)
                    .map(Vec::as_slice)
                    .unwrap_or(&identity);
                ts.iter().map(move |&t| Atom::new(i, t))
            })
            .collect();
        atoms.sort_unstable();
        atoms.dedup();
        Ok(atoms)
    }

    pub fn relationship_atoms(&self, schema: &[String]) -> Result<Vec<Vec<Atom>>> {
        self.relationships
            .iter()
            .map(|set| set.iter().map(|a| a.resolve(schema)).collect())
            .collect()
    }

    pub fn fixed_combinations(&self, schema: &[String]) -> Result<Vec<Combination>> {
        self.combinations
            .iter()
            .map(|set| {
                Combination::new(
                    set.iter()
                        .map(|a| a.resolve(schema))
                        .collect::<Result<_>>()?,
                )
            })
            .collect()
    }
}

fn split_list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

fn parse_atoms(value: &str) -> Result<Vec<AtomSpec>> {
    let atoms = value
        .split('+')
        .map(str::parse)
        .collect::<Result<Vec<AtomSpec>>>()?;
    Ok(atoms)
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::ConfigRange(format!("{key}: cannot parse `{value}`")))
}

impl FromStr for Config {
    type Err = Error;

    fn from_str(text: &str) -> Result<Config> {
        let mut cfg = Config::default();
        let mut section = String::new();
        let syntax = |line: usize, message: String| Error::ConfigSyntax { line, message };
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| syntax(line_no, format!("bad section header `{line}`")))?
                    .trim();
                if !SECTIONS.contains(&name) {
                    return Err(syntax(line_no, format!("unknown section `{name}`")));
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| syntax(line_no, format!("expected `key = value`, got `{line}`")))?;
            let key = key.trim();
            let result = if section == "transforms" {
                cfg.set_transforms(key, value)
            } else {
                cfg.set(key, value)
            };
            result.map_err(|e| match e {
                Error::ConfigRange(m) => Error::ConfigSyntax {
                    line: line_no,
                    message: m,
                },
                other => other,
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn join_atoms(atoms: &[AtomSpec]) -> String {
    atoms
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(" + ")
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[data]")?;
        writeln!(f, "id_column = {}", self.id_column)?;
        if let Some(e) = &self.entity_column {
            writeln!(f, "entity_column = {e}")?;
        }
        if !self.attributes.is_empty() {
            writeln!(f, "attributes = {}", self.attributes.join(", "))?;
        }
        writeln!(f, "\n[selection]")?;
        writeln!(f, "n_a = {}", self.n_a)?;
        writeln!(f, "alpha = {}", self.alpha)?;
        writeln!(f, "c_t = {}", self.c_t)?;
        let scope = match self.score_scope {
            ScoreScope::Both => "both",
            ScoreScope::First => "first",
        };
        writeln!(f, "score_on = {scope}")?;
        for c in &self.combinations {
            writeln!(f, "combination = {}", join_atoms(c))?;
        }
        writeln!(f, "\n[signatures]")?;
        writeln!(f, "p_t = {}", self.p_t)?;
        writeln!(f, "lambda = {}", self.lambda)?;
        writeln!(f, "mu = {}", self.mu)?;
        let features: Vec<String> = self.features.iter().map(ToString::to_string).collect();
        writeln!(f, "features = {}", features.join(", "))?;
        for r in &self.relationships {
            writeln!(f, "relationship = {}", join_atoms(r))?;
        }
        writeln!(f, "\n[matching]")?;
        writeln!(f, "beta = {}", self.beta)?;
        writeln!(f, "s_t = {}", self.s_t)?;
        writeln!(f, "attribute_only = {}", self.attribute_only)?;
        writeln!(f, "one_to_one = {}", self.one_to_one)?;
        if !self.transforms.is_empty() {
            writeln!(f, "\n[transforms]")?;
            for (attr, ts) in &self.transforms {
                let ts: Vec<String> = ts.iter().map(ToString::to_string).collect();
                writeln!(f, "{attr} = {}", ts.join(", "))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg: Config = "".parse().unwrap();
        assert_eq!(cfg, Config::default());
        assert_eq!(cfg.n_a, 5);
        assert_eq!(cfg.alpha, 0.5);
        assert_eq!(cfg.c_t, 0.7);
        assert_eq!(cfg.p_t, 0.7);
        assert_eq!(cfg.beta, 0.5);
        assert_eq!(cfg.s_t, 0.8);
        assert_eq!(cfg.lambda, 1.2);
        assert_eq!(cfg.mu, 0.2);
        assert_eq!(cfg.features, vec![FeatureId::NeighbourSignatures]);
    }

    #[test]
    fn out_of_range_mu() {
        let err = "mu = 1.5".parse::<Config>().unwrap_err();
        assert!(matches!(err, Error::ConfigRange(_)));
        assert!(err.to_string().contains("0 < mu < 1 < lambda"));
        assert!("lambda = 0.9".parse::<Config>().is_err());
        assert!("s_t = 1.01".parse::<Config>().is_err());
        assert!("n_a = 0".parse::<Config>().is_err());
    }

    #[test]
    fn single_override() {
        let cfg: Config = "n_a = 10".parse().unwrap();
        assert_eq!(
            cfg,
            Config {
                n_a: 10,
                ..Config::default()
            }
        );
    }

    #[test]
    fn sections_lists_and_comments() {
        let text = "\
# linkage setup
[data]
id_column = rid
attributes = first, last, birth, street

[signatures]
relationship = last + street   # household
relationship = phone
features = neighbour_signatures, degree, egonet_density

[transforms]
birth = identity, yearOf
street = streetName
";
        let cfg: Config = text.parse().unwrap();
        assert_eq!(cfg.id_column, "rid");
        assert_eq!(cfg.attributes.len(), 4);
        assert_eq!(cfg.relationships.len(), 2);
        assert_eq!(cfg.relationships[0].len(), 2);
        assert_eq!(cfg.features.len(), 3);
        assert_eq!(
            cfg.transforms["birth"],
            vec![Transform::Identity, Transform::YearOf]
        );
        // resolved dump parses back to the same config
        let again: Config = cfg.to_string().parse().unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let err = "[selection]\nn_a 5".parse::<Config>().unwrap_err();
        assert!(matches!(err, Error::ConfigSyntax { line: 2, .. }));
        let err = "[bogus]".parse::<Config>().unwrap_err();
        assert!(matches!(err, Error::ConfigSyntax { line: 1, .. }));
        let err = "colour = red".parse::<Config>().unwrap_err();
        assert!(matches!(err, Error::ConfigSyntax { line: 1, .. }));
        assert!("features = pagerank".parse::<Config>().is_err());
    }

    #[test]
    fn atoms_expand_transforms() {
        let schema: Vec<String> = ["first", "birth"].iter().map(|s| s.to_string()).collect();
        let mut cfg = Config::default();
        cfg.set_transforms("birth", "identity, yearOf").unwrap();
        let atoms = cfg.atoms(&schema).unwrap();
        assert_eq!(
            atoms,
            vec![
                Atom::identity(0),
                Atom::identity(1),
                Atom::new(1, Transform::YearOf)
            ]
        );
        cfg.set_transforms("nope", "identity").unwrap();
        assert!(cfg.atoms(&schema).is_err());
    }
}
