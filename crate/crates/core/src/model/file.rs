//! TOML model files.
//!
//! ```toml
//! size = 2                          # number of levels N
//!
//! [params]                          # control parameters, referenced as `$name`
//! g = 0.1
//! d = 0.25
//!
//! [hamiltonian]                     # H_B; any combination of the three keys
//! diagonal = ["-$d", "$d"]          # level energies
//! entries = [[0, 1, 0.0]]           # (i, j, value) triplets, mirrored to (j, i)
//! # matrix = [[...], [...]]         # dense N×N, must be symmetric
//!
//! [[channels]]                      # one table per channel, in coupling-column order
//! kind = "wideband"                 # wideband | flatband | chain
//! dos = 0.3183098861837907
//! # flatband: lower, upper, dos     # chain: threshold, hopping
//!
//! [couplings]
//! matrix = [["$g"], ["$g"]]         # N rows × C columns of γ_λC
//! ```
//!
//! Every numeric field accepts a number, `"$name"`, `"-$name"` or
//! `"<factor>*$name"`. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Deserializer};

use super::{ChannelTemplate, ModelTemplate, Scalar, SystemModel};
use crate::error::{Error, Result};

#[derive(Debug)]
struct Field(Scalar);

impl<'de> Deserialize<'de> for Field {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Float(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(i) => Ok(Field(Scalar::Value(i as f64))),
            Raw::Float(f) => Ok(Field(Scalar::Value(f))),
            Raw::Text(s) => Scalar::parse(&s).map(Field).map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    size: usize,
    #[serde(default)]
    params: BTreeMap<String, f64>,
    #[serde(default)]
    hamiltonian: HamiltonianSection,
    channels: Vec<ChannelSection>,
    couplings: CouplingSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct HamiltonianSection {
    diagonal: Option<Vec<Field>>,
    entries: Option<Vec<(usize, usize, Field)>>,
    matrix: Option<Vec<Vec<Field>>>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum ChannelSection {
    Wideband { dos: Field },
    Flatband { lower: Field, upper: Field, dos: Field },
    Chain { threshold: Field, hopping: Field },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CouplingSection {
    matrix: Vec<Vec<Field>>,
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// Parses a model from TOML text. `origin` names the source in diagnostics.
pub fn parse_model(text: &str, origin: &str) -> Result<SystemModel> {
    let file: ModelFile = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_column(text, s.start));
        Error::ModelFile {
            path: origin.to_string(),
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    let semantic = |msg: String| Error::InvalidInput(format!("{origin}: {msg}"));

    let n = file.size;
    let mut hamiltonian = BTreeMap::new();
    if let Some(rows) = file.hamiltonian.matrix {
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(semantic(format!("hamiltonian.matrix must be {n}×{n}")));
        }
        for i in 0..n {
            for j in 0..n {
                if rows[i][j].0 != rows[j][i].0 {
                    return Err(semantic(format!("hamiltonian.matrix is not symmetric at ({i}, {j})")));
                }
            }
            for j in i..n {
                hamiltonian.insert((i, j), rows[i][j].0.clone());
            }
        }
    }
    if let Some(diag) = file.hamiltonian.diagonal {
        if diag.len() != n {
            return Err(semantic(format!("hamiltonian.diagonal has {} entries, expected {n}", diag.len())));
        }
        for (i, f) in diag.into_iter().enumerate() {
            hamiltonian.insert((i, i), f.0);
        }
    }
    for (i, j, f) in file.hamiltonian.entries.unwrap_or_default() {
        if i >= n || j >= n {
            return Err(semantic(format!("hamiltonian entry ({i}, {j}) outside {n}×{n}")));
        }
        hamiltonian.insert((i.min(j), i.max(j)), f.0);
    }

    let channels: Vec<ChannelTemplate> = file
        .channels
        .into_iter()
        .map(|c| match c {
            ChannelSection::Wideband { dos } => ChannelTemplate::Wideband { dos: dos.0 },
            ChannelSection::Flatband { lower, upper, dos } => ChannelTemplate::FlatBand {
                lower: lower.0,
                upper: upper.0,
                dos: dos.0,
            },
            ChannelSection::Chain { threshold, hopping } => ChannelTemplate::ChainLead {
                threshold: threshold.0,
                hopping: hopping.0,
            },
        })
        .collect();

    let rows = file.couplings.matrix;
    if rows.len() != n {
        return Err(semantic(format!("couplings.matrix has {} rows, expected {n}", rows.len())));
    }
    let c = channels.len();
    if let Some(bad) = rows.iter().position(|r| r.len() != c) {
        return Err(semantic(format!("couplings.matrix row {bad} has {} columns, expected {c}", rows[bad].len())));
    }
    let mut couplings = vec![Vec::with_capacity(n); c];
    for row in rows {
        for (col, f) in row.into_iter().enumerate() {
            couplings[col].push(f.0);
        }
    }

    let template = ModelTemplate { size: n, hamiltonian, channels, couplings };
    SystemModel::from_template(template, file.params).map_err(|e| match e {
        Error::InvalidInput(m) => semantic(m),
        other => other,
    })
}

pub fn read_model(path: impl AsRef<Path>) -> Result<SystemModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_model(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Channel;

    const TWO_LEVEL: &str = r#"
size = 2

[params]
g = 0.5
d = 0.25

[hamiltonian]
diagonal = ["-$d", "$d"]
entries = [[1, 0, 0.01]]

[[channels]]
kind = "wideband"
dos = 0.3183098861837907

[[channels]]
kind = "chain"
threshold = -2
hopping = 1.0

[couplings]
matrix = [["$g", 0.1], ["0.9*$g", 0]]
"#;

    #[test]
    fn parses_full_schema() {
        let m = parse_model(TWO_LEVEL, "inline").unwrap();
        assert_eq!(m.n_levels(), 2);
        assert_eq!(m.n_channels(), 2);
        assert_eq!(m.hb()[(0, 0)], -0.25);
        assert_eq!(m.hb()[(0, 1)], 0.01);
        assert_eq!(m.channels()[1], Channel::ChainLead { threshold: -2.0, hopping: 1.0 });
        assert_eq!(m.couplings()[(1, 0)], 0.45);
        assert_eq!(m.param("g"), Some(0.5));
    }

    #[test]
    fn unknown_key_reports_position() {
        let bad = TWO_LEVEL.replace("kind = \"chain\"", "kind = \"chain\"\ncolour = 3");
        match parse_model(&bad, "bad.toml") {
            Err(Error::ModelFile { path, line, column, message }) => {
                assert_eq!(path, "bad.toml");
                assert!(line > 1, "line {line}");
                assert!(column >= 1);
                assert!(message.contains("colour"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn syntax_error_reports_line() {
        let bad = "size = 1\n[params\n";
        match parse_model(bad, "x") {
            Err(Error::ModelFile { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_reference_is_a_file_error() {
        let bad = TWO_LEVEL.replace("\"$g\", 0.1", "\"g\", 0.1");
        assert!(matches!(parse_model(&bad, "x"), Err(Error::ModelFile { .. })));
    }

    #[test]
    fn dense_matrix_must_be_symmetric() {
        let text = r#"
size = 2
[hamiltonian]
matrix = [[0, 1], [2, 0]]
[[channels]]
kind = "wideband"
dos = 1
[couplings]
matrix = [[1], [1]]
"#;
        assert!(matches!(parse_model(text, "x"), Err(Error::InvalidInput(_))));
        let ok = text.replace("[2, 0]", "[1, 0]");
        let m = parse_model(&ok, "x").unwrap();
        assert_eq!(m.hb()[(1, 0)], 1.0);
    }
}
