//! JSON file formats for instances, strategies and reports.
//!
//! Reports write every float with 17 significant digits so that values
//! round-trip exactly.

use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use sha2::{Digest, Sha256};

use crate::error::Error;
use crate::model::{AratStructure, Dims, GameInstance, Player, StationaryStrategy};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error(transparent)]
    Invalid(#[from] Error),
}

impl From<serde_json::Error> for FormatError {
    fn from(e: serde_json::Error) -> Self {
        let message = e.to_string();
        // drop serde_json's own " at line L column C" suffix
        let message = match message.rfind(" at line ") {
            Some(i) => message[..i].to_string(),
            None => message,
        };
        FormatError::Parse {
            line: e.line(),
            column: e.column(),
            message,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub theta: f64,
    pub anchor_state: usize,
    pub states: usize,
    pub actions_a: usize,
    pub actions_b: usize,
    pub transition: Vec<Vec<Vec<Vec<f64>>>>,
    pub cost1: Vec<Vec<Vec<f64>>>,
    pub cost2: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arat: Option<AratStructure>,
}

impl InstanceFile {
    pub fn from_instance(g: &GameInstance) -> Self {
        let d = g.dims();
        Self {
            theta: g.theta(),
            anchor_state: g.anchor_state(),
            states: d.states,
            actions_a: d.actions_a,
            actions_b: d.actions_b,
            transition: g.transition_nested(),
            cost1: g.cost_nested(Player::One),
            cost2: g.cost_nested(Player::Two),
            arat: g.arat().cloned(),
        }
    }

    pub fn into_instance(self) -> Result<GameInstance, Error> {
        let declared = Dims::new(self.states, self.actions_a, self.actions_b);
        let g = GameInstance::from_nested(
            &self.transition,
            &self.cost1,
            &self.cost2,
            self.theta,
            self.anchor_state,
        )?;
        if g.dims() != declared {
            return Err(Error::Dimension(format!(
                "declared {}x{}x{} but tables are {}x{}x{}",
                declared.states,
                declared.actions_a,
                declared.actions_b,
                g.n_states(),
                g.n_actions(Player::One),
                g.n_actions(Player::Two)
            )));
        }
        match self.arat {
            Some(arat) => g.with_arat(arat),
            None => Ok(g),
        }
    }
}

pub fn parse_instance(text: &str) -> Result<GameInstance, FormatError> {
    let file: InstanceFile = serde_json::from_str(text)?;
    Ok(file.into_instance()?)
}

pub fn instance_to_json(g: &GameInstance) -> String {
    to_json(&InstanceFile::from_instance(g))
}

/// SHA-256 of the canonical serialization, hex encoded.
pub fn instance_digest(g: &GameInstance) -> String {
    hex::encode(Sha256::digest(instance_to_json(g).as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub player: Option<Player>,
    pub rows: Vec<Vec<f64>>,
}

/// A strategy document, or the literal `uniform`.
#[derive(Debug, Clone, PartialEq)]
pub enum StrategySpec {
    Uniform,
    Rows(StrategyFile),
}

impl StrategySpec {
    pub fn parse(text: &str) -> Result<Self, FormatError> {
        let t = text.trim();
        if t == "uniform" || t == "\"uniform\"" {
            return Ok(StrategySpec::Uniform);
        }
        Ok(StrategySpec::Rows(serde_json::from_str(t)?))
    }

    /// Resolves against an instance for the given owner.
    pub fn resolve(self, g: &GameInstance, owner: Player) -> Result<StationaryStrategy, Error> {
        match self {
            StrategySpec::Uniform => Ok(StationaryStrategy::uniform(
                g.n_states(),
                g.n_actions(owner),
            )),
            StrategySpec::Rows(f) => {
                if let Some(p) = f.player {
                    if p != owner {
                        return Err(Error::InvalidParameter(format!(
                            "strategy file belongs to player {p}, expected player {owner}"
                        )));
                    }
                }
                let s = StationaryStrategy::new(f.rows)?;
                s.check_shape(
                    g.n_states(),
                    g.n_actions(owner),
                    &format!("player {owner} strategy"),
                )?;
                Ok(s)
            }
        }
    }
}

pub fn strategy_to_json(s: &StationaryStrategy, player: Player) -> String {
    to_json(&StrategyFile {
        player: Some(player),
        rows: s.rows().to_vec(),
    })
}

/// Pretty JSON with every float written as `d.dddddddddddddddde±x`.
#[derive(Default)]
pub struct Sig17<'a>(PrettyFormatter<'a>);

impl Formatter for Sig17<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }
    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17::default());
    value.serialize(&mut ser).expect("in-memory serialization");
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures;

    #[test]
    fn instance_round_trip() {
        for g in [fixtures::g2(), fixtures::g2().without_arat()] {
            let text = instance_to_json(&g);
            assert_eq!(parse_instance(&text).unwrap(), g);
        }
        assert_ne!(
            instance_digest(&fixtures::g2()),
            instance_digest(&fixtures::g2().without_arat())
        );
        assert_eq!(instance_digest(&fixtures::g2()).len(), 64);
    }

    #[test]
    fn floats_keep_seventeen_digits() {
        let x = 0.1 + 0.2;
        let s = to_json(&vec![x, 1.0, -2.5e-300]);
        assert!(s.contains("3.0000000000000004e-1"), "{s}");
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vec![x, 1.0, -2.5e-300]);
        assert_eq!(to_json(&f64::NAN), "null");
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = parse_instance("{\n  \"theta\": 1.0,\n  oops\n}").unwrap_err();
        match err {
            FormatError::Parse { line, column, .. } => assert_eq!((line, column), (3, 3)),
            e => panic!("{e}"),
        }
        let mut file = InstanceFile::from_instance(&fixtures::g2());
        file.transition[1][0][1][0] += 1e-6;
        let text = to_json(&file);
        assert!(matches!(
            parse_instance(&text),
            Err(FormatError::Invalid(Error::RowSum { .. }))
        ));
        file.transition[1][0][1][0] -= 1e-6;
        file.states = 3;
        assert!(matches!(
            parse_instance(&to_json(&file)),
            Err(FormatError::Invalid(Error::Dimension(_)))
        ));
    }

    #[test]
    fn strategy_specs() {
        let g = fixtures::g2();
        let u = StrategySpec::parse(" uniform\n")
            .unwrap()
            .resolve(&g, Player::Two)
            .unwrap();
        assert_eq!(u, StationaryStrategy::uniform(2, 2));
        let text = r#"{"player": 1, "rows": [[1, 0], [0.5, 0.5]]}"#;
        let s = StrategySpec::parse(text).unwrap();
        assert!(s.clone().resolve(&g, Player::Two).is_err());
        assert_eq!(s.resolve(&g, Player::One).unwrap().row(1), &[0.5, 0.5]);
        let short = StrategySpec::parse(r#"{"rows": [[1, 0]]}"#).unwrap();
        assert!(short.resolve(&g, Player::One).is_err());
    }
}
