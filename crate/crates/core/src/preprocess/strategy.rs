//! Strategy strings: `step>step>...>MODEL`, or `Non>MODEL` for no preprocessing.
//!
//! ```text
//! strategy := ("Non" | step (">" step)*) ">" model
//! step     := "SG" | "MSC" | "SNV" | "D1" | "D2" | "PCA(" int ")" | "WD(" int ")" | "GA(" int ")"
//! model    := "PLS" | "SEGPLS(" int ")" | "MLP" | "CNN" | "CNN-MLP" | "MLP-CNN"
//! ```
//!
//! Whitespace is ignored; tokens are case-sensitive. `SNVC` is accepted as a
//! spelling of `SNV`.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use super::PreprocessStep;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Pls,
    /// Best contiguous segment of the given length, then PLS on it.
    SegPls(usize),
    Mlp,
    Cnn,
    CnnMlp,
    MlpCnn,
}

impl ModelKind {
    pub fn is_network(&self) -> bool {
        matches!(self, ModelKind::Mlp | ModelKind::Cnn | ModelKind::CnnMlp | ModelKind::MlpCnn)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::Pls => f.write_str("PLS"),
            ModelKind::SegPls(len) => write!(f, "SEGPLS({len})"),
            ModelKind::Mlp => f.write_str("MLP"),
            ModelKind::Cnn => f.write_str("CNN"),
            ModelKind::CnnMlp => f.write_str("CNN-MLP"),
            ModelKind::MlpCnn => f.write_str("MLP-CNN"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Strategy {
    pub steps: Vec<PreprocessStep>,
    pub model: ModelKind,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.steps.is_empty() {
            f.write_str("Non")?;
        }
        for (i, s) in self.steps.iter().enumerate() {
            if i > 0 {
                f.write_str(">")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, ">{}", self.model)
    }
}

impl Serialize for Strategy {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_strategy(s)
    }
}

struct Token {
    text: String,
    offset: usize,
}

fn tokenize(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut offset = 0;
    for piece in text.split('>') {
        let lead = piece.len() - piece.trim_start().len();
        out.push(Token {
            text: piece.chars().filter(|c| !c.is_whitespace()).collect(),
            offset: offset + lead,
        });
        offset += piece.len() + 1;
    }
    out
}

fn error(tok: &Token, message: impl Into<String>) -> Error {
    Error::Strategy { position: tok.offset, token: tok.text.clone(), message: message.into() }
}

/// `NAME(int)` argument, or `None` when `text` is not of that shape.
fn call_arg(tok: &Token, name: &str) -> Option<Result<usize>> {
    let inner = tok.text.strip_prefix(name)?.strip_prefix('(')?;
    let Some(arg) = inner.strip_suffix(')') else {
        return Some(Err(error(tok, "missing closing parenthesis")));
    };
    Some(match arg.parse::<usize>() {
        Ok(0) => Err(error(tok, "argument must be at least 1")),
        Ok(v) => Ok(v),
        Err(_) => Err(error(tok, format!("malformed integer {arg:?}"))),
    })
}

fn parse_step(tok: &Token) -> Result<PreprocessStep> {
    match tok.text.as_str() {
        "SG" => return Ok(PreprocessStep::Sg),
        "MSC" => return Ok(PreprocessStep::Msc),
        "SNV" | "SNVC" => return Ok(PreprocessStep::Snv),
        "D1" => return Ok(PreprocessStep::Derivative1),
        "D2" => return Ok(PreprocessStep::Derivative2),
        _ => {}
    }
    if let Some(k) = call_arg(tok, "PCA") {
        return k.map(PreprocessStep::Pca);
    }
    if let Some(k) = call_arg(tok, "WD") {
        return k.map(PreprocessStep::Wavelet);
    }
    if let Some(k) = call_arg(tok, "GA") {
        return k.map(PreprocessStep::Ga);
    }
    if parse_model(tok).is_ok() {
        return Err(error(tok, "model must be the last token"));
    }
    Err(error(tok, "unknown preprocessing step"))
}

fn parse_model(tok: &Token) -> Result<ModelKind> {
    match tok.text.as_str() {
        "PLS" => return Ok(ModelKind::Pls),
        "MLP" => return Ok(ModelKind::Mlp),
        "CNN" => return Ok(ModelKind::Cnn),
        "CNN-MLP" => return Ok(ModelKind::CnnMlp),
        "MLP-CNN" => return Ok(ModelKind::MlpCnn),
        _ => {}
    }
    if let Some(len) = call_arg(tok, "SEGPLS") {
        return len.map(ModelKind::SegPls);
    }
    Err(error(tok, "expected a model (PLS, SEGPLS(n), MLP, CNN, CNN-MLP, MLP-CNN)"))
}

pub fn parse_strategy(text: &str) -> Result<Strategy> {
    let tokens = tokenize(text);
    let (last, head) = tokens.split_last().expect("split yields at least one piece");
    if head.is_empty() {
        return Err(error(last, "strategy needs preprocessing (or `Non`) followed by `>MODEL`"));
    }
    if last.text.is_empty() {
        return Err(error(last, "missing model after the final `>`"));
    }
    let model = parse_model(last)?;
    let steps = if head.len() == 1 && head[0].text == "Non" {
        Vec::new()
    } else {
        head.iter()
            .map(|t| {
                if t.text == "Non" {
                    Err(error(t, "`Non` must stand alone before the model"))
                } else if t.text.is_empty() {
                    Err(error(t, "empty step"))
                } else {
                    parse_step(t)
                }
            })
            .collect::<Result<_>>()?
    };
    Ok(Strategy { steps, model })
}
