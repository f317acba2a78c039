use serde::{Deserialize, Serialize};

use super::InstructionError;
use crate::lang::Lang;

pub const EOS_MARKER: &str = "</s>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn header(self) -> &'static str {
        match self {
            Self::System => "<|system|>",
            Self::User => "<|user|>",
            Self::Assistant => "<|assistant|>",
        }
    }
}

const ROLES: [Role; 3] = [Role::System, Role::User, Role::Assistant];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub role: Role,
    pub text: String,
}

impl Turn {
    pub fn new(role: Role, text: impl Into<String>) -> Self {
        Self {
            role,
            text: text.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatExample {
    pub turns: Vec<Turn>,
    pub source: String,
    pub lang: Lang,
}

impl ChatExample {
    pub fn new(turns: Vec<Turn>, source: impl Into<String>, lang: Lang) -> Self {
        Self {
            turns,
            source: source.into(),
            lang,
        }
    }

    /// Checks role order (optional system, then user/assistant pairs ending
    /// on an assistant turn) and that no text contains a reserved marker.
    pub fn validate(&self) -> Result<(), InstructionError> {
        validate_turns(&self.turns)
    }
}

pub(crate) fn validate_turns(turns: &[Turn]) -> Result<(), InstructionError> {
    let body = match turns.first() {
        Some(t) if t.role == Role::System => &turns[1..],
        _ => turns,
    };
    if body.is_empty() {
        return Err(InstructionError::RoleOrder(
            "no user/assistant turns".into(),
        ));
    }
    for (i, t) in body.iter().enumerate() {
        let expected = if i % 2 == 0 {
            Role::User
        } else {
            Role::Assistant
        };
        if t.role != expected {
            return Err(InstructionError::RoleOrder(format!(
                "turn {} is {:?}, expected {:?}",
                i + turns.len() - body.len(),
                t.role,
                expected
            )));
        }
    }
    if body.len() % 2 != 0 {
        return Err(InstructionError::RoleOrder(
            "last turn must be the assistant".into(),
        ));
    }
    for t in turns {
        if let Some(m) = ROLES
            .iter()
            .map(|r| r.header())
            .chain([EOS_MARKER])
            .find(|m| t.text.contains(m))
        {
            return Err(InstructionError::ReservedMarker(m.to_string()));
        }
    }
    Ok(())
}

/// Rendered training text and the half-open byte ranges the loss is
/// computed on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedExample {
    pub text: String,
    pub loss_spans: Vec<(usize, usize)>,
}

impl RenderedExample {
    /// Concatenation of the loss-span bytes.
    pub fn loss_text(&self) -> String {
        self.loss_spans
            .iter()
            .map(|&(s, e)| &self.text[s..e])
            .collect()
    }
}

/// Renders turns in the chat format. An assistant turn ends with `</s>`;
/// a final assistant turn with empty text is left open as a generation
/// prompt and gets no loss span.
pub fn render_turns(turns: &[Turn]) -> Result<RenderedExample, InstructionError> {
    render_impl(turns, true)
}

pub(crate) fn render_impl(
    turns: &[Turn],
    open_generation: bool,
) -> Result<RenderedExample, InstructionError> {
    validate_turns(turns)?;
    let mut text = String::new();
    let mut loss_spans = Vec::new();
    for (i, t) in turns.iter().enumerate() {
        if i > 0 {
            text.push('\n');
        }
        text.push_str(t.role.header());
        text.push('\n');
        if t.role == Role::Assistant {
            if open_generation && i + 1 == turns.len() && t.text.is_empty() {
                break;
            }
            let start = text.len();
            text.push_str(&t.text);
            text.push_str(EOS_MARKER);
            loss_spans.push((start, text.len()));
        } else {
            text.push_str(&t.text);
        }
    }
    Ok(RenderedExample { text, loss_spans })
}

pub fn render_chat(example: &ChatExample) -> Result<RenderedExample, InstructionError> {
    render_turns(&example.turns)
}

fn header_at(s: &str) -> Option<Role> {
    ROLES
        .into_iter()
        .find(|r| s.starts_with(r.header()) && s[r.header().len()..].starts_with('\n'))
}

fn next_header(s: &str) -> Option<usize> {
    ROLES.iter().filter_map(|r| s.find(r.header())).min()
}

/// Inverse of [`render_turns`].
pub fn parse_chat(text: &str) -> Result<Vec<Turn>, InstructionError> {
    let bad = |pos: usize, msg: &str| InstructionError::Parse {
        offset: pos,
        message: msg.into(),
    };
    let mut turns = Vec::new();
    let mut pos = 0;
    while pos < text.len() {
        let role = header_at(&text[pos..]).ok_or_else(|| bad(pos, "expected a role header"))?;
        pos += role.header().len() + 1;
        let rest = &text[pos..];
        match role {
            Role::Assistant => match rest.find(EOS_MARKER) {
                Some(e) => {
                    turns.push(Turn::new(role, &rest[..e]));
                    pos += e + EOS_MARKER.len();
                    if pos < text.len() {
                        if !text[pos..].starts_with('\n') {
                            return Err(bad(pos, "expected a newline after </s>"));
                        }
                        pos += 1;
                    }
                }
                None if rest.is_empty() => turns.push(Turn::new(role, "")),
                None => return Err(bad(pos, "assistant turn is missing </s>")),
            },
            _ => {
                let m = next_header(rest)
                    .ok_or_else(|| bad(pos, "turn is not followed by another role"))?;
                if m == 0 || !rest[..m].ends_with('\n') {
                    return Err(bad(pos + m, "role header must start a line"));
                }
                turns.push(Turn::new(role, &rest[..m - 1]));
                pos += m;
            }
        }
    }
    validate_turns(&turns)?;
    Ok(turns)
}
