use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::instructions::{Role, Turn};

pub const MAX_USER_TOKENS: u32 = 50;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConversationFlags {
    #[serde(default)]
    pub redacted: bool,
    #[serde(default)]
    pub moderation_flagged: bool,
}

/// A crowd-sourced chat log with per-user-turn token counts from an external
/// tokenizer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conversation {
    pub id: String,
    pub lang: String,
    pub turns: Vec<Turn>,
    #[serde(default)]
    pub flags: ConversationFlags,
    #[serde(default)]
    pub user_token_counts: Option<Vec<u32>>,
}

impl Conversation {
    /// Exactly two user prompts, each answered: user, assistant, user,
    /// assistant.
    pub fn is_two_turn(&self) -> bool {
        let roles: Vec<Role> = self.turns.iter().map(|t| t.role).collect();
        roles == [Role::User, Role::Assistant, Role::User, Role::Assistant]
    }

    pub fn user_prompts(&self) -> impl Iterator<Item = &str> {
        self.turns
            .iter()
            .filter(|t| t.role == Role::User)
            .map(|t| t.text.as_str())
    }
}

/// Keeps English two-turn conversations that are neither flagged nor
/// redacted and whose user prompts are all at most `max_user_tokens` long.
pub fn filter_candidates(
    conversations: &[Conversation],
    max_user_tokens: u32,
) -> Result<Vec<Conversation>, BenchError> {
    let mut out = Vec::new();
    for c in conversations {
        let users = c.turns.iter().filter(|t| t.role == Role::User).count();
        let counts = c
            .user_token_counts
            .as_ref()
            .filter(|v| v.len() == users)
            .ok_or_else(|| BenchError::MissingTokenCounts(c.id.clone()))?;
        if c.lang == "en"
            && c.is_two_turn()
            && !c.flags.redacted
            && !c.flags.moderation_flagged
            && counts.iter().all(|&n| n <= max_user_tokens)
        {
            out.push(c.clone());
        }
    }
    Ok(out)
}
