//! The three instruction templates and their rendering.
//!
//! Templates live in `templates/{gen,task,cot}.prompt` and are compiled in.
//! Each holds exactly one `{}` placeholder inside the trailing context fence;
//! rendering substitutes the document verbatim, with no escaping.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const PLACEHOLDER: &str = "{}";
const FENCE: &str = "```";

const GEN_TEMPLATE: &str = include_str!("../templates/gen.prompt");
const TASK_TEMPLATE: &str = include_str!("../templates/task.prompt");
const COT_TEMPLATE: &str = include_str!("../templates/cot.prompt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptKind {
    /// Short task description.
    Gen,
    /// Task description plus copy-from-context constraints.
    Task,
    /// Definitions and step-by-step identification instructions.
    Cot,
}

impl PromptKind {
    pub const ALL: [PromptKind; 3] = [PromptKind::Gen, PromptKind::Task, PromptKind::Cot];

    pub fn as_str(self) -> &'static str {
        match self {
            PromptKind::Gen => "gen",
            PromptKind::Task => "task",
            PromptKind::Cot => "cot",
        }
    }

    pub fn file_name(self) -> String {
        format!("{}.prompt", self.as_str())
    }
}

impl fmt::Display for PromptKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PromptKind {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gen" | "genprompt" => Ok(PromptKind::Gen),
            "task" | "taskprompt" => Ok(PromptKind::Task),
            "cot" | "cotprompt" => Ok(PromptKind::Cot),
            _ => Err(PromptError::UnknownKind(s.to_string())),
        }
    }
}

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("context is empty")]
    EmptyContext,
    #[error("unknown prompt kind `{0}` (expected gen, task or cot)")]
    UnknownKind(String),
    #[error("template {kind} must contain exactly one `{{}}` placeholder, found {found}")]
    BadTemplate { kind: PromptKind, found: usize },
    #[error("cannot read template {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub kind: PromptKind,
    pub text: String,
    pub context: String,
}

/// The compiled-in template for `kind`, placeholder included.
pub fn template_text(kind: PromptKind) -> &'static str {
    match kind {
        PromptKind::Gen => GEN_TEMPLATE,
        PromptKind::Task => TASK_TEMPLATE,
        PromptKind::Cot => COT_TEMPLATE,
    }
}

/// Renders the built-in template for `kind` around `context`.
pub fn render_prompt(kind: PromptKind, context: &str) -> Result<RenderedPrompt, PromptError> {
    render_template(kind, template_text(kind), context)
}

fn render_template(
    kind: PromptKind,
    template: &str,
    context: &str,
) -> Result<RenderedPrompt, PromptError> {
    if context.trim().is_empty() {
        return Err(PromptError::EmptyContext);
    }
    if context.contains(FENCE) {
        log::warn!("context contains a ``` fence; inserting it verbatim into the {kind} prompt");
    }
    let (head, tail) = template
        .split_once(PLACEHOLDER)
        .ok_or(PromptError::BadTemplate { kind, found: 0 })?;
    let mut text = String::with_capacity(template.len() + context.len());
    text.push_str(head);
    text.push_str(context);
    text.push_str(tail);
    Ok(RenderedPrompt {
        kind,
        text,
        context: context.to_string(),
    })
}

/// A set of templates, either the built-in ones or variants loaded from a
/// directory holding `gen.prompt`, `task.prompt` and `cot.prompt`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptLibrary {
    templates: [String; 3],
}

impl Default for PromptLibrary {
    fn default() -> Self {
        Self::builtin()
    }
}

impl PromptLibrary {
    pub fn builtin() -> Self {
        PromptLibrary {
            templates: PromptKind::ALL.map(|k| template_text(k).to_string()),
        }
    }

    pub fn from_dir(dir: &Path) -> Result<Self, PromptError> {
        let mut templates: [String; 3] = Default::default();
        for (slot, kind) in templates.iter_mut().zip(PromptKind::ALL) {
            let path = dir.join(kind.file_name());
            let text = std::fs::read_to_string(&path).map_err(|source| PromptError::Io {
                path: path.display().to_string(),
                source,
            })?;
            let found = text.matches(PLACEHOLDER).count();
            if found != 1 {
                return Err(PromptError::BadTemplate { kind, found });
            }
            *slot = text;
        }
        Ok(PromptLibrary { templates })
    }

    pub fn template(&self, kind: PromptKind) -> &str {
        &self.templates[kind as usize]
    }

    pub fn render(&self, kind: PromptKind, context: &str) -> Result<RenderedPrompt, PromptError> {
        render_template(kind, self.template(kind), context)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gen_layout() {
        let p = render_prompt(PromptKind::Gen, "X").unwrap();
        assert!(p.text.starts_with("### Instruction\n"));
        assert!(p
            .text
            .contains("\nTask: Identify the cause and effect from the given financial context.\n"));
        assert!(p.text.ends_with("### Context: ```X```\n### Response:"));
        assert_eq!(p.context, "X");
        assert_eq!(p.kind, PromptKind::Gen);
    }

    #[test]
    fn cot_has_definition() {
        let p = render_prompt(PromptKind::Cot, "X").unwrap();
        assert!(p.text.contains("One cause can have several effects."));
        assert!(p.text.contains("should be substring of the given financial document."));
    }

    #[test]
    fn task_constraints() {
        let t = template_text(PromptKind::Task);
        assert!(t.contains("Do not generate any token out of this context."));
        assert!(t.contains("(should be case sensitive)"));
        assert!(t.contains("2) Just copy from the context."));
    }

    #[test]
    fn templates_are_distinct_with_one_placeholder() {
        let [g, t, c] = PromptKind::ALL.map(template_text);
        assert_ne!(g, t);
        assert_ne!(t, c);
        assert_ne!(g, c);
        for k in PromptKind::ALL {
            assert_eq!(template_text(k).matches(PLACEHOLDER).count(), 1, "{k}");
            assert!(template_text(k).ends_with("### Response:"));
        }
    }

    #[test]
    fn deterministic_render() {
        let a = render_prompt(PromptKind::Task, "X").unwrap();
        let b = render_prompt(PromptKind::Task, "X").unwrap();
        assert_eq!(a.text.as_bytes(), b.text.as_bytes());
    }

    #[test]
    fn empty_context_rejected() {
        assert!(matches!(
            render_prompt(PromptKind::Cot, ""),
            Err(PromptError::EmptyContext)
        ));
        assert!(matches!(
            render_prompt(PromptKind::Cot, "  \n"),
            Err(PromptError::EmptyContext)
        ));
    }

    #[test]
    fn backtick_context_inserted_verbatim() {
        let ctx = "code ``` inside";
        let p = render_prompt(PromptKind::Gen, ctx).unwrap();
        assert!(p.text.contains("### Context: ```code ``` inside```"));
    }

    #[test]
    fn placeholder_in_context_is_not_reexpanded() {
        let p = render_prompt(PromptKind::Gen, "a {} b").unwrap();
        assert!(p.text.contains("```a {} b```"));
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("CoT".parse::<PromptKind>().unwrap(), PromptKind::Cot);
        assert_eq!("taskprompt".parse::<PromptKind>().unwrap(), PromptKind::Task);
        assert!("few-shot".parse::<PromptKind>().is_err());
    }

    #[test]
    fn library_from_dir() {
        let dir = tempfile::tempdir().unwrap();
        for k in PromptKind::ALL {
            std::fs::write(dir.path().join(k.file_name()), format!("{k}: {{}}")).unwrap();
        }
        let lib = PromptLibrary::from_dir(dir.path()).unwrap();
        assert_eq!(lib.render(PromptKind::Task, "z").unwrap().text, "task: z");

        std::fs::write(dir.path().join("cot.prompt"), "no slot").unwrap();
        assert!(matches!(
            PromptLibrary::from_dir(dir.path()),
            Err(PromptError::BadTemplate {
                kind: PromptKind::Cot,
                found: 0
            })
        ));
        assert_eq!(PromptLibrary::builtin().template(PromptKind::Gen), template_text(PromptKind::Gen));
    }
}
