use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    input_len, AuxTarget, Field, ForgeConfig, ForgeError, PromptTemplate, Segment, Stem, Strategy, Target, Task,
    TemplateSegment, TemplateSet,
};
use crate::corpus::McqItem;
use crate::taxonomy::QuestionClass;

const OPTION_LABELS: [&str; 4] = ["A", "B", "C", "D"];

/// Note attached to multi-choice QA stems built for non-templated items.
pub const NOTE_MCQA_NON_TEMPLATED: &str = "mcqa_on_non_templated";

fn check_template(
    template: &PromptTemplate,
    task: Task,
    required: &[Field],
    forbidden: &[Field],
) -> Result<(), ForgeError> {
    if template.task != task {
        return Err(ForgeError::WrongTask {
            template: template.id.clone(),
            expected: task,
            found: template.task,
        });
    }
    template.validate()?;
    if let Some(&field) = required.iter().find(|f| !template.has_slot(**f)) {
        return Err(ForgeError::MissingSlot {
            template: template.id.clone(),
            field,
        });
    }
    if let Some(&field) = forbidden.iter().find(|f| template.has_slot(**f)) {
        return Err(ForgeError::ForbiddenSlot {
            template: template.id.clone(),
            field,
        });
    }
    Ok(())
}

fn field_text(item: &McqItem, field: Field) -> &str {
    match field {
        Field::Context => &item.context,
        Field::Question => &item.question,
        Field::Answer => &item.answer,
        Field::Options | Field::PrevDistractors => "",
    }
}

fn check_nonempty(item: &McqItem, fields: &[Field]) -> Result<(), ForgeError> {
    for &field in fields {
        if field_text(item, field).trim().is_empty() {
            return Err(ForgeError::EmptyField {
                item: item.id.clone(),
                field,
            });
        }
    }
    Ok(())
}

fn check_reserved<'a>(
    item: &McqItem,
    reserved: &str,
    texts: impl IntoIterator<Item = &'a str>,
) -> Result<(), ForgeError> {
    if texts.into_iter().any(|t| t.contains(reserved)) {
        return Err(ForgeError::ReservedDelimiter {
            item: item.id.clone(),
            delimiter: reserved.to_string(),
        });
    }
    Ok(())
}

fn render_segments(item: &McqItem, template: &PromptTemplate, cfg: &ForgeConfig, options: Option<&str>) -> Vec<Segment> {
    template
        .segments
        .iter()
        .map(|seg| match seg {
            TemplateSegment::Literal(text) => Segment::Literal { text: text.clone() },
            TemplateSegment::Sep => Segment::Sep,
            TemplateSegment::Mask => Segment::Mask { mask: cfg.mask_kind },
            TemplateSegment::Slot(Field::Options) => Segment::field(Field::Options, options.unwrap_or_default()),
            TemplateSegment::Slot(f) => Segment::field(*f, field_text(item, *f)),
        })
        .collect()
}

/// Drops characters from the start of the context until the stem fits.
/// Nothing else is ever truncated.
fn truncate_context(item: &McqItem, segments: &mut [Segment], limit: usize) -> Result<(), ForgeError> {
    let total = input_len(segments);
    if total <= limit {
        return Ok(());
    }
    let mut excess = total - limit;
    for seg in segments.iter_mut() {
        if let Segment::Field {
            field: Field::Context,
            text,
        } = seg
        {
            let n = text.chars().count();
            let cut = excess.min(n);
            *text = text.chars().skip(cut).collect();
            excess -= cut;
            if excess == 0 {
                return Ok(());
            }
        }
    }
    Err(ForgeError::TooLong {
        item: item.id.clone(),
        needed: limit + excess,
        limit,
    })
}

fn finish(
    item: &McqItem,
    template: &PromptTemplate,
    cfg: &ForgeConfig,
    strategy: Strategy,
    task: Task,
    options: Option<&str>,
    target: Target,
) -> Result<Stem, ForgeError> {
    let mut segments = render_segments(item, template, cfg, options);
    truncate_context(item, &mut segments, cfg.max_input_len)?;
    Ok(Stem {
        item_id: item.id.clone(),
        strategy,
        task,
        segments,
        target,
        permutation_id: None,
        notes: Vec::new(),
    })
}

/// Distractor-generation stem for any strategy; target is the distractor
/// triple in canonical order.
pub fn build_dg(
    item: &McqItem,
    strategy: Strategy,
    template: &PromptTemplate,
    cfg: &ForgeConfig,
) -> Result<Stem, ForgeError> {
    let (required, forbidden): (&[Field], &[Field]) = match strategy {
        Strategy::Ft1 => (&[Field::Context, Field::Question], &[Field::Answer, Field::Options]),
        Strategy::Ft2 => (&[Field::Context, Field::Answer], &[Field::Question, Field::Options]),
        Strategy::Ft3 => (&[Field::Context, Field::Question, Field::Answer], &[Field::Options]),
    };
    check_template(template, Task::Dg, required, forbidden)?;
    check_nonempty(item, required)?;
    let target = Target::List(item.distractors.to_vec());
    finish(item, template, cfg, strategy, Task::Dg, None, target)
}

/// Question-aware stem: `C ⊗ (Q, P, [MASK])`.
pub fn build_ft1(item: &McqItem, template: &PromptTemplate, cfg: &ForgeConfig) -> Result<Stem, ForgeError> {
    build_dg(item, Strategy::Ft1, template, cfg)
}

/// Answer-aware stem: `C ⊗ (A, P, [MASK])`.
pub fn build_ft2(item: &McqItem, template: &PromptTemplate, cfg: &ForgeConfig) -> Result<Stem, ForgeError> {
    build_dg(item, Strategy::Ft2, template, cfg)
}

/// Question-enhanced answer-aware stem over C, Q, A and P.
pub fn build_ft3(item: &McqItem, template: &PromptTemplate, cfg: &ForgeConfig) -> Result<Stem, ForgeError> {
    build_dg(item, Strategy::Ft3, template, cfg)
}

fn aux_target(item: &McqItem, which: AuxTarget, cfg: &ForgeConfig) -> Result<Target, ForgeError> {
    let reserved = cfg.cot_scheme.reserved.as_str();
    Ok(match which {
        AuxTarget::Answer => Target::Text(item.answer.clone()),
        AuxTarget::Distractors => {
            check_reserved(item, reserved, item.distractors.iter().map(String::as_str))?;
            Target::Text(cfg.cot_scheme.render_distractors(&item.distractors))
        }
        AuxTarget::AnswerThenDistractors => {
            check_reserved(item, reserved, item.options())?;
            Target::Text(cfg.cot_scheme.render(&item.answer, &item.distractors))
        }
    })
}

/// Hard chain-of-thought stem: the model sees C and Q (never A) and is
/// trained to state the answer before the distractors.
pub fn build_hard_cot(
    item: &McqItem,
    class: &QuestionClass,
    template: &PromptTemplate,
    strategy: Strategy,
    cfg: &ForgeConfig,
) -> Result<Stem, ForgeError> {
    if class.is_templated() {
        return Err(ForgeError::TemplatedCot { item: item.id.clone() });
    }
    let required = [Field::Context, Field::Question];
    check_template(template, Task::Cot, &required, &[Field::Answer, Field::Options])?;
    check_nonempty(item, &required)?;
    let target = aux_target(item, cfg.cot_target, cfg)?;
    finish(item, template, cfg, strategy, Task::Cot, None, target)
}

/// Plain question-answering stem `C [SEP] Q [SEP] P_qa [MASK]`.
pub fn build_qa(
    item: &McqItem,
    template: Option<&PromptTemplate>,
    strategy: Strategy,
    cfg: &ForgeConfig,
) -> Result<Stem, ForgeError> {
    let template = template.ok_or(ForgeError::MissingTemplate("qa"))?;
    let required = [Field::Context, Field::Question];
    check_template(template, Task::Qa, &required, &[Field::Answer, Field::Options])?;
    check_nonempty(item, &required)?;
    let target = aux_target(item, cfg.qa_target, cfg)?;
    finish(item, template, cfg, strategy, Task::Qa, None, target)
}

fn fnv1a(text: &str) -> u64 {
    text.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3))
}

/// Multi-choice QA stem: answer and distractors shuffled under
/// `option_order_seed` (mixed with the item id), labeled A–D; the target is
/// the answer's label. Non-templated items are accepted and noted.
pub fn build_mcqa(
    item: &McqItem,
    class: &QuestionClass,
    template: &PromptTemplate,
    option_order_seed: u64,
    strategy: Strategy,
    cfg: &ForgeConfig,
) -> Result<Stem, ForgeError> {
    let required = [Field::Context, Field::Question, Field::Options];
    check_template(template, Task::Mcqa, &required, &[Field::Answer])?;
    check_nonempty(item, &[Field::Context, Field::Question])?;

    let mut order = [0usize, 1, 2, 3];
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(option_order_seed ^ fnv1a(&item.id)));
    let options = item.options();
    let rendered = order
        .iter()
        .zip(OPTION_LABELS)
        .map(|(&i, label)| format!("{label}. {}", options[i]))
        .collect::<Vec<_>>()
        .join(" ");
    let answer_slot = order.iter().position(|&i| i == 0).expect("answer is one of the options");
    let target = Target::Text(OPTION_LABELS[answer_slot].to_string());

    let mut stem = finish(item, template, cfg, strategy, Task::Mcqa, Some(&rendered), target)?;
    if !class.is_templated() {
        stem.notes.push(NOTE_MCQA_NON_TEMPLATED.to_string());
    }
    Ok(stem)
}

/// Templates plus configuration; the convenient entry point for batch use.
#[derive(Clone, Debug)]
pub struct Forge {
    pub templates: TemplateSet,
    pub config: ForgeConfig,
}

impl Default for Forge {
    fn default() -> Self {
        Self {
            templates: TemplateSet::defaults(),
            config: ForgeConfig::default(),
        }
    }
}

impl Forge {
    pub fn dg(&self, item: &McqItem, strategy: Strategy) -> Result<Stem, ForgeError> {
        build_dg(item, strategy, self.templates.strategy(strategy)?, &self.config)
    }

    pub fn qa(&self, item: &McqItem, strategy: Strategy) -> Result<Stem, ForgeError> {
        build_qa(item, self.templates.qa.as_ref(), strategy, &self.config)
    }

    pub fn hard_cot(&self, item: &McqItem, class: &QuestionClass, strategy: Strategy) -> Result<Stem, ForgeError> {
        build_hard_cot(item, class, self.templates.task(Task::Cot)?, strategy, &self.config)
    }

    pub fn mcqa(&self, item: &McqItem, class: &QuestionClass, strategy: Strategy) -> Result<Stem, ForgeError> {
        build_mcqa(
            item,
            class,
            self.templates.task(Task::Mcqa)?,
            self.config.mcqa_seed,
            strategy,
            &self.config,
        )
    }
}

/// Stems for one item: templated questions get `{DG, MCQA}`,
/// non-templated ones `{DG, QA, CoT}`.
pub fn route(item: &McqItem, class: &QuestionClass, strategy: Strategy, forge: &Forge) -> Result<Vec<Stem>, ForgeError> {
    let dg = forge.dg(item, strategy)?;
    if class.is_templated() {
        Ok(vec![dg, forge.mcqa(item, class, strategy)?])
    } else {
        Ok(vec![dg, forge.qa(item, strategy)?, forge.hard_cot(item, class, strategy)?])
    }
}
