//! Prompt texts, kept byte-for-byte including their typographic quirks.

pub const GFO_TASK: &str = include_str!("templates/gfo_task.txt");
pub const GFO_BASE: &str = include_str!("templates/gfo_base.txt");
pub const GFO_COT_BASE: &str = include_str!("templates/gfo_cot_base.txt");
pub const GFO_COT_STRUCT: &str = include_str!("templates/gfo_cot_struct.txt");
pub const GFO_IN_CONTEXT: &str = include_str!("templates/gfo_in_context.txt");

pub const SG_TASK_LAEO: &str = include_str!("templates/sg_task_laeo.txt");
pub const SG_TASK_LAH: &str = include_str!("templates/sg_task_lah.txt");
pub const SG_TASK_SA: &str = include_str!("templates/sg_task_sa.txt");
pub const SG_BASE: &str = include_str!("templates/sg_base.txt");
pub const SG_COT_BASE: &str = include_str!("templates/sg_cot_base.txt");
pub const SG_COT_STRUCT: &str = include_str!("templates/sg_cot_struct.txt");
pub const SG_IN_CONTEXT: &str = include_str!("templates/sg_in_context.txt");

pub const PROBE: &str = include_str!("templates/probe.txt");

pub const TASK_PLACEHOLDER: &str = "<Task description>";
pub const RELATION_PLACEHOLDER: &str = "<task>";
pub const BOX_PLACEHOLDER: &str = "<bounding box coordinates>";

pub const TWO_EXAMPLES: &str = "two examples:";
pub const ONE_EXAMPLE: &str = "one example:";

pub const GFO_CLOSING: &str = "Example provided. Now, analyze the following image.\n";
pub const SG_CLOSING: &str = "Examples provided. Now, analyze the following image.\n";
