use crate::tools::ToolRegistry;

use super::AgentError;

const PREAMBLE: &str = "You are a pan-academic literature reading assistant. You can rigorously answer users' academic questions. You have access to the following tools:\n\n";

const BLOB_INSTRUCTIONS: &str = "The way you use the tools is by specifying a Json blob.\n\
Specifically, this Json should have a `action` key (with the name of the tool to use) and a `action_input` key (with the input to the tool going here).\n\n";

const FORMAT_BLOCK: &str = "The $JSON_BLOB should only contain a SINGLE action, do NOT return a list of multiple actions.\n\
$JSON_BLOB should start with '''. Here is an example of a valid $JSON_BLOB:\n\
\n\
{\n\
\x20 action: $TOOL_NAME,\n\
\x20 action_input: $INPUT\n\
}\n\
\n\
ALWAYS use the following format:\n\
\n\
Thought: you should always think about what to do\n\
Action:\n\
$JSON_BLOB\n\
\n\
Observation: the result of the action... (this Thought/Action/Observation can repeat N times)\n\
Thought: I now know the final answer\n\
Final Answer: the final answer to the original input question\n";

/// Render the agent's system prompt for the registered tools, in
/// registration order.
pub fn build_system_prompt(tools: &ToolRegistry) -> Result<String, AgentError> {
    if tools.is_empty() {
        return Err(AgentError::NoTools);
    }
    let mut out = String::from(PREAMBLE);
    for spec in tools.specs() {
        out.push_str(&spec.name);
        out.push_str(":\n");
        out.push_str(&spec.render());
        out.push_str("\n\n");
    }
    out.push_str(BLOB_INSTRUCTIONS);
    out.push_str("The only values that should be in the \"action\" field are: ");
    out.push_str(&tools.names().join(", "));
    out.push_str("\n\n");
    out.push_str(FORMAT_BLOCK);
    Ok(out)
}
