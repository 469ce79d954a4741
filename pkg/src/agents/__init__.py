"""Config-driven runtime for SOP-controlled language agents.

A JSON config declares agents, a state graph (the standard operating
procedure), prompt/tool components, and an LLM profile. The runtime walks
the graph: a controller decides state transitions and speaker order, agents
take turns acting with tools and memory, and every step lands in an
append-only event log that replays deterministically under the mock
provider.
"""

__version__ = "0.1.0"
