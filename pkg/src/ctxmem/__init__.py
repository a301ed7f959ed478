"""ctxmem: a local-first context-memory engine.

Captures user context (text snippets with in-situ memos, screen
observations, chat exchanges), organizes it into an inspectable memory
tree, assembles ranked context for chat, filters redundant observations,
and runs a snippet-ablation preference probe. Served over HTTP; fully
testable offline with the deterministic mock analyzer.
"""

__version__ = "0.1.0"
