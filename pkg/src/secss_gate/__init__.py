"""secss-gate: a policy-enforcing SQL gateway.

Accepts digitally signed SQL requests over HTTP/JSON, authorizes and
rewrites each statement against a publicly readable XML rule document,
executes the transformed statements against a relational backend, and
returns structured JSON responses.
"""

__version__ = "0.1.0"
