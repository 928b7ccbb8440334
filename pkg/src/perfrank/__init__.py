"""Performance-based ranking: ranking scores, axiom audits and τ consistency."""
