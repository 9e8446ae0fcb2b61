"""calx — a workbench for calculational derivation of guarded-command
programs: annotated-program and formula kernels, a weakest-precondition
obligation generator, a tactic engine with a navigable derivation history,
finite-domain and SMT dischargers, and a session server with CLI and HTTP
front doors."""

__version__ = "0.1.0"
