"""Top-level decision procedure: interleave the refutation search with model
enumeration and checking, re-verifying whichever side succeeds first."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

from . import entwined as E
from .background import Theory, theory_for
from .resolution import (BudgetExhausted, ProofTrace, Refuted, Saturator,
                         replay)
from .syntax import Problem, normalize_problem
from .typesys import ValidationReport, validate


@dataclass
class SolveConfig:
    resolution_slice: int = 2000
    model_slice: int = 50
    total_budget: int | None = None
    hint: str | None = None
    mode: str = "auto"  # auto | fo | initial
    workers: int = 1  # accepted for interface compatibility; checking is
    # fast enough single-threaded on the corpus

    def __post_init__(self) -> None:
        if self.resolution_slice < 1 or self.model_slice < 1:
            raise ValueError("slices must be at least 1")


@dataclass
class Verdict:
    kind: str  # SAT | UNSAT | UNKNOWN | INVALID
    model: E.EntwinedStructure | None = None
    trace: ProofTrace | None = None
    report: ValidationReport | None = None
    stats: dict = field(default_factory=dict)


def _candidates(p: Problem, theory: Theory,
                cfg: SolveConfig) -> Iterator[E.EntwinedStructure]:
    """Model-side candidate stream: hint first, then (for first-order
    problems) the converged least model, then fair enumeration."""
    if cfg.hint is not None:
        try:
            yield E.load_model(p, theory, cfg.hint)
        except (E.SchemaError, E.FrameInconsistency, OSError):
            pass  # a bad hint only costs the seed
    if cfg.mode == "fo":
        try:
            m = E.fo_least_model(p, theory)
            if m is not None:
                yield m
        except (ValueError, E.FrameTooLarge):
            pass
    try:
        yield from E.enumerate_structures(p, theory)
    except E.FrameTooLarge:
        return


def solve(p: Problem, cfg: SolveConfig | None = None) -> Verdict:
    cfg = cfg or SolveConfig()
    p = normalize_problem(p)
    report = validate(p)
    if not report.ok:
        return Verdict("INVALID", report=report)
    mode = cfg.mode
    if mode == "auto":
        mode = "fo" if report.mode == "FirstOrder" else "initial"
    cfg = SolveConfig(cfg.resolution_slice, cfg.model_slice, cfg.total_budget,
                      cfg.hint, mode, cfg.workers)

    theory = theory_for(p.theory_kind, p.dim, p.direction)
    sat = Saturator(p, theory)
    stream = _candidates(p, theory, cfg)
    models_seen = 0
    stream_done = False
    spent = 0

    while True:
        if cfg.total_budget is not None and spent >= cfg.total_budget:
            return Verdict("UNKNOWN", report=report,
                           stats={"resolutionSteps": sat.steps_used,
                                  "modelsChecked": models_seen})
        # resolution slice
        r = sat.run(cfg.resolution_slice)
        spent += cfg.resolution_slice
        if isinstance(r, Refuted):
            if not replay(r.trace, p, theory):
                raise AssertionError("refutation trace failed re-verification")
            return Verdict("UNSAT", trace=r.trace, report=report,
                           stats={"resolutionSteps": r.steps_used,
                                  "modelsChecked": models_seen})
        # model slice
        for _ in range(cfg.model_slice):
            m = next(stream, None)
            if m is None:
                stream_done = True
                break
            models_seen += 1
            spent += 1
            try:
                ok = E.check_model(m, p)
            except E.FrameTooLarge:
                ok = False
            if ok:
                return Verdict("SAT", model=m, report=report,
                               stats={"resolutionSteps": sat.steps_used,
                                      "modelsChecked": models_seen})
        if stream_done and isinstance(r, BudgetExhausted) and \
                not sat._frontier:
            # both searches exhausted without an answer
            return Verdict("UNKNOWN", report=report,
                           stats={"resolutionSteps": sat.steps_used,
                                  "modelsChecked": models_seen})


def verify(p: Problem, witness: dict) -> tuple[bool, str]:
    """Check a serialized model against a problem; (ok, diagnostic)."""
    p = normalize_problem(p)
    report = validate(p)
    if not report.ok:
        return False, "problem rejected by validation: " + "; ".join(
            report.errors)
    theory = theory_for(p.theory_kind, p.dim, p.direction)
    try:
        m = E.deserialize_model(p, theory, witness)
    except (E.SchemaError, E.FrameInconsistency) as e:
        return False, f"{type(e).__name__}: {e}"
    if not E.check_model(m, p):
        return False, "witness does not satisfy the clauses"
    return True, "ok"
